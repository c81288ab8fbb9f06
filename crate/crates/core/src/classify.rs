//! Stability classes of closed characteristics and the checks on index
//! tables, actions and pinching that a surface report is built from.

use alloc::{format, string::String, vec, vec::Vec};
use core::f64::consts::PI;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::angle::UnitAngle;
use crate::error::{Error, Result};
use crate::index::IterateIndex;
use crate::linalg::eigenvalues;
use crate::spectral::{classify_normal_form, unit_spectrum_with, SpectralTolerances};
use crate::surface::Pinching;
use crate::symplectic::SymplecticMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityClass {
    StrictlyElliptic,
    Elliptic,
    Hyperbolic,
    NonHyperbolic,
    DegenerateOther,
}

impl StabilityClass {
    pub fn is_elliptic(self) -> bool {
        matches!(self, Self::StrictlyElliptic | Self::Elliptic)
    }

    pub fn is_hyperbolic(self) -> bool {
        self == Self::Hyperbolic
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetSummary {
    pub class: StabilityClass,
    pub elliptic_height: usize,
    /// Algebraic multiplicity of the multiplier 1.
    pub multiplicity_one: usize,
    pub non_degenerate: bool,
    /// Every unit multiplier other than 1 has a definite Krein form.
    pub krein_definite: bool,
    /// Angles of the rotation blocks in the normal form, when it exists.
    pub rotations: Option<Vec<f64>>,
    /// All multipliers as `(re, im)`.
    pub multipliers: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

pub fn floquet_classify(m: &SymplecticMatrix) -> Result<FloquetSummary> {
    floquet_classify_with(m, &SpectralTolerances::default())
}

pub fn floquet_classify_with(m: &SymplecticMatrix, tol: &SpectralTolerances) -> Result<FloquetSummary> {
    let n = m.n();
    let spec = unit_spectrum_with(m, tol)?;
    let e = spec.elliptic_height();
    let mult_one = spec.nu_at(UnitAngle::ONE, 1e-12);
    let krein_definite = spec
        .entries
        .iter()
        .filter(|u| !u.angle.is_one())
        .all(|u| u.krein.0 == 0 || u.krein.1 == 0);
    let class = if e == 2 * n {
        if krein_definite { StabilityClass::StrictlyElliptic } else { StabilityClass::Elliptic }
    } else if e == 2 && mult_one == 2 {
        StabilityClass::Hyperbolic
    } else if mult_one >= 2 || e == 2 {
        StabilityClass::NonHyperbolic
    } else {
        StabilityClass::DegenerateOther
    };
    let mut warnings = spec.warnings.clone();
    let rotations = match classify_normal_form(m, tol) {
        Ok(d) => Some(d.rotations),
        Err(err) => {
            warnings.push(format!("no normal form: {err}"));
            None
        }
    };
    let multipliers = eigenvalues(m.matrix()).iter().map(|z| (z.re, z.im)).collect();
    Ok(FloquetSummary {
        class,
        elliptic_height: e,
        multiplicity_one: mult_one,
        non_degenerate: mult_one == 2,
        krein_definite,
        rotations,
        multipliers,
        warnings,
    })
}

/// Which equality case of the second-iterate bounds holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondIterateCase {
    /// `i(y,2) - 2 i(y,1) = n`: rotations in `(pi, 2 pi)`.
    I,
    /// `i(y,2) + nu(y,2) - 2(i(y,1) + nu(y,1)) = 1 - n`: rotations in `(0, pi)`.
    Ii,
    Both,
    None,
}

/// Checks `i2 - 2 i1 <= n` and `i2 + nu2 - 2(i1 + nu1) >= 1 - n` for the path
/// indices of the first two iterates and reports the equality case.
pub fn second_iterate_case(i1: i64, nu1: usize, i2: i64, nu2: usize, n: usize) -> Result<SecondIterateCase> {
    let n = n as i64;
    let upper = i2 - 2 * i1;
    let lower = i2 + nu2 as i64 - 2 * (i1 + nu1 as i64);
    if upper > n || lower < 1 - n {
        return Err(Error::IterationBoundViolation(format!(
            "i2 - 2 i1 = {upper} (at most {n}), i2 + nu2 - 2(i1 + nu1) = {lower} (at least {})",
            1 - n
        )));
    }
    Ok(match (upper == n, lower == 1 - n) {
        (true, true) => SecondIterateCase::Both,
        (true, false) => SecondIterateCase::I,
        (false, true) => SecondIterateCase::Ii,
        (false, false) => SecondIterateCase::None,
    })
}

/// `(i(y^m), nu(y^m))` of a hyperbolic orbit with `i(y) = i1`.
pub fn hyperbolic_index_iterates(i1: i64, n: usize, m: usize) -> (i64, usize) {
    let (n, m) = (n as i64, m as i64);
    (m * (i1 + n + 1) - n - 1, 1)
}

/// `([a], E(a), E(a) - [a])` with `E(a)` the least integer `>= a`.
pub fn floor_ceil_phi(a: f64) -> (i64, i64, i64) {
    let f = Float::floor(a) as i64;
    let e = Float::ceil(a) as i64;
    (f, e, e - f)
}

/// Integer floor of `p / q` for `q > 0`.
fn floor_div(p: i64, q: i64) -> i64 {
    p.div_euclid(q)
}

fn ceil_div(p: i64, q: i64) -> i64 {
    -(-p).div_euclid(q)
}

/// Lower bound on the number of non-hyperbolic orbits among the first `n`.
pub fn non_hyperbolic_bound(n: usize) -> usize {
    2 * ((n + 2) / 4)
}

/// Slots `i` (1-based) a hyperbolic orbit may occupy:
/// `E((n-1)/4) <= i - 1 <= [3(n-1)/4]`.
pub fn hyperbolic_slot_range(n: usize) -> (usize, usize) {
    let m = n as i64 - 1;
    ((ceil_div(m, 4) + 1) as usize, (floor_div(3 * m, 4) + 1) as usize)
}

/// `n - [3(n-1)/4] + E((n-1)/4) - 1`, which should equal `2[(n+2)/4]`.
pub fn slot_count_complement(n: usize) -> i64 {
    let m = n as i64 - 1;
    n as i64 - floor_div(3 * m, 4) + ceil_div(m, 4) - 1
}

/// Galerkin count for one iterate, `(index, nullity)` of the discretized form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GalerkinRow {
    pub m: usize,
    pub index: usize,
    pub nullity: usize,
}

/// What the checks need to know about one orbit.
#[derive(Clone, Debug)]
pub struct OrbitFacts {
    pub action: f64,
    /// Path indices `(i(y, m), nu(y, m))` for `m = 1..`.
    pub table: Vec<IterateIndex>,
    pub floquet: FloquetSummary,
    pub galerkin: Vec<GalerkinRow>,
}

impl OrbitFacts {
    /// `(i(y^m), nu(y^m)) = (i(y, m) - n, nu(y, m))`.
    pub fn iterate(&self, m: usize, n: usize) -> Option<(i64, usize)> {
        self.table.iter().find(|r| r.m == m).map(|r| (r.i - n as i64, r.nu))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// A failing binding check makes the whole verification fail.
    pub binding: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub pinch_ratio: f64,
    pub pinching_gate: bool,
    pub strictly_elliptic_count: usize,
    pub non_hyperbolic_count: usize,
    pub non_hyperbolic_required: usize,
    pub hyperbolic_count: usize,
    pub second_iterate_cases: Vec<Option<SecondIterateCase>>,
    pub checks: Vec<Check>,
}

impl Verdicts {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.binding)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const PINCH_LIMIT: f64 = 1.224744871391589;

fn push(checks: &mut Vec<Check>, name: &str, passed: bool, binding: bool, detail: String) {
    checks.push(Check { name: name.into(), passed, binding, detail });
}

/// Index comparison with constant forms, for `y^m` of action `a`:
/// `a > k pi R^2` forces `i >= 2nk`, `a < k pi r^2` forces `i + nu <= 2n(k-1) - 1`.
pub fn comparison_bounds(a: f64, i: i64, nu: usize, n: usize, pinching: &Pinching) -> core::result::Result<(), String> {
    let n = n as i64;
    let big = PI * pinching.big_r * pinching.big_r;
    let small = PI * pinching.r * pinching.r;
    let slack = 1.0 + 1e-9;
    let k_low = Float::ceil(a / (big * slack)) as i64 - 1;
    if k_low >= 1 && i < 2 * n * k_low {
        return Err(format!("action {a:.9} > {k_low} pi R^2 but index {i} < {}", 2 * n * k_low));
    }
    let k_high = Float::floor(a * slack / small) as i64 + 1;
    if i + nu as i64 > 2 * n * (k_high - 1) - 1 {
        return Err(format!(
            "action {a:.9} < {k_high} pi r^2 but i + nu = {} > {}",
            i + nu as i64,
            2 * n * (k_high - 1) - 1
        ));
    }
    Ok(())
}

fn rotations_in(rot: &Option<Vec<f64>>, lo: f64, hi: f64) -> bool {
    rot.as_ref().is_some_and(|r| r.iter().all(|t| *t > lo && *t < hi))
}

/// Orders of slots to try for the interlacing check: orbits with equal
/// action may be matched to either slot.
fn tie_groups(orbits: &[OrbitFacts], count: usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in 0..count {
        match groups.last_mut() {
            Some(g) if (orbits[g[0]].action - orbits[k].action).abs() <= 1e-9 * orbits[k].action => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    groups
}

fn interlaces(f: &OrbitFacts, slot: usize, n: usize) -> bool {
    match f.iterate(1, n) {
        Some((i, nu)) => {
            let target = 2 * (slot as i64 - 1);
            i <= target && target <= i + nu as i64 - 1
        }
        None => false,
    }
}

/// Runs every check on the action-sorted orbits. Only the first `n` orbits
/// stand in for the critical-value family; comparison and iteration bounds
/// are checked on all of them.
pub fn verify_theorems(n: usize, pinching: &Pinching, orbits: &[OrbitFacts]) -> Verdicts {
    let mut checks = Vec::new();
    let ratio = pinching.big_r / pinching.r;
    let gate = ratio < PINCH_LIMIT;
    push(
        &mut checks,
        "pinching_gate",
        gate,
        false,
        format!("R/r = {ratio:.12} against sqrt(3/2) = {PINCH_LIMIT:.12}"),
    );
    let count = orbits.len().min(n);
    push(
        &mut checks,
        "orbit_count",
        orbits.len() >= n,
        false,
        format!("{} orbits found, n = {n}", orbits.len()),
    );

    let (lo, hi) = (PI * pinching.r * pinching.r, PI * pinching.big_r * pinching.big_r);
    let tol = 1e-8 * hi;
    let outside: Vec<String> = orbits[..count]
        .iter()
        .enumerate()
        .filter(|(_, o)| o.action < lo - tol || o.action > hi + tol)
        .map(|(k, o)| format!("orbit {} action {:.9}", k + 1, o.action))
        .collect();
    push(
        &mut checks,
        "action_window",
        outside.is_empty(),
        gate,
        if outside.is_empty() { format!("all actions in [{lo:.9}, {hi:.9}]") } else { outside.join("; ") },
    );

    let mut failures = Vec::new();
    let mut ambiguous = false;
    let mut slot = 1;
    for group in tie_groups(orbits, count) {
        if group.len() > 1 {
            ambiguous = true;
        }
        // every orbit of a tie group must fit at least one slot of the group
        let slots: Vec<usize> = (slot..slot + group.len()).collect();
        for &k in &group {
            if !slots.iter().any(|s| interlaces(&orbits[k], *s, n)) {
                failures.push(format!("orbit {} fits none of slots {slots:?}", k + 1));
            }
        }
        slot += group.len();
    }
    let mut detail = if failures.is_empty() { String::from("i(y_i) <= 2(i-1) <= i(y_i) + nu(y_i) - 1") } else { failures.join("; ") };
    if ambiguous {
        detail.push_str("; equal actions, both assignments tried");
    }
    push(&mut checks, "interlacing", failures.is_empty(), gate, detail);

    let mut failures = Vec::new();
    for (k, o) in orbits[..count].iter().enumerate() {
        match o.iterate(2, n) {
            Some((i2, nu2)) => {
                if i2 < 2 * n as i64 {
                    failures.push(format!("orbit {}: i(y^2) = {i2} < {}", k + 1, 2 * n));
                }
                if i2 + nu2 as i64 > 4 * n as i64 - 1 {
                    failures.push(format!("orbit {}: i(y^2) + nu(y^2) = {} > {}", k + 1, i2 + nu2 as i64, 4 * n - 1));
                }
            }
            None => failures.push(format!("orbit {}: no second iterate", k + 1)),
        }
    }
    push(
        &mut checks,
        "second_iterate_bounds",
        failures.is_empty(),
        gate,
        if failures.is_empty() { format!("2n <= i(y^2) and i(y^2) + nu(y^2) <= 4n - 1 for {count} orbits") } else { failures.join("; ") },
    );

    let first = &orbits[..count];
    let strict = first.iter().filter(|o| o.floquet.class == StabilityClass::StrictlyElliptic).count();
    let need_strict = n.min(2);
    push(
        &mut checks,
        "strictly_elliptic_pair",
        strict >= need_strict,
        gate,
        format!("{strict} strictly elliptic, need {need_strict}"),
    );
    let hyperbolic = first.iter().filter(|o| o.floquet.class.is_hyperbolic()).count();
    let non_hyp = count - hyperbolic;
    let need = non_hyperbolic_bound(n);
    push(
        &mut checks,
        "non_hyperbolic_count",
        non_hyp >= need,
        gate,
        format!("{non_hyp} non-hyperbolic, need 2[(n+2)/4] = {need}"),
    );
    let (s_lo, s_hi) = hyperbolic_slot_range(n);
    let bad: Vec<String> = first
        .iter()
        .enumerate()
        .filter(|(k, o)| o.floquet.class.is_hyperbolic() && (k + 1 < s_lo || k + 1 > s_hi))
        .map(|(k, _)| format!("hyperbolic orbit in slot {}", k + 1))
        .collect();
    push(
        &mut checks,
        "hyperbolic_slots",
        bad.is_empty(),
        gate,
        match (bad.is_empty(), s_lo <= s_hi) {
            (true, true) => format!("{hyperbolic} hyperbolic, allowed slots {s_lo}..={s_hi}"),
            (true, false) => format!("{hyperbolic} hyperbolic, no slot allowed"),
            (false, _) => bad.join("; "),
        },
    );

    let mut failures = Vec::new();
    for (k, o) in orbits.iter().enumerate() {
        for row in &o.table {
            let (i, nu) = (row.i - n as i64, row.nu);
            if let Err(e) = comparison_bounds(o.action * row.m as f64, i, nu, n, pinching) {
                failures.push(format!("orbit {} m = {}: {e}", k + 1, row.m));
            }
        }
    }
    push(
        &mut checks,
        "comparison_bounds",
        failures.is_empty(),
        true,
        if failures.is_empty() { String::from("index bounds from constant comparison forms hold on all iterates") } else { failures.join("; ") },
    );

    let mut failures = Vec::new();
    let mut cases = Vec::new();
    for (k, o) in orbits.iter().enumerate() {
        let (Some(r1), Some(r2)) = (o.table.iter().find(|r| r.m == 1), o.table.iter().find(|r| r.m == 2)) else {
            cases.push(None);
            continue;
        };
        match second_iterate_case(r1.i, r1.nu, r2.i, r2.nu, n) {
            Ok(c) => {
                let strict = o.floquet.class == StabilityClass::StrictlyElliptic;
                let rot = &o.floquet.rotations;
                let consistent = match c {
                    SecondIterateCase::I => strict && rotations_in(rot, PI, 2.0 * PI),
                    SecondIterateCase::Ii => strict && rotations_in(rot, 0.0, PI),
                    SecondIterateCase::Both => strict && rot.as_ref().is_some_and(|r| r.is_empty()),
                    SecondIterateCase::None => true,
                };
                if !consistent {
                    failures.push(format!("orbit {}: case {c:?} but class {:?}, rotations {rot:?}", k + 1, o.floquet.class));
                }
                cases.push(Some(c));
            }
            Err(e) => {
                failures.push(format!("orbit {}: {e}", k + 1));
                cases.push(None);
            }
        }
    }
    push(
        &mut checks,
        "iteration_bounds",
        failures.is_empty(),
        true,
        if failures.is_empty() { String::from("second-iterate bounds hold and equality cases match the Floquet data") } else { failures.join("; ") },
    );

    let mut failures = Vec::new();
    let mut compared = 0;
    for (k, o) in orbits.iter().enumerate() {
        for g in &o.galerkin {
            if let Some(row) = o.table.iter().find(|r| r.m == g.m) {
                compared += 1;
                let expect = (row.i - n as i64, row.nu + 1);
                if (g.index as i64, g.nullity) != expect {
                    failures.push(format!(
                        "orbit {} m = {}: Galerkin ({}, {}) vs path ({}, {})",
                        k + 1,
                        g.m,
                        g.index,
                        g.nullity,
                        expect.0,
                        expect.1
                    ));
                }
            }
        }
    }
    push(
        &mut checks,
        "oracle_equivalence",
        failures.is_empty(),
        true,
        if failures.is_empty() { format!("{compared} iterates agree") } else { failures.join("; ") },
    );

    Verdicts {
        pinch_ratio: ratio,
        pinching_gate: gate,
        strictly_elliptic_count: strict,
        non_hyperbolic_count: non_hyp,
        non_hyperbolic_required: need,
        hyperbolic_count: hyperbolic,
        second_iterate_cases: cases,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{normal_form_product, NormalForm};

    fn class_of(blocks: &[NormalForm]) -> StabilityClass {
        floquet_classify(&normal_form_product(blocks).unwrap()).unwrap().class
    }

    #[test]
    fn classes_of_normal_forms() {
        let n1 = NormalForm::N1 { lambda: 1.0, b: 1.0 };
        let theta = 2.0 * PI / 1.21;
        assert_eq!(class_of(&[n1.clone(), NormalForm::R { theta }]), StabilityClass::StrictlyElliptic);
        assert_eq!(class_of(&[n1.clone(), NormalForm::D { lambda: 2.0 }]), StabilityClass::Hyperbolic);
        assert_eq!(
            class_of(&[n1.clone(), NormalForm::N2 { theta: 1.0, trivial: false }]),
            StabilityClass::Elliptic
        );
        assert_eq!(
            class_of(&[n1.clone(), NormalForm::R { theta: 1.0 }, NormalForm::D { lambda: 2.0 }]),
            StabilityClass::NonHyperbolic
        );
    }

    #[test]
    fn second_iterate_examples() {
        assert_eq!(second_iterate_case(2, 1, 6, 1, 2).unwrap(), SecondIterateCase::I);
        assert_eq!(second_iterate_case(4, 1, 8, 1, 2).unwrap(), SecondIterateCase::Ii);
        assert_eq!(second_iterate_case(2, 1, 5, 1, 2).unwrap(), SecondIterateCase::None);
        assert!(matches!(second_iterate_case(0, 1, 5, 1, 2), Err(Error::IterationBoundViolation(_))));
    }

    #[test]
    fn hyperbolic_iterates() {
        assert_eq!(hyperbolic_index_iterates(0, 2, 3), (6, 1));
        assert_eq!(hyperbolic_index_iterates(5, 3, 1), (5, 1));
        assert_eq!(hyperbolic_index_iterates(2, 2, 2), (7, 1));
    }

    #[test]
    fn floor_ceil_examples() {
        assert_eq!(floor_ceil_phi(1.5), (1, 2, 1));
        assert_eq!(floor_ceil_phi(2.0), (2, 2, 0));
        assert_eq!(floor_ceil_phi(-0.5), (-1, 0, 1));
    }

    #[test]
    fn slot_ranges() {
        assert_eq!(hyperbolic_slot_range(1), (1, 1));
        assert_eq!(hyperbolic_slot_range(5), (2, 4));
        assert_eq!(slot_count_complement(6), 4);
    }
}
