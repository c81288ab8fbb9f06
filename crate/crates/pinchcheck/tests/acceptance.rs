//! Acceptance run: one PASS/FAIL line per criterion. Expected values come
//! from closed forms written out here, not from the library.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use pinchcheck::formats::parse_surface;
use pinchcheck::pipeline::find_orbits_parallel;
use pinchcheck_core::analysis::{assemble_report, orbit_record, prepare, AnalysisOptions, StabilityReport};
use pinchcheck_core::classify::{
    comparison_bounds, floor_ceil_phi, hyperbolic_slot_range, non_hyperbolic_bound, slot_count_complement,
};
use pinchcheck_core::flow::FlowOptions;
use pinchcheck_core::galerkin::{coefficient_samples, constant_form_index, stabilized_count, GalerkinOptions};
use pinchcheck_core::index::{mean_index, splitting_with, IndexCalculator, IndexOptions};
use pinchcheck_core::orbit::{ellipsoid_orbits, monodromy_at_alpha, spectrum_distance, ClosedCharacteristic, OrbitOptions};
use pinchcheck_core::path::{iterate_path, Conjugated, NormalFormPath, Rotated, SymplecticPath};
use pinchcheck_core::spectral::{splitting_from_blocks, splitting_numbers_table, SpectralTolerances};
use pinchcheck_core::surface::{Pinching, SurfaceSpec};
use pinchcheck_core::symplectic::{random_blocks, random_symplectic, NormalForm, SymplecticMatrix};
use pinchcheck_core::UnitAngle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ACTION_TOL: f64 = 1e-6;
const MEAN_INDEX_TOL: f64 = 1e-2;
const MEAN_INDEX_K: usize = 1024;
const MEAN_FLOOR_SLACK: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-8;
const ALPHA_TOL: f64 = 1e-6;
const ALPHAS: [f64; 3] = [1.2, 1.5, 1.8];

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(failures: &[String], ok: String) -> Verdict {
    if failures.is_empty() {
        Verdict { passed: true, detail: ok }
    } else {
        let shown: Vec<_> = failures.iter().take(5).cloned().collect();
        Verdict { passed: false, detail: format!("{} failures: {}", failures.len(), shown.join("; ")) }
    }
}

struct Analyzed {
    name: String,
    spec: SurfaceSpec,
    pinching: Pinching,
    orbits: Vec<ClosedCharacteristic>,
    report: StabilityReport,
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn load(name: &str) -> SurfaceSpec {
    let text = std::fs::read_to_string(corpus_dir().join(name)).unwrap();
    parse_surface(&text).unwrap()
}

fn analyze(name: &str) -> Analyzed {
    let spec = load(name);
    let opts = AnalysisOptions { mean_index_samples: 64, ..Default::default() };
    let pinching = prepare(&spec, &opts).unwrap();
    let search = find_orbits_parallel(&spec, &OrbitOptions { rng_seed: opts.seed, ..opts.orbit.clone() }).unwrap();
    let per_orbit = search.orbits.iter().map(|o| orbit_record(&spec, o, &opts).unwrap()).collect();
    let report = assemble_report(&spec, pinching, &search, per_orbit);
    Analyzed { name: name.into(), spec, pinching, orbits: search.orbits, report }
}

fn run_cli(args: &[&str]) -> (String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_pinchcheck")).args(args).output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap_or(-1))
}

/// `(i(y_k, m), nu(y_k, m))` on an ellipsoid, from the rotation numbers of the
/// linearized flow: the orbit plane turns `m` times and plane `j` turns
/// `m r_k^2 / r_j^2` times.
fn ellipsoid_index_oracle(radii: &[f64], k: usize, m: usize) -> (i64, usize) {
    let mut i = 2 * m as i64 - 1;
    let mut nu = 1;
    for (j, rj) in radii.iter().enumerate() {
        if j == k {
            continue;
        }
        let turns = m as f64 * radii[k] * radii[k] / (rj * rj);
        let whole = (turns + 1e-9).floor();
        if (turns - whole).abs() < 1e-9 {
            i += 2 * whole as i64 - 1;
            nu += 2;
        } else {
            i += 2 * whole as i64 + 1;
        }
    }
    (i, nu)
}

/// Which plane an ellipsoid orbit lies in.
fn orbit_plane(x: &[f64], n: usize) -> usize {
    (0..n).max_by(|&a, &b| (x[a].hypot(x[a + n])).total_cmp(&x[b].hypot(x[b + n]))).unwrap()
}

fn criterion_1(reports: &[serde_json::Value]) -> Verdict {
    let mut fails = Vec::new();
    let radii = [1.0f64, 1.1];
    let alpha = 1.5;
    let r = &reports[0];
    let orbits = r["orbits"].as_array().unwrap();
    if orbits.len() != 2 {
        fails.push(format!("{} orbits", orbits.len()));
    }
    for (o, rk) in orbits.iter().zip(radii) {
        let action = o["action"].as_f64().unwrap();
        let period = o["period"].as_f64().unwrap();
        if (action - PI * rk * rk).abs() > ACTION_TOL {
            fails.push(format!("action {action} vs {}", PI * rk * rk));
        }
        if (period - TAU * rk * rk / alpha).abs() > ACTION_TOL {
            fails.push(format!("period {period} vs {}", TAU * rk * rk / alpha));
        }
        if o["class"] != "strictly-elliptic" {
            fails.push(format!("class {}", o["class"]));
        }
    }
    let v = &r["verdicts"];
    let check = |name: &str| v["checks"].as_array().unwrap().iter().any(|c| c["name"] == name && c["passed"] == true);
    if !check("strictly_elliptic_pair") {
        fails.push("strictly elliptic pair check failed".into());
    }
    let required = 2 * ((2 + 2) / 4);
    if !check("non_hyperbolic_count") || v["non_hyperbolic_count"].as_u64().unwrap() < required {
        fails.push("non-hyperbolic count below 2".into());
    }
    verdict(&fails, format!("actions pi and 1.21 pi within {ACTION_TOL:e}, both strictly elliptic, non-hyperbolic count 2 >= {required}"))
}

fn criterion_2(reports: &[serde_json::Value]) -> Verdict {
    let mut fails = Vec::new();
    let radii = [1.0, 1.1];
    let n = 2i64;
    let orbits = reports[0]["orbits"].as_array().unwrap();
    let row = |o: usize, m: usize| {
        let r = &orbits[o]["indices"][m - 1];
        (r["i_iterate"].as_i64().unwrap(), r["nu"].as_u64().unwrap() as usize)
    };
    let expected = [(0, 1, (0, 1)), (1, 1, (2, 1)), (0, 2, (4, 1))];
    for (o, m, want) in expected {
        let (oi, onu) = ellipsoid_index_oracle(&radii, o, m);
        if (oi - n, onu) != want {
            fails.push(format!("oracle disagrees with pinned value at orbit {} m {m}", o + 1));
        }
        if row(o, m) != want {
            fails.push(format!("orbit {} m {m}: {:?} vs {:?}", o + 1, row(o, m), want));
        }
    }
    let (i2, nu2) = row(1, 2);
    if i2 + nu2 as i64 != 4 * n - 1 {
        fails.push(format!("i(y2^2) + nu = {} vs 7", i2 + nu2 as i64));
    }
    for (o, orbit) in orbits.iter().enumerate() {
        for m in 1..=5 {
            let (i, nu) = ellipsoid_index_oracle(&radii, o, m);
            let g = &orbit["galerkin"][m - 1];
            let got = (g["index"].as_i64().unwrap(), g["nullity"].as_u64().unwrap() as usize);
            if got != (i - n, nu + 1) || row(o, m) != (i - n, nu) {
                fails.push(format!("orbit {} m {m}: galerkin {got:?}, crossing {:?}, oracle {:?}", o + 1, row(o, m), (i - n, nu)));
            }
        }
    }
    let cases: Vec<_> = orbits.iter().map(|o| o["second_iterate_case"].clone()).collect();
    if cases != [serde_json::json!("i"), serde_json::json!("ii")] {
        fails.push(format!("second-iterate cases {cases:?}"));
    }
    verdict(&fails, "(0,1), (2,1), (4,1), 7 = 4n-1; cases (i)/(ii); Galerkin and crossing counts agree for m <= 5".into())
}

fn criterion_3(ellipsoids: &[&Analyzed]) -> Verdict {
    let mut fails = Vec::new();
    let mut count = 0;
    for a in ellipsoids {
        let n = a.spec.n as i64;
        for (o, orbit) in a.report.orbits.iter().enumerate() {
            let plane = orbit_plane(&a.orbits[o].start, a.spec.n);
            for (row, g) in orbit.indices.iter().zip(&orbit.galerkin) {
                count += 1;
                let oracle = ellipsoid_index_oracle(&a.spec.radii, plane, row.m);
                if (g.index as i64, g.nullity) != (row.i - n, row.nu + 1) || (row.i, row.nu) != oracle {
                    fails.push(format!(
                        "{} orbit {} m {}: galerkin ({}, {}), crossing ({}, {}), oracle {:?}",
                        a.name, o + 1, row.m, g.index, g.nullity, row.i, row.nu, oracle
                    ));
                }
            }
        }
    }
    verdict(&fails, format!("{count} iterates on {} ellipsoids agree with (i - n, nu + 1) and the rotation oracle", ellipsoids.len()))
}

fn bott(path: &dyn SymplecticPath) -> Result<(), String> {
    let opts = IndexOptions::default();
    let mut calc = IndexCalculator::new(path, opts).map_err(|e| e.to_string())?;
    let one = calc.index(UnitAngle::ONE).map_err(|e| e.to_string())?;
    let minus = calc.index(UnitAngle::MINUS_ONE).map_err(|e| e.to_string())?;
    let twice = iterate_path(path, 2).map_err(|e| e.to_string())?;
    let direct = IndexCalculator::new(&twice, opts).and_then(|mut c| c.index(UnitAngle::ONE)).map_err(|e| e.to_string())?;
    if direct.i != one.i + minus.i || direct.nu != one.nu + minus.nu {
        return Err(format!("({}, {}) vs ({} + {}, {} + {})", direct.i, direct.nu, one.i, minus.i, one.nu, minus.nu));
    }
    Ok(())
}

fn criterion_4(corpus: &[Analyzed]) -> Verdict {
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut count = 0;
    for trial in 0..160 {
        let n = 1 + trial % 3;
        let blocks = random_blocks(&mut rng, n);
        let path = NormalFormPath::new(blocks.clone(), 1.0).unwrap();
        let p = random_symplectic(&mut rng, n, 0.3);
        let turns = rng.random_range(0..3) as f64;
        let path = Rotated::new(Conjugated::new(path, &p), TAU * turns);
        count += 1;
        if let Err(e) = bott(&path) {
            fails.push(format!("blocks {blocks:?}: {e}"));
        }
    }
    for a in corpus {
        for (o, orbit) in a.orbits.iter().enumerate() {
            for turns in [0.0, 1.0, -1.0] {
                count += 1;
                if let Err(e) = bott(&Rotated::new(&orbit.path, TAU * turns)) {
                    fails.push(format!("{} orbit {} turns {turns}: {e}", a.name, o + 1));
                }
            }
        }
    }
    let ok = if count >= 200 { format!("{count} paths") } else { format!("only {count} paths") };
    if count < 200 {
        fails.push(ok.clone());
    }
    verdict(&fails, format!("{ok}, i(2) = i_1 + i_-1 and nu(2) = nu_1 + nu_-1 on each"))
}

fn unit_angles(blocks: &[NormalForm]) -> Vec<UnitAngle> {
    let mut out = vec![UnitAngle::ONE, UnitAngle::MINUS_ONE, UnitAngle::new(1.234)];
    for b in blocks {
        if let NormalForm::R { theta } | NormalForm::N2 { theta, .. } = *b {
            out.push(UnitAngle::new(theta));
            out.push(UnitAngle::new(-theta));
        }
    }
    out
}

fn splitting_agrees(blocks: &[NormalForm], conj: Option<&SymplecticMatrix>) -> Result<(), String> {
    let base = NormalFormPath::new(blocks.to_vec(), 1.0).map_err(|e| e.to_string())?;
    let path: Box<dyn SymplecticPath> = match conj {
        Some(p) => Box::new(Conjugated::new(base, p)),
        None => Box::new(base),
    };
    let end = SymplecticMatrix::new_unchecked(path.end());
    let mut calc = IndexCalculator::new(&path, IndexOptions::default()).map_err(|e| e.to_string())?;
    for omega in unit_angles(blocks) {
        let numeric = splitting_with(&mut calc, omega, 1e-2).map_err(|e| e.to_string())?;
        let additive = splitting_from_blocks(blocks, omega, 1e-9);
        let table = splitting_numbers_table(&end, omega, &SpectralTolerances::default()).map_err(|e| e.to_string())?;
        if numeric != additive || numeric != table {
            return Err(format!(
                "{blocks:?} at {:.4}: numeric {numeric:?}, blocks {additive:?}, from matrix {table:?}",
                omega.radians()
            ));
        }
    }
    Ok(())
}

fn criterion_5() -> Verdict {
    let mut basic = vec![
        NormalForm::D { lambda: 2.0 },
        NormalForm::D { lambda: -3.0 },
        NormalForm::OffCircle { dim: 2 },
    ];
    for lambda in [1.0, -1.0] {
        for b in [-1.0, 0.0, 1.0] {
            basic.push(NormalForm::N1 { lambda, b });
        }
    }
    for theta in [0.7, 2.0, 3.5, 5.5] {
        basic.push(NormalForm::R { theta });
    }
    for theta in [1.0, 4.0] {
        for trivial in [false, true] {
            basic.push(NormalForm::N2 { theta, trivial });
        }
    }
    let mut fails = Vec::new();
    let mut count = 0;
    for b in &basic {
        count += 1;
        if let Err(e) = splitting_agrees(&[*b], None) {
            fails.push(e);
        }
    }
    for (i, a) in basic.iter().enumerate() {
        for b in &basic[i..] {
            count += 1;
            if let Err(e) = splitting_agrees(&[*a, *b], None) {
                fails.push(e);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..100 {
        let n = 1 + trial % 3;
        let blocks = random_blocks(&mut rng, n);
        let p = random_symplectic(&mut rng, n, 0.3);
        count += 1;
        if let Err(e) = splitting_agrees(&blocks, Some(&p)) {
            fails.push(e);
        }
    }
    verdict(&fails, format!("{count} matrices ({} basic forms, all pairwise products, 100 conjugations)", basic.len()))
}

/// `2n #{j >= 1 : j < s / (pi rho^2)}`, the number of negative Fourier modes
/// of the constant comparison form, with the boundary case decided by `shift`.
fn constant_count(s: f64, rho: f64, n: usize, shift: f64) -> usize {
    let ratio = s / (PI * rho * rho) + shift;
    let mut j = 1;
    while (j as f64) < ratio {
        j += 1;
    }
    2 * n * (j - 1)
}

fn comparison_oracle(a: f64, i: i64, nu: usize, n: usize, p: &Pinching) -> Result<(), String> {
    let n = n as i64;
    let mut k = 1;
    while a > (k + 1) as f64 * PI * p.big_r * p.big_r * (1.0 + 1e-9) {
        k += 1;
    }
    if a > k as f64 * PI * p.big_r * p.big_r * (1.0 + 1e-9) && i < 2 * n * k {
        return Err(format!("a = {a} > {k} pi R^2 but i = {i}"));
    }
    let mut k = 1;
    while a >= k as f64 * PI * p.r * p.r * (1.0 - 1e-9) {
        k += 1;
    }
    if i + nu as i64 > 2 * n * (k - 1) - 1 {
        return Err(format!("a = {a} < {k} pi r^2 but i + nu = {}", i + nu as i64));
    }
    Ok(())
}

fn sandwich(spec: &SurfaceSpec, orbit: &ClosedCharacteristic, m: usize, pinching: &Pinching) -> Result<(), String> {
    let c = coefficient_samples(spec, orbit, GalerkinOptions::default().nodes, &FlowOptions::default()).map_err(|e| e.to_string())?;
    let mut lo = pinching.r * pinching.r / 2.0;
    let mut hi = pinching.big_r * pinching.big_r / 2.0;
    for v in &c.values {
        let eig = v.clone().symmetric_eigen().eigenvalues;
        lo = lo.min(eig.min());
        hi = hi.max(eig.max());
    }
    let (r, big_r) = ((2.0 * lo).sqrt(), (2.0 * hi).sqrt());
    let s = m as f64 * c.period;
    let n = spec.n;
    let g = stabilized_count(&c, m, &GalerkinOptions::default()).map_err(|e| e.to_string())?;
    let lower = constant_count(s, big_r, n, -1e-9);
    let upper = constant_count(s, r, n, 1e-9);
    for rho in [r, big_r] {
        if let Ok(idx) = constant_form_index(s, rho, n) {
            if constant_count(s, rho, n, -1e-9) == constant_count(s, rho, n, 1e-9) && idx != constant_count(s, rho, n, 0.0) {
                return Err(format!("constant_form_index({s}, {rho}, {n}) = {idx}"));
            }
        }
    }
    if !(lower <= g.index && g.index <= upper) {
        return Err(format!("s = {s:.6}: {lower} <= {} <= {upper} fails", g.index));
    }
    Ok(())
}

fn criterion_6(corpus: &[Analyzed]) -> Verdict {
    let mut fails = Vec::new();
    let mut iterates = 0;
    for a in corpus {
        for (o, rec) in a.report.orbits.iter().enumerate() {
            for row in &rec.indices {
                iterates += 1;
                let action = row.m as f64 * rec.action;
                let lib = comparison_bounds(action, row.i_iterate, row.nu, a.spec.n, &a.pinching);
                let oracle = comparison_oracle(action, row.i_iterate, row.nu, a.spec.n, &a.pinching);
                if let Err(e) = lib.and(oracle) {
                    fails.push(format!("{} orbit {} m {}: {e}", a.name, o + 1, row.m));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let perturbed: Vec<_> = corpus.iter().filter(|a| !a.spec.is_ellipsoid()).collect();
    let mut pairs = 0;
    for trial in 0..50 {
        let m = rng.random_range(1..=5);
        pairs += 1;
        let result = if trial % 5 == 4 && !perturbed.is_empty() {
            let a = perturbed[rng.random_range(0..perturbed.len())];
            let o = rng.random_range(0..a.orbits.len());
            sandwich(&a.spec, &a.orbits[o], m, &a.pinching).map_err(|e| format!("{} orbit {}: {e}", a.name, o + 1))
        } else {
            let n = rng.random_range(1..=3);
            let mut radii: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..1.22)).collect();
            radii.sort_by(f64::total_cmp);
            let spec = SurfaceSpec::ellipsoid(&radii);
            let orbits = ellipsoid_orbits(&spec, &OrbitOptions::default()).unwrap();
            let o = rng.random_range(0..orbits.len());
            let r = radii[0];
            let big_r = radii[n - 1];
            let pinching = Pinching { r, big_r, ratio: big_r / r, exact: true, sampling_margin: 0.0 };
            sandwich(&spec, &orbits[o], m, &pinching).map_err(|e| format!("radii {radii:?} orbit {}: {e}", o + 1))
        };
        if let Err(e) = result {
            fails.push(e);
        }
    }
    verdict(&fails, format!("comparison bounds on {iterates} corpus iterates; sandwich on {pairs} (s, surface) pairs"))
}

fn criterion_7(corpus: &[Analyzed]) -> Verdict {
    let mut fails = Vec::new();
    let mut worst = 0.0f64;
    let mut floor = f64::INFINITY;
    for a in corpus {
        for (o, orbit) in a.orbits.iter().enumerate() {
            let exact = a.report.orbits[o].mean_index.exact;
            floor = floor.min(exact);
            if exact < 2.0 - MEAN_FLOOR_SLACK {
                fails.push(format!("{} orbit {}: mean index {exact}", a.name, o + 1));
            }
            if !a.spec.is_ellipsoid() {
                continue;
            }
            let k = orbit_plane(&orbit.start, a.spec.n);
            let rk = a.spec.radii[k];
            let oracle: f64 = a.spec.radii.iter().map(|rj| 2.0 * rk * rk / (rj * rj)).sum();
            let mi = mean_index(&orbit.path, MEAN_INDEX_K, &IndexOptions::default()).unwrap();
            let dev = (mi.average - oracle).abs();
            worst = worst.max(dev);
            if dev > MEAN_INDEX_TOL {
                fails.push(format!("{} orbit {}: average {} vs {oracle}", a.name, o + 1, mi.average));
            }
        }
    }
    verdict(&fails, format!("K = {MEAN_INDEX_K} worst deviation {worst:.4} <= {MEAN_INDEX_TOL}; smallest mean index {floor:.6} >= 2"))
}

fn criterion_8() -> Verdict {
    let mut fails = Vec::new();
    for n in 1..=64i64 {
        let floor3 = (0..).take_while(|k| 4 * k <= 3 * (n - 1)).last().unwrap_or(0);
        let ceil1 = (0..).find(|k| 4 * k >= n - 1).unwrap();
        let rhs = 2 * (0..).take_while(|k| 4 * k <= n + 2).last().unwrap();
        let lhs = n - floor3 + ceil1 - 1;
        let (lo, hi) = hyperbolic_slot_range(n as usize);
        if lhs != rhs || slot_count_complement(n as usize) != rhs || non_hyperbolic_bound(n as usize) as i64 != rhs {
            fails.push(format!("n = {n}: {lhs} vs {rhs}"));
        }
        if (lo as i64, hi as i64) != (ceil1 + 1, floor3 + 1) {
            fails.push(format!("n = {n}: slots {lo}..={hi}"));
        }
    }
    let mut checked = 0;
    for q in 1..=12i64 {
        for p in -60..=60i64 {
            checked += 1;
            let whole = p.rem_euclid(q) == 0;
            let below = (p - p.rem_euclid(q)) / q;
            let want = if whole { (below, below, 0) } else { (below, below + 1, 1) };
            let got = floor_ceil_phi(p as f64 / q as f64);
            if got != want {
                fails.push(format!("{p}/{q}: {got:?} vs {want:?}"));
            }
        }
    }
    verdict(&fails, format!("identity for n = 1..64; floor, E and phi on {checked} rationals"))
}

fn criterion_9(corpus: &[Analyzed], repeats: &[(String, String, String)]) -> Verdict {
    let mut fails = Vec::new();
    let mut worst_res = 0.0f64;
    let mut worst_alpha = 0.0f64;
    for a in corpus {
        for (o, orbit) in a.orbits.iter().enumerate() {
            let res = orbit.monodromy.residual();
            worst_res = worst_res.max(res);
            if res > RESIDUAL_TOL {
                fails.push(format!("{} orbit {}: residual {res:e}", a.name, o + 1));
            }
            let mats: Vec<_> = ALPHAS
                .iter()
                .map(|&beta| monodromy_at_alpha(&a.spec, orbit, beta, &FlowOptions::default()).unwrap())
                .collect();
            for m in &mats {
                worst_res = worst_res.max(m.residual());
                let d = spectrum_distance(mats[1].matrix(), m.matrix()).max(spectrum_distance(orbit.monodromy.matrix(), m.matrix()));
                worst_alpha = worst_alpha.max(d);
                if d > ALPHA_TOL || m.residual() > RESIDUAL_TOL {
                    fails.push(format!("{} orbit {}: alpha deviation {d:e}", a.name, o + 1));
                }
            }
        }
    }
    for (what, first, second) in repeats {
        if first != second || first.is_empty() {
            fails.push(format!("{what} output differs between runs"));
        }
    }
    verdict(
        &fails,
        format!(
            "residuals <= {worst_res:.1e}, alpha deviation <= {worst_alpha:.1e}, {} repeated runs byte-identical",
            repeats.len()
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let e11 = corpus_dir().join("ellipsoid_1_1.1.json");
    let pert = corpus_dir().join("perturbed_1_1.1.json");
    let e11 = e11.to_str().unwrap();
    let pert = pert.to_str().unwrap();
    let mut repeats = Vec::new();
    let mut reports = Vec::new();
    for (what, args) in [
        ("verify ellipsoid", vec!["verify", e11]),
        ("verify perturbed", vec!["verify", pert, "--m-max", "2"]),
        ("orbits-find perturbed csv", vec!["orbits-find", pert, "--format", "csv"]),
    ] {
        let (a, code_a) = run_cli(&args);
        let (b, _) = run_cli(&args);
        assert_eq!(code_a, 0, "{what} exited with {code_a}");
        if what == "verify ellipsoid" {
            reports.push(serde_json::from_str::<serde_json::Value>(&a).unwrap());
        }
        repeats.push((what.to_string(), a, b));
    }

    let names = [
        "circle.json",
        "ellipsoid_1_1.1.json",
        "ellipsoid_1_1.3.json",
        "ellipsoid_1_1.05_1.1.json",
        "ellipsoid_1_1.1_1.2.json",
        "perturbed_1_1.1.json",
        "perturbed_n3.json",
    ];
    let corpus: Vec<Analyzed> = names.iter().map(|n| analyze(n)).collect();
    let ellipsoids: Vec<&Analyzed> = corpus.iter().filter(|a| a.spec.is_ellipsoid()).collect();

    let criteria: [(&str, Box<dyn Fn() -> Verdict + '_>); 9] = [
        ("ellipsoid pipeline", Box::new(|| criterion_1(&reports))),
        ("index table", Box::new(|| criterion_2(&reports))),
        ("oracle equivalence", Box::new(|| criterion_3(&ellipsoids))),
        ("second-iterate splitting identity", Box::new(|| criterion_4(&corpus))),
        ("splitting numbers", Box::new(criterion_5)),
        ("comparison bounds and sandwich", Box::new(|| criterion_6(&corpus))),
        ("mean index", Box::new(|| criterion_7(&corpus))),
        ("counting identity", Box::new(criterion_8)),
        ("numerical hygiene", Box::new(|| criterion_9(&corpus, &repeats))),
    ];
    let mut all = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = run();
        all &= v.passed;
        println!(
            "criterion {} {name}: {} ({}) [{:.1}s]",
            k + 1,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
