//! Unit-circle eigenstructure: multiplicities, Krein signatures, splitting
//! numbers by table and the normal-form decomposition of a symplectic matrix.

use alloc::{format, string::String, vec, vec::Vec};
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::angle::UnitAngle;
use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues, hermitian_inertia, j_matrix, nullity, singular_values, smallest_right_singular_vectors, to_complex,
    CMat, Mat,
};
use crate::symplectic::{NormalForm, SymplecticMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralTolerances {
    /// Eigenvalue clusters whose mean modulus is within this of 1 are put on the circle.
    pub snap: f64,
    /// Eigenvalues closer than this are treated as one cluster.
    pub cluster: f64,
    /// Relative singular-value threshold for kernels.
    pub kernel: f64,
    /// Relative threshold for the inertia of Hermitian forms.
    pub form: f64,
}

impl Default for SpectralTolerances {
    fn default() -> Self {
        Self { snap: 1e-8, cluster: 1e-4, kernel: 1e-6, form: 1e-7 }
    }
}

impl SpectralTolerances {
    pub fn with_snap(snap: f64) -> Self {
        Self { snap, ..Self::default() }
    }
}

/// One eigenvalue on the unit circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitEigen {
    pub angle: UnitAngle,
    /// Algebraic multiplicity.
    pub nu: usize,
    /// `dim ker(M - omega)` over C.
    pub geo: usize,
    /// Inertia `(p, q)` of `xi^H (iJ) eta` on the generalized eigenspace.
    pub krein: (usize, usize),
    /// Inertia of `h(x, y) = i omega kappa((M - omega) x, y)` restricted to its
    /// nonzero part; one sign per 2x2 Jordan block.
    pub jordan_signs: (usize, usize),
    /// False when a Jordan block of size at least 3 was detected.
    pub blocks_at_most_two: bool,
    /// Set when another circle cluster is suspiciously close.
    pub ambiguous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitSpectrum {
    pub n: usize,
    pub entries: Vec<UnitEigen>,
    /// Eigenvalues off the circle as `(re, im)`.
    pub off_circle: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl UnitSpectrum {
    pub fn elliptic_height(&self) -> usize {
        self.entries.iter().map(|e| e.nu).sum()
    }

    pub fn entry(&self, omega: UnitAngle, tol: f64) -> Option<&UnitEigen> {
        self.entries.iter().find(|e| e.angle.distance(omega) <= tol)
    }

    /// Algebraic multiplicity at `omega`, zero if absent.
    pub fn nu_at(&self, omega: UnitAngle, tol: f64) -> usize {
        self.entry(omega, tol).map_or(0, |e| e.nu)
    }
}

pub(crate) fn cluster_eigenvalues(eigs: &[Complex64], tol: f64) -> Vec<Vec<Complex64>> {
    let k = eigs.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..k {
        for j in i + 1..k {
            if (eigs[i] - eigs[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for i in 0..k {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(eigs[i]),
            None => groups.push((r, vec![eigs[i]])),
        }
    }
    groups.into_iter().map(|g| g.1).collect()
}

fn shifted(m: &Mat, omega: Complex64) -> CMat {
    let mut c = to_complex(m);
    for i in 0..c.nrows() {
        c[(i, i)] -= omega;
    }
    c
}

pub fn unit_spectrum(m: &SymplecticMatrix, snap: f64) -> Result<UnitSpectrum> {
    unit_spectrum_with(m, &SpectralTolerances::with_snap(snap))
}

pub fn unit_spectrum_with(m: &SymplecticMatrix, tol: &SpectralTolerances) -> Result<UnitSpectrum> {
    let n = m.n();
    let mat = m.matrix();
    if mat.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let eigs = eigenvalues(mat);
    let clusters = cluster_eigenvalues(&eigs, tol.cluster);
    let mut entries = Vec::new();
    let mut off_circle = Vec::new();
    let mut warnings = Vec::new();
    let j = to_complex(&j_matrix(n));
    let ij = &j * Complex64::new(0.0, 1.0);
    for cl in clusters {
        let k = cl.len();
        let mean = cl.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b) / k as f64;
        if Float::abs(mean.norm() - 1.0) > tol.snap {
            if Float::abs(mean.norm() - 1.0) < 1e-3 {
                warnings.push(format!("eigenvalue cluster of size {k} just off the circle (|lambda| = {})", mean.norm()));
            }
            off_circle.extend(cl.iter().map(|z| (z.re, z.im)));
            continue;
        }
        let angle = UnitAngle::new(Float::atan2(mean.im, mean.re)).snapped(tol.cluster);
        let omega = angle.to_complex();
        let a = shifted(mat, omega);
        let geo = nullity(&a, tol.kernel).min(k).max(1);
        let mut power = a.clone();
        for _ in 1..k {
            power = &power * &a;
        }
        let basis = smallest_right_singular_vectors(&power, k);
        let g = basis.adjoint() * &ij * &basis;
        let (p, q, z) = hermitian_inertia(&g, tol.form);
        if z > 0 {
            warnings.push(format!("Krein form degenerate at angle {:.9}", angle.radians()));
        }
        let jordan = k - geo;
        let h = basis.adjoint() * a.adjoint() * &ij * &basis * (Complex64::new(0.0, 1.0) * omega);
        let jordan_signs = leading_signs(&h, jordan);
        let square = &a * &a;
        let blocks_at_most_two = k < 3 || nullity(&square, tol.kernel) >= k;
        if angle.is_real() && k % 2 == 1 {
            warnings.push(format!("odd multiplicity {k} at real eigenvalue {}", omega.re));
        }
        entries.push(UnitEigen {
            angle,
            nu: k,
            geo,
            krein: (p, q),
            jordan_signs,
            blocks_at_most_two,
            ambiguous: false,
        });
    }
    entries.sort_by(|a, b| a.angle.radians().total_cmp(&b.angle.radians()));
    for i in 0..entries.len() {
        for k in 0..entries.len() {
            if i != k && entries[i].angle.distance(entries[k].angle) <= 10.0 * tol.cluster {
                entries[i].ambiguous = true;
            }
        }
    }
    if entries.iter().any(|e| e.ambiguous) {
        warnings.push("circle eigenvalue clusters closer than 10x the cluster tolerance".into());
    }
    Ok(UnitSpectrum { n, entries, off_circle, warnings })
}

/// Signs of the `count` eigenvalues of largest modulus of a Hermitian matrix.
fn leading_signs(h: &CMat, count: usize) -> (usize, usize) {
    if count == 0 {
        return (0, 0);
    }
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let mut eig: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| Float::abs(*b).total_cmp(&Float::abs(*a)));
    let mut out = (0, 0);
    for v in eig.into_iter().take(count) {
        if v > 0.0 {
            out.0 += 1;
        } else {
            out.1 += 1;
        }
    }
    out
}

pub fn elliptic_height(m: &SymplecticMatrix) -> Result<usize> {
    Ok(unit_spectrum_with(m, &SpectralTolerances::default())?.elliptic_height())
}

/// `(S+, S-)` at `omega`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplittingPair {
    pub plus: usize,
    pub minus: usize,
}

impl SplittingPair {
    pub const ZERO: SplittingPair = SplittingPair { plus: 0, minus: 0 };

    pub fn new(plus: usize, minus: usize) -> Self {
        Self { plus, minus }
    }
}

impl core::ops::Add for SplittingPair {
    type Output = SplittingPair;
    fn add(self, o: Self) -> Self {
        SplittingPair::new(self.plus + o.plus, self.minus + o.minus)
    }
}

/// Counts of the decomposition `N1(1,1)^p- <> I2^p0 <> N1(1,-1)^p+ <> N1(-1,1)^q-
/// <> (-I2)^q0 <> N1(-1,-1)^q+ <> R(theta_1) ... <> N2 ... <> M0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormDecomposition {
    pub n: usize,
    pub p_minus: usize,
    pub p_zero: usize,
    pub p_plus: usize,
    pub q_minus: usize,
    pub q_zero: usize,
    pub q_plus: usize,
    /// Angles of the `R(theta)` blocks, in `(0, pi) U (pi, 2pi)`.
    pub rotations: Vec<f64>,
    /// Angles in `(0, pi)` of non-trivial `N2` blocks.
    pub n2_nontrivial: Vec<f64>,
    /// Angles in `(0, pi)` of trivial `N2` blocks.
    pub n2_trivial: Vec<f64>,
    pub off_circle_dim: usize,
    pub blocks: Vec<NormalForm>,
    pub warnings: Vec<String>,
}

impl NormalFormDecomposition {
    pub fn r(&self) -> usize {
        self.rotations.len()
    }

    pub fn r_star(&self) -> usize {
        self.n2_nontrivial.len()
    }

    pub fn r_zero(&self) -> usize {
        self.n2_trivial.len()
    }
}

pub fn classify_normal_form(m: &SymplecticMatrix, tol: &SpectralTolerances) -> Result<NormalFormDecomposition> {
    let spec = unit_spectrum_with(m, tol)?;
    let mut d = NormalFormDecomposition {
        n: spec.n,
        p_minus: 0,
        p_zero: 0,
        p_plus: 0,
        q_minus: 0,
        q_zero: 0,
        q_plus: 0,
        rotations: Vec::new(),
        n2_nontrivial: Vec::new(),
        n2_trivial: Vec::new(),
        off_circle_dim: spec.off_circle.len(),
        blocks: Vec::new(),
        warnings: spec.warnings.clone(),
    };
    for e in &spec.entries {
        let phi = e.angle.radians();
        if !e.blocks_at_most_two {
            return Err(Error::UnsupportedNormalForm {
                angle: phi,
                reason: "Jordan block of size 3 or more".into(),
            });
        }
        let jordan = e.nu - e.geo;
        if e.jordan_signs.0 + e.jordan_signs.1 != jordan {
            return Err(Error::UnsupportedNormalForm { angle: phi, reason: "Jordan structure unresolved".into() });
        }
        if e.angle.is_real() {
            if (e.geo - jordan) % 2 == 1 {
                return Err(Error::NumericalConsistency(format!(
                    "odd semisimple multiplicity at real eigenvalue (angle {phi})"
                )));
            }
            let semisimple = (e.geo - jordan) / 2;
            if e.angle.is_one() {
                d.p_minus += e.jordan_signs.0;
                d.p_plus += e.jordan_signs.1;
                d.p_zero += semisimple;
            } else {
                d.q_plus += e.jordan_signs.0;
                d.q_minus += e.jordan_signs.1;
                d.q_zero += semisimple;
            }
        } else if phi < PI {
            let (p, q) = e.krein;
            if p < jordan || q < jordan {
                return Err(Error::UnsupportedNormalForm {
                    angle: phi,
                    reason: format!("Krein signature ({p}, {q}) incompatible with {jordan} Jordan blocks"),
                });
            }
            for _ in 0..q - jordan {
                d.rotations.push(phi);
            }
            for _ in 0..p - jordan {
                d.rotations.push(TAU - phi);
            }
            for _ in 0..e.jordan_signs.0 {
                d.n2_nontrivial.push(phi);
            }
            for _ in 0..e.jordan_signs.1 {
                d.n2_trivial.push(phi);
            }
            if spec.entry(e.angle.conj(), tol.cluster).map(|c| c.nu) != Some(e.nu) {
                d.warnings.push(format!("conjugate of angle {phi:.9} missing or unequal"));
            }
        }
    }
    d.rotations.sort_by(|a, b| a.total_cmp(b));
    let push = |blocks: &mut Vec<NormalForm>, f: NormalForm, k: usize| blocks.extend(core::iter::repeat(f).take(k));
    push(&mut d.blocks, NormalForm::N1 { lambda: 1.0, b: 1.0 }, d.p_minus);
    push(&mut d.blocks, NormalForm::N1 { lambda: 1.0, b: 0.0 }, d.p_zero);
    push(&mut d.blocks, NormalForm::N1 { lambda: 1.0, b: -1.0 }, d.p_plus);
    push(&mut d.blocks, NormalForm::N1 { lambda: -1.0, b: 1.0 }, d.q_minus);
    push(&mut d.blocks, NormalForm::N1 { lambda: -1.0, b: 0.0 }, d.q_zero);
    push(&mut d.blocks, NormalForm::N1 { lambda: -1.0, b: -1.0 }, d.q_plus);
    for &theta in &d.rotations {
        d.blocks.push(NormalForm::R { theta });
    }
    for &theta in &d.n2_nontrivial {
        d.blocks.push(NormalForm::N2 { theta, trivial: false });
    }
    for &theta in &d.n2_trivial {
        d.blocks.push(NormalForm::N2 { theta, trivial: true });
    }
    if d.off_circle_dim > 0 {
        d.blocks.push(NormalForm::OffCircle { dim: d.off_circle_dim });
    }
    let total: usize = d.blocks.iter().map(|b| 2 * b.half_dim()).sum();
    if total != 2 * d.n {
        return Err(Error::NumericalConsistency(format!("decomposition covers {total} of {} dimensions", 2 * d.n)));
    }
    Ok(d)
}

/// Splitting numbers of one basic normal form at `omega`.
pub fn block_splitting(block: &NormalForm, omega: UnitAngle, tol: f64) -> SplittingPair {
    match *block {
        NormalForm::D { .. } | NormalForm::OffCircle { .. } => SplittingPair::ZERO,
        NormalForm::N1 { lambda, b } => {
            let at = if lambda > 0.0 { UnitAngle::ONE } else { UnitAngle::MINUS_ONE };
            if omega.distance(at) > tol {
                return SplittingPair::ZERO;
            }
            let full = if lambda > 0.0 { b >= 0.0 } else { b <= 0.0 };
            if full {
                SplittingPair::new(1, 1)
            } else {
                SplittingPair::ZERO
            }
        }
        NormalForm::R { theta } => {
            let at = UnitAngle::new(theta);
            if omega.distance(at) <= tol {
                SplittingPair::new(0, 1)
            } else if omega.distance(at.conj()) <= tol {
                SplittingPair::new(1, 0)
            } else {
                SplittingPair::ZERO
            }
        }
        NormalForm::N2 { theta, trivial } => {
            let at = UnitAngle::new(theta);
            if (omega.distance(at) <= tol || omega.distance(at.conj()) <= tol) && !trivial {
                SplittingPair::new(1, 1)
            } else {
                SplittingPair::ZERO
            }
        }
    }
}

/// Splitting numbers from the decomposition, summed blockwise.
pub fn splitting_numbers_table(m: &SymplecticMatrix, omega: UnitAngle, tol: &SpectralTolerances) -> Result<SplittingPair> {
    let d = classify_normal_form(m, tol)?;
    Ok(splitting_from_blocks(&d.blocks, omega, 1e-6))
}

pub fn splitting_from_blocks(blocks: &[NormalForm], omega: UnitAngle, tol: f64) -> SplittingPair {
    blocks.iter().fold(SplittingPair::ZERO, |acc, b| acc + block_splitting(b, omega, tol))
}

/// Smallest singular value of `M - omega I` relative to `max(1, ||M||)`.
pub fn distance_to_degenerate(m: &Mat, omega: UnitAngle) -> f64 {
    let s = singular_values(&shifted(m, omega.to_complex()));
    s[0] / s.last().copied().unwrap_or(1.0).max(1.0)
}

/// `nu_omega(M) = dim ker_C (M - omega I)`.
pub fn nu_omega(m: &Mat, omega: UnitAngle, kernel_tol: f64) -> usize {
    nullity(&shifted(m, omega.to_complex()), kernel_tol)
}
