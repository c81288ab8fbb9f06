use std::f64::consts::{PI, TAU};

use pinchcheck_core::index::{index_iterates, index_nu_omega, splitting_with, IndexCalculator, IndexOptions};
use pinchcheck_core::path::{rotation_path, Conjugated, NormalFormPath, SymplecticPath};
use pinchcheck_core::spectral::{classify_normal_form, splitting_from_blocks, SpectralTolerances};
use pinchcheck_core::symplectic::{random_blocks, random_symplectic, NormalForm, SymplecticMatrix};
use pinchcheck_core::UnitAngle;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Index of `t -> R(theta t)` at `omega = e^{i phi}`, counted directly from
/// the times at which `e^{+-i theta t}` passes through `omega`.
fn rotation_oracle(theta: f64, phi: f64) -> i64 {
    let hits = |target: f64| if theta > target { ((theta - target) / TAU).floor() as i64 + 1 } else { 0 };
    if phi == 0.0 {
        return 2 * (theta / TAU).floor() as i64 + 1;
    }
    hits(phi) + hits(TAU - phi)
}

fn unit_angles(blocks: &[NormalForm]) -> Vec<UnitAngle> {
    let mut out = Vec::new();
    for b in blocks {
        match *b {
            NormalForm::N1 { lambda, .. } => out.push(if lambda > 0.0 { UnitAngle::ONE } else { UnitAngle::MINUS_ONE }),
            NormalForm::R { theta } | NormalForm::N2 { theta, .. } => {
                out.push(UnitAngle::new(theta));
                out.push(UnitAngle::new(-theta));
            }
            _ => {}
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotation_index_matches_crossing_count(theta in 0.3f64..25.0, phi in 0.0f64..TAU) {
        let g = rotation_path(theta).unwrap();
        // stay away from endpoint degeneracy, where the count is one-sided
        let d = (theta.rem_euclid(TAU) - phi).abs().min((theta.rem_euclid(TAU) + phi - TAU).abs());
        prop_assume!(d > 1e-3 && (TAU - d) > 1e-3);
        prop_assume!((theta.rem_euclid(TAU) + phi).rem_euclid(TAU) > 1e-3);
        let r = index_nu_omega(&g, UnitAngle::new(phi), &IndexOptions::default()).unwrap();
        prop_assert_eq!(r.i, rotation_oracle(theta, phi));
        prop_assert_eq!(r.nu, 0);
    }

    #[test]
    fn conjugation_leaves_index_unchanged(seed in 0u64..1000, phi in 0.0f64..TAU) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks = random_blocks(&mut rng, 2);
        let path = NormalFormPath::new(blocks, 1.0).unwrap();
        let p = random_symplectic(&mut rng, 2, 0.3);
        let conj = Conjugated::new(&path, &p);
        let omega = UnitAngle::new(phi);
        let a = index_nu_omega(&path, omega, &IndexOptions::default()).unwrap();
        let b = index_nu_omega(&conj, omega, &IndexOptions::default()).unwrap();
        prop_assert_eq!((a.i, a.nu), (b.i, b.nu));
    }

    #[test]
    fn table_and_numeric_splitting_agree(seed in 0u64..5000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1 + (seed % 3) as usize;
        let blocks = random_blocks(&mut rng, n);
        let path = NormalFormPath::new(blocks.clone(), 1.0).unwrap();
        let p = random_symplectic(&mut rng, n, 0.3);
        let conj = Conjugated::new(&path, &p);
        let end = SymplecticMatrix::new_unchecked(conj.end());
        let decomposition = classify_normal_form(&end, &SpectralTolerances::default()).unwrap();
        let mut calc = IndexCalculator::new(&conj, IndexOptions::default()).unwrap();
        for omega in unit_angles(&blocks) {
            let numeric = splitting_with(&mut calc, omega, 1e-2).unwrap();
            prop_assert_eq!(numeric, splitting_from_blocks(&blocks, omega, 1e-9), "blocks {:?} at {:?}", blocks, omega);
            prop_assert_eq!(numeric, splitting_from_blocks(&decomposition.blocks, omega, 1e-6));
            let nu = calc.nullity(omega);
            prop_assert!(numeric.plus <= nu && numeric.minus <= nu);
        }
    }

    #[test]
    fn second_iterate_is_sum_over_square_roots(seed in 0u64..5000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 1 + (seed % 3) as usize;
        let path = NormalFormPath::new(random_blocks(&mut rng, n), 1.0).unwrap();
        // index_iterates raises on any disagreement between the two computations
        let it = index_iterates(&path, 2, &IndexOptions::default()).unwrap();
        prop_assert_eq!(it.m, 2);
    }
}

#[test]
fn n2_paths_split_as_flagged() {
    for theta in [1.0, 2.5, 4.0, 5.5] {
        for trivial in [false, true] {
            let p = NormalFormPath::new(vec![NormalForm::N2 { theta, trivial }], 1.0).unwrap();
            let mut calc = IndexCalculator::new(&p, IndexOptions::default()).unwrap();
            let s = splitting_with(&mut calc, UnitAngle::new(theta), 1e-2).unwrap();
            let expect = if trivial { (0, 0) } else { (1, 1) };
            assert_eq!((s.plus, s.minus), expect, "theta {theta} trivial {trivial}");
        }
    }
}

#[test]
fn splitting_conjugate_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let blocks = random_blocks(&mut rng, 2);
        let path = NormalFormPath::new(blocks.clone(), 1.0).unwrap();
        let mut calc = IndexCalculator::new(&path, IndexOptions::default()).unwrap();
        for omega in unit_angles(&blocks) {
            let a = splitting_with(&mut calc, omega, 1e-2).unwrap();
            let b = splitting_with(&mut calc, omega.conj(), 1e-2).unwrap();
            assert_eq!((a.plus, a.minus), (b.minus, b.plus));
        }
    }
    let _ = PI;
}
