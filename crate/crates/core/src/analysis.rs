//! The surface pipeline: orbits, monodromies, index tables, Floquet classes,
//! Galerkin cross-checks and the final report.

use alloc::{string::String, vec::Vec};

use serde::{Deserialize, Serialize};

use crate::classify::{floquet_classify, verify_theorems, FloquetSummary, GalerkinRow, OrbitFacts, SecondIterateCase, StabilityClass, Verdicts};
use crate::error::Result;
use crate::galerkin::{coefficient_samples, stabilized_count, GalerkinOptions};
use crate::index::{index_table, mean_index, IndexOptions};
use crate::orbit::{alpha_consistency, ClosedCharacteristic, OrbitOptions, OrbitOrigin, OrbitSearch};
use crate::surface::{Pinching, SurfaceSpec};

#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub orbit: OrbitOptions,
    pub index: IndexOptions,
    pub galerkin: GalerkinOptions,
    pub m_max: usize,
    pub pinching_samples: usize,
    pub convexity_samples: usize,
    pub seed: u64,
    /// Number of angles in the mean-index average.
    pub mean_index_samples: usize,
    pub run_galerkin: bool,
    pub check_alpha: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            orbit: OrbitOptions::default(),
            index: IndexOptions::default(),
            galerkin: GalerkinOptions::default(),
            m_max: 5,
            pinching_samples: 10_000,
            convexity_samples: 1_000,
            seed: 0,
            mean_index_samples: 256,
            run_galerkin: true,
            check_alpha: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub m: usize,
    /// `i(y, m)`, index of the iterated symplectic path.
    pub i: i64,
    pub nu: usize,
    /// `i(y^m) = i(y, m) - n`.
    pub i_iterate: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanIndexRecord {
    pub average: f64,
    pub exact: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub action: f64,
    pub period: f64,
    pub start: Vec<f64>,
    pub origin: OrbitOrigin,
    pub prime: bool,
    pub non_isolated: bool,
    pub energy_error: f64,
    pub symplectic_residual: f64,
    pub class: StabilityClass,
    pub floquet: FloquetSummary,
    pub indices: Vec<IndexRow>,
    pub second_iterate_case: Option<SecondIterateCase>,
    pub mean_index: MeanIndexRecord,
    pub galerkin: Vec<GalerkinRow>,
    /// Largest change of the Floquet spectrum across the checked exponents.
    pub alpha_deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub seeds_tried: usize,
    pub seeds_converged: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub surface: SurfaceSpec,
    pub pinching: Pinching,
    pub search: SearchSummary,
    pub orbits: Vec<OrbitRecord>,
    pub verdicts: Verdicts,
    pub warnings: Vec<String>,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.verdicts.passed()
    }
}

/// Everything computed for one orbit.
pub fn orbit_record(spec: &SurfaceSpec, orbit: &ClosedCharacteristic, opts: &AnalysisOptions) -> Result<(OrbitRecord, OrbitFacts)> {
    let n = spec.n;
    let table = index_table(&orbit.path, opts.m_max, &opts.index)?;
    let floquet = floquet_classify(&orbit.monodromy)?;
    let mi = mean_index(&orbit.path, opts.mean_index_samples, &opts.index)?;
    let galerkin = if opts.run_galerkin {
        let c = coefficient_samples(spec, orbit, opts.galerkin.nodes, &opts.orbit.flow)?;
        (1..=opts.m_max)
            .map(|m| stabilized_count(&c, m, &opts.galerkin).map(|s| GalerkinRow { m, index: s.index, nullity: s.nullity }))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let alpha_deviation = if opts.check_alpha { Some(alpha_consistency(spec, orbit, &opts.orbit)?) } else { None };
    let indices = table.iter().map(|r| IndexRow { m: r.m, i: r.i, nu: r.nu, i_iterate: r.i - n as i64 }).collect();
    let second_iterate_case = match (table.first(), table.get(1)) {
        (Some(a), Some(b)) => crate::classify::second_iterate_case(a.i, a.nu, b.i, b.nu, n).ok(),
        _ => None,
    };
    let record = OrbitRecord {
        action: orbit.action,
        period: orbit.tau,
        start: orbit.start.clone(),
        origin: orbit.origin,
        prime: orbit.prime,
        non_isolated: orbit.non_isolated,
        energy_error: orbit.energy_error,
        symplectic_residual: orbit.monodromy.residual(),
        class: floquet.class,
        floquet: floquet.clone(),
        indices,
        second_iterate_case,
        mean_index: MeanIndexRecord { average: mi.average, exact: mi.exact, samples: mi.samples },
        galerkin: galerkin.clone(),
        alpha_deviation,
    };
    let facts = OrbitFacts { action: orbit.action, table, floquet, galerkin };
    Ok((record, facts))
}

pub fn assemble_report(
    spec: &SurfaceSpec,
    pinching: Pinching,
    search: &OrbitSearch,
    per_orbit: Vec<(OrbitRecord, OrbitFacts)>,
) -> StabilityReport {
    let (orbits, facts): (Vec<_>, Vec<_>) = per_orbit.into_iter().unzip();
    let verdicts = verify_theorems(spec.n, &pinching, &facts);
    let mut warnings = search.warnings.clone();
    for o in &orbits {
        warnings.extend(o.floquet.warnings.iter().cloned());
    }
    if !pinching.exact {
        warnings.push(alloc::format!("pinching constants sampled, margin {:.3e}", pinching.sampling_margin));
    }
    StabilityReport {
        surface: spec.clone(),
        pinching,
        search: SearchSummary { seeds_tried: search.seeds_tried, seeds_converged: search.seeds_converged },
        orbits,
        verdicts,
        warnings,
    }
}

/// Validation, convexity and pinching, shared by the sequential and parallel
/// pipelines.
pub fn prepare(spec: &SurfaceSpec, opts: &AnalysisOptions) -> Result<Pinching> {
    spec.validate()?;
    spec.check_convexity(opts.convexity_samples, opts.seed)?;
    spec.pinching_constants(opts.pinching_samples, opts.seed)
}

pub fn analyze_surface(spec: &SurfaceSpec, opts: &AnalysisOptions) -> Result<StabilityReport> {
    let pinching = prepare(spec, opts)?;
    let orbit_opts = OrbitOptions { rng_seed: opts.seed, ..opts.orbit.clone() };
    let search = crate::orbit::find_orbits(spec, &orbit_opts)?;
    let per_orbit = search.orbits.iter().map(|o| orbit_record(spec, o, opts)).collect::<Result<Vec<_>>>()?;
    Ok(assemble_report(spec, pinching, &search, per_orbit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_radius_ellipsoid_report() {
        let spec = SurfaceSpec::ellipsoid(&[1.0, 1.1]);
        let opts = AnalysisOptions { mean_index_samples: 64, ..Default::default() };
        let report = analyze_surface(&spec, &opts).unwrap();
        assert!(report.passed(), "{:#?}", report.verdicts.checks);
        assert_eq!(report.orbits.len(), 2);
        assert_eq!(report.verdicts.strictly_elliptic_count, 2);
        assert_eq!(
            report.verdicts.second_iterate_cases,
            alloc::vec![Some(SecondIterateCase::I), Some(SecondIterateCase::Ii)]
        );
    }

    #[test]
    fn wide_ellipsoid_fails_gate_only() {
        let spec = SurfaceSpec::ellipsoid(&[1.0, 1.3]);
        let opts = AnalysisOptions { mean_index_samples: 64, m_max: 2, ..Default::default() };
        let report = analyze_surface(&spec, &opts).unwrap();
        assert!(!report.verdicts.pinching_gate);
        assert!(report.passed());
    }
}
