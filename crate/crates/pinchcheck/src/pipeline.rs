//! The surface pipeline with seeds and orbits processed on the rayon pool.
//! Results are collected in input order, so output does not depend on the
//! number of threads.

use pinchcheck_core::analysis::{assemble_report, orbit_record, prepare, AnalysisOptions, StabilityReport};
use pinchcheck_core::orbit::{converge_seed, finish_search, seeds, OrbitOptions, OrbitSearch};
use pinchcheck_core::surface::SurfaceSpec;
use rayon::prelude::*;

use crate::error::CliError;

pub fn find_orbits_parallel(spec: &SurfaceSpec, opts: &OrbitOptions) -> Result<OrbitSearch, CliError> {
    let all = seeds(spec, opts)?;
    let candidates: Vec<_> = all.par_iter().map(|s| converge_seed(spec, s, opts)).collect();
    Ok(finish_search(spec, &all, candidates, opts)?)
}

pub fn analyze_parallel(spec: &SurfaceSpec, opts: &AnalysisOptions) -> Result<StabilityReport, CliError> {
    let pinching = prepare(spec, opts)?;
    let orbit_opts = OrbitOptions { rng_seed: opts.seed, ..opts.orbit.clone() };
    let search = find_orbits_parallel(spec, &orbit_opts)?;
    let per_orbit = search
        .orbits
        .par_iter()
        .map(|o| orbit_record(spec, o, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_report(spec, pinching, &search, per_orbit))
}
