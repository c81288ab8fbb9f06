//! Command-line definitions and the commands themselves. Every command
//! returns its output text; `main` only prints and sets the exit code.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use pinchcheck_core::analysis::AnalysisOptions;
use pinchcheck_core::angle::UnitAngle;
use pinchcheck_core::classify::{floquet_classify, FloquetSummary};
use pinchcheck_core::index::{index_iterates, IndexCalculator, IndexOptions};
use pinchcheck_core::orbit::OrbitOptions;
use pinchcheck_core::spectral::{
    classify_normal_form, splitting_numbers_table, unit_spectrum_with, NormalFormDecomposition, SpectralTolerances,
};
use pinchcheck_core::surface::SurfaceSpec;
use pinchcheck_core::symplectic::DEFAULT_TOL;
use pinchcheck_core::SymplecticMatrix;
use serde::Serialize;

use crate::error::CliError;
use crate::formats::{csv_string, num, parse_angle, parse_matrix, parse_surface, to_json};
use crate::pipeline::{analyze_parallel, find_orbits_parallel};
use crate::source::load_path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "pinchcheck", version, about = "Index and stability analysis of closed characteristics on convex hypersurfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Tolerance override (symplecticity for matrices, closing defect for orbits).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Seed for randomized searches.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unit spectrum, Krein signs, splitting numbers and normal form of a matrix.
    MatrixAnalyze {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Maslov-type indices of a path at given points of the unit circle and iterates.
    PathIndex {
        /// rotation:<angle>, normal-form:<blocks>, file:<path> or orbit:<surface.json>:<k>.
        source: String,
        /// Comma-separated points: "1", "-1", or an angle in radians such as pi/3.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        omega: Vec<String>,
        /// Comma-separated iterates.
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        /// Adds iterates 1..=m-max.
        #[arg(long)]
        m_max: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Closed characteristics of a surface.
    OrbitsFind {
        spec: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Full pipeline and checks; exit code 1 when a binding check fails.
    Verify {
        spec: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        /// Fourier modes for the Galerkin cross-check.
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long, default_value_t = 5)]
        m_max: usize,
        #[command(flatten)]
        common: Common,
    },
}

/// Output text and exit code of a command that ran to completion.
pub struct Outcome {
    pub text: String,
    pub exit: i32,
}

fn positive(name: &str, v: Option<f64>) -> Result<Option<f64>, CliError> {
    match v {
        Some(x) if !(x > 0.0) || !x.is_finite() => Err(CliError::Input(format!("--{name} must be positive"))),
        _ => Ok(v),
    }
}

pub fn run(cli: Cli) -> Result<(Outcome, Option<PathBuf>), CliError> {
    match cli.command {
        Command::MatrixAnalyze { file, common } => {
            let out = matrix_analyze(&std::fs::read_to_string(&file)?, &common)?;
            Ok((out, common.out))
        }
        Command::PathIndex { source, omega, m, m_max, common } => {
            let out = path_index(&source, &omega, &m, m_max, &common)?;
            Ok((out, common.out))
        }
        Command::OrbitsFind { spec, alpha, common } => {
            let spec = load_surface(&spec, alpha)?;
            Ok((orbits_find(&spec, &common)?, common.out))
        }
        Command::Verify { spec, alpha, modes, m_max, common } => {
            let spec = load_surface(&spec, alpha)?;
            Ok((verify(&spec, modes, m_max, &common)?, common.out))
        }
    }
}

fn load_surface(path: &PathBuf, alpha: Option<f64>) -> Result<SurfaceSpec, CliError> {
    let mut spec = parse_surface(&std::fs::read_to_string(path)?)?;
    if let Some(a) = positive("alpha", alpha)? {
        spec = spec.with_alpha(a);
        spec.validate()?;
    }
    Ok(spec)
}

#[derive(Serialize)]
struct UnitRow {
    angle: f64,
    multiplicity: usize,
    geometric: usize,
    krein: (usize, usize),
    splitting: (usize, usize),
}

#[derive(Serialize)]
struct MatrixReport {
    n: usize,
    symplectic_residual: f64,
    elliptic_height: usize,
    unit_spectrum: Vec<UnitRow>,
    off_circle: Vec<(f64, f64)>,
    normal_form: Option<NormalFormDecomposition>,
    floquet: FloquetSummary,
    warnings: Vec<String>,
}

pub fn matrix_analyze(text: &str, common: &Common) -> Result<Outcome, CliError> {
    let tol = positive("tol", common.tol)?.unwrap_or(DEFAULT_TOL);
    let m = SymplecticMatrix::new(parse_matrix(text)?, tol)?;
    let stol = SpectralTolerances::default();
    let spec = unit_spectrum_with(&m, &stol)?;
    let mut warnings = spec.warnings.clone();
    let normal_form = match classify_normal_form(&m, &stol) {
        Ok(d) => Some(d),
        Err(e) => {
            warnings.push(format!("no normal form: {e}"));
            None
        }
    };
    let mut rows = Vec::new();
    for e in &spec.entries {
        let s = splitting_numbers_table(&m, e.angle, &stol)?;
        rows.push(UnitRow { angle: e.angle.radians(), multiplicity: e.nu, geometric: e.geo, krein: e.krein, splitting: (s.plus, s.minus) });
    }
    let report = MatrixReport {
        n: m.n(),
        symplectic_residual: m.residual(),
        elliptic_height: spec.elliptic_height(),
        unit_spectrum: rows,
        off_circle: spec.off_circle.clone(),
        normal_form,
        floquet: floquet_classify(&m)?,
        warnings,
    };
    let text = match common.format {
        Format::Json => to_json(&report)?,
        Format::Csv => csv_string(
            &["angle", "multiplicity", "geometric", "krein_p", "krein_q", "s_plus", "s_minus"],
            &report
                .unit_spectrum
                .iter()
                .map(|r| {
                    vec![
                        num(r.angle),
                        r.multiplicity.to_string(),
                        r.geometric.to_string(),
                        r.krein.0.to_string(),
                        r.krein.1.to_string(),
                        r.splitting.0.to_string(),
                        r.splitting.1.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    };
    Ok(Outcome { text, exit: 0 })
}

pub fn parse_omega(s: &str) -> Result<UnitAngle, CliError> {
    match s.trim() {
        "1" => Ok(UnitAngle::ONE),
        "-1" => Ok(UnitAngle::MINUS_ONE),
        other => Ok(UnitAngle::new(parse_angle(other)?)),
    }
}

#[derive(Serialize)]
struct OmegaRow {
    omega: String,
    angle: f64,
    i: i64,
    nu: usize,
}

#[derive(Serialize)]
struct IterateRow {
    m: usize,
    i: i64,
    nu: usize,
}

#[derive(Serialize)]
struct PathIndexReport {
    omega: Vec<OmegaRow>,
    iterates: Vec<IterateRow>,
}

pub fn path_index(
    source: &str,
    omegas: &[String],
    ms: &[usize],
    m_max: Option<usize>,
    common: &Common,
) -> Result<Outcome, CliError> {
    if omegas.is_empty() {
        return Err(CliError::Input("--omega needs at least one point".into()));
    }
    let points = omegas.iter().map(|s| parse_omega(s)).collect::<Result<Vec<_>, _>>()?;
    let mut iterates: Vec<usize> = ms.to_vec();
    if let Some(k) = m_max {
        iterates.extend(1..=k);
    }
    if iterates.contains(&0) {
        return Err(CliError::Input("iterates must be positive".into()));
    }
    iterates.sort_unstable();
    iterates.dedup();
    let path = load_path(source, common.seed)?;
    let opts = IndexOptions::default();
    let mut calc = IndexCalculator::new(&*path, opts)?;
    let mut report = PathIndexReport { omega: Vec::new(), iterates: Vec::new() };
    for (label, w) in omegas.iter().zip(&points) {
        let r = calc.index(*w)?;
        report.omega.push(OmegaRow { omega: label.trim().to_string(), angle: w.radians(), i: r.i, nu: r.nu });
    }
    for m in iterates {
        let r = index_iterates(&*path, m, &opts)?;
        report.iterates.push(IterateRow { m, i: r.i, nu: r.nu });
    }
    let text = match common.format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let mut rows: Vec<Vec<String>> =
                report.omega.iter().map(|r| vec!["omega".into(), r.omega.clone(), r.i.to_string(), r.nu.to_string()]).collect();
            rows.extend(report.iterates.iter().map(|r| vec!["m".into(), r.m.to_string(), r.i.to_string(), r.nu.to_string()]));
            csv_string(&["kind", "value", "i", "nu"], &rows)?
        }
    };
    Ok(Outcome { text, exit: 0 })
}

#[derive(Serialize)]
struct OrbitSummary {
    action: f64,
    period: f64,
    start: Vec<f64>,
    origin: pinchcheck_core::orbit::OrbitOrigin,
    prime: bool,
    non_isolated: bool,
    energy_error: f64,
    symplectic_residual: f64,
    multipliers: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct OrbitsReport {
    surface: SurfaceSpec,
    seeds_tried: usize,
    seeds_converged: usize,
    orbits: Vec<OrbitSummary>,
    warnings: Vec<String>,
}

fn orbit_options(common: &Common) -> Result<OrbitOptions, CliError> {
    let mut o = OrbitOptions { rng_seed: common.seed, ..Default::default() };
    if let Some(t) = positive("tol", common.tol)? {
        o.newton_tol = t;
    }
    Ok(o)
}

pub fn orbits_find(spec: &SurfaceSpec, common: &Common) -> Result<Outcome, CliError> {
    spec.check_convexity(1000, common.seed)?;
    let search = find_orbits_parallel(spec, &orbit_options(common)?)?;
    for w in &search.warnings {
        log::warn!("{w}");
    }
    let text = match common.format {
        Format::Json => {
            let orbits = search
                .orbits
                .iter()
                .map(|o| OrbitSummary {
                    action: o.action,
                    period: o.tau,
                    start: o.start.clone(),
                    origin: o.origin,
                    prime: o.prime,
                    non_isolated: o.non_isolated,
                    energy_error: o.energy_error,
                    symplectic_residual: o.monodromy.residual(),
                    multipliers: pinchcheck_core::linalg::eigenvalues(o.monodromy.matrix()).iter().map(|z| (z.re, z.im)).collect(),
                })
                .collect();
            to_json(&OrbitsReport {
                surface: spec.clone(),
                seeds_tried: search.seeds_tried,
                seeds_converged: search.seeds_converged,
                orbits,
                warnings: search.warnings.clone(),
            })?
        }
        Format::Csv => {
            let dim = spec.dim();
            let mut header = vec!["orbit".to_string(), "t".to_string()];
            header.extend((1..=dim).map(|k| format!("x{k}")));
            let mut rows = Vec::new();
            for (k, o) in search.orbits.iter().enumerate() {
                for (t, x) in o.samples(256) {
                    let mut row = vec![(k + 1).to_string(), num(t)];
                    row.extend(x.iter().map(|v| num(*v)));
                    rows.push(row);
                }
            }
            let refs: Vec<&str> = header.iter().map(String::as_str).collect();
            csv_string(&refs, &rows)?
        }
    };
    Ok(Outcome { text, exit: 0 })
}

pub fn verify(spec: &SurfaceSpec, modes: Option<usize>, m_max: usize, common: &Common) -> Result<Outcome, CliError> {
    if m_max < 2 {
        return Err(CliError::Input("--m-max must be at least 2".into()));
    }
    let mut opts = AnalysisOptions { m_max, seed: common.seed, orbit: orbit_options(common)?, ..Default::default() };
    if let Some(k) = modes {
        if k == 0 {
            return Err(CliError::Input("--modes must be positive".into()));
        }
        opts.galerkin.modes = k;
    }
    let report = analyze_parallel(spec, &opts)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let exit = if report.passed() { 0 } else { 1 };
    let text = match common.format {
        Format::Json => to_json(&report)?,
        Format::Csv => csv_string(
            &["check", "passed", "binding", "detail"],
            &report
                .verdicts
                .checks
                .iter()
                .map(|c| vec![c.name.clone(), c.passed.to_string(), c.binding.to_string(), c.detail.clone()])
                .collect::<Vec<_>>(),
        )?,
    };
    Ok(Outcome { text, exit })
}
