//! Where a symplectic path comes from: builtin families, sampled files, or
//! the linearized flow along an orbit of a surface.

use pinchcheck_core::orbit::OrbitOptions;
use pinchcheck_core::path::{rotation_path, NormalFormPath};
use pinchcheck_core::{NormalForm, SymplecticPath};

use crate::error::CliError;
use crate::formats::{parse_angle, parse_sampled_path, parse_surface};
use crate::pipeline::find_orbits_parallel;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn parse_number(s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| input(format!("bad number {s:?}")))
}

/// One block such as `N1(1,-1)`, `R(2pi/1.21)`, `D(2)`, `N2(1.2,trivial)` or `OFF(2)`.
pub fn parse_block(s: &str) -> Result<NormalForm, CliError> {
    let s = s.trim();
    let (name, args) = s
        .strip_suffix(')')
        .and_then(|x| x.split_once('('))
        .ok_or_else(|| input(format!("bad block {s:?}, expected NAME(args)")))?;
    let args: Vec<&str> = args.split(',').map(str::trim).collect();
    let block = match (name.trim().to_ascii_uppercase().as_str(), args.as_slice()) {
        ("D", [l]) => NormalForm::D { lambda: parse_number(l)? },
        ("N1", [l, b]) => NormalForm::N1 { lambda: parse_number(l)?, b: parse_number(b)? },
        ("R", [t]) => NormalForm::R { theta: parse_angle(t)? },
        ("N2", [t, kind]) => NormalForm::N2 {
            theta: parse_angle(t)?,
            trivial: match *kind {
                "trivial" => true,
                "nontrivial" => false,
                other => return Err(input(format!("N2 kind must be trivial or nontrivial, got {other:?}"))),
            },
        },
        ("OFF", [d]) => NormalForm::OffCircle { dim: d.parse().map_err(|_| input(format!("bad dimension {d:?}")))? },
        _ => return Err(input(format!("unknown block {s:?}"))),
    };
    block.validate()?;
    Ok(block)
}

/// `rotation:<angle>`, `normal-form:<block>;<block>..`, `file:<path>` or
/// `orbit:<surface.json>:<k>` (k counted from 1 in action order).
pub fn load_path(source: &str, seed: u64) -> Result<Box<dyn SymplecticPath>, CliError> {
    let (kind, rest) = source.split_once(':').ok_or_else(|| input(format!("path source {source:?} needs a kind prefix")))?;
    match kind {
        "rotation" => Ok(Box::new(rotation_path(parse_angle(rest)?)?)),
        "normal-form" => {
            let blocks = rest.split(';').filter(|b| !b.trim().is_empty()).map(parse_block).collect::<Result<Vec<_>, _>>()?;
            if blocks.is_empty() {
                return Err(input("normal-form source needs at least one block"));
            }
            Ok(Box::new(NormalFormPath::new(blocks, 1.0)?))
        }
        "file" => Ok(Box::new(parse_sampled_path(&std::fs::read_to_string(rest)?)?)),
        "orbit" => {
            let (file, k) = rest.rsplit_once(':').ok_or_else(|| input("orbit source is orbit:<surface.json>:<k>"))?;
            let k: usize = k.parse().map_err(|_| input(format!("bad orbit number {k:?}")))?;
            let spec = parse_surface(&std::fs::read_to_string(file)?)?;
            let search = find_orbits_parallel(&spec, &OrbitOptions { rng_seed: seed, ..Default::default() })?;
            let orbit = search
                .orbits
                .into_iter()
                .nth(k.wrapping_sub(1))
                .ok_or_else(|| input(format!("orbit {k} not found")))?;
            Ok(Box::new(orbit.path))
        }
        other => Err(input(format!("unknown path source kind {other:?}"))),
    }
}
