//! Text formats: matrices, sampled paths, surface specs, and JSON with
//! numbers rounded to 12 significant digits.

use std::fmt::Write as _;

use pinchcheck_core::path::SampledPath;
use pinchcheck_core::surface::SurfaceSpec;
use pinchcheck_core::Mat;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn parse_header(line: &str) -> Result<usize, CliError> {
    let rest = line
        .trim()
        .strip_prefix("n=")
        .ok_or_else(|| input(format!("expected header \"n=<int>\", got {:?}", line.trim())))?;
    let n: usize = rest.trim().parse().map_err(|_| input(format!("bad dimension {rest:?}")))?;
    if n == 0 {
        return Err(input("n must be positive"));
    }
    Ok(n)
}

fn parse_row(line: &str, width: usize, lineno: usize) -> Result<Vec<f64>, CliError> {
    let row: Vec<f64> = line
        .split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|_| input(format!("line {lineno}: bad number {tok:?}"))))
        .collect::<Result<_, _>>()?;
    if row.len() != width {
        return Err(input(format!("line {lineno}: expected {width} entries, got {}", row.len())));
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(input(format!("line {lineno}: non-finite entry")));
    }
    Ok(row)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(k, l)| (k + 1, l)).filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    })
}

/// `n=<int>` followed by `2n` rows of `2n` numbers, or a JSON array of rows.
pub fn parse_matrix(text: &str) -> Result<Mat, CliError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let rows: Vec<Vec<f64>> = serde_json::from_str(trimmed).map_err(|e| input(format!("matrix JSON: {e}")))?;
        let dim = rows.len();
        if dim == 0 || dim % 2 == 1 || rows.iter().any(|r| r.len() != dim) {
            return Err(input(format!("matrix must be square of even size, got {dim} rows")));
        }
        return Ok(Mat::from_fn(dim, dim, |i, j| rows[i][j]));
    }
    let mut lines = content_lines(text);
    let (_, head) = lines.next().ok_or_else(|| input("empty matrix file"))?;
    let n = parse_header(head)?;
    let dim = 2 * n;
    let mut data = Vec::with_capacity(dim * dim);
    for _ in 0..dim {
        let (k, l) = lines.next().ok_or_else(|| input(format!("expected {dim} rows")))?;
        data.extend(parse_row(l, dim, k)?);
    }
    if let Some((k, _)) = lines.next() {
        return Err(input(format!("line {k}: trailing content after {dim} rows")));
    }
    Ok(Mat::from_row_slice(dim, dim, &data))
}

pub fn format_matrix(m: &Mat) -> String {
    let mut out = format!("n={}\n", m.nrows() / 2);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// `n=<int>`, then blocks of `t=<time>` followed by `2n` rows; the first block
/// must be `t=0` with the identity.
pub fn parse_sampled_path(text: &str) -> Result<SampledPath, CliError> {
    let mut lines = content_lines(text).peekable();
    let (_, head) = lines.next().ok_or_else(|| input("empty path file"))?;
    let n = parse_header(head)?;
    let dim = 2 * n;
    let (mut times, mut mats) = (Vec::new(), Vec::new());
    while let Some((k, l)) = lines.next() {
        let t = l
            .trim()
            .strip_prefix("t=")
            .ok_or_else(|| input(format!("line {k}: expected \"t=<time>\"")))?
            .trim()
            .parse::<f64>()
            .map_err(|_| input(format!("line {k}: bad time")))?;
        let mut data = Vec::with_capacity(dim * dim);
        for _ in 0..dim {
            let (k, l) = lines.next().ok_or_else(|| input(format!("block at t={t}: expected {dim} rows")))?;
            data.extend(parse_row(l, dim, k)?);
        }
        times.push(t);
        mats.push(Mat::from_row_slice(dim, dim, &data));
    }
    Ok(SampledPath::new(times, mats)?)
}

pub fn format_sampled_path(times: &[f64], mats: &[Mat]) -> String {
    let mut out = format!("n={}\n", mats.first().map_or(0, |m| m.nrows() / 2));
    for (t, m) in times.iter().zip(mats) {
        let _ = writeln!(out, "t={t:.17e}");
        out.push_str(format_matrix(m).split_once('\n').map_or("", |x| x.1));
    }
    out
}

pub fn parse_surface(text: &str) -> Result<SurfaceSpec, CliError> {
    let spec: SurfaceSpec = serde_json::from_str(text).map_err(|e| input(format!("surface spec: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

/// Rounds to 12 significant digits; the shortest round-trip form of the
/// rounded value is what gets printed.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(num) => {
            if num.is_f64() {
                if let Some(x) = num.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round12(x)) {
                        *num = r;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Output(e.to_string()))?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Output(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// A number as a CSV field, 12 significant digits.
pub fn num(x: f64) -> String {
    let r = round12(x);
    if r == r.trunc() && r.abs() < 1e15 { format!("{r:.1}") } else { format!("{r}") }
}

pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Output(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Output(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

/// Angles like `2pi`, `pi/2`, `2pi/1.21`, `-0.5` (radians).
pub fn parse_angle(s: &str) -> Result<f64, CliError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, Some(b)),
        None => (s, None),
    };
    let base = if let Some(coef) = num.strip_suffix("pi") {
        let c = match coef.trim() {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.trim_end_matches('*').parse::<f64>().map_err(|_| input(format!("bad angle {s:?}")))?,
        };
        c * std::f64::consts::PI
    } else {
        num.parse::<f64>().map_err(|_| input(format!("bad angle {s:?}")))?
    };
    let value = match den {
        Some(d) => base / d.trim().parse::<f64>().map_err(|_| input(format!("bad angle {s:?}")))?,
        None => base,
    };
    if !value.is_finite() {
        return Err(input(format!("bad angle {s:?}")));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let m = Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
        assert_eq!(parse_matrix("[[1, 0.5], [0, 1]]").unwrap(), m);
    }

    #[test]
    fn angles() {
        assert_eq!(parse_angle("2pi").unwrap(), 2.0 * std::f64::consts::PI);
        assert_eq!(parse_angle("pi/2").unwrap(), std::f64::consts::FRAC_PI_2);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert!(parse_angle("x").is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(round12(std::f64::consts::PI), 3.14159265359);
        assert_eq!(round12(0.0), 0.0);
        assert_eq!(num(2.0), "2.0");
    }
}
