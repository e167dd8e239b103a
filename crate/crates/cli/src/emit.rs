//! Deterministic CSV and JSON artifacts.

use std::fs;
use std::path::Path;

use l2field::Report;
use nalgebra::DMatrix;

use crate::CliError;

/// Shortest round-trip decimal. Plain notation for `1e-5 ≤ |x| < 1e17`,
/// exponent notation otherwise; negative zero prints as `0`.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if (1e-5..1e17).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn io(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Matrix with header `c0,c1,…`, one row per matrix row.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record((0..m.ncols()).map(|j| format!("c{j}"))).map_err(io(path))?;
    for i in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|j| format_real(m[(i, j)]))).map_err(io(path))?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Sample paths with header `path,p0,p1,…`.
pub fn write_paths(path: &Path, values: &DMatrix<f64>) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let header = std::iter::once("path".to_string()).chain((0..values.ncols()).map(|j| format!("p{j}")));
    w.write_record(header).map_err(io(path))?;
    for i in 0..values.nrows() {
        let row = std::iter::once(i.to_string()).chain((0..values.ncols()).map(|j| format_real(values[(i, j)])));
        w.write_record(row).map_err(io(path))?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// One row per report; header only for an empty list.
pub fn write_reports(path: &Path, reports: &[Report]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["check", "mode", "status", "pass", "max_abs_diff", "tolerance", "seed"])
        .map_err(io(path))?;
    for r in reports {
        let status = serde_json::to_value(r.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        w.write_record([
            r.check.clone(),
            r.mode.clone().unwrap_or_default(),
            status,
            r.pass.to_string(),
            r.max_abs_diff.map(format_real).unwrap_or_default(),
            r.tolerance.map(format_real).unwrap_or_default(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
        ])
        .map_err(io(path))?;
    }
    w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, 123456.789, 2.5e-7, 6.02e23, -1e-300, 1e16, 1e17] {
            let s = format_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_real(-0.0), "0");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(1e-6), "1e-6");
        assert_eq!(format_real(0.5), "0.5");
    }

    #[test]
    fn identity_matrix_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        write_matrix(&p, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "c0,c1\n1,0\n0,1\n");
    }

    #[test]
    fn empty_report_list_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_reports(&p, &[]).unwrap();
        assert_eq!(
            fs::read_to_string(&p).unwrap(),
            "check,mode,status,pass,max_abs_diff,tolerance,seed\n"
        );
    }
}
