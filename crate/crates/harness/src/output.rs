//! CSV and JSON emission.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use aniflow_core::evolve::Record;
use anyhow::{Context, Result};

pub const CSV_HEADER: &str = "time,sup_grad,sup_ut,lambda_hat,energy,psi_max,psi_argmax_boundary,eigmin_B";
pub const ESTIMATES_HEADER: &str = "time,rho_n,rho_bounds_hold,ut_spread,u_min,u_max";

/// C `printf("%.12e")`: twelve mantissa digits, signed exponent of at least
/// two digits.
pub fn fmt_e12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn trajectory_csv(records: &[Record]) -> String {
    let mut out = String::with_capacity(128 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let row = [
            r.time,
            r.sup_grad,
            r.sup_ut,
            r.lambda_hat,
            r.energy,
            r.psi_max,
            flag(r.psi_argmax_boundary),
            r.eigmin_b,
        ];
        let cells: Vec<String> = row.iter().map(|x| fmt_e12(*x)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Estimate columns that do not belong to the fixed trajectory schema.
pub fn estimates_csv(records: &[Record]) -> String {
    let mut out = String::new();
    out.push_str(ESTIMATES_HEADER);
    out.push('\n');
    for r in records {
        let row = [r.time, r.rho_n, flag(r.rho_bounds_hold), r.ut_spread, r.u_min, r.u_max];
        let cells: Vec<String> = row.iter().map(|x| fmt_e12(*x)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printf_exponent_format() {
        assert_eq!(fmt_e12(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e12(1.0), "1.000000000000e+00");
        assert_eq!(fmt_e12(-0.5), "-5.000000000000e-01");
        assert_eq!(fmt_e12(12345.678), "1.234567800000e+04");
        assert_eq!(fmt_e12(1e-120), "1.000000000000e-120");
        assert_eq!(fmt_e12(f64::NAN), "nan");
    }
}
