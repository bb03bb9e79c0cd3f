//! CSV output. Comma separated, LF line endings, reals with 6 significant
//! digits. Timing measures go to files whose names contain `timing`, so
//! the remaining files are reproducible byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

use super::experiment::{ComparisonResult, Metric, SweepResult};
use super::stats::SummaryStats;

/// Formats like C's `%.6g`: 6 significant digits, trailing zeros removed,
/// scientific notation outside [1e-5, 1e6).
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

const STAT_HEADER: &str = "n,mean,median,q25,q75,whisker_low,whisker_high,n_outliers";

fn stat_fields(s: Option<&SummaryStats>) -> String {
    match s {
        Some(s) => format!(
            "{},{},{},{},{},{},{},{}",
            s.n,
            fmt_real(s.mean),
            fmt_real(s.median),
            fmt_real(s.q25),
            fmt_real(s.q75),
            fmt_real(s.whisker_low),
            fmt_real(s.whisker_high),
            s.outliers.len()
        ),
        None => "0,-,-,-,-,-,-,0".into(),
    }
}

fn write(dir: &Path, name: String, body: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body)?;
    out.push(path);
    Ok(())
}

/// One table of means per metric (rows and columns as the grid axes,
/// `-` for absent cells) plus a long file with full summaries.
pub fn write_sweep(dir: &Path, result: &SweepResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let setup = result.setup.name();
    let family = result.grid.family();
    let (row_axis, col_axis) = result.grid.axes();
    let mut out = Vec::new();
    for metric in Metric::ALL {
        let mut s = String::new();
        writeln!(s, "setup,{setup},rows,{row_axis},cols,{col_axis},metric,{},statistic,mean,n_runs,{}", metric.name(), result.n_runs)
            .unwrap();
        write!(s, "{row_axis}\\{col_axis}").unwrap();
        for c in result.grid.cols() {
            write!(s, ",{c}").unwrap();
        }
        s.push('\n');
        for &r in result.grid.rows() {
            write!(s, "{r}").unwrap();
            for &c in result.grid.cols() {
                match result.stat(r, c, metric) {
                    Some(st) => write!(s, ",{}", fmt_real(st.mean)).unwrap(),
                    None => s.push_str(",-"),
                }
            }
            s.push('\n');
        }
        write(dir, format!("{}_{family}_{}.csv", setup.to_lowercase(), metric.name()), &s, &mut out)?;
    }
    for timing in [false, true] {
        let mut s = format!("{row_axis},{col_axis},method,metric,{STAT_HEADER}\n");
        for cell in &result.cells {
            for (i, metric) in Metric::ALL.iter().enumerate().filter(|(_, m)| m.is_timing() == timing) {
                writeln!(s, "{},{},{},{},{}", cell.row, cell.col, cell.method, metric.name(), stat_fields(cell.stats[i].as_ref()))
                    .unwrap();
            }
        }
        let suffix = if timing { "_timing" } else { "" };
        write(dir, format!("{}_{family}_cells{suffix}.csv", setup.to_lowercase()), &s, &mut out)?;
    }
    Ok(out)
}

/// Per-run values (`method,run,seed,metric,value`), long summaries and a
/// median/mean table with one column per method.
pub fn write_comparison(dir: &Path, result: &ComparisonResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let setup = result.setup.name().to_lowercase();
    let mut out = Vec::new();
    for timing in [false, true] {
        let suffix = if timing { "_timing" } else { "" };
        let metrics: Vec<(usize, Metric)> =
            Metric::ALL.iter().copied().enumerate().filter(|(_, m)| m.is_timing() == timing).collect();

        let mut runs = String::from("method,run,seed,metric,value\n");
        for r in &result.records {
            let method = result.methods[r.cell];
            for &(_, metric) in &metrics {
                writeln!(runs, "{method},{},{},{},{}", r.run, r.seed, metric.name(), fmt_real(metric.value(&r.metrics))).unwrap();
            }
            if !timing {
                writeln!(runs, "{method},{},{},solver_optimal,{}", r.run, r.seed, u8::from(r.solver_optimal)).unwrap();
            }
        }
        write(dir, format!("{setup}_comparison_runs{suffix}.csv"), &runs, &mut out)?;

        let mut summary = format!("method,metric,{STAT_HEADER}\n");
        for (mi, method) in result.methods.iter().enumerate() {
            for &(i, metric) in &metrics {
                writeln!(summary, "{method},{},{}", metric.name(), stat_fields(result.stats[mi][i].as_ref())).unwrap();
            }
        }
        write(dir, format!("{setup}_comparison_summary{suffix}.csv"), &summary, &mut out)?;

        let mut table = String::from("metric,statistic");
        for m in &result.methods {
            write!(table, ",{m}").unwrap();
        }
        table.push('\n');
        for &(i, metric) in &metrics {
            for (label, pick) in [("median", 0), ("mean", 1)] {
                write!(table, "{},{label}", metric.name()).unwrap();
                for mi in 0..result.methods.len() {
                    match &result.stats[mi][i] {
                        Some(s) => write!(table, ",{}", fmt_real(if pick == 0 { s.median } else { s.mean })).unwrap(),
                        None => table.push_str(",-"),
                    }
                }
                table.push('\n');
            }
        }
        write(dir, format!("{setup}_comparison_table{suffix}.csv"), &table, &mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_real(0.0), "0");
        assert_eq!(fmt_real(4.65), "4.65");
        assert_eq!(fmt_real(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_real(12345.678), "12345.7");
        assert_eq!(fmt_real(999999.5), "1e+06");
        assert_eq!(fmt_real(123456.0), "123456");
        assert_eq!(fmt_real(1234567.0), "1.23457e+06");
        assert_eq!(fmt_real(0.000123456789), "0.000123457");
        assert_eq!(fmt_real(1.5e-7), "1.5e-07");
        assert_eq!(fmt_real(-2.0), "-2");
        assert_eq!(fmt_real(0.1 + 0.2), "0.3");
    }
}
