//! Boxplot summaries and the paired t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Boxplot-style summary of one sample.
///
/// Quartiles use linear interpolation between order statistics (type 7).
/// Outliers lie more than 1.5 IQR beyond a quartile; whiskers reach the
/// most extreme remaining points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    /// In ascending order.
    pub outliers: Vec<f64>,
}

/// Type-7 quantile of an ascending, non-empty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(samples: &[f64]) -> Result<SummaryStats> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("sample contains NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q25 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q75 = quantile_sorted(&sorted, 0.75);
    let iqr = q75 - q25;
    let (fence_lo, fence_hi) = (q25 - 1.5 * iqr, q75 + 1.5 * iqr);
    let inside = |x: f64| x >= fence_lo && x <= fence_hi;
    let outliers: Vec<f64> = sorted.iter().copied().filter(|&x| !inside(x)).collect();
    // the quartiles always lie inside the fences, so some point does too
    let whisker_low = sorted.iter().copied().find(|&x| inside(x)).unwrap_or(q25);
    let whisker_high = sorted.iter().rev().copied().find(|&x| inside(x)).unwrap_or(q75);
    Ok(SummaryStats {
        n: samples.len(),
        mean: samples.iter().sum::<f64>() / samples.len() as f64,
        median,
        q25,
        q75,
        whisker_low,
        whisker_high,
        outliers,
    })
}

/// Paired t-test on `a[i] - b[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub n: usize,
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub t: f64,
    /// One-sided p-value for mean(a - b) > 0.
    pub p_greater: f64,
    pub p_two_sided: f64,
}

pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("paired samples of length {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidParameter("paired t-test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let (t, p_greater, p_two_sided) = if sd == 0.0 {
        // degenerate: every difference equal
        match mean.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => (f64::INFINITY, 0.0, 0.0),
            Some(std::cmp::Ordering::Less) => (f64::NEG_INFINITY, 1.0, 0.0),
            _ => (0.0, 0.5, 1.0),
        }
    } else {
        let t = mean / (sd / (n as f64).sqrt());
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let upper = dist.sf(t);
        (t, upper, 2.0 * dist.sf(t.abs()))
    };
    Ok(PairedTest { n, mean_diff: mean, sd_diff: sd, t, p_greater, p_two_sided })
}
