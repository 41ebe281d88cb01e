use serde::{Deserialize, Serialize};

use super::special::{chi_square_sf, ln_gamma, t_two_sided_p};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub effect_size: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectSize {
    /// Mean difference over the SD of the differences.
    PairedDz,
    /// Mean difference over the pooled SD of the two score sets.
    Pooled,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n - 1 denominator).
fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

fn check_paired(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "paired samples differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("need at least two pairs".into()));
    }
    Ok(x.iter().zip(y).map(|(a, b)| b - a).collect())
}

pub fn cohens_d(x: &[f64], y: &[f64], kind: EffectSize) -> Result<f64> {
    let diffs = check_paired(x, y)?;
    match kind {
        EffectSize::PairedDz => {
            let sd = variance(&diffs).sqrt();
            if sd == 0.0 {
                return Err(Error::Degenerate("differences have zero variance".into()));
            }
            Ok(mean(&diffs) / sd)
        }
        EffectSize::Pooled => {
            let (nx, ny) = (x.len() as f64, y.len() as f64);
            let pooled = (((nx - 1.0) * variance(x) + (ny - 1.0) * variance(y)) / (nx + ny - 2.0)).sqrt();
            if pooled == 0.0 {
                return Err(Error::Degenerate("scores have zero variance".into()));
            }
            Ok((mean(y) - mean(x)) / pooled)
        }
    }
}

/// Two-sided paired t-test on `y - x`.
///
/// Identical samples are rejected. When every difference is the same
/// nonzero value the statistic is infinite and `p = 0`.
pub fn paired_t_test(x: &[f64], y: &[f64]) -> Result<TestResult> {
    let diffs = check_paired(x, y)?;
    if diffs.iter().all(|d| *d == 0.0) {
        return Err(Error::Degenerate("all paired differences are zero".into()));
    }
    let n = diffs.len();
    let df = (n - 1) as f64;
    let (statistic, effect_size) = match cohens_d(x, y, EffectSize::PairedDz) {
        Ok(dz) => (dz * (n as f64).sqrt(), Some(dz)),
        Err(_) => (f64::INFINITY.copysign(mean(&diffs)), None),
    };
    Ok(TestResult {
        statistic,
        df,
        p_value: t_two_sided_p(statistic, df),
        effect_size,
        n,
    })
}

fn ln_binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    let (k, n) = (k as f64, n as f64);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0) + k * p.ln() + (n - k) * (1.0 - p).ln()
}

/// Exact two-sided binomial test: sums the probability of every outcome no
/// more likely than the observed one.
pub fn exact_binomial_test(k: u64, n: u64, p0: f64) -> Result<TestResult> {
    if n == 0 || k > n {
        return Err(Error::InvalidInput(format!("invalid binomial outcome {k}/{n}")));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidInput(format!("p0 must be in (0, 1), got {p0}")));
    }
    let observed = ln_binomial_pmf(k, n, p0);
    // relative slack so outcomes tied with the observed one are counted
    let threshold = observed + 1e-7_f64.ln_1p();
    let p_value: f64 = (0..=n)
        .map(|i| ln_binomial_pmf(i, n, p0))
        .filter(|lp| *lp <= threshold)
        .map(f64::exp)
        .sum();
    Ok(TestResult {
        statistic: k as f64,
        df: n as f64,
        p_value: p_value.min(1.0),
        effect_size: Some(k as f64 / n as f64),
        n: n as usize,
    })
}

/// Pearson chi-square test of independence on an r × c table of counts.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<TestResult> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("table must be rectangular and at least 2 x 2".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    if row_sums.iter().chain(&col_sums).any(|s| *s == 0.0) {
        return Err(Error::InvalidInput("table has a zero marginal".into()));
    }
    let total: f64 = row_sums.iter().sum();
    let mut statistic = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &observed) in row.iter().enumerate() {
            let expected = row_sums[i] * col_sums[j] / total;
            statistic += (observed as f64 - expected).powi(2) / expected;
        }
    }
    let df = ((rows - 1) * (cols - 1)) as f64;
    Ok(TestResult {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
        effect_size: None,
        n: total as usize,
    })
}

/// `*`, `**`, `***` at the .05 / .01 / .001 thresholds.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}
