use serde::Serialize;

use super::check_sorted;
use crate::error::{Error, Result};

/// `delta_i = Lambda_{i+1} - Lambda_i` for a sorted sequence of length >= 2.
pub fn gap_sequence(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::invalid("need at least two values for gaps"));
    }
    check_sorted(values)?;
    Ok(values.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Kolmogorov-Smirnov distance between the empirical distribution of the
/// gaps, rescaled to unit mean, and the exponential law `1 - e^{-s}`.
pub fn ks_against_exponential(gaps: &[f64]) -> Result<f64> {
    if gaps.is_empty() {
        return Err(Error::invalid("no gaps"));
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    if mean <= 0.0 {
        // all mass at zero
        return Ok(1.0);
    }
    let mut scaled: Vec<f64> = gaps.iter().map(|g| g / mean).collect();
    scaled.sort_by(f64::total_cmp);
    let n = scaled.len() as f64;
    let mut sup = 0.0f64;
    for (i, s) in scaled.iter().enumerate() {
        let cdf = -(-s).exp_m1();
        let above = (i + 1) as f64 / n - cdf;
        let below = cdf - i as f64 / n;
        sup = sup.max(above).max(below);
    }
    Ok(sup)
}

/// Gaps at or above a threshold. `positions` are 0-based gap indices: entry
/// `i` is the gap between values `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongGaps {
    pub threshold: f64,
    pub count: usize,
    pub positions: Vec<usize>,
}

pub fn long_gaps(values: &[f64], threshold: f64) -> Result<LongGaps> {
    let gaps = gap_sequence(values)?;
    let positions: Vec<usize> = gaps
        .iter()
        .enumerate()
        .filter(|(_, g)| **g >= threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(LongGaps { threshold, count: positions.len(), positions })
}

/// Everything the `gaps` command reports about one sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub m: usize,
    pub mean_gap: f64,
    pub max_gap: f64,
    pub ks_exponential: f64,
    pub long_gap_threshold: f64,
    pub long_gap_count: usize,
}

impl GapSummary {
    pub fn compute(values: &[f64], threshold: f64) -> Result<Self> {
        let gaps = gap_sequence(values)?;
        let long = long_gaps(values, threshold)?;
        Ok(GapSummary {
            m: values.len(),
            mean_gap: gaps.iter().sum::<f64>() / gaps.len() as f64,
            max_gap: gaps.iter().cloned().fold(0.0, f64::max),
            ks_exponential: ks_against_exponential(&gaps)?,
            long_gap_threshold: threshold,
            long_gap_count: long.count,
        })
    }
}
