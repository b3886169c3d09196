//! Monte Carlo over a box of coefficients.
//!
//! For `alpha` uniform on the box `D` the sweep estimates, at each `M` of a
//! schedule,
//!
//! ```text
//! weak = integral over D of (T_l(M; I; alpha) - vol I)
//! L2   = integral over D of |T_l(M; I; alpha) - vol I|^2
//! ```
//!
//! as `vol(D)` times a sample mean, with seeded percentile-bootstrap
//! intervals. Each sample draws its coefficients and its randomness from
//! its own counter-based stream, so results do not depend on scheduling.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::correlate::{ell_correlation, CorrelationRequest};
use crate::enumerate::generate_sequence;
use crate::error::{Error, Result};
use crate::fit::{loglog, LogLogFit};
use crate::form::{DiagonalForm, IntervalBox};

/// Bootstrap resamples used when none are configured.
pub const DEFAULT_BOOTSTRAP: usize = 1000;

/// Streams reserved for bootstrap resampling, one per schedule entry.
const BOOTSTRAP_STREAM: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub domain: IntervalBox,
    pub samples: usize,
    pub seed: u64,
    /// Strictly increasing prefix lengths.
    pub schedule: Vec<usize>,
    pub order: usize,
    pub window: IntervalBox,
    pub bootstrap: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.domain.lo().iter().any(|&lo| lo <= 0.0) {
            return Err(Error::invalid("coefficient box must be strictly positive"));
        }
        if self.domain.dim() < 2 {
            return Err(Error::invalid("coefficient box must have dimension k >= 2"));
        }
        if self.samples < 2 {
            return Err(Error::invalid("need at least two coefficient samples"));
        }
        if self.schedule.is_empty() || self.schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("M schedule must be nonempty and strictly increasing"));
        }
        if self.schedule[0] < 1 {
            return Err(Error::invalid("M must be positive"));
        }
        if self.window.dim() + 1 != self.order {
            return Err(Error::invalid(format!(
                "window of dimension {} does not match order {}",
                self.window.dim(),
                self.order
            )));
        }
        if self.bootstrap < 1 {
            return Err(Error::invalid("need at least one bootstrap resample"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

/// Uniform draw from `domain` on stream `index` of `seed`.
pub fn sample_alpha(domain: &IntervalBox, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    domain
        .lo()
        .iter()
        .zip(domain.hi())
        .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
        .collect()
}

/// Produces the first `len` sorted values for a coefficient sample.
pub trait SequenceSource: Sync {
    fn sequence(&self, alpha: &[f64], len: usize, sample: u64) -> Result<Vec<f64>>;
}

/// The normalized value sequence of the diagonal form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormSource {
    pub degree: u32,
    pub safety: f64,
}

impl SequenceSource for FormSource {
    fn sequence(&self, alpha: &[f64], len: usize, _sample: u64) -> Result<Vec<f64>> {
        let form = DiagonalForm::new(self.degree, alpha.to_vec())?;
        let seq = generate_sequence(&form, len, self.safety)?;
        Ok(seq.values().to_vec())
    }
}

/// A rate-one Poisson process (i.i.d. `Exp(1)` gaps); the coefficients are
/// ignored. Serves as the oracle for which both estimates vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoissonSource {
    pub seed: u64,
}

impl SequenceSource for PoissonSource {
    fn sequence(&self, _alpha: &[f64], len: usize, sample: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample);
        let mut x = 0.0;
        Ok((0..len)
            .map(|_| {
                let g: f64 = Exp1.sample(&mut rng);
                x += g;
                x
            })
            .collect())
    }
}

/// One coefficient sample at one `M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub sample: u64,
    pub alpha: Vec<f64>,
    pub m: usize,
    pub statistic: f64,
    pub vol: f64,
    pub deviation: f64,
}

/// Weak and `L^2` estimates at one `M`, each with a 95% bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub m: usize,
    pub weak_est: f64,
    pub weak_ci_lo: f64,
    pub weak_ci_hi: f64,
    pub l2_est: f64,
    pub l2_ci_lo: f64,
    pub l2_ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub seed: u64,
    pub domain_volume: f64,
    /// Ordered by sample index, then by `M`.
    pub rows: Vec<SampleRow>,
    /// One row per schedule entry.
    pub summary: Vec<SummaryRow>,
}

impl SweepResult {
    /// Deviations `T_l - vol I` of all samples at schedule entry `m`.
    pub fn deviations(&self, m: usize) -> Vec<f64> {
        self.rows.iter().filter(|r| r.m == m).map(|r| r.deviation).collect()
    }

    /// Statistics `T_l` of all samples at schedule entry `m`.
    pub fn statistics(&self, m: usize) -> Vec<f64> {
        self.rows.iter().filter(|r| r.m == m).map(|r| r.statistic).collect()
    }
}

/// Runs the sweep with the given sequence source.
pub fn run_sweep(config: &SweepConfig, source: &dyn SequenceSource) -> Result<SweepResult> {
    config.validate()?;
    let max_m = *config.schedule.last().expect("validated");
    let requests: Vec<CorrelationRequest> = config
        .schedule
        .iter()
        .map(|&m| CorrelationRequest::new(config.order, config.window.clone(), m))
        .collect::<Result<_>>()?;
    let per_sample: Vec<Vec<SampleRow>> = (0..config.samples as u64)
        .into_par_iter()
        .map(|s| {
            let alpha = sample_alpha(&config.domain, config.seed, s);
            let values = source.sequence(&alpha, max_m, s).map_err(|e| match e {
                Error::Resource { .. } | Error::Generation { .. } => e,
                other => Error::Generation { alpha: alpha.clone(), reason: other.to_string() },
            })?;
            requests
                .iter()
                .map(|req| {
                    let r = ell_correlation(&values, req)?;
                    Ok(SampleRow {
                        sample: s,
                        alpha: alpha.clone(),
                        m: req.m(),
                        statistic: r.statistic,
                        vol: r.poisson_target,
                        deviation: r.deviation(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<SampleRow> = per_sample.into_iter().flatten().collect();
    let vol_domain = config.domain.volume();
    let summary = config
        .schedule
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let dev: Vec<f64> = rows.iter().filter(|r| r.m == m).map(|r| r.deviation).collect();
            summarize(m, &dev, vol_domain, config.bootstrap, config.seed, i as u64)
        })
        .collect();
    Ok(SweepResult { seed: config.seed, domain_volume: vol_domain, rows, summary })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `vol(D)` times the sample means of `dev` and `dev^2`, with percentile
/// intervals from `resamples` bootstrap draws on stream `stream`.
pub fn summarize(
    m: usize,
    dev: &[f64],
    vol_domain: f64,
    resamples: usize,
    seed: u64,
    stream: u64,
) -> SummaryRow {
    let sq: Vec<f64> = dev.iter().map(|x| x * x).collect();
    let weak = vol_domain * mean(dev);
    let l2 = vol_domain * mean(&sq);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(BOOTSTRAP_STREAM + stream);
    let n = dev.len();
    let mut weak_bs = Vec::with_capacity(resamples);
    let mut l2_bs = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let (mut a, mut b) = (0.0, 0.0);
        for _ in 0..n {
            let i = rng.random_range(0..n);
            a += dev[i];
            b += sq[i];
        }
        weak_bs.push(vol_domain * a / n as f64);
        l2_bs.push(vol_domain * b / n as f64);
    }
    let (weak_ci_lo, weak_ci_hi) = percentile_interval(&mut weak_bs);
    let (l2_ci_lo, l2_ci_hi) = percentile_interval(&mut l2_bs);
    SummaryRow { m, weak_est: weak, weak_ci_lo, weak_ci_hi, l2_est: l2, l2_ci_lo, l2_ci_hi }
}

fn percentile_interval(v: &mut [f64]) -> (f64, f64) {
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let idx = (q * (v.len() - 1) as f64).round() as usize;
        v[idx]
    };
    (at(0.025), at(0.975))
}

/// Per-`M` estimates and the log-log slope of the `L^2` estimate against `M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<SummaryRow>,
    /// `None` when fewer than two positive `L^2` estimates exist.
    pub l2_slope: Option<LogLogFit>,
}

pub fn convergence_report(summary: &[SummaryRow]) -> Result<ConvergenceReport> {
    if summary.len() < 2 {
        return Err(Error::invalid("convergence report needs at least two schedule points"));
    }
    let points: Vec<(f64, f64)> = summary.iter().map(|r| (r.m as f64, r.l2_est)).collect();
    Ok(ConvergenceReport { rows: summary.to_vec(), l2_slope: loglog(&points, 2).ok() })
}

fn sig(x: f64) -> String {
    format!("{x:.16e}")
}

/// Per-sample CSV: `alpha_1..alpha_k, M, T_ell, vol_I, deviation`.
pub fn write_samples_csv<W: Write>(result: &SweepResult, k: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut header: Vec<String> = (1..=k).map(|i| format!("alpha_{i}")).collect();
    header.extend(["M", "T_ell", "vol_I", "deviation"].map(String::from));
    w.write_record(&header).map_err(io)?;
    for r in &result.rows {
        let mut rec: Vec<String> = r.alpha.iter().map(|&a| sig(a)).collect();
        rec.push(r.m.to_string());
        rec.extend([sig(r.statistic), sig(r.vol), sig(r.deviation)]);
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Summary CSV: `M, weak_est, weak_ci_lo, weak_ci_hi, l2_est, l2_ci_lo, l2_ci_hi`.
pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["M", "weak_est", "weak_ci_lo", "weak_ci_hi", "l2_est", "l2_ci_lo", "l2_ci_hi"])
        .map_err(io)?;
    for r in summary {
        w.write_record([
            r.m.to_string(),
            sig(r.weak_est),
            sig(r.weak_ci_lo),
            sig(r.weak_ci_hi),
            sig(r.l2_est),
            sig(r.l2_ci_lo),
            sig(r.l2_ci_hi),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
