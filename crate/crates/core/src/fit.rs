//! Least-squares slopes in log-log coordinates.

use serde::Serialize;

use crate::error::{Error, Result};

/// Slope of `log y` against `log x` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// `NaN` when only two points survive.
    pub stderr: f64,
    pub points: usize,
}

/// Fits `log y = intercept + slope * log x` by ordinary least squares.
///
/// Points with `y <= 0` are dropped. Fails with fewer than `min_points`
/// survivors (and always with fewer than two).
pub fn loglog(points: &[(f64, f64)], min_points: usize) -> Result<LogLogFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len();
    if n < min_points.max(2) {
        return Err(Error::Fit(format!(
            "{n} usable points, need at least {}",
            min_points.max(2)
        )));
    }
    let nf = n as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let ssr: f64 = logs
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(LogLogFit { slope, intercept, stderr, points: n })
}

/// Checks a grid is strictly increasing with at least `min` entries.
pub(crate) fn check_grid<T: PartialOrd + Copy>(grid: &[T], min: usize) -> Result<()> {
    if grid.len() < min {
        return Err(Error::invalid(format!("grid needs at least {min} points")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("grid must be strictly increasing"));
    }
    Ok(())
}
