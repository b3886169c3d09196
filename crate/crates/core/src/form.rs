//! Diagonal forms `q(x) = sum_i alpha_i x_i^d` and their normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// A diagonal form of degree `d` in `k = alpha.len()` variables with
/// positive real coefficients.
///
/// The normalization constant is computed once at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalForm {
    degree: u32,
    alpha: Vec<f64>,
    #[serde(skip)]
    norm: f64,
}

impl DiagonalForm {
    /// Builds a form; requires `d >= 2`, `k >= 2` and every coefficient
    /// finite and strictly positive.
    ///
    /// The main theorems assume `d <= k`; forms with `d > k` are accepted
    /// because none of the operations here depend on that hypothesis.
    pub fn new(degree: u32, alpha: Vec<f64>) -> Result<Self> {
        if degree < 2 {
            return Err(Error::invalid(format!("degree must be >= 2, got {degree}")));
        }
        if alpha.len() < 2 {
            return Err(Error::invalid(format!(
                "dimension must be >= 2, got {}",
                alpha.len()
            )));
        }
        if let Some(bad) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::invalid(format!(
                "coefficients must be finite and positive, got {bad}"
            )));
        }
        let norm = normalization_constant_of(degree, &alpha);
        Ok(DiagonalForm { degree, alpha, norm })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Exponent `k/d` applied to `q` in the normalized values.
    pub fn value_exponent(&self) -> f64 {
        self.dim() as f64 / self.degree as f64
    }

    /// The form with every coefficient multiplied by `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        DiagonalForm::new(self.degree, self.alpha.iter().map(|a| a * t).collect())
    }

    /// `sum_i alpha_i x_i^d`.
    ///
    /// Powers are exact 64-bit integers; the weighted terms are summed from
    /// the largest to the smallest. Returns a range error if some `x_i^d`
    /// overflows `u64`.
    pub fn eval(&self, x: &[u64]) -> Result<f64> {
        self.check_arity(x)?;
        let mut terms = Vec::with_capacity(x.len());
        for (a, &xi) in self.alpha.iter().zip(x) {
            if xi == 0 {
                return Err(Error::invalid("arguments must be positive integers"));
            }
            terms.push(a * exact_power(xi, self.degree)? as f64);
        }
        Ok(sum_descending(&mut terms))
    }

    /// `c(d, k, alpha)`: the constant making the mean spacing of
    /// `c * q(x)^{k/d}` equal to one.
    ///
    /// This is the volume of `{x in R_{>0}^k : q(x) <= 1}`:
    ///
    /// ```text
    /// c = Gamma(1 + 1/d)^k / (Gamma(1 + k/d) * prod_i alpha_i^{1/d})
    /// ```
    pub fn normalization_constant(&self) -> f64 {
        self.norm
    }

    /// `c * q(x)^{k/d}`.
    pub fn normalized_value(&self, x: &[u64]) -> Result<f64> {
        Ok(self.normalize(self.eval(x)?))
    }

    /// Maps a raw form value `q` to `c * q^{k/d}`.
    #[inline]
    pub fn normalize(&self, q: f64) -> f64 {
        if self.dim() as u32 == self.degree {
            self.norm * q
        } else {
            self.norm * q.powf(self.value_exponent())
        }
    }

    /// Inverse of [`normalize`](Self::normalize): the raw threshold `R`
    /// with `c * R^{k/d} = lambda`.
    pub fn raw_threshold(&self, lambda: f64) -> f64 {
        (lambda / self.norm).powf(1.0 / self.value_exponent())
    }

    fn check_arity(&self, x: &[u64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "expected {} arguments, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for DiagonalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .alpha
            .iter()
            .enumerate()
            .map(|(i, a)| format!("{a}*x{}^{}", i + 1, self.degree))
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

fn normalization_constant_of(degree: u32, alpha: &[f64]) -> f64 {
    let d = degree as f64;
    let k = alpha.len() as f64;
    let log_alpha: f64 = alpha.iter().map(|a| a.ln()).sum();
    (k * ln_gamma(1.0 + 1.0 / d) - ln_gamma(1.0 + k / d) - log_alpha / d).exp()
}

/// `x^d` as an exact integer, or a range error on overflow.
pub fn exact_power(x: u64, d: u32) -> Result<u64> {
    x.checked_pow(d)
        .ok_or_else(|| Error::Range(format!("{x}^{d} overflows 64-bit integers")))
}

/// Sums terms after sorting them by decreasing magnitude. Reorders `terms`.
pub(crate) fn sum_descending(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(|a, b| b.abs().total_cmp(&a.abs()));
    terms.iter().sum()
}

/// Axis-aligned product of half-open intervals `[lo_i, hi_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::invalid("box needs matching, nonempty bound lists"));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::invalid(format!("bad interval [{l}, {h})")));
            }
        }
        Ok(IntervalBox { lo, hi })
    }

    /// The cube `[lo, hi)^dim`.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        IntervalBox::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| l <= x && x < h)
    }
}

/// Parses `lo:hi[,lo:hi...]`.
impl FromStr for IntervalBox {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for axis in s.split(',') {
            let (l, h) = axis
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("axis {axis:?} is not lo:hi")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad number {v:?} in box")))
            };
            lo.push(parse(l)?);
            hi.push(parse(h)?);
        }
        IntervalBox::new(lo, hi)
    }
}

impl fmt::Display for IntervalBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axes: Vec<String> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| format!("{l}:{h}"))
            .collect();
        f.write_str(&axes.join(","))
    }
}
