//! Exact counts of integral solutions of diagonal equations and inequalities
//! with integer coefficients, by meet in the middle.
//!
//! * [`count_equation`]: `#{x in Z^k : |x_j| <= M, sum a_j x_j^d = 0}`,
//!   optionally restricted to primitive `x`.
//! * [`count_inequality`]: `N_a(M, H) = #{x : M <= x_j <= 2M, |sum a_j x_j^d| <= H}`.
//!
//! The coordinates are split into a left half of `ceil(k/2)` and a right
//! half of `floor(k/2)` coordinates. Partial sums are exact `i128`.

use std::collections::HashMap;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{check_grid, loglog, LogLogFit};

/// Default bound on the number of partial sums held for one half.
pub const DEFAULT_TABLE_CAP: u64 = 50_000_000;

/// Solution counts of an equation over the symmetric box `|x_j| <= M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EquationCount {
    pub total: u64,
    /// Solutions with every coordinate nonzero.
    pub nonzero: u64,
}

fn check_coefficients(a: &[i64], d: u32) -> Result<()> {
    if a.len() < 2 {
        return Err(Error::invalid("need at least two coefficients"));
    }
    if d < 2 {
        return Err(Error::invalid("degree must be >= 2"));
    }
    if a.contains(&0) {
        return Err(Error::invalid("coefficients must be nonzero"));
    }
    Ok(())
}

fn term(a: i64, x: i64, d: u32) -> Result<i128> {
    (x as i128)
        .checked_pow(d)
        .and_then(|p| p.checked_mul(a as i128))
        .ok_or_else(|| Error::Range(format!("{a} * {x}^{d} overflows i128")))
}

/// Checks that no partial sum over `a` with `|x_j| <= bound` can overflow.
fn check_range(a: &[i64], d: u32, bound: i64) -> Result<()> {
    let mut total: i128 = 0;
    for &ai in a {
        let t = term(ai.checked_abs().unwrap_or(i64::MAX), bound, d)?;
        total = total
            .checked_add(t)
            .ok_or_else(|| Error::Range("sum of terms overflows i128".into()))?;
    }
    Ok(())
}

fn check_table(values_per_coord: u64, coords: usize, cap: u64) -> Result<()> {
    let projected = (values_per_coord as f64).powi(coords as i32);
    if projected > cap as f64 {
        return Err(Error::resource("meet-in-the-middle table", projected, cap as f64));
    }
    Ok(())
}

/// One half of the coordinates: every assignment from `range`, reported as
/// (partial sum, gcd of the coordinates, all coordinates nonzero).
fn half_sums(a: &[i64], d: u32, range: &[i64]) -> Result<Vec<(i128, u64, bool)>> {
    let powers: Vec<Vec<i128>> = a
        .iter()
        .map(|&ai| range.iter().map(|&x| term(ai, x, d)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(range.len().pow(a.len() as u32));
    let mut idx = vec![0usize; a.len()];
    if a.is_empty() {
        out.push((0, 0, true));
        return Ok(out);
    }
    loop {
        let mut s = 0i128;
        let mut g = 0u64;
        let mut nz = true;
        for (j, &i) in idx.iter().enumerate() {
            s += powers[j][i];
            g = g.gcd(&range[i].unsigned_abs());
            nz &= range[i] != 0;
        }
        out.push((s, g, nz));
        let mut j = 0;
        loop {
            if j == idx.len() {
                return Ok(out);
            }
            idx[j] += 1;
            if idx[j] < range.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// `#{x in Z^k : |x_j| <= M, sum a_j x_j^d = 0}`.
pub fn count_equation(a: &[i64], d: u32, m: u64) -> Result<EquationCount> {
    count_equation_with_cap(a, d, m, false, DEFAULT_TABLE_CAP)
}

/// As [`count_equation`], restricted to `gcd(x_1..x_k) = 1`.
pub fn count_primitive_equation(a: &[i64], d: u32, m: u64) -> Result<EquationCount> {
    count_equation_with_cap(a, d, m, true, DEFAULT_TABLE_CAP)
}

pub fn count_equation_with_cap(
    a: &[i64],
    d: u32,
    m: u64,
    primitive: bool,
    cap: u64,
) -> Result<EquationCount> {
    check_coefficients(a, d)?;
    let m = i64::try_from(m).map_err(|_| Error::Range(format!("M = {m} too large")))?;
    check_range(a, d, m)?;
    let split = a.len().div_ceil(2);
    check_table(2 * m as u64 + 1, split, cap)?;
    let range: Vec<i64> = (-m..=m).collect();
    let (left, right) = a.split_at(split);

    // sum -> gcd -> (count, count with all coordinates nonzero)
    let mut table: HashMap<i128, HashMap<u64, (u64, u64)>> = HashMap::new();
    for (s, g, nz) in half_sums(left, d, &range)? {
        let e = table.entry(s).or_default().entry(g).or_default();
        e.0 += 1;
        e.1 += nz as u64;
    }
    let scanned = half_sums(right, d, &range)?;
    let (total, nonzero) = scanned
        .par_iter()
        .map(|&(s, g, nz)| {
            let Some(by_gcd) = table.get(&-s) else {
                return (0, 0);
            };
            let mut t = 0u64;
            let mut n = 0u64;
            for (&gl, &(c, cnz)) in by_gcd {
                if primitive && gl.gcd(&g) != 1 {
                    continue;
                }
                t += c;
                if nz {
                    n += cnz;
                }
            }
            (t, n)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    Ok(EquationCount { total, nonzero })
}

/// `N_a(M, H) = #{x : M <= x_j <= 2M, |sum a_j x_j^d| <= H}`.
pub fn count_inequality(a: &[i64], d: u32, m: u64, h: f64) -> Result<u64> {
    count_inequality_with_cap(a, d, m, h, DEFAULT_TABLE_CAP)
}

const SCAN_CHUNK: usize = 4096;

pub fn count_inequality_with_cap(a: &[i64], d: u32, m: u64, h: f64, cap: u64) -> Result<u64> {
    check_coefficients(a, d)?;
    if m == 0 {
        return Err(Error::invalid("M must be positive"));
    }
    if h.is_nan() || h < 0.0 {
        return Err(Error::invalid("H must be nonnegative"));
    }
    let lo = i64::try_from(m).map_err(|_| Error::Range(format!("M = {m} too large")))?;
    let hi = lo
        .checked_mul(2)
        .ok_or_else(|| Error::Range(format!("M = {m} too large")))?;
    check_range(a, d, hi)?;
    let split = a.len().div_ceil(2);
    check_table(m + 1, split, cap)?;
    // the sums are integers, so |s| <= H iff |s| <= floor(H)
    let hf = h.floor();
    let h_int: i128 = if hf >= 1e36 { i128::MAX / 4 } else { hf as i128 };

    let range: Vec<i64> = (lo..=hi).collect();
    let (left, right) = a.split_at(split);
    let mut table: Vec<i128> = half_sums(left, d, &range)?.into_iter().map(|t| t.0).collect();
    table.par_sort_unstable();
    let mut scanned: Vec<i128> = half_sums(right, d, &range)?.into_iter().map(|t| t.0).collect();
    scanned.par_sort_unstable();

    // for increasing r the window [-H - r, H - r] in the table moves down
    let count = scanned
        .par_chunks(SCAN_CHUNK)
        .map(|chunk| {
            let mut start = table.partition_point(|&l| l < -h_int - chunk[0]);
            let mut end = table.partition_point(|&l| l <= h_int - chunk[0]);
            let mut n = 0u64;
            for &r in chunk {
                while start > 0 && table[start - 1] >= -h_int - r {
                    start -= 1;
                }
                while end > 0 && table[end - 1] > h_int - r {
                    end -= 1;
                }
                n += (end - start) as u64;
            }
            n
        })
        .sum();
    Ok(count)
}

/// The three exact counts of the Fejer/Cauchy-Schwarz chain
///
/// ```text
/// N_{(a1,-a1,a2,-a2)}(M, H)
///   <= (2 N_{(1,-1,1,-1)}(M, 2H/|a1|))^{1/2} (2 N_{(1,-1,1,-1)}(M, 2H/|a2|))^{1/2}
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FejerCheck {
    pub lhs: u64,
    pub n_a1: u64,
    pub n_a2: u64,
    pub bound: f64,
    pub holds: bool,
}

pub fn fejer_chain_check(a1: i64, a2: i64, d: u32, m: u64, h: f64) -> Result<FejerCheck> {
    if a1 == 0 || a1.unsigned_abs() > a2.unsigned_abs() {
        return Err(Error::invalid("need 0 < |a1| <= |a2|"));
    }
    let lhs = count_inequality(&[a1, -a1, a2, -a2], d, m, h)?;
    let unit = [1, -1, 1, -1];
    let n_a1 = count_inequality(&unit, d, m, 2.0 * h / a1.unsigned_abs() as f64)?;
    let n_a2 = count_inequality(&unit, d, m, 2.0 * h / a2.unsigned_abs() as f64)?;
    // compare squares in integers: lhs^2 <= 4 n_a1 n_a2
    let holds = (lhs as u128).pow(2) <= 4 * n_a1 as u128 * n_a2 as u128;
    let bound = (2.0 * n_a1 as f64).sqrt() * (2.0 * n_a2 as f64).sqrt();
    Ok(FejerCheck { lhs, n_a1, n_a2, bound, holds })
}

/// How the slack depends on `M` in an inequality template.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Slack {
    Fixed(f64),
    /// `H = delta M^d`.
    Relative(f64),
}

/// A family of counts indexed by `M`, for growth-exponent fits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CountTemplate {
    Equation { a: Vec<i64>, d: u32, primitive: bool },
    Inequality { a: Vec<i64>, d: u32, slack: Slack },
}

impl CountTemplate {
    pub fn count(&self, m: u64) -> Result<u64> {
        match self {
            CountTemplate::Equation { a, d, primitive } => {
                let c = count_equation_with_cap(a, *d, m, *primitive, DEFAULT_TABLE_CAP)?;
                Ok(c.total)
            }
            CountTemplate::Inequality { a, d, slack } => {
                let h = match *slack {
                    Slack::Fixed(h) => h,
                    Slack::Relative(delta) => delta * (m as f64).powi(*d as i32),
                };
                count_inequality(a, *d, m, h)
            }
        }
    }
}

/// Exact counts along a grid of `M` and the log-log slope through them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    pub counts: Vec<(u64, u64)>,
    pub fit: LogLogFit,
}

/// Least-squares slope of `log count` against `log M`. Zero counts are
/// dropped; fewer than three survivors is a fit error.
pub fn exponent_fit(template: &CountTemplate, grid: &[u64]) -> Result<ExponentFit> {
    check_grid(grid, 4)?;
    let counts: Vec<(u64, u64)> = grid
        .iter()
        .map(|&m| Ok((m, template.count(m)?)))
        .collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = counts.iter().map(|&(m, c)| (m as f64, c as f64)).collect();
    let fit = loglog(&points, 3)?;
    Ok(ExponentFit { counts, fit })
}
