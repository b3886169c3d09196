//! The smoothed correlation
//!
//! ```text
//! T*_l = sum over pairwise distinct x_1..x_l in Z_{>0}^k of
//!        prod_{j>=2} W_j((q(x_j) - q(x_1)) M^{k-d}) * prod_j Psi_j(x_j / M)
//! ```
//!
//! and its Hardy-Littlewood expectation `M^k prod_j W_j^(0) c(alpha)`, where
//! `c(alpha)` is the integral of `prod_j Psi_j(x_j)` over the surface
//! `q(x_j) = q(x_1)`, `j >= 2`, estimated by thin-shell Monte Carlo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::form::DiagonalForm;
use crate::quad::adaptive_simpson;

/// Even, nonnegative, compactly supported window weight `W_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowWeight {
    /// `exp(1 / ((u/w)^2 - 1))` on `|u| < w`.
    Bump { half_width: f64 },
    /// Equal to one on `|u| <= inner`, smooth decay to zero at `outer`.
    Plateau { inner: f64, outer: f64 },
}

impl WindowWeight {
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.abs();
        match *self {
            WindowWeight::Bump { half_width } => bump(u / half_width),
            WindowWeight::Plateau { inner, outer } => {
                if u <= inner {
                    1.0
                } else if u >= outer {
                    0.0
                } else {
                    smooth_step((outer - u) / (outer - inner))
                }
            }
        }
    }

    /// `W(u) = 0` for `|u| >= support()`.
    pub fn support(&self) -> f64 {
        match *self {
            WindowWeight::Bump { half_width } => half_width,
            WindowWeight::Plateau { outer, .. } => outer,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            WindowWeight::Bump { half_width } => half_width > 0.0 && half_width.is_finite(),
            WindowWeight::Plateau { inner, outer } => {
                inner >= 0.0 && outer > inner && outer.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("bad window weight {self:?}")))
        }
    }

    /// `W^(0) = integral of W`, by adaptive quadrature.
    fn integral(&self) -> f64 {
        let s = self.support();
        let f = |u: f64| self.eval(u);
        match *self {
            WindowWeight::Bump { .. } => adaptive_simpson(&f, -s, s, 1e-14 * s),
            WindowWeight::Plateau { inner, outer } => {
                let tail = adaptive_simpson(&f, inner, outer, 1e-14 * outer);
                2.0 * (inner + tail)
            }
        }
    }
}

/// Weight `Psi_j` on the variables, supported in `[1, 2]^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableWeight {
    /// `prod_i exp(1 / ((2 x_i - 3)^2 - 1))` on `(1, 2)^k`.
    Bump,
    /// Indicator of `[1, 2]^k`.
    Uniform,
}

impl VariableWeight {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            VariableWeight::Bump => x.iter().map(|&xi| bump(2.0 * xi - 3.0)).product(),
            VariableWeight::Uniform => {
                if x.iter().all(|&xi| (1.0..=2.0).contains(&xi)) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 / (t * t - 1.0)).exp()
    } else {
        0.0
    }
}

fn smooth_step(t: f64) -> f64 {
    let h = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let a = h(t);
    a / (a + h(1.0 - t))
}

/// The weights `W_2..W_l` and `Psi_1..Psi_l` with `W_j^(0)` precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingKernels {
    windows: Vec<WindowWeight>,
    variables: Vec<VariableWeight>,
    window_integrals: Vec<f64>,
}

impl SmoothingKernels {
    /// `windows` holds `W_2..W_l`, `variables` holds `Psi_1..Psi_l`.
    pub fn new(windows: Vec<WindowWeight>, variables: Vec<VariableWeight>) -> Result<Self> {
        if windows.is_empty() || variables.len() != windows.len() + 1 {
            return Err(Error::invalid(
                "need l-1 window weights and l variable weights, l >= 2",
            ));
        }
        for w in &windows {
            w.validate()?;
        }
        let window_integrals = windows.iter().map(WindowWeight::integral).collect();
        Ok(SmoothingKernels { windows, variables, window_integrals })
    }

    /// Canonical bumps: `W_j` of half-width `w`, `Psi_j` the product bump.
    pub fn canonical(order: usize, half_width: f64) -> Result<Self> {
        if order < 2 {
            return Err(Error::invalid("order must be >= 2"));
        }
        SmoothingKernels::new(
            vec![WindowWeight::Bump { half_width }; order - 1],
            vec![VariableWeight::Bump; order],
        )
    }

    pub fn order(&self) -> usize {
        self.variables.len()
    }

    pub fn windows(&self) -> &[WindowWeight] {
        &self.windows
    }

    pub fn variables(&self) -> &[VariableWeight] {
        &self.variables
    }

    /// `W_j^(0)` for `j = 2..l`.
    pub fn window_integrals(&self) -> &[f64] {
        &self.window_integrals
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order != self.order() {
            return Err(Error::invalid(format!(
                "kernels are for order {}, requested {order}",
                self.order()
            )));
        }
        Ok(())
    }
}

/// Bound on the number of lattice points `x in [M, 2M]^k` considered.
pub const SMOOTH_POINT_CAP: f64 = 1e7;

const CHUNK: usize = 256;

/// `T*_l(M; alpha)` by sorting the lattice points of `[M, 2M]^k` by `q`
/// and sliding a window of half-width `w M^{d-k}`.
pub fn smoothed_correlation(
    form: &DiagonalForm,
    m: u64,
    kernels: &SmoothingKernels,
    order: usize,
) -> Result<f64> {
    kernels.check_order(order)?;
    if m == 0 {
        return Err(Error::invalid("M must be positive"));
    }
    let k = form.dim();
    let projected = ((m + 1) as f64).powi(k as i32) * order as f64;
    if projected > SMOOTH_POINT_CAP {
        return Err(Error::resource("smoothed correlation", projected, SMOOTH_POINT_CAP));
    }
    let points = weighted_points(form, m, kernels)?;
    let scale = (m as f64).powi(k as i32 - form.degree() as i32);
    let reach = kernels
        .windows
        .iter()
        .map(WindowWeight::support)
        .fold(0.0, f64::max)
        / scale;

    let partial: Vec<f64> = (0..points.len())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut sum = 0.0;
            let mut scratch = Vec::new();
            for &a in chunk {
                sum += first_point_contribution(&points, a, reach, scale, kernels, &mut scratch);
            }
            sum
        })
        .collect();
    // fixed chunk order
    Ok(partial.iter().sum())
}

struct WeightedPoint {
    q: f64,
    /// `Psi_j(x / M)` for `j = 1..l`.
    psi: Vec<f64>,
}

fn weighted_points(
    form: &DiagonalForm,
    m: u64,
    kernels: &SmoothingKernels,
) -> Result<Vec<WeightedPoint>> {
    let k = form.dim();
    let mut x = vec![m; k];
    let mut scaled = vec![0.0; k];
    let mut points = Vec::new();
    loop {
        for (s, &xi) in scaled.iter_mut().zip(&x) {
            *s = xi as f64 / m as f64;
        }
        let psi: Vec<f64> = kernels.variables.iter().map(|v| v.eval(&scaled)).collect();
        if psi.iter().any(|&p| p > 0.0) {
            points.push(WeightedPoint { q: form.eval(&x)?, psi });
        }
        let mut i = 0;
        loop {
            if i == k {
                points.sort_by(|a, b| a.q.total_cmp(&b.q));
                return Ok(points);
            }
            x[i] += 1;
            if x[i] <= 2 * m {
                break;
            }
            x[i] = m;
            i += 1;
        }
    }
}

fn first_point_contribution(
    points: &[WeightedPoint],
    a: usize,
    reach: f64,
    scale: f64,
    kernels: &SmoothingKernels,
    scratch: &mut Vec<Vec<(usize, f64)>>,
) -> f64 {
    let first = &points[a];
    if first.psi[0] == 0.0 {
        return 0.0;
    }
    let lo = points.partition_point(|p| p.q < first.q - reach);
    let hi = points.partition_point(|p| p.q <= first.q + reach);
    // per position j >= 2, the candidates with nonzero weight
    scratch.resize(kernels.windows.len(), Vec::new());
    for (j, cands) in scratch.iter_mut().enumerate() {
        cands.clear();
        let w = &kernels.windows[j];
        for (b, p) in points.iter().enumerate().take(hi).skip(lo) {
            if b == a || p.psi[j + 1] == 0.0 {
                continue;
            }
            let weight = w.eval((p.q - first.q) * scale) * p.psi[j + 1];
            if weight != 0.0 {
                cands.push((b, weight));
            }
        }
    }
    let mut chosen = vec![a];
    first.psi[0] * distinct_product_sum(scratch, &mut chosen)
}

fn distinct_product_sum(cands: &[Vec<(usize, f64)>], chosen: &mut Vec<usize>) -> f64 {
    let j = chosen.len() - 1;
    if j == cands.len() {
        return 1.0;
    }
    let mut sum = 0.0;
    for &(b, w) in &cands[j] {
        if chosen.contains(&b) {
            continue;
        }
        chosen.push(b);
        sum += w * distinct_product_sum(cands, chosen);
        chosen.pop();
    }
    sum
}

/// Sample size and seed for the thin-shell estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShellOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for ShellOptions {
    fn default() -> Self {
        ShellOptions { samples: 1_000_000, seed: 0x5eed }
    }
}

/// Hardy-Littlewood expectation with its Monte Carlo error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HlEstimate {
    /// `M^k prod_j W_j^(0) c(alpha)`.
    pub value: f64,
    pub stderr: f64,
    /// Extrapolated `c(alpha)`.
    pub surface_constant: f64,
    pub surface_stderr: f64,
    /// Shell estimates of `c(alpha)` at the two widths, larger first.
    pub shell_estimates: [f64; 2],
    pub epsilons: [f64; 2],
    pub hits: [u64; 2],
}

/// Fewest shell hits at the larger width accepted by [`hl_expectation`].
pub const MIN_SHELL_HITS: u64 = 100;

/// Hardy-Littlewood expectation of [`smoothed_correlation`].
///
/// `c(alpha)` is estimated on the shells `|q(x_j) - q(x_1)| <= eps` for the
/// two given widths, each normalized by `(2 eps)^{l-1}`, and extrapolated
/// linearly in `eps^2` to zero width. Both widths use the same samples.
pub fn hl_expectation(
    form: &DiagonalForm,
    m: u64,
    kernels: &SmoothingKernels,
    order: usize,
    epsilons: (f64, f64),
    opts: ShellOptions,
) -> Result<HlEstimate> {
    kernels.check_order(order)?;
    let k = form.dim();
    if order * k > 16 {
        return Err(Error::invalid(format!("l*k = {} exceeds 16", order * k)));
    }
    let (e_big, e_small) = if epsilons.0 >= epsilons.1 {
        epsilons
    } else {
        (epsilons.1, epsilons.0)
    };
    if !(e_small > 0.0 && e_big > e_small && e_big.is_finite()) {
        return Err(Error::invalid("shell widths must be positive and distinct"));
    }
    if opts.samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let stats = shell_samples(form, kernels, [e_big, e_small], opts);
    if stats.hits[0] < MIN_SHELL_HITS {
        return Err(Error::Precision(format!(
            "{} shell hits at eps = {e_big}; increase the sample size or the widths",
            stats.hits[0]
        )));
    }
    let n = opts.samples as f64;
    let mean = |s: f64| s / n;
    let se = |s: f64, s2: f64| ((s2 / n - (s / n).powi(2)).max(0.0) / (n - 1.0)).sqrt();
    let surface = mean(stats.extrapolated.0);
    let surface_se = se(stats.extrapolated.0, stats.extrapolated.1);
    let prefactor =
        (m as f64).powi(k as i32) * kernels.window_integrals.iter().product::<f64>();
    Ok(HlEstimate {
        value: prefactor * surface,
        stderr: prefactor * surface_se,
        surface_constant: surface,
        surface_stderr: surface_se,
        shell_estimates: [mean(stats.shells[0]), mean(stats.shells[1])],
        epsilons: [e_big, e_small],
        hits: stats.hits,
    })
}

/// Picks `(2 eps, eps)` so that about `target_hits` samples land in the
/// narrower shell, from a pilot run.
pub fn shell_schedule(
    form: &DiagonalForm,
    kernels: &SmoothingKernels,
    opts: ShellOptions,
    target_hits: u64,
) -> Result<(f64, f64)> {
    let order = kernels.order();
    let pilot_eps = 0.05 * form.alpha().iter().sum::<f64>();
    let pilot = ShellOptions { samples: opts.samples.clamp(2, 200_000), seed: opts.seed ^ 0x9e37_79b9 };
    let stats = shell_samples(form, kernels, [pilot_eps, pilot_eps / 2.0], pilot);
    if stats.hits[0] == 0 {
        return Err(Error::Precision("pilot run found no shell hits".into()));
    }
    let frac = stats.hits[0] as f64 / pilot.samples as f64;
    let want = target_hits as f64 / opts.samples as f64;
    let small = pilot_eps * (want / frac).powf(1.0 / (order as f64 - 1.0));
    Ok((2.0 * small, small))
}

struct ShellStats {
    /// sums of the per-sample shell estimators at each width
    shells: [f64; 2],
    /// sum and sum of squares of the extrapolated per-sample estimator
    extrapolated: (f64, f64),
    hits: [u64; 2],
}

const SHELL_CHUNK: usize = 1 << 14;

fn shell_samples(
    form: &DiagonalForm,
    kernels: &SmoothingKernels,
    eps: [f64; 2],
    opts: ShellOptions,
) -> ShellStats {
    let order = kernels.order();
    let k = form.dim();
    let d = form.degree() as i32;
    let norm = [
        (2.0 * eps[0]).powi(order as i32 - 1),
        (2.0 * eps[1]).powi(order as i32 - 1),
    ];
    let (e0, e1) = (eps[0] * eps[0], eps[1] * eps[1]);
    let chunks = opts.samples.div_ceil(SHELL_CHUNK);
    let parts: Vec<ShellStats> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(c as u64);
            let n = SHELL_CHUNK.min(opts.samples - c * SHELL_CHUNK);
            let mut x = vec![0.0; k];
            let mut qs = vec![0.0; order];
            let mut out = ShellStats { shells: [0.0; 2], extrapolated: (0.0, 0.0), hits: [0; 2] };
            for _ in 0..n {
                let mut weight = 1.0;
                for (j, q) in qs.iter_mut().enumerate() {
                    for xi in x.iter_mut() {
                        *xi = 1.0 + rng.random::<f64>();
                    }
                    weight *= kernels.variables[j].eval(&x);
                    *q = form.alpha().iter().zip(&x).map(|(a, xi)| a * xi.powi(d)).sum();
                }
                let spread = qs[1..].iter().map(|q| (q - qs[0]).abs()).fold(0.0, f64::max);
                let mut g = [0.0; 2];
                for w in 0..2 {
                    if spread <= eps[w] {
                        out.hits[w] += 1;
                        g[w] = weight / norm[w];
                        out.shells[w] += g[w];
                    }
                }
                let z = (e0 * g[1] - e1 * g[0]) / (e0 - e1);
                out.extrapolated.0 += z;
                out.extrapolated.1 += z * z;
            }
            out
        })
        .collect();
    parts.into_iter().fold(
        ShellStats { shells: [0.0; 2], extrapolated: (0.0, 0.0), hits: [0; 2] },
        |mut acc, p| {
            for w in 0..2 {
                acc.shells[w] += p.shells[w];
                acc.hits[w] += p.hits[w];
            }
            acc.extrapolated.0 += p.extrapolated.0;
            acc.extrapolated.1 += p.extrapolated.1;
            acc
        },
    )
}
