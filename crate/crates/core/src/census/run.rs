//! Exhaustive and sampled censuses over `[M, 2M]^{l x k}`.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::arrange::{delta_profile_of, greedy_arrangement, max_full_minor, subsets};
use super::exact::{bareiss_rank, ExactInt};
use super::{dependency_coefficients, TupleMatrix};
use crate::error::{Error, Result};
use crate::fit::{check_grid, loglog, LogLogFit};

/// Largest number of tuples an exhaustive census will visit.
pub const DEFAULT_EXHAUSTIVE_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CensusMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

/// Which tuples are admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Distinctness {
    /// `l` rows, pairwise distinct.
    Rows,
    /// `2l` rows `(x; y)`: the `x` rows pairwise distinct and the `y` rows
    /// pairwise distinct.
    Halves,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusConfig {
    pub ell: usize,
    pub k: usize,
    pub d: u32,
    pub m: u64,
    pub mode: CensusMode,
    pub distinctness: Distinctness,
    /// Count full-rank tuples whose largest maximal minor is at most this.
    #[serde(serialize_with = "serialize_threshold")]
    pub threshold: Option<BigInt>,
    /// Verify that dependent rows need at least two basis rows whenever no
    /// two rows are proportional. Slow: runs the exact rational solver.
    pub check_dependencies: bool,
    pub exhaustive_cap: f64,
}

fn serialize_threshold<S: serde::Serializer>(
    v: &Option<BigInt>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(b) => s.serialize_some(&b.to_string()),
        None => s.serialize_none(),
    }
}

impl CensusConfig {
    pub fn new(ell: usize, k: usize, d: u32, m: u64) -> Self {
        CensusConfig {
            ell,
            k,
            d,
            m,
            mode: CensusMode::Exhaustive,
            distinctness: Distinctness::Rows,
            threshold: None,
            check_dependencies: false,
            exhaustive_cap: DEFAULT_EXHAUSTIVE_CAP,
        }
    }

    /// Number of matrix rows: `l`, or `2l` for the doubled census.
    pub fn rows(&self) -> usize {
        match self.distinctness {
            Distinctness::Rows => self.ell,
            Distinctness::Halves => 2 * self.ell,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ell < 1 || self.k < 1 || self.d < 1 || self.m < 1 {
            return Err(Error::invalid("census needs l, k, d, M >= 1"));
        }
        if let CensusMode::Sampled { samples, .. } = self.mode {
            if samples == 0 {
                return Err(Error::invalid("sampled census needs a positive sample count"));
            }
        }
        if let Some(t) = &self.threshold {
            if t.sign() == num_bigint::Sign::Minus {
                return Err(Error::invalid("determinant threshold must be nonnegative"));
            }
        }
        Ok(())
    }

    fn mode_label(&self) -> &'static str {
        match (self.mode, self.distinctness) {
            (CensusMode::Exhaustive, Distinctness::Rows) => "exhaustive",
            (CensusMode::Sampled { .. }, Distinctness::Rows) => "sampled",
            (CensusMode::Exhaustive, Distinctness::Halves) => "exhaustive-doubled",
            (CensusMode::Sampled { .. }, Distinctness::Halves) => "sampled-doubled",
        }
    }
}

/// Counts keyed by `(rank, dyadic class of Δ_top)`; the class is
/// `floor(log2 Δ_top)` for full-rank tuples and absent otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusHistogram {
    pub config: CensusConfig,
    #[serde(serialize_with = "serialize_bins")]
    pub bins: BTreeMap<(usize, Option<u32>), u64>,
    /// Tuples visited (exhaustive) or drawn (sampled).
    pub examined: u64,
    /// Tuples rejected by the distinctness rule.
    pub excluded: u64,
    /// Full-rank tuples with every maximal minor at most the threshold.
    pub le_threshold: Option<u64>,
    pub dependency_checked: u64,
    pub dependency_violations: u64,
}

fn serialize_bins<S: serde::Serializer>(
    bins: &BTreeMap<(usize, Option<u32>), u64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(bins.len()))?;
    for ((r, c), n) in bins {
        seq.serialize_element(&(r, c, n))?;
    }
    seq.end()
}

impl CensusHistogram {
    fn empty(config: &CensusConfig) -> Self {
        CensusHistogram {
            config: config.clone(),
            bins: BTreeMap::new(),
            examined: 0,
            excluded: 0,
            le_threshold: config.threshold.as_ref().map(|_| 0),
            dependency_checked: 0,
            dependency_violations: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (key, n) in other.bins {
            *self.bins.entry(key).or_insert(0) += n;
        }
        self.examined += other.examined;
        self.excluded += other.excluded;
        self.le_threshold = match (self.le_threshold, other.le_threshold) {
            (Some(a), Some(b)) => Some(a + b),
            (a, b) => a.or(b),
        };
        self.dependency_checked += other.dependency_checked;
        self.dependency_violations += other.dependency_violations;
        self
    }

    /// Admitted tuples.
    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }

    /// Admitted tuples of the given rank.
    pub fn rank_count(&self, r: usize) -> u64 {
        self.bins.iter().filter(|((rk, _), _)| *rk == r).map(|(_, n)| n).sum()
    }
}

/// Runs a census. Deterministic: exhaustive censuses visit every tuple,
/// sampled ones draw from counter-based streams fixed by the seed.
pub fn census(config: &CensusConfig) -> Result<CensusHistogram> {
    config.validate()?;
    let rows = config.rows();
    let k = config.k;
    let side = config.m + 1;
    let hi = 2 * config.m;
    // fast path certificate: products of two minors of size min(rows, k)
    // of matrices with entries below (2M)^d stay below 2^125
    let n = rows.min(k) as f64;
    let entry_bits = config.d as f64 * (hi as f64).log2();
    let fast = 2.0 * n * (entry_bits + 0.5 * n.log2()) < 125.0;
    if fast {
        run::<i128>(config, rows, k, side)
    } else {
        run::<BigInt>(config, rows, k, side)
    }
}

const BLOCK: u64 = 1 << 14;

fn run<T: ExactInt + Send + Sync + From<u64>>(
    config: &CensusConfig,
    rows: usize,
    k: usize,
    side: u64,
) -> Result<CensusHistogram> {
    let powers: Vec<T> = (config.m..=2 * config.m)
        .map(|v| pow::<T>(v, config.d))
        .collect();
    let ctx = Context {
        config,
        rows,
        k,
        powers: &powers,
        column_sets: subsets(k, rows),
        threshold: config.threshold.as_ref().map(|t| T::from_big(t)),
    };
    let cells = rows * k;
    match config.mode {
        CensusMode::Exhaustive => {
            let total = (side as f64).powi(cells as i32);
            if total > config.exhaustive_cap {
                return Err(Error::resource("exhaustive census", total, config.exhaustive_cap));
            }
            let total = side.pow(cells as u32);
            let blocks = total.div_ceil(BLOCK);
            Ok((0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut h = CensusHistogram::empty(config);
                    let start = b * BLOCK;
                    let end = (start + BLOCK).min(total);
                    let mut digits = decode(start, side, cells);
                    for _ in start..end {
                        ctx.visit(&digits, &mut h);
                        advance(&mut digits, side);
                    }
                    h
                })
                .reduce(|| CensusHistogram::empty(config), CensusHistogram::merge))
        }
        CensusMode::Sampled { samples, seed } => {
            let blocks = samples.div_ceil(BLOCK);
            Ok((0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(b);
                    let mut h = CensusHistogram::empty(config);
                    let count = BLOCK.min(samples - b * BLOCK);
                    let mut digits = vec![0u64; cells];
                    for _ in 0..count {
                        for v in digits.iter_mut() {
                            *v = rng.random_range(0..side);
                        }
                        ctx.visit(&digits, &mut h);
                    }
                    h
                })
                .reduce(|| CensusHistogram::empty(config), CensusHistogram::merge))
        }
    }
}

fn pow<T: ExactInt + From<u64>>(v: u64, d: u32) -> T {
    let base = T::from(v);
    let mut acc = T::unit();
    for _ in 0..d {
        acc = T::cross(&acc, &base, &T::nil(), &T::nil(), &T::unit());
    }
    acc
}

fn decode(mut index: u64, side: u64, cells: usize) -> Vec<u64> {
    let mut digits = vec![0; cells];
    for d in digits.iter_mut() {
        *d = index % side;
        index /= side;
    }
    digits
}

fn advance(digits: &mut [u64], side: u64) {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < side {
            return;
        }
        *d = 0;
    }
}

struct Context<'a, T> {
    config: &'a CensusConfig,
    rows: usize,
    k: usize,
    powers: &'a [T],
    column_sets: Vec<Vec<usize>>,
    /// `None` inside: threshold exceeds the fast integer range (always met).
    threshold: Option<Option<T>>,
}

impl<T: ExactInt> Context<'_, T> {
    /// `digits[j * k + i]` is `x_{j,i} - M`.
    fn visit(&self, digits: &[u64], h: &mut CensusHistogram) {
        h.examined += 1;
        if !self.admissible(digits) {
            h.excluded += 1;
            return;
        }
        let (rows, k) = (self.rows, self.k);
        let t_prime: Vec<T> = digits.iter().map(|&v| self.powers[v as usize].clone()).collect();
        let rank = bareiss_rank(t_prime.clone(), rows, k);
        let t = self.t_matrix(digits);
        assert_eq!(rank, bareiss_rank(t, rows, k), "rank(T) != rank(T')");
        if rank == rows {
            let perm = greedy_arrangement(&t_prime, rows, k).expect("full rank");
            let profile = delta_profile_of(&t_prime, rows, k, &perm);
            let top = profile.last().expect("at least one row");
            let class = top.bit_len() as u32 - 1;
            *h.bins.entry((rank, Some(class))).or_insert(0) += 1;
            if let Some(limit) = &self.threshold {
                let within = match limit {
                    Some(lim) => max_full_minor(&t_prime, rows, k, &self.column_sets) <= *lim,
                    None => true,
                };
                if within {
                    *h.le_threshold.as_mut().expect("threshold set") += 1;
                }
            }
        } else {
            *h.bins.entry((rank, None)).or_insert(0) += 1;
            if self.config.check_dependencies && rank > 0 {
                let tuple = self.tuple(digits);
                if !tuple.has_proportional_rows() {
                    h.dependency_checked += 1;
                    let dep = dependency_coefficients(&tuple.t_prime(), rank)
                        .expect("rank computed above");
                    if dep.nonzero_counts().iter().any(|&n| n < 2) {
                        h.dependency_violations += 1;
                    }
                }
            }
        }
    }

    fn row<'d>(&self, digits: &'d [u64], j: usize) -> &'d [u64] {
        &digits[j * self.k..(j + 1) * self.k]
    }

    fn admissible(&self, digits: &[u64]) -> bool {
        let distinct = |from: usize, to: usize| {
            (from..to).all(|a| (a + 1..to).all(|b| self.row(digits, a) != self.row(digits, b)))
        };
        match self.config.distinctness {
            Distinctness::Rows => distinct(0, self.rows),
            Distinctness::Halves => {
                distinct(0, self.config.ell) && distinct(self.config.ell, self.rows)
            }
        }
    }

    fn t_matrix(&self, digits: &[u64]) -> Vec<T> {
        let half = match self.config.distinctness {
            Distinctness::Rows => self.rows,
            Distinctness::Halves => self.config.ell,
        };
        let mut out = Vec::with_capacity(digits.len());
        for j in 0..self.rows {
            let base = (j / half) * half;
            for i in 0..self.k {
                let p = &self.powers[digits[j * self.k + i] as usize];
                if j == base {
                    out.push(p.clone());
                } else {
                    let b = &self.powers[digits[base * self.k + i] as usize];
                    // p - b
                    out.push(T::cross(p, &T::unit(), b, &T::unit(), &T::unit()));
                }
            }
        }
        out
    }

    fn tuple(&self, digits: &[u64]) -> TupleMatrix {
        let m = self.config.m;
        let rows: Vec<Vec<u64>> =
            (0..self.rows).map(|j| self.row(digits, j).iter().map(|v| v + m).collect()).collect();
        TupleMatrix::new(self.config.d, rows).expect("entries are positive")
    }
}

/// Writes the histogram as CSV with columns
/// `r, delta_class, count, ell, k, d, M, D_threshold, mode, seed`.
/// Rank-deficient bins have `delta_class = na`; with a threshold an extra
/// row `delta_class = le_D` holds the count of full-rank tuples whose
/// maximal minors are all at most `D`.
pub fn write_census_csv<W: Write>(hist: &CensusHistogram, header: bool, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    if header {
        w.write_record(["r", "delta_class", "count", "ell", "k", "d", "M", "D_threshold", "mode", "seed"])
            .map_err(io)?;
    }
    let c = &hist.config;
    let threshold = c.threshold.as_ref().map(|t| t.to_string()).unwrap_or_default();
    let seed = match c.mode {
        CensusMode::Sampled { seed, .. } => seed.to_string(),
        CensusMode::Exhaustive => String::new(),
    };
    let mut emit = |r: String, class: String, count: u64| {
        w.write_record([
            r,
            class,
            count.to_string(),
            c.ell.to_string(),
            c.k.to_string(),
            c.d.to_string(),
            c.m.to_string(),
            threshold.clone(),
            c.mode_label().to_string(),
            seed.clone(),
        ])
    };
    for (&(r, class), &n) in &hist.bins {
        let class = class.map_or_else(|| "na".to_string(), |v| v.to_string());
        emit(r.to_string(), class, n).map_err(io)?;
    }
    if let Some(n) = hist.le_threshold {
        emit(c.rows().to_string(), "le_D".to_string(), n).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Which census counts enter an exponent fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSelector {
    /// All admitted tuples.
    Total,
    /// Tuples of one rank.
    Rank(usize),
    /// One `(rank, class)` bin of full-rank tuples.
    FullRankClass(u32),
    /// Full-rank tuples within the determinant threshold.
    WithinThreshold,
}

impl BinSelector {
    fn select(&self, h: &CensusHistogram) -> u64 {
        match *self {
            BinSelector::Total => h.total(),
            BinSelector::Rank(r) => h.rank_count(r),
            BinSelector::FullRankClass(c) => {
                h.bins.get(&(h.config.rows(), Some(c))).copied().unwrap_or(0)
            }
            BinSelector::WithinThreshold => h.le_threshold.unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusExponentFit {
    pub counts: Vec<(u64, u64)>,
    pub fit: LogLogFit,
}

/// Census at each `M` of the grid (other settings from `base`) and the
/// log-log slope of the selected count. Empty bins are dropped.
pub fn census_exponent_fit(
    base: &CensusConfig,
    grid: &[u64],
    selector: BinSelector,
) -> Result<CensusExponentFit> {
    check_grid(grid, 4)?;
    let counts: Vec<(u64, u64)> = grid
        .iter()
        .map(|&m| {
            let cfg = CensusConfig { m, ..base.clone() };
            Ok((m, selector.select(&census(&cfg)?)))
        })
        .collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = counts.iter().map(|&(m, c)| (m as f64, c as f64)).collect();
    Ok(CensusExponentFit { fit: loglog(&points, 3)?, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::{analyze, TupleMatrix};

    /// Reference census through the public per-tuple analysis.
    fn naive(config: &CensusConfig) -> BTreeMap<(usize, Option<u32>), u64> {
        let rows = config.rows();
        let k = config.k;
        let side = config.m + 1;
        let mut out = BTreeMap::new();
        for idx in 0..side.pow((rows * k) as u32) {
            let digits = decode(idx, side, rows * k);
            let rs: Vec<Vec<u64>> = (0..rows)
                .map(|j| digits[j * k..(j + 1) * k].iter().map(|v| v + config.m).collect())
                .collect();
            let t = match config.distinctness {
                Distinctness::Rows => TupleMatrix::new(config.d, rs).unwrap(),
                Distinctness::Halves => {
                    let x = TupleMatrix::new(config.d, rs[..config.ell].to_vec()).unwrap();
                    let y = TupleMatrix::new(config.d, rs[config.ell..].to_vec()).unwrap();
                    TupleMatrix::doubled(&x, &y).unwrap()
                }
            };
            if !t.rows_distinct() {
                continue;
            }
            let rec = analyze(&t).unwrap();
            let class = rec.delta_profile.map(|p| p.last().unwrap().bits() as u32 - 1);
            *out.entry((rec.rank, class)).or_insert(0) += 1;
        }
        out
    }

    #[test]
    fn matches_per_tuple_analysis() {
        for (ell, k, d, m) in [(2, 2, 2, 1), (2, 3, 2, 2), (3, 3, 2, 1), (2, 2, 3, 3), (3, 2, 2, 2)] {
            let cfg = CensusConfig::new(ell, k, d, m);
            assert_eq!(census(&cfg).unwrap().bins, naive(&cfg), "l={ell} k={k} d={d} M={m}");
        }
        let mut dbl = CensusConfig::new(1, 2, 2, 2);
        dbl.distinctness = Distinctness::Halves;
        let h = census(&dbl).unwrap();
        assert_eq!(h.bins, naive(&dbl));
        assert_eq!(h.examined, 81);
        assert_eq!(h.excluded, 0);
    }

    #[test]
    fn bigint_path_agrees() {
        let cfg = CensusConfig::new(2, 2, 2, 2);
        let fast = run::<i128>(&cfg, 2, 2, 3).unwrap();
        let slow = run::<BigInt>(&cfg, 2, 2, 3).unwrap();
        assert_eq!(fast, slow);
        // large degree forces the unbounded path
        let big = CensusConfig::new(2, 2, 40, 1);
        assert_eq!(census(&big).unwrap().bins, naive(&big));
    }

    #[test]
    fn small_exhaustive_counts() {
        let h = census(&CensusConfig::new(2, 2, 2, 1)).unwrap();
        assert_eq!(h.examined, 16);
        assert_eq!(h.excluded, 4);
        // (1,1) and (2,2) are the only proportional distinct pair
        assert_eq!(h.rank_count(1), 2);
        assert_eq!(h.rank_count(2), 10);
    }

    #[test]
    fn threshold_counts() {
        let mut cfg = CensusConfig::new(2, 2, 2, 1);
        cfg.threshold = Some(BigInt::from(0));
        assert_eq!(census(&cfg).unwrap().le_threshold, Some(0));
        cfg.threshold = Some(BigInt::from(12));
        // |det| over ordered pairs of rows from {1,2}^2 with det != 0:
        // 3 for (1,1)/(1,2)-type pairs, 12 for (1,2)/(2,1), and so on
        let h = census(&cfg).unwrap();
        let mut expect = 0;
        let pts = [[1i64, 1], [1, 2], [2, 1], [2, 2]];
        for a in pts {
            for b in pts {
                let det = (a[0].pow(2) * b[1].pow(2) - a[1].pow(2) * b[0].pow(2)).abs();
                if a != b && det != 0 && det <= 12 {
                    expect += 1;
                }
            }
        }
        assert_eq!(h.le_threshold, Some(expect));
        cfg.threshold = Some(BigInt::from(10).pow(60));
        assert_eq!(census(&cfg).unwrap().le_threshold, Some(10));
    }

    #[test]
    fn sampled_is_reproducible() {
        let mut cfg = CensusConfig::new(3, 3, 2, 20);
        cfg.mode = CensusMode::Sampled { samples: 30_000, seed: 5 };
        let a = census(&cfg).unwrap();
        let b = census(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.examined, 30_000);
        cfg.mode = CensusMode::Sampled { samples: 30_000, seed: 6 };
        assert_ne!(census(&cfg).unwrap().bins, a.bins);
    }

    #[test]
    fn dependency_check_runs() {
        let mut cfg = CensusConfig::new(3, 2, 2, 2);
        cfg.check_dependencies = true;
        let h = census(&cfg).unwrap();
        assert!(h.dependency_checked > 0);
        assert_eq!(h.dependency_violations, 0);
    }

    #[test]
    fn resource_cap() {
        let err = census(&CensusConfig::new(3, 3, 2, 30)).unwrap_err();
        assert!(err.is_resource());
    }

    #[test]
    fn csv_layout() {
        let mut cfg = CensusConfig::new(2, 2, 2, 1);
        cfg.threshold = Some(BigInt::from(12));
        let h = census(&cfg).unwrap();
        let mut buf = Vec::new();
        write_census_csv(&h, true, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "r,delta_class,count,ell,k,d,M,D_threshold,mode,seed");
        assert!(lines[1].starts_with("1,na,2,2,2,2,1,12,exhaustive,"));
        assert!(lines.last().unwrap().starts_with("2,le_D,"));
        let summed: u64 = lines[1..lines.len() - 1]
            .iter()
            .map(|l| l.split(',').nth(2).unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(summed, h.total());
    }

    #[test]
    fn full_rank_dominates_growth() {
        let base = CensusConfig::new(2, 2, 2, 1);
        let grid = [8, 12, 16, 24, 32];
        let full = census_exponent_fit(&base, &grid, BinSelector::Rank(2)).unwrap();
        let low = census_exponent_fit(&base, &grid, BinSelector::Rank(1)).unwrap();
        assert!((full.fit.slope - 4.0).abs() < 0.3, "{:?}", full.fit);
        assert!(low.fit.slope < full.fit.slope - 1.0, "{:?}", low.fit);
        assert!(census_exponent_fit(&base, &[2, 4, 6], BinSelector::Total).is_err());
    }
}
