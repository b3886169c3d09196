//! Exact integer analysis of the matrices built from tuples of argument
//! vectors `x_1..x_l in [M, 2M]^k`:
//!
//! ```text
//! T  = ( x_{1,i}^d ; x_{j,i}^d - x_{1,i}^d  (j >= 2) )
//! T' = ( x_{j,i}^d )
//! ```
//!
//! rank, minors, optimal arrangement and the Δ profile, dependency
//! coefficients, the three-row column data, and censuses binned by rank and
//! dyadic size of the top minor. Nothing here uses floating point.

mod arrange;
mod exact;
mod run;

pub use arrange::{
    delta_profile, dependency_coefficients, is_optimally_arranged, optimally_arrange, Arrangement,
    Dependency,
};
pub use exact::{determinant, determinant_unbounded, exact_rank, minor_det, IntMatrix};
pub use run::{
    census, census_exponent_fit, write_census_csv, BinSelector, CensusConfig, CensusExponentFit,
    CensusHistogram, CensusMode, Distinctness, DEFAULT_EXHAUSTIVE_CAP,
};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::error::{Error, Result};

/// `l` rows of `k` positive integers and the degree `d`. A doubled tuple
/// `(x; y)` keeps the row index where the `y` half starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleMatrix {
    degree: u32,
    rows: Vec<Vec<u64>>,
    split: Option<usize>,
}

impl TupleMatrix {
    pub fn new(degree: u32, rows: Vec<Vec<u64>>) -> Result<Self> {
        if degree < 1 {
            return Err(Error::invalid("degree must be positive"));
        }
        let k = rows.first().map_or(0, Vec::len);
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("need at least one row, all of the same positive length"));
        }
        if rows.iter().flatten().any(|&v| v == 0) {
            return Err(Error::invalid("entries must be positive"));
        }
        Ok(TupleMatrix { degree, rows, split: None })
    }

    /// The `2l`-row tuple `(x; y)`.
    pub fn doubled(x: &TupleMatrix, y: &TupleMatrix) -> Result<Self> {
        if x.degree != y.degree || x.k() != y.k() || x.ell() != y.ell() {
            return Err(Error::invalid("halves must share degree and shape"));
        }
        let mut rows = x.rows.clone();
        rows.extend(y.rows.iter().cloned());
        Ok(TupleMatrix { degree: x.degree, rows, split: Some(x.ell()) })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Number of rows.
    pub fn ell(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn split(&self) -> Option<usize> {
        self.split
    }

    pub fn column(&self, i: usize) -> Vec<u64> {
        self.rows.iter().map(|r| r[i]).collect()
    }

    fn power(&self, v: u64) -> BigInt {
        num_traits::pow(BigInt::from(v), self.degree as usize)
    }

    /// `T'`: every row pure `d`-th powers.
    pub fn t_prime(&self) -> IntMatrix {
        let rows: Vec<Vec<BigInt>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&v| self.power(v)).collect())
            .collect();
        int_matrix(rows)
    }

    /// `T`: the first row of each half as powers, the others as differences
    /// from it.
    pub fn t_matrix(&self) -> IntMatrix {
        let starts: Vec<usize> = match self.split {
            Some(s) => vec![0, s],
            None => vec![0],
        };
        let rows: Vec<Vec<BigInt>> = (0..self.ell())
            .map(|j| {
                let base = *starts.iter().filter(|&&s| s <= j).max().unwrap();
                (0..self.k())
                    .map(|i| {
                        let p = self.power(self.rows[j][i]);
                        if j == base {
                            p
                        } else {
                            p - self.power(self.rows[base][i])
                        }
                    })
                    .collect()
            })
            .collect();
        int_matrix(rows)
    }

    /// True when rows are pairwise distinct (within each half for a doubled
    /// tuple).
    pub fn rows_distinct(&self) -> bool {
        let halves: Vec<&[Vec<u64>]> = match self.split {
            Some(s) => vec![&self.rows[..s], &self.rows[s..]],
            None => vec![&self.rows[..]],
        };
        halves.iter().all(|h| {
            (0..h.len()).all(|a| (a + 1..h.len()).all(|b| h[a] != h[b]))
        })
    }

    /// True when some two rows are proportional.
    pub fn has_proportional_rows(&self) -> bool {
        let n = self.ell();
        (0..n).any(|a| {
            (a + 1..n).any(|b| {
                let (ra, rb) = (&self.rows[a], &self.rows[b]);
                // ra = (p/q) rb  <=>  ra_i * rb_0 = rb_i * ra_0 for all i
                ra.iter()
                    .zip(rb)
                    .all(|(&u, &v)| u as u128 * rb[0] as u128 == v as u128 * ra[0] as u128)
            })
        })
    }
}

fn int_matrix(rows: Vec<Vec<BigInt>>) -> IntMatrix {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    IntMatrix::new(r, c, rows.into_iter().flatten().collect()).expect("rectangular")
}

/// `(T, T')` for a tuple.
pub fn build_matrices(x: &TupleMatrix) -> (IntMatrix, IntMatrix) {
    (x.t_matrix(), x.t_prime())
}

/// Shape of one column of a three-row tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnClass {
    /// All three entries distinct.
    Typical,
    /// All three entries equal.
    Constant,
    /// Exactly two entries equal.
    Degenerate,
}

pub fn classify_column(col: [u64; 3]) -> ColumnClass {
    let [a, b, c] = col;
    if a == b && b == c {
        ColumnClass::Constant
    } else if a != b && b != c && a != c {
        ColumnClass::Typical
    } else {
        ColumnClass::Degenerate
    }
}

/// `q = (x_3^d - x_1^d) / (x_2^d - x_1^d)` in lowest terms.
pub fn column_ratio(col: [u64; 3], d: u32) -> Result<BigRational> {
    let [a, b, c] = col;
    if a == b {
        return Err(Error::DegenerateColumn(format!(
            "x_2 = x_1 = {a}, ratio undefined"
        )));
    }
    let p = |v: u64| num_traits::pow(BigInt::from(v), d as usize);
    // BigRational::new reduces and makes the denominator positive
    Ok(BigRational::new(p(c) - p(a), p(b) - p(a)))
}

/// The arrangement of a three-row tuple used for full-rank counting: the
/// first column carries the largest difference between two entries of a
/// column, rows are relabelled so that
/// `|x_21 - x_31| <= |x_11 - x_31| <= |x_11 - x_21|`, and the next two
/// columns maximize `|T~^{1,i}_{2,3}|` and `|T~^{1,2,i}_{1,2,3}|`, where
/// `T~` is `T` of the relabelled tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeRowArrangement {
    /// `row_order[j]` is the original row now in position `j`.
    pub row_order: [usize; 3],
    pub column_order: Vec<usize>,
    /// `|x_21 - x_11|`.
    pub x: u64,
    /// `|x_11 - x_31|`.
    pub y: u64,
    /// `|x_21 - x_31|`.
    pub z: u64,
    /// `|T~^{1,2}_{2,3}|`, when `k >= 2`.
    #[serde(serialize_with = "serialize_opt_big")]
    pub delta: Option<BigInt>,
    /// `|det T~_1|` on the first three columns, when `k >= 3`.
    #[serde(serialize_with = "serialize_opt_big")]
    pub det_t1: Option<BigInt>,
}

fn serialize_opt_big<S: serde::Serializer>(
    v: &Option<BigInt>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(b) => s.serialize_some(&b.to_string()),
        None => s.serialize_none(),
    }
}

pub fn three_row_arrangement(x: &TupleMatrix) -> Result<ThreeRowArrangement> {
    if x.ell() != 3 {
        return Err(Error::invalid("three-row arrangement needs exactly three rows"));
    }
    let k = x.k();
    let rows = x.rows();
    let diff = |i: usize, a: usize, b: usize| rows[a][i].abs_diff(rows[b][i]);
    const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    let mut best = (0u64, 0usize, (0usize, 1usize));
    for i in 0..k {
        for &(a, b) in &PAIRS {
            let v = diff(i, a, b);
            if v > best.0 {
                best = (v, i, (a, b));
            }
        }
    }
    let (_, first, (p, q)) = best;
    let s = 3 - p - q;
    let (r1, r2) = if diff(first, q, s) > diff(first, p, s) { (q, p) } else { (p, q) };
    let row_order = [r1, r2, s];
    let relabelled = TupleMatrix::new(
        x.degree(),
        row_order.iter().map(|&j| rows[j].clone()).collect(),
    )?;
    let t = relabelled.t_matrix();

    let mut column_order: Vec<usize> = (0..k).collect();
    column_order.swap(0, first);
    let mut delta = None;
    let mut det_t1 = None;
    if k >= 2 {
        let pick = pick_column(&column_order, 1, |c| {
            minor_det(&t, &[1, 2], &[column_order[0], c]).expect("indices in range")
        });
        column_order.swap(1, pick);
        delta = Some(abs(minor_det(&t, &[1, 2], &column_order[..2])?));
    }
    if k >= 3 {
        let pick = pick_column(&column_order, 2, |c| {
            minor_det(&t, &[0, 1, 2], &[column_order[0], column_order[1], c]).expect("indices in range")
        });
        column_order.swap(2, pick);
        det_t1 = Some(abs(minor_det(&t, &[0, 1, 2], &column_order[..3])?));
    }
    let v = |j: usize| relabelled.rows()[j][first];
    Ok(ThreeRowArrangement {
        row_order,
        x: v(1).abs_diff(v(0)),
        y: v(0).abs_diff(v(2)),
        z: v(1).abs_diff(v(2)),
        column_order,
        delta,
        det_t1,
    })
}

/// Position in `order[from..]` of the column maximizing `|f|`, ties to the
/// smallest original index.
fn pick_column(order: &[usize], from: usize, f: impl Fn(usize) -> BigInt) -> usize {
    let mut best: Option<(BigInt, usize)> = None;
    for pos in from..order.len() {
        let v = abs(f(order[pos]));
        let better = match &best {
            None => true,
            Some((bv, bp)) => v > *bv || (v == *bv && order[pos] < order[*bp]),
        };
        if better {
            best = Some((v, pos));
        }
    }
    best.expect("nonempty").1
}

fn abs(v: BigInt) -> BigInt {
    if v.sign() == num_bigint::Sign::Minus {
        -v
    } else {
        v
    }
}

/// Everything recorded about one tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusRecord {
    pub rank: usize,
    /// Present when the rank equals the row count.
    pub arrangement: Option<Vec<usize>>,
    #[serde(serialize_with = "serialize_opt_vec_big")]
    pub delta_profile: Option<Vec<BigInt>>,
    /// `|det T_1|` of the arranged matrix.
    #[serde(serialize_with = "serialize_opt_big")]
    pub leading_minor: Option<BigInt>,
    /// Largest `|l x l minor|`.
    #[serde(serialize_with = "serialize_opt_big")]
    pub max_minor: Option<BigInt>,
    /// Present when the rank is below the row count.
    pub dependency: Option<Dependency>,
    /// Three-row tuples only.
    pub three_row: Option<ThreeRowArrangement>,
    pub column_classes: Option<Vec<ColumnClass>>,
    /// `q_i` per column, `None` where `x_2,i = x_1,i`.
    #[serde(serialize_with = "serialize_ratios")]
    pub column_ratios: Option<Vec<Option<BigRational>>>,
}

fn serialize_opt_vec_big<S: serde::Serializer>(
    v: &Option<Vec<BigInt>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(b) => s.serialize_some(&b.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
        None => s.serialize_none(),
    }
}

fn serialize_ratios<S: serde::Serializer>(
    v: &Option<Vec<Option<BigRational>>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(b) => s.serialize_some(
            &b.iter().map(|q| q.as_ref().map(|q| q.to_string())).collect::<Vec<_>>(),
        ),
        None => s.serialize_none(),
    }
}

/// Full exact analysis of one tuple. Asserts `rank(T) = rank(T')`.
pub fn analyze(x: &TupleMatrix) -> Result<CensusRecord> {
    let (t, tp) = build_matrices(x);
    let rank = exact_rank(&tp);
    assert_eq!(rank, exact_rank(&t), "rank(T) != rank(T') for {:?}", x.rows());
    let l = x.ell();
    let mut rec = CensusRecord {
        rank,
        arrangement: None,
        delta_profile: None,
        leading_minor: None,
        max_minor: None,
        dependency: None,
        three_row: None,
        column_classes: None,
        column_ratios: None,
    };
    if rank == l {
        let a = optimally_arrange(&tp)?;
        let all: Vec<usize> = (0..l).collect();
        rec.leading_minor = Some(abs(minor_det(&a.arranged, &all, &all)?));
        rec.delta_profile = Some(delta_profile(&a.arranged)?);
        let sets = arrange::subsets(x.k(), l);
        rec.max_minor = Some(arrange::max_full_minor(tp.data(), l, x.k(), &sets));
        rec.arrangement = Some(a.permutation);
    } else {
        rec.dependency = Some(dependency_coefficients(&tp, rank)?);
    }
    if l == 3 {
        rec.three_row = Some(three_row_arrangement(x)?);
        let cols: Vec<[u64; 3]> = (0..x.k())
            .map(|i| {
                let c = x.column(i);
                [c[0], c[1], c[2]]
            })
            .collect();
        rec.column_classes = Some(cols.iter().map(|&c| classify_column(c)).collect());
        rec.column_ratios = Some(cols.iter().map(|&c| column_ratio(c, x.degree()).ok()).collect());
    }
    Ok(rec)
}
