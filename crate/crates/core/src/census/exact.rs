//! Fraction-free elimination over exact integers.
//!
//! Every intermediate entry of Bareiss elimination is a minor of the input,
//! so when all minors of the relevant size are below `2^126` in magnitude
//! the computation can run in `i128`; otherwise it runs on `BigInt`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Dense row-major matrix of exact integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn from_rows<T: Into<BigInt> + Copy>(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        let data = rows.iter().flat_map(|r| r.iter().map(|&v| v.into())).collect();
        Ok(IntMatrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// The submatrix on the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> IntMatrix {
        let data = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| self.get(i, j).clone()))
            .collect();
        IntMatrix { rows: rows.len(), cols: cols.len(), data }
    }

    pub fn permute_columns(&self, perm: &[usize]) -> IntMatrix {
        let rows: Vec<usize> = (0..self.rows).collect();
        self.select(&rows, perm)
    }

    /// Bit length of the largest entry magnitude.
    fn max_entry_log2(&self) -> f64 {
        self.data.iter().map(|v| v.bits()).max().unwrap_or(0) as f64
    }

    /// Upper bound on `log2 |minor|` for minors of size `n`:
    /// `n * (log2 max|a| + log2 sqrt(n))`.
    fn hadamard_log2(&self, n: usize) -> f64 {
        let n = n as f64;
        n * (self.max_entry_log2() + 0.5 * n.log2())
    }

    pub(crate) fn fits_fast_path(&self, n: usize) -> bool {
        // products of two minors must stay below 2^127
        2.0 * self.hadamard_log2(n) < 125.0
    }

    pub(crate) fn data(&self) -> &[BigInt] {
        &self.data
    }

    pub(crate) fn to_i128(&self) -> Vec<i128> {
        self.data.iter().map(|v| v.to_i128().expect("certified by the Hadamard bound")).collect()
    }
}

/// The operations fraction-free elimination needs from an integer type.
pub(crate) trait ExactInt: Clone + Ord {
    fn nil() -> Self;
    fn unit() -> Self;
    fn is_nil(&self) -> bool;
    /// `(a * b - c * e) / div`, the division being exact.
    fn cross(a: &Self, b: &Self, c: &Self, e: &Self, div: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs_val(&self) -> Self;
    /// Bit length of `|self|`, zero for zero.
    fn bit_len(&self) -> u64;
    fn from_big(v: &BigInt) -> Option<Self>;
}

impl ExactInt for i128 {
    fn nil() -> Self {
        0
    }
    fn unit() -> Self {
        1
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    #[inline]
    fn cross(a: &Self, b: &Self, c: &Self, e: &Self, div: &Self) -> Self {
        (a * b - c * e) / div
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn bit_len(&self) -> u64 {
        128 - self.unsigned_abs().leading_zeros() as u64
    }
    fn from_big(v: &BigInt) -> Option<Self> {
        v.to_i128()
    }
}

impl ExactInt for BigInt {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn cross(a: &Self, b: &Self, c: &Self, e: &Self, div: &Self) -> Self {
        (a * b - c * e) / div
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs_val(&self) -> Self {
        Signed::abs(self)
    }
    fn bit_len(&self) -> u64 {
        self.bits()
    }
    fn from_big(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }
}

/// Bareiss determinant of an `n x n` row-major matrix.
pub(crate) fn bareiss_det<T: ExactInt>(mut a: Vec<T>, n: usize) -> T {
    if n == 0 {
        return T::unit();
    }
    let mut negate = false;
    let mut prev = T::unit();
    for k in 0..n - 1 {
        if a[k * n + k].is_nil() {
            let Some(p) = (k + 1..n).find(|&i| !a[i * n + k].is_nil()) else {
                return T::nil();
            };
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i * n + j] =
                    T::cross(&a[i * n + j], &a[k * n + k], &a[i * n + k], &a[k * n + j], &prev);
            }
        }
        prev = a[k * n + k].clone();
    }
    let det = a[n * n - 1].clone();
    if negate {
        det.neg()
    } else {
        det
    }
}

/// Rank by fraction-free row echelon reduction of a `rows x cols` matrix.
pub(crate) fn bareiss_rank<T: ExactInt>(mut a: Vec<T>, rows: usize, cols: usize) -> usize {
    let mut rank = 0;
    let mut prev = T::unit();
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| !a[i * cols + c].is_nil()) else {
            continue;
        };
        if p != rank {
            for j in 0..cols {
                a.swap(rank * cols + j, p * cols + j);
            }
        }
        for i in rank + 1..rows {
            for j in c + 1..cols {
                a[i * cols + j] = T::cross(
                    &a[i * cols + j],
                    &a[rank * cols + c],
                    &a[i * cols + c],
                    &a[rank * cols + j],
                    &prev,
                );
            }
            a[i * cols + c] = T::nil();
        }
        prev = a[rank * cols + c].clone();
        rank += 1;
    }
    rank
}

/// Determinant of a square matrix.
pub fn determinant(m: &IntMatrix) -> Result<BigInt> {
    if m.rows != m.cols {
        return Err(Error::invalid(format!("{}x{} matrix is not square", m.rows, m.cols)));
    }
    Ok(if m.fits_fast_path(m.rows) {
        BigInt::from(bareiss_det(m.to_i128(), m.rows))
    } else {
        bareiss_det(m.data.clone(), m.rows)
    })
}

/// Determinant with the `BigInt` path forced, for comparison with the fast path.
pub fn determinant_unbounded(m: &IntMatrix) -> Result<BigInt> {
    if m.rows != m.cols {
        return Err(Error::invalid("matrix is not square"));
    }
    Ok(bareiss_det(m.data.clone(), m.rows))
}

/// Rank over the rationals.
pub fn exact_rank(m: &IntMatrix) -> usize {
    if m.fits_fast_path(m.rows.min(m.cols)) {
        bareiss_rank(m.to_i128(), m.rows, m.cols)
    } else {
        bareiss_rank(m.data.clone(), m.rows, m.cols)
    }
}

/// The minor on the given rows and columns.
pub fn minor_det(m: &IntMatrix, rows: &[usize], cols: &[usize]) -> Result<BigInt> {
    if rows.len() != cols.len() {
        return Err(Error::invalid("minor needs as many rows as columns"));
    }
    if rows.iter().any(|&i| i >= m.rows) || cols.iter().any(|&j| j >= m.cols) {
        return Err(Error::invalid("minor index out of range"));
    }
    determinant(&m.select(rows, cols))
}

/// Solves `a z = b` for square nonsingular `a` over the rationals.
pub(crate) fn solve_rational(a: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigRational>> {
    let n = a.rows;
    let mut aug: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut r: Vec<BigRational> =
                a.row(i).iter().map(|v| BigRational::from_integer(v.clone())).collect();
            r.push(BigRational::from_integer(b[i].clone()));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&i| !aug[i][c].is_zero())?;
        aug.swap(c, p);
        let pivot = aug[c][c].clone();
        for v in aug[c].iter_mut() {
            *v = &*v / &pivot;
        }
        for i in 0..n {
            if i != c && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                let pivot_row = aug[c].clone();
                for (v, pv) in aug[i].iter_mut().zip(&pivot_row) {
                    *v = &*v - &f * pv;
                }
            }
        }
    }
    Some(aug.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_rows(rows).unwrap()
    }

    /// Laplace expansion along the first row.
    fn cofactor_det(a: &[Vec<BigInt>]) -> BigInt {
        let n = a.len();
        if n == 0 {
            return BigInt::from(1);
        }
        let mut det = BigInt::from(0);
        for j in 0..n {
            let sub: Vec<Vec<BigInt>> = a[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect())
                .collect();
            let term = &a[0][j] * cofactor_det(&sub);
            if j % 2 == 0 {
                det += term;
            } else {
                det -= term;
            }
        }
        det
    }

    /// Rank by plain Gauss-Jordan over the rationals.
    fn rational_rank(a: &[Vec<BigInt>]) -> usize {
        let mut m: Vec<Vec<BigRational>> = a
            .iter()
            .map(|r| r.iter().map(|v| BigRational::from_integer(v.clone())).collect())
            .collect();
        let rows = m.len();
        let cols = m.first().map_or(0, Vec::len);
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..rows).find(|&i| !m[i][c].is_zero()) else { continue };
            m.swap(rank, p);
            for i in 0..rows {
                if i != rank && !m[i][c].is_zero() {
                    let f = &m[i][c] / &m[rank][c];
                    let pr = m[rank].clone();
                    for (v, pv) in m[i].iter_mut().zip(&pr) {
                        *v = &*v - &f * pv;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn small_examples() {
        let t = mat(&[vec![1, 4], vec![3, -3]]);
        assert_eq!(determinant(&t).unwrap(), BigInt::from(-15));
        assert_eq!(exact_rank(&t), 2);
        assert_eq!(minor_det(&t, &[1], &[0]).unwrap(), BigInt::from(3));
        assert_eq!(exact_rank(&mat(&[vec![1, 2, 3], vec![1, 2, 3]])), 1);
        assert_eq!(exact_rank(&mat(&[vec![0, 0], vec![0, 0]])), 0);
        assert_eq!(exact_rank(&mat(&[vec![0, 1, 2], vec![0, 2, 5], vec![0, 3, 7]])), 2);
        assert_eq!(determinant(&mat(&[vec![0, 1], vec![1, 0]])).unwrap(), BigInt::from(-1));
        assert!(determinant(&mat(&[vec![1, 2]])).is_err());
        assert!(minor_det(&t, &[0, 1], &[0]).is_err());
    }

    #[test]
    fn big_entries_take_the_unbounded_path() {
        let big = BigInt::from(1u64 << 62);
        let m = IntMatrix::new(
            3,
            3,
            vec![
                big.clone(), BigInt::from(3), BigInt::from(1),
                BigInt::from(7), big.clone() + 1, BigInt::from(2),
                BigInt::from(5), BigInt::from(11), big.clone() * 3,
            ],
        )
        .unwrap();
        assert!(!m.fits_fast_path(3));
        assert_eq!(determinant(&m).unwrap(), cofactor_det(&m.to_rows()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn determinant_matches_cofactor_expansion(
            n in 1usize..=4,
            entries in prop::collection::vec(-1_000_000i64..=1_000_000, 16),
            zero_mask in prop::collection::vec(any::<bool>(), 16),
        ) {
            let rows: Vec<Vec<i64>> = (0..n)
                .map(|i| (0..n).map(|j| if zero_mask[i * 4 + j] && j % 2 == 0 { 0 } else { entries[i * 4 + j] }).collect())
                .collect();
            let m = mat(&rows);
            let oracle = cofactor_det(&m.to_rows());
            prop_assert_eq!(determinant(&m).unwrap(), oracle.clone());
            prop_assert_eq!(determinant_unbounded(&m).unwrap(), oracle);
        }

        #[test]
        fn rank_matches_rational_reduction(
            r in 1usize..=5,
            c in 1usize..=5,
            entries in prop::collection::vec(-3i64..=3, 25),
            dup in any::<bool>(),
        ) {
            let mut rows: Vec<Vec<i64>> = (0..r).map(|i| entries[i * 5..i * 5 + c].to_vec()).collect();
            if dup && r >= 2 {
                rows[r - 1] = rows[0].iter().zip(&rows[1]).map(|(a, b)| 2 * a - 3 * b).collect();
            }
            let m = mat(&rows);
            prop_assert_eq!(exact_rank(&m), rational_rank(&m.to_rows()));
            prop_assert_eq!(bareiss_rank(m.data.clone(), r, c), exact_rank(&m));
        }
    }

    #[test]
    fn solve_small_system() {
        let a = mat(&[vec![2, 1], vec![1, 3]]);
        let z = solve_rational(&a, &[BigInt::from(3), BigInt::from(5)]).unwrap();
        assert_eq!(z[0], BigRational::new(4.into(), 5.into()));
        assert_eq!(z[1], BigRational::new(7.into(), 5.into()));
        assert!(solve_rational(&mat(&[vec![1, 2], vec![2, 4]]), &[1.into(), 2.into()]).is_none());
    }
}
