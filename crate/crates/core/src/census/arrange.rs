//! Optimal column arrangement, the Δ profile and the dependency
//! coefficients of rank-deficient matrices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::exact::{bareiss_det, exact_rank, solve_rational, ExactInt, IntMatrix};
use crate::error::{Error, Result};

/// Determinant of the submatrix of a row-major `_ x cols` matrix.
pub(crate) fn minor_of<T: ExactInt>(a: &[T], cols: usize, rows: &[usize], sel: &[usize]) -> T {
    let mut sub = Vec::with_capacity(rows.len() * sel.len());
    for &i in rows {
        for &j in sel {
            sub.push(a[i * cols + j].clone());
        }
    }
    bareiss_det(sub, rows.len())
}

/// Greedy arrangement of the columns of an `l x k` matrix: at step `n` the
/// column maximizing `|minor(rows 1..n, arranged 1..n-1 + candidate)|` is
/// moved to position `n`, ties going to the smallest original index.
/// Returns `None` when some leading minor vanishes (rank below `l`).
pub(crate) fn greedy_arrangement<T: ExactInt>(a: &[T], l: usize, k: usize) -> Option<Vec<usize>> {
    if l > k {
        return None;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut rows = Vec::with_capacity(l);
    let mut sel = Vec::with_capacity(l);
    for n in 0..l {
        rows.push(n);
        let mut best: Option<(T, usize)> = None;
        for pos in n..k {
            sel.clear();
            sel.extend_from_slice(&perm[..n]);
            sel.push(perm[pos]);
            let v = minor_of(a, k, &rows, &sel).abs_val();
            let better = match &best {
                None => true,
                Some((bv, bpos)) => v > *bv || (v == *bv && perm[pos] < perm[*bpos]),
            };
            if better {
                best = Some((v, pos));
            }
        }
        let (v, pos) = best.expect("candidate columns exist");
        if v.is_nil() {
            return None;
        }
        perm.swap(n, pos);
    }
    Some(perm)
}

/// `Δ_1..Δ_l` of a matrix whose columns are taken in the order `perm`.
pub(crate) fn delta_profile_of<T: ExactInt>(a: &[T], l: usize, k: usize, perm: &[usize]) -> Vec<T> {
    let mut out = Vec::with_capacity(l);
    for n in 1..=l {
        let cols = &perm[..n];
        let lead_rows: Vec<usize> = (0..n).collect();
        let lead = minor_of(a, k, &lead_rows, cols).abs_val();
        // n is 1-based here; odd n below l also looks at rows 1..n-1, n+1
        if n % 2 == 1 && n < l {
            let mut alt_rows: Vec<usize> = (0..n - 1).collect();
            alt_rows.push(n);
            let alt = minor_of(a, k, &alt_rows, cols).abs_val();
            out.push(lead.max(alt));
        } else {
            out.push(lead);
        }
    }
    out
}

/// All `n`-element subsets of `0..k` in lexicographic order.
pub(crate) fn subsets(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(start: usize, k: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for j in start..k {
            if k - j < n - cur.len() {
                break;
            }
            cur.push(j);
            rec(j + 1, k, n, cur, out);
            cur.pop();
        }
    }
    rec(0, k, n, &mut cur, &mut out);
    out
}

/// Largest `|minor|` over all `l x l` submatrices using every row.
pub(crate) fn max_full_minor<T: ExactInt>(a: &[T], l: usize, k: usize, column_sets: &[Vec<usize>]) -> T {
    let rows: Vec<usize> = (0..l).collect();
    column_sets
        .iter()
        .map(|c| minor_of(a, k, &rows, c).abs_val())
        .max()
        .unwrap_or_else(T::nil)
}

/// A column permutation (`permutation[p]` is the original index of the
/// column now at position `p`, 0-based) and the permuted matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    pub permutation: Vec<usize>,
    pub arranged: IntMatrix,
}

/// Arranges the columns of a full-row-rank matrix so that for every `n`
/// the leading `n x n` minor dominates every minor on rows `1..n` that
/// replaces column `n` by a later column.
pub fn optimally_arrange(t_prime: &IntMatrix) -> Result<Arrangement> {
    let (l, k) = (t_prime.rows(), t_prime.cols());
    let perm = greedy_arrangement(t_prime.data(), l, k).ok_or_else(|| {
        Error::Precondition(format!("arrangement needs rank {l}, matrix is {l}x{k} of lower rank"))
    })?;
    Ok(Arrangement { arranged: t_prime.permute_columns(&perm), permutation: perm })
}

/// Checks the defining inequalities of an optimal arrangement.
pub fn is_optimally_arranged(m: &IntMatrix) -> bool {
    let (l, k) = (m.rows(), m.cols());
    if l > k {
        return false;
    }
    let a = m.data();
    (1..=l).all(|n| {
        let rows: Vec<usize> = (0..n).collect();
        let lead_cols: Vec<usize> = (0..n).collect();
        let lead = minor_of(a, k, &rows, &lead_cols).abs_val();
        !lead.is_zero()
            && (n..k).all(|m_col| {
                let mut cols: Vec<usize> = (0..n - 1).collect();
                cols.push(m_col);
                minor_of(a, k, &rows, &cols).abs_val() <= lead
            })
    })
}

/// `Δ_n` for `n = 1..l` of an arranged full-rank matrix: the leading minor
/// for even `n` and for `n = l`, otherwise the larger of the leading minor
/// and the minor on rows `1..n-1, n+1`.
pub fn delta_profile(arranged: &IntMatrix) -> Result<Vec<BigInt>> {
    let (l, k) = (arranged.rows(), arranged.cols());
    if l > k {
        return Err(Error::Precondition(format!("{l}x{k} matrix cannot have rank {l}")));
    }
    let perm: Vec<usize> = (0..k).collect();
    let a = arranged.data();
    for n in 1..=l {
        let idx: Vec<usize> = (0..n).collect();
        if minor_of(a, k, &idx, &idx).is_zero() {
            return Err(Error::Precondition(format!(
                "leading {n}x{n} minor vanishes; matrix is not arranged or not of full rank"
            )));
        }
    }
    Ok(delta_profile_of(a, l, k, &perm))
}

/// Exact linear relations `x_j^d = sum_nu rho_{j,nu} x_nu^d` expressing each
/// dependent row through a basis of rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dependency {
    /// The first `r` linearly independent rows, in order.
    pub basis_rows: Vec<usize>,
    /// Columns of the invertible `r x r` block used to solve for `rho`.
    pub pivot_columns: Vec<usize>,
    /// `(j, rho_j)` for every row `j` outside the basis.
    #[serde(serialize_with = "serialize_rho")]
    pub rho: Vec<(usize, Vec<BigRational>)>,
}

fn serialize_rho<S: serde::Serializer>(
    rho: &[(usize, Vec<BigRational>)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(rho.len()))?;
    for (j, r) in rho {
        let text: Vec<String> = r.iter().map(|q| q.to_string()).collect();
        seq.serialize_element(&(j, text))?;
    }
    seq.end()
}

impl Dependency {
    /// Number of nonzero coefficients in each dependent row.
    pub fn nonzero_counts(&self) -> Vec<usize> {
        self.rho.iter().map(|(_, r)| r.iter().filter(|q| !q.is_zero()).count()).collect()
    }
}

/// Solves for the dependency coefficients of a matrix of rank `r` below its
/// row count. The basis is the first `r` independent rows; the invertible
/// block is the optimal arrangement of the basis rows.
pub fn dependency_coefficients(t_prime: &IntMatrix, r: usize) -> Result<Dependency> {
    let (l, k) = (t_prime.rows(), t_prime.cols());
    let rank = exact_rank(t_prime);
    if rank != r {
        return Err(Error::Precondition(format!("matrix has rank {rank}, not {r}")));
    }
    if r == 0 || r >= l {
        return Err(Error::Precondition(format!("need 0 < r < {l}, got r = {r}")));
    }
    let all_cols: Vec<usize> = (0..k).collect();
    let mut basis: Vec<usize> = Vec::with_capacity(r);
    for j in 0..l {
        let mut trial = basis.clone();
        trial.push(j);
        if exact_rank(&t_prime.select(&trial, &all_cols)) == trial.len() {
            basis = trial;
            if basis.len() == r {
                break;
            }
        }
    }
    let basis_matrix = t_prime.select(&basis, &all_cols);
    let arrangement = optimally_arrange(&basis_matrix)?;
    let pivots: Vec<usize> = arrangement.permutation[..r].to_vec();
    // (T'_1)^T rho_j = (x_{j,c}^d)_{c in pivots}
    let block = basis_matrix.select(&(0..r).collect::<Vec<_>>(), &pivots);
    let transposed = transpose(&block);
    let mut rho = Vec::with_capacity(l - r);
    for j in (0..l).filter(|j| !basis.contains(j)) {
        let rhs: Vec<BigInt> = pivots.iter().map(|&c| t_prime.get(j, c).clone()).collect();
        let sol = solve_rational(&transposed, &rhs)
            .ok_or_else(|| Error::Precondition("singular leading block".into()))?;
        for i in 0..k {
            let combo = basis
                .iter()
                .zip(&sol)
                .fold(BigRational::zero(), |acc, (&nu, q)| {
                    acc + q * BigRational::from_integer(t_prime.get(nu, i).clone())
                });
            assert_eq!(
                combo,
                BigRational::from_integer(t_prime.get(j, i).clone()),
                "dependency relation fails in column {i}"
            );
        }
        rho.push((j, sol));
    }
    Ok(Dependency { basis_rows: basis, pivot_columns: pivots, rho })
}

fn transpose(m: &IntMatrix) -> IntMatrix {
    let (r, c) = (m.rows(), m.cols());
    let data = (0..c).flat_map(|j| (0..r).map(move |i| m.get(i, j).clone())).collect();
    IntMatrix::new(c, r, data).expect("shape preserved")
}
