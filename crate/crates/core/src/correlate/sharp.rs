use rayon::prelude::*;
use serde::Serialize;

use super::check_sorted;
use crate::error::{Error, Result};
use crate::form::IntervalBox;

/// Default bound on `M^l` for the nested-loop counter.
pub const DEFAULT_BRUTE_FORCE_CAP: f64 = 1e9;

/// Order `l`, window `I = I_2 x ... x I_l` and number of values `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRequest {
    order: usize,
    window: IntervalBox,
    m: usize,
}

impl CorrelationRequest {
    pub fn new(order: usize, window: IntervalBox, m: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::invalid(format!("order must be >= 2, got {order}")));
        }
        if window.dim() != order - 1 {
            return Err(Error::invalid(format!(
                "order {order} needs a window of dimension {}, got {}",
                order - 1,
                window.dim()
            )));
        }
        if m < order {
            return Err(Error::invalid(format!("need M >= {order}, got {m}")));
        }
        Ok(CorrelationRequest { order, window, m })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn window(&self) -> &IntervalBox {
        &self.window
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    /// `raw_count / M`.
    pub statistic: f64,
    pub raw_count: u128,
    /// `vol(I)`.
    pub poisson_target: f64,
    pub m: usize,
}

impl CorrelationResult {
    fn new(raw_count: u128, req: &CorrelationRequest) -> Self {
        CorrelationResult {
            statistic: raw_count as f64 / req.m as f64,
            raw_count,
            poisson_target: req.window.volume(),
            m: req.m,
        }
    }

    pub fn deviation(&self) -> f64 {
        self.statistic - self.poisson_target
    }
}

/// The sharp `l`-correlation of the first `M` entries of a sorted sequence.
///
/// Each window is located by binary search; distinctness of the indices is
/// restored by inclusion-exclusion over the coincidence patterns of
/// `i_2..i_l`, with `i_1` removed from a window by rank (not by value) so ties
/// are handled exactly. Orders `l >= 5` fall back to the nested-loop counter
/// and fail if `M^l` exceeds its cap.
pub fn ell_correlation(values: &[f64], req: &CorrelationRequest) -> Result<CorrelationResult> {
    let values = prefix(values, req)?;
    if req.order >= 5 {
        return ell_correlation_bruteforce(values, req).map_err(|e| match e {
            Error::Resource { .. } => Error::Unsupported(format!(
                "order {} is only available through the nested-loop counter, and M = {} is above its cap",
                req.order, req.m
            )),
            other => other,
        });
    }
    let lo = req.window.lo();
    let hi = req.window.hi();
    let total: i128 = (0..values.len())
        .into_par_iter()
        .map(|a| {
            let va = values[a];
            let mut ranges = [(0usize, 0usize); 3];
            for (j, range) in ranges.iter_mut().enumerate().take(req.order - 1) {
                let start = values.partition_point(|&v| v - va < lo[j]);
                let end = values.partition_point(|&v| v - va < hi[j]);
                *range = (start, end.max(start));
            }
            distinct_tuples(&ranges[..req.order - 1], a)
        })
        .sum();
    debug_assert!(total >= 0);
    Ok(CorrelationResult::new(total as u128, req))
}

/// Number of `(i_2..i_l)` with `i_j` in `ranges[j]`, pairwise distinct and all
/// different from `a`.
fn distinct_tuples(ranges: &[(usize, usize)], a: usize) -> i128 {
    // |A_B| for a set B of window positions: the intersection of the ranges
    // minus i_1 if it lies in all of them
    let size = |mask: u32| -> i128 {
        let mut lo = 0usize;
        let mut hi = usize::MAX;
        for (j, &(s, e)) in ranges.iter().enumerate() {
            if mask & (1 << j) != 0 {
                lo = lo.max(s);
                hi = hi.min(e);
            }
        }
        if hi <= lo {
            return 0;
        }
        let n = (hi - lo) as i128;
        if (lo..hi).contains(&a) {
            n - 1
        } else {
            n
        }
    };
    match ranges.len() {
        1 => size(0b1),
        2 => size(0b01) * size(0b10) - size(0b11),
        3 => {
            let (s1, s2, s3) = (size(0b001), size(0b010), size(0b100));
            s1 * s2 * s3 - size(0b011) * s3 - size(0b101) * s2 - size(0b110) * s1
                + 2 * size(0b111)
        }
        _ => unreachable!("closed form only for orders 2..=4"),
    }
}

/// Nested-loop counter with the same contract as [`ell_correlation`].
pub fn ell_correlation_bruteforce(
    values: &[f64],
    req: &CorrelationRequest,
) -> Result<CorrelationResult> {
    ell_correlation_bruteforce_with_cap(values, req, DEFAULT_BRUTE_FORCE_CAP)
}

pub fn ell_correlation_bruteforce_with_cap(
    values: &[f64],
    req: &CorrelationRequest,
    cap: f64,
) -> Result<CorrelationResult> {
    let values = prefix(values, req)?;
    let projected = (req.m as f64).powi(req.order as i32);
    if projected > cap {
        return Err(Error::resource("nested-loop correlation", projected, cap));
    }
    let lo = req.window.lo();
    let hi = req.window.hi();
    let total: u128 = (0..values.len())
        .into_par_iter()
        .map(|a| {
            let mut chosen = Vec::with_capacity(req.order);
            chosen.push(a);
            nested(values, lo, hi, &mut chosen)
        })
        .sum();
    Ok(CorrelationResult::new(total, req))
}

fn nested(values: &[f64], lo: &[f64], hi: &[f64], chosen: &mut Vec<usize>) -> u128 {
    let j = chosen.len() - 1;
    if j == lo.len() {
        return 1;
    }
    let va = values[chosen[0]];
    let mut total = 0;
    for b in 0..values.len() {
        if chosen.contains(&b) {
            continue;
        }
        let diff = values[b] - va;
        if diff >= lo[j] && diff < hi[j] {
            chosen.push(b);
            total += nested(values, lo, hi, chosen);
            chosen.pop();
        }
    }
    total
}

fn prefix<'a>(values: &'a [f64], req: &CorrelationRequest) -> Result<&'a [f64]> {
    if req.m > values.len() {
        return Err(Error::invalid(format!(
            "requested M = {} but the sequence has {} values",
            req.m,
            values.len()
        )));
    }
    let values = &values[..req.m];
    check_sorted(values)?;
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn req(order: usize, window: &str, m: usize) -> CorrelationRequest {
        CorrelationRequest::new(order, window.parse().unwrap(), m).unwrap()
    }

    #[test]
    fn three_point_example() {
        let v = [0.0, 0.5, 2.0];
        let r = ell_correlation(&v, &req(2, "0:1", 3)).unwrap();
        assert_eq!(r.raw_count, 1);
        assert!((r.statistic - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.poisson_target, 1.0);
        assert_eq!(ell_correlation_bruteforce(&v, &req(2, "0:1", 3)).unwrap().raw_count, 1);
    }

    #[test]
    fn window_beyond_data_counts_nothing() {
        let v: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let r = ell_correlation(&v, &req(2, "5:5.000001", 50)).unwrap();
        assert_eq!(r.raw_count, 0);
    }

    #[test]
    fn covering_window_counts_all_distinct_tuples() {
        let v: Vec<f64> = (0..30).map(|i| (i as f64).sqrt() * 3.0).collect();
        let span = v[29] - v[0] + 1.0;
        let axis = format!("{}:{}", -span, span);
        for order in 2..=4usize {
            let window = vec![axis.as_str(); order - 1].join(",");
            let r = ell_correlation(&v, &req(order, &window, 30)).unwrap();
            let expected: u128 = (0..order as u128).map(|i| 30 - i).product();
            assert_eq!(r.raw_count, expected, "order {order}");
        }
    }

    #[test]
    fn arithmetic_progression() {
        let m = 100;
        let v: Vec<f64> = (1..=m).map(|j| j as f64).collect();
        let r = ell_correlation(&v, &req(2, "0.5:1.5", m)).unwrap();
        assert_eq!(r.raw_count, (m - 1) as u128);
        assert!((r.statistic - (m - 1) as f64 / m as f64).abs() < 1e-15);
        let r3 = ell_correlation(&v, &req(3, "0.5:1.5,1.5:2.5", m)).unwrap();
        assert_eq!(r3.raw_count, (m - 2) as u128);
        let b3 = ell_correlation_bruteforce(&v, &req(3, "0.5:1.5,1.5:2.5", m)).unwrap();
        assert_eq!(b3.raw_count, (m - 2) as u128);
    }

    #[test]
    fn ties_are_handled_by_rank() {
        // repeated values: zero differences between distinct indices count
        let v = [1.0, 1.0, 1.0, 2.0, 2.0];
        for (order, window) in [(2, "0:0.5"), (2, "-1:1"), (3, "0:0.5,0:0.5"), (4, "0:1.5,-0.1:0.1,0:0.1")] {
            let r = req(order, window, 5);
            assert_eq!(
                ell_correlation(&v, &r).unwrap().raw_count,
                ell_correlation_bruteforce(&v, &r).unwrap().raw_count,
                "{window}"
            );
        }
        assert_eq!(ell_correlation(&v, &req(2, "0:0.5", 5)).unwrap().raw_count, 8);
    }

    #[test]
    fn high_order_falls_back_or_refuses() {
        let v: Vec<f64> = (0..20).map(|i| i as f64 * 0.7).collect();
        let r = req(5, "0:3,0:3,0:3,0:3", 20);
        assert_eq!(
            ell_correlation(&v, &r).unwrap().raw_count,
            ell_correlation_bruteforce(&v, &r).unwrap().raw_count
        );
        let big: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let err = ell_correlation(&big, &req(5, "0:1,0:1,0:1,0:1", 100)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn bad_requests() {
        assert!(CorrelationRequest::new(1, "0:1".parse().unwrap(), 5).is_err());
        assert!(CorrelationRequest::new(3, "0:1".parse().unwrap(), 5).is_err());
        assert!(CorrelationRequest::new(3, "0:1,0:1".parse().unwrap(), 2).is_err());
        let v = [0.0, 1.0];
        assert!(ell_correlation(&v, &req(2, "0:1", 3)).is_err());
        assert!(ell_correlation(&[1.0, 0.0], &req(2, "0:1", 2)).is_err());
        assert!(ell_correlation_bruteforce_with_cap(&[0.0, 1.0, 2.0], &req(2, "0:1", 3), 8.0).is_err());
    }

    fn random_sequence(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        let mut x = 0.0;
        (0..m)
            .map(|_| {
                x += -(1.0 - rng.random::<f64>()).ln();
                x
            })
            .collect()
    }

    #[test]
    fn monotone_and_additive_in_the_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = random_sequence(&mut rng, 3000);
        let small = ell_correlation(&v, &req(3, "0:1,-0.5:0.5", 3000)).unwrap();
        let large = ell_correlation(&v, &req(3, "-0.2:1.3,-0.5:0.9", 3000)).unwrap();
        assert!(small.raw_count <= large.raw_count);

        let a = ell_correlation(&v, &req(2, "0.2:0.9", 3000)).unwrap().raw_count;
        let b = ell_correlation(&v, &req(2, "0.9:1.7", 3000)).unwrap().raw_count;
        let ab = ell_correlation(&v, &req(2, "0.2:1.7", 3000)).unwrap().raw_count;
        assert_eq!(a + b, ab);

        // reflection on tie-free data: [a, b) and (-b, -a] count the same pairs
        let fwd = ell_correlation(&v, &req(2, "0.3:1.1", 3000)).unwrap().raw_count;
        let back = ell_correlation(&v, &req(2, "-1.1:-0.3", 3000)).unwrap().raw_count;
        assert_eq!(fwd, back);
    }
}
