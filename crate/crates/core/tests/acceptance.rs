//! Acceptance criteria 1-11. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use diagform::census::{
    census, determinant, dependency_coefficients, exact_rank, optimally_arrange,
    write_census_csv, CensusConfig, IntMatrix, TupleMatrix,
};
use diagform::correlate::{
    ell_correlation, ell_correlation_bruteforce, gap_sequence, hl_expectation,
    ks_against_exponential, long_gaps, shell_schedule, smoothed_correlation, CorrelationRequest,
    ShellOptions, SmoothingKernels,
};
use diagform::dioph::{
    count_equation, count_inequality, exponent_fit, fejer_chain_check, CountTemplate, Slack,
};
use diagform::enumerate::{count_below, generate_sequence};
use diagform::sweep::sample_alpha;
use diagform::{DiagonalForm, IntervalBox};

const SAFETY: f64 = 0.15;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let form = DiagonalForm::new(2, vec![1.0, 1.0]).unwrap();
    let r = 1e6;
    let n = count_below(&form, r).unwrap() as f64;
    let c = form.normalization_constant();
    let ratio = n / (c * r);
    let secs = start.elapsed().as_secs_f64();
    let pass = (ratio - 1.0).abs() <= 0.01
        && (c - std::f64::consts::FRAC_PI_4).abs() < 1e-14
        && secs < 5.0;
    outcome(pass, format!("count/(c R) = {ratio:.6}, c = {c:.15}, {secs:.2}s"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    let mut zero_windows = 0;
    for case in 0..200 {
        let ell = 2 + case % 3;
        let max_m = [2000, 400, 100][ell - 2];
        let m = rng.random_range(ell.max(20)..=max_m);
        let k = rng.random_range(2..=3);
        let alpha: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..2.0)).collect();
        let form = DiagonalForm::new(2, alpha).unwrap();
        let mut values = generate_sequence(&form, m, SAFETY).unwrap().values().to_vec();
        if case % 4 == 0 {
            // ties
            for v in values.iter_mut() {
                *v = (*v * 2.0).round() / 2.0;
            }
        }
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for _ in 1..ell {
            let a: f64 = rng.random_range(-2.0..2.0);
            let w: f64 = rng.random_range(0.05..2.5);
            lo.push(a);
            hi.push(a + w);
        }
        if lo.iter().zip(&hi).any(|(l, h)| *l <= 0.0 && 0.0 < *h) {
            zero_windows += 1;
        }
        let req = CorrelationRequest::new(ell, IntervalBox::new(lo, hi).unwrap(), m).unwrap();
        let fast = ell_correlation(&values, &req).unwrap();
        let slow = ell_correlation_bruteforce(&values, &req).unwrap();
        if fast.raw_count != slow.raw_count {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 120.0,
        format!("200 instances, {mismatches} mismatches, {zero_windows} windows contain 0, {secs:.1}s"),
    )
}

/// Sequences of criterion 3 for one seed, shared with criteria 5 and 6.
struct PairRun {
    seed: u64,
    /// median |T_2 - 1| per schedule entry
    medians: Vec<f64>,
    long_gap_counts: Vec<usize>,
    ks: Vec<f64>,
}

const PAIR_SCHEDULE: [usize; 3] = [10_000, 30_000, 100_000];

fn pair_run(seed: u64) -> PairRun {
    let domain = IntervalBox::cube(1.0, 2.0, 3).unwrap();
    let window = IntervalBox::new(vec![0.0], vec![1.0]).unwrap();
    let max_m = *PAIR_SCHEDULE.last().unwrap();
    let mut devs = vec![Vec::new(); PAIR_SCHEDULE.len()];
    let mut long_gap_counts = Vec::new();
    let mut ks = Vec::new();
    for s in 0..10 {
        let alpha = sample_alpha(&domain, seed, s);
        let form = DiagonalForm::new(2, alpha).unwrap();
        let seq = generate_sequence(&form, max_m, SAFETY).unwrap();
        for (i, &m) in PAIR_SCHEDULE.iter().enumerate() {
            let req = CorrelationRequest::new(2, window.clone(), m).unwrap();
            devs[i].push(ell_correlation(seq.values(), &req).unwrap().deviation().abs());
        }
        long_gap_counts.push(long_gaps(seq.values(), 2.006).unwrap().count);
        ks.push(ks_against_exponential(&gap_sequence(seq.values()).unwrap()).unwrap());
    }
    PairRun { seed, medians: devs.into_iter().map(median).collect(), long_gap_counts, ks }
}

fn pair_passes(r: &PairRun) -> bool {
    r.medians[2] <= 0.1 && r.medians.windows(2).all(|w| w[1] <= w[0])
}

fn describe_pair(r: &PairRun) -> String {
    format!(
        "seed {}: median |T_2 - 1| = {:.4} / {:.4} / {:.4} at M = 1e4 / 3e4 / 1e5",
        r.seed, r.medians[0], r.medians[1], r.medians[2]
    )
}

/// A failing first seed is rerun on three fresh seeds; the criterion holds
/// when a majority of the reruns pass.
fn soft<T>(first: T, rerun: impl Fn(u64) -> T, passes: impl Fn(&T) -> bool) -> (bool, Vec<T>) {
    if passes(&first) {
        return (true, vec![first]);
    }
    let mut runs = vec![first];
    runs.extend((1..=3).map(|i| rerun(1000 + i)));
    let ok = runs[1..].iter().filter(|r| passes(r)).count() >= 2;
    (ok, runs)
}

fn criterion_3(first: &PairRun, first_secs: f64) -> Outcome {
    let start = Instant::now();
    let copy = PairRun {
        seed: first.seed,
        medians: first.medians.clone(),
        long_gap_counts: first.long_gap_counts.clone(),
        ks: first.ks.clone(),
    };
    let (pass, runs) = soft(copy, pair_run, pair_passes);
    let detail: Vec<String> = runs.iter().map(describe_pair).collect();
    let secs = first_secs + start.elapsed().as_secs_f64();
    outcome(pass && secs < 600.0, format!("{} ({secs:.1}s)", detail.join("; ")))
}

struct TripleRun {
    seed: u64,
    alpha: Vec<f64>,
    deviation: f64,
    spacing: f64,
}

fn triple_run(seed: u64) -> TripleRun {
    let domain = IntervalBox::cube(1.0, 2.0, 4).unwrap();
    let alpha = sample_alpha(&domain, seed, 0);
    let form = DiagonalForm::new(2, alpha.clone()).unwrap();
    let m = 30_000;
    let seq = generate_sequence(&form, m, SAFETY).unwrap();
    let req = CorrelationRequest::new(3, IntervalBox::cube(0.0, 1.0, 2).unwrap(), m).unwrap();
    let r = ell_correlation(seq.values(), &req).unwrap();
    TripleRun { seed, alpha, deviation: r.deviation(), spacing: seq.values()[m - 1] / m as f64 }
}

fn criterion_4() -> Outcome {
    let (pass, runs) = soft(triple_run(4), triple_run, |r| r.deviation.abs() <= 0.2);
    let detail: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "seed {} alpha {:?}: T_3 - 1 = {:+.4}, Lambda_M/M = {:.4}",
                r.seed,
                r.alpha.iter().map(|a| (a * 1e4).round() / 1e4).collect::<Vec<_>>(),
                r.deviation,
                r.spacing
            )
        })
        .collect();
    outcome(pass, detail.join("; "))
}

fn criterion_5(run: &PairRun) -> Outcome {
    let min = *run.long_gap_counts.iter().min().unwrap();
    outcome(
        min >= 1000,
        format!("seed {}: long gaps >= 2.006 at M = 1e5, min over samples {min} (counts {:?})", run.seed, run.long_gap_counts),
    )
}

fn criterion_6(run: &PairRun) -> Outcome {
    let med = median(run.ks.clone());
    outcome(med <= 0.02, format!("seed {}: median KS distance at M = 1e5 = {med:.5}", run.seed))
}

fn exhaustive_equation(a: &[i64], d: u32, m: i64) -> u64 {
    let k = a.len();
    let mut x = vec![-m; k];
    let mut n = 0;
    loop {
        let s: i128 = a.iter().zip(&x).map(|(&c, &v)| c as i128 * (v as i128).pow(d)).sum();
        if s == 0 {
            n += 1;
        }
        let mut j = 0;
        loop {
            if j == k {
                return n;
            }
            x[j] += 1;
            if x[j] <= m {
                break;
            }
            x[j] = -m;
            j += 1;
        }
    }
}

fn exhaustive_inequality(a: &[i64], d: u32, m: i64, h: f64) -> u64 {
    let k = a.len();
    let mut x = vec![m; k];
    let mut n = 0;
    loop {
        let s: i128 = a.iter().zip(&x).map(|(&c, &v)| c as i128 * (v as i128).pow(d)).sum();
        if (s.unsigned_abs() as f64) <= h {
            n += 1;
        }
        let mut j = 0;
        loop {
            if j == k {
                return n;
            }
            x[j] += 1;
            if x[j] <= 2 * m {
                break;
            }
            x[j] = m;
            j += 1;
        }
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for case in 0..100 {
        let k = rng.random_range(2..=5);
        let d = rng.random_range(2..=3);
        let a: Vec<i64> = (0..k)
            .map(|_| {
                let v: i64 = rng.random_range(1..=4);
                if rng.random() { v } else { -v }
            })
            .collect();
        // (M+1)^k and (2M+1)^k stay below 2e6
        let cap = (2e6f64).powf(1.0 / k as f64);
        if case % 2 == 0 {
            let m = rng.random_range(1..=((cap - 1.0) / 2.0).floor().max(1.0) as i64);
            let mitm = count_equation(&a, d, m as u64).unwrap().total;
            if mitm != exhaustive_equation(&a, d, m) {
                mismatches += 1;
            }
        } else {
            let m = rng.random_range(1..=(cap - 1.0).floor().max(1.0) as i64);
            let scale = (2 * m).pow(d) as f64;
            let h = (rng.random_range(0.0..0.3) * scale).floor();
            let mitm = count_inequality(&a, d, m as u64, h).unwrap();
            if mitm != exhaustive_inequality(&a, d, m, h) {
                mismatches += 1;
            }
        }
    }
    let diag = count_inequality(&[1, -1], 2, 10, 0.0).unwrap();
    let eq = count_equation(&[1, 1, -2], 2, 5).unwrap().total;
    let eq_oracle = exhaustive_equation(&[1, 1, -2], 2, 5);
    outcome(
        mismatches == 0 && diag == 11 && eq == eq_oracle,
        format!(
            "100 random instances, {mismatches} mismatches; count_inequality((1,-1),2,10,0) = {diag}; \
             count_equation((1,1,-2),2,5) = {eq}, exhaustive oracle {eq_oracle} (listed value 17 \
             disagrees with the oracle: every (t,t,t) solves x^2 + y^2 = 2z^2)"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    for _ in 0..50 {
        let a1: i64 = rng.random_range(1..=5);
        let a2: i64 = rng.random_range(a1..=6);
        let d = rng.random_range(2..=3);
        let m = rng.random_range(2..=12);
        let h = rng.random_range(1..=(m as i64).pow(d)) as f64;
        let c = fejer_chain_check(a1, -a2, d, m, h).unwrap();
        if !c.holds {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("50 instances, {violations} violations"))
}

fn criterion_9() -> Outcome {
    let diag = exponent_fit(
        &CountTemplate::Inequality { a: vec![1, -1], d: 2, slack: Slack::Fixed(0.0) },
        &[64, 128, 256, 512, 1024, 2048, 4096],
    )
    .unwrap()
    .fit
    .slope;
    let eq = exponent_fit(
        &CountTemplate::Equation { a: vec![1, 1, -2], d: 2, primitive: false },
        &[8, 16, 32, 64, 128, 256],
    )
    .unwrap()
    .fit
    .slope;
    let four = exponent_fit(
        &CountTemplate::Inequality { a: vec![1, -1, 1, -1], d: 2, slack: Slack::Fixed(1.0) },
        &[8, 16, 32, 64, 128],
    )
    .unwrap()
    .fit
    .slope;
    outcome(
        (diag - 1.0).abs() <= 0.02 && eq <= 1.3 && four <= 2.3,
        format!("slopes: diagonal {diag:.4}, equation {eq:.4}, four-variable {four:.4}"),
    )
}

fn cofactor(m: &[Vec<i128>]) -> BigInt {
    let n = m.len();
    if n == 1 {
        return BigInt::from(m[0][0]);
    }
    let mut acc = BigInt::from(0);
    for j in 0..n {
        let sub: Vec<Vec<i128>> = m[1..]
            .iter()
            .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect())
            .collect();
        let term = BigInt::from(m[0][j]) * cofactor(&sub);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

fn random_tuple(rng: &mut ChaCha8Rng, ell: usize, k: usize, d: u32, m: u64) -> TupleMatrix {
    let rows = (0..ell)
        .map(|_| (0..k).map(|_| rng.random_range(m..=2 * m)).collect())
        .collect();
    TupleMatrix::new(d, rows).unwrap()
}

fn golden_census() -> BTreeMap<(usize, String), u64> {
    let text = include_str!("golden/census_l2_k2_d2_M1.csv");
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            ((f[0].parse().unwrap(), f[1].to_string()), f[2].parse().unwrap())
        })
        .collect()
}

/// Rows of `{1, 2}^2`, pairwise distinct, binned by rank and
/// `floor(log2 |det|)` of the squared entries.
fn naive_small_census() -> BTreeMap<(usize, String), u64> {
    let mut h = BTreeMap::new();
    for x in 0..16u32 {
        let e: Vec<i64> = (0..4).map(|b| 1 + ((x >> b) & 1) as i64).collect();
        if e[0] == e[2] && e[1] == e[3] {
            continue;
        }
        let det = (e[0] * e[0] * e[3] * e[3] - e[1] * e[1] * e[2] * e[2]).abs();
        let key = if det == 0 {
            (1, "na".to_string())
        } else {
            (2, (63 - det.leading_zeros()).to_string())
        };
        *h.entry(key).or_insert(0) += 1;
    }
    h
}

fn criterion_10() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let golden = golden_census();
    let naive = naive_small_census();
    let hist = census(&CensusConfig::new(2, 2, 2, 1)).unwrap();
    let mut csv = Vec::new();
    write_census_csv(&hist, true, &mut csv).unwrap();
    let produced: BTreeMap<(usize, String), u64> = String::from_utf8(csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            ((f[0].parse().unwrap(), f[1].to_string()), f[2].parse().unwrap())
        })
        .collect();
    let golden_ok = golden == naive && produced == golden;
    pass &= golden_ok;
    notes.push(format!("golden histogram {}", if golden_ok { "matches" } else { "differs" }));

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut rank_mismatch = 0;
    for _ in 0..100_000 {
        let ell = rng.random_range(2..=4);
        let k = rng.random_range(2..=5);
        let d = rng.random_range(2..=3);
        let m = rng.random_range(1..=6);
        let x = random_tuple(&mut rng, ell, k, d, m);
        if exact_rank(&x.t_matrix()) != exact_rank(&x.t_prime()) {
            rank_mismatch += 1;
        }
    }
    pass &= rank_mismatch == 0;
    notes.push(format!("rank(T) != rank(T') on {rank_mismatch} of 1e5"));

    let mut det_mismatch = 0;
    for case in 0..3000 {
        let n = 2 + case % 3;
        let bound: i128 = if case % 2 == 0 { 9 } else { 1 << 40 };
        let rows: Vec<Vec<i128>> =
            (0..n).map(|_| (0..n).map(|_| rng.random_range(-bound..=bound)).collect()).collect();
        let m = IntMatrix::from_rows(&rows).unwrap();
        if determinant(&m).unwrap() != cofactor(&rows) {
            det_mismatch += 1;
        }
    }
    pass &= det_mismatch == 0;
    notes.push(format!("Bareiss != cofactor on {det_mismatch} of 3000"));

    let mut arranged = 0;
    let mut arrangement_violations = 0;
    while arranged < 1000 {
        let ell = rng.random_range(2..=4);
        let k = rng.random_range(ell..=5);
        let m = rng.random_range(2..=8);
        let x = random_tuple(&mut rng, ell, k, 2, m);
        let t = x.t_prime();
        if exact_rank(&t) < ell {
            continue;
        }
        arranged += 1;
        let a = optimally_arrange(&t).unwrap().arranged;
        let rows: Vec<Vec<i128>> = a
            .to_rows()
            .iter()
            .map(|r| r.iter().map(|v| i128::try_from(v).unwrap()).collect())
            .collect();
        for n in 1..=ell {
            let minor = |cols: &[usize]| -> BigInt {
                let sub: Vec<Vec<i128>> =
                    rows[..n].iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
                cofactor(&sub).magnitude().clone().into()
            };
            let lead_cols: Vec<usize> = (0..n).collect();
            let lead = minor(&lead_cols);
            for j in n..k {
                let mut cols: Vec<usize> = (0..n - 1).collect();
                cols.push(j);
                if minor(&cols) > lead {
                    arrangement_violations += 1;
                }
            }
        }
    }
    pass &= arrangement_violations == 0;
    notes.push(format!("arrangement inequality violations {arrangement_violations} on 1e3"));

    let mut checked = 0;
    let mut violations = 0;
    for (ell, k, m) in [(3, 2, 3), (3, 3, 2), (4, 3, 1)] {
        let mut cfg = CensusConfig::new(ell, k, 2, m);
        cfg.check_dependencies = true;
        let h = census(&cfg).unwrap();
        checked += h.dependency_checked;
        violations += h.dependency_violations;
    }
    // independent pass over random rank-deficient tuples
    let mut sampled = 0;
    while sampled < 2000 {
        let m = rng.random_range(1..=5);
        let x = random_tuple(&mut rng, 3, 2, 2, m);
        if !x.rows_distinct() || x.has_proportional_rows() {
            continue;
        }
        let t = x.t_prime();
        let r = exact_rank(&t);
        sampled += 1;
        let dep = dependency_coefficients(&t, r).unwrap();
        if dep.nonzero_counts().iter().any(|&c| c < 2) {
            violations += 1;
        }
    }
    pass &= violations == 0 && checked > 0;
    notes.push(format!(
        "dependency rows with fewer than two nonzero coefficients: {violations} ({checked} census + {sampled} sampled instances)"
    ));
    outcome(pass, notes.join("; "))
}

fn direct_smoothed(form: &DiagonalForm, m: u64, kernels: &SmoothingKernels) -> f64 {
    let pts: Vec<(f64, f64)> = (m..=2 * m)
        .flat_map(|a| (m..=2 * m).map(move |b| (a, b)))
        .map(|(a, b)| {
            let x = [a as f64 / m as f64, b as f64 / m as f64];
            (form.eval(&[a, b]).unwrap(), kernels.variables()[0].eval(&x))
        })
        .collect();
    let scale = (m as f64).powi(form.dim() as i32 - form.degree() as i32);
    let w = &kernels.windows()[0];
    let psi2 = &kernels.variables()[1];
    let mut total = 0.0;
    for (i, &(q1, p1)) in pts.iter().enumerate() {
        if p1 == 0.0 {
            continue;
        }
        for (j, &(q2, _)) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let a = m + (j / (m as usize + 1)) as u64;
            let b = m + (j % (m as usize + 1)) as u64;
            let p2 = psi2.eval(&[a as f64 / m as f64, b as f64 / m as f64]);
            total += p1 * p2 * w.eval((q2 - q1) * scale);
        }
    }
    total
}

fn criterion_11() -> Outcome {
    let kernels = SmoothingKernels::canonical(2, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for alpha in [vec![1.0, 2f64.sqrt()], vec![1.3, 1.7], vec![1.0, 1.0]] {
        let form = DiagonalForm::new(2, alpha).unwrap();
        let fast = smoothed_correlation(&form, 30, &kernels, 2).unwrap();
        let slow = direct_smoothed(&form, 30, &kernels);
        worst = worst.max((fast - slow).abs() / slow.abs().max(1.0));
    }
    let form = DiagonalForm::new(2, vec![1.0, 2f64.sqrt()]).unwrap();
    let a = ShellOptions { samples: 1_000_000, seed: 11 };
    let b = ShellOptions { samples: 1_000_000, seed: 12 };
    let (e1, e2) = shell_schedule(&form, &kernels, a, 2000).unwrap();
    let h1 = hl_expectation(&form, 30, &kernels, 2, (e1, e2), a).unwrap();
    let h2 = hl_expectation(&form, 30, &kernels, 2, (e1 / 2.0, e2 / 2.0), b).unwrap();
    let gap = (h1.value - h2.value).abs();
    let sigma = h1.stderr.hypot(h2.stderr);
    outcome(
        worst <= 1e-10 && gap <= 3.0 * sigma,
        format!(
            "T*_2 vs direct double sum: worst relative difference {worst:.2e}; \
             HL at eps {e2:.4e} and {:.4e}: {:.6} vs {:.6}, difference {:.2} sigma",
            e2 / 2.0,
            h1.value,
            h2.value,
            gap / sigma
        ),
    )
}

fn main() {
    let mut failed = Vec::new();
    let mut report = |n: u32, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|_| outcome(false, "panicked"));
        let tag = if r.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2}: {tag} [{:.1}s] {}", start.elapsed().as_secs_f64(), r.detail);
        if !r.pass {
            failed.push(n);
        }
    };
    report(1, &criterion_1);
    report(2, &criterion_2);
    let start = Instant::now();
    let pair = pair_run(3);
    let pair_secs = start.elapsed().as_secs_f64();
    report(3, &|| criterion_3(&pair, pair_secs));
    report(4, &criterion_4);
    report(5, &|| criterion_5(&pair));
    report(6, &|| criterion_6(&pair));
    report(7, &criterion_7);
    report(8, &criterion_8);
    report(9, &criterion_9);
    report(10, &criterion_10);
    report(11, &criterion_11);
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
