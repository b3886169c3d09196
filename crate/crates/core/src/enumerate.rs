//! Complete enumeration of `x in Z_{>0}^k` with `q(x) <= R`, and generation
//! of the first `M` normalized values.
//!
//! Enumeration is lexicographic with the per-coordinate pruning bound
//! `x_i <= ((R - partial) / alpha_i)^{1/d}`, parallel over the first
//! coordinate. A point is accepted when its coordinate-order partial sums stay
//! `<= R`; the stored value itself is [`DiagonalForm::normalized_value`].

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::form::{exact_power, sum_descending, DiagonalForm};

/// Default cap on the predicted number of lattice points visited.
pub const DEFAULT_POINT_CAP: u64 = 1 << 33;

const DUMP_MAGIC: &[u8; 5] = b"DFLB1";

/// The first `M` normalized values of a form, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSequence {
    form: DiagonalForm,
    values: Vec<f64>,
    threshold: f64,
}

impl ValueSequence {
    pub fn form(&self) -> &DiagonalForm {
        &self.form
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The constant `c(d, k, alpha)` the values were scaled with.
    pub fn normalization(&self) -> f64 {
        self.form.normalization_constant()
    }

    /// Raw cutoff `R`: every `x` with `q(x) <= R` was enumerated.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Writes the little-endian dump: magic `DFLB1`, then `d`, `k`, `M` as
    /// `u64`, the `k` coefficients and the `M` values as `f64`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.form.degree() as u64).to_le_bytes())?;
        w.write_all(&(self.form.dim() as u64).to_le_bytes())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for a in self.form.alpha() {
            w.write_all(&a.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a dump written by [`write_dump`](Self::write_dump). The
    /// threshold is restored as the raw value of the last entry.
    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::invalid("not a DFLB1 sequence dump"));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let d = next_u64(&mut r)?;
        let k = next_u64(&mut r)?;
        let m = next_u64(&mut r)?;
        let degree = u32::try_from(d).map_err(|_| Error::invalid("degree out of range"))?;
        let read_f64s = |r: &mut R, n: u64| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; 8 * n as usize];
            r.read_exact(&mut buf)?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect())
        };
        let alpha = read_f64s(&mut r, k)?;
        let values = read_f64s(&mut r, m)?;
        let form = DiagonalForm::new(degree, alpha)?;
        let threshold = values
            .last()
            .map(|&v| form.raw_threshold(v))
            .unwrap_or(0.0);
        Ok(ValueSequence { form, values, threshold })
    }
}

/// `c(d, k, alpha) * R^{k/d}`: the volume heuristic for the number of points
/// with `q(x) <= R`.
pub fn predicted_count(form: &DiagonalForm, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    form.normalization_constant() * r.powf(form.value_exponent())
}

/// Exact number of `x in Z_{>0}^k` with `q(x) <= R`, using the default cap.
pub fn count_below(form: &DiagonalForm, r: f64) -> Result<u64> {
    count_below_with_cap(form, r, DEFAULT_POINT_CAP)
}

/// As [`count_below`] with an explicit cap on the predicted count.
pub fn count_below_with_cap(form: &DiagonalForm, r: f64, cap: u64) -> Result<u64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("threshold must be positive, got {r}")));
    }
    check_cap(form, r, cap)?;
    let Some(tables) = TermTables::new(form, r)? else {
        return Ok(0);
    };
    let total = (0..tables.first_len())
        .into_par_iter()
        .map(|i| {
            let mut walker = Walker::new(&tables);
            walker.count_from_first(i)
        })
        .sum();
    Ok(total)
}

/// Options for [`generate_sequence_with`].
#[derive(Debug, Clone, Copy)]
pub struct GenerateOptions {
    /// Relative margin above `M` in the predicted count at the cutoff.
    pub safety: f64,
    /// How often the margin may be doubled when too few points were found.
    pub max_retries: u32,
    pub point_cap: u64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions { safety: 0.15, max_retries: 5, point_cap: DEFAULT_POINT_CAP }
    }
}

/// The `M` smallest normalized values `c * q(x)^{k/d}`, `x in Z_{>0}^k`.
pub fn generate_sequence(form: &DiagonalForm, m: usize, safety: f64) -> Result<ValueSequence> {
    generate_sequence_with(form, m, GenerateOptions { safety, ..Default::default() })
}

pub fn generate_sequence_with(
    form: &DiagonalForm,
    m: usize,
    opts: GenerateOptions,
) -> Result<ValueSequence> {
    if m < 2 {
        return Err(Error::invalid(format!("need M >= 2, got {m}")));
    }
    if !(opts.safety >= 0.0 && opts.safety.is_finite()) {
        return Err(Error::invalid("safety margin must be a finite nonnegative number"));
    }
    let c = form.normalization_constant();
    let mut safety = opts.safety;
    let mut found = 0usize;
    for _ in 0..=opts.max_retries {
        let r = ((1.0 + safety) * m as f64 / c).powf(1.0 / form.value_exponent());
        check_cap(form, r, opts.point_cap)?;
        let mut values = enumerate_values(form, r)?;
        found = values.len();
        if found >= m {
            // stable: ties keep lexicographic enumeration order
            values.par_sort_by(f64::total_cmp);
            values.truncate(m);
            return Ok(ValueSequence { form: form.clone(), values, threshold: r });
        }
        safety = if safety > 0.0 { 2.0 * safety } else { 0.15 };
    }
    Err(Error::Generation {
        alpha: form.alpha().to_vec(),
        reason: format!(
            "only {found} values below the cutoff after {} retries (wanted {m})",
            opts.max_retries
        ),
    })
}

/// Builds a sequence from externally produced values (synthetic data,
/// dumps). The values are sorted; the threshold is taken from the largest.
pub fn sequence_from_values(form: DiagonalForm, mut values: Vec<f64>) -> Result<ValueSequence> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("sequence values must be finite"));
    }
    values.sort_by(f64::total_cmp);
    let threshold = values.last().map(|&v| form.raw_threshold(v.max(0.0))).unwrap_or(0.0);
    Ok(ValueSequence { form, values, threshold })
}

fn check_cap(form: &DiagonalForm, r: f64, cap: u64) -> Result<()> {
    let projected = predicted_count(form, r);
    if projected > cap as f64 {
        return Err(Error::resource("lattice enumeration", projected, cap as f64));
    }
    Ok(())
}

fn enumerate_values(form: &DiagonalForm, r: f64) -> Result<Vec<f64>> {
    let Some(tables) = TermTables::new(form, r)? else {
        return Ok(Vec::new());
    };
    let chunks: Vec<Vec<f64>> = (0..tables.first_len())
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            let mut walker = Walker::new(&tables);
            walker.values_from_first(i, form, &mut out);
            out
        })
        .collect();
    Ok(chunks.concat())
}

/// Per-coordinate tables `alpha_i * x^d` for `x = 1..=max_i`.
struct TermTables {
    terms: Vec<Vec<f64>>,
    /// `tail_min[i] = sum_{j > i} alpha_j`: the least the later coordinates add.
    tail_min: Vec<f64>,
    r: f64,
}

impl TermTables {
    fn new(form: &DiagonalForm, r: f64) -> Result<Option<Self>> {
        let alpha = form.alpha();
        let k = alpha.len();
        let d = form.degree();
        let mut tail_min = vec![0.0; k];
        for i in (0..k - 1).rev() {
            tail_min[i] = tail_min[i + 1] + alpha[i + 1];
        }
        let others: f64 = alpha.iter().sum();
        if others > r {
            return Ok(None);
        }
        let mut terms = Vec::with_capacity(k);
        for (i, &a) in alpha.iter().enumerate() {
            let room = r - (others - a);
            let mut table = Vec::new();
            let mut x = 1u64;
            loop {
                let t = a * exact_power(x, d)? as f64;
                if t > room {
                    break;
                }
                table.push(t);
                x += 1;
            }
            debug_assert!(!table.is_empty(), "coordinate {i} admits x = 1");
            terms.push(table);
        }
        Ok(Some(TermTables { terms, tail_min, r }))
    }

    fn first_len(&self) -> usize {
        self.terms[0].len()
    }
}

struct Walker<'a> {
    tables: &'a TermTables,
    chosen: Vec<f64>,
}

impl<'a> Walker<'a> {
    fn new(tables: &'a TermTables) -> Self {
        Walker { tables, chosen: Vec::with_capacity(tables.terms.len()) }
    }

    fn count_from_first(&mut self, first: usize) -> u64 {
        let t = self.tables.terms[0][first];
        if t + self.tables.tail_min[0] > self.tables.r {
            return 0;
        }
        self.count(1, t)
    }

    fn count(&mut self, coord: usize, partial: f64) -> u64 {
        let tables = self.tables;
        let table = &tables.terms[coord];
        if coord + 1 == table_count(tables) {
            return table.partition_point(|&t| partial + t <= tables.r) as u64;
        }
        let mut total = 0;
        for &t in table {
            let p = partial + t;
            if p + tables.tail_min[coord] > tables.r {
                break;
            }
            total += self.count(coord + 1, p);
        }
        total
    }

    fn values_from_first(&mut self, first: usize, form: &DiagonalForm, out: &mut Vec<f64>) {
        let t = self.tables.terms[0][first];
        if t + self.tables.tail_min[0] > self.tables.r {
            return;
        }
        self.chosen.clear();
        self.chosen.push(t);
        self.values(1, t, form, out);
    }

    fn values(&mut self, coord: usize, partial: f64, form: &DiagonalForm, out: &mut Vec<f64>) {
        let tables = self.tables;
        let last = coord + 1 == table_count(tables);
        let mut scratch = [0.0f64; 16];
        for &t in &tables.terms[coord] {
            let p = partial + t;
            if p + tables.tail_min[coord] > tables.r {
                break;
            }
            self.chosen.push(t);
            if last {
                let k = self.chosen.len();
                let q = if k <= scratch.len() {
                    scratch[..k].copy_from_slice(&self.chosen);
                    sum_descending(&mut scratch[..k])
                } else {
                    sum_descending(&mut self.chosen.clone())
                };
                out.push(form.normalize(q));
            } else {
                self.values(coord + 1, p, form, out);
            }
            self.chosen.pop();
        }
    }
}

fn table_count(t: &TermTables) -> usize {
    t.terms.len()
}
