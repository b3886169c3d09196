//! The `diagform` command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 resource cap exceeded, 1 any
//! other failure. Every file written through `--out` gets a sidecar
//! `<out>.manifest.json` with the parsed configuration.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::Serialize;
use serde_json::{json, Value};

use crate::census::{census, write_census_csv, CensusConfig, CensusMode, Distinctness};
use crate::correlate::{
    ell_correlation, gap_sequence, hl_expectation, shell_schedule, smoothed_correlation,
    CorrelationRequest, GapSummary, ShellOptions, SmoothingKernels,
};
use crate::dioph::{
    count_equation_with_cap, count_inequality_with_cap, exponent_fit, fejer_chain_check,
    CountTemplate, Slack, DEFAULT_TABLE_CAP,
};
use crate::enumerate::generate_sequence;
use crate::error::{Error, Result};
use crate::form::{DiagonalForm, IntervalBox};
use crate::sweep::{
    convergence_report, run_sweep, sample_alpha, write_samples_csv, write_summary_csv, FormSource,
    PoissonSource, SequenceSource, SweepConfig, DEFAULT_BOOTSTRAP,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

/// Long-gap threshold used when none is given.
pub const DEFAULT_LONG_GAP: f64 = 2.006;

#[derive(Debug, Parser)]
#[command(name = "diagform", version, about = "Value statistics of diagonal forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sharp l-correlation of one coefficient vector
    Correlate(CorrelateArgs),
    /// Gap statistics and long-gap scan
    Gaps(GapsArgs),
    /// Smoothed correlation against its Hardy-Littlewood expectation
    Smooth(SmoothArgs),
    /// Diophantine solution counts
    #[command(subcommand)]
    Dioph(DiophCommand),
    /// Exact rank and minor census of tuple matrices
    Census(CensusArgs),
    /// Monte Carlo over a coefficient box
    Sweep(SweepArgs),
    /// Write the binary value dump
    DumpSeq(DumpArgs),
}

#[derive(Debug, Subcommand)]
enum DiophCommand {
    /// Solutions of sum a_j x_j^d = 0 with |x_j| <= M
    CountEq(CountEqArgs),
    /// Solutions of |sum a_j x_j^d| <= H with x in [M, 2M]^k
    CountIneq(CountIneqArgs),
    /// Check of the two-coefficient Cauchy-Schwarz chain
    Fejer(FejerArgs),
    /// Log-log growth exponent of a count along a grid of M
    Exponent(ExponentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
struct OutputArgs {
    /// Output file (standard output when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
struct FormArgs {
    #[arg(long = "d")]
    d: u32,
    /// Number of variables; inferred from --alpha or --domain when absent
    #[arg(long = "k")]
    k: Option<usize>,
    /// Comma-separated coefficients
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "alpha_seed")]
    alpha: Option<Vec<f64>>,
    /// Draw the coefficients uniformly from --domain with this seed
    #[arg(long, requires = "domain")]
    alpha_seed: Option<u64>,
    /// Coefficient box `lo:hi[,lo:hi...]`; one axis is repeated k times
    #[arg(long)]
    domain: Option<IntervalBox>,
}

impl FormArgs {
    fn form(&self) -> Result<DiagonalForm> {
        let alpha = match (&self.alpha, self.alpha_seed, &self.domain) {
            (Some(a), _, _) => a.clone(),
            (None, Some(seed), Some(domain)) => {
                sample_alpha(&broadcast(domain, self.k)?, seed, 0)
            }
            _ => return Err(Error::invalid("give --alpha or --alpha-seed with --domain")),
        };
        if let Some(k) = self.k {
            if k != alpha.len() {
                return Err(Error::invalid(format!(
                    "--k {k} does not match {} coefficients",
                    alpha.len()
                )));
            }
        }
        DiagonalForm::new(self.d, alpha)
    }
}

/// A one-axis box stands for the cube of dimension `k`.
fn broadcast(domain: &IntervalBox, k: Option<usize>) -> Result<IntervalBox> {
    match k {
        Some(k) if domain.dim() == 1 && k > 1 => {
            IntervalBox::cube(domain.lo()[0], domain.hi()[0], k)
        }
        Some(k) if domain.dim() != k => Err(Error::invalid(format!(
            "domain of dimension {} does not match --k {k}",
            domain.dim()
        ))),
        _ => Ok(domain.clone()),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct CorrelateArgs {
    #[command(flatten)]
    form: FormArgs,
    /// One or more sequence lengths; all are prefixes of the longest
    #[arg(long = "M", value_delimiter = ',', required = true)]
    m: Vec<usize>,
    #[arg(long)]
    ell: usize,
    /// Window `I_2 x ... x I_l` as `lo:hi,...`
    #[arg(long = "box")]
    window: IntervalBox,
    #[arg(long, default_value_t = 0.15)]
    safety: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GapsArgs {
    #[command(flatten)]
    form: FormArgs,
    #[arg(long = "M")]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_LONG_GAP)]
    threshold: f64,
    #[arg(long, default_value_t = 0.15)]
    safety: f64,
    /// Per-gap CSV `index, gap, gap_unit_mean`
    #[arg(long)]
    gaps_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SmoothArgs {
    #[command(flatten)]
    form: FormArgs,
    #[arg(long = "M")]
    m: u64,
    #[arg(long)]
    ell: usize,
    /// Half-width of the window weights
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    /// Monte Carlo samples for the surface constant
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// Shell hits aimed for at the narrower width
    #[arg(long, default_value_t = 2000)]
    target_hits: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
struct CountEqArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    a: Vec<i64>,
    #[arg(long = "d")]
    d: u32,
    #[arg(long = "M")]
    m: u64,
    /// Only solutions with gcd(x) = 1
    #[arg(long)]
    primitive: bool,
    #[arg(long, default_value_t = DEFAULT_TABLE_CAP)]
    table_cap: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
struct CountIneqArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    a: Vec<i64>,
    #[arg(long = "d")]
    d: u32,
    #[arg(long = "M")]
    m: u64,
    #[arg(long = "H")]
    h: f64,
    #[arg(long, default_value_t = DEFAULT_TABLE_CAP)]
    table_cap: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
struct FejerArgs {
    #[arg(long, allow_hyphen_values = true)]
    a1: i64,
    #[arg(long, allow_hyphen_values = true)]
    a2: i64,
    #[arg(long = "d")]
    d: u32,
    #[arg(long = "M")]
    m: u64,
    #[arg(long = "H")]
    h: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ExponentArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    a: Vec<i64>,
    #[arg(long = "d")]
    d: u32,
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<u64>,
    /// Fixed slack of the inequality
    #[arg(long = "H", conflicts_with_all = ["delta", "equation"])]
    h: Option<f64>,
    /// Slack delta * M^d of the inequality
    #[arg(long, conflicts_with = "equation")]
    delta: Option<f64>,
    /// Count the equation over |x| <= M instead
    #[arg(long)]
    equation: bool,
    #[arg(long, requires = "equation")]
    primitive: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Args, Serialize)]
struct CensusArgs {
    #[arg(long)]
    ell: usize,
    #[arg(long = "k")]
    k: usize,
    #[arg(long = "d")]
    d: u32,
    /// One or more box sizes; the histograms are concatenated
    #[arg(long = "M", value_delimiter = ',', required = true)]
    m: Vec<u64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    mode: ModeArg,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// 2l-row tuples (x; y) with distinct rows within each half
    #[arg(long)]
    doubled: bool,
    /// Count full-rank tuples whose maximal minors are at most D
    #[arg(long = "D")]
    threshold: Option<String>,
    #[arg(long)]
    check_dependencies: bool,
    #[arg(long, default_value_t = crate::census::DEFAULT_EXHAUSTIVE_CAP)]
    cap: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SourceArg {
    Form,
    Poisson,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SweepArgs {
    #[arg(long = "d")]
    d: u32,
    #[arg(long = "k")]
    k: Option<usize>,
    /// Coefficient box; one axis is repeated k times
    #[arg(long)]
    domain: IntervalBox,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "M", value_delimiter = ',', required = true)]
    m: Vec<usize>,
    #[arg(long)]
    ell: usize,
    #[arg(long = "box")]
    window: IntervalBox,
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP)]
    bootstrap: usize,
    #[arg(long, value_enum, default_value_t = SourceArg::Form)]
    source: SourceArg,
    #[arg(long, default_value_t = 0.15)]
    safety: f64,
    /// Summary CSV (standard output when absent)
    #[arg(long)]
    summary_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
struct DumpArgs {
    #[command(flatten)]
    form: FormArgs,
    #[arg(long = "M")]
    m: usize,
    #[arg(long, default_value_t = 0.15)]
    safety: f64,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("diagform: {e}");
        return EXIT_USAGE;
    }
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli.command, &argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("diagform: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Resource { .. } => EXIT_RESOURCE,
        Error::InvalidInput(_) | Error::Range(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("DIAGFORM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::invalid(format!("DIAGFORM_THREADS must be a positive integer, got {v:?}")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Manifest bookkeeping shared by all commands.
struct Run<'a> {
    command: &'static str,
    argv: &'a [String],
    config: Value,
    seed: Option<u64>,
    started: Instant,
    started_unix: f64,
    outputs: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    fn new(command: &'static str, argv: &'a [String], config: &impl Serialize, seed: Option<u64>) -> Self {
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Run {
            command,
            argv,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            seed,
            started: Instant::now(),
            started_unix,
            outputs: Vec::new(),
        }
    }

    /// Writes `body` to `path` (or standard output) and records it.
    fn write(&mut self, path: Option<&Path>, body: &[u8]) -> Result<()> {
        match path {
            Some(p) => {
                let mut f = BufWriter::new(File::create(p)?);
                f.write_all(body)?;
                f.flush()?;
                self.outputs.push(p.to_path_buf());
            }
            None => {
                let mut out = io::stdout().lock();
                out.write_all(body)?;
                out.flush()?;
            }
        }
        Ok(())
    }

    fn finish(self, results: Value) -> Result<()> {
        let manifest = json!({
            "tool": "diagform",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "argv": self.argv,
            "config": self.config,
            "seed": self.seed,
            "started_unix": self.started_unix,
            "wall_clock_seconds": self.started.elapsed().as_secs_f64(),
            "outputs": self.outputs,
            "results": results,
        });
        for p in &self.outputs {
            let f = File::create(manifest_path(p))?;
            serde_json::to_writer_pretty(BufWriter::new(f), &manifest)
                .map_err(|e| Error::Io(io::Error::other(e)))?;
        }
        Ok(())
    }
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(io::Error::other(e.to_string())))
}

fn json_bytes(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v).map_err(|e| Error::Io(io::Error::other(e)))?;
    b.push(b'\n');
    Ok(b)
}

fn dispatch(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Correlate(a) => cmd_correlate(&a, argv),
        Command::Gaps(a) => cmd_gaps(&a, argv),
        Command::Smooth(a) => cmd_smooth(&a, argv),
        Command::Dioph(DiophCommand::CountEq(a)) => cmd_count_eq(&a, argv),
        Command::Dioph(DiophCommand::CountIneq(a)) => cmd_count_ineq(&a, argv),
        Command::Dioph(DiophCommand::Fejer(a)) => cmd_fejer(&a, argv),
        Command::Dioph(DiophCommand::Exponent(a)) => cmd_exponent(&a, argv),
        Command::Census(a) => cmd_census(&a, argv),
        Command::Sweep(a) => cmd_sweep(&a, argv),
        Command::DumpSeq(a) => cmd_dump(&a, argv),
    }
}

#[derive(Serialize)]
struct CorrelateRow {
    alpha: Vec<f64>,
    m: usize,
    ell: usize,
    t_ell: f64,
    raw_count: String,
    vol_i: f64,
    deviation: f64,
}

fn cmd_correlate(a: &CorrelateArgs, argv: &[String]) -> Result<()> {
    let form = a.form.form()?;
    let mut run = Run::new("correlate", argv, a, a.form.alpha_seed);
    let max_m = a.m.iter().copied().max().unwrap_or(0);
    let seq = generate_sequence(&form, max_m, a.safety)?;
    let rows: Vec<CorrelateRow> = a
        .m
        .iter()
        .map(|&m| {
            let req = CorrelationRequest::new(a.ell, a.window.clone(), m)?;
            let r = ell_correlation(seq.values(), &req)?;
            Ok(CorrelateRow {
                alpha: form.alpha().to_vec(),
                m,
                ell: a.ell,
                t_ell: r.statistic,
                raw_count: r.raw_count.to_string(),
                vol_i: r.poisson_target,
                deviation: r.deviation(),
            })
        })
        .collect::<Result<_>>()?;
    let body = match a.output.format {
        Format::Json => json_bytes(&rows)?,
        Format::Csv => {
            let mut header: Vec<String> = (1..=form.dim()).map(|i| format!("alpha_{i}")).collect();
            header.extend(["M", "ell", "T_ell", "raw_count", "vol_I", "deviation"].map(String::from));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let recs: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut v: Vec<String> = r.alpha.iter().map(|&x| num(x)).collect();
                    v.extend([
                        r.m.to_string(),
                        r.ell.to_string(),
                        num(r.t_ell),
                        r.raw_count.clone(),
                        num(r.vol_i),
                        num(r.deviation),
                    ]);
                    v
                })
                .collect();
            csv_bytes(&header, &recs)?
        }
    };
    run.write(a.output.out.as_deref(), &body)?;
    run.finish(json!({ "alpha": form.alpha(), "normalization": form.normalization_constant() }))
}

fn cmd_gaps(a: &GapsArgs, argv: &[String]) -> Result<()> {
    let form = a.form.form()?;
    let mut run = Run::new("gaps", argv, a, a.form.alpha_seed);
    let seq = generate_sequence(&form, a.m, a.safety)?;
    let summary = GapSummary::compute(seq.values(), a.threshold)?;
    if let Some(path) = &a.gaps_out {
        let gaps = gap_sequence(seq.values())?;
        let rows: Vec<Vec<String>> = gaps
            .iter()
            .enumerate()
            .map(|(i, &g)| vec![i.to_string(), num(g), num(g / summary.mean_gap)])
            .collect();
        run.write(Some(path), &csv_bytes(&["index", "gap", "gap_unit_mean"], &rows)?)?;
    }
    let body = match a.output.format {
        Format::Json => json_bytes(&summary)?,
        Format::Csv => csv_bytes(
            &["M", "mean_gap", "max_gap", "ks_exponential", "long_gap_threshold", "long_gap_count"],
            &[vec![
                summary.m.to_string(),
                num(summary.mean_gap),
                num(summary.max_gap),
                num(summary.ks_exponential),
                num(summary.long_gap_threshold),
                summary.long_gap_count.to_string(),
            ]],
        )?,
    };
    run.write(a.output.out.as_deref(), &body)?;
    run.finish(json!({ "alpha": form.alpha() }))
}

#[derive(Serialize)]
struct SmoothRow {
    m: u64,
    ell: usize,
    w: f64,
    t_star: f64,
    hl_expectation: f64,
    hl_stderr: f64,
    ratio: f64,
    surface_constant: f64,
    surface_stderr: f64,
    eps_1: f64,
    eps_2: f64,
}

fn cmd_smooth(a: &SmoothArgs, argv: &[String]) -> Result<()> {
    let form = a.form.form()?;
    let mut run = Run::new("smooth", argv, a, Some(a.seed));
    let kernels = SmoothingKernels::canonical(a.ell, a.w)?;
    let opts = ShellOptions { samples: a.samples, seed: a.seed };
    let eps = shell_schedule(&form, &kernels, opts, a.target_hits)?;
    let hl = hl_expectation(&form, a.m, &kernels, a.ell, eps, opts)?;
    let t_star = smoothed_correlation(&form, a.m, &kernels, a.ell)?;
    let row = SmoothRow {
        m: a.m,
        ell: a.ell,
        w: a.w,
        t_star,
        hl_expectation: hl.value,
        hl_stderr: hl.stderr,
        ratio: t_star / hl.value,
        surface_constant: hl.surface_constant,
        surface_stderr: hl.surface_stderr,
        eps_1: hl.epsilons[0],
        eps_2: hl.epsilons[1],
    };
    let body = match a.output.format {
        Format::Json => json_bytes(&row)?,
        Format::Csv => csv_bytes(
            &[
                "M", "ell", "w", "T_star", "hl_expectation", "hl_stderr", "ratio",
                "surface_constant", "surface_stderr", "eps_1", "eps_2",
            ],
            &[vec![
                row.m.to_string(),
                row.ell.to_string(),
                num(row.w),
                num(row.t_star),
                num(row.hl_expectation),
                num(row.hl_stderr),
                num(row.ratio),
                num(row.surface_constant),
                num(row.surface_stderr),
                num(row.eps_1),
                num(row.eps_2),
            ]],
        )?,
    };
    run.write(a.output.out.as_deref(), &body)?;
    run.finish(json!({ "alpha": form.alpha(), "shell_hits": hl.hits }))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

/// Bare counts go to standard output; files get a CSV record.
fn emit_count(
    run: &mut Run,
    output: &OutputArgs,
    bare: String,
    header: &[&str],
    row: Vec<String>,
    json: Value,
) -> Result<()> {
    match (output.format, &output.out) {
        (Format::Json, out) => run.write(out.as_deref(), &json_bytes(&json)?),
        (Format::Csv, Some(p)) => run.write(Some(p), &csv_bytes(header, &[row])?),
        (Format::Csv, None) => run.write(None, format!("{bare}\n").as_bytes()),
    }
}

fn cmd_count_eq(a: &CountEqArgs, argv: &[String]) -> Result<()> {
    let mut run = Run::new("dioph count-eq", argv, a, None);
    let c = count_equation_with_cap(&a.a, a.d, a.m, a.primitive, a.table_cap)?;
    emit_count(
        &mut run,
        &a.output,
        c.total.to_string(),
        &["a", "d", "M", "primitive", "total", "nonzero"],
        vec![
            join(&a.a),
            a.d.to_string(),
            a.m.to_string(),
            a.primitive.to_string(),
            c.total.to_string(),
            c.nonzero.to_string(),
        ],
        json!({ "a": a.a, "d": a.d, "M": a.m, "primitive": a.primitive, "total": c.total, "nonzero": c.nonzero }),
    )?;
    run.finish(json!({ "total": c.total, "nonzero": c.nonzero }))
}

fn cmd_count_ineq(a: &CountIneqArgs, argv: &[String]) -> Result<()> {
    let mut run = Run::new("dioph count-ineq", argv, a, None);
    let n = count_inequality_with_cap(&a.a, a.d, a.m, a.h, a.table_cap)?;
    emit_count(
        &mut run,
        &a.output,
        n.to_string(),
        &["a", "d", "M", "H", "count"],
        vec![join(&a.a), a.d.to_string(), a.m.to_string(), num(a.h), n.to_string()],
        json!({ "a": a.a, "d": a.d, "M": a.m, "H": a.h, "count": n }),
    )?;
    run.finish(json!({ "count": n }))
}

fn cmd_fejer(a: &FejerArgs, argv: &[String]) -> Result<()> {
    let mut run = Run::new("dioph fejer", argv, a, None);
    let f = fejer_chain_check(a.a1, a.a2, a.d, a.m, a.h)?;
    let body = match a.output.format {
        Format::Json => json_bytes(&f)?,
        Format::Csv => csv_bytes(
            &["a1", "a2", "d", "M", "H", "lhs", "n_a1", "n_a2", "bound", "holds"],
            &[vec![
                a.a1.to_string(),
                a.a2.to_string(),
                a.d.to_string(),
                a.m.to_string(),
                num(a.h),
                f.lhs.to_string(),
                f.n_a1.to_string(),
                f.n_a2.to_string(),
                num(f.bound),
                f.holds.to_string(),
            ]],
        )?,
    };
    run.write(a.output.out.as_deref(), &body)?;
    run.finish(json!({ "holds": f.holds }))
}

fn cmd_exponent(a: &ExponentArgs, argv: &[String]) -> Result<()> {
    let mut run = Run::new("dioph exponent", argv, a, None);
    let template = if a.equation {
        CountTemplate::Equation { a: a.a.clone(), d: a.d, primitive: a.primitive }
    } else {
        let slack = match (a.h, a.delta) {
            (Some(h), None) => Slack::Fixed(h),
            (None, Some(delta)) => Slack::Relative(delta),
            _ => return Err(Error::invalid("give exactly one of --H, --delta or --equation")),
        };
        CountTemplate::Inequality { a: a.a.clone(), d: a.d, slack }
    };
    let fit = exponent_fit(&template, &a.grid)?;
    let body = match a.output.format {
        Format::Json => json_bytes(&fit)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = fit
                .counts
                .iter()
                .map(|&(m, c)| {
                    vec![m.to_string(), c.to_string(), num(fit.fit.slope), num(fit.fit.stderr)]
                })
                .collect();
            csv_bytes(&["M", "count", "slope", "slope_stderr"], &rows)?
        }
    };
    run.write(a.output.out.as_deref(), &body)?;
    run.finish(json!({ "slope": fit.fit.slope, "stderr": fit.fit.stderr }))
}

fn cmd_census(a: &CensusArgs, argv: &[String]) -> Result<()> {
    let seed = (a.mode == ModeArg::Sampled).then_some(a.seed);
    let mut run = Run::new("census", argv, a, seed);
    let threshold = a
        .threshold
        .as_deref()
        .map(|s| {
            s.parse::<BigInt>()
                .map_err(|_| Error::invalid(format!("--D must be an integer, got {s:?}")))
        })
        .transpose()?;
    let mut csv_body = Vec::new();
    let mut hists = Vec::new();
    for (i, &m) in a.m.iter().enumerate() {
        let mut cfg = CensusConfig::new(a.ell, a.k, a.d, m);
        cfg.mode = match a.mode {
            ModeArg::Exhaustive => CensusMode::Exhaustive,
            ModeArg::Sampled => CensusMode::Sampled { samples: a.samples, seed: a.seed },
        };
        if a.doubled {
            cfg.distinctness = Distinctness::Halves;
        }
        cfg.threshold = threshold.clone();
        cfg.check_dependencies = a.check_dependencies;
        cfg.exhaustive_cap = a.cap;
        let h = census(&cfg)?;
        if a.output.format == Format::Csv {
            write_census_csv(&h, i == 0, &mut csv_body)?;
        }
        hists.push(h);
    }
    let body = match a.output.format {
        Format::Json => json_bytes(&hists)?,
        Format::Csv => csv_body,
    };
    run.write(a.output.out.as_deref(), &body)?;
    let totals: Vec<Value> = hists
        .iter()
        .map(|h| {
            json!({
                "M": h.config.m,
                "examined": h.examined,
                "excluded": h.excluded,
                "dependency_checked": h.dependency_checked,
                "dependency_violations": h.dependency_violations,
            })
        })
        .collect();
    run.finish(Value::Array(totals))
}

fn cmd_sweep(a: &SweepArgs, argv: &[String]) -> Result<()> {
    let mut run = Run::new("sweep", argv, a, Some(a.seed));
    let domain = broadcast(&a.domain, a.k)?;
    let config = SweepConfig {
        domain,
        samples: a.samples,
        seed: a.seed,
        schedule: a.m.clone(),
        order: a.ell,
        window: a.window.clone(),
        bootstrap: a.bootstrap,
    };
    let source: Box<dyn SequenceSource> = match a.source {
        SourceArg::Form => Box::new(FormSource { degree: a.d, safety: a.safety }),
        SourceArg::Poisson => Box::new(PoissonSource { seed: a.seed }),
    };
    let result = run_sweep(&config, source.as_ref())?;
    let report = (result.summary.len() >= 2)
        .then(|| convergence_report(&result.summary))
        .transpose()?;
    let (samples_body, summary_body) = match a.output.format {
        Format::Json => (json_bytes(&result)?, json_bytes(&report)?),
        Format::Csv => {
            let mut s = Vec::new();
            write_samples_csv(&result, config.dim(), &mut s)?;
            let mut t = Vec::new();
            write_summary_csv(&result.summary, &mut t)?;
            (s, t)
        }
    };
    if let Some(p) = &a.output.out {
        run.write(Some(p), &samples_body)?;
    }
    run.write(a.summary_out.as_deref(), &summary_body)?;
    let slope = report.and_then(|r| r.l2_slope).map(|f| f.slope);
    run.finish(json!({ "domain_volume": result.domain_volume, "l2_slope": slope }))
}

fn cmd_dump(a: &DumpArgs, argv: &[String]) -> Result<()> {
    let form = a.form.form()?;
    let mut run = Run::new("dump-seq", argv, a, a.form.alpha_seed);
    let seq = generate_sequence(&form, a.m, a.safety)?;
    let mut body = Vec::with_capacity(8 * (a.m + form.dim() + 3) + 5);
    seq.write_dump(&mut body)?;
    run.write(Some(&a.out), &body)?;
    run.finish(json!({ "alpha": form.alpha(), "threshold": seq.threshold() }))
}

