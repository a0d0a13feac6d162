//! Command-line front end. Exit codes: 0 success, 1 invalid input or
//! usage, 2 a model prediction was not reproduced by an oracle.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{
    build_report, canonical_json, format_real, parse_inputs, parse_taxonomy, write_report, Format,
    InputBundle, ReportOptions,
};
use crate::matrix::{JointMatrix, NormalizedConfusionMatrix};
use crate::model::{factorize, omega_closed, omega_recursive, psi, PsiMode, Stage, StageChain};
use crate::simulator::{
    compare, enumerate_exact, imbalance_sweep, simulate_pipeline, simulate_taxonomy,
    DeviationReport, EdgeCheck, SimConfig, SimMode, SweepReport, DEFAULT_Z_THRESHOLD,
    ENUMERATION_LIMIT,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FALSIFIED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "progfilter",
    version,
    about = "Expected confusion matrices of progressive-filtering pipelines"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the pipelines of a taxonomy, one slash-joined path per line.
    Pipelines(PipelinesArgs),
    /// Predict Ω, its factorization and the metrics of every pipeline.
    Analyze(AnalyzeArgs),
    /// Cross-check closed form, recurrence and exact enumeration.
    Verify(VerifyArgs),
    /// Compare predictions with a seeded Monte-Carlo run.
    Simulate(SimulateArgs),
    /// Evaluate one pipeline under many inputs sharing a positive rate.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct PipelinesArgs {
    #[arg(long)]
    pub taxonomy: PathBuf,
    #[arg(long)]
    pub leaf_only: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub taxonomy: PathBuf,
    #[arg(long)]
    pub profiles: PathBuf,
    #[arg(long)]
    pub leaf_only: bool,
    /// Slash-joined pipeline, e.g. A/B/D.
    #[arg(long)]
    pub pipeline: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, requires = "profiles")]
    pub taxonomy: Option<PathBuf>,
    #[arg(long, requires = "taxonomy")]
    pub profiles: Option<PathBuf>,
    /// Longest pipeline checked by exhaustive enumeration.
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Random pipelines checked in addition to the taxonomy's.
    #[arg(long, default_value_t = 200)]
    pub random: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub taxonomy: PathBuf,
    #[arg(long)]
    pub profiles: PathBuf,
    /// Simulate only this pipeline instead of the whole taxonomy.
    #[arg(long)]
    pub pipeline: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub m: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub replications: u32,
    #[arg(long, default_value_t = DEFAULT_Z_THRESHOLD)]
    pub z_threshold: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub taxonomy: PathBuf,
    #[arg(long)]
    pub profiles: PathBuf,
    #[arg(long)]
    pub pipeline: String,
    /// Positive rate `F_L` shared by all distributions.
    #[arg(long)]
    pub target_rate: f64,
    #[arg(long, default_value_t = 100)]
    pub distributions: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

struct Outcome {
    text: String,
    code: i32,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))
}

fn load(taxonomy: &Path, profiles: &Path) -> Result<InputBundle> {
    parse_inputs(&read(taxonomy)?, &read(profiles)?)
}

fn pipelines(args: &PipelinesArgs) -> Result<Outcome> {
    let t = parse_taxonomy(&read(&args.taxonomy)?)?;
    let mut paths: Vec<String> = t
        .enumerate_pipelines(args.leaf_only)
        .iter()
        .map(|p| p.path())
        .collect();
    paths.sort();
    let text = match args.output.format {
        Some(Format::Json) => canonical_json(&paths),
        _ => paths.iter().map(|p| format!("{p}\n")).collect(),
    };
    Ok(Outcome {
        text,
        code: EXIT_OK,
    })
}

fn analyze(args: &AnalyzeArgs) -> Result<Outcome> {
    let bundle = load(&args.taxonomy, &args.profiles)?;
    let report = build_report(
        &bundle,
        &ReportOptions {
            leaf_only: args.leaf_only,
            pipeline: args.pipeline.clone(),
        },
    )?;
    Ok(Outcome {
        text: write_report(&report, args.output.format.unwrap_or_default()),
        code: EXIT_OK,
    })
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct Deviations {
    /// Absent when the pipeline is longer than the enumeration bound.
    pub exact_vs_recursive: Option<f64>,
    pub exact_vs_closed: Option<f64>,
    pub recursive_vs_closed: f64,
    pub psi_recursive_vs_closed: f64,
    pub factorization_residual: f64,
    pub omega_sum_error: f64,
}

impl Deviations {
    fn max(&self) -> f64 {
        [
            self.exact_vs_recursive.unwrap_or(0.0),
            self.exact_vs_closed.unwrap_or(0.0),
            self.recursive_vs_closed,
            self.psi_recursive_vs_closed,
            self.factorization_residual,
            self.omega_sum_error,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn merge(&mut self, o: &Deviations) {
        let opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self.exact_vs_recursive = opt(self.exact_vs_recursive, o.exact_vs_recursive);
        self.exact_vs_closed = opt(self.exact_vs_closed, o.exact_vs_closed);
        self.recursive_vs_closed = self.recursive_vs_closed.max(o.recursive_vs_closed);
        self.psi_recursive_vs_closed = self.psi_recursive_vs_closed.max(o.psi_recursive_vs_closed);
        self.factorization_residual = self.factorization_residual.max(o.factorization_residual);
        self.omega_sum_error = self.omega_sum_error.max(o.omega_sum_error);
    }
}

/// Runs every cross-check on one chain.
pub fn cross_check(chain: &StageChain, max_len: usize) -> Result<Deviations> {
    let rec = omega_recursive(chain);
    let closed = omega_closed(chain);
    let diff = |a: &JointMatrix, b: &JointMatrix| a.as_mat().max_abs_diff(&b.as_mat());
    let (exact_vs_recursive, exact_vs_closed) = if chain.depth() <= max_len {
        let exact = enumerate_exact(chain)?;
        (Some(diff(&exact, &rec)), Some(diff(&exact, &closed)))
    } else {
        (None, None)
    };
    let gammas = chain.gammas();
    let psi_gap = psi(&gammas, PsiMode::Recursive)
        .as_mat()
        .max_abs_diff(&psi(&gammas, PsiMode::Closed).as_mat());
    let fac = factorize(chain);
    Ok(Deviations {
        exact_vs_recursive,
        exact_vs_closed,
        recursive_vs_closed: diff(&rec, &closed),
        psi_recursive_vs_closed: psi_gap,
        factorization_residual: fac.reconstruct().max_abs_diff(&rec.as_mat()),
        omega_sum_error: (rec.total() - 1.0).abs().max((closed.total() - 1.0).abs()),
    })
}

/// Random chain of depth `1..=max_len`; about one stage in ten has a
/// degenerate `f = 1` or `γ01 = 0`.
pub fn random_chain(rng: &mut ChaCha8Rng, max_len: usize) -> StageChain {
    let depth = rng.gen_range(1..=max_len.max(1));
    let stages = (0..depth)
        .map(|_| {
            let f = if rng.gen_bool(0.1) {
                1.0
            } else {
                rng.gen::<f64>()
            };
            let fp = if rng.gen_bool(0.1) {
                0.0
            } else {
                rng.gen::<f64>()
            };
            Stage {
                f,
                gamma: NormalizedConfusionMatrix::from_rates(fp, rng.gen()),
            }
        })
        .collect();
    StageChain::new(stages).expect("generated f lie in [0,1]")
}

#[derive(Debug, Serialize)]
struct VerifyEntry {
    pipeline: String,
    depth: usize,
    deviations: Deviations,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct RandomSummary {
    seed: u64,
    count: usize,
    max_deviations: Deviations,
    failures: usize,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    tol: f64,
    max_len: usize,
    pipelines: Vec<VerifyEntry>,
    random: RandomSummary,
    max_deviation: f64,
    passed: bool,
}

fn verify(args: &VerifyArgs) -> Result<Outcome> {
    if args.max_len > ENUMERATION_LIMIT {
        return Err(Error::TooLongForEnumeration {
            len: args.max_len,
            limit: ENUMERATION_LIMIT,
        });
    }
    if args.tol.is_nan() || args.tol < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "tolerance {} must be non-negative",
            args.tol
        )));
    }
    let mut entries = Vec::new();
    if let (Some(t), Some(p)) = (&args.taxonomy, &args.profiles) {
        let bundle = load(t, p)?;
        let mut paths = bundle.taxonomy.enumerate_pipelines(false);
        paths.sort_by_key(|p| p.path());
        for p in paths {
            let chain = StageChain::from_pipeline(&p, &bundle.profiles)?;
            let d = cross_check(&chain, args.max_len)?;
            entries.push(VerifyEntry {
                pipeline: p.path(),
                depth: chain.depth(),
                passed: d.max() <= args.tol,
                deviations: d,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut random_max = Deviations::default();
    let mut failures = 0;
    for _ in 0..args.random {
        let d = cross_check(&random_chain(&mut rng, args.max_len), args.max_len)?;
        if d.max() > args.tol {
            failures += 1;
        }
        random_max.merge(&d);
    }
    let max_deviation = entries
        .iter()
        .map(|e| e.deviations.max())
        .fold(random_max.max(), f64::max);
    let passed = max_deviation <= args.tol;
    let report = VerifyReport {
        tol: args.tol,
        max_len: args.max_len,
        pipelines: entries,
        random: RandomSummary {
            seed: args.seed,
            count: args.random,
            max_deviations: random_max,
            failures,
        },
        max_deviation,
        passed,
    };
    let text = match args.output.format.unwrap_or_default() {
        Format::Json => canonical_json(&report),
        Format::Tsv => {
            let mut out = String::from("pipeline\tdepth\tmax_deviation\tpassed\n");
            for e in &report.pipelines {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:e}\t{}",
                    e.pipeline,
                    e.depth,
                    e.deviations.max(),
                    e.passed
                );
            }
            let _ = writeln!(
                out,
                "random[{}]\t-\t{:e}\t{}",
                report.random.count,
                report.random.max_deviations.max(),
                report.random.failures == 0
            );
            out
        }
    };
    Ok(Outcome {
        text,
        code: if passed { EXIT_OK } else { EXIT_FALSIFIED },
    })
}

#[derive(Debug, Serialize)]
struct SimEntry {
    pipeline: String,
    /// False when the generator cannot reproduce every edge probability of
    /// the pipeline; such entries do not affect the verdict.
    model_exact: bool,
    counts: [[u64; 2]; 2],
    omega: [[f64; 2]; 2],
    deviation: DeviationReport,
}

#[derive(Debug, Serialize)]
struct SimRun {
    replication: u32,
    seed: u64,
    pipelines: Vec<SimEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<EdgeCheck>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inconsistent_label_sets: Option<u64>,
    max_z: f64,
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    mode: SimMode,
    m: u64,
    seed: u64,
    replications: u32,
    z_threshold: f64,
    runs: Vec<SimRun>,
    passed_runs: u32,
    max_z: f64,
    passed: bool,
}

fn sim_entry(
    pipeline: String,
    model_exact: bool,
    omega: JointMatrix,
    outcome: &crate::simulator::SimOutcome,
    z: f64,
) -> SimEntry {
    SimEntry {
        pipeline,
        model_exact,
        counts: outcome.counts,
        omega: omega.as_mat().rows(),
        deviation: compare(&omega, outcome, z),
    }
}

fn simulate(args: &SimulateArgs) -> Result<Outcome> {
    let bundle = load(&args.taxonomy, &args.profiles)?;
    if args.z_threshold.is_nan() || args.z_threshold <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "z threshold {} must be positive",
            args.z_threshold
        )));
    }
    let mode = if args.pipeline.is_some() {
        SimMode::Pipeline
    } else {
        SimMode::Taxonomy
    };
    let base = SimConfig {
        m: args.m,
        seed: args.seed,
        mode,
        replications: args.replications,
    };
    base.validate()?;
    let mut runs = Vec::new();
    for r in 0..args.replications {
        let cfg = SimConfig {
            seed: base.replication_seed(r),
            ..base
        };
        let run = match &args.pipeline {
            Some(path) => {
                let p = bundle.taxonomy.pipeline(path)?;
                let chain = StageChain::from_pipeline(&p, &bundle.profiles)?;
                let outcome = simulate_pipeline(&chain, &cfg)?;
                let entry = sim_entry(
                    p.path(),
                    true,
                    omega_recursive(&chain),
                    &outcome,
                    args.z_threshold,
                );
                SimRun {
                    replication: r,
                    seed: cfg.seed,
                    max_z: entry.deviation.max_z,
                    pipelines: vec![entry],
                    edges: None,
                    inconsistent_label_sets: None,
                }
            }
            None => {
                let outcome = simulate_taxonomy(&bundle.taxonomy, &bundle.profiles, &cfg)?;
                let mut entries = Vec::new();
                for tally in &outcome.pipelines {
                    let p = bundle.taxonomy.pipeline(&tally.pipeline)?;
                    let chain = StageChain::from_pipeline(&p, &bundle.profiles)?;
                    entries.push(sim_entry(
                        tally.pipeline.clone(),
                        tally.model_exact,
                        omega_recursive(&chain),
                        &tally.outcome,
                        args.z_threshold,
                    ));
                }
                entries.sort_by(|a, b| a.pipeline.cmp(&b.pipeline));
                SimRun {
                    replication: r,
                    seed: cfg.seed,
                    max_z: entries
                        .iter()
                        .filter(|e| e.model_exact)
                        .map(|e| e.deviation.max_z)
                        .fold(0.0, f64::max),
                    pipelines: entries,
                    edges: Some(outcome.edges),
                    inconsistent_label_sets: Some(outcome.inconsistent_label_sets),
                }
            }
        };
        runs.push(run);
    }
    let max_z = runs.iter().map(|r| r.max_z).fold(0.0, f64::max);
    let inconsistent = runs
        .iter()
        .any(|r| r.inconsistent_label_sets.unwrap_or(0) > 0);
    let passed = max_z <= args.z_threshold && !inconsistent;
    let report = SimulateReport {
        mode,
        m: args.m,
        seed: args.seed,
        replications: args.replications,
        z_threshold: args.z_threshold,
        passed_runs: runs.iter().filter(|r| r.max_z <= args.z_threshold).count() as u32,
        runs,
        max_z,
        passed,
    };
    let text = match args.output.format.unwrap_or_default() {
        Format::Json => canonical_json(&report),
        Format::Tsv => {
            let mut out = String::from(
                "replication\tseed\tpipeline\tmodel_exact\tn00\tn01\tn10\tn11\tmax_z\tpassed\n",
            );
            for run in &report.runs {
                for e in &run.pipelines {
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        run.replication,
                        run.seed,
                        e.pipeline,
                        e.model_exact,
                        e.counts[0][0],
                        e.counts[0][1],
                        e.counts[1][0],
                        e.counts[1][1],
                        format_real(e.deviation.max_z),
                        e.deviation.passed
                    );
                }
            }
            out
        }
    };
    Ok(Outcome {
        text,
        code: if passed { EXIT_OK } else { EXIT_FALSIFIED },
    })
}

fn sweep_tsv(r: &SweepReport) -> String {
    let depth = r.rows.first().map_or(0, |row| row.fs.len());
    let mut out = String::from("row");
    for j in 1..=depth {
        let _ = write!(out, "\tf_{j}");
    }
    out.push_str("\tw00\tw01\tw10\tw11\ttP\ttR\ttF1\ttA\n");
    let opt = |x: Option<f64>| x.map_or_else(|| "NA".to_owned(), format_real);
    for (i, row) in r.rows.iter().enumerate() {
        let _ = write!(out, "{i}");
        for f in &row.fs {
            let _ = write!(out, "\t{}", format_real(*f));
        }
        let o = row.omega;
        let _ = writeln!(
            out,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            format_real(o.w00()),
            format_real(o.w01()),
            format_real(o.w10()),
            format_real(o.w11()),
            opt(row.metrics.precision),
            opt(row.metrics.recall),
            opt(row.metrics.f1),
            format_real(row.metrics.accuracy),
        );
    }
    out
}

fn sweep(args: &SweepArgs) -> Result<Outcome> {
    let bundle = load(&args.taxonomy, &args.profiles)?;
    let p = bundle.taxonomy.pipeline(&args.pipeline)?;
    let gammas = bundle.profiles.resolve(&p)?;
    let cfg = SimConfig::new(1, args.seed)?;
    let report = imbalance_sweep(&gammas, args.target_rate, args.distributions, &cfg)?;
    let text = match args.output.format.unwrap_or_default() {
        Format::Json => canonical_json(&report),
        Format::Tsv => sweep_tsv(&report),
    };
    Ok(Outcome {
        text,
        code: EXIT_OK,
    })
}

fn output_of(cmd: &Command) -> &OutputArgs {
    match cmd {
        Command::Pipelines(a) => &a.output,
        Command::Analyze(a) => &a.output,
        Command::Verify(a) => &a.output,
        Command::Simulate(a) => &a.output,
        Command::Sweep(a) => &a.output,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing the report to `stdout` or `--out` and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Pipelines(a) => pipelines(a),
        Command::Analyze(a) => analyze(a),
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_INVALID;
        }
    };
    let written = match &output_of(&cli.command).out {
        Some(path) => std::fs::write(path, &outcome.text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout
            .write_all(outcome.text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        let _ = writeln!(stderr, "error: {msg}");
        return EXIT_INVALID;
    }
    if outcome.code == EXIT_FALSIFIED {
        let _ = writeln!(stderr, "verification failed");
    }
    outcome.code
}
