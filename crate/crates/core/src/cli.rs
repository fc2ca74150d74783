//! Command-line front end. Flags may also come from a TOML run file given
//! with `--config`; flags on the command line win over the file.
//!
//! Exit codes: 0 when nothing was violated, 2 when some verdict is
//! `VIOLATED` (or a suite fails), 1 on usage, config or input errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Deserialize;

use crate::bounds::{
    frobenius_bound, kmeans_bound, ltl_reduction_bound, operator_kernel_bound, theorem1_bound, BoundResult,
};
use crate::classes::FunctionClass;
use crate::contraction::{verify_vector_contraction, Verdict, VerificationReport};
use crate::counterexample::{counterexample_instance, refute_conjecture};
use crate::error::{Error, Result};
use crate::estimator::{complexity_scalar, complexity_vector, ExpectationEngine, Method, DEFAULT_DRAWS, DEFAULT_SEED};
use crate::io::{load_class_file, parse_class};
use crate::lipschitz::LipschitzLoss;
use crate::rng::draw_stream;
use crate::subgaussian::SubgaussianDist;
use crate::suite::{run_all, run_suite, suite_name, write_csv, CsvRow, SUITES};

pub const THREADS_ENV: &str = "RADCOMPLEX_THREADS";

#[derive(Debug, Parser)]
#[command(name = "radcomplex", version, about = "Rademacher and sub-gaussian complexity toolkit")]
pub struct Cli {
    /// TOML run file; its keys mirror the long flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed [default: 0x5EED = 24301].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo draws [default: 10000].
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    /// Noise law: rademacher, normal, uniform:<a>.
    #[arg(long, global = true)]
    pub dist: Option<String>,
    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Estimate a complexity of a class file.
    Estimate(ClassArgs),
    /// Check the vector-contraction inequality.
    Verify(VerifyArgs),
    /// Evaluate a closed-form bound.
    Bounds(BoundsArgs),
    /// The orthonormal counterexample to the norm-form inequality.
    Counterexample(CounterexampleArgs),
    /// Run the bundled verification suites.
    Suite(SuiteArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ClassArgs {
    /// Class file.
    #[arg(long)]
    pub class: Option<PathBuf>,
    /// Loss catalog entries; one entry is reused for every point.
    #[arg(long, value_delimiter = ';')]
    pub losses: Vec<String>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    /// Random instance family instead of a class file.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Finite classes with n ≤ 4, K ≤ 3, ≤ 6 tables, entries in [-1,1],
    /// Euclidean-norm losses, exact on both sides.
    FiniteRandom,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BoundsArgs {
    #[arg(long, value_enum)]
    pub kind: Option<BoundKind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub mean: Option<f64>,
    #[arg(long)]
    pub complexity: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub lipschitz: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Kernel traces, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub traces: Vec<f64>,
    /// Sample for the Frobenius bound.
    #[arg(long)]
    pub class: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Theorem1,
    Kmeans,
    Frobenius,
    Operator,
    Ltl,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Candidate constant K; reports the least n with n/2 > K√n.
    #[arg(long = "constant")]
    pub constant: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SuiteArgs {
    #[arg(long)]
    pub all: bool,
    /// Suite id, repeatable.
    #[arg(long = "criterion")]
    pub criteria: Vec<u8>,
}

/// The TOML run file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub draws: Option<usize>,
    pub dist: Option<String>,
    pub method: Option<MethodArg>,
    /// Path of a class file, relative to the run file.
    pub class: Option<PathBuf>,
    /// A class in the class-file format, inline.
    pub class_inline: Option<String>,
    pub losses: Option<Vec<String>>,
    pub output: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub trials: Option<usize>,
    pub criteria: Option<Vec<u8>>,
    pub n: Option<usize>,
    pub constant: Option<f64>,
    pub bound: Option<BoundsConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub kind: Option<BoundKind>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub mean: Option<f64>,
    pub complexity: Option<f64>,
    pub delta: Option<f64>,
    pub lipschitz: Option<f64>,
    pub radius: Option<f64>,
    pub traces: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((1, 1));
            Error::Parse {
                path: path.display().to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse(&text, path)?;
        if let (Some(class), Some(dir)) = (&config.class, path.parent()) {
            config.class = Some(dir.join(class));
        }
        Ok(config)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Human-readable report, CSV rows and exit status of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: String,
    pub rows: Vec<CsvRow>,
    pub csv_path: Option<PathBuf>,
    pub violated: bool,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.violated {
            2
        } else {
            0
        }
    }
}

struct Settings {
    seed: u64,
    draws: usize,
    dist: SubgaussianDist,
    method: MethodArg,
}

impl Settings {
    fn engine(&self) -> ExpectationEngine {
        let base = ExpectationEngine::auto(self.dist, self.draws, self.seed);
        match self.method {
            MethodArg::Auto => base,
            MethodArg::Exact => ExpectationEngine { method: Method::ExactEnum, ..base },
            MethodArg::MonteCarlo => ExpectationEngine { method: Method::MonteCarlo, ..base },
        }
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn need<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing --{name}")))
}

/// Merge the parsed command line with its run file and execute it.
pub fn run(cli: Cli) -> Result<RunOutput> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let command = match (cli.command, config.command.as_deref()) {
        (Some(c), _) => c,
        (None, Some("estimate")) => Command::Estimate(ClassArgs::default()),
        (None, Some("verify")) => Command::Verify(VerifyArgs::default()),
        (None, Some("bounds")) => Command::Bounds(BoundsArgs::default()),
        (None, Some("counterexample")) => Command::Counterexample(CounterexampleArgs::default()),
        (None, Some("suite")) => Command::Suite(SuiteArgs::default()),
        (None, Some(other)) => return Err(Error::Config(format!("unknown command {other:?}"))),
        (None, None) => return Err(Error::Config("no command given".into())),
    };
    let dist = match pick(cli.dist, config.dist.clone()) {
        Some(name) => SubgaussianDist::parse(&name)?,
        None => SubgaussianDist::rademacher(),
    };
    let mut settings = Settings {
        seed: pick(cli.seed, config.seed).unwrap_or(DEFAULT_SEED),
        draws: pick(cli.draws, config.draws).unwrap_or(DEFAULT_DRAWS),
        dist,
        method: config.method.unwrap_or(MethodArg::Auto),
    };
    let csv_path = pick(cli.csv, config.output.clone());
    let (report, rows, violated) = match command {
        Command::Estimate(args) => {
            settings.method = args.method.unwrap_or(settings.method);
            estimate(&args, &config, &settings)?
        }
        Command::Verify(args) => {
            settings.method = args.class.method.unwrap_or(settings.method);
            verify(&args, &config, &settings)?
        }
        Command::Bounds(args) => bounds(&args, &config)?,
        Command::Counterexample(args) => counterexample(&args, &config)?,
        Command::Suite(args) => suite(&args, &config, &settings)?,
    };
    Ok(RunOutput {
        report,
        rows,
        csv_path,
        violated,
    })
}

fn load_class(args: &ClassArgs, config: &RunConfig) -> Result<FunctionClass> {
    if let Some(path) = args.class.as_ref().or(config.class.as_ref()) {
        load_class_file(path)
    } else if let Some(text) = &config.class_inline {
        parse_class(text, Path::new("<class_inline>"))
    } else {
        Err(Error::Config("missing --class".into()))
    }
}

fn load_losses(args: &ClassArgs, config: &RunConfig, n: usize) -> Result<Option<Vec<LipschitzLoss>>> {
    let specs = if args.losses.is_empty() {
        config.losses.clone().unwrap_or_default()
    } else {
        args.losses.clone()
    };
    let losses = specs.iter().map(|s| LipschitzLoss::parse(s)).collect::<Result<Vec<_>>>()?;
    match losses.len() {
        0 => Ok(None),
        1 => Ok(Some(vec![losses[0].clone(); n])),
        m if m == n => Ok(Some(losses)),
        m => Err(Error::mismatch("losses per point", n, m)),
    }
}

type Produced = (String, Vec<CsvRow>, bool);

fn estimate(args: &ClassArgs, config: &RunConfig, settings: &Settings) -> Result<Produced> {
    let class = load_class(args, config)?;
    let engine = settings.engine();
    let n = class.sample().n();
    let (quantity, est) = match load_losses(args, config, n)? {
        Some(losses) => ("complexity_scalar", complexity_scalar(&class, &losses, &engine)?),
        None => ("complexity_vector", complexity_vector(&class, &engine)?),
    };
    let mut report = format!("class: {} (n={n}, K={})\n", class.kind_name(), class.output_dim());
    let _ = writeln!(
        report,
        "{quantity} = {} (se {}, {} {}, {})",
        est.mean,
        est.std_error,
        est.draws,
        est.method.as_str(),
        est.exactness.as_str()
    );
    Ok((report, vec![CsvRow::new(class.kind_name(), quantity, &est)], false))
}

fn verify(args: &VerifyArgs, config: &RunConfig, settings: &Settings) -> Result<Produced> {
    let preset = pick(args.preset, config.preset);
    let mut rows = Vec::new();
    let mut report = String::new();
    let mut tally = [0usize; 4];
    let mut record = |id: String, r: &VerificationReport, report: &mut String| {
        tally[r.verdict as usize] += 1;
        let _ = writeln!(
            report,
            "{id}: lhs {} <= {} * rhs {} = {} [{}]",
            r.lhs.mean, r.constant, r.rhs.mean, r.bound, r.verdict
        );
        rows.push(CsvRow::from_report(id, "vector_contraction", r));
    };
    match preset {
        Some(Preset::FiniteRandom) => {
            let trials = pick(args.trials, config.trials).unwrap_or(200);
            let engine = settings.engine();
            for t in 0..trials as u64 {
                let mut rng = draw_stream(settings.seed, t);
                let n = rng.random_range(1..=4);
                let k = rng.random_range(1..=3);
                let m = rng.random_range(1..=6);
                let tables = (0..m)
                    .map(|_| nalgebra::DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..=1.0)))
                    .collect();
                let class = FunctionClass::from_tables(tables)?;
                let losses = vec![LipschitzLoss::euclidean_norm(); n];
                let r = verify_vector_contraction(&class, &losses, &settings.dist, &engine)
                    .map_err(|e| Error::Config(format!("instance {t}: {e}")))?;
                record(format!("finite-{t:04}"), &r, &mut report);
            }
        }
        None => {
            let class = load_class(&args.class, config)?;
            let n = class.sample().n();
            let losses = load_losses(&args.class, config, n)?.unwrap_or_else(|| vec![LipschitzLoss::euclidean_norm(); n]);
            let r = verify_vector_contraction(&class, &losses, &settings.dist, &settings.engine())?;
            record(class.kind_name().to_string(), &r, &mut report);
        }
    }
    let order = [Verdict::Holds, Verdict::HoldsWithinTolerance, Verdict::Violated, Verdict::Inconclusive];
    let summary: Vec<String> = order.iter().map(|v| format!("{} {}", tally[*v as usize], v)).collect();
    let _ = writeln!(report, "{}", summary.join(", "));
    let violated = tally[Verdict::Violated as usize] > 0;
    Ok((report, rows, violated))
}

fn bounds(args: &BoundsArgs, config: &RunConfig) -> Result<Produced> {
    let file = config.bound.clone().unwrap_or_default();
    let kind = need(pick(args.kind, file.kind), "kind")?;
    let n = || need(pick(args.n, file.n), "n");
    let k = || need(pick(args.k, file.k), "k");
    let lipschitz = || need(pick(args.lipschitz, file.lipschitz), "lipschitz");
    let radius = || need(pick(args.radius, file.radius), "radius");
    let result: BoundResult = match kind {
        BoundKind::Theorem1 => theorem1_bound(
            need(pick(args.mean, file.mean), "mean")?,
            need(pick(args.complexity, file.complexity), "complexity")?,
            n()?,
            need(pick(args.delta, file.delta), "delta")?,
        )?,
        BoundKind::Kmeans => kmeans_bound(k()?, n()?)?,
        BoundKind::Frobenius => {
            let class = load_class(
                &ClassArgs {
                    class: args.class.clone(),
                    ..ClassArgs::default()
                },
                config,
            )?;
            frobenius_bound(radius()?, class.sample(), k()?)?
        }
        BoundKind::Operator => {
            let traces = if args.traces.is_empty() {
                file.traces.clone().unwrap_or_default()
            } else {
                args.traces.clone()
            };
            operator_kernel_bound(lipschitz()?, radius()?, &traces)?
        }
        BoundKind::Ltl => ltl_reduction_bound(lipschitz()?, n()?, need(pick(args.complexity, file.complexity), "complexity")?)?,
    };
    let mut report = format!("{} = {}\n", result.formula, result.value);
    for (name, v) in &result.inputs {
        let _ = writeln!(report, "  {name} = {v}");
    }
    let _ = writeln!(report, "dominates: {}", result.dominates);
    let id = format!("{kind:?}").to_lowercase();
    Ok((report, vec![CsvRow::value(id, "bound", result.value)], false))
}

fn counterexample(args: &CounterexampleArgs, config: &RunConfig) -> Result<Produced> {
    let n = pick(args.n, config.n).unwrap_or(100);
    let c = counterexample_instance(n)?;
    let mut report = format!("n={n} lhs={} rhs={} ratio={}\n", c.lhs, c.rhs, c.ratio);
    let id = format!("ce-n{n}");
    let mut rows = vec![
        CsvRow::value(&id, "lhs", c.lhs),
        CsvRow::value(&id, "rhs", c.rhs),
        CsvRow::value(&id, "ratio", c.ratio).judged(c.ratio, "REFUTED"),
    ];
    if let Some(k) = pick(args.constant, config.constant) {
        let n_max = args.n_max.unwrap_or(usize::MAX);
        match refute_conjecture(k, n_max)? {
            Some(m) => {
                let _ = writeln!(report, "constant {k} fails first at n={m}");
                rows.push(CsvRow::value(format!("ce-constant-{k}"), "least_n", m as f64).judged(k, "REFUTED"));
            }
            None => {
                let _ = writeln!(report, "constant {k} survives up to n={n_max}");
            }
        }
    }
    let _ = writeln!(report, "norm-form conjecture: REFUTED (ratio grows like sqrt(n)/2)");
    Ok((report, rows, false))
}

fn suite(args: &SuiteArgs, config: &RunConfig, settings: &Settings) -> Result<Produced> {
    let ids = if !args.criteria.is_empty() {
        args.criteria.clone()
    } else if let (false, Some(ids)) = (args.all, &config.criteria) {
        ids.clone()
    } else {
        SUITES.iter().map(|(id, _)| *id).collect()
    };
    for id in &ids {
        if suite_name(*id).is_none() {
            return Err(Error::Config(format!("unknown criterion {id}")));
        }
    }
    let outcomes = if ids.len() == SUITES.len() {
        run_all(settings.seed)?
    } else {
        ids.iter().map(|id| run_suite(*id, settings.seed)).collect::<Result<Vec<_>>>()?
    };
    let mut report = String::new();
    let mut rows = Vec::new();
    let mut violated = false;
    for o in outcomes {
        let _ = writeln!(report, "{}", o.line());
        violated |= !o.passed || o.violations() > 0;
        rows.extend(o.rows);
    }
    Ok((report, rows, violated))
}

/// Number of worker threads from `RADCOMPLEX_THREADS`; `None` means auto.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
        },
    }
}

fn execute(cli: Cli) -> Result<RunOutput> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_from_env()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let out = pool.install(|| run(cli))?;
    let mut csv = Vec::new();
    write_csv(&out.rows, &mut csv).expect("writing to memory");
    match &out.csv_path {
        Some(path) => fs::write(path, &csv).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?,
        None => print!("{}", String::from_utf8_lossy(&csv)),
    }
    Ok(out)
}

/// Parse `args`, run, print, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let to_stdout = cli.csv.is_some();
    match execute(cli) {
        Ok(out) => {
            // keep stdout pure CSV when no --csv path is given
            if to_stdout || out.csv_path.is_some() {
                print!("{}", out.report);
            } else {
                eprint!("{}", out.report);
            }
            out.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> RunOutput {
        run(Cli::try_parse_from(std::iter::once("radcomplex").chain(args.iter().copied())).unwrap()).unwrap()
    }

    #[test]
    fn counterexample_report() {
        let out = run_args(&["counterexample", "--n", "100"]);
        assert!(out.report.contains("lhs=50 rhs=10 ratio=5"), "{}", out.report);
        assert!(out.report.contains("REFUTED"));
        assert_eq!(out.exit_code(), 0);
        let out = run_args(&["counterexample", "--n", "4", "--constant", "2"]);
        assert!(out.report.contains("fails first at n=17"), "{}", out.report);
    }

    #[test]
    fn config_errors_carry_line() {
        let err = RunConfig::parse("seed = 1\ncolour = 3\n", Path::new("run.toml")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }
        let err = RunConfig::parse("seed = 1\ndraws = \"many\"\n", Path::new("run.toml")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn line_col_counts_from_one() {
        assert_eq!(line_col("ab\ncd", 0), (1, 1));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
    }

    #[test]
    fn bounds_from_flags() {
        let out = run_args(&["bounds", "--kind", "ltl", "--lipschitz", "1", "--n", "4", "--complexity", "10"]);
        assert!((out.rows[0].mean - 5.0 * 2f64.sqrt()).abs() < 1e-12);
        let err = run(Cli::try_parse_from(["radcomplex", "bounds", "--kind", "kmeans"]).unwrap()).unwrap_err();
        assert!(err.to_string().contains("--k"), "{err}");
    }

    #[test]
    fn finite_preset_all_hold() {
        let out = run_args(&["verify", "--preset", "finite-random", "--trials", "20", "--seed", "7"]);
        assert_eq!(out.rows.len(), 20);
        assert!(out.rows.iter().all(|r| r.verdict == "HOLDS"));
        assert_eq!(out.exit_code(), 0);
    }
}
