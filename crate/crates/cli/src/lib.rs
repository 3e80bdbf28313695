//! The `randsys` command-line tool.
//!
//! Every subcommand reads a system file (see [`io`]) and writes either a JSON
//! report, a text matrix or a CSV table. Reports carry the tool version, the
//! system and the full configuration, and contain nothing that depends on the
//! worker count or the clock, so equal inputs give byte-identical output.
//!
//! Exit codes: 0 success, 1 usage, 2 unreadable input, 3 failed precondition
//! or invalid embedding, 4 size guard, 5 normality thresholds not met,
//! 6 degenerate variance.

pub mod io;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use randsys::census::{
    count_intersecting, count_proper, count_typed, enumerate_solutions_with, EnumOptions,
    SolutionList, DEFAULT_BOX_LIMIT,
};
use randsys::compounded::{compound, milky_way_matrix, repeat_rhs, self_compound, CompoundResult};
use randsys::random_model::{
    moment_goal_check, run_trials_with, sweep_csv, sweep_on, GoalCheck, MomentReport, SweepRow,
    TrialConfig,
};
use randsys::system_properties::{
    analyze, is_positive, partition_family, positive_partition_family,
};
use randsys::{ColSet, Error, PartitionFamily, SystemSpec};
use serde::Serialize;
use serde_json::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_GUARD: i32 = 4;
pub const EXIT_NOT_NORMAL: i32 = 5;
pub const EXIT_DEGENERATE: i32 = 6;

/// Environment variable overriding the enumeration box guard.
pub const BOX_LIMIT_ENV: &str = "RANDSYS_BOX_LIMIT";

/// Fewer trials than this are flagged as low-power.
pub const LOW_POWER_TRIALS: u64 = 100;

const TOOL: &str = "randsys";
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "randsys",
    version,
    about = "Solution counts of linear systems in random sets"
)]
pub struct Cli {
    /// Worker threads for enumeration and trials; defaults to all cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Guard on the number of free-variable assignments enumerated.
    /// Overrides RANDSYS_BOX_LIMIT.
    #[arg(long, global = true)]
    pub box_limit: Option<u128>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank, positivity, abundance, density and partition families.
    Analyze(AnalyzeArgs),
    /// Count solutions in [n]^m.
    Census(CensusArgs),
    /// Monte Carlo moments of the solution count in a random subset of [n].
    Simulate(SimulateArgs),
    /// Print a compounded matrix.
    Compound(CompoundArgs),
    /// Mean, variance and empty fraction of the count at p = n^-e.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub system: PathBuf,
    /// Fail with exit code 3 when the density is undefined.
    #[arg(long)]
    pub require_density: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Which solutions count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Pairwise distinct coordinates.
    Proper,
    /// Shapes whose contraction keeps the rank.
    Nontrivial,
    /// Nontrivial shapes with a positive contraction.
    Positive,
    /// Shapes listed in --partitions.
    Typed,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Defaults to `typed` with --partitions, `proper` otherwise.
    #[arg(long, value_enum)]
    pub kind: Option<Kind>,
    /// JSON array of partitions, each an array of 1-based classes.
    #[arg(long)]
    pub partitions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    pub system: PathBuf,
    #[arg(long)]
    pub n: u32,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Comma-separated values; counts solutions meeting this set.
    #[arg(long)]
    pub z: Option<String>,
    /// Values of --z a solution must contain.
    #[arg(long, default_value_t = 1)]
    pub min_hits: usize,
    /// Write the counted solutions here: JSON for a `.json` path, otherwise
    /// one solution per line.
    #[arg(long)]
    pub solutions: Option<PathBuf>,
    /// Embed the counted solutions in the report.
    #[arg(long)]
    pub list: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub max_abs_skewness: f64,
    pub max_abs_excess_kurtosis: f64,
    pub max_ks_distance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            max_abs_skewness: 0.2,
            max_abs_excess_kurtosis: 0.6,
            max_ks_distance: 0.05,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub system: PathBuf,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 2000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Highest standardized moment reported (at least 4).
    #[arg(long, default_value_t = 6)]
    pub kmax: usize,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Run even when the normal-limit preconditions fail.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value_t = 0.2)]
    pub max_skewness: f64,
    #[arg(long, default_value_t = 0.6)]
    pub max_excess_kurtosis: f64,
    #[arg(long, default_value_t = 0.05)]
    pub max_ks: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompoundArgs {
    pub system: PathBuf,
    /// Shared columns of A x^{id_Q} A: comma-separated 1-based indices,
    /// `all`, or empty.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Build the milky-way matrix with t + 2 copies glued at the single
    /// column given by --q.
    #[arg(long)]
    pub t: Option<usize>,
    /// JSON array of 1-based [column of A, column of B] pairs.
    #[arg(long, conflicts_with_all = ["q", "t"])]
    pub embedding: Option<PathBuf>,
    /// System file for B; defaults to A.
    #[arg(long, requires = "embedding")]
    pub with: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub system: PathBuf,
    #[arg(long)]
    pub n: u32,
    /// Comma-separated exponents e, as decimals or fractions like 2/3.
    #[arg(long, allow_hyphen_values = true)]
    pub exponents: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_enum, default_value_t = SweepFormat::Csv)]
    pub format: SweepFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn parse(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError {
            code: EXIT_PARSE,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BadMatrix(_) | Error::BadPartition(_) | Error::DimensionMismatch { .. } => {
            EXIT_PARSE
        }
        Error::PreconditionFailed(_)
        | Error::BadEmbedding(_)
        | Error::NotPositive
        | Error::NotAbundant
        | Error::Inconsistent
        | Error::DegenerateDenominator(_)
        | Error::RankIdentityViolation(_) => EXIT_PRECONDITION,
        Error::BoxTooLarge { .. } | Error::TooLarge { .. } | Error::Overflow => EXIT_GUARD,
        Error::DegenerateVariance => EXIT_DEGENERATE,
        Error::IndexOutOfRange { .. }
        | Error::EmptyQ
        | Error::ZeroCount(_)
        | Error::InvalidArgument(_) => EXIT_USAGE,
    }
}

/// What a run produced. Output sent to `--out` files is already written.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match execute(&cli) {
        Ok(outcome) => outcome,
        Err(e) => Outcome {
            code: e.code,
            stdout: String::new(),
            stderr: format!("error: {}\n", e.message),
        },
    }
}

/// Runs a parsed command line, inside a dedicated thread pool when
/// `--workers` is given.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let opts = EnumOptions {
        box_limit: box_limit(cli.box_limit)?,
    };
    match cli.workers {
        None => dispatch(&cli.command, opts),
        Some(0) => Err(CliError::usage("--workers must be positive")),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::usage(format!("cannot start {w} workers: {e}")))?;
            pool.install(|| dispatch(&cli.command, opts))
        }
    }
}

fn box_limit(flag: Option<u128>) -> Result<u128, CliError> {
    if let Some(limit) = flag {
        return Ok(limit);
    }
    match std::env::var(BOX_LIMIT_ENV) {
        Ok(s) => parse_limit(&s)
            .ok_or_else(|| CliError::usage(format!("{BOX_LIMIT_ENV}={s:?} is not a count"))),
        Err(_) => Ok(DEFAULT_BOX_LIMIT),
    }
}

/// Accepts integers and scientific notation such as `1e9`.
fn parse_limit(s: &str) -> Option<u128> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u128>() {
        return Some(v);
    }
    let v: f64 = s.parse().ok()?;
    (v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < 3.4e38).then_some(v as u128)
}

fn dispatch(command: &Command, opts: EnumOptions) -> Result<Outcome, CliError> {
    match command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Census(a) => cmd_census(a, opts),
        Command::Simulate(a) => cmd_simulate(a, opts),
        Command::Compound(a) => cmd_compound(a),
        Command::Sweep(a) => cmd_sweep(a, opts),
    }
}

#[derive(Serialize)]
struct Report<C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    system: Value,
    config: C,
    result: R,
}

impl<C: Serialize, R: Serialize> Report<C, R> {
    fn new(command: &'static str, spec: &SystemSpec, config: C, result: R) -> Self {
        Report {
            tool: TOOL,
            version: VERSION,
            command,
            system: io::system_json(spec),
            config,
            result,
        }
    }

    fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::parse(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<SystemSpec, CliError> {
    io::parse_system(&read(path)?).map_err(|e| CliError::parse(path, e))
}

/// Sends `text` to `out` when given, to stdout otherwise.
fn emit(
    out: Option<&PathBuf>,
    text: String,
    code: i32,
    stderr: String,
) -> Result<Outcome, CliError> {
    let stdout = match out {
        Some(path) => {
            write(path, &text)?;
            String::new()
        }
        None => text,
    };
    Ok(Outcome {
        code,
        stdout,
        stderr,
    })
}

fn resolve_family(
    args: &FamilyArgs,
    spec: &SystemSpec,
) -> Result<(Kind, PartitionFamily), CliError> {
    let a = spec.matrix();
    let kind = match (args.kind, &args.partitions) {
        (None, Some(_)) | (Some(Kind::Typed), Some(_)) => Kind::Typed,
        (Some(Kind::Typed), None) => {
            return Err(CliError::usage("--kind typed needs --partitions"))
        }
        (Some(_), Some(_)) => {
            return Err(CliError::usage("--partitions only goes with --kind typed"))
        }
        (None, None) => Kind::Proper,
        (Some(k), None) => k,
    };
    let family = match kind {
        Kind::Proper => PartitionFamily::discrete(a.cols()),
        Kind::Nontrivial => partition_family(a)?,
        Kind::Positive => positive_partition_family(a)?,
        Kind::Typed => {
            let path = args.partitions.as_ref().expect("checked above");
            io::parse_partitions(&read(path)?, a.cols()).map_err(|e| CliError::parse(path, e))?
        }
    };
    Ok((kind, family))
}

#[derive(Serialize)]
struct AnalyzeConfig {
    require_density: bool,
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<Outcome, CliError> {
    let spec = load_system(&args.system)?;
    let report = analyze(spec.matrix())?;
    if args.require_density && report.density.is_none() {
        return Err(CliError {
            code: EXIT_PRECONDITION,
            message: "density is undefined: the matrix is not positive".into(),
        });
    }
    let config = AnalyzeConfig {
        require_density: args.require_density,
    };
    let text = Report::new("analyze", &spec, config, report).render();
    emit(args.out.as_ref(), text, EXIT_OK, String::new())
}

#[derive(Serialize)]
struct CensusConfig<'a> {
    n: u32,
    kind: Kind,
    family: &'a PartitionFamily,
    z: Option<&'a [u32]>,
    min_hits: usize,
    box_limit: String,
}

#[derive(Serialize)]
struct PartitionCount<'a> {
    partition: &'a randsys::Partition,
    count: u64,
}

#[derive(Serialize)]
struct CensusResult<'a> {
    count: u64,
    total: u64,
    proper: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nontrivial: Option<u64>,
    per_partition: Vec<PartitionCount<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intersecting: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solutions: Option<Vec<&'a [u32]>>,
}

fn per_partition<'a>(
    list: &'a SolutionList,
    family: &'a PartitionFamily,
) -> Vec<PartitionCount<'a>> {
    let mut counts = vec![0u64; list.shapes().len()];
    for i in 0..list.len() {
        counts[list.shape_id(i) as usize] += 1;
    }
    let mut rows: Vec<PartitionCount<'a>> = family
        .iter()
        .map(|p| PartitionCount {
            partition: p,
            count: list
                .shapes()
                .iter()
                .position(|s| s == p)
                .map_or(0, |s| counts[s]),
        })
        .collect();
    rows.sort_by(|x, y| x.partition.cmp(y.partition));
    rows
}

fn parse_z(s: &str, n: u32) -> Result<Vec<u32>, CliError> {
    let mut z = Vec::new();
    for v in io::parse_index_list(s).map_err(CliError::usage)? {
        match u32::try_from(v) {
            Ok(v) if v <= n => z.push(v),
            _ => {
                return Err(CliError::usage(format!(
                    "--z value {v} is outside [1, {n}]"
                )))
            }
        }
    }
    z.sort_unstable();
    z.dedup();
    Ok(z)
}

fn cmd_census(args: &CensusArgs, opts: EnumOptions) -> Result<Outcome, CliError> {
    let spec = load_system(&args.system)?;
    let (kind, family) = resolve_family(&args.family, &spec)?;
    let z = args.z.as_deref().map(|s| parse_z(s, args.n)).transpose()?;
    let list = enumerate_solutions_with(&spec, args.n, opts)?;

    // The nontrivial family is only enumerable for narrow matrices.
    let nontrivial = match partition_family(spec.matrix()) {
        Ok(f) => Some(count_typed(&list, &f)),
        Err(Error::TooLarge { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let typed: Vec<&[u32]> = list
        .typed_ids(&family)
        .into_iter()
        .map(|i| list.get(i as usize).values)
        .collect();
    if let Some(path) = &args.solutions {
        write(path, &solutions_text(path, &typed))?;
    }
    let result = CensusResult {
        count: typed.len() as u64,
        total: list.len() as u64,
        proper: count_proper(&list),
        nontrivial,
        per_partition: per_partition(&list, &family),
        intersecting: z
            .as_ref()
            .map(|z| count_intersecting(&list, &family, z, args.min_hits)),
        solutions: args.list.then(|| typed.clone()),
    };
    let config = CensusConfig {
        n: args.n,
        kind,
        family: &family,
        z: z.as_deref(),
        min_hits: args.min_hits,
        box_limit: opts.box_limit.to_string(),
    };
    let text = Report::new("census", &spec, config, result).render();
    emit(args.out.as_ref(), text, EXIT_OK, String::new())
}

fn solutions_text(path: &Path, solutions: &[&[u32]]) -> String {
    if path.extension().is_some_and(|e| e == "json") {
        let mut s = serde_json::to_string(solutions).expect("solutions serialize");
        s.push('\n');
        s
    } else {
        solutions
            .iter()
            .map(|x| {
                let mut line = x
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(" ");
                line.push('\n');
                line
            })
            .collect()
    }
}

#[derive(Serialize)]
struct SimulateConfig<'a> {
    n: u32,
    p: f64,
    trials: u64,
    seed: u64,
    kmax: usize,
    kind: Kind,
    family: &'a PartitionFamily,
    force: bool,
    thresholds: Thresholds,
    box_limit: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalityVerdict {
    pub passed: bool,
    pub skewness_ok: bool,
    pub excess_kurtosis_ok: bool,
    pub ks_ok: bool,
    pub goal_checks_ok: bool,
    pub low_power: bool,
}

#[derive(Serialize)]
struct SimulateResult {
    moments: MomentReport,
    goal_checks: Vec<GoalCheck>,
    normality: NormalityVerdict,
}

/// Compares a moment report with the thresholds and the k = 3, 4 goal checks.
pub fn normality_verdict(
    report: &MomentReport,
    t: &Thresholds,
) -> Result<(NormalityVerdict, Vec<GoalCheck>), Error> {
    let goals = vec![moment_goal_check(report, 3)?, moment_goal_check(report, 4)?];
    let skewness_ok = report
        .skewness()
        .is_some_and(|s| s.abs() <= t.max_abs_skewness);
    let excess_kurtosis_ok = report
        .excess_kurtosis()
        .is_some_and(|k| k.abs() <= t.max_abs_excess_kurtosis);
    let ks_ok = report.ks_distance <= t.max_ks_distance;
    let goal_checks_ok = goals.iter().all(|g| g.passed);
    let verdict = NormalityVerdict {
        passed: skewness_ok && excess_kurtosis_ok && ks_ok && goal_checks_ok,
        skewness_ok,
        excess_kurtosis_ok,
        ks_ok,
        goal_checks_ok,
        low_power: report.config.trials < LOW_POWER_TRIALS,
    };
    Ok((verdict, goals))
}

fn cmd_simulate(args: &SimulateArgs, opts: EnumOptions) -> Result<Outcome, CliError> {
    if args.kmax < 4 {
        return Err(CliError::usage("--kmax must be at least 4"));
    }
    let spec = load_system(&args.system)?;
    let (kind, family) = resolve_family(&args.family, &spec)?;
    let thresholds = Thresholds {
        max_abs_skewness: args.max_skewness,
        max_abs_excess_kurtosis: args.max_excess_kurtosis,
        max_ks_distance: args.max_ks,
    };
    let mut cfg = TrialConfig::new(args.n, args.p, args.trials, args.seed);
    cfg.moment_max_k = args.kmax;
    cfg.force = args.force;

    let moments = run_trials_with(&spec, &family, &cfg, opts)?;
    let (normality, goal_checks) = normality_verdict(&moments, &thresholds)?;
    let mut stderr = String::new();
    if normality.low_power {
        stderr.push_str(&format!("warning: {} trials is low-power\n", args.trials));
    }
    if moments.preconditions.overridden {
        stderr.push_str("warning: preconditions failed; running because of --force\n");
    }
    let code = if normality.passed {
        EXIT_OK
    } else {
        EXIT_NOT_NORMAL
    };
    let config = SimulateConfig {
        n: args.n,
        p: args.p,
        trials: args.trials,
        seed: args.seed,
        kmax: args.kmax,
        kind,
        family: &family,
        force: args.force,
        thresholds,
        box_limit: opts.box_limit.to_string(),
    };
    let result = SimulateResult {
        moments,
        goal_checks,
        normality,
    };
    let text = Report::new("simulate", &spec, config, result).render();
    emit(args.out.as_ref(), text, code, stderr)
}

fn parse_q(s: &str, m: usize) -> Result<ColSet, CliError> {
    if s.trim() == "all" {
        return Ok(ColSet::full(m));
    }
    let idx = io::parse_index_list(s).map_err(CliError::usage)?;
    Ok(ColSet::new(idx.into_iter().map(|i| i - 1).collect(), m)?)
}

fn cmd_compound(args: &CompoundArgs) -> Result<Outcome, CliError> {
    let spec = load_system(&args.system)?;
    let a = spec.matrix();
    let m = a.cols();
    let (result, rhs, predicted, label) = if let Some(path) = &args.embedding {
        let other = match &args.with {
            Some(p) => load_system(p)?,
            None => spec.clone(),
        };
        let b = other.matrix();
        let map = io::parse_embedding(&read(path)?, m, b.cols()).map_err(|e| match e {
            io::EmbeddingError::Parse(err) => CliError::parse(path, err),
            io::EmbeddingError::Invalid(err) => err.into(),
        })?;
        let result = compound(a, b, &map)?;
        let image: Vec<usize> = map.pairs().iter().map(|&(_, q)| q).collect();
        let rest = ColSet::new(image, b.cols())?.complement(b.cols());
        let bound = a.rank() + b.select_columns(&rest)?.rank();
        let rhs: Vec<BigInt> = spec.rhs().iter().chain(other.rhs()).cloned().collect();
        (result, rhs, bound, "lower_bound")
    } else {
        let q_text = args
            .q
            .as_deref()
            .ok_or_else(|| CliError::usage("compound needs --q or --embedding"))?;
        let q = parse_q(q_text, m)?;
        let rest = a.select_columns(&q.complement(m))?.rank();
        match args.t {
            Some(t) => {
                let [i] = q.indices()[..] else {
                    return Err(CliError::usage("--t needs a single column in --q"));
                };
                let result = milky_way_matrix(a, i, t)?;
                (
                    result,
                    repeat_rhs(spec.rhs(), t + 2),
                    a.rank() + (t + 1) * rest,
                    "predicted",
                )
            }
            None => {
                let result: CompoundResult = self_compound(a, &q)?;
                (
                    result,
                    repeat_rhs(spec.rhs(), 2),
                    a.rank() + rest,
                    "predicted",
                )
            }
        }
    };
    let mut text = format!(
        "# rank {}\n# {label} {predicted}\n# positive {}\n",
        result.rank(),
        is_positive(&result.matrix)
    );
    text.push_str(&io::format_matrix(&result.matrix, Some(&rhs)));
    emit(args.out.as_ref(), text, EXIT_OK, String::new())
}

/// Parses `2/3`, `0.667` or `1` exactly.
pub fn parse_exponent(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.contains('/') {
        let r: BigRational = s.parse().ok()?;
        return Some(r);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let r = BigRational::new(digits, denom);
    Some(if neg { -r } else { r })
}

#[derive(Serialize)]
struct SweepConfig<'a> {
    n: u32,
    exponents: Vec<String>,
    trials: u64,
    seed: u64,
    kind: Kind,
    family: &'a PartitionFamily,
    box_limit: String,
}

#[derive(Serialize)]
struct SweepResult {
    rows: Vec<SweepRow>,
    low_power: bool,
}

fn cmd_sweep(args: &SweepArgs, opts: EnumOptions) -> Result<Outcome, CliError> {
    let exponents: Vec<BigRational> = args
        .exponents
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            parse_exponent(t).ok_or_else(|| CliError::usage(format!("{t:?} is not an exponent")))
        })
        .collect::<Result<_, _>>()?;
    if exponents.is_empty() {
        return Err(CliError::usage("--exponents is empty"));
    }
    let spec = load_system(&args.system)?;
    let (kind, family) = resolve_family(&args.family, &spec)?;
    let list = enumerate_solutions_with(&spec, args.n, opts)?;
    let rows = sweep_on(&list, &family, &exponents, args.trials, args.seed)?;
    let low_power = args.trials < LOW_POWER_TRIALS;
    let stderr = if low_power {
        format!(
            "warning: {} trials per exponent is low-power\n",
            args.trials
        )
    } else {
        String::new()
    };
    let text = match args.format {
        SweepFormat::Csv => sweep_csv(&rows),
        SweepFormat::Json => {
            let config = SweepConfig {
                n: args.n,
                exponents: rows.iter().map(|r| r.exponent.clone()).collect(),
                trials: args.trials,
                seed: args.seed,
                kind,
                family: &family,
                box_limit: opts.box_limit.to_string(),
            };
            Report::new("sweep", &spec, config, SweepResult { rows, low_power }).render()
        }
    };
    emit(args.out.as_ref(), text, EXIT_OK, stderr)
}
