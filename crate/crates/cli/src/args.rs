//! Command-line surface and config validation. Every violation is collected
//! before anything runs.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mxchaos::symbolic::Alphabet;

pub const THREADS_ENV: &str = "MXCHAOS_THREADS";

#[derive(Parser, Debug, Serialize)]
#[command(name = "mxchaos", version, about = "Build and check multiply chaotic sequences and continued-fraction sets")]
pub struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Build the chaotic sequence stage by stage and save its ledger.
    Construct(ConstructArgs),
    /// Check chaotic properties of a saved ledger.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Continued-fraction identities, dimension estimates and cover certificates.
    #[command(subcommand)]
    Cf(CfCmd),
    /// Dimension transfer through the construction.
    #[command(subcommand)]
    Dim(DimCmd),
    /// Gauss map invariance, exactness and orbit statistics.
    #[command(subcommand)]
    Gauss(GaussCmd),
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCmd {
    Proximal(ProximalArgs),
    Return(ReturnArgs),
    Target(TargetArgs),
    Scrambled(ScrambledPairArgs),
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CfCmd {
    Check(CheckArgs),
    Dim(CfDimArgs),
    Certify(CertifyArgs),
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimCmd {
    Weishu(WeishuArgs),
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaussCmd {
    Invariance(InvarianceArgs),
    Exactness(ExactnessArgs),
    Scrambled(GaussScrambledArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleArg {
    Full,
    Budget,
}

#[derive(Args, Debug, Serialize)]
pub struct ConstructArgs {
    /// Alphabet size N >= 2, or `countable`.
    #[arg(long)]
    pub alphabet: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub stages: u32,
    #[arg(long, value_enum, default_value = "budget")]
    pub schedule: ScheduleArg,
    /// Self-maps kept per stage (budget schedule).
    #[arg(long)]
    pub maps: Option<u64>,
    /// Map tuples kept per stage (budget schedule).
    #[arg(long)]
    pub blocks: Option<u64>,
    /// Reference point: a JSON stream or a text file of symbols (read periodically).
    #[arg(long)]
    pub z: Option<PathBuf>,
    #[arg(long)]
    pub z_seed: Option<u64>,
    /// Base point, as for `--z`.
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub x_seed: Option<u64>,
    /// Copy the same window of z into every first-group slot.
    #[arg(long)]
    pub literal_zsegments: bool,
    /// Repeat earlier chaotic blocks before each stage's own blocks.
    #[arg(long)]
    pub reembed: bool,
    /// Where to save the ledger.
    #[arg(long)]
    pub ledger_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct LedgerArg {
    /// Ledger file written by `construct --ledger-out`.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ProximalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ledger: LedgerArg,
    #[arg(long)]
    pub stage: Option<u32>,
    /// Number of multiples; defaults to min(stage, 3).
    #[arg(long)]
    pub d: Option<u32>,
    /// Replace the ledger's base point by a hashed one.
    #[arg(long)]
    pub x_seed: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReturnArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ledger: LedgerArg,
    #[arg(long)]
    pub stage: Option<u32>,
    /// Hashed base points forming the family.
    #[arg(long, value_delimiter = ',')]
    pub family_seeds: Vec<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct TargetArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ledger: LedgerArg,
    #[arg(long)]
    pub stage: Option<u32>,
    /// JSON file with `d` and `members: [{x_prefix, targets}]`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Seed of the hashed tail following each member's prefix.
    #[arg(long, default_value_t = 0)]
    pub tail_seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ScrambledPairArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ledger: LedgerArg,
    #[arg(long)]
    pub x_seed: Option<u64>,
    #[arg(long)]
    pub y_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaArg {
    Determinant,
    Growth,
    EraseDigit,
    Length,
    Tiling,
    QuasiMult,
    /// Sibling gap sweep; deterministic.
    Gap,
}

#[derive(Args, Debug, Serialize)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub lemma: Option<LemmaArg>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Digit bound for the gap sweep.
    #[arg(long, default_value_t = 10)]
    pub digit_bound: u64,
    /// Prefix depth for the gap sweep.
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CfDimArgs {
    #[arg(long)]
    pub digit_bound: Option<u64>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Cap on the number of fundamental intervals.
    #[arg(long, default_value_t = mxchaos::dimension::DEFAULT_BUDGET)]
    pub budget: u64,
    /// Check the estimate against the Jarnik bounds.
    #[arg(long)]
    pub jarnik: bool,
    /// Also check the sibling inequality on all prefixes up to this depth.
    #[arg(long)]
    pub claim_depth: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct CertifyArgs {
    #[arg(long, default_value_t = 10)]
    pub digit_bound: u64,
    /// Fixed leading digits of the target set, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub prefix: Vec<u64>,
    /// Cover file: `{"prefix": [...], "elements": [{"lo": "1/3", "hi": "1/2"}, ...]}`.
    #[arg(long)]
    pub cover: Option<PathBuf>,
    /// Use the cover by all admissible fundamental intervals of this depth.
    #[arg(long)]
    pub canonical_depth: Option<usize>,
    /// Use a random cover with this many pieces.
    #[arg(long)]
    pub random_pieces: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exponent; defaults to 1 - 4/(k ln 2).
    #[arg(long)]
    pub s: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct WeishuArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ledger: LedgerArg,
    #[arg(long, default_value_t = 20)]
    pub depth: u64,
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
    /// Also sample the Holder instance (countable ledgers only).
    #[arg(long)]
    pub holder: bool,
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    pub k: u64,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 8.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_cursor: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct InvarianceArgs {
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub b: Option<String>,
    /// Check this many random intervals instead of `[a, b)`.
    #[arg(long)]
    pub intervals: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub branches: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ExactnessArgs {
    /// `a,b` with rational endpoints; repeat for a union.
    #[arg(long = "interval")]
    pub intervals: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub steps: u32,
    #[arg(long, default_value_t = 100_000)]
    pub max_intervals: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct GaussScrambledArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 4)]
    pub k: u32,
}

/// Validated settings shared by every subcommand.
#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub args: serde_json::Value,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

pub fn parse_alphabet(s: &str) -> Result<Alphabet, String> {
    if s.eq_ignore_ascii_case("countable") {
        return Ok(Alphabet::Countable);
    }
    let n: u32 = s.parse().map_err(|_| format!("alphabet must be an integer or `countable`, got {s:?}"))?;
    Alphabet::finite(n).map_err(|_| format!("alphabet size must be at least 2, got {n}"))
}

fn need<T>(v: &mut Vec<String>, field: &Option<T>, name: &str) {
    if field.is_none() {
        v.push(format!("missing --{name}"));
    }
}

fn need_seed(v: &mut Vec<String>, seed: Option<u64>) {
    if seed.is_none() {
        v.push("missing --seed (required for stochastic runs)".into());
    }
}

fn one_source(v: &mut Vec<String>, file: &Option<PathBuf>, seed: Option<u64>, name: &str) {
    match (file, seed) {
        (None, None) => v.push(format!("missing {name}: pass --{name} FILE or --{name}-seed N")),
        (Some(_), Some(_)) => v.push(format!("--{name} and --{name}-seed are mutually exclusive")),
        _ => {}
    }
}

fn positive(v: &mut Vec<String>, x: f64, name: &str) {
    if !(x > 0.0 && x.is_finite()) {
        v.push(format!("--{name} must be positive, got {x}"));
    }
}

impl Cli {
    pub fn command_name(&self) -> &'static str {
        match &self.command {
            Command::Construct(_) => "construct",
            Command::Verify(VerifyCmd::Proximal(_)) => "verify proximal",
            Command::Verify(VerifyCmd::Return(_)) => "verify return",
            Command::Verify(VerifyCmd::Target(_)) => "verify target",
            Command::Verify(VerifyCmd::Scrambled(_)) => "verify scrambled",
            Command::Cf(CfCmd::Check(_)) => "cf check",
            Command::Cf(CfCmd::Dim(_)) => "cf dim",
            Command::Cf(CfCmd::Certify(_)) => "cf certify",
            Command::Dim(DimCmd::Weishu(_)) => "dim weishu",
            Command::Gauss(GaussCmd::Invariance(_)) => "gauss invariance",
            Command::Gauss(GaussCmd::Exactness(_)) => "gauss exactness",
            Command::Gauss(GaussCmd::Scrambled(_)) => "gauss scrambled",
        }
    }

    /// Checks the parsed flags and the environment; returns every problem.
    pub fn validate(&self, threads_env: Option<String>) -> Result<RunConfig, Vec<String>> {
        let mut v = Vec::new();
        let mut w = Vec::new();
        let mut seed = None;
        let threads = match threads_env {
            None => None,
            Some(s) => match s.trim().parse::<usize>() {
                Ok(n) if n > 0 => Some(n),
                _ => {
                    v.push(format!("{THREADS_ENV} must be a positive integer, got {s:?}"));
                    None
                }
            },
        };
        match &self.command {
            Command::Construct(a) => {
                match &a.alphabet {
                    None => v.push("missing --alphabet".into()),
                    Some(s) => {
                        if let Err(e) = parse_alphabet(s) {
                            v.push(e);
                        } else if parse_alphabet(s) == Ok(Alphabet::Countable)
                            && matches!(a.schedule, ScheduleArg::Full)
                            && a.stages >= 2
                        {
                            v.push("the full schedule is infeasible beyond stage 1 on a countable alphabet".into());
                        }
                    }
                }
                if a.stages == 0 {
                    v.push("--stages must be at least 1".into());
                }
                match a.schedule {
                    ScheduleArg::Budget => {
                        need(&mut v, &a.maps, "maps");
                        need(&mut v, &a.blocks, "blocks");
                        if a.maps == Some(0) || a.blocks == Some(0) {
                            v.push("--maps and --blocks must be positive".into());
                        }
                    }
                    ScheduleArg::Full => {
                        if a.maps.is_some() || a.blocks.is_some() {
                            v.push("--maps and --blocks only apply to the budget schedule".into());
                        }
                    }
                }
                one_source(&mut v, &a.z, a.z_seed, "z");
                one_source(&mut v, &a.x, a.x_seed, "x");
            }
            Command::Verify(cmd) => match cmd {
                VerifyCmd::Proximal(a) => {
                    need(&mut v, &a.ledger.ledger, "ledger");
                    need(&mut v, &a.stage, "stage");
                    if let (Some(k), Some(d)) = (a.stage, a.d) {
                        if d == 0 || d > k {
                            v.push(format!("--d must lie in 1..={k}, got {d}"));
                        }
                    }
                }
                VerifyCmd::Return(a) => {
                    need(&mut v, &a.ledger.ledger, "ledger");
                    need(&mut v, &a.stage, "stage");
                    if a.family_seeds.is_empty() {
                        v.push("missing --family-seeds".into());
                    }
                }
                VerifyCmd::Target(a) => {
                    need(&mut v, &a.ledger.ledger, "ledger");
                    need(&mut v, &a.stage, "stage");
                    need(&mut v, &a.spec, "spec");
                }
                VerifyCmd::Scrambled(a) => {
                    need(&mut v, &a.ledger.ledger, "ledger");
                    need(&mut v, &a.x_seed, "x-seed");
                    need(&mut v, &a.y_seed, "y-seed");
                }
            },
            Command::Cf(cmd) => match cmd {
                CfCmd::Check(a) => {
                    need(&mut v, &a.lemma, "lemma");
                    if a.lemma == Some(LemmaArg::Gap) {
                        if a.digit_bound < 2 {
                            v.push("--digit-bound must be at least 2 for the gap sweep".into());
                        }
                    } else {
                        need_seed(&mut v, a.seed);
                        if a.samples == 0 {
                            v.push("--samples must be positive".into());
                        }
                    }
                    seed = a.seed;
                }
                CfCmd::Dim(a) => {
                    need(&mut v, &a.digit_bound, "digit-bound");
                    need(&mut v, &a.depth, "depth");
                    if a.digit_bound == Some(0) || a.depth == Some(0) {
                        v.push("--digit-bound and --depth must be positive".into());
                    }
                    positive(&mut v, a.tol, "tol");
                    if let Some(k) = a.digit_bound {
                        if a.jarnik && k <= 8 {
                            w.push(format!("digit bound {k} is outside k > 8, where the Jarnik bounds are stated"));
                        }
                        if a.jarnik && k < 2 {
                            v.push("--jarnik needs a digit bound of at least 2".into());
                        }
                    }
                }
                CfCmd::Certify(a) => {
                    let sources = [a.cover.is_some(), a.canonical_depth.is_some(), a.random_pieces.is_some()];
                    match sources.iter().filter(|&&b| b).count() {
                        0 => v.push("missing cover: pass --cover FILE, --canonical-depth D or --random-pieces P".into()),
                        1 => {}
                        _ => v.push("--cover, --canonical-depth and --random-pieces are mutually exclusive".into()),
                    }
                    if a.random_pieces.is_some() {
                        need_seed(&mut v, a.seed);
                    }
                    if a.cover.is_none() && a.prefix.is_empty() {
                        v.push("missing --prefix".into());
                    }
                    if a.digit_bound < 2 {
                        v.push("--digit-bound must be at least 2".into());
                    }
                    if let Some(s) = a.s {
                        if !(s > 0.0 && s <= 1.0) {
                            v.push(format!("--s must lie in (0, 1], got {s}"));
                        }
                    }
                    seed = a.seed;
                }
            },
            Command::Dim(DimCmd::Weishu(a)) => {
                need(&mut v, &a.ledger.ledger, "ledger");
                positive(&mut v, a.tol, "tol");
                if a.depth == 0 {
                    v.push("--depth must be positive".into());
                }
                if a.holder {
                    need_seed(&mut v, a.seed);
                    positive(&mut v, a.epsilon, "epsilon");
                    positive(&mut v, a.lambda, "lambda");
                    if a.pairs == 0 || a.k == 0 {
                        v.push("--pairs and --k must be positive".into());
                    }
                }
                seed = a.seed;
            }
            Command::Gauss(cmd) => match cmd {
                GaussCmd::Invariance(a) => {
                    match (&a.a, &a.b, a.intervals) {
                        (Some(_), Some(_), None) => {}
                        (None, None, Some(n)) => {
                            need_seed(&mut v, a.seed);
                            if n == 0 {
                                v.push("--intervals must be positive".into());
                            }
                        }
                        _ => v.push("pass either --a and --b, or --intervals with --seed".into()),
                    }
                    for (name, x) in [("a", &a.a), ("b", &a.b)] {
                        if let Some(x) = x {
                            if mxchaos::rational::parse_rational(x).is_err() {
                                v.push(format!("--{name} is not a rational: {x:?}"));
                            }
                        }
                    }
                    if a.branches == 0 {
                        v.push("--branches must be positive".into());
                    }
                    seed = a.seed;
                }
                GaussCmd::Exactness(a) => {
                    if a.intervals.is_empty() {
                        v.push("missing --interval".into());
                    }
                    for s in &a.intervals {
                        if parse_interval(s).is_err() {
                            v.push(format!("--interval must be `a,b` with rationals, got {s:?}"));
                        }
                    }
                }
                GaussCmd::Scrambled(a) => {
                    need_seed(&mut v, a.seed);
                    if a.pairs == 0 || a.horizon == 0 {
                        v.push("--pairs and --horizon must be positive".into());
                    }
                    if a.k < 2 {
                        v.push("--k must be at least 2".into());
                    }
                    seed = a.seed;
                }
            },
        }
        if !v.is_empty() {
            return Err(v);
        }
        let args = match serde_json::to_value(&self.command) {
            Ok(serde_json::Value::Object(m)) => m.into_iter().next().map(|(_, x)| x).unwrap_or_default(),
            Ok(x) => x,
            Err(e) => return Err(vec![e.to_string()]),
        };
        Ok(RunConfig {
            command: self.command_name().into(),
            args: unwrap_single(args),
            seed,
            output: self.output.clone(),
            threads,
            warnings: w,
        })
    }
}

// Nested subcommands serialize as `{"check": {...}}`; keep the inner object.
fn unwrap_single(v: serde_json::Value) -> serde_json::Value {
    match v {
        serde_json::Value::Object(m) if m.len() == 1 && m.values().all(|x| x.is_object()) => {
            m.into_iter().next().unwrap().1
        }
        other => other,
    }
}

pub fn parse_interval(s: &str) -> Result<(mxchaos::rational::Rational, mxchaos::rational::Rational), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("no comma in {s:?}"))?;
    let p = |x: &str| mxchaos::rational::parse_rational(x).map_err(|e| e.to_string());
    Ok((p(a)?, p(b)?))
}

/// Expands `--config FILE` into flags. The file is a JSON object mapping
/// long flag names to values; `true` becomes a bare flag, arrays repeat.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, Vec<String>> {
    let Some(i) = argv.iter().position(|a| a == "--config") else {
        return Ok(argv);
    };
    let Some(path) = argv.get(i + 1) else {
        return Err(vec!["--config needs a file".into()]);
    };
    let text = std::fs::read_to_string(path).map_err(|e| vec![format!("cannot read {}: {e}", path.to_string_lossy())])?;
    let obj: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| vec![format!("config must be a JSON object: {e}")])?;
    let mut out: Vec<OsString> = argv[..i].iter().chain(&argv[i + 2..]).cloned().collect();
    let mut problems = Vec::new();
    for (key, value) in obj {
        let flag = format!("--{key}");
        let scalar = |x: &serde_json::Value| match x {
            serde_json::Value::String(s) => Some(s.clone()),
            serde_json::Value::Number(n) => Some(n.to_string()),
            _ => None,
        };
        match &value {
            serde_json::Value::Bool(true) => out.push(flag.into()),
            serde_json::Value::Bool(false) => {}
            serde_json::Value::Array(items) => {
                for x in items {
                    match scalar(x) {
                        Some(s) => out.extend([flag.clone().into(), s.into()]),
                        None => problems.push(format!("config key {key:?} holds a non-scalar item")),
                    }
                }
            }
            x => match scalar(x) {
                Some(s) => out.extend([flag.into(), s.into()]),
                None => problems.push(format!("config key {key:?} must be a string, number, boolean or array")),
            },
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(problems)
    }
}
