//! `zigzag` command-line front end.
//!
//! Every subcommand prints a JSON report wrapped in an envelope that echoes
//! the tool version and the full configuration, defaults included. Trial
//! streams are JSONL and sweep curves are CSV. Exit codes: 0 success,
//! 1 usage error, 2 runtime error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analyzers::{
    beta_grid, chsh, chsh_analytic, decode_signal, emit_signal_batch, encode_bit, max_local_chsh, no_signalling_test,
    ChshConfig, DecodedMessage,
};
use crate::domain::{Angle, ChannelBit, ErutanPolicy, JointDistribution, KnowledgeState, LocalStrategy, Settings};
use crate::error::Error;
use crate::inference::{condition_reading, Conditional, Reading};
use crate::mirror::{analytic_equivalence, empirical_equivalence, EquivalenceReport};
use crate::models::{count_batch, run_batch, ModelKind};
use crate::oracle::{correlation_e, one_photon_joint, two_photon_joint};
use crate::rng::Seed;

pub const THREADS_ENV: &str = "ZIGZAG_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const DEFAULT_GRID_STEP: f64 = 22.5;
pub const DEFAULT_ANALYTIC_TOL: f64 = 1e-12;
pub const DEFAULT_EMPIRICAL_TOL: f64 = 0.005;

#[derive(Debug, Parser)]
#[command(name = "zigzag", version, about = "Hidden-variable simulations of polarization-entanglement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample trials and print them as JSONL with a summary joint table
    Simulate(SimulateArgs),
    /// Estimate the CHSH statistic
    Chsh(ChshArgs),
    /// Test whether Bob's marginal depends on the left setting
    Nosig(NosigArgs),
    /// Send a bit string through the one-photon experiment and decode it at Bob's end
    #[command(after_help = "Defaults: --grid-step 22.5 (must be <= 22.5 for decoding); --bias 1.")]
    Signal(SignalArgs),
    /// Compare the two-photon experiment with its one-photon mirror image
    #[command(after_help = "Defaults: analytic tolerance 1e-12, empirical tolerance 0.005 (total variation).")]
    Mirror(MirrorArgs),
    /// Condition the exact joint table on partial knowledge
    Infer(InferArgs),
    /// Write a correlation curve over a range of Bob settings as CSV
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ReadingArg {
    OnePhoton,
    TwoPhoton,
}

/// `zigzag`, `two-tau`, `one-photon`, or `local:<left bits>/<right bits>`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ModelSpec {
    Zigzag,
    TwoTau,
    OnePhoton,
    Local { left: Vec<u8>, right: Vec<u8> },
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "zigzag" | "single-tau" => Ok(ModelSpec::Zigzag),
            "two-tau" => Ok(ModelSpec::TwoTau),
            "one-photon" => Ok(ModelSpec::OnePhoton),
            other => {
                let bits = other.strip_prefix("local:").ok_or_else(|| {
                    format!("unknown model '{other}' (expected zigzag, two-tau, one-photon or local:<bits>/<bits>)")
                })?;
                let (l, r) = bits.split_once('/').ok_or("local model needs '<left bits>/<right bits>'")?;
                let parse = |t: &str| -> Result<Vec<u8>, String> {
                    if t.is_empty() {
                        return Err("local strategy bit strings must be non-empty".into());
                    }
                    t.chars()
                        .map(|c| match c {
                            '0' => Ok(0),
                            '1' => Ok(1),
                            _ => Err(format!("invalid strategy bit '{c}'")),
                        })
                        .collect()
                };
                Ok(ModelSpec::Local { left: parse(l)?, right: parse(r)? })
            }
        }
    }
}

impl ModelSpec {
    /// Builds the model; local strategies are laid over the given setting lists in order.
    fn resolve(&self, bias: Option<f64>, left: &[Angle], right: &[Angle]) -> Result<ModelKind, CliError> {
        if bias.is_some() && *self != ModelSpec::OnePhoton {
            return Err(CliError::Usage("--bias only applies to --model one-photon".into()));
        }
        Ok(match self {
            ModelSpec::Zigzag => ModelKind::SingleTauZigzag,
            ModelSpec::TwoTau => ModelKind::TwoTauSymmetric,
            ModelSpec::OnePhoton => ModelKind::OnePhoton { policy: ErutanPolicy::new(bias.unwrap_or(0.5)).map_err(usage)? },
            ModelSpec::Local { left: lb, right: rb } => {
                if lb.len() != left.len() || rb.len() != right.len() {
                    return Err(CliError::Usage(format!(
                        "local strategy needs {} left and {} right bits for these settings",
                        left.len(),
                        right.len()
                    )));
                }
                let zip = |angles: &[Angle], bits: &[u8]| -> Vec<(Angle, ChannelBit)> {
                    angles.iter().zip(bits).map(|(&a, &b)| (a, ChannelBit::from_bool(b == 1))).collect()
                };
                ModelKind::LocalDeterministic { strategy: LocalStrategy::new(zip(left, lb), zip(right, rb)) }
            }
        })
    }
}

fn parse_angle(s: &str) -> Result<Angle, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("'{s}' is not a number of degrees: {e}"))?;
    Angle::new(v).map_err(|e| e.to_string())
}

fn parse_bias(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("'{s}' is not a probability: {e}"))?;
    ErutanPolicy::new(v).map(f64::from).map_err(|e| e.to_string())
}

fn parse_positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("'{s}' is not a number: {e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be a positive finite number"))
    }
}

fn parse_bits(s: &str) -> Result<String, String> {
    if s.is_empty() {
        return Err("message must contain at least one bit".into());
    }
    match s.chars().find(|c| !matches!(c, '0' | '1')) {
        Some(c) => Err(format!("message bit '{c}' is not 0 or 1")),
        None => Ok(s.to_string()),
    }
}

/// Inclusive `start:stop:step` range in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct BetaRange {
    start: f64,
    stop: f64,
    step: f64,
}

const MAX_SWEEP_POINTS: usize = 100_000;

impl FromStr for BetaRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("range '{s}' must look like start:stop:step"));
        };
        let num = |t: &str| -> Result<f64, String> {
            let v: f64 = t.trim().parse().map_err(|e| format!("'{t}' in range '{s}': {e}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("'{t}' in range '{s}' is not finite"))
            }
        };
        let r = BetaRange { start: num(a)?, stop: num(b)?, step: num(c)? };
        if r.step <= 0.0 {
            return Err(format!("range step must be positive, got {}", r.step));
        }
        if r.stop < r.start {
            return Err(format!("range stop {} is below start {}", r.stop, r.start));
        }
        if (r.stop - r.start) / r.step + 1.0 > MAX_SWEEP_POINTS as f64 {
            return Err(format!("range produces more than {MAX_SWEEP_POINTS} points"));
        }
        Ok(r)
    }
}

impl BetaRange {
    fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long, default_value = "zigzag")]
    model: ModelSpec,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    alpha: Angle,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    beta: Angle,
    /// Input-channel bias of the one-photon randomizer [default: 0.5]
    #[arg(long, value_parser = parse_bias)]
    bias: Option<f64>,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    /// Write the JSONL trial stream here; the summary then goes to stdout.
    /// Without it, trials go to stdout and the summary to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ChshArgs {
    #[arg(long, default_value = "zigzag")]
    model: ModelSpec,
    /// a1,a2,b1,b2 in degrees
    #[arg(long, value_parser = parse_angle, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,45,22.5,67.5")]
    angles: Vec<Angle>,
    #[arg(long, value_parser = parse_bias)]
    bias: Option<f64>,
    #[arg(long)]
    trials_per_pair: u64,
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct NosigArgs {
    #[arg(long, default_value = "zigzag")]
    model: ModelSpec,
    /// Left settings, comma separated
    #[arg(long, value_parser = parse_angle, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    alphas: Vec<Angle>,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    beta: Angle,
    #[arg(long, value_parser = parse_bias)]
    bias: Option<f64>,
    /// Trials per left setting
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct SignalArgs {
    /// Probability that the sender's input channel is 1
    #[arg(long, value_parser = parse_bias, default_value_t = 1.0)]
    bias: f64,
    /// Bits to send, e.g. 01101001
    #[arg(long, value_parser = parse_bits)]
    message: String,
    #[arg(long)]
    photons_per_bit: u64,
    /// Spacing of Bob's polarizer scan in degrees
    #[arg(long, value_parser = parse_positive_f64, default_value_t = DEFAULT_GRID_STEP)]
    grid_step: f64,
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct MirrorArgs {
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    alpha: Angle,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    beta: Angle,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_parser = parse_positive_f64, default_value_t = DEFAULT_ANALYTIC_TOL)]
    analytic_tol: f64,
    #[arg(long, value_parser = parse_positive_f64, default_value_t = DEFAULT_EMPIRICAL_TOL)]
    empirical_tol: f64,
}

#[derive(Debug, Args, Serialize)]
struct InferArgs {
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    alpha: Angle,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    beta: Angle,
    /// Known fields: any of alpha=<deg>, leftBit=<0|1>, beta=<deg>, rightBit=<0|1>
    #[arg(long, value_parser = parse_knowledge, allow_hyphen_values = true, default_value = "")]
    known: KnowledgeState,
    #[arg(long, value_parser = parse_bias, default_value_t = 0.5)]
    bias: f64,
    #[arg(long, value_enum, default_value_t = ReadingArg::OnePhoton)]
    reading: ReadingArg,
}

fn parse_knowledge(s: &str) -> Result<KnowledgeState, String> {
    let mut k = KnowledgeState::default();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (key, value) = item.split_once('=').ok_or_else(|| format!("'{item}' must look like field=value"))?;
        let bit = |v: &str| -> Result<ChannelBit, String> {
            match v.trim() {
                "0" => Ok(ChannelBit::Perpendicular),
                "1" => Ok(ChannelBit::Aligned),
                other => Err(format!("'{other}' is not a channel bit")),
            }
        };
        let slot_taken = || format!("field '{key}' given twice");
        match key.trim() {
            "alpha" => {
                if k.known_alpha.replace(parse_angle(value)?).is_some() {
                    return Err(slot_taken());
                }
            }
            "beta" => {
                if k.known_beta.replace(parse_angle(value)?).is_some() {
                    return Err(slot_taken());
                }
            }
            "leftBit" | "left_bit" | "A" | "A'" => {
                if k.known_left_bit.replace(bit(value)?).is_some() {
                    return Err(slot_taken());
                }
            }
            "rightBit" | "right_bit" | "B" => {
                if k.known_right_bit.replace(bit(value)?).is_some() {
                    return Err(slot_taken());
                }
            }
            other => return Err(format!("unknown field '{other}' (expected alpha, leftBit, beta, rightBit)")),
        }
    }
    Ok(k)
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long, default_value = "zigzag")]
    model: ModelSpec,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    alpha: Angle,
    /// start:stop:step in degrees, stop inclusive
    #[arg(long, allow_hyphen_values = true)]
    beta_range: BetaRange,
    #[arg(long, value_parser = parse_bias)]
    bias: Option<f64>,
    /// Trials per beta value
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(format!("serialization error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(format!("csv error: {e}"))
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a C,
    result: R,
}

fn emit<C: Serialize, R: Serialize>(out: &mut (dyn Write + Send), command: &'static str, config: &C, result: R) -> Result<(), CliError> {
    let env = Envelope { tool: "zigzag", version: env!("CARGO_PKG_VERSION"), command, config, result };
    serde_json::to_writer_pretty(&mut *out, &env)?;
    writeln!(out)?;
    Ok(())
}

/// Entry point for the binary: reads [`THREADS_ENV`] and uses the process streams.
pub fn main_with_env() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => {
                let _ = writeln!(io::stderr(), "error: {THREADS_ENV} must be a positive integer, got '{v}'");
                return EXIT_USAGE;
            }
        },
        Err(_) => None,
    };
    run(args, threads, &mut io::stdout(), &mut io::stderr())
}

/// Runs one command line. `threads` caps the worker pool; output does not
/// depend on it.
pub fn run<I, T>(args: I, threads: Option<usize>, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command, out, err)),
            Err(e) => Err(CliError::Runtime(format!("could not start {n} worker threads: {e}"))),
        },
        None => dispatch(cli.command, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(CliError::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cmd: Command, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(a) => simulate(&a, out, err),
        Command::Chsh(a) => run_chsh(&a, out),
        Command::Nosig(a) => nosig(&a, out),
        Command::Signal(a) => signal(&a, out),
        Command::Mirror(a) => mirror(&a, out),
        Command::Infer(a) => infer(&a, out),
        Command::Sweep(a) => sweep(&a, out),
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    trials: u64,
    counts: [[u64; 2]; 2],
    joint: Option<[[f64; 2]; 2]>,
    analytic_joint: [[f64; 2]; 2],
}

fn simulate(a: &SimulateArgs, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let s = Settings::new(a.alpha, a.beta);
    let model = a.model.resolve(a.bias, &[a.alpha], &[a.beta])?;
    let records = run_batch(&model, s, a.trials, Seed(a.seed))?;

    let mut counts = [[0u64; 2]; 2];
    for r in &records {
        counts[r.left_bit.index()][r.right_bit.index()] += 1;
    }
    let analytic = match model {
        ModelKind::OnePhoton { policy } => one_photon_joint(s, policy),
        _ => two_photon_joint(s),
    };
    let summary = SimulateSummary {
        trials: a.trials,
        counts,
        joint: JointDistribution::from_counts(counts).ok().map(|j| j.p),
        analytic_joint: analytic.p,
    };

    let write_records = |w: &mut (dyn Write + Send)| -> Result<(), CliError> {
        for r in &records {
            serde_json::to_writer(&mut *w, r)?;
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    };
    match &a.out {
        Some(path) => {
            let mut f = BufWriter::new(create(path)?);
            write_records(&mut f)?;
            emit(out, "simulate", a, summary)
        }
        None => {
            write_records(out)?;
            emit(err, "simulate", a, summary)
        }
    }
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))
}

#[derive(Serialize)]
struct ChshResult {
    s: f64,
    std_error: f64,
    correlations: [f64; 4],
    trials_per_pair: u64,
    analytic_s: f64,
    local_bound: f64,
}

fn run_chsh(a: &ChshArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let [a1, a2, b1, b2] = a.angles.as_slice() else {
        return Err(CliError::Usage(format!("--angles needs exactly 4 values a1,a2,b1,b2, got {}", a.angles.len())));
    };
    if a.trials_per_pair == 0 {
        return Err(CliError::Usage("--trials-per-pair must be at least 1".into()));
    }
    let cfg = ChshConfig::new(*a1, *a2, *b1, *b2);
    let model = a.model.resolve(a.bias, &cfg.left(), &cfg.right())?;
    let est = chsh(&model, &cfg, a.trials_per_pair, Seed(a.seed))?;
    let result = ChshResult {
        s: est.s,
        std_error: est.std_error,
        correlations: est.correlations,
        trials_per_pair: est.trials_per_pair,
        analytic_s: chsh_analytic(&cfg),
        local_bound: max_local_chsh(&cfg)?,
    };
    emit(out, "chsh", a, result)
}

fn nosig(a: &NosigArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    if a.alphas.len() < 2 {
        return Err(CliError::Usage("--alphas needs at least two settings".into()));
    }
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let model = a.model.resolve(a.bias, &a.alphas, &[a.beta])?;
    let report = no_signalling_test(&model, &a.alphas, a.beta, a.trials, Seed(a.seed))?;
    emit(out, "nosig", a, report)
}

#[derive(Serialize)]
struct SignalResult {
    sent: String,
    sender_alphas: Vec<Angle>,
    decoded: DecodedMessage,
    bit_errors: usize,
}

fn signal(a: &SignalArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    if a.photons_per_bit == 0 {
        return Err(CliError::Usage("--photons-per-bit must be at least 1".into()));
    }
    let grid = beta_grid(a.grid_step).map_err(usage)?;
    let policy = ErutanPolicy::new(a.bias).map_err(usage)?;
    let seed = Seed(a.seed);
    let bits: Vec<u8> = a.message.bytes().map(|c| c - b'0').collect();
    let alphas: Vec<Angle> = bits.iter().enumerate().map(|(i, &b)| encode_bit(b, i)).collect();
    let batches = alphas
        .iter()
        .enumerate()
        .map(|(i, &alpha)| emit_signal_batch(policy, alpha, a.photons_per_bit, &grid, seed.derive(i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let decoded = decode_signal(&batches, &grid).map_err(|e| match e {
        Error::InvalidParameter(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    let sent = a.message.clone();
    let bit_errors = sent.chars().zip(decoded.bits.chars()).filter(|(x, y)| x != y).count();
    emit(out, "signal", a, SignalResult { sent, sender_alphas: alphas, decoded, bit_errors })
}

#[derive(Serialize)]
struct MirrorResult {
    analytic: EquivalenceReport,
    empirical: EquivalenceReport,
}

fn mirror(a: &MirrorArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let s = Settings::new(a.alpha, a.beta);
    let result = MirrorResult {
        analytic: analytic_equivalence(s, a.analytic_tol)?,
        empirical: empirical_equivalence(s, a.trials, Seed(a.seed), a.empirical_tol)?,
    };
    emit(out, "mirror", a, result)
}

fn infer(a: &InferArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let reading = match a.reading {
        ReadingArg::OnePhoton => Reading::OnePhoton { policy: ErutanPolicy::new(a.bias).map_err(usage)? },
        ReadingArg::TwoPhoton => Reading::TwoPhoton,
    };
    let c: Conditional = condition_reading(reading, Settings::new(a.alpha, a.beta), &a.known)?;
    emit(out, "infer", a, json!({ "reading": reading, "conditional": c }))
}

#[derive(Serialize)]
struct SweepRow {
    beta: f64,
    trials: u64,
    n00: u64,
    n01: u64,
    n10: u64,
    n11: u64,
    p_same: f64,
    correlation: f64,
    correlation_analytic: f64,
    p_right_aligned: f64,
}

#[derive(Serialize)]
struct SweepResult {
    rows: usize,
    max_abs_correlation_error: f64,
}

fn sweep(a: &SweepArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let betas: Vec<Angle> = a
        .beta_range
        .points()
        .into_iter()
        .map(Angle::new)
        .collect::<Result<_, _>>()
        .map_err(usage)?;
    let model = a.model.resolve(a.bias, &[a.alpha], &betas)?;
    let seed = Seed(a.seed);
    let mut w = csv::Writer::from_writer(BufWriter::new(create(&a.out)?));
    let mut worst = 0.0f64;
    for (i, (&beta, raw)) in betas.iter().zip(a.beta_range.points()).enumerate() {
        let s = Settings::new(a.alpha, beta);
        let c = count_batch(&model, s, a.trials, seed.derive(i as u64))?;
        let j = JointDistribution::from_counts(c)?;
        let analytic = match model {
            ModelKind::OnePhoton { policy } => one_photon_joint(s, policy).correlation(),
            _ => correlation_e(s),
        };
        worst = worst.max((j.correlation() - analytic).abs());
        w.serialize(SweepRow {
            beta: raw,
            trials: a.trials,
            n00: c[0][0],
            n01: c[0][1],
            n10: c[1][0],
            n11: c[1][1],
            p_same: j.p_same(),
            correlation: j.correlation(),
            correlation_analytic: analytic,
            p_right_aligned: j.right_aligned(),
        })?;
    }
    w.flush()?;
    emit(out, "sweep", a, SweepResult { rows: betas.len(), max_abs_correlation_error: worst })
}
