//! `anoncast <mode>`: single runs, seed sweeps and the statistical suites.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 protocol abort, 4 a suite
//! found a failure.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anoncast::experiments::{
    collision, robustness, scaling, sweep, uniformity, CollisionReport, RobustnessReport, ScalingReport, SweepRow,
    UniformityReport,
};
use anoncast::mpc::CompareMode;
use anoncast::protocol::{run_protocol, RunConfig, RunResult};
use anoncast::simnet::{AdversaryMode, Outcome};
use anoncast::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "anoncast", version, about = "Quorum-based MPC shuffle for anonymous broadcast, simulated")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Subcommand, Debug)]
enum Mode {
    /// One protocol execution.
    Run(Common),
    /// Consecutive seeds, one summary row each.
    Sweep(Common),
    /// Output-permutation frequencies and their chi-square test.
    Uniformity {
        #[command(flatten)]
        common: Common,
        /// Replace random sort keys by fixed ones (negative control).
        #[arg(long)]
        rigged_keys: bool,
    },
    /// Key-collision counts against n(n-1)/(2M).
    Collision {
        #[command(flatten)]
        common: Common,
        /// Key domain M: a power of two, or a prime above the quorum size.
        /// Defaults to the domain derived from n and k.
        #[arg(long)]
        domain: Option<u64>,
    },
    /// Adversarial runs compared with passive twins.
    Robustness(Common),
    /// Per-party cost and rounds across several n.
    Scaling {
        #[command(flatten)]
        common: Common,
        /// Party counts to measure.
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
        ns: Vec<usize>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Number of parties.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Number of dishonest parties.
    #[arg(long, default_value_t = 0)]
    t: usize,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Collision parameter of the key-domain bound.
    #[arg(long, default_value_t = 2.0)]
    k: f64,
    /// First seed; trial i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials or seeds; the default depends on the mode.
    #[arg(long)]
    trials: Option<u64>,
    /// none, corrupt-openings, garbage-dealing or silent. Robustness defaults
    /// to all three active modes.
    #[arg(long)]
    adversary: Option<AdversaryMode>,
    /// real or oracle.
    #[arg(long, default_value = "real")]
    compare_mode: CompareMode,
    /// Field modulus override.
    #[arg(long)]
    prime: Option<u64>,
    /// Quorum size override, a multiple of 6.
    #[arg(long)]
    quorum_size: Option<usize>,
    /// Multiplier on the cost of in-quorum broadcasts.
    #[arg(long, default_value_t = 1)]
    broadcast_overhead: u64,
    /// Put this many dishonest parties in every quorum, ignoring the
    /// goodness bound (negative control).
    #[arg(long)]
    force_quorum_dishonesty: Option<usize>,
    /// Messages, comma separated; party i sends i + 1 by default.
    #[arg(long, value_delimiter = ',')]
    inputs: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> RunConfig {
        RunConfig {
            n: self.n,
            t: self.t,
            epsilon: self.epsilon,
            k: self.k,
            quorum_size: self.quorum_size,
            prime: self.prime,
            seed: self.seed,
            adversary: self.adversary.unwrap_or_default(),
            compare_mode: self.compare_mode,
            inputs: self.inputs.clone(),
            broadcast_overhead: self.broadcast_overhead,
            force_quorum_dishonesty: self.force_quorum_dishonesty,
            ..RunConfig::default()
        }
    }

    fn trials(&self, default: u64) -> Result<u64, Failure> {
        match self.trials.unwrap_or(default) {
            0 => Err(Failure::Config("trials must be at least 1".into())),
            t => Ok(t),
        }
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Abort(String),
    Suite(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Abort { .. } => Failure::Abort(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    schema: u32,
    mode: &'a str,
    config: &'a RunConfig,
    trials: u64,
    result: &'a T,
}

#[derive(Serialize)]
struct RobustnessCsv {
    adversary: AdversaryMode,
    t: usize,
    seed: u64,
    outcome: Outcome,
    diverged: bool,
    flagged: usize,
}

#[derive(Serialize)]
struct PermutationCsv {
    rank: usize,
    count: u64,
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize, R: Serialize>(
    common: &Common,
    mode: &str,
    config: &RunConfig,
    trials: u64,
    result: &T,
    rows: impl IntoIterator<Item = R>,
) -> Result<(), Failure> {
    let mut out = sink(&common.out)?;
    match common.format {
        Format::Json => {
            let doc = Document { schema: SCHEMA, mode, config, trials, result };
            serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Failure::Io(e.to_string()))?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_run(common: &Common) -> Result<(), Failure> {
    let config = common.config();
    let r: RunResult = run_protocol(&config)?;
    let row = SweepRow::from_run(&config, &r);
    emit(common, "run", &config, 1, &r, [row])?;
    if let Some(out) = &r.output {
        let shown: Vec<u64> = out.shuffled.iter().map(|m| m.value()).collect();
        eprintln!("delivered {shown:?} ({:?}, {} rounds)", r.metrics.outcome, r.metrics.rounds);
    }
    if !r.metrics.flagged_parties.is_empty() {
        eprintln!("flagged parties {:?}", r.metrics.flagged_parties);
    }
    match &r.abort {
        Some(reason) => Err(Failure::Abort(reason.clone())),
        None => Ok(()),
    }
}

fn cmd_sweep(common: &Common) -> Result<(), Failure> {
    let config = common.config();
    let trials = common.trials(10)?;
    let rows = sweep(&config, trials)?;
    emit(common, "sweep", &config, trials, &rows, rows.iter())?;
    let aborted = rows.iter().filter(|r| r.outcome == Outcome::Abort).count();
    let incorrect = rows.iter().filter(|r| !r.correct).count();
    eprintln!("{trials} runs: {aborted} aborted, {incorrect} incorrect");
    if aborted > 0 {
        Err(Failure::Abort(format!("{aborted} of {trials} runs aborted")))
    } else if incorrect > 0 {
        Err(Failure::Suite(format!("{incorrect} of {trials} runs delivered a wrong result")))
    } else {
        Ok(())
    }
}

fn cmd_uniformity(common: &Common, rigged_keys: bool) -> Result<(), Failure> {
    let config = RunConfig { rigged_keys, ..common.config() };
    let bins: u64 = (1..=common.n as u64).product();
    // The real-mode confirmation batch is a tenth the size of the oracle batch.
    let per_bin = if common.compare_mode == CompareMode::Oracle { 1000 } else { 100 };
    let trials = common.trials(per_bin * bins)?;
    if trials < per_bin * bins {
        return Err(Failure::Config(format!(
            "{} mode needs at least {per_bin}·n! = {} trials",
            common.compare_mode,
            per_bin * bins
        )));
    }
    let r: UniformityReport = uniformity(&config, trials)?;
    let rows = r.counts.iter().enumerate().map(|(rank, &count)| PermutationCsv { rank, count });
    emit(common, "uniformity", &config, trials, &r, rows)?;
    eprintln!(
        "chi-square {:.3} vs critical {:.3} (df {}, alpha {}) over {} collision-free runs",
        r.chi_square, r.critical, r.df, r.alpha, r.used
    );
    if r.pass {
        Ok(())
    } else {
        Err(Failure::Suite("permutation frequencies are not uniform".into()))
    }
}

fn cmd_collision(common: &Common, domain: Option<u64>) -> Result<(), Failure> {
    let config = common.config();
    let trials = common.trials(10_000)?;
    if trials < 10_000 {
        return Err(Failure::Config("collision suite needs at least 10000 trials".into()));
    }
    let r: CollisionReport = collision(&config, domain, trials)?;
    emit(common, "collision", &config, trials, &r, [&r])?;
    eprintln!(
        "M = {}: mean {:.5} vs expected {:.5} ± 3·{:.5}; {} of {} runs collision-free",
        r.domain, r.mean, r.expected, r.std_error, r.zero_collision_trials, r.trials
    );
    if r.within_band {
        Ok(())
    } else {
        Err(Failure::Suite("mean collision count outside the 3-sigma band".into()))
    }
}

fn cmd_robustness(common: &Common) -> Result<(), Failure> {
    let config = common.config();
    let modes: Vec<AdversaryMode> = match common.adversary {
        None => AdversaryMode::ACTIVE.to_vec(),
        Some(AdversaryMode::None) => return Err(Failure::Config("robustness needs an active adversary".into())),
        Some(m) => vec![m],
    };
    if common.t == 0 {
        return Err(Failure::Config("robustness needs t >= 1".into()));
    }
    let mut ts = vec![common.t.div_ceil(2), common.t];
    ts.dedup();
    let trials = common.trials(50)?;
    let r: RobustnessReport = robustness(&config, &modes, &ts, trials)?;
    let rows = r.rows.iter().map(|row| RobustnessCsv {
        adversary: row.adversary,
        t: row.t,
        seed: row.seed,
        outcome: row.outcome,
        diverged: row.diverged,
        flagged: row.flagged.len(),
    });
    emit(common, "robustness", &config, trials, &r, rows)?;
    for row in r.rows.iter().filter(|row| row.adversary == AdversaryMode::Silent).take(3) {
        eprintln!("silent seed {}: {:?}, flagged {:?}", row.seed, row.outcome, row.flagged);
    }
    eprintln!("{} divergences over {} runs", r.divergences, r.rows.len());
    if r.divergences == 0 {
        Ok(())
    } else {
        Err(Failure::Suite(format!("{} runs diverged from their passive twins", r.divergences)))
    }
}

fn cmd_scaling(common: &Common, ns: &[usize]) -> Result<(), Failure> {
    let config = common.config();
    let trials = common.trials(3)?;
    let r: ScalingReport = scaling(&config, ns, trials)?;
    emit(common, "scaling", &config, trials, &r, r.rows.iter())?;
    eprintln!(
        "shuffle slope {:.3}, output slope {:.3}; {}",
        r.shuffle_slope, r.output_slope, r.depth_formula
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.mode {
        Mode::Run(c) => cmd_run(c),
        Mode::Sweep(c) => cmd_sweep(c),
        Mode::Uniformity { common, rigged_keys } => cmd_uniformity(common, *rigged_keys),
        Mode::Collision { common, domain } => cmd_collision(common, *domain),
        Mode::Robustness(c) => cmd_robustness(c),
        Mode::Scaling { common, ns } => cmd_scaling(common, ns),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Abort(msg)) => {
            eprintln!("protocol abort: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Suite(msg)) => {
            eprintln!("suite failed: {msg}");
            ExitCode::from(4)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::FAILURE
        }
    }
}
