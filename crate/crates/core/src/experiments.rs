//! Multi-run suites: seed sweeps, permutation uniformity, key collisions,
//! Byzantine robustness against passive twins, and cost scaling.
//!
//! Trial `i` of a suite uses seed `config.seed + i`, so every report is a
//! pure function of its inputs.

use serde::{Deserialize, Serialize};

use crate::circuit::batcher_depth;
use crate::error::{Error, Result};
use crate::protocol::{run_protocol, sample_keys, RunConfig, RunResult};
use crate::simnet::{AdversaryMode, Outcome, Phase};
use crate::stats::{chi_square_critical, chi_square_uniform, collision_moments, log_log_slope, mean};

/// Significance level of every chi-square test.
pub const ALPHA: f64 = 0.001;
/// Width of the acceptance band for empirical means, in standard errors.
pub const SIGMAS: f64 = 3.0;
/// Largest `n` the uniformity suite tabulates (`n!` bins).
pub const MAX_UNIFORMITY_N: usize = 6;

fn seeded(config: &RunConfig, trial: u64) -> RunConfig {
    RunConfig { seed: config.seed.wrapping_add(trial), ..config.clone() }
}

/// One line of a seed sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub outcome: Outcome,
    pub rounds: u64,
    pub total_bits: u64,
    pub shuffle_bits_per_party: f64,
    pub output_bits_per_party: f64,
    pub collisions: u64,
    pub resamples: u64,
    pub flagged: usize,
    /// Delivered multiset equals the input multiset and keys left the
    /// circuit sorted.
    pub correct: bool,
}

impl SweepRow {
    pub fn from_run(config: &RunConfig, r: &RunResult) -> Self {
        let n = config.n as f64;
        let output_bits = r.metrics.per_phase_bits.get(&Phase::Output).copied().unwrap_or(0);
        SweepRow {
            seed: config.seed,
            outcome: r.metrics.outcome,
            rounds: r.metrics.rounds,
            total_bits: r.metrics.total_bits,
            shuffle_bits_per_party: r.metrics.shuffle_bits() as f64 / n,
            output_bits_per_party: output_bits as f64 / n,
            collisions: r.metrics.collisions,
            resamples: r.metrics.resamples,
            flagged: r.metrics.flagged_parties.len(),
            correct: is_correct(config, r),
        }
    }
}

/// Whether a run delivered a permutation of the inputs in key order.
pub fn is_correct(config: &RunConfig, r: &RunResult) -> bool {
    let Some(out) = &r.output else { return false };
    let mut got: Vec<u64> = out.shuffled.iter().map(|x| x.value()).collect();
    let mut want = config.inputs();
    got.sort_unstable();
    want.sort_unstable();
    got == want && r.sorted_keys.windows(2).all(|w| w[0] <= w[1])
}

/// Runs `trials` consecutive seeds.
pub fn sweep(config: &RunConfig, trials: u64) -> Result<Vec<SweepRow>> {
    (0..trials)
        .map(|i| {
            let c = seeded(config, i);
            run_protocol(&c).map(|r| SweepRow::from_run(&c, &r))
        })
        .collect()
}

/// Frequencies of output permutations over runs without key collisions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    pub n: usize,
    pub trials: u64,
    /// Trials without key collisions, the ones tabulated.
    pub used: u64,
    /// Count per permutation, indexed by lexicographic rank of the sender
    /// order in the output.
    pub counts: Vec<u64>,
    pub chi_square: f64,
    pub df: usize,
    pub alpha: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Lexicographic rank of a permutation of `0..k`.
pub fn permutation_rank(perm: &[usize]) -> usize {
    let mut rank = 0;
    for (i, &x) in perm.iter().enumerate() {
        let smaller_later = perm[i + 1..].iter().filter(|&&y| y < x).count();
        rank = rank * (perm.len() - i) + smaller_later;
    }
    rank
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Tabulates which sender ends up at each output position.
pub fn uniformity(config: &RunConfig, trials: u64) -> Result<UniformityReport> {
    let n = config.n;
    if n > MAX_UNIFORMITY_N {
        return Err(Error::config(format!("uniformity needs n <= {MAX_UNIFORMITY_N}, got {n}")));
    }
    let inputs = config.inputs();
    let mut distinct = inputs.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != n {
        return Err(Error::config("uniformity needs distinct inputs"));
    }
    let bins = factorial(n);
    let mut counts = vec![0u64; bins];
    let mut used = 0;
    for i in 0..trials {
        let c = seeded(config, i);
        let r = run_protocol(&c)?;
        if r.metrics.collisions > 0 {
            continue;
        }
        let out = r.output.as_ref().ok_or_else(|| Error::Abort {
            context: format!("uniformity trial {}", c.seed),
            reason: r.abort.clone().unwrap_or_default(),
        })?;
        let perm: Vec<usize> = out
            .shuffled
            .iter()
            .map(|m| inputs.iter().position(|&x| x == m.value()).expect("delivered an input"))
            .collect();
        counts[permutation_rank(&perm)] += 1;
        used += 1;
    }
    let df = bins - 1;
    let chi_square = if used == 0 { f64::INFINITY } else { chi_square_uniform(&counts) };
    let critical = chi_square_critical(df.max(1), ALPHA);
    Ok(UniformityReport { n, trials, used, counts, chi_square, df, alpha: ALPHA, critical, pass: chi_square < critical })
}

/// Key-collision statistics against `n(n−1)/(2M)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub n: usize,
    pub domain: u64,
    pub trials: u64,
    pub mean: f64,
    pub expected: f64,
    /// Standard error of the mean under independent uniform keys.
    pub std_error: f64,
    pub within_band: bool,
    pub total_collisions: u64,
    pub zero_collision_trials: u64,
}

impl CollisionReport {
    pub fn zero_fraction(&self) -> f64 {
        self.zero_collision_trials as f64 / self.trials as f64
    }
}

/// Runs key generation `trials` times; see [`sample_keys`] for `domain`.
pub fn collision(config: &RunConfig, domain: Option<u64>, trials: u64) -> Result<CollisionReport> {
    if trials == 0 {
        return Err(Error::config("collision suite needs at least one trial"));
    }
    let mut total = 0u64;
    let mut zero = 0u64;
    let mut m = 0;
    for i in 0..trials {
        let s = sample_keys(&seeded(config, i), domain)?;
        m = s.domain;
        total += s.collisions;
        zero += u64::from(s.collisions == 0);
    }
    let (expected, var) = collision_moments(config.n, m);
    let mean = total as f64 / trials as f64;
    let std_error = (var / trials as f64).sqrt();
    Ok(CollisionReport {
        n: config.n,
        domain: m,
        trials,
        mean,
        expected,
        std_error,
        within_band: (mean - expected).abs() <= SIGMAS * std_error,
        total_collisions: total,
        zero_collision_trials: zero,
    })
}

/// One adversarial run compared with its passive twin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub adversary: AdversaryMode,
    pub t: usize,
    pub seed: u64,
    pub outcome: Outcome,
    /// Some honest party's view differs from the passive twin's.
    pub diverged: bool,
    pub flagged: Vec<usize>,
    pub dishonest: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub n: usize,
    pub rows: Vec<RobustnessRow>,
    pub divergences: usize,
}

/// Whether the honest parties of `run` saw anything other than in `twin`.
pub fn diverges(run: &RunResult, twin: &RunResult) -> bool {
    let (Some(a), Some(b)) = (&run.output, &twin.output) else { return true };
    let honest = |i: &usize| !run.dishonest.contains(i);
    a.shuffled != b.shuffled
        || (0..a.per_party_view.len()).filter(honest).any(|i| a.per_party_view[i] != b.per_party_view[i])
}

/// Every `(mode, t, seed)` against a twin with the same seed and no
/// adversarial behavior.
pub fn robustness(config: &RunConfig, modes: &[AdversaryMode], ts: &[usize], seeds: u64) -> Result<RobustnessReport> {
    if modes.contains(&AdversaryMode::None) || modes.is_empty() {
        return Err(Error::config("robustness needs at least one active adversary mode"));
    }
    let mut rows = Vec::new();
    for &t in ts {
        for i in 0..seeds {
            let base = RunConfig { t, ..seeded(config, i) };
            let twin = run_protocol(&RunConfig { adversary: AdversaryMode::None, ..base.clone() })?;
            for &adversary in modes {
                let r = run_protocol(&RunConfig { adversary, ..base.clone() })?;
                rows.push(RobustnessRow {
                    adversary,
                    t,
                    seed: base.seed,
                    outcome: r.metrics.outcome,
                    diverged: diverges(&r, &twin),
                    flagged: r.metrics.flagged_parties.clone(),
                    dishonest: r.dishonest.clone(),
                });
            }
        }
    }
    let divergences = rows.iter().filter(|r| r.diverged).count();
    Ok(RobustnessReport { n: config.n, rows, divergences })
}

/// Mean costs at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub seeds: u64,
    pub prime: u64,
    pub quorum_size: usize,
    pub depth: usize,
    /// Online rounds of one gate.
    pub gate_rounds: u64,
    pub circuit_rounds: u64,
    pub rounds: f64,
    pub shuffle_bits_per_party: f64,
    pub output_bits_per_party: f64,
}

impl ScalingRow {
    /// Circuit rounds within one round per level of `gate_rounds × depth`.
    pub fn rounds_match(&self) -> bool {
        let predicted = self.gate_rounds * self.depth as u64;
        self.circuit_rounds.abs_diff(predicted) <= self.depth as u64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Log-log slope of shuffle bits per party against `n`.
    pub shuffle_slope: f64,
    /// Log-log slope of output-phase bits per party against `n`.
    pub output_slope: f64,
    /// Closed form of the comparator depth for `W` padded wires.
    pub depth_formula: String,
}

pub const DEPTH_FORMULA: &str = "depth(W) = log2(W)·(log2(W)+1)/2, W = next power of two >= n";

/// Runs `seeds` seeds at every `n` and fits per-party costs on log-log axes.
pub fn scaling(config: &RunConfig, ns: &[usize], seeds: u64) -> Result<ScalingReport> {
    if seeds == 0 || ns.len() < 2 {
        return Err(Error::config("scaling needs at least two sizes and one seed"));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut shuffle = Vec::new();
        let mut output = Vec::new();
        let mut rounds = Vec::new();
        let mut last = None;
        for i in 0..seeds {
            let c = RunConfig { n, t: config.t.min(crate::protocol::max_faults(n, config.epsilon)), ..seeded(config, i) };
            let r = run_protocol(&c)?;
            let row = SweepRow::from_run(&c, &r);
            shuffle.push(row.shuffle_bits_per_party);
            output.push(row.output_bits_per_party);
            rounds.push(r.metrics.rounds as f64);
            last = Some(r);
        }
        let r = last.expect("at least one seed");
        debug_assert_eq!(r.metrics.depth, batcher_depth(n.next_power_of_two()));
        rows.push(ScalingRow {
            n,
            seeds,
            prime: r.resolved.prime,
            quorum_size: r.resolved.quorum.size,
            depth: r.metrics.depth,
            gate_rounds: r.metrics.gate_rounds,
            circuit_rounds: r.metrics.circuit_rounds,
            rounds: mean(&rounds),
            shuffle_bits_per_party: mean(&shuffle),
            output_bits_per_party: mean(&output),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let slope = |f: fn(&ScalingRow) -> f64| log_log_slope(&xs, &rows.iter().map(f).collect::<Vec<_>>());
    Ok(ScalingReport {
        shuffle_slope: slope(|r| r.shuffle_bits_per_party),
        output_slope: slope(|r| r.output_bits_per_party),
        depth_formula: DEPTH_FORMULA.to_string(),
        rows,
    })
}
