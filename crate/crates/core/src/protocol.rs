//! The anonymous-broadcast run: quorum setup, input sharing, key
//! generation, level-by-level circuit evaluation and output delivery.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{assign_quorums, build_batcher, Consumer, ShuffleCircuit};
use crate::error::{Error, Result};
use crate::field::{collision_bound, key_domain_bits, run_prime, Fe, PrimeField, MAX_MODULUS};
use crate::mpc::{CompareMode, Engine, Pair, QuorumParams};
use crate::sharing::SharedValue;
use crate::simnet::{
    Action, Adversary, AdversaryMode, Context, DealKind, Outcome, Phase, RunMetrics, Stream,
};

/// Consecutive rejected quorum samples after which setup gives up.
pub const MAX_RESAMPLES: u64 = 10_000;

/// An ordered multiset of parties. Position `i` evaluates sharings at `i + 1`;
/// a party sampled twice holds two positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quorum {
    pub id: usize,
    /// Party index (0-based) at each position.
    pub members: Vec<usize>,
    /// Honesty of the party at each position.
    pub honest: Vec<bool>,
}

impl Quorum {
    pub fn new(id: usize, members: Vec<usize>, honest: Vec<bool>) -> Self {
        assert_eq!(members.len(), honest.len());
        Quorum { id, members, honest }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn dishonest_count(&self) -> usize {
        self.honest.iter().filter(|h| !**h).count()
    }

    /// Honest positions a dealing adversary targets: the lowest-indexed ones,
    /// as many as the error budget `e` leaves after the dishonest positions.
    pub fn victims(&self, e: usize) -> Vec<bool> {
        let mut budget = e.saturating_sub(self.dishonest_count());
        self.honest
            .iter()
            .map(|&h| {
                let hit = h && budget > 0;
                if hit {
                    budget -= 1;
                }
                hit
            })
            .collect()
    }
}

/// Parameters of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub t: usize,
    pub epsilon: f64,
    pub k: f64,
    /// Overrides the default `N`; must be a multiple of 6.
    pub quorum_size: Option<usize>,
    /// Overrides the derived prime.
    pub prime: Option<u64>,
    pub seed: u64,
    pub adversary: AdversaryMode,
    pub compare_mode: CompareMode,
    /// Messages; party `i` sends `i + 1` when absent.
    pub inputs: Option<Vec<u64>>,
    pub broadcast_overhead: u64,
    /// `c` in `N = c·⌈log₂ n⌉` rounded up to a multiple of 6.
    pub quorum_constant: usize,
    /// Places this many dishonest parties in every quorum, ignoring the
    /// goodness bound. Only for negative controls.
    pub force_quorum_dishonesty: Option<usize>,
    /// Replaces random sort keys with the fixed keys `0, 1, …, n−1`.
    pub rigged_keys: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 4,
            t: 0,
            epsilon: 0.01,
            k: 2.0,
            quorum_size: None,
            prime: None,
            seed: 0,
            adversary: AdversaryMode::None,
            compare_mode: CompareMode::Real,
            inputs: None,
            broadcast_overhead: 1,
            quorum_constant: 3,
            force_quorum_dishonesty: None,
            rigged_keys: false,
        }
    }
}

/// Derived run parameters after validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolved {
    pub prime: u64,
    /// `log₂ M` for the key domain `[0, M)`.
    pub key_bits: u32,
    pub quorum: QuorumParams,
}

impl Resolved {
    pub fn key_domain(&self) -> u64 {
        1 << self.key_bits
    }
}

/// Default quorum size: `c·⌈log₂ n⌉` rounded up to a multiple of 6.
pub fn default_quorum_size(n: usize, c: usize) -> usize {
    let log = (usize::BITS - (n.max(2) - 1).leading_zeros()) as usize;
    (c * log).div_ceil(6).max(1) * 6
}

/// Largest `t` with `t < (1/6 − ε)·n`.
pub fn max_faults(n: usize, epsilon: f64) -> usize {
    let bound = (1.0 / 6.0 - epsilon) * n as f64;
    if bound <= 0.0 {
        0
    } else {
        (bound.ceil() as usize).saturating_sub(1)
    }
}

impl RunConfig {
    /// Checks the dishonesty, prime and quorum bounds.
    pub fn resolve(&self) -> Result<Resolved> {
        if self.n < 2 {
            return Err(Error::config(format!("need at least 2 parties, got {}", self.n)));
        }
        if !(0.0..1.0 / 6.0).contains(&self.epsilon) {
            return Err(Error::config(format!("epsilon {} outside [0, 1/6)", self.epsilon)));
        }
        if self.t > 0 && self.t > max_faults(self.n, self.epsilon) {
            return Err(Error::config(format!(
                "t = {} violates t < (1/6 - {})·{}",
                self.t, self.epsilon, self.n
            )));
        }
        if self.k <= 0.0 {
            return Err(Error::config(format!("collision parameter k = {} must be positive", self.k)));
        }
        let bound = collision_bound(self.n, self.k);
        let (prime, key_bits) = match self.prime {
            None => run_prime(self.n, self.k)?,
            Some(p) => {
                if p >= MAX_MODULUS || !crate::field::is_prime(p) {
                    return Err(Error::config(format!("{p} is not a prime below 2^63")));
                }
                if p < 5 {
                    return Err(Error::config(format!("prime {p} leaves no key domain")));
                }
                let bits = key_domain_bits(p);
                if (1u64 << bits) < bound {
                    return Err(Error::config(format!(
                        "prime {p} gives key domain 2^{bits} below the collision bound {bound}"
                    )));
                }
                (p, bits)
            }
        };
        let size = self.quorum_size.unwrap_or_else(|| default_quorum_size(self.n, self.quorum_constant));
        let quorum = QuorumParams::new(size)?;
        if size as u64 >= prime {
            return Err(Error::config(format!("quorum size {size} needs a prime above it, got {prime}")));
        }
        if let Some(inputs) = &self.inputs {
            if inputs.len() != self.n {
                return Err(Error::config(format!("{} inputs for {} parties", inputs.len(), self.n)));
            }
            if let Some(x) = inputs.iter().find(|&&x| x >= prime) {
                return Err(Error::config(format!("input {x} is not below the prime {prime}")));
            }
        }
        if self.broadcast_overhead == 0 {
            return Err(Error::config("broadcast overhead must be at least 1"));
        }
        Ok(Resolved { prime, key_bits, quorum })
    }

    pub fn inputs(&self) -> Vec<u64> {
        self.inputs.clone().unwrap_or_else(|| (1..=self.n as u64).collect())
    }
}

/// Quorums plus how often sampling had to retry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuorumSet {
    pub quorums: Vec<Quorum>,
    pub resamples: u64,
}

/// Samples `n` quorums of `size` positions uniformly with replacement and
/// resamples any with more than `size/6 − 1` dishonest positions.
pub fn build_quorums<R: Rng + ?Sized>(
    n: usize,
    dishonest: &[bool],
    epsilon: f64,
    size: usize,
    rng: &mut R,
) -> Result<QuorumSet> {
    let t = dishonest.iter().filter(|d| **d).count();
    if t > 0 && t > max_faults(n, epsilon) {
        return Err(Error::config(format!("{t} dishonest parties violate t < (1/6 - {epsilon})·{n}")));
    }
    let params = QuorumParams::new(size)?;
    let mut quorums = Vec::with_capacity(n);
    let mut resamples = 0;
    for id in 0..n {
        let mut failures = 0;
        loop {
            let members: Vec<usize> = (0..size).map(|_| rng.random_range(0..n)).collect();
            let honest: Vec<bool> = members.iter().map(|&m| !dishonest[m]).collect();
            let q = Quorum::new(id, members, honest);
            if q.dishonest_count() <= params.max_dishonest() {
                quorums.push(q);
                break;
            }
            resamples += 1;
            failures += 1;
            if failures > MAX_RESAMPLES {
                return Err(Error::config(format!(
                    "no good quorum after {MAX_RESAMPLES} samples; dishonest fraction too high for N = {size}"
                )));
            }
        }
    }
    Ok(QuorumSet { quorums, resamples })
}

/// Overwrites the first `count` positions of every quorum with dishonest parties.
pub fn force_dishonesty(quorums: &mut [Quorum], dishonest: &[bool], count: usize) -> Result<()> {
    let bad: Vec<usize> = (0..dishonest.len()).filter(|&i| dishonest[i]).collect();
    if bad.is_empty() && count > 0 {
        return Err(Error::config("forcing quorum dishonesty needs t > 0"));
    }
    for q in quorums {
        for pos in 0..count.min(q.size()) {
            q.members[pos] = bad[(q.id + pos) % bad.len()];
            q.honest[pos] = false;
        }
    }
    Ok(())
}

/// What parties end up with.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolOutput {
    /// Delivered messages in output order, padding removed.
    pub shuffled: Vec<Fe>,
    /// Per party, the message list accepted from each output quorum
    /// (`None` when no strict majority agreed).
    pub per_party_view: Vec<Vec<Option<Vec<Fe>>>>,
}

/// Everything a run produced, including simulator-side observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub resolved: Resolved,
    pub output: Option<ProtocolOutput>,
    pub metrics: RunMetrics,
    /// Sort keys of the real inputs, by party.
    pub keys: Vec<u64>,
    /// Keys left on the real output wires after the circuit.
    pub sorted_keys: Vec<u64>,
    pub dishonest: Vec<usize>,
    /// Parties whose input dealing could not be decoded.
    pub input_faults: Vec<usize>,
    /// Where and why the run aborted.
    pub abort: Option<String>,
    /// Whether all honest parties accepted identical outputs.
    pub honest_agreement: bool,
}

fn constant_sharing(size: usize, degree: usize, quorum: usize, v: Fe) -> SharedValue {
    SharedValue::new(vec![v; size], degree, quorum)
}

/// Party `i` deals a degree-`N/3` sharing of its message into the quorum of
/// input gate `⌊i/2⌋`; the quorum canonicalizes the dealt word.
fn input_sharing(
    engine: &Engine,
    circuit: &ShuffleCircuit,
    quorums: &[Quorum],
    dishonest: &[bool],
    inputs: &[u64],
) -> Result<(Vec<[Option<SharedValue>; 2]>, Vec<usize>, u64)> {
    let f = *engine.field();
    let params = *engine.params();
    let adversary = engine.adversary();
    let n = inputs.len();
    let mut out = Vec::with_capacity(circuit.input_pairs());
    let mut faults = Vec::new();
    let mut rounds = 0;
    for pair in 0..circuit.input_pairs() {
        let q = &quorums[circuit.input_quorums()[pair]];
        let victims = q.victims(params.correctable);
        let mut dealt = Vec::new();
        let mut dealers = Vec::new();
        for party in [2 * pair, 2 * pair + 1].into_iter().filter(|&p| p < n) {
            let mut rng = Stream::Dealer { party }.rng(engine.seed());
            let poly = crate::field::random_poly(&f, params.degree, Some(f.elem(inputs[party])), &mut rng);
            let mut adv = Stream::Adversary { ctx: Context::Input(pair) }.rng(engine.seed() ^ party as u64);
            let honest = !dishonest[party];
            let word = (0..q.size())
                .map(|j| {
                    let v = poly.eval(&f, f.point(j));
                    let action = Action::Deal { kind: DealKind::Input, victim: victims[j] };
                    adversary.hook(&f, honest, action, v, &mut adv).unwrap_or(Fe::ZERO)
                })
                .collect();
            engine.meter().charge_sends(party, Phase::Input, 1, q.size() as u64);
            dealt.push(SharedValue::new(word, params.degree, q.id));
            dealers.push(party);
        }
        let mut session = engine.session(q, Context::Input(pair));
        session.set_phase(Phase::Input);
        let refs: Vec<&SharedValue> = dealt.iter().collect();
        let canon = session.canonicalize(&refs)?;
        rounds = rounds.max(1 + session.rounds_in(Phase::Input));
        let mut slots: [Option<SharedValue>; 2] = [None, None];
        for (k, (sv, fault)) in canon.into_iter().enumerate() {
            if fault {
                faults.push(dealers[k]);
            }
            slots[k] = Some(sv);
        }
        if slots[1].is_none() {
            slots[1] = Some(constant_sharing(q.size(), params.degree, q.id, Fe::ZERO));
        }
        out.push(slots);
    }
    Ok((out, faults, rounds))
}

/// How sort keys are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum KeyShape {
    /// Composed from this many shared random bits: uniform on `[0, 2^bits)`.
    Bits(u32),
    /// One shared random field element: uniform on `[0, p)`.
    Field,
    /// The public keys `0, 1, …, n−1`.
    Rigged,
}

/// Each input quorum draws two sort keys. Padding wires get the public key
/// `sentinel`, above every real key.
fn key_generation(
    engine: &Engine,
    circuit: &ShuffleCircuit,
    quorums: &[Quorum],
    n: usize,
    shape: KeyShape,
    sentinel: Fe,
) -> Result<(Vec<[SharedValue; 2]>, u64, u64)> {
    let f = *engine.field();
    let params = *engine.params();
    let mut out = Vec::with_capacity(circuit.input_pairs());
    let (mut keygen_rounds, mut setup_rounds) = (0, 0);
    for pair in 0..circuit.input_pairs() {
        let q = &quorums[circuit.input_quorums()[pair]];
        let real = [2 * pair, 2 * pair + 1].iter().filter(|&&p| p < n).count();
        let mut session = engine.session(q, Context::KeyGen(pair));
        session.set_phase(Phase::GenRand);
        let keys: Vec<SharedValue> = match shape {
            KeyShape::Rigged => (0..real)
                .map(|k| constant_sharing(q.size(), params.degree, q.id, f.elem((2 * pair + k) as u64)))
                .collect(),
            KeyShape::Field => session.gen_rand_many(real, params.degree),
            KeyShape::Bits(0) => (0..real).map(|_| constant_sharing(q.size(), params.degree, q.id, Fe::ZERO)).collect(),
            KeyShape::Bits(key_bits) => {
                let bits = session.gen_rand_bits(real * key_bits as usize)?;
                bits.chunks(key_bits as usize)
                .map(|chunk| {
                    let mut vals = vec![Fe::ZERO; q.size()];
                    let mut weight = Fe::ONE;
                    for b in chunk {
                        for (acc, &v) in vals.iter_mut().zip(b.value().values()) {
                            *acc = f.mul_add(weight, v, *acc);
                        }
                        weight = f.add(weight, weight);
                    }
                    SharedValue::new(vals, params.degree, q.id)
                })
                .collect()
            }
        };
        keygen_rounds = keygen_rounds.max(session.rounds_in(Phase::GenRand));
        setup_rounds = setup_rounds.max(session.rounds_in(Phase::Setup));
        let mut it = keys.into_iter();
        let k0 = it.next().expect("every input pair has a real input");
        let k1 = it.next().unwrap_or_else(|| constant_sharing(q.size(), params.degree, q.id, sentinel));
        out.push([k0, k1]);
    }
    Ok((out, keygen_rounds, setup_rounds))
}

/// Per-level round bookkeeping from circuit evaluation.
struct CircuitStats {
    circuit_rounds: u64,
    setup_rounds: u64,
    gate_rounds: u64,
    triples_generated: u64,
    triples_consumed: u64,
}

/// Evaluates the network level by level. Each gate preprocesses, compares
/// and switches its two pairs, then moves each output to the quorum of the
/// next gate on that wire, or to the output quorum of the wire's pair.
fn evaluate_circuit(
    engine: &Engine,
    circuit: &ShuffleCircuit,
    quorums: &[Quorum],
    inputs: Vec<[Pair; 2]>,
    padding: Pair,
) -> Result<(Vec<[Option<Pair>; 2]>, CircuitStats)> {
    let m = circuit.gates().len();
    let mut inbox: Vec<[Option<Pair>; 2]> = (0..m).map(|_| [None, None]).collect();
    let wires = circuit.wires();
    for (pair, [lo, hi]) in inputs.into_iter().enumerate() {
        inbox[circuit.input_gate(pair)] = [Some(lo), Some(hi)];
    }
    for pair in circuit.input_pairs()..wires / 2 {
        let q = circuit.gate(circuit.input_gate(pair)).quorum_id;
        let pad = |sv: &SharedValue| sv.clone().with_quorum(q);
        inbox[circuit.input_gate(pair)] = [
            Some((pad(&padding.0), pad(&padding.1))),
            Some((pad(&padding.0), pad(&padding.1))),
        ];
    }
    let real_pairs = circuit.input_pairs();
    let mut outputs: Vec<[Option<Pair>; 2]> = (0..real_pairs).map(|_| [None, None]).collect();
    let mut stats = CircuitStats {
        circuit_rounds: 0,
        setup_rounds: 0,
        gate_rounds: 0,
        triples_generated: 0,
        triples_consumed: 0,
    };
    for level in 0..circuit.depth() {
        let mut level_rounds = 0;
        for gate in circuit.level(level) {
            let q = &quorums[gate.quorum_id];
            let [a, b] = std::mem::take(&mut inbox[gate.id]);
            let (a, b) = (a.expect("low input delivered"), b.expect("high input delivered"));
            let fail = |e: Error| match e {
                Error::Abort { context, reason } => Error::Abort {
                    context: format!("level {level} gate {} ({context})", gate.id),
                    reason,
                },
                other => other,
            };
            let mut session = engine.session(q, Context::Gate(gate.id));
            let prep = session.preprocess_gate().map_err(fail)?;
            session.set_phase(Phase::Gate);
            let (lo, hi) = session.gate_compute(&a, &b, prep).map_err(fail)?;
            let (to_lo, to_hi) = circuit.consumers(gate.id);
            for (wire, value, consumer) in [(gate.wire_lo, lo, to_lo), (gate.wire_hi, hi, to_hi)] {
                let (dst, slot) = match consumer {
                    Consumer::Gate(next) => {
                        let g = circuit.gate(next);
                        (Some(g.quorum_id), (next, usize::from(g.wire_lo != wire)))
                    }
                    Consumer::Output(pair) if pair < real_pairs => {
                        (Some(circuit.output_quorums()[pair]), (pair, wire % 2))
                    }
                    Consumer::Output(_) => (None, (0, 0)),
                };
                let Some(dst) = dst else { continue };
                let moved = session.reshare(&quorums[dst], &[&value.0, &value.1]).map_err(fail)?;
                let mut it = moved.into_iter();
                let moved = (it.next().expect("key"), it.next().expect("payload"));
                match consumer {
                    Consumer::Gate(_) => inbox[slot.0][slot.1] = Some(moved),
                    Consumer::Output(_) => outputs[slot.0][slot.1] = Some(moved),
                }
            }
            let online = session.rounds_in(Phase::Gate) + session.rounds_in(Phase::Reshare);
            stats.gate_rounds = stats.gate_rounds.max(online);
            level_rounds = level_rounds.max(online);
            stats.setup_rounds = stats.setup_rounds.max(session.rounds_in(Phase::Setup));
            stats.triples_generated += session.triples_generated();
            stats.triples_consumed += session.triples_consumed();
        }
        stats.circuit_rounds += level_rounds;
    }
    Ok((outputs, stats))
}

/// Output quorums open their messages and send them to every party; each
/// party keeps, per quorum, what a strict majority of positions reported.
/// Returns the output, the keys left on the real output wires and the
/// number of rounds spent.
fn output_propagation(
    engine: &Engine,
    circuit: &ShuffleCircuit,
    quorums: &[Quorum],
    outputs: &[[Option<Pair>; 2]],
    n: usize,
) -> Result<(ProtocolOutput, Vec<u64>, u64)> {
    let f = *engine.field();
    let adversary = engine.adversary();
    let mut sorted_keys = Vec::with_capacity(n);
    let mut per_party_view: Vec<Vec<Option<Vec<Fe>>>> = vec![Vec::with_capacity(outputs.len()); n];
    let mut open_rounds = 0;
    for (pair, slots) in outputs.iter().enumerate() {
        let q = &quorums[circuit.output_quorums()[pair]];
        let real: Vec<&Pair> = slots
            .iter()
            .enumerate()
            .filter(|(k, _)| 2 * pair + k < n)
            .map(|(_, s)| s.as_ref().expect("output wire delivered"))
            .collect();
        for (key, _) in &real {
            sorted_keys.push(engine.peek(key)?.value());
        }
        let mut session = engine.session(q, Context::Output(pair));
        session.set_phase(Phase::Output);
        let payloads: Vec<&SharedValue> = real.iter().map(|(_, y)| y).collect();
        let opened = session.open_many(&payloads).map_err(|e| match e {
            Error::Abort { context, reason } => Error::Abort { context: format!("output {context}"), reason },
            other => other,
        })?;
        open_rounds = open_rounds.max(session.rounds_in(Phase::Output));

        let mut adv = Stream::Adversary { ctx: Context::Output(pair) }.rng(engine.seed());
        let mut reports: Vec<Vec<Vec<Fe>>> = vec![Vec::with_capacity(q.size()); n];
        {
            let mut meter = engine.meter();
            for pos in 0..q.size() {
                let honest = q.honest[pos];
                for (to, inbox) in reports.iter_mut().enumerate() {
                    let report: Option<Vec<Fe>> = opened
                        .iter()
                        .map(|&v| adversary.hook(&f, honest, Action::Report, v, &mut adv))
                        .collect();
                    if let Some(report) = report {
                        if q.members[pos] != to {
                            meter.charge_sends(q.members[pos], Phase::Output, report.len() as u64, 1);
                        }
                        inbox.push(report);
                    }
                }
            }
        }
        for (party, inbox) in reports.into_iter().enumerate() {
            per_party_view[party].push(majority(inbox, q.size()));
        }
    }
    let shuffled = per_party_view
        .iter()
        .find_map(|view| view.iter().map(Option::clone).collect::<Option<Vec<_>>>())
        .map(|lists| lists.into_iter().flatten().collect())
        .unwrap_or_default();
    Ok((ProtocolOutput { shuffled, per_party_view }, sorted_keys, open_rounds + 1))
}

/// The report sent by more than half of `positions`, if any.
fn majority(mut reports: Vec<Vec<Fe>>, positions: usize) -> Option<Vec<Fe>> {
    reports.sort_unstable();
    reports
        .chunk_by(|a, b| a == b)
        .find(|group| 2 * group.len() > positions)
        .map(|group| group[0].clone())
}

/// Number of unordered pairs of equal keys.
pub fn count_collisions(keys: &[u64]) -> u64 {
    let mut sorted = keys.to_vec();
    sorted.sort_unstable();
    sorted
        .chunk_by(|a, b| a == b)
        .map(|group| {
            let k = group.len() as u64;
            k * (k - 1) / 2
        })
        .sum()
}

/// Everything fixed before the first message: corruption, quorums, circuit.
struct Setup {
    field: PrimeField,
    dishonest: Vec<bool>,
    quorums: Vec<Quorum>,
    resamples: u64,
    circuit: ShuffleCircuit,
    engine: Engine,
}

fn setup(config: &RunConfig, resolved: &Resolved, prime: u64) -> Result<Setup> {
    let n = config.n;
    let field = PrimeField::new(prime)?;
    let mut dishonest = vec![false; n];
    let mut corruption = Stream::Corruption.rng(config.seed);
    for i in rand::seq::index::sample(&mut corruption, n, config.t.min(n)) {
        dishonest[i] = true;
    }
    let mut qrng = Stream::Quorums.rng(config.seed);
    let QuorumSet { mut quorums, resamples } =
        build_quorums(n, &dishonest, config.epsilon, resolved.quorum.size, &mut qrng)?;
    if let Some(count) = config.force_quorum_dishonesty {
        force_dishonesty(&mut quorums, &dishonest, count)?;
    }
    let circuit = assign_quorums(build_batcher(n)?, n)?;
    let engine = Engine::new(
        field,
        resolved.quorum,
        n,
        Adversary::new(config.adversary),
        config.compare_mode,
        config.seed,
        config.broadcast_overhead,
    )?;
    Ok(Setup { field, dishonest, quorums, resamples, circuit, engine })
}

/// Sort keys drawn by the key-generation phase alone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySample {
    /// Size `M` of the key domain `[0, M)`.
    pub domain: u64,
    pub keys: Vec<u64>,
    pub collisions: u64,
}

/// Runs setup and key generation only. With `domain = None` keys come from
/// the run's own domain. A power-of-two `domain` composes keys from
/// `log₂ M` random bits; a prime `domain` (above the quorum size) draws each
/// key as one random element of the field of that order.
pub fn sample_keys(config: &RunConfig, domain: Option<u64>) -> Result<KeySample> {
    let resolved = config.resolve()?;
    let size = resolved.quorum.size as u64;
    let (prime, shape, m) = match domain {
        None => (resolved.prime, KeyShape::Bits(resolved.key_bits), resolved.key_domain()),
        Some(0) => return Err(Error::config("key domain must be nonempty")),
        Some(m) if m.is_power_of_two() => {
            let bits = m.trailing_zeros();
            let floor = (4 * m).max(size + 1);
            let prime = if bits <= resolved.key_bits {
                resolved.prime
            } else {
                crate::field::next_prime(floor).ok_or_else(|| Error::config(format!("no prime above {floor}")))?
            };
            (prime, KeyShape::Bits(bits), m)
        }
        Some(m) if crate::field::is_prime(m) && m > size && m < MAX_MODULUS => (m, KeyShape::Field, m),
        Some(m) => {
            return Err(Error::config(format!(
                "key domain {m} must be a power of two or a prime above the quorum size {size}"
            )))
        }
    };
    let Setup { field, quorums, circuit, engine, .. } = setup(config, &resolved, prime)?;
    let sentinel = field.elem(m.min(prime - 1));
    let (sharings, _, _) = key_generation(&engine, &circuit, &quorums, config.n, shape, sentinel)?;
    let mut keys = Vec::with_capacity(config.n);
    for (pair, ks) in sharings.iter().enumerate() {
        for (k, key) in ks.iter().enumerate() {
            if 2 * pair + k < config.n {
                keys.push(engine.peek(key)?.value());
            }
        }
    }
    let collisions = count_collisions(&keys);
    Ok(KeySample { domain: m, keys, collisions })
}

/// Runs the whole protocol. Configuration problems are errors; a failed
/// opening inside the run is reported through [`Outcome::Abort`].
pub fn run_protocol(config: &RunConfig) -> Result<RunResult> {
    let resolved = config.resolve()?;
    let n = config.n;
    let size = resolved.quorum.size;
    let Setup { field, dishonest, quorums, resamples, circuit, engine } = setup(config, &resolved, resolved.prime)?;
    let inputs = config.inputs();
    let sentinel = field.elem(resolved.key_domain());
    let dishonest_ids: Vec<usize> = (0..n).filter(|&i| dishonest[i]).collect();

    let mut per_phase_rounds: BTreeMap<Phase, u64> = Phase::ALL.iter().map(|&p| (p, 0)).collect();
    let mut abort = None;
    let mut keys = Vec::new();
    let mut sorted_keys = Vec::new();
    let mut output = None;
    let mut faults = Vec::new();
    let mut circuit_stats = None;

    let body = (|| -> Result<()> {
        let (dealt, input_faults, input_rounds) =
            input_sharing(&engine, &circuit, &quorums, &dishonest, &inputs)?;
        faults = input_faults;
        per_phase_rounds.insert(Phase::Input, input_rounds);
        let shape = if config.rigged_keys { KeyShape::Rigged } else { KeyShape::Bits(resolved.key_bits) };
        let (key_sharings, keygen_rounds, keygen_setup) =
            key_generation(&engine, &circuit, &quorums, n, shape, sentinel)?;
        per_phase_rounds.insert(Phase::GenRand, keygen_rounds);
        for (pair, ks) in key_sharings.iter().enumerate() {
            for (k, key) in ks.iter().enumerate() {
                if 2 * pair + k < n {
                    keys.push(engine.peek(key)?.value());
                }
            }
        }
        let pairs: Vec<[Pair; 2]> = dealt
            .into_iter()
            .zip(key_sharings)
            .map(|([x0, x1], [r0, r1])| [(r0, x0.expect("dealt")), (r1, x1.expect("dealt"))])
            .collect();
        let d = resolved.quorum.degree;
        let padding = (constant_sharing(size, d, 0, sentinel), constant_sharing(size, d, 0, Fe::ZERO));
        let (outs, stats) = evaluate_circuit(&engine, &circuit, &quorums, pairs, padding)?;
        per_phase_rounds.insert(Phase::Setup, stats.setup_rounds.max(keygen_setup));
        per_phase_rounds.insert(Phase::Gate, stats.circuit_rounds);
        circuit_stats = Some(stats);
        let (out, sk, output_rounds) = output_propagation(&engine, &circuit, &quorums, &outs, n)?;
        per_phase_rounds.insert(Phase::Output, output_rounds);
        output = Some(out);
        sorted_keys = sk;
        Ok(())
    })();
    match body {
        Ok(()) => {}
        Err(Error::Abort { context, reason }) => abort = Some(format!("{context}: {reason}")),
        Err(e) => return Err(e),
    }

    let honest_agreement = output.as_ref().is_some_and(|o: &ProtocolOutput| {
        let mut views = (0..n).filter(|&i| !dishonest[i]).map(|i| &o.per_party_view[i]);
        match views.next() {
            Some(first) => views.all(|v| v == first) && first.iter().all(Option::is_some),
            None => true,
        }
    });

    let collisions = count_collisions(&keys);

    let stats = circuit_stats.unwrap_or(CircuitStats {
        circuit_rounds: 0,
        setup_rounds: 0,
        gate_rounds: 0,
        triples_generated: 0,
        triples_consumed: 0,
    });
    // The circuit's online rounds are booked under the gate phase; resharing
    // rounds are part of each gate's count.
    let mut meter = engine.meter();
    let total_rounds: u64 = per_phase_rounds.values().sum();
    let already = meter.rounds();
    meter.advance_rounds(total_rounds.saturating_sub(already));
    assert!(meter.is_conserved(), "traffic accounting lost bits");
    let outcome = if abort.is_some() {
        Outcome::Abort
    } else if !faults.is_empty() {
        Outcome::InputFault
    } else {
        Outcome::Ok
    };
    let metrics = RunMetrics {
        rounds: meter.rounds(),
        total_bits: meter.total_bits(),
        per_party_bits: meter.per_party_bits().to_vec(),
        per_phase_bits: meter.per_phase_bits().clone(),
        envelopes: meter.envelopes(),
        collisions,
        resamples,
        outcome,
        per_phase_rounds,
        depth: circuit.depth(),
        gate_rounds: stats.gate_rounds,
        circuit_rounds: stats.circuit_rounds,
        flagged_parties: engine.flagged(),
        triples_generated: stats.triples_generated,
        triples_consumed: stats.triples_consumed,
    };
    drop(meter);
    Ok(RunResult {
        resolved,
        output,
        metrics,
        keys,
        sorted_keys,
        dishonest: dishonest_ids,
        input_faults: faults,
        abort,
        honest_agreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize, t: usize, adversary: AdversaryMode, seed: u64) -> RunConfig {
        RunConfig { n, t, adversary, seed, ..RunConfig::default() }
    }

    #[test]
    fn quorum_sizes_round_up_to_six() {
        assert_eq!(default_quorum_size(8, 3), 12);
        assert_eq!(default_quorum_size(32, 3), 18);
        assert_eq!(default_quorum_size(64, 3), 18);
        assert_eq!(default_quorum_size(2, 3), 6);
    }

    #[test]
    fn fault_bound_is_strict() {
        assert_eq!(max_faults(64, 0.01), 10);
        assert_eq!(max_faults(6, 0.01), 0);
        assert!(cfg(64, 10, AdversaryMode::None, 0).resolve().is_ok());
        assert!(matches!(cfg(64, 11, AdversaryMode::None, 0).resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn bad_primes_are_config_errors() {
        for p in [4u64, 15, 101, (1 << 63) + 1] {
            let c = RunConfig { n: 8, prime: Some(p), ..RunConfig::default() };
            assert!(matches!(c.resolve(), Err(Error::Config(_))), "{p}");
        }
    }

    #[test]
    fn victims_fill_the_remaining_budget() {
        let q = Quorum::new(0, vec![0, 1, 2, 3, 4, 5], vec![false, true, true, true, true, true]);
        assert_eq!(q.victims(2), vec![false, true, false, false, false, false]);
        assert_eq!(q.victims(1), vec![false; 6]);
    }

    #[test]
    fn sampled_quorums_are_good() {
        let mut dishonest = vec![false; 64];
        for d in dishonest.iter_mut().take(10) {
            *d = true;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set = build_quorums(64, &dishonest, 0.01, 18, &mut rng).unwrap();
        assert_eq!(set.quorums.len(), 64);
        assert!(set.quorums.iter().all(|q| q.size() == 18 && q.dishonest_count() <= 2));
    }

    #[test]
    fn majority_needs_more_than_half() {
        let a = vec![Fe::ONE];
        let b = vec![Fe::ZERO];
        assert_eq!(majority(vec![a.clone(), a.clone(), b.clone()], 3), Some(a.clone()));
        assert_eq!(majority(vec![a.clone(), b.clone()], 4), None);
        assert_eq!(majority(vec![a.clone(), a.clone(), b.clone(), b], 4), None);
    }

    #[test]
    fn honest_run_delivers_a_permutation() {
        for mode in [CompareMode::Real, CompareMode::Oracle] {
            let c = RunConfig { n: 8, compare_mode: mode, seed: 3, ..RunConfig::default() };
            let r = run_protocol(&c).unwrap();
            assert_eq!(r.metrics.outcome, Outcome::Ok);
            let mut got: Vec<u64> = r.output.as_ref().unwrap().shuffled.iter().map(|x| x.value()).collect();
            got.sort_unstable();
            assert_eq!(got, (1..=8).collect::<Vec<_>>());
            assert!(r.honest_agreement);
            assert!(r.sorted_keys.windows(2).all(|w| w[0] <= w[1]));
            assert!(r.metrics.flagged_parties.is_empty());
        }
    }

    #[test]
    fn odd_party_count_pads_and_filters() {
        let c = RunConfig { n: 5, compare_mode: CompareMode::Oracle, seed: 9, ..RunConfig::default() };
        let r = run_protocol(&c).unwrap();
        let mut got: Vec<u64> = r.output.unwrap().shuffled.iter().map(|x| x.value()).collect();
        got.sort_unstable();
        assert_eq!(got, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn active_adversaries_do_not_change_the_output() {
        let honest = run_protocol(&RunConfig { n: 32, t: 4, seed: 5, compare_mode: CompareMode::Oracle, ..RunConfig::default() })
            .unwrap();
        for mode in AdversaryMode::ACTIVE {
            let c = RunConfig { n: 32, t: 4, seed: 5, adversary: mode, compare_mode: CompareMode::Oracle, ..RunConfig::default() };
            let r = run_protocol(&c).unwrap();
            assert_eq!(r.metrics.outcome, Outcome::Ok, "{mode:?}");
            assert!(r.honest_agreement, "{mode:?}");
            assert_eq!(r.output, honest.output, "{mode:?}");
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let c = cfg(16, 2, AdversaryMode::CorruptOpenings, 11);
        let a = run_protocol(&c).unwrap();
        let b = run_protocol(&c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn collisions_count_equal_pairs() {
        assert_eq!(count_collisions(&[]), 0);
        assert_eq!(count_collisions(&[1, 2, 3]), 0);
        assert_eq!(count_collisions(&[4, 1, 4, 4, 1]), 4);
    }

    #[test]
    fn key_samples_respect_the_domain() {
        let c = RunConfig { n: 10, seed: 4, ..RunConfig::default() };
        let own = sample_keys(&c, None).unwrap();
        assert_eq!(own.domain, c.resolve().unwrap().key_domain());
        for (domain, bound) in [(Some(1021), 1021), (Some(64), 64), (Some(1), 1)] {
            let s = sample_keys(&c, domain).unwrap();
            assert_eq!(s.domain, bound);
            assert_eq!(s.keys.len(), 10);
            assert!(s.keys.iter().all(|&k| k < bound));
        }
        assert_eq!(sample_keys(&c, Some(1)).unwrap().collisions, 45);
        assert!(matches!(sample_keys(&c, Some(1000)), Err(Error::Config(_))));
        assert!(matches!(sample_keys(&c, Some(11)), Err(Error::Config(_))));
    }

    #[test]
    fn sampled_keys_match_the_full_run() {
        let c = RunConfig { n: 6, seed: 21, compare_mode: CompareMode::Oracle, ..RunConfig::default() };
        assert_eq!(sample_keys(&c, None).unwrap().keys, run_protocol(&c).unwrap().keys);
    }

    #[test]
    fn overloaded_quorums_abort() {
        let c = RunConfig {
            n: 64,
            t: 10,
            seed: 2,
            adversary: AdversaryMode::CorruptOpenings,
            compare_mode: CompareMode::Oracle,
            force_quorum_dishonesty: Some(9),
            ..RunConfig::default()
        };
        let r = run_protocol(&c).unwrap();
        assert_eq!(r.metrics.outcome, Outcome::Abort);
        assert!(r.abort.is_some());
    }
}
