//! Deterministic synchronous network: envelopes, round delivery, traffic
//! accounting, the static adversary's tampering rules, and seeded streams.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::field::{Fe, PrimeField};

/// Accounting bucket for traffic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Preprocessing: triples, random bits and comparison masks.
    Setup,
    Input,
    /// Sort-key generation.
    GenRand,
    /// Online gate work: comparison openings and the switching multiplications.
    Gate,
    /// Moving sharings between quorums.
    Reshare,
    Output,
}

impl Phase {
    pub const ALL: [Phase; 6] =
        [Phase::Setup, Phase::Input, Phase::GenRand, Phase::Gate, Phase::Reshare, Phase::Output];
}

/// Label carried by an envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Setup,
    Input,
    GenRand,
    Gate { level: usize, id: usize },
    Reshare,
    Output,
}

impl Tag {
    pub fn phase(self) -> Phase {
        match self {
            Tag::Setup => Phase::Setup,
            Tag::Input => Phase::Input,
            Tag::GenRand => Phase::GenRand,
            Tag::Gate { .. } => Phase::Gate,
            Tag::Reshare => Phase::Reshare,
            Tag::Output => Phase::Output,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Setup => write!(f, "setup"),
            Tag::Input => write!(f, "input"),
            Tag::GenRand => write!(f, "genrand"),
            Tag::Gate { level, id } => write!(f, "gate:{{{level},{id}}}"),
            Tag::Reshare => write!(f, "reshare"),
            Tag::Output => write!(f, "output"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub round: u64,
    pub from: usize,
    pub to: usize,
    pub payload: Vec<Fe>,
    pub payload_bits: u64,
    pub tag: Tag,
    /// Sent through the in-quorum broadcast primitive.
    pub broadcast: bool,
}

/// Traffic and round counters for one run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Meter {
    bits_per_element: u64,
    broadcast_overhead: u64,
    rounds: u64,
    total_bits: u64,
    envelopes: u64,
    per_party_bits: Vec<u64>,
    per_phase_bits: BTreeMap<Phase, u64>,
}

impl Meter {
    pub fn new(field: &PrimeField, parties: usize, broadcast_overhead: u64) -> Self {
        Meter {
            bits_per_element: field.bits() as u64,
            broadcast_overhead,
            rounds: 0,
            total_bits: 0,
            envelopes: 0,
            per_party_bits: vec![0; parties],
            per_phase_bits: Phase::ALL.iter().map(|&p| (p, 0)).collect(),
        }
    }

    pub fn bits_per_element(&self) -> u64 {
        self.bits_per_element
    }

    fn charge_bits(&mut self, from: usize, phase: Phase, bits: u64, envelopes: u64) {
        self.total_bits += bits;
        self.envelopes += envelopes;
        self.per_party_bits[from] += bits;
        *self.per_phase_bits.entry(phase).or_default() += bits;
    }

    /// `copies` point-to-point messages of `elements` field elements each.
    pub fn charge_sends(&mut self, from: usize, phase: Phase, elements: u64, copies: u64) {
        self.charge_bits(from, phase, elements * copies * self.bits_per_element, copies);
    }

    /// An in-quorum broadcast to `receivers` members, priced at the
    /// configured overhead over plain fan-out.
    pub fn charge_broadcast(&mut self, from: usize, phase: Phase, elements: u64, receivers: u64) {
        let bits = elements * receivers * self.bits_per_element * self.broadcast_overhead;
        self.charge_bits(from, phase, bits, receivers);
    }

    pub fn advance_rounds(&mut self, rounds: u64) {
        self.rounds += rounds;
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn total_bits(&self) -> u64 {
        self.total_bits
    }

    pub fn envelopes(&self) -> u64 {
        self.envelopes
    }

    pub fn per_party_bits(&self) -> &[u64] {
        &self.per_party_bits
    }

    pub fn per_phase_bits(&self) -> &BTreeMap<Phase, u64> {
        &self.per_phase_bits
    }

    /// Every counted bit is attributed to exactly one sender and one phase.
    pub fn is_conserved(&self) -> bool {
        self.per_party_bits.iter().sum::<u64>() == self.total_bits
            && self.per_phase_bits.values().sum::<u64>() == self.total_bits
    }
}

/// Messages sent during the current round, delivered together at its end.
#[derive(Debug, Default)]
pub struct RoundQueue {
    round: u64,
    pending: Vec<Envelope>,
}

impl RoundQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn send(&mut self, meter: &Meter, from: usize, to: usize, payload: Vec<Fe>, tag: Tag) {
        let payload_bits = payload.len() as u64 * meter.bits_per_element();
        self.pending.push(Envelope {
            round: self.round,
            from,
            to,
            payload,
            payload_bits,
            tag,
            broadcast: false,
        });
    }

    /// Sends the same payload to every other position of a quorum. The
    /// sender cannot equivocate: all receivers get an identical copy.
    pub fn broadcast_in_quorum(
        &mut self,
        meter: &Meter,
        sender_position: usize,
        members: &[usize],
        payload: &[Fe],
        tag: Tag,
    ) {
        let from = members[sender_position];
        for (pos, &to) in members.iter().enumerate() {
            if pos != sender_position {
                self.send(meter, from, to, payload.to_vec(), tag);
                if let Some(env) = self.pending.last_mut() {
                    env.broadcast = true;
                }
            }
        }
    }

    /// Closes the round: charges every envelope, advances the round counter
    /// and returns the envelopes sorted by `(from, to, tag)`.
    pub fn deliver_round(&mut self, meter: &mut Meter) -> Vec<Envelope> {
        let mut out = std::mem::take(&mut self.pending);
        out.sort_by_key(|a| (a.from, a.to, a.tag));
        for env in &out {
            let overhead = if env.broadcast { meter.broadcast_overhead } else { 1 };
            meter.charge_bits(env.from, env.tag.phase(), env.payload_bits * overhead, 1);
        }
        self.round += 1;
        meter.advance_rounds(1);
        out
    }
}

/// Behavior of the statically corrupted parties.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryMode {
    /// Corrupted parties follow the protocol.
    #[default]
    None,
    /// Corrupted parties send uniform garbage whenever they reveal a share.
    CorruptOpenings,
    /// Corrupted dealers hand inconsistent sub-shares to honest parties.
    GarbageDealing,
    /// Corrupted parties withhold every message they are free to withhold.
    Silent,
}

impl AdversaryMode {
    pub const ACTIVE: [AdversaryMode; 3] =
        [AdversaryMode::CorruptOpenings, AdversaryMode::GarbageDealing, AdversaryMode::Silent];

    pub fn name(self) -> &'static str {
        match self {
            AdversaryMode::None => "none",
            AdversaryMode::CorruptOpenings => "corrupt-openings",
            AdversaryMode::GarbageDealing => "garbage-dealing",
            AdversaryMode::Silent => "silent",
        }
    }
}

impl fmt::Display for AdversaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdversaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        [AdversaryMode::None]
            .into_iter()
            .chain(AdversaryMode::ACTIVE)
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown adversary mode {s:?}")))
    }
}

/// What kind of dealing a sub-share belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DealKind {
    Input,
    GenRand,
    Renew,
}

/// A value a party is about to put on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    /// Revealing a share during an opening inside the quorum.
    Open,
    /// A sub-share of a dealing; `victim` marks receivers the adversary targets.
    Deal { kind: DealKind, victim: bool },
    /// The secret a source member re-deals when a sharing moves to another quorum.
    Reshare,
    /// One element of an output report sent to some party.
    Report,
}

/// The adversary's tampering rule. Honest senders are never touched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Adversary {
    pub mode: AdversaryMode,
}

impl Adversary {
    pub fn new(mode: AdversaryMode) -> Self {
        Adversary { mode }
    }

    /// The value actually sent in place of `value`, or `None` when nothing is sent.
    pub fn hook<R: Rng + ?Sized>(
        &self,
        field: &PrimeField,
        sender_honest: bool,
        action: Action,
        value: Fe,
        rng: &mut R,
    ) -> Option<Fe> {
        if sender_honest {
            return Some(value);
        }
        let garbage = |rng: &mut R| field.random(rng);
        match (self.mode, action) {
            (AdversaryMode::None, _) => Some(value),
            (AdversaryMode::CorruptOpenings, Action::Open | Action::Report) => Some(garbage(rng)),
            (AdversaryMode::CorruptOpenings, _) => Some(value),
            (AdversaryMode::GarbageDealing, Action::Deal { victim: true, .. }) => Some(garbage(rng)),
            (AdversaryMode::GarbageDealing, Action::Reshare) => {
                let offset = field.elem(rng.random_range(1..field.modulus()));
                Some(field.add(value, offset))
            }
            (AdversaryMode::GarbageDealing, _) => Some(value),
            (AdversaryMode::Silent, Action::Deal { kind: DealKind::Input | DealKind::GenRand, .. }) => {
                Some(value)
            }
            (AdversaryMode::Silent, _) => None,
        }
    }

    /// Whether the sender withholds this action entirely.
    pub fn withholds(&self, sender_honest: bool, action: Action) -> bool {
        !sender_honest
            && self.mode == AdversaryMode::Silent
            && !matches!(action, Action::Deal { kind: DealKind::Input | DealKind::GenRand, .. })
    }
}

/// Execution context a random stream belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Context {
    /// Input canonicalization in input quorum `j`.
    Input(usize),
    /// Sort-key generation in input quorum `j`.
    KeyGen(usize),
    /// Work of comparator gate `g`, including its preprocessing.
    Gate(usize),
    /// Output quorum for pair `o`.
    Output(usize),
}

impl Context {
    fn words(self) -> [u64; 2] {
        match self {
            Context::Input(j) => [1, j as u64],
            Context::KeyGen(j) => [2, j as u64],
            Context::Gate(g) => [3, g as u64],
            Context::Output(o) => [4, o as u64],
        }
    }
}

/// Independent random streams derived from one root seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Which parties the adversary corrupts.
    Corruption,
    /// Quorum membership sampling.
    Quorums,
    /// Party `party`'s input dealing.
    Dealer { party: usize },
    /// Honest randomness of whoever sits at `position` within `ctx`.
    Position { ctx: Context, position: usize },
    /// Garbage drawn by corrupted parties within `ctx`.
    Adversary { ctx: Context },
    /// The trusted comparison functionality within `ctx`.
    Oracle { ctx: Context },
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl Stream {
    fn words(self) -> Vec<u64> {
        match self {
            Stream::Corruption => vec![1],
            Stream::Quorums => vec![2],
            Stream::Dealer { party } => vec![3, party as u64],
            Stream::Position { ctx, position } => {
                let [a, b] = ctx.words();
                vec![4, a, b, position as u64]
            }
            Stream::Adversary { ctx } => {
                let [a, b] = ctx.words();
                vec![5, a, b]
            }
            Stream::Oracle { ctx } => {
                let [a, b] = ctx.words();
                vec![6, a, b]
            }
        }
    }

    /// The generator for this stream under `root`. Distinct streams are
    /// independent, so what one party draws never shifts another's draws.
    pub fn rng(self, root: u64) -> ChaCha8Rng {
        let mut h = splitmix64(root);
        for w in self.words() {
            h = splitmix64(h ^ splitmix64(w));
        }
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            h = splitmix64(h);
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Ok,
    /// Some input dealing could not be decoded and was replaced by zero.
    InputFault,
    /// A robust opening failed inside a gate.
    Abort,
}

/// Measured costs and outcome of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub rounds: u64,
    pub total_bits: u64,
    pub per_party_bits: Vec<u64>,
    pub per_phase_bits: BTreeMap<Phase, u64>,
    pub envelopes: u64,
    pub collisions: u64,
    pub resamples: u64,
    pub outcome: Outcome,
    /// Rounds spent in each phase.
    pub per_phase_rounds: BTreeMap<Phase, u64>,
    /// Batcher depth of the evaluated circuit.
    pub depth: usize,
    /// Online rounds of one comparator gate, comparison through resharing.
    pub gate_rounds: u64,
    /// Online rounds of the whole circuit, summed over levels.
    pub circuit_rounds: u64,
    /// Parties caught sending values inconsistent with a decoded sharing.
    pub flagged_parties: Vec<usize>,
    pub triples_generated: u64,
    pub triples_consumed: u64,
}

impl RunMetrics {
    /// Per-party bits excluding the output phase.
    pub fn shuffle_bits(&self) -> u64 {
        self.total_bits - self.per_phase_bits.get(&Phase::Output).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> PrimeField {
        PrimeField::new(65521).unwrap()
    }

    #[test]
    fn two_party_exchange_accounting() {
        let f = field();
        let mut meter = Meter::new(&f, 2, 1);
        let mut q = RoundQueue::new();
        q.send(&meter, 0, 1, vec![f.elem(3)], Tag::Setup);
        q.send(&meter, 1, 0, vec![f.elem(4)], Tag::Setup);
        let out = q.deliver_round(&mut meter);
        assert_eq!(out.len(), 2);
        assert_eq!(meter.total_bits(), 2 * f.bits() as u64);
        assert_eq!(meter.rounds(), 1);
        assert!(meter.is_conserved());
    }

    #[test]
    fn empty_round_still_advances() {
        let f = field();
        let mut meter = Meter::new(&f, 1, 1);
        let mut q = RoundQueue::new();
        assert!(q.deliver_round(&mut meter).is_empty());
        assert_eq!((q.round(), meter.rounds(), meter.total_bits()), (1, 1, 0));
    }

    #[test]
    fn delivery_order_is_normalized() {
        let f = field();
        let mut meter = Meter::new(&f, 3, 1);
        let mut q = RoundQueue::new();
        q.send(&meter, 2, 0, vec![], Tag::Output);
        q.send(&meter, 0, 2, vec![], Tag::Output);
        q.send(&meter, 0, 1, vec![], Tag::Reshare);
        let order: Vec<_> = q.deliver_round(&mut meter).iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(order, vec![(0, 1), (0, 2), (2, 0)]);
    }

    #[test]
    fn broadcast_in_quorum_accounting() {
        let f = field();
        let members: Vec<usize> = (0..12).collect();
        let mut meter = Meter::new(&f, 12, 1);
        let mut q = RoundQueue::new();
        q.broadcast_in_quorum(&meter, 3, &members, &[f.elem(9)], Tag::Setup);
        let out = q.deliver_round(&mut meter);
        assert_eq!(out.len(), 11);
        assert!(out.iter().all(|e| e.payload == vec![f.elem(9)] && e.from == 3));
        assert_eq!(meter.total_bits(), 11 * f.bits() as u64);

        let mut bulk = Meter::new(&f, 12, 1);
        bulk.charge_broadcast(3, Phase::Setup, 1, 11);
        assert_eq!(bulk.total_bits(), meter.total_bits());
        assert_eq!(bulk.envelopes(), meter.envelopes());

        let mut heavy = Meter::new(&f, 12, 3);
        heavy.charge_broadcast(3, Phase::Setup, 1, 11);
        assert_eq!(heavy.total_bits(), 3 * 11 * f.bits() as u64);
    }

    #[test]
    fn hook_rules() {
        let f = field();
        let mut rng = Stream::Corruption.rng(1);
        let v = f.elem(42);
        let deal = Action::Deal { kind: DealKind::GenRand, victim: true };
        for mode in [AdversaryMode::None].into_iter().chain(AdversaryMode::ACTIVE) {
            let adv = Adversary::new(mode);
            for action in [Action::Open, deal, Action::Reshare, Action::Report] {
                assert_eq!(adv.hook(&f, true, action, v, &mut rng), Some(v));
            }
        }
        let none = Adversary::new(AdversaryMode::None);
        assert_eq!(none.hook(&f, false, Action::Open, v, &mut rng), Some(v));

        let silent = Adversary::new(AdversaryMode::Silent);
        assert_eq!(silent.hook(&f, false, Action::Open, v, &mut rng), None);
        assert_eq!(silent.hook(&f, false, deal, v, &mut rng), Some(v));
        assert!(silent.withholds(false, Action::Deal { kind: DealKind::Renew, victim: false }));

        let garbage = Adversary::new(AdversaryMode::GarbageDealing);
        assert_ne!(garbage.hook(&f, false, Action::Reshare, v, &mut rng), Some(v));
        assert_eq!(garbage.hook(&f, false, Action::Open, v, &mut rng), Some(v));
    }

    #[test]
    fn modes_parse_and_serialize() {
        for mode in AdversaryMode::ACTIVE {
            assert_eq!(mode.name().parse::<AdversaryMode>().unwrap(), mode);
            assert_eq!(serde_json::to_string(&mode).unwrap(), format!("\"{}\"", mode.name()));
        }
        assert!("byzantine".parse::<AdversaryMode>().is_err());
        assert_eq!(serde_json::to_string(&Phase::GenRand).unwrap(), "\"genrand\"");
        assert_eq!(Tag::Gate { level: 2, id: 7 }.to_string(), "gate:{2,7}");
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a = Stream::Position { ctx: Context::Gate(3), position: 1 };
        let b = Stream::Position { ctx: Context::Gate(3), position: 2 };
        let c = Stream::Position { ctx: Context::KeyGen(3), position: 1 };
        let draw = |s: Stream, root| s.rng(root).random::<u64>();
        assert_eq!(draw(a, 5), draw(a, 5));
        assert_ne!(draw(a, 5), draw(b, 5));
        assert_ne!(draw(a, 5), draw(c, 5));
        assert_ne!(draw(a, 5), draw(a, 6));
    }
}
