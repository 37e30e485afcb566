//! Quorum-local MPC: joint randomness, Beaver multiplication, random bits,
//! comparison and the comparator gate, plus moving sharings between quorums.
//!
//! An [`Engine`] holds the run-wide pieces (field, decoding tables, adversary,
//! traffic meter). A [`QuorumSession`] is one quorum working in one context,
//! such as a single comparator gate; it owns the per-position random streams
//! and counts the rounds it spends.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Fe, PrimeField};
use crate::protocol::Quorum;
use crate::sharing::{decode_points, lagrange_weights, CodeParams, SharedValue};
use crate::simnet::{Action, Adversary, Context, DealKind, Meter, Phase, Stream};

/// Sizes derived from the quorum size `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuorumParams {
    /// `N`, a positive multiple of 6.
    pub size: usize,
    /// `N/3`, the degree of every working sharing.
    pub degree: usize,
    /// `N/6`, the degree of fresh triple components.
    pub triple_degree: usize,
    /// Errors a degree-`N/3` opening corrects.
    pub correctable: usize,
}

impl QuorumParams {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || !size.is_multiple_of(6) {
            return Err(Error::config(format!("quorum size {size} is not a positive multiple of 6")));
        }
        let degree = size / 3;
        let triple_degree = size / 6;
        let correctable = crate::sharing::correctable(size, degree);
        // Openings must survive N/6 errors: N >= N/3 + 2·N/6 + 1.
        debug_assert!(size > degree + 2 * triple_degree);
        Ok(QuorumParams { size, degree, triple_degree, correctable })
    }

    /// Most dishonest positions a good quorum may contain.
    pub fn max_dishonest(&self) -> usize {
        self.triple_degree - 1
    }
}

/// How comparisons are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMode {
    /// Bitwise comparison from random bits and Beaver multiplications.
    #[default]
    Real,
    /// A trusted functionality hands out a fresh sharing of the result.
    Oracle,
}

impl fmt::Display for CompareMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompareMode::Real => "real",
            CompareMode::Oracle => "oracle",
        })
    }
}

impl FromStr for CompareMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(CompareMode::Real),
            "oracle" => Ok(CompareMode::Oracle),
            _ => Err(Error::config(format!("unknown compare mode {s:?}"))),
        }
    }
}

/// A multiplication triple. Not `Clone`: multiplying consumes it.
#[derive(Debug, PartialEq, Eq)]
pub struct BeaverTriple {
    u: SharedValue,
    v: SharedValue,
    w: SharedValue,
}

impl BeaverTriple {
    pub fn u(&self) -> &SharedValue {
        &self.u
    }

    pub fn v(&self) -> &SharedValue {
        &self.v
    }

    pub fn w(&self) -> &SharedValue {
        &self.w
    }
}

/// A sharing whose secret is 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedBit(SharedValue);

impl SharedBit {
    pub fn value(&self) -> &SharedValue {
        &self.0
    }

    pub fn into_value(self) -> SharedValue {
        self.0
    }
}

/// A uniform secret `R ∈ [0, p)` together with sharings of its bits.
#[derive(Clone, Debug)]
pub struct Mask {
    /// Least significant bit first, `⌈log₂ p⌉` of them.
    pub bits: Vec<SharedBit>,
    pub value: SharedValue,
}

/// Everything a comparator gate consumes online, produced ahead of time.
#[derive(Debug)]
pub struct GatePrep {
    pub mask: Option<Mask>,
    pub triples: Vec<BeaverTriple>,
}

/// A key sharing and its payload sharing travelling together.
pub type Pair = (SharedValue, SharedValue);

/// Run-wide MPC state shared by every quorum session.
#[derive(Debug)]
pub struct Engine {
    field: PrimeField,
    params: QuorumParams,
    code: CodeParams,
    adversary: Adversary,
    compare_mode: CompareMode,
    seed: u64,
    meter: RefCell<Meter>,
    // Party -> number of times it sent an inconsistent or missing value.
    flagged: RefCell<BTreeMap<usize, u64>>,
}

impl Engine {
    pub fn new(
        field: PrimeField,
        params: QuorumParams,
        parties: usize,
        adversary: Adversary,
        compare_mode: CompareMode,
        seed: u64,
        broadcast_overhead: u64,
    ) -> Result<Self> {
        let code = CodeParams::new(field, params.size, params.degree)
            .map_err(|e| Error::config(format!("quorum size {} over Z_{}: {e}", params.size, field.modulus())))?;
        Ok(Engine {
            field,
            params,
            code,
            adversary,
            compare_mode,
            seed,
            meter: RefCell::new(Meter::new(&field, parties, broadcast_overhead)),
            flagged: RefCell::new(BTreeMap::new()),
        })
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn params(&self) -> &QuorumParams {
        &self.params
    }

    pub fn code(&self) -> &CodeParams {
        &self.code
    }

    pub fn adversary(&self) -> Adversary {
        self.adversary
    }

    pub fn compare_mode(&self) -> CompareMode {
        self.compare_mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn meter(&self) -> std::cell::RefMut<'_, Meter> {
        self.meter.borrow_mut()
    }

    pub fn meter_snapshot(&self) -> Meter {
        self.meter.borrow().clone()
    }

    pub fn flagged(&self) -> Vec<usize> {
        self.flagged.borrow().keys().copied().collect()
    }

    pub(crate) fn flag(&self, party: usize) {
        *self.flagged.borrow_mut().entry(party).or_default() += 1;
    }

    pub fn session<'e>(&'e self, quorum: &'e Quorum, ctx: Context) -> QuorumSession<'e> {
        QuorumSession::new(self, quorum, ctx)
    }

    /// Plain decode without any traffic, used by the trusted comparison
    /// functionality and by test harnesses observing secrets.
    pub fn peek(&self, sv: &SharedValue) -> Result<Fe> {
        if sv.degree() == self.code.degree() && sv.len() == self.code.n() {
            Ok(self.code.decode(sv.values())?.secret)
        } else {
            Ok(decode_points(&self.field, &sv.points(), sv.degree())?.secret)
        }
    }

    /// Positions of `quorum` held by the most often flagged parties, leaving
    /// enough positions to interpolate from.
    fn suspects(&self, quorum: &Quorum) -> Vec<usize> {
        let flagged = self.flagged.borrow();
        let mut ranked: Vec<(u64, usize)> = (0..quorum.size())
            .filter_map(|i| flagged.get(&quorum.members[i]).map(|&c| (c, i)))
            .collect();
        ranked.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        ranked.truncate(quorum.size() - self.code.degree() - 1);
        ranked.into_iter().map(|(_, i)| i).collect()
    }

    /// Robust opening of several sharings inside `quorum`. Every member
    /// broadcasts its share of each word; the adversary may replace or
    /// withhold the shares of corrupted members, and a withheld share counts
    /// as zero. Members whose value disagrees with the decoded polynomial are
    /// flagged.
    fn open_words<R: Rng + ?Sized>(
        &self,
        quorum: &Quorum,
        words: &[&[Fe]],
        degree: usize,
        phase: Phase,
        adv: &mut R,
        context: &str,
    ) -> Result<Vec<Fe>> {
        let f = &self.field;
        let n = quorum.size();
        let mut received: Vec<Vec<Fe>> = vec![Vec::with_capacity(n); words.len()];
        let mut silent = Vec::new();
        {
            let mut meter = self.meter.borrow_mut();
            for pos in 0..n {
                let honest = quorum.honest[pos];
                let mut sent_any = false;
                for (word, out) in words.iter().zip(received.iter_mut()) {
                    match self.adversary.hook(f, honest, Action::Open, word[pos], adv) {
                        Some(v) => {
                            out.push(v);
                            sent_any = true;
                        }
                        None => out.push(Fe::ZERO),
                    }
                }
                if sent_any {
                    meter.charge_broadcast(quorum.members[pos], phase, words.len() as u64, n as u64 - 1);
                } else if !words.is_empty() {
                    silent.push(pos);
                }
            }
        }
        for &pos in &silent {
            self.flag(quorum.members[pos]);
        }
        let mut suspects = self.suspects(quorum);
        let mut secrets = Vec::with_capacity(words.len());
        for word in &received {
            let decoded = if degree == self.code.degree() {
                self.code.decode_avoiding(word, &suspects)
            } else {
                let pts: Vec<(usize, Fe)> = word.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect();
                decode_points(f, &pts, degree).map(|r| crate::sharing::Decoded {
                    secret: r.secret,
                    codeword: Vec::new(),
                    bad: r.disqualified.iter().map(|i| i - 1).collect(),
                })
            };
            let decoded = decoded.map_err(|e| Error::Abort {
                context: format!("{context} in quorum {}", quorum.id),
                reason: e.to_string(),
            })?;
            for &pos in &decoded.bad {
                self.flag(quorum.members[pos]);
            }
            if !decoded.bad.iter().all(|p| suspects.contains(p)) {
                suspects.retain(|p| !decoded.bad.contains(p));
                suspects.splice(0..0, decoded.bad.iter().copied());
                suspects.truncate(n - degree - 1);
            }
            secrets.push(decoded.secret);
        }
        Ok(secrets)
    }
}

/// One quorum's work within one context.
pub struct QuorumSession<'e> {
    engine: &'e Engine,
    quorum: &'e Quorum,
    ctx: Context,
    phase: Phase,
    rngs: Vec<ChaCha8Rng>,
    adv: ChaCha8Rng,
    oracle: ChaCha8Rng,
    victims: Vec<bool>,
    rounds: BTreeMap<Phase, u64>,
    triples_generated: u64,
    triples_consumed: u64,
}

impl<'e> QuorumSession<'e> {
    fn new(engine: &'e Engine, quorum: &'e Quorum, ctx: Context) -> Self {
        let seed = engine.seed;
        let rngs = (0..quorum.size())
            .map(|position| Stream::Position { ctx, position }.rng(seed))
            .collect();
        QuorumSession {
            engine,
            quorum,
            ctx,
            phase: Phase::Setup,
            rngs,
            adv: Stream::Adversary { ctx }.rng(seed),
            oracle: Stream::Oracle { ctx }.rng(seed),
            victims: quorum.victims(engine.params.correctable),
            rounds: BTreeMap::new(),
            triples_generated: 0,
            triples_consumed: 0,
        }
    }

    pub fn quorum(&self) -> &Quorum {
        self.quorum
    }

    pub fn context(&self) -> Context {
        self.ctx
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Rounds spent so far, by phase.
    pub fn rounds(&self) -> &BTreeMap<Phase, u64> {
        &self.rounds
    }

    pub fn rounds_in(&self, phase: Phase) -> u64 {
        self.rounds.get(&phase).copied().unwrap_or(0)
    }

    pub fn triples_generated(&self) -> u64 {
        self.triples_generated
    }

    pub fn triples_consumed(&self) -> u64 {
        self.triples_consumed
    }

    fn tick(&mut self, phase: Phase) {
        *self.rounds.entry(phase).or_default() += 1;
    }

    fn context_label(&self) -> String {
        format!("{:?}", self.ctx)
    }

    /// Every position deals `count` random polynomials of `degree`
    /// (constant term zero when `zero_constant`), and every position sums
    /// what it receives. Returns the summed share vectors.
    fn deal_joint(&mut self, count: usize, degree: usize, zero_constant: bool, kind: DealKind) -> Vec<Vec<Fe>> {
        let engine = self.engine;
        let f = engine.field;
        let n = self.quorum.size();
        let adversary = engine.adversary;
        let mut sums = vec![vec![Fe::ZERO; degree + 1]; count];
        let mut fixes: Vec<Vec<Fe>> = vec![vec![Fe::ZERO; n]; count];
        let mut coeffs = vec![Fe::ZERO; degree + 1];
        for pos in 0..n {
            let honest = self.quorum.honest[pos];
            let withheld = adversary.withholds(honest, Action::Deal { kind, victim: false });
            for (sum, fix) in sums.iter_mut().zip(fixes.iter_mut()) {
                let rng = &mut self.rngs[pos];
                for (k, c) in coeffs.iter_mut().enumerate() {
                    *c = if k == 0 && zero_constant { Fe::ZERO } else { f.random(rng) };
                }
                if withheld {
                    continue;
                }
                for (s, &c) in sum.iter_mut().zip(&coeffs) {
                    *s = f.add(*s, c);
                }
                if !honest {
                    for (j, slot) in fix.iter_mut().enumerate() {
                        let x = f.point(j);
                        let true_value = coeffs.iter().rev().fold(Fe::ZERO, |acc, &c| f.mul_add(acc, x, c));
                        let action = Action::Deal { kind, victim: self.victims[j] };
                        let sent = adversary.hook(&f, false, action, true_value, &mut self.adv);
                        let sent = sent.unwrap_or(Fe::ZERO);
                        *slot = f.add(*slot, f.sub(sent, true_value));
                    }
                }
            }
            if !withheld {
                engine.meter().charge_sends(self.quorum.members[pos], self.phase, count as u64, n as u64 - 1);
            }
        }
        sums.iter()
            .zip(&fixes)
            .map(|(sum, fix)| {
                (0..n)
                    .map(|j| {
                        let x = f.point(j);
                        let v = sum.iter().rev().fold(Fe::ZERO, |acc, &c| f.mul_add(acc, x, c));
                        f.add(v, fix[j])
                    })
                    .collect()
            })
            .collect()
    }

    /// Joint random sharings: every position deals a random secret and the
    /// sharings are summed, so the result is uniform if any dealer is honest.
    /// One round.
    pub fn gen_rand_many(&mut self, count: usize, degree: usize) -> Vec<SharedValue> {
        let words = self.deal_joint(count, degree, false, DealKind::GenRand);
        self.tick(self.phase);
        let q = self.quorum.id;
        words.into_iter().map(|w| SharedValue::new(w, degree, q)).collect()
    }

    pub fn gen_rand(&mut self, degree: usize) -> SharedValue {
        self.gen_rand_many(1, degree).pop().expect("one sharing")
    }

    /// Re-randomizes sharings by adding jointly dealt zero-constant
    /// polynomials of `new_degree`. One round.
    pub fn renew_many(&mut self, values: Vec<SharedValue>, new_degree: usize) -> Result<Vec<SharedValue>> {
        let n = self.quorum.size();
        if new_degree >= n {
            return Err(Error::invalid(format!("degree {new_degree} needs more than {n} parties")));
        }
        if let Some(bad) = values.iter().find(|sv| sv.degree() > new_degree) {
            return Err(Error::invalid(format!("renewal cannot lower degree {} to {new_degree}", bad.degree())));
        }
        let deltas = self.deal_joint(values.len(), new_degree, true, DealKind::Renew);
        self.tick(self.phase);
        let f = self.engine.field;
        Ok(values
            .into_iter()
            .zip(deltas)
            .map(|(sv, delta)| {
                let q = sv.quorum_id();
                let vals = sv.values().iter().zip(&delta).map(|(&a, &b)| f.add(a, b)).collect();
                SharedValue::new(vals, new_degree, q)
            })
            .collect())
    }

    /// Robustly opens sharings of the working degree. One round.
    pub fn open_many(&mut self, values: &[&SharedValue]) -> Result<Vec<Fe>> {
        let degree = values.first().map_or(self.engine.params.degree, |v| v.degree());
        if values.iter().any(|v| v.degree() != degree) {
            return Err(Error::invalid("openings in one round must share a degree"));
        }
        let words: Vec<&[Fe]> = values.iter().map(|v| v.values()).collect();
        let label = self.context_label();
        let out = self.engine.open_words(self.quorum, &words, degree, self.phase, &mut self.adv, &label)?;
        self.tick(self.phase);
        Ok(out)
    }

    pub fn open(&mut self, value: &SharedValue) -> Result<Fe> {
        Ok(self.open_many(&[value])?[0])
    }

    /// Fresh triples with `u`, `v` of degree `N/6` and `w = u·v` computed
    /// share by share, so `w` has degree `N/3`. One round.
    pub fn make_triples(&mut self, count: usize) -> Vec<BeaverTriple> {
        let f = self.engine.field;
        let td = self.engine.params.triple_degree;
        let mut raw = self.gen_rand_many(2 * count, td).into_iter();
        let mut out = Vec::with_capacity(count);
        while let (Some(u), Some(v)) = (raw.next(), raw.next()) {
            let w = u.values().iter().zip(v.values()).map(|(&a, &b)| f.mul(a, b)).collect();
            let w = SharedValue::new(w, 2 * td, u.quorum_id());
            out.push(BeaverTriple { u, v, w });
        }
        self.triples_generated += count as u64;
        out
    }

    /// Renews all three components of each triple to degree `N/3`. One round.
    pub fn renew_triples(&mut self, triples: Vec<BeaverTriple>) -> Result<Vec<BeaverTriple>> {
        let d = self.engine.params.degree;
        let count = triples.len();
        let flat: Vec<SharedValue> = triples.into_iter().flat_map(|t| [t.u, t.v, t.w]).collect();
        let mut renewed = self.renew_many(flat, d)?.into_iter();
        let mut out = Vec::with_capacity(count);
        while let (Some(u), Some(v), Some(w)) = (renewed.next(), renewed.next(), renewed.next()) {
            out.push(BeaverTriple { u, v, w });
        }
        Ok(out)
    }

    /// Triples ready for [`multiply_many`](Self::multiply_many). Two rounds.
    pub fn prepare_triples(&mut self, count: usize) -> Result<Vec<BeaverTriple>> {
        let raw = self.make_triples(count);
        self.renew_triples(raw)
    }

    /// Beaver multiplication of each pair. Opens `ε = a + u` and `δ = b + v`
    /// for all pairs at once, then sets `c = w + δa + εb − εδ`. One round.
    pub fn multiply_many(
        &mut self,
        pairs: &[(&SharedValue, &SharedValue)],
        triples: Vec<BeaverTriple>,
    ) -> Result<Vec<SharedValue>> {
        let f = self.engine.field;
        let d = self.engine.params.degree;
        if triples.len() != pairs.len() {
            return Err(Error::invalid(format!("{} pairs but {} triples", pairs.len(), triples.len())));
        }
        for ((a, b), t) in pairs.iter().zip(&triples) {
            if a.degree() != d || b.degree() != d {
                return Err(Error::invalid(format!("operands must have degree {d}")));
            }
            if t.u.degree() != d || t.v.degree() != d || t.w.degree() != d {
                return Err(Error::invalid("triple has not been renewed to the working degree"));
            }
        }
        let masked: Vec<SharedValue> = pairs
            .iter()
            .zip(&triples)
            .flat_map(|((a, b), t)| {
                [
                    add_values(&f, a, &t.u),
                    add_values(&f, b, &t.v),
                ]
            })
            .collect();
        let refs: Vec<&SharedValue> = masked.iter().collect();
        let opened = self.open_many(&refs)?;
        self.triples_consumed += triples.len() as u64;
        let out = pairs
            .iter()
            .zip(triples)
            .zip(opened.chunks(2))
            .map(|(((a, b), t), eps_delta)| {
                let (eps, delta) = (eps_delta[0], eps_delta[1]);
                let ed = f.mul(eps, delta);
                let vals = (0..a.len())
                    .map(|i| {
                        let c = f.mul_add(delta, a.value(i), t.w.value(i));
                        f.sub(f.mul_add(eps, b.value(i), c), ed)
                    })
                    .collect();
                SharedValue::new(vals, d, a.quorum_id())
            })
            .collect::<Vec<_>>();
        debug_assert!(out.iter().all(|c| c.degree() == d));
        Ok(out)
    }

    pub fn multiply(&mut self, a: &SharedValue, b: &SharedValue, triple: BeaverTriple) -> Result<SharedValue> {
        Ok(self.multiply_many(&[(a, b)], vec![triple])?.pop().expect("one product"))
    }

    /// Uniform shared bits: share a random `r`, open `r²`, and map `r` to
    /// `(r/√(r²) + 1)/2` with the canonical root. `r = 0` is retried.
    pub fn gen_rand_bits(&mut self, count: usize) -> Result<Vec<SharedBit>> {
        let f = self.engine.field;
        let d = self.engine.params.degree;
        let half = f.inv(f.elem(2))?;
        let mut bits = Vec::with_capacity(count);
        while bits.len() < count {
            let k = count - bits.len();
            let r = self.gen_rand_many(k, d);
            let triples = self.prepare_triples(k)?;
            let pairs: Vec<_> = r.iter().map(|x| (x, x)).collect();
            let squares = self.multiply_many(&pairs, triples)?;
            let refs: Vec<&SharedValue> = squares.iter().collect();
            let opened = self.open_many(&refs)?;
            for (r, s) in r.iter().zip(opened) {
                if s.is_zero() {
                    continue;
                }
                let root = f.sqrt(s).ok_or_else(|| Error::invalid("opened square is not a residue"))?;
                let scale = f.mul(half, f.inv(root)?);
                bits.push(SharedBit(affine(&f, r, scale, half)));
            }
        }
        Ok(bits)
    }

    /// Shared `[R > c]` for shared bits of `R` (least significant first) and
    /// a public `c`. Scans from the least significant bit with one
    /// multiplication per higher bit.
    pub fn greater_than_public(
        &mut self,
        bits: &[SharedBit],
        c: u64,
        triples: &mut Vec<BeaverTriple>,
    ) -> Result<SharedValue> {
        let f = self.engine.field;
        let first = bits.first().ok_or_else(|| Error::invalid("no bits to compare"))?.value();
        let mut gt = if c & 1 == 1 { affine(&f, first, Fe::ZERO, Fe::ZERO) } else { first.clone() };
        for (i, bit) in bits.iter().enumerate().skip(1) {
            let triple = triples.pop().ok_or_else(|| Error::invalid("out of triples"))?;
            let prod = self.multiply(bit.value(), &gt, triple)?;
            gt = if (c >> i) & 1 == 1 {
                prod
            } else {
                // R_i + gt − R_i·gt
                let s = add_values(&f, bit.value(), &gt);
                sub_values(&f, &s, &prod)
            };
        }
        Ok(gt)
    }

    /// A uniform secret in `[0, p)` with its bits shared, rejecting draws at
    /// or above `p`.
    pub fn random_mask(&mut self) -> Result<Mask> {
        let f = self.engine.field;
        let ell = f.bits() as usize;
        loop {
            let bits = self.gen_rand_bits(ell)?;
            let mut triples = self.prepare_triples(ell - 1)?;
            let too_big = self.greater_than_public(&bits, f.modulus() - 1, &mut triples)?;
            if self.open(&too_big)?.is_zero() {
                let q = self.quorum.id;
                let d = self.engine.params.degree;
                let mut value = SharedValue::new(vec![Fe::ZERO; self.quorum.size()], d, q);
                let mut weight = Fe::ONE;
                for b in &bits {
                    value = add_values(&f, &value, &affine(&f, b.value(), weight, Fe::ZERO));
                    weight = f.add(weight, weight);
                }
                return Ok(Mask { bits, value });
            }
        }
    }

    /// Preprocessing for one comparator gate: the comparison mask (real
    /// mode) and every triple the gate consumes online.
    pub fn preprocess_gate(&mut self) -> Result<GatePrep> {
        let saved = self.phase;
        self.phase = Phase::Setup;
        let ell = self.engine.field.bits() as usize;
        let prep = match self.engine.compare_mode {
            CompareMode::Real => {
                let mask = self.random_mask()?;
                GatePrep { mask: Some(mask), triples: self.prepare_triples(ell + 8)? }
            }
            CompareMode::Oracle => GatePrep { mask: None, triples: self.prepare_triples(8)? },
        };
        self.phase = saved;
        Ok(prep)
    }

    /// Shared `[a ≤ b]` for secrets below `p/2`.
    ///
    /// `[a ≤ b] = 1 − lsb(2(b − a))`: doubling a non-negative difference
    /// stays even, a negative one wraps to an odd residue. The low bit of
    /// `c = 2(b − a)` comes from opening `c + R` for the mask `R`:
    /// `lsb(c) = d₀ ⊕ R₀ ⊕ [R > d]`.
    pub fn compare(
        &mut self,
        a: &SharedValue,
        b: &SharedValue,
        mask: Option<Mask>,
        triples: &mut Vec<BeaverTriple>,
    ) -> Result<SharedBit> {
        let f = self.engine.field;
        match self.engine.compare_mode {
            CompareMode::Oracle => {
                let (x, y) = (self.engine.peek(a)?, self.engine.peek(b)?);
                let rho = if x.value() <= y.value() { Fe::ONE } else { Fe::ZERO };
                let d = self.engine.params.degree;
                let poly = crate::field::random_poly(&f, d, Some(rho), &mut self.oracle);
                self.tick(self.phase);
                Ok(SharedBit(SharedValue::new(poly.eval_points(&f, a.len()), d, a.quorum_id())))
            }
            CompareMode::Real => {
                let mask = mask.ok_or_else(|| Error::invalid("real comparison needs a mask"))?;
                let diff = sub_values(&f, b, a);
                let c = add_values(&f, &diff, &diff);
                let masked = add_values(&f, &c, &mask.value);
                let d = self.open(&masked)?.value();
                let wrap = self.greater_than_public(&mask.bits, d, triples)?;
                let r0 = mask.bits[0].value();
                let triple = triples.pop().ok_or_else(|| Error::invalid("out of triples"))?;
                let prod = self.multiply(r0, &wrap, triple)?;
                // R₀ ⊕ wrap = R₀ + wrap − 2·R₀·wrap
                let sum = add_values(&f, r0, &wrap);
                let twice = add_values(&f, &prod, &prod);
                let x = sub_values(&f, &sum, &twice);
                // ρ = 1 − (d₀ ⊕ x)
                let rho = if d & 1 == 1 { x } else { affine(&f, &x, f.neg(Fe::ONE), Fe::ONE) };
                Ok(SharedBit(rho))
            }
        }
    }

    /// The comparator: orders two (key, payload) pairs by key.
    ///
    /// With `ρ = [r ≤ r′]`: `s = ρr + (1−ρ)r′`, `y = ρx + (1−ρ)x′`,
    /// `s′ = ρr′ + (1−ρ)r`, `y′ = ρx′ + (1−ρ)x`, eight products in one round.
    pub fn gate_compute(&mut self, in1: &Pair, in2: &Pair, prep: GatePrep) -> Result<(Pair, Pair)> {
        let f = self.engine.field;
        let GatePrep { mask, mut triples } = prep;
        let rho = self.compare(&in1.0, &in2.0, mask, &mut triples)?.into_value();
        let not_rho = affine(&f, &rho, f.neg(Fe::ONE), Fe::ONE);
        let (r, x) = in1;
        let (r2, x2) = in2;
        if triples.len() < 8 {
            return Err(Error::invalid("out of triples"));
        }
        let eight = triples.split_off(triples.len() - 8);
        let products = self.multiply_many(
            &[
                (&rho, r),
                (&not_rho, r2),
                (&rho, x),
                (&not_rho, x2),
                (&rho, r2),
                (&not_rho, r),
                (&rho, x2),
                (&not_rho, x),
            ],
            eight,
        )?;
        let p = |i: usize, j: usize| add_values(&f, &products[i], &products[j]);
        Ok(((p(0, 1), p(2, 3)), (p(4, 5), p(6, 7))))
    }

    /// Moves sharings from this quorum to `dst`, charged to this session.
    ///
    /// Each source position re-deals its own share to `dst`. Destination
    /// members apply the parity checks of the source code to the sub-shares
    /// and open the resulting syndromes, which depend only on which sources
    /// sent something off the codeword. Decoding the syndrome names those
    /// sources; the new sharing combines the first `N/3 + 1` remaining ones
    /// with Lagrange weights. Two rounds.
    pub fn reshare(&mut self, dst: &Quorum, values: &[&SharedValue]) -> Result<Vec<SharedValue>> {
        let ctx = self.ctx;
        self.reshare_inner(dst, values, Phase::Reshare)?
            .into_iter()
            .map(|r| {
                r.map_err(|e| Error::Abort {
                    context: format!("reshare from {ctx:?} to quorum {}", dst.id),
                    reason: e.to_string(),
                })
            })
            .collect()
    }

    /// Re-deals freshly dealt input sharings inside this quorum so every
    /// later opening starts from a clean codeword. A word too far from any
    /// codeword becomes a public sharing of zero and is reported as `true`.
    pub fn canonicalize(&mut self, values: &[&SharedValue]) -> Result<Vec<(SharedValue, bool)>> {
        let quorum = self.quorum;
        let d = self.engine.params.degree;
        let zero = SharedValue::new(vec![Fe::ZERO; quorum.size()], d, quorum.id);
        Ok(self
            .reshare_inner(quorum, values, Phase::Input)?
            .into_iter()
            .map(|r| match r {
                Ok(sv) => (sv, false),
                Err(_) => (zero.clone(), true),
            })
            .collect())
    }

    fn reshare_inner(
        &mut self,
        dst: &Quorum,
        values: &[&SharedValue],
        phase: Phase,
    ) -> Result<Vec<Result<SharedValue>>> {
        let engine = self.engine;
        let f = engine.field;
        let code = &engine.code;
        let n = self.quorum.size();
        let d = engine.params.degree;
        let adversary = engine.adversary;
        if values.iter().any(|v| v.degree() != d || v.len() != n) {
            return Err(Error::invalid(format!("only degree-{d} sharings of this quorum can move")));
        }
        // sub[i][j]: what destination position j received from source position i.
        let mut subs: Vec<Vec<Vec<Fe>>> = Vec::with_capacity(values.len());
        let mut coeffs = vec![Fe::ZERO; d + 1];
        for sv in values {
            let mut per_source = Vec::with_capacity(n);
            for i in 0..n {
                let honest = self.quorum.honest[i];
                let rng = &mut self.rngs[i];
                for c in coeffs.iter_mut().skip(1) {
                    *c = f.random(rng);
                }
                match adversary.hook(&f, honest, Action::Reshare, sv.value(i), &mut self.adv) {
                    Some(constant) => {
                        coeffs[0] = constant;
                        per_source.push(
                            (0..dst.size())
                                .map(|j| {
                                    let x = f.point(j);
                                    coeffs.iter().rev().fold(Fe::ZERO, |acc, &c| f.mul_add(acc, x, c))
                                })
                                .collect(),
                        );
                    }
                    None => per_source.push(vec![Fe::ZERO; dst.size()]),
                }
            }
            subs.push(per_source);
        }
        {
            let mut meter = engine.meter();
            for i in 0..n {
                if !adversary.withholds(self.quorum.honest[i], Action::Reshare) {
                    meter.charge_sends(self.quorum.members[i], phase, values.len() as u64, dst.size() as u64);
                }
            }
        }
        self.tick(phase);

        // Syndrome sharings held by the destination, one word per parity row.
        let parity = code.parity();
        let mut syndrome_words: Vec<Vec<Fe>> = Vec::with_capacity(values.len() * parity.len());
        for per_source in &subs {
            for row in parity {
                syndrome_words.push(
                    (0..dst.size())
                        .map(|j| {
                            row.iter()
                                .zip(per_source)
                                .fold(Fe::ZERO, |acc, (&h, g)| f.mul_add(h, g[j], acc))
                        })
                        .collect(),
                );
            }
        }
        let refs: Vec<&[Fe]> = syndrome_words.iter().map(|w| w.as_slice()).collect();
        let label = format!("reshare from {:?} to quorum {}", self.ctx, dst.id);
        let syndromes = engine.open_words(dst, &refs, d, phase, &mut self.adv, &label)?;
        self.tick(phase);

        let mut out = Vec::with_capacity(values.len());
        for (per_source, syndrome) in subs.iter().zip(syndromes.chunks(parity.len().max(1))) {
            let bad = if parity.is_empty() { Ok(Vec::new()) } else { code.locate_errors(syndrome, &engine.suspects(self.quorum)) };
            let bad = match bad {
                Ok(bad) => bad,
                Err(e) => {
                    out.push(Err(e));
                    continue;
                }
            };
            for &i in &bad {
                engine.flag(self.quorum.members[i]);
            }
            let good: Vec<usize> = (0..n).filter(|i| !bad.contains(i)).take(d + 1).collect();
            let weights = if good.iter().enumerate().all(|(k, &i)| k == i) {
                code.zero_weights().to_vec()
            } else {
                let xs: Vec<Fe> = good.iter().map(|&i| f.point(i)).collect();
                lagrange_weights(&f, &xs, Fe::ZERO)?
            };
            let vals = (0..dst.size())
                .map(|j| {
                    good.iter()
                        .zip(&weights)
                        .fold(Fe::ZERO, |acc, (&i, &w)| f.mul_add(w, per_source[i][j], acc))
                })
                .collect();
            out.push(Ok(SharedValue::new(vals, d, dst.id)));
        }
        Ok(out)
    }
}

fn add_values(f: &PrimeField, a: &SharedValue, b: &SharedValue) -> SharedValue {
    let vals = a.values().iter().zip(b.values()).map(|(&x, &y)| f.add(x, y)).collect();
    SharedValue::new(vals, a.degree().max(b.degree()), a.quorum_id())
}

fn sub_values(f: &PrimeField, a: &SharedValue, b: &SharedValue) -> SharedValue {
    let vals = a.values().iter().zip(b.values()).map(|(&x, &y)| f.sub(x, y)).collect();
    SharedValue::new(vals, a.degree().max(b.degree()), a.quorum_id())
}

/// `scale·a + shift`, share by share.
fn affine(f: &PrimeField, a: &SharedValue, scale: Fe, shift: Fe) -> SharedValue {
    let vals = a.values().iter().map(|&x| f.mul_add(scale, x, shift)).collect();
    SharedValue::new(vals, a.degree(), a.quorum_id())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::AdversaryMode;
    use rand::SeedableRng;

    fn engine(p: u64, size: usize, mode: AdversaryMode, cmp: CompareMode, seed: u64) -> Engine {
        let field = PrimeField::new(p).unwrap();
        let params = QuorumParams::new(size).unwrap();
        Engine::new(field, params, size, Adversary::new(mode), cmp, seed, 1).unwrap()
    }

    fn honest_quorum(id: usize, size: usize) -> Quorum {
        Quorum::new(id, (0..size).collect(), vec![true; size])
    }

    fn with_dishonest(id: usize, size: usize, bad: &[usize]) -> Quorum {
        let honest = (0..size).map(|i| !bad.contains(&i)).collect();
        Quorum::new(id, (0..size).collect(), honest)
    }

    fn share_in(e: &Engine, q: &Quorum, secret: u64, seed: u64) -> SharedValue {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = e.field();
        crate::sharing::share(f, f.elem(secret), q.size(), e.params().degree, &mut rng)
            .unwrap()
            .with_quorum(q.id)
    }

    #[test]
    fn params_for_common_sizes() {
        let p = QuorumParams::new(18).unwrap();
        assert_eq!((p.degree, p.triple_degree, p.correctable, p.max_dishonest()), (6, 3, 5, 2));
        let p = QuorumParams::new(12).unwrap();
        assert_eq!((p.degree, p.triple_degree, p.correctable), (4, 2, 3));
        assert!(QuorumParams::new(10).is_err());
    }

    #[test]
    fn multiply_small_examples() {
        let e = engine(7, 6, AdversaryMode::None, CompareMode::Real, 1);
        let q = honest_quorum(0, 6);
        let mut s = e.session(&q, Context::Gate(0));
        let a = share_in(&e, &q, 3, 1);
        let b = share_in(&e, &q, 4, 2);
        let t = s.prepare_triples(1).unwrap().pop().unwrap();
        let c = s.multiply(&a, &b, t).unwrap();
        assert_eq!(c.degree(), 2);
        assert_eq!(e.peek(&c).unwrap(), e.field().elem(5));

        let zero = share_in(&e, &q, 0, 3);
        for (i, b) in (0..7).enumerate() {
            let b = share_in(&e, &q, b, 10 + i as u64);
            let t = s.prepare_triples(1).unwrap().pop().unwrap();
            assert!(e.peek(&s.multiply(&zero, &b, t).unwrap()).unwrap().is_zero());
        }
        assert_eq!(s.triples_generated(), s.triples_consumed());
    }

    #[test]
    fn multiply_rejects_unrenewed_triples() {
        let e = engine(65521, 12, AdversaryMode::None, CompareMode::Real, 2);
        let q = honest_quorum(0, 12);
        let mut s = e.session(&q, Context::Gate(0));
        let raw = s.make_triples(1).pop().unwrap();
        assert_eq!((raw.u().degree(), raw.v().degree(), raw.w().degree()), (2, 2, 4));
        let a = share_in(&e, &q, 3, 1);
        assert!(s.multiply(&a, &a, raw).is_err());
    }

    #[test]
    fn triples_satisfy_product_identity() {
        let e = engine(65521, 18, AdversaryMode::None, CompareMode::Real, 3);
        let q = honest_quorum(0, 18);
        let mut s = e.session(&q, Context::Gate(0));
        let f = e.field();
        let raw = s.make_triples(20);
        for t in &raw {
            assert_eq!(t.w().degree(), 6);
            let (u, v, w) = (e.peek(t.u()).unwrap(), e.peek(t.v()).unwrap(), e.peek(t.w()).unwrap());
            assert_eq!(w, f.mul(u, v));
        }
        for t in s.renew_triples(raw).unwrap() {
            let (u, v, w) = (e.peek(t.u()).unwrap(), e.peek(t.v()).unwrap(), e.peek(t.w()).unwrap());
            assert_eq!(w, f.mul(u, v));
            assert_eq!(t.u().degree(), 6);
        }
    }

    #[test]
    fn gen_rand_is_uniform_with_one_honest_dealer() {
        let e = engine(7, 6, AdversaryMode::GarbageDealing, CompareMode::Real, 4);
        let q = with_dishonest(0, 6, &[0, 1, 2, 3, 4]);
        let mut s = e.session(&q, Context::Gate(0));
        let mut counts = [0u64; 7];
        let mut pairs = [0u64; 49];
        for _ in 0..20_000 {
            let r = s.gen_rand_many(2, 2);
            let x = crate::sharing::decode_points(e.field(), &r[0].points(), 2);
            let y = crate::sharing::decode_points(e.field(), &r[1].points(), 2);
            if let (Ok(x), Ok(y)) = (x, y) {
                counts[x.secret.value() as usize] += 1;
                pairs[(x.secret.value() * 7 + y.secret.value()) as usize] += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        assert!(total > 15_000);
        assert!(crate::stats::chi_square_uniform(&counts) < crate::stats::chi_square_critical(6, 0.001));
        assert!(crate::stats::chi_square_uniform(&pairs) < crate::stats::chi_square_critical(48, 0.001));
    }

    #[test]
    fn random_bits_are_fair() {
        let e = engine(65521, 6, AdversaryMode::None, CompareMode::Real, 5);
        let q = honest_quorum(0, 6);
        let mut s = e.session(&q, Context::Gate(0));
        let bits = s.gen_rand_bits(10_000).unwrap();
        let mut ones = 0;
        for b in &bits {
            let v = e.peek(b.value()).unwrap().value();
            assert!(v <= 1);
            ones += v;
        }
        let mean = ones as f64 / bits.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn mask_is_below_modulus_and_matches_bits() {
        let e = engine(61, 6, AdversaryMode::None, CompareMode::Real, 6);
        let q = honest_quorum(0, 6);
        let mut s = e.session(&q, Context::Gate(0));
        for _ in 0..50 {
            let m = s.random_mask().unwrap();
            assert_eq!(m.bits.len(), 6);
            let v = e.peek(&m.value).unwrap().value();
            let from_bits: u64 = m
                .bits
                .iter()
                .enumerate()
                .map(|(i, b)| e.peek(b.value()).unwrap().value() << i)
                .sum();
            assert_eq!(v, from_bits);
            assert!(v < 61);
        }
    }

    #[test]
    fn greater_than_public_exhaustive_small() {
        let e = engine(31, 6, AdversaryMode::None, CompareMode::Real, 7);
        let q = honest_quorum(0, 6);
        let f = *e.field();
        let mut s = e.session(&q, Context::Gate(0));
        for r in 0..32u64 {
            let bits: Vec<SharedBit> = (0..5)
                .map(|i| SharedBit(share_in(&e, &q, r >> i & 1, r * 10 + i)))
                .collect();
            for c in [0u64, 1, 7, 15, 16, 30, 31] {
                let mut triples = s.prepare_triples(4).unwrap();
                let gt = s.greater_than_public(&bits, c, &mut triples).unwrap();
                assert_eq!(e.peek(&gt).unwrap(), f.elem((r > c) as u64), "r={r} c={c}");
            }
        }
    }

    #[test]
    fn compare_exhaustive_small_domain() {
        let e = engine(15361, 12, AdversaryMode::None, CompareMode::Real, 8);
        let q = honest_quorum(0, 12);
        let mut s = e.session(&q, Context::Gate(0));
        for a in 0..16u64 {
            for b in 0..16u64 {
                let sa = share_in(&e, &q, a, a * 100 + b);
                let sb = share_in(&e, &q, b, a * 100 + b + 5000);
                let mut prep = s.preprocess_gate().unwrap();
                let rho = s.compare(&sa, &sb, prep.mask.take(), &mut prep.triples).unwrap();
                assert_eq!(e.peek(rho.value()).unwrap().value(), (a <= b) as u64, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn compare_uses_ell_online_multiplications() {
        let e = engine(15361, 12, AdversaryMode::None, CompareMode::Real, 9);
        let q = honest_quorum(0, 12);
        let mut s = e.session(&q, Context::Gate(0));
        let mut prep = s.preprocess_gate().unwrap();
        let before = s.triples_consumed();
        let gate_rounds = s.rounds_in(Phase::Setup);
        assert!(gate_rounds > 0);
        s.set_phase(Phase::Gate);
        let a = share_in(&e, &q, 2, 1);
        let b = share_in(&e, &q, 5, 2);
        let rho = s.compare(&a, &b, prep.mask.take(), &mut prep.triples).unwrap();
        assert_eq!(e.peek(rho.value()).unwrap(), Fe::ONE);
        let ell = e.field().bits() as u64;
        assert_eq!(s.triples_consumed() - before, ell);
        assert_eq!(s.rounds_in(Phase::Gate), ell + 1);
    }

    #[test]
    fn gate_examples_in_both_modes() {
        for mode in [CompareMode::Real, CompareMode::Oracle] {
            let e = engine(65521, 12, AdversaryMode::None, mode, 10);
            let q = honest_quorum(0, 12);
            let mut s = e.session(&q, Context::Gate(0));
            for (r1, x1, r2, x2) in [(5, 100, 2, 200), (2, 100, 5, 200), (7, 1, 7, 2)] {
                let in1 = (share_in(&e, &q, r1, 1), share_in(&e, &q, x1, 2));
                let in2 = (share_in(&e, &q, r2, 3), share_in(&e, &q, x2, 4));
                let prep = s.preprocess_gate().unwrap();
                let ((s1, y1), (s2, y2)) = s.gate_compute(&in1, &in2, prep).unwrap();
                let got: Vec<u64> = [&s1, &y1, &s2, &y2].iter().map(|v| e.peek(v).unwrap().value()).collect();
                let want = if r1 <= r2 { vec![r1, x1, r2, x2] } else { vec![r2, x2, r1, x1] };
                assert_eq!(got, want, "{mode}");
            }
            assert_eq!(s.triples_generated(), s.triples_consumed());
        }
    }

    #[test]
    fn oracle_gate_round_count() {
        let e = engine(65521, 12, AdversaryMode::None, CompareMode::Oracle, 11);
        let q = honest_quorum(0, 12);
        let mut s = e.session(&q, Context::Gate(0));
        let prep = s.preprocess_gate().unwrap();
        s.set_phase(Phase::Gate);
        let in1 = (share_in(&e, &q, 1, 1), share_in(&e, &q, 2, 2));
        let out = s.gate_compute(&in1, &in1, prep).unwrap();
        let dst = honest_quorum(1, 12);
        s.reshare(&dst, &[&out.0 .0, &out.0 .1]).unwrap();
        assert_eq!(s.rounds_in(Phase::Gate) + s.rounds_in(Phase::Reshare), 4);
    }

    #[test]
    fn reshare_moves_secrets_and_flags_bad_sources() {
        for mode in AdversaryMode::ACTIVE {
            let e = engine(65521, 18, mode, CompareMode::Real, 12);
            let src = with_dishonest(0, 18, &[3, 11]);
            let dst = with_dishonest(1, 18, &[0, 17]);
            let mut s = e.session(&src, Context::Gate(0));
            let a = share_in(&e, &src, 1234, 1);
            let b = share_in(&e, &src, 999, 2);
            let moved = s.reshare(&dst, &[&a, &b]).unwrap();
            assert_eq!(e.peek(&moved[0]).unwrap().value(), 1234, "{mode}");
            assert_eq!(e.peek(&moved[1]).unwrap().value(), 999);
            assert_eq!(moved[0].quorum_id(), 1);
            assert!(e.code().is_codeword(moved[0].values()), "{mode}");
            if mode != AdversaryMode::CorruptOpenings {
                assert_eq!(e.flagged().iter().filter(|&&p| p == 3 || p == 11).count(), 2, "{mode}");
            }
        }
    }

    #[test]
    fn reshare_cleans_errors_in_the_source_word() {
        let e = engine(65521, 18, AdversaryMode::None, CompareMode::Real, 13);
        let q = honest_quorum(0, 18);
        let f = *e.field();
        let a = share_in(&e, &q, 77, 1);
        let mut vals = a.values().to_vec();
        for i in [0, 5, 6, 9, 14] {
            vals[i] = f.add(vals[i], f.elem(1 + i as u64));
        }
        let noisy = SharedValue::new(vals.clone(), 6, 0);
        let mut s = e.session(&q, Context::Input(0));
        let out = s.reshare(&q, &[&noisy]).unwrap();
        assert_eq!(e.peek(&out[0]).unwrap().value(), 77);
        assert!(e.code().is_codeword(out[0].values()));

        vals[2] = f.add(vals[2], Fe::ONE);
        let hopeless = SharedValue::new(vals, 6, 0);
        let err = s.reshare(&q, &[&hopeless]).unwrap_err();
        assert!(matches!(err, Error::Abort { .. }), "{err:?}");
        let canon = s.canonicalize(&[&noisy, &hopeless]).unwrap();
        assert_eq!((e.peek(&canon[0].0).unwrap().value(), canon[0].1), (77, false));
        assert_eq!((e.peek(&canon[1].0).unwrap().value(), canon[1].1), (0, true));
        assert_eq!(s.rounds_in(Phase::Input), 2);
    }

    #[test]
    fn openings_tolerate_corrupted_members() {
        for mode in AdversaryMode::ACTIVE {
            let e = engine(65521, 18, mode, CompareMode::Real, 14);
            let q = with_dishonest(0, 18, &[1, 8]);
            let mut s = e.session(&q, Context::Gate(0));
            s.set_phase(Phase::Gate);
            let a = share_in(&e, &q, 10, 1);
            let b = share_in(&e, &q, 20, 2);
            let prep = s.preprocess_gate().unwrap();
            let in1 = (a.clone(), b.clone());
            let in2 = (b, a);
            let ((lo, _), (hi, _)) = s.gate_compute(&in1, &in2, prep).unwrap();
            assert_eq!(e.peek(&lo).unwrap().value(), 10, "{mode}");
            assert_eq!(e.peek(&hi).unwrap().value(), 20, "{mode}");
            if mode == AdversaryMode::Silent || mode == AdversaryMode::CorruptOpenings {
                assert_eq!(e.flagged(), vec![1, 8], "{mode}");
            }
        }
    }

    #[test]
    fn openings_abort_beyond_radius() {
        let e = engine(65521, 18, AdversaryMode::CorruptOpenings, CompareMode::Real, 15);
        let q = with_dishonest(0, 18, &[0, 1, 2, 3, 4, 5, 6, 7, 8]);
        let mut s = e.session(&q, Context::Gate(0));
        let a = share_in(&e, &q, 10, 1);
        let err = s.open(&a).unwrap_err();
        assert!(matches!(err, Error::Abort { .. }), "{err:?}");
    }

    #[test]
    fn compare_modes_parse() {
        assert_eq!("oracle".parse::<CompareMode>().unwrap(), CompareMode::Oracle);
        assert_eq!("real".parse::<CompareMode>().unwrap(), CompareMode::Real);
        assert!("fast".parse::<CompareMode>().is_err());
    }
}
