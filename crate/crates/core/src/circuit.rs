//! Batcher odd-even mergesort networks and their gate-to-quorum assignment.

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparatorGate {
    pub id: usize,
    pub level: usize,
    /// Receives the smaller key.
    pub wire_lo: usize,
    /// Receives the larger key.
    pub wire_hi: usize,
    pub quorum_id: usize,
}

/// Where a gate output goes next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Consumer {
    Gate(usize),
    /// The output quorum for wire pair `pair` (wires `2·pair` and `2·pair + 1`).
    Output(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShuffleCircuit {
    n_inputs: usize,
    wires: usize,
    gates: Vec<ComparatorGate>,
    levels: Vec<Range<usize>>,
    input_quorums: Vec<usize>,
    output_quorums: Vec<usize>,
    // consumers[g] = (next on wire_lo, next on wire_hi)
    consumers: Vec<(Consumer, Consumer)>,
}

impl ShuffleCircuit {
    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Wire count: the next power of two at or above the input count.
    pub fn wires(&self) -> usize {
        self.wires
    }

    /// Gates in id order; levels are contiguous id ranges.
    pub fn gates(&self) -> &[ComparatorGate] {
        &self.gates
    }

    pub fn gate(&self, id: usize) -> &ComparatorGate {
        &self.gates[id]
    }

    pub fn level(&self, level: usize) -> &[ComparatorGate] {
        &self.gates[self.levels[level].clone()]
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Input pairs carrying at least one real input: `⌈n/2⌉`.
    pub fn input_pairs(&self) -> usize {
        self.n_inputs.div_ceil(2)
    }

    pub fn input_quorums(&self) -> &[usize] {
        &self.input_quorums
    }

    pub fn output_quorums(&self) -> &[usize] {
        &self.output_quorums
    }

    /// Next stop of the values leaving gate `id` on its low and high wires.
    pub fn consumers(&self, id: usize) -> (Consumer, Consumer) {
        self.consumers[id]
    }

    /// The input gate holding wire pair `pair`. In a Batcher network the first
    /// level compares wires `2j` and `2j + 1` in gate `j`.
    pub fn input_gate(&self, pair: usize) -> usize {
        pair
    }

    /// One line per gate: `level,id,wire_lo,wire_hi,quorum_id`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            let _ = writeln!(out, "{},{},{},{},{}", g.level, g.id, g.wire_lo, g.wire_hi, g.quorum_id);
        }
        out
    }

    /// Applies the network to plaintext keys, carrying payloads along.
    pub fn apply<K: Ord + Copy, V: Copy>(&self, items: &mut [(K, V)]) {
        for g in &self.gates {
            if items[g.wire_lo].0 > items[g.wire_hi].0 {
                items.swap(g.wire_lo, g.wire_hi);
            }
        }
    }
}

/// `(k² − k + 4)·2^(k−2) − 1` comparators for `W = 2^k` wires.
pub fn batcher_gate_count(wires: usize) -> usize {
    let k = wires.trailing_zeros() as usize;
    ((k * k - k + 4) << k) / 4 - 1
}

/// `k(k + 1)/2` levels for `W = 2^k` wires.
pub fn batcher_depth(wires: usize) -> usize {
    let k = wires.trailing_zeros() as usize;
    k * (k + 1) / 2
}

/// Odd-even mergesort over `n_inputs` rounded up to a power of two. Padding
/// wires are expected to carry the largest key so they end up last. All gates
/// start in quorum 0; see [`assign_quorums`].
pub fn build_batcher(n_inputs: usize) -> Result<ShuffleCircuit> {
    if n_inputs < 2 {
        return Err(Error::invalid(format!("need at least 2 inputs, got {n_inputs}")));
    }
    let wires = n_inputs.next_power_of_two();
    let mut gates = Vec::with_capacity(batcher_gate_count(wires));
    let mut levels = Vec::new();
    let mut p = 1;
    while p < wires {
        let mut k = p;
        while k >= 1 {
            let start = gates.len();
            let mut j = k % p;
            while j + k < wires {
                for i in 0..k.min(wires - j - k) {
                    if (i + j) / (2 * p) == (i + j + k) / (2 * p) {
                        gates.push(ComparatorGate {
                            id: gates.len(),
                            level: levels.len(),
                            wire_lo: i + j,
                            wire_hi: i + j + k,
                            quorum_id: 0,
                        });
                    }
                }
                j += 2 * k;
            }
            levels.push(start..gates.len());
            k /= 2;
        }
        p *= 2;
    }
    let consumers = route(wires, &gates);
    let mut c = ShuffleCircuit {
        n_inputs,
        wires,
        gates,
        levels,
        input_quorums: Vec::new(),
        output_quorums: Vec::new(),
        consumers,
    };
    c = assign_quorums(c, 1)?;
    Ok(c)
}

fn route(wires: usize, gates: &[ComparatorGate]) -> Vec<(Consumer, Consumer)> {
    let mut next: Vec<Consumer> = (0..wires).map(|w| Consumer::Output(w / 2)).collect();
    let mut out = vec![(Consumer::Output(0), Consumer::Output(0)); gates.len()];
    for g in gates.iter().rev() {
        out[g.id] = (next[g.wire_lo], next[g.wire_hi]);
        next[g.wire_lo] = Consumer::Gate(g.id);
        next[g.wire_hi] = Consumer::Gate(g.id);
    }
    out
}

/// Gate `i` goes to quorum `i mod n_quorums`. Output pair `j` is treated as a
/// virtual gate numbered `m + j` after the `m` comparators.
pub fn assign_quorums(mut c: ShuffleCircuit, n_quorums: usize) -> Result<ShuffleCircuit> {
    if n_quorums == 0 {
        return Err(Error::invalid("need at least one quorum"));
    }
    for g in &mut c.gates {
        g.quorum_id = g.id % n_quorums;
    }
    let m = c.gates.len();
    let pairs = c.input_pairs();
    c.input_quorums = (0..pairs).map(|j| c.gates[c.input_gate(j)].quorum_id).collect();
    c.output_quorums = (0..pairs).map(|j| (m + j) % n_quorums).collect();
    Ok(c)
}

/// Checks the 0-1 principle exhaustively. Requires at most 20 wires.
pub fn verify_sorting(c: &ShuffleCircuit) -> Result<bool> {
    let w = c.wires;
    if w > 20 {
        return Err(Error::invalid(format!("exhaustive check limited to 20 wires, got {w}")));
    }
    for pattern in 0u32..(1 << w) {
        let mut bits = pattern;
        for g in &c.gates {
            let (lo, hi) = (bits >> g.wire_lo & 1, bits >> g.wire_hi & 1);
            if lo > hi {
                bits ^= (1 << g.wire_lo) | (1 << g.wire_hi);
            }
        }
        // Sorted ascending means all ones sit on the highest wires.
        let ones = bits.count_ones();
        if bits != ((1u32 << w) - 1) ^ ((1u32 << (w - ones as usize)) - 1) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_networks() {
        let c2 = build_batcher(2).unwrap();
        assert_eq!((c2.gates().len(), c2.depth()), (1, 1));
        assert!(verify_sorting(&c2).unwrap());

        let c4 = build_batcher(4).unwrap();
        assert_eq!((c4.gates().len(), c4.depth()), (5, 3));
        let c8 = build_batcher(8).unwrap();
        assert_eq!((c8.gates().len(), c8.depth()), (19, 6));
    }

    #[test]
    fn sorts_every_order_of_four() {
        let c = build_batcher(4).unwrap();
        let mut perm = [0u8, 1, 2, 3];
        let mut count = 0;
        loop {
            let mut items: Vec<(u8, ())> = perm.iter().map(|&k| (k, ())).collect();
            c.apply(&mut items);
            assert_eq!(items.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
            count += 1;
            // next permutation
            let Some(i) = (0..3).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
            let j = (i + 1..4).rev().find(|&j| perm[j] > perm[i]).unwrap();
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
        assert_eq!(count, 24);
    }

    #[test]
    fn zero_one_principle() {
        for w in [2, 4, 8, 16] {
            assert!(verify_sorting(&build_batcher(w).unwrap()).unwrap());
        }
        assert!(verify_sorting(&build_batcher(32).unwrap()).is_err());
    }

    #[test]
    fn removing_any_gate_breaks_sorting() {
        for w in [4, 8] {
            let c = build_batcher(w).unwrap();
            for skip in 0..c.gates().len() {
                let mut broken = c.clone();
                broken.gates.remove(skip);
                assert!(!verify_sorting(&broken).unwrap(), "w={w} skip={skip}");
            }
        }
    }

    #[test]
    fn depth_and_size_formulas() {
        let mut w = 2;
        while w <= 1024 {
            let c = build_batcher(w).unwrap();
            assert_eq!(c.depth(), batcher_depth(w));
            assert_eq!(c.gates().len(), batcher_gate_count(w));
            for level in 0..c.depth() {
                let mut seen = vec![false; w];
                for g in c.level(level) {
                    assert!(g.wire_lo < g.wire_hi && g.wire_hi < w);
                    assert!(!seen[g.wire_lo] && !seen[g.wire_hi]);
                    seen[g.wire_lo] = true;
                    seen[g.wire_hi] = true;
                }
            }
            w *= 2;
        }
    }

    #[test]
    fn padding_sentinels_sort_last() {
        let c = build_batcher(5).unwrap();
        assert_eq!(c.wires(), 8);
        let mut items: Vec<(u32, u32)> =
            vec![(7, 0), (3, 1), (9, 2), (1, 3), (4, 4), (100, 99), (100, 99), (100, 99)];
        c.apply(&mut items);
        let real: Vec<u32> = items[..5].iter().map(|x| x.1).collect();
        assert_eq!(real, vec![3, 1, 4, 0, 2]);
    }

    #[test]
    fn quorum_assignment() {
        let c = build_batcher(8).unwrap();
        let c = assign_quorums(c, 4).unwrap();
        let ids: Vec<usize> = c.gates()[..10].iter().map(|g| g.quorum_id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 0, 1, 2, 3, 0, 1]);
        assert_eq!(c.input_quorums(), &[0, 1, 2, 3]);
        assert_eq!(c.output_quorums(), &[3, 0, 1, 2]);

        let one = assign_quorums(build_batcher(8).unwrap(), 1).unwrap();
        assert!(one.gates().iter().all(|g| g.quorum_id == 0));

        let m = c.gates().len();
        for n in [3, 4, 7] {
            let c = assign_quorums(c.clone(), n).unwrap();
            let mut load = vec![0; n];
            for g in c.gates() {
                load[g.quorum_id] += 1;
            }
            assert!(load.iter().all(|&l| l == m / n || l == m.div_ceil(n)));
        }
    }

    #[test]
    fn routing_follows_wires() {
        let c = build_batcher(8).unwrap();
        for g in c.gates() {
            let (lo, hi) = c.consumers(g.id);
            for (wire, cons) in [(g.wire_lo, lo), (g.wire_hi, hi)] {
                match cons {
                    Consumer::Gate(next) => {
                        let n = c.gate(next);
                        assert!(n.level > g.level && (n.wire_lo == wire || n.wire_hi == wire));
                        assert!(c.gates()[g.id + 1..next]
                            .iter()
                            .all(|x| x.wire_lo != wire && x.wire_hi != wire));
                    }
                    Consumer::Output(pair) => {
                        assert_eq!(pair, wire / 2);
                        assert!(c.gates()[g.id + 1..].iter().all(|x| x.wire_lo != wire && x.wire_hi != wire));
                    }
                }
            }
        }
    }

    #[test]
    fn dump_format() {
        let c = assign_quorums(build_batcher(4).unwrap(), 2).unwrap();
        let dump = c.dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "0,0,0,1,0");
        assert_eq!(lines[4], "2,4,1,2,0");
    }
}
