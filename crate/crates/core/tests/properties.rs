use anoncast::circuit::{assign_quorums, build_batcher};
use anoncast::experiments::{diverges, is_correct};
use anoncast::mpc::CompareMode;
use anoncast::protocol::{max_faults, run_protocol, RunConfig};
use anoncast::simnet::{AdversaryMode, Outcome};
use proptest::prelude::*;

fn mode() -> impl Strategy<Value = AdversaryMode> {
    prop_oneof![
        Just(AdversaryMode::CorruptOpenings),
        Just(AdversaryMode::GarbageDealing),
        Just(AdversaryMode::Silent),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn honest_runs_deliver_every_message(n in 2usize..13, seed in any::<u64>(), real in any::<bool>()) {
        let compare_mode = if real { CompareMode::Real } else { CompareMode::Oracle };
        let inputs: Vec<u64> = (0..n as u64).map(|i| (i * 7919).wrapping_add(seed) % 50).collect();
        let c = RunConfig { n, seed, compare_mode, inputs: Some(inputs), ..RunConfig::default() };
        let r = run_protocol(&c).unwrap();
        prop_assert_eq!(r.metrics.outcome, Outcome::Ok);
        prop_assert!(is_correct(&c, &r));
        prop_assert!(r.honest_agreement);
    }

    #[test]
    fn traffic_is_conserved(n in 2usize..17, seed in any::<u64>(), adversary in mode()) {
        let t = max_faults(n, 0.01);
        let c = RunConfig { n, t, seed, adversary, compare_mode: CompareMode::Oracle, ..RunConfig::default() };
        let m = run_protocol(&c).unwrap().metrics;
        prop_assert_eq!(m.per_party_bits.iter().sum::<u64>(), m.total_bits);
        prop_assert_eq!(m.per_phase_bits.values().sum::<u64>(), m.total_bits);
        prop_assert_eq!(m.triples_generated, m.triples_consumed);
    }

    #[test]
    fn bounded_adversaries_match_the_passive_twin(
        n in 12usize..40,
        seed in any::<u64>(),
        adversary in mode(),
    ) {
        let t = max_faults(n, 0.01);
        let base = RunConfig { n, t, seed, compare_mode: CompareMode::Oracle, ..RunConfig::default() };
        let twin = run_protocol(&base).unwrap();
        let r = run_protocol(&RunConfig { adversary, ..base }).unwrap();
        prop_assert!(!diverges(&r, &twin));
        prop_assert!(r.honest_agreement);
    }

    #[test]
    fn comparator_networks_sort(n in 2usize..70, values in proptest::collection::vec(any::<u16>(), 128)) {
        let c = assign_quorums(build_batcher(n).unwrap(), n).unwrap();
        let mut items: Vec<(u16, usize)> = values[..c.wires()].iter().copied().zip(0..).collect();
        c.apply(&mut items);
        prop_assert!(items.windows(2).all(|w| w[0].0 <= w[1].0));
        prop_assert!(c.gates().iter().all(|g| g.quorum_id < n));
    }
}
