mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;

use common::*;
use xrsched::scenario::{build_episode, Phasing, ScenarioConfig};
use xrsched::schedulers::{
    oracle_best_quality, pf_priority, pfi_priority, FixedOrder, Pf, PfI, PriorityPolicy, RandomPriority,
};
use xrsched::simcore::{allocate, priority_order, rbs_to_finish, FrameStatus, Simulator};

fn small_scenario(devices: usize, phasing: Phasing) -> ScenarioConfig {
    ScenarioConfig { devices, rb_per_slot: 12, slots: 300, phasing, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn allocation_conserves_blocks(seed in any::<u64>(), n_rb in 0u32..60) {
        let mut r = rng(seed);
        let (queue, rates) = random_queue(&mut r, 10);
        let prio = random_priorities(&mut r, queue.len());
        let grants = allocate(&queue, &prio, n_rb, &rates).unwrap();
        let demand: u64 = queue.iter().map(|e| u64::from(rbs_to_finish(e.remaining_bits, rates[e.frame.device]))).sum();
        let total: u64 = grants.iter().map(|&g| u64::from(g)).sum();
        prop_assert!(total <= u64::from(n_rb));
        if demand >= u64::from(n_rb) {
            prop_assert_eq!(total, u64::from(n_rb));
        }
    }

    #[test]
    fn higher_priority_unfinished_starves_lower(seed in any::<u64>(), n_rb in 0u32..30) {
        let mut r = rng(seed);
        let (queue, rates) = random_queue(&mut r, 10);
        let prio = random_priorities(&mut r, queue.len());
        let grants = allocate(&queue, &prio, n_rb, &rates).unwrap();
        for a in 0..queue.len() {
            let need = rbs_to_finish(queue[a].remaining_bits, rates[queue[a].frame.device]);
            if grants[a] < need {
                for b in 0..queue.len() {
                    if prio[a] > prio[b] {
                        prop_assert_eq!(grants[b], 0);
                    }
                }
            }
        }
    }

    #[test]
    fn allocation_matches_closed_form(seed in any::<u64>(), n_rb in 0u32..40) {
        let mut r = rng(seed);
        let (queue, rates) = random_queue(&mut r, 12);
        let prio = random_priorities(&mut r, queue.len());
        let grants = allocate(&queue, &prio, n_rb, &rates).unwrap();
        let expected: Vec<u32> = transcribed_allocation(&queue, &prio, n_rb, &rates).into_iter().map(|(g, _)| g).collect();
        prop_assert_eq!(grants, expected);
    }

    #[test]
    fn pf_order_ignores_uniform_rate_scaling(seed in any::<u64>(), lambda in 0.01f64..100.0) {
        let sc = small_scenario(3, Phasing::Random);
        let spec = Arc::new(build_episode(&sc, seed).unwrap());
        let mut sim = Simulator::new(spec);
        for _ in 0..(seed % 50) {
            sim.advance_slot(&mut Pf).unwrap();
        }
        let input = sim.policy_input();
        let mut scaled = input.clone();
        for d in &mut scaled.devices {
            d.bits_per_rb *= lambda;
            d.avg_rate *= lambda;
        }
        let base = priority_order(sim.queue(), &pf_priority(&input)).unwrap();
        let other = priority_order(sim.queue(), &pf_priority(&scaled)).unwrap();
        prop_assert_eq!(base, other);
    }

    #[test]
    fn pfi_dominates_pf(seed in any::<u64>()) {
        let sc = small_scenario(4, Phasing::Simultaneous);
        let spec = Arc::new(build_episode(&sc, seed).unwrap());
        let mut sim = Simulator::new(spec);
        for _ in 0..60 {
            let input = sim.policy_input();
            let pf = pf_priority(&input);
            let pfi = pfi_priority(&input).unwrap();
            for ((a, b), f) in pf.iter().zip(&pfi).zip(&input.frames) {
                prop_assert!(b >= a);
                prop_assert_eq!(a == b, f.remaining_bits == f.size_bits);
            }
            sim.advance_slot(&mut PfI).unwrap();
        }
    }

    #[test]
    fn oracle_bounds_every_policy(seed in any::<u64>()) {
        let inst = tiny_instance(&mut rng(seed));
        let best = oracle_best_quality(&inst).unwrap().quality;
        let spec = spec_of(&inst);
        let policies: Vec<Box<dyn PriorityPolicy>> =
            vec![Box::new(Pf), Box::new(PfI), Box::new(FixedOrder), Box::new(RandomPriority::new(seed))];
        for mut p in policies {
            let q = Simulator::new(spec.clone()).run_to_end(p.as_mut()).unwrap().total_quality();
            prop_assert!(q <= best + 1e-12, "{} got {q} > oracle {best}", p.name());
        }
    }
}

#[test]
fn frame_lifecycle_and_ledger_agree() {
    let mut r = rng(3);
    for ep in 0..30 {
        let sc = small_scenario(r.random_range(1..=6), Phasing::ALL[ep % 3]);
        let spec = Arc::new(build_episode(&sc, r.random()).unwrap());
        let mut sim = Simulator::new(spec.clone());
        let mut policy: Box<dyn PriorityPolicy> = if ep % 2 == 0 { Box::new(Pf) } else { Box::new(PfI) };
        while !sim.is_finished() {
            let slot = sim.slot();
            let out = sim.advance_slot(policy.as_mut()).unwrap();
            assert!(sim.metrics().rb_used[slot as usize] <= spec.rb_per_slot);
            for id in &out.dropped {
                assert!(!out.completed.contains(id));
            }
        }
        let status = sim.status();
        let mut recount = 0.0;
        for (f, st) in spec.frames.iter().zip(status) {
            match st {
                FrameStatus::Dropped { slot } => {
                    assert_eq!(*slot, f.arrival_slot + spec.fdb_slots - 1);
                    recount -= f.weight;
                }
                FrameStatus::Completed { slot } => {
                    assert!(*slot >= f.arrival_slot && *slot < f.arrival_slot + spec.fdb_slots)
                }
                FrameStatus::Queued => assert!(f.arrival_slot + spec.fdb_slots > spec.horizon),
                FrameStatus::Pending => panic!("frame {:?} never admitted", f.id()),
            }
        }
        let m = sim.metrics();
        let resolved = status.iter().filter(|s| !matches!(s, FrameStatus::Queued)).count() as u32;
        let counted: u32 = m.i_total.iter().chain(&m.p_total).sum();
        assert_eq!(resolved, counted);
        assert!((m.total_quality() - recount).abs() < 1e-9);
        assert!((sim.ledger_quality() - recount).abs() < 1e-9);
    }
}

#[test]
fn equal_inputs_give_equal_metrics() {
    let sc = small_scenario(4, Phasing::Random);
    let spec = Arc::new(build_episode(&sc, 77).unwrap());
    let a = Simulator::new(spec.clone()).run_to_end(&mut PfI).unwrap().clone();
    let b = Simulator::new(Arc::new(build_episode(&sc, 77).unwrap())).run_to_end(&mut PfI).unwrap().clone();
    assert_eq!(a, b);
}

#[test]
fn hand_instance_optimum_serves_the_i_frame() {
    let inst = hand_instance();
    let best = oracle_best_quality(&inst).unwrap();
    assert_eq!(best.quality, -0.1);
    let first = &best.schedule[0];
    assert_eq!(first.len(), 1);
    assert_eq!(first[0].0.device, 1);
    let fifo = Simulator::new(spec_of(&inst)).run_to_end(&mut FixedOrder).unwrap().total_quality();
    assert_eq!(fifo, -1.0);
}
