//! Randomized invariant checks across the engine, allocator, and admission
//! layers.

use proptest::prelude::*;

use fuzzyqos::admission::{AdmissionMode, FlowRequest, LinkState};
use fuzzyqos::allocator::{
    build_frb, compute_allocations, compute_inputs, default_rule_table, AllocationPolicySet,
};
use fuzzyqos::fuzzy::{GaussianMf, RuleBase};

fn req(id: u64, class: usize, bw: f64) -> FlowRequest {
    FlowRequest { id, class, bandwidth_kbps: bw, arrival_s: 0.0, lifetime_s: 1.0 }
}

proptest! {
    #[test]
    fn membership_grades_stay_in_unit_interval(
        mean in -1e6f64..1e6,
        sigma in 1e-6f64..1e6,
        x in -1e9f64..1e9,
    ) {
        let mf = GaussianMf::new(mean, sigma).unwrap();
        let g = mf.grade(x).unwrap();
        prop_assert!((0.0..=1.0).contains(&g));
        prop_assert_eq!(mf.grade(mean).unwrap(), 1.0);
    }

    #[test]
    fn inference_output_stays_in_universe(
        a in -0.5f64..1.5,
        b in -0.5f64..1.5,
        c in -0.5f64..1.5,
    ) {
        // out-of-universe inputs are clamped, outputs must stay in [0, 1]
        let rb = default_rule_table(3).unwrap();
        let out = rb.infer(&[a, b, c]).unwrap();
        for y in out {
            prop_assert!((0.0..=1.0).contains(&y));
        }
    }

    #[test]
    fn rule_order_never_changes_inference(
        seed in any::<u64>(),
        a in 0f64..1.0,
        b in 0f64..1.0,
        c in 0f64..1.0,
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let rb = default_rule_table(3).unwrap();
        let mut rules = rb.rules().to_vec();
        rules.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled =
            RuleBase::new(rb.inputs().to_vec(), rb.outputs().to_vec(), rules, rb.resolution())
                .unwrap();
        let x = rb.infer(&[a, b, c]).unwrap();
        let y = shuffled.infer(&[a, b, c]).unwrap();
        for (p, q) in x.iter().zip(&y) {
            prop_assert_eq!(p.to_bits(), q.to_bits());
        }
    }

    #[test]
    fn thresholds_bracket_base_share_and_capacity(
        s1 in 0.1f64..0.8,
        s2 in 0.1f64..0.8,
        l1 in 0f64..1.0,
        l2 in 0f64..1.0,
        l3 in 0f64..1.0,
    ) {
        let s3 = 0.1;
        let policy = AllocationPolicySet::new(1000.0, vec![s1, s2, s3]).unwrap();
        let frb = build_frb(&policy, None).unwrap();
        let measured = vec![
            l1 * policy.base_kbps(0),
            l2 * policy.base_kbps(1),
            l3 * policy.base_kbps(2),
        ];
        let inputs = compute_inputs(&measured, &policy).unwrap();
        let alloc = compute_allocations(&frb, &inputs).unwrap();
        for j in 0..3 {
            prop_assert!(alloc.threshold_kbps[j] >= policy.base_kbps(j) - 1e-9);
            prop_assert!(alloc.threshold_kbps[j] <= policy.total_kbps() + 1e-9);
        }
    }

    #[test]
    fn admitted_load_never_exceeds_capacity(
        ops in prop::collection::vec((0usize..3, 1u32..512, prop::bool::ANY), 1..200),
    ) {
        let capacity = 4000.0;
        let mut link = LinkState::new(capacity, 3).unwrap();
        let mut live: Vec<u64> = Vec::new();
        for (i, (class, bw, release_one)) in ops.iter().enumerate() {
            let d = link
                .admit(&req(i as u64, *class, *bw as f64), AdmissionMode::ClassAgnostic, &[])
                .unwrap();
            if d.accepted() {
                live.push(i as u64);
            }
            prop_assert!(link.total_kbps() <= capacity + 1e-9);
            if *release_one && !live.is_empty() {
                link.release(live.remove(0)).unwrap();
            }
            // aggregates match the flow table exactly
            prop_assert_eq!(link.recompute_per_class(), link.per_class_kbps().to_vec());
        }
    }

    #[test]
    fn stricter_modes_accept_subsets(
        class in 0usize..3,
        bw in 1u32..512,
        preload in prop::collection::vec((0usize..3, 1u32..512), 0..30),
    ) {
        // identical state: whenever the fixed partition accepts, so do the
        // class-agnostic check and any adaptive limits >= the base shares
        let base = [1200.0, 1600.0, 1200.0];
        let wider = [1500.0, 2000.0, 1500.0];
        let mut link = LinkState::new(4000.0, 3).unwrap();
        for (i, (c, b)) in preload.iter().enumerate() {
            let _ = link.admit(&req(i as u64, *c, *b as f64), AdmissionMode::BasePolicy, &base).unwrap();
        }
        let probe = req(10_000, class, bw as f64);
        let strict = link.clone().admit(&probe, AdmissionMode::BasePolicy, &base).unwrap();
        if strict.accepted() {
            prop_assert!(link.clone().admit(&probe, AdmissionMode::ClassAgnostic, &[]).unwrap().accepted());
            prop_assert!(link.clone().admit(&probe, AdmissionMode::FrbAdaptive, &wider).unwrap().accepted());
        }
    }
}
