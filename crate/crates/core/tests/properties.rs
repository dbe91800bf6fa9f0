use proptest::prelude::*;

use fockboot::eta_opt::{objective_value, EtaObjective};
use fockboot::fock_prob::{p_grow, p_sub};
use fockboot::growth_sim::{SimConfig, Simulator, StrategyKind};
use fockboot::{PrecisionPolicy, Reflectivity};

fn strategy() -> impl Strategy<Value = StrategyKind> {
    prop_oneof![
        Just(StrategyKind::Balanced),
        Just(StrategyKind::Modesty),
        Just(StrategyKind::Random),
        (0usize..4).prop_map(|extra| StrategyKind::Frugal { d_prime: 9 + extra }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distributions_are_normalized(m in 0usize..26, n in 0usize..26, eta in 0.0f64..=1.0) {
        prop_assume!(m + n > 0);
        let eta = Reflectivity::new(eta).unwrap();
        let dist = PrecisionPolicy::default().distribution(m, n, &eta).unwrap();
        prop_assert!((dist.total() - 1.0).abs() < 1e-10);
        prop_assert!(dist.probs.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn vacuum_ancilla_is_binomial(m in 1usize..26, s_frac in 0.0f64..=1.0, eta in 0.0f64..=1.0) {
        let s = ((m as f64) * s_frac).round() as usize;
        let r = Reflectivity::new(eta).unwrap();
        let u = eta * eta;
        let binom = (0..s).fold(1.0, |acc, k| acc * (m - k) as f64 / (k + 1) as f64);
        let expected = binom * u.powi(s as i32) * (1.0 - u).powi((m - s) as i32);
        prop_assert!((p_sub(s, m, 0, &r).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn equal_inputs_are_mirror_symmetric(m in 1usize..11, eta in 0.0f64..=1.0) {
        let a = Reflectivity::new(eta).unwrap();
        let b = Reflectivity::new((1.0 - eta * eta).sqrt()).unwrap();
        let ga = p_grow(m, m, &a, true).unwrap();
        let gb = p_grow(m, m, &b, true).unwrap();
        prop_assert!((ga - gb).abs() < 1e-10);
    }

    #[test]
    fn objectives_stay_in_range(m in 1usize..12, n in 1usize..12, d in 2usize..30, eta in 0.0f64..=1.0) {
        let r = Reflectivity::new(eta).unwrap();
        let obj = EtaObjective::frugal_for(d, m, n);
        let v = objective_value(obj, m, n, &r).unwrap();
        let cap = match obj {
            EtaObjective::FrugalBelow(_) => (m + n - m.max(n)) as f64,
            _ => 1.0,
        };
        prop_assert!(v >= -1e-12 && v <= cap + 1e-12);
    }

    #[test]
    fn simulation_conserves_photons(
        strategy in strategy(),
        recycled in any::<bool>(),
        seed in any::<u64>(),
        x in 1usize..4,
    ) {
        let cfg = SimConfig::new(9, strategy)
            .with_steps(1000)
            .with_seed(seed)
            .with_recycling(recycled)
            .with_source_size(x);
        let plan = cfg.plan();
        let mut sim = Simulator::new(cfg, &plan).unwrap();
        for _ in 0..400 {
            let out = sim.step().unwrap();
            prop_assert_eq!(out.m + out.n, out.s + out.result_size);
            prop_assert!(recycled || out.s == 0 || !out.kept);
            prop_assert!(sim.ledger().balances(sim.buckets().stored_photons()));
            prop_assert!(sim.buckets().occupied().all(|(size, _)| size < 9));
        }
    }
}
