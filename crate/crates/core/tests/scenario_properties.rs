use ehcr_core::{generate_scenario, Scenario, ScenarioParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn generated_scenarios_are_valid(seed in any::<u64>(), k in 1usize..7, n in 1usize..13, m in 1usize..4) {
        let s = generate_scenario(seed, k, n, m, &ScenarioParams::default()).unwrap();
        prop_assert!(s.validate().is_ok());
        prop_assert_eq!((s.num_devices(), s.num_channels(), s.num_pus()), (k, n, m));
        for d in &s.devices {
            prop_assert!(d.gains.iter().all(|g| g.is_finite() && *g > 0.0));
            prop_assert!((0.02..0.10).contains(&d.harvest_rate));
            prop_assert!(d.cross_interference.iter().flatten().all(|g| g.is_finite() && *g > 0.0));
        }
        let back = Scenario::from_json(&s.to_json()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn larger_instances_extend_smaller_ones(seed in any::<u64>()) {
        let p = ScenarioParams::default();
        let small = generate_scenario(seed, 2, 4, 1, &p).unwrap();
        let big = generate_scenario(seed, 4, 8, 1, &p).unwrap();
        for k in 0..2 {
            prop_assert_eq!(&big.devices[k].gains[..4], &small.devices[k].gains[..]);
            prop_assert_eq!(big.devices[k].harvest_rate, small.devices[k].harvest_rate);
        }
    }
}

#[test]
fn zero_sizes_are_rejected() {
    let p = ScenarioParams::default();
    assert!(generate_scenario(1, 0, 4, 1, &p).is_err());
    assert!(generate_scenario(1, 2, 0, 1, &p).is_err());
}

#[test]
fn bad_overrides_are_rejected() {
    let mut p = ScenarioParams::default();
    p.harvest_rate_range = (0.1, 0.05);
    assert!(generate_scenario(1, 2, 4, 1, &p).is_err());
    let mut p = ScenarioParams::default();
    p.eta_per_device = Some(vec![1.0]);
    assert!(generate_scenario(1, 2, 4, 1, &p).is_err());
}
