use ehcr_core::instant::{mu_bounds, optimize_mu_local, solve_instant_best_effort};
use ehcr_core::objective::check_feasibility;
use ehcr_core::search::uniform_grid;
use ehcr_core::{
    evaluate, gap, generate_scenario, solve_oracle, Allocation, OracleConfig, Scenario, ScenarioParams, SolveError,
};

fn cfg(points: usize) -> OracleConfig {
    OracleConfig { mu_grid_points: points, ..OracleConfig::default() }
}

/// Absolute objective change one grid step around the oracle's ratios.
fn grid_step(report: &ehcr_core::SolveReport) -> f64 {
    report.grid_tolerance_pct.unwrap() / 100.0 * report.total().abs()
}

#[test]
fn enumerates_every_assignment() {
    for (k, n) in [(1, 3), (2, 4), (3, 3), (4, 5), (2, 9)] {
        let s = generate_scenario(k as u64 + n as u64, k, n, 1, &ScenarioParams::default()).unwrap();
        let sol = solve_oracle(&s, &cfg(16)).unwrap();
        assert_eq!(sol.report.assignments_enumerated, Some((k as u64).pow(n as u32)));
        assert!(sol.allocation.is_complete());
        assert!(sol.report.feasibility.feasible);
    }
}

#[test]
fn never_loses_to_the_heuristic() {
    let p = ScenarioParams::default();
    for seed in 0..20u64 {
        for (k, n, eta) in [(2, 4, 0.0), (2, 4, 1e9), (3, 5, 3e9)] {
            let mut s = generate_scenario(seed, k, n, 1, &p).unwrap();
            s.set_eta(eta);
            let i = solve_instant_best_effort(&s).unwrap();
            let o = solve_oracle(&s, &OracleConfig::default()).unwrap();
            if i.report.feasibility.feasible {
                assert!(
                    o.report.total() >= i.report.total() - grid_step(&o.report),
                    "seed {seed} K{k} N{n}: oracle {} instant {}",
                    o.report.total(),
                    i.report.total()
                );
                assert!(gap(&i.report, &o.report).unwrap() >= -o.report.grid_tolerance_pct.unwrap());
            }
        }
    }
}

#[test]
fn refining_a_nested_grid_never_hurts() {
    let p = ScenarioParams::default();
    for seed in 0..10u64 {
        let mut s = generate_scenario(seed, 3, 4, 1, &p).unwrap();
        s.set_eta([0.0, 1e9][seed as usize % 2]);
        let coarse = solve_oracle(&s, &cfg(129)).unwrap().report.total();
        let fine = solve_oracle(&s, &cfg(257)).unwrap().report.total();
        assert!(fine >= coarse * (1.0 - 1e-9), "seed {seed}: {fine} < {coarse}");
    }
}

/// Test-side exhaustive search: every assignment times every pair of grid
/// ratios, scored with the public evaluator.
fn brute_force(s: &Scenario, points: usize) -> (f64, Vec<usize>, Vec<f64>) {
    assert_eq!(s.num_devices(), 2);
    let n = s.num_channels();
    let grids: Vec<Vec<f64>> = (0..2)
        .map(|k| {
            let (lo, hi) = mu_bounds(s, k).unwrap();
            uniform_grid(lo, hi, points).collect()
        })
        .collect();
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for code in 0..1usize << n {
        let owners: Vec<usize> = (0..n).map(|c| code >> (n - 1 - c) & 1).collect();
        for &m0 in &grids[0] {
            for &m1 in &grids[1] {
                let a = Allocation::from_owners(&owners, vec![m0, m1]);
                if !check_feasibility(s, &a).feasible {
                    continue;
                }
                let v = evaluate(s, &a).unwrap().total;
                if best.as_ref().is_none_or(|b| v > b.0) {
                    best = Some((v, owners.clone(), vec![m0, m1]));
                }
            }
        }
    }
    best.unwrap()
}

#[test]
fn strict_mode_matches_a_test_side_brute_force() {
    let p = ScenarioParams::default();
    for seed in [1u64, 2, 3] {
        let mut s = generate_scenario(seed, 2, 4, 1, &p).unwrap();
        s.set_eta(2e9);
        s.ap_energy_budget = 2.0 * 1.4e-3;
        let (value, owners, mu) = brute_force(&s, 24);
        let strict = OracleConfig { strict: true, ..cfg(24) };
        let sol = solve_oracle(&s, &strict).unwrap();
        let got: Vec<usize> = (0..4).map(|c| sol.allocation.owner(c).unwrap()).collect();
        assert_eq!(sol.report.total(), value, "seed {seed}");
        assert_eq!(got, owners, "seed {seed}");
        assert_eq!(sol.allocation.mu, mu, "seed {seed}");
    }
}

#[test]
fn coordinate_descent_tracks_the_joint_search_under_a_tight_budget() {
    let p = ScenarioParams::default();
    for seed in 0..6u64 {
        let mut s = generate_scenario(seed, 3, 4, 1, &p).unwrap();
        s.set_eta(1e10);
        s.ap_energy_budget = 3.0 * 1.4e-3;
        let cd = solve_oracle(&s, &cfg(64)).unwrap().report;
        let joint = solve_oracle(&s, &OracleConfig { strict: true, ..cfg(64) }).unwrap().report;
        assert!(joint.total() >= cd.total() * (1.0 - 1e-12));
        assert!(joint.total() - cd.total() <= grid_step(&joint), "seed {seed}");
    }
}

#[test]
fn lone_user_takes_everything() {
    let s = generate_scenario(4, 1, 2, 1, &ScenarioParams::default()).unwrap();
    let sol = solve_oracle(&s, &OracleConfig::default()).unwrap();
    assert_eq!(sol.allocation.channels_of(0).count(), 2);
    let local = optimize_mu_local(&s, &sol.allocation, 0).unwrap();
    let (lo, hi) = mu_bounds(&s, 0).unwrap();
    let step = (hi - lo) / 255.0;
    assert!((sol.allocation.mu[0] - local).abs() <= step);
}

/// Two users, two channels; user 0 has the better gain on both, so without a
/// rate floor it would take both.
fn split_instance(min_rate_coeff: f64) -> Scenario {
    let mut p = ScenarioParams::default();
    p.min_rate_coeff = min_rate_coeff;
    let mut s = generate_scenario(9, 2, 2, 1, &p).unwrap();
    s.devices[0].gains = vec![1e-5, 1e-5];
    s.devices[1].gains = vec![1e-7, 1e-7];
    s.devices[1].harvest_rate = s.devices[0].harvest_rate;
    s
}

/// Best grid value of a user holding `channels` channels of gain `gain`,
/// recomputed from the closed forms.
fn hand_value(s: &Scenario, k: usize, channels: usize, gain: f64) -> Option<f64> {
    let d = &s.devices[k];
    let t = s.timing;
    let (lo, hi) = mu_bounds(s, k).unwrap();
    uniform_grid(lo, hi, 256)
        .filter_map(|mu| {
            let e_tr = d.residual_energy + d.harvest_rate * mu * t.data - 2.0 * d.sensing_energy;
            let t_tr = (1.0 - mu) * t.data;
            let h = gain / (s.snr_gap * (s.noise_power + d.received_interference));
            let rate = channels as f64 * t_tr / t.slot * s.bandwidth * (1.0 + h * e_tr / t_tr).log2();
            if rate < s.min_rate(k) {
                return None;
            }
            let denom = d.harvest_rate * mu * t.data + d.residual_energy - d.sensing_energy + d.idle_energy(&t);
            Some(rate / denom)
        })
        .fold(None, |b: Option<f64>, v| Some(b.map_or(v, |b| b.max(v))))
}

#[test]
fn rate_floor_forces_a_split() {
    let s = split_instance(0.1);
    // both-to-one assignments leave the other user at rate zero
    assert!(s.min_rate(0) > 0.0);
    let split = hand_value(&s, 0, 1, 1e-5).unwrap() + hand_value(&s, 1, 1, 1e-7).unwrap();
    let sol = solve_oracle(&s, &OracleConfig::default()).unwrap();
    assert_eq!(sol.allocation.owner(0), Some(0));
    assert_eq!(sol.allocation.owner(1), Some(1));
    assert!((sol.report.total() - split).abs() <= 1e-9 * split);
    assert!(sol.report.feasibility.get(ehcr_core::objective::ConstraintId::C1).slack >= 0.0);

    let free = solve_oracle(&split_instance(0.0), &OracleConfig::default()).unwrap();
    assert_eq!(free.allocation.channels_of(0).count(), 2);
}

#[test]
fn refuses_oversized_or_misconfigured_runs() {
    let s = generate_scenario(1, 4, 12, 1, &ScenarioParams::default()).unwrap();
    assert!(matches!(solve_oracle(&s, &OracleConfig::default()), Err(SolveError::InstanceTooLarge { .. })));
    let s = generate_scenario(1, 4, 3, 1, &ScenarioParams::default()).unwrap();
    let strict = OracleConfig { strict: true, ..OracleConfig::default() };
    assert!(matches!(solve_oracle(&s, &strict), Err(SolveError::InvalidConfig(_))));
    assert!(matches!(solve_oracle(&s, &cfg(4)), Err(SolveError::InvalidConfig(_))));
}

#[test]
fn unreachable_floor_means_no_solution() {
    let mut p = ScenarioParams::default();
    p.min_rate_coeff = 1e3;
    let s = generate_scenario(1, 2, 3, 1, &p).unwrap();
    assert!(matches!(
        solve_oracle(&s, &OracleConfig::default()),
        Err(SolveError::NoFeasibleSolution { enumerated: 8 })
    ));
}

#[test]
fn gap_arithmetic() {
    let s = generate_scenario(7, 2, 4, 1, &ScenarioParams::default()).unwrap();
    let o = solve_oracle(&s, &OracleConfig::default()).unwrap().report;
    assert_eq!(gap(&o, &o).unwrap(), 0.0);
    let mut one = o.clone();
    one.objective.total = 1.0;
    one.grid_tolerance_pct = Some(0.1);
    let mut i = one.clone();
    i.objective.total = 0.95;
    assert!((gap(&i, &one).unwrap() - 5.0).abs() < 1e-12);
    i.objective.total = 1.5;
    assert_eq!(gap(&i, &one).unwrap(), -0.1);
    let other = generate_scenario(8, 2, 4, 1, &ScenarioParams::default()).unwrap();
    let o2 = solve_oracle(&other, &OracleConfig::default()).unwrap().report;
    assert!(matches!(gap(&o, &o2), Err(SolveError::MismatchedScenario { .. })));
}
