mod oracles;

use std::time::Instant;

use proptest::prelude::*;
use restoro_core::flow::FunctionalityState;
use restoro_core::network::synth::{generate, SynthConfig};
use restoro_core::solver::{plan_cost, recovery_time, solve_exact, solve_iterative};
use restoro_core::{DamageScenario, Error, Network, SolverLimits};

#[test]
fn exact_matches_enumeration_and_bounds_the_heuristic() {
    let limits = SolverLimits::default();
    let start = Instant::now();
    for seed in 0..100 {
        let inst = oracles::random_instance(seed);
        let plan = solve_exact(&inst.net, &inst.scenario, inst.resource_cap, inst.t_max, &limits).unwrap();
        let oracle = oracles::brute_force_plan_cost(&inst).unwrap();
        assert_eq!(plan.costs.total, oracle, "seed {seed}");

        let heur = solve_iterative(&inst.net, &inst.scenario, inst.resource_cap, inst.t_max, &limits).unwrap();
        assert!(heur.costs.total >= plan.costs.total, "seed {seed}");
    }
    assert!(start.elapsed().as_secs() <= 60);
}

#[test]
fn exact_cost_does_not_increase_with_resources() {
    let limits = SolverLimits::default();
    for seed in 0..100 {
        let inst = oracles::random_instance(seed);
        let costs: Vec<f64> = (inst.resource_cap..=3)
            .map(|rc| solve_exact(&inst.net, &inst.scenario, rc, inst.t_max, &limits).unwrap().costs.total)
            .collect();
        assert!(costs.windows(2).all(|w| w[1] <= w[0]), "seed {seed}: {costs:?}");
    }
}

#[test]
fn exact_plan_is_repriced_identically() {
    let limits = SolverLimits::default();
    for seed in 0..30 {
        let inst = oracles::random_instance(seed);
        let plan = solve_exact(&inst.net, &inst.scenario, inst.resource_cap, inst.t_max, &limits).unwrap();
        let again = plan_cost(&inst.net, &inst.scenario, &plan.repair_time, inst.resource_cap, inst.t_max).unwrap();
        assert_eq!(again, plan.costs);
        assert!(plan.repairs_per_step().iter().all(|&r| r <= inst.resource_cap));
        assert_eq!(plan.states.len(), inst.t_max as usize + 1);
    }
}

#[test]
fn zero_resources_cannot_repair() {
    let inst = oracles::random_instance(3);
    assert!(matches!(
        solve_exact(&inst.net, &inst.scenario, 0, inst.t_max, &SolverLimits::default()),
        Err(Error::Infeasible(_))
    ));
}

#[test]
fn one_step_repair_when_resources_are_unlimited() {
    let net = Network::new(generate(&SynthConfig::with_sizes(&[5, 4, 5], 2))).unwrap();
    let mut s = FunctionalityState::all_up(&net);
    for v in [0, 3, 6, 9, 12] {
        s.set(v, false);
    }
    let sc = DamageScenario::new(s);
    let plan = solve_exact(&net, &sc, net.n_nodes() as u32, 4, &SolverLimits::default()).unwrap();
    assert_eq!(recovery_time(&plan), Some(1));
}

fn synth_scenario(seed: u64, bits: &[bool]) -> (Network, DamageScenario) {
    let net = Network::new(generate(&SynthConfig::with_sizes(&[8, 5, 8], seed))).unwrap();
    let mut s = FunctionalityState::all_up(&net);
    for (v, &down) in bits.iter().enumerate().take(net.n_nodes()) {
        if down {
            s.set(v, false);
        }
    }
    (net, DamageScenario::new(s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iterative_plans_are_consistent(
        seed in 0u64..500,
        bits in proptest::collection::vec(proptest::bool::weighted(0.35), 21),
        rc in 1u32..5,
        t_max in 1u32..8,
    ) {
        let (net, sc) = synth_scenario(seed, &bits);
        let plan = solve_iterative(&net, &sc, rc, t_max, &SolverLimits::default()).unwrap();
        prop_assert!(plan.repairs_per_step().iter().all(|&r| r <= rc));
        let keys: Vec<usize> = plan.repair_time.keys().copied().collect();
        prop_assert_eq!(keys, sc.damaged());
        let repaired = plan.repair_time.values().flatten().count();
        prop_assert_eq!(repaired, sc.damaged_count().min((rc * t_max) as usize));
        let again = plan_cost(&net, &sc, &plan.repair_time, rc, t_max).unwrap();
        prop_assert_eq!(&again, &plan.costs);
        prop_assert_eq!(&plan, &solve_iterative(&net, &sc, rc, t_max, &SolverLimits::default()).unwrap());
    }
}
