//! Rolling-horizon heuristic: solve a one-step problem per time-step.

use super::{better, build_plan, DamageScenario, RestorationPlan, Schedule, SolverLimits};
use crate::error::Result;
use crate::flow::{Evaluator, FunctionalityState};
use crate::network::Network;

/// Builds a plan step by step, each step repairing the `min(R_c, remaining)`
/// elements that minimise that step's total cost.
///
/// Selection is exhaustive while few elements remain and greedy with
/// pairwise-swap improvement otherwise. Elements still damaged when the
/// horizon ends are left unrepaired.
pub fn solve_iterative(
    net: &Network,
    scenario: &DamageScenario,
    resource_cap: u32,
    t_max: u32,
    limits: &SolverLimits,
) -> Result<RestorationPlan> {
    scenario.initial.check(net)?;
    let mut ev = Evaluator::new(net);
    let mut remaining = scenario.damaged();
    let mut schedule: Schedule = remaining.iter().map(|&e| (e, None)).collect();
    let mut step = Step {
        state: scenario.initial.clone(),
        prepared: vec![false; net.spaces().len()],
    };

    for t in 1..=t_max {
        let k = (resource_cap as usize).min(remaining.len());
        if k == 0 {
            break;
        }
        let chosen = if remaining.len() <= limits.subset_enumeration_max {
            step.best_subset(&mut ev, &remaining, k)
        } else {
            step.greedy_swap(&mut ev, &remaining, k)
        };
        for &e in &chosen {
            step.state.set(e, true);
            step.prepared[net.element_space(e)] = true;
            schedule.insert(e, Some(t));
        }
        remaining.retain(|e| !chosen.contains(e));
    }
    build_plan(&mut ev, scenario, schedule, resource_cap, t_max)
}

struct Step {
    state: FunctionalityState,
    prepared: Vec<bool>,
}

impl Step {
    /// Next-step cost of repairing `set`: operating + repair + preparation.
    fn cost(&self, ev: &mut Evaluator<'_>, set: &[usize]) -> f64 {
        let net = ev.network();
        let mut state = self.state.clone();
        let mut extra = 0.0;
        let mut newly: Vec<usize> = Vec::new();
        for &e in set {
            state.set(e, true);
            extra += net.element_repair_cost(e);
            let s = net.element_space(e);
            if !self.prepared[s] && !newly.contains(&s) {
                newly.push(s);
                extra += net.spaces()[s].prep_cost;
            }
        }
        ev.cost(&state) + extra
    }

    fn best_subset(&self, ev: &mut Evaluator<'_>, remaining: &[usize], k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..k).collect();
        let mut best: Option<(f64, Vec<usize>)> = None;
        loop {
            let set: Vec<usize> = idx.iter().map(|&i| remaining[i]).collect();
            let c = self.cost(ev, &set);
            if best.as_ref().is_none_or(|(b, _)| better(c, *b)) {
                best = Some((c, set));
            }
            // next k-combination in lexicographic order
            let n = remaining.len();
            let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
                break;
            };
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
        best.map(|(_, s)| s).unwrap_or_default()
    }

    fn greedy_swap(&self, ev: &mut Evaluator<'_>, remaining: &[usize], k: usize) -> Vec<usize> {
        let mut set: Vec<usize> = Vec::with_capacity(k);
        let mut current = f64::INFINITY;
        for _ in 0..k {
            let mut pick: Option<(f64, usize)> = None;
            for &e in remaining {
                if set.contains(&e) {
                    continue;
                }
                set.push(e);
                let c = self.cost(ev, &set);
                set.pop();
                if pick.is_none_or(|(b, _)| better(c, b)) {
                    pick = Some((c, e));
                }
            }
            let (c, e) = pick.expect("k <= remaining");
            set.push(e);
            current = c;
        }
        set.sort_unstable();

        loop {
            let mut best_move: Option<(f64, usize, usize)> = None;
            for i in 0..set.len() {
                for &e in remaining {
                    if set.contains(&e) {
                        continue;
                    }
                    let mut candidate = set.clone();
                    candidate[i] = e;
                    let c = self.cost(ev, &candidate);
                    let bar = best_move.map_or(current, |(b, _, _)| b);
                    if better(c, bar) {
                        best_move = Some((c, i, e));
                    }
                }
            }
            match best_move {
                Some((c, i, e)) => {
                    set[i] = e;
                    set.sort_unstable();
                    current = c;
                }
                None => return set,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::synth::{generate, SynthConfig};
    use crate::solver::tests::{damaged, net};
    use crate::solver::{recovery_time, solve_exact};

    #[test]
    fn never_beats_the_exact_solver() {
        let net = net();
        let sc = damaged(&net, &[0, 2, 3, 5]);
        let limits = SolverLimits::default();
        let exact = solve_exact(&net, &sc, 1, 4, &limits).unwrap();
        let heur = solve_iterative(&net, &sc, 1, 4, &limits).unwrap();
        assert!(heur.costs.total >= exact.costs.total);
    }

    #[test]
    fn unlimited_resources_repair_everything_at_once() {
        let net = net();
        let all: Vec<usize> = (0..net.n_elements()).collect();
        let sc = damaged(&net, &all);
        let plan = solve_iterative(&net, &sc, net.n_elements() as u32, 5, &SolverLimits::default()).unwrap();
        assert!(plan.repair_time.values().all(|t| *t == Some(1)));
        assert_eq!(recovery_time(&plan), Some(1));
        let priced = crate::solver::plan_cost(&net, &sc, &plan.repair_time, net.n_elements() as u32, 5).unwrap();
        assert_eq!(priced, plan.costs);
    }

    #[test]
    fn horizon_exhaustion_leaves_elements_unrepaired() {
        let net = net();
        let sc = damaged(&net, &[0, 1, 2, 3]);
        let plan = solve_iterative(&net, &sc, 1, 2, &SolverLimits::default()).unwrap();
        assert_eq!(plan.repair_time.values().filter(|t| t.is_none()).count(), 2);
        assert_eq!(recovery_time(&plan), None);
    }

    #[test]
    fn greedy_path_respects_cap_and_is_deterministic() {
        let net = Network::new(generate(&SynthConfig::with_sizes(&[10, 6, 10], 4))).unwrap();
        let down: Vec<usize> = (0..net.n_nodes()).step_by(2).collect();
        let sc = damaged(&net, &down);
        let limits = SolverLimits {
            subset_enumeration_max: 4,
            ..Default::default()
        };
        let a = solve_iterative(&net, &sc, 3, 20, &limits).unwrap();
        let b = solve_iterative(&net, &sc, 3, 20, &limits).unwrap();
        assert_eq!(a, b);
        assert!(a.repairs_per_step().iter().all(|&r| r <= 3));
        assert_eq!(recovery_time(&a), Some(down.len().div_ceil(3) as u32));
    }
}
