//! Depth-first branch-and-bound over per-step repair subsets.

use std::collections::HashMap;

use super::{better, build_plan, tie_tolerance, DamageScenario, RestorationPlan, Schedule, SolverLimits};
use crate::error::{Error, Result};
use crate::flow::{Evaluator, FunctionalityState};
use crate::network::Network;

/// Globally least-cost plan that repairs every damaged element within
/// `t_max` steps, at most `resource_cap` repairs per step.
///
/// Among equal-cost optima the plan whose repair-time vector (in canonical
/// element order) is lexicographically smallest is returned.
pub fn solve_exact(
    net: &Network,
    scenario: &DamageScenario,
    resource_cap: u32,
    t_max: u32,
    limits: &SolverLimits,
) -> Result<RestorationPlan> {
    scenario.initial.check(net)?;
    let damaged = scenario.damaged();
    let d = damaged.len();
    if d > limits.exact_max_damaged || d > 31 {
        return Err(Error::Capability(format!(
            "{d} damaged elements exceed the exact-mode limit of {}",
            limits.exact_max_damaged
        )));
    }
    if t_max > limits.exact_max_t || t_max > 255 {
        return Err(Error::Capability(format!(
            "horizon {t_max} exceeds the exact-mode limit of {}",
            limits.exact_max_t
        )));
    }
    if d as u64 > u64::from(resource_cap) * u64::from(t_max) {
        return Err(Error::Infeasible(format!(
            "{d} damaged elements cannot all be repaired in {t_max} steps with {resource_cap} resources per step"
        )));
    }

    let mut ev = Evaluator::new(net);
    let times = {
        let mut search = Search::new(net, &mut ev, &scenario.initial, damaged.clone(), resource_cap as usize, t_max as usize);
        let acc = search.op(0);
        search.dfs(1, 0, acc);
        search.best.expect("a feasible schedule exists").1
    };
    let schedule: Schedule = damaged
        .iter()
        .zip(&times)
        .map(|(&e, &t)| (e, Some(u32::from(t))))
        .collect();
    build_plan(&mut ev, scenario, schedule, resource_cap, t_max)
}

struct Search<'n, 'e> {
    ev: &'e mut Evaluator<'n>,
    initial: &'e FunctionalityState,
    damaged: Vec<usize>,
    repair: Vec<f64>,
    space: Vec<usize>,
    prep: Vec<f64>,
    rc: usize,
    t_max: usize,
    op_cache: Vec<Option<f64>>,
    /// Lower bound on the operating cost of any state reachable from a mask.
    floor: Floor,
    /// Repair step per damaged element, 0 while unrepaired.
    times: Vec<u8>,
    best: Option<(f64, Vec<u8>)>,
    seen: HashMap<(usize, u32), (f64, Vec<u8>)>,
}

enum Floor {
    /// Operating cost is monotone: the fully repaired state is cheapest.
    Full(f64),
    /// Minimum over supersets, precomputed for every mask.
    Superset(Vec<f64>),
}

impl<'n, 'e> Search<'n, 'e> {
    fn new(
        net: &'n Network,
        ev: &'e mut Evaluator<'n>,
        initial: &'e FunctionalityState,
        damaged: Vec<usize>,
        rc: usize,
        t_max: usize,
    ) -> Self {
        let d = damaged.len();
        let mut s = Search {
            ev,
            initial,
            repair: damaged.iter().map(|&e| net.element_repair_cost(e)).collect(),
            space: damaged.iter().map(|&e| net.element_space(e)).collect(),
            prep: net.spaces().iter().map(|s| s.prep_cost).collect(),
            damaged,
            rc,
            t_max,
            op_cache: vec![None; 1 << d],
            floor: Floor::Full(0.0),
            times: vec![0; d],
            best: None,
            seen: HashMap::new(),
        };
        let full = (1u32 << d) - 1;
        s.floor = if net.has_demand_completion() {
            let mut f: Vec<f64> = (0..=full).map(|m| s.op(m)).collect();
            for bit in 0..d {
                for m in 0..=full {
                    if m & (1 << bit) == 0 {
                        f[m as usize] = f[m as usize].min(f[(m | 1 << bit) as usize]);
                    }
                }
            }
            Floor::Superset(f)
        } else {
            Floor::Full(s.op(full))
        };
        s
    }

    fn op(&mut self, mask: u32) -> f64 {
        if let Some(c) = self.op_cache[mask as usize] {
            return c;
        }
        let mut state = self.initial.clone();
        for (i, &e) in self.damaged.iter().enumerate() {
            if mask & (1 << i) != 0 {
                state.set(e, true);
            }
        }
        let c = self.ev.cost(&state);
        self.op_cache[mask as usize] = Some(c);
        c
    }

    fn floor(&self, mask: u32) -> f64 {
        match &self.floor {
            Floor::Full(c) => *c,
            Floor::Superset(f) => f[mask as usize],
        }
    }

    fn prepared(&self, mask: u32) -> Vec<usize> {
        let mut spaces: Vec<usize> = (0..self.damaged.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| self.space[i])
            .collect();
        spaces.sort_unstable();
        spaces.dedup();
        spaces
    }

    /// Repair plus first-time preparation cost of the elements in `set`, given
    /// the spaces already prepared.
    fn repair_cost(&self, set: u32, prepared: &[usize]) -> f64 {
        let mut cost = 0.0;
        let mut newly: Vec<usize> = Vec::new();
        for i in 0..self.damaged.len() {
            if set & (1 << i) == 0 {
                continue;
            }
            cost += self.repair[i];
            let s = self.space[i];
            if prepared.binary_search(&s).is_err() && !newly.contains(&s) {
                newly.push(s);
                cost += self.prep[s];
            }
        }
        cost
    }

    fn offer(&mut self, total: f64) {
        let take = match &self.best {
            None => true,
            Some((b, key)) => better(total, *b) || (!better(*b, total) && self.times < *key),
        };
        if take {
            self.best = Some((total, self.times.clone()));
        }
    }

    fn dfs(&mut self, t: usize, mask: u32, acc: f64) {
        let d = self.damaged.len();
        let full = (1u32 << d) - 1;
        let steps_left = (self.t_max + 1).saturating_sub(t);
        if mask == full {
            let total = acc + steps_left as f64 * self.op(full);
            self.offer(total);
            return;
        }
        let unrepaired: Vec<usize> = (0..d).filter(|i| mask & (1 << i) == 0).collect();
        if unrepaired.len() > self.rc * steps_left {
            return;
        }

        let prepared = self.prepared(mask);
        let bound = acc + self.repair_cost(full & !mask, &prepared) + steps_left as f64 * self.floor(mask);
        if let Some((b, _)) = &self.best {
            if bound > b + tie_tolerance(bound, *b) {
                return;
            }
        }
        match self.seen.get(&(t, mask)) {
            Some((a, key)) if acc > a + tie_tolerance(acc, *a) || (!better(acc, *a) && self.times >= *key) => return,
            _ => {
                self.seen.insert((t, mask), (acc, self.times.clone()));
            }
        }

        let min_take = unrepaired.len().saturating_sub(self.rc * (steps_left - 1));
        let mut subsets = Vec::new();
        collect_subsets(&unrepaired, 0, 0, 0, self.rc.min(unrepaired.len()), &mut subsets);
        for set in subsets {
            if (set.count_ones() as usize) < min_take {
                continue;
            }
            let next = mask | set;
            let step = self.op(next) + self.repair_cost(set, &prepared);
            for i in 0..d {
                if set & (1 << i) != 0 {
                    self.times[i] = t as u8;
                }
            }
            self.dfs(t + 1, next, acc + step);
            for i in 0..d {
                if set & (1 << i) != 0 {
                    self.times[i] = 0;
                }
            }
        }
    }
}

/// Subsets of `items` with at most `max` members, lower indices included first.
fn collect_subsets(items: &[usize], pos: usize, set: u32, size: usize, max: usize, out: &mut Vec<u32>) {
    if pos == items.len() {
        out.push(set);
        return;
    }
    if size < max {
        collect_subsets(items, pos + 1, set | 1 << items[pos], size + 1, max, out);
    }
    collect_subsets(items, pos + 1, set, size, max, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::recovery_time;
    use crate::solver::tests::{damaged, net};

    #[test]
    fn undamaged_scenario_gives_empty_plan() {
        let net = net();
        let plan = solve_exact(&net, &damaged(&net, &[]), 1, 3, &SolverLimits::default()).unwrap();
        assert!(plan.repair_time.is_empty());
        assert_eq!(recovery_time(&plan), Some(0));
    }

    #[test]
    fn dominant_deficit_repairs_immediately() {
        let net = net();
        // water:1 is a demand node with deficit penalty 10/unit vs repair cost 10
        let plan = solve_exact(&net, &damaged(&net, &[1]), 1, 4, &SolverLimits::default()).unwrap();
        assert_eq!(plan.repair_time[&1], Some(1));
    }

    #[test]
    fn limits_and_infeasibility_are_reported() {
        let net = net();
        let limits = SolverLimits {
            exact_max_damaged: 2,
            ..Default::default()
        };
        assert!(matches!(
            solve_exact(&net, &damaged(&net, &[0, 1, 2]), 3, 3, &limits),
            Err(Error::Capability(_))
        ));
        assert!(matches!(
            solve_exact(&net, &damaged(&net, &[0]), 1, 7, &SolverLimits::default()),
            Err(Error::Capability(_))
        ));
        assert!(matches!(
            solve_exact(&net, &damaged(&net, &[0, 1, 2]), 1, 2, &SolverLimits::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn subsets_respect_size_and_order() {
        let mut out = Vec::new();
        collect_subsets(&[0, 1, 2], 0, 0, 0, 2, &mut out);
        assert_eq!(out, vec![0b011, 0b101, 0b001, 0b110, 0b010, 0b100, 0]);
    }
}
