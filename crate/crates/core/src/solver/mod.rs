//! Time-phased restoration planning under a per-step resource cap.
//!
//! The cost of a plan over steps `0..=T` is the sum of flow, repair,
//! imbalance and preparation costs per step. Step 0 prices the damaged
//! network before any repair. Each repaired element consumes one resource in
//! its step, and a space's preparation cost is paid once, at the first repair
//! inside it.

mod exact;
mod io;
mod iterative;

use std::collections::BTreeMap;

pub use exact::solve_exact;
pub use io::{read_plan_csv, write_cost_csv, write_plan_csv};
pub use iterative::solve_iterative;

use crate::error::{Error, Result};
use crate::flow::{Evaluator, FunctionalityState};
use crate::network::Network;

/// Horizon length used when none is given.
pub const DEFAULT_T_MAX: u32 = 20;

/// Damage at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DamageScenario {
    /// Raw functionality; `false` marks a damaged element.
    pub initial: FunctionalityState,
    pub magnitude: Option<u8>,
    pub metadata: String,
}

impl DamageScenario {
    pub fn new(initial: FunctionalityState) -> Self {
        DamageScenario {
            initial,
            magnitude: None,
            metadata: String::new(),
        }
    }

    /// Canonical indices of damaged elements, ascending.
    pub fn damaged(&self) -> Vec<usize> {
        self.initial.down_elements()
    }

    pub fn damaged_count(&self) -> usize {
        self.initial.len() - self.initial.node_up.iter().chain(&self.initial.arc_up).filter(|&&u| u).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepCost {
    pub flow: f64,
    pub repair: f64,
    pub imbalance: f64,
    pub prep: f64,
}

impl StepCost {
    pub fn total(&self) -> f64 {
        self.flow + self.repair + self.imbalance + self.prep
    }
}

/// Per-step costs for `t = 0..=T`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CostBreakdown {
    pub steps: Vec<StepCost>,
    pub total: f64,
}

impl CostBreakdown {
    fn from_steps(steps: Vec<StepCost>) -> Self {
        let total = steps.iter().map(StepCost::total).sum();
        CostBreakdown { steps, total }
    }
}

/// Repair step per damaged element; `None` means never repaired.
pub type Schedule = BTreeMap<usize, Option<u32>>;

#[derive(Debug, Clone, PartialEq)]
pub struct RestorationPlan {
    pub repair_time: Schedule,
    /// Raw states for `t = 0..=T`.
    pub states: Vec<FunctionalityState>,
    pub costs: CostBreakdown,
    pub resource_cap: u32,
    pub t_max: u32,
}

impl RestorationPlan {
    /// Number of repairs in each step `1..=T`.
    pub fn repairs_per_step(&self) -> Vec<u32> {
        let mut per = vec![0; self.t_max as usize];
        for t in self.repair_time.values().flatten() {
            per[*t as usize - 1] += 1;
        }
        per
    }
}

/// Step at which the last damaged element is repaired; `None` if some element
/// is never repaired.
pub fn recovery_time(plan: &RestorationPlan) -> Option<u32> {
    plan.repair_time
        .values()
        .try_fold(0, |acc, t| t.map(|t| acc.max(t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Exact,
    Iterative,
}

impl std::str::FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SolverMode::Exact),
            "iterative" => Ok(SolverMode::Iterative),
            other => Err(Error::InvalidArgument(format!("unknown solver mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for SolverMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverMode::Exact => "exact",
            SolverMode::Iterative => "iterative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverLimits {
    /// Largest damaged count `solve_exact` accepts.
    pub exact_max_damaged: usize,
    /// Largest horizon `solve_exact` accepts.
    pub exact_max_t: u32,
    /// `solve_iterative` enumerates every subset when at most this many
    /// elements remain, and falls back to greedy + swap search above it.
    pub subset_enumeration_max: usize,
}

impl Default for SolverLimits {
    fn default() -> Self {
        SolverLimits {
            exact_max_damaged: 12,
            exact_max_t: 6,
            subset_enumeration_max: 12,
        }
    }
}

pub fn solve(
    net: &Network,
    scenario: &DamageScenario,
    resource_cap: u32,
    t_max: u32,
    mode: SolverMode,
    limits: &SolverLimits,
) -> Result<RestorationPlan> {
    match mode {
        SolverMode::Exact => solve_exact(net, scenario, resource_cap, t_max, limits),
        SolverMode::Iterative => solve_iterative(net, scenario, resource_cap, t_max, limits),
    }
}

/// Prices `schedule` and returns the per-step breakdown.
pub fn plan_cost(
    net: &Network,
    scenario: &DamageScenario,
    schedule: &Schedule,
    resource_cap: u32,
    t_max: u32,
) -> Result<CostBreakdown> {
    let mut ev = Evaluator::new(net);
    Ok(price(&mut ev, scenario, schedule, resource_cap, t_max)?.0)
}

/// Checks `schedule` and returns its cost breakdown and state trajectory.
pub(crate) fn price(
    ev: &mut Evaluator<'_>,
    scenario: &DamageScenario,
    schedule: &Schedule,
    resource_cap: u32,
    t_max: u32,
) -> Result<(CostBreakdown, Vec<FunctionalityState>)> {
    let net = ev.network();
    scenario.initial.check(net)?;
    let mut by_step: Vec<Vec<usize>> = vec![Vec::new(); t_max as usize + 1];
    for (&e, &t) in schedule {
        if e >= net.n_elements() {
            return Err(Error::UnknownElement(format!("#{e}")));
        }
        if scenario.initial.is_up(e) {
            return Err(Error::InvalidPlan(format!(
                "{} is not damaged and cannot be repaired",
                net.element_label(e)
            )));
        }
        match t {
            Some(t) if t == 0 || t > t_max => {
                return Err(Error::InvalidPlan(format!(
                    "repair step {t} of {} is outside 1..={t_max}",
                    net.element_label(e)
                )))
            }
            Some(t) => by_step[t as usize].push(e),
            None => {}
        }
    }
    if let Some((t, set)) = by_step.iter().enumerate().find(|(_, s)| s.len() > resource_cap as usize) {
        return Err(Error::InvalidPlan(format!(
            "{} repairs at step {t} exceed the resource cap {resource_cap}",
            set.len()
        )));
    }

    let mut prepared = vec![false; net.spaces().len()];
    let mut state = scenario.initial.clone();
    let mut states = Vec::with_capacity(by_step.len());
    let mut steps = Vec::with_capacity(by_step.len());
    for repairs in &by_step {
        let mut step = StepCost::default();
        for &e in repairs {
            state.set(e, true);
            step.repair += net.element_repair_cost(e);
            let s = net.element_space(e);
            if !prepared[s] {
                prepared[s] = true;
                step.prep += net.spaces()[s].prep_cost;
            }
        }
        let (flow, imbalance) = ev.cost_parts(&state);
        step.flow = flow;
        step.imbalance = imbalance;
        steps.push(step);
        states.push(state.clone());
    }
    Ok((CostBreakdown::from_steps(steps), states))
}

pub(crate) fn build_plan(
    ev: &mut Evaluator<'_>,
    scenario: &DamageScenario,
    schedule: Schedule,
    resource_cap: u32,
    t_max: u32,
) -> Result<RestorationPlan> {
    let (costs, states) = price(ev, scenario, &schedule, resource_cap, t_max)?;
    Ok(RestorationPlan {
        repair_time: schedule,
        states,
        costs,
        resource_cap,
        t_max,
    })
}

/// `a` is a strictly better cost than `b`.
pub(crate) fn better(a: f64, b: f64) -> bool {
    a < b - tie_tolerance(a, b)
}

pub(crate) fn tie_tolerance(a: f64, b: f64) -> f64 {
    1e-9 * a.abs().max(b.abs()).max(1.0)
}
