//! Operating cost of a functionality state.
//!
//! Each layer is priced by a min-cost flow in which every node may shed
//! surplus (penalty `M+`) or import deficit (penalty `M-`) through a virtual
//! balance node, so every instance is feasible. Interdependency links,
//! endpoint rules on arcs and demand-completion flags are resolved first into
//! an effective state by monotone deactivation.

mod mcf;

use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::network::Network;
use mcf::MinCostFlow;

/// Absolute tolerance applied to normalised flow quantities.
pub const TOLERANCE: f64 = 1e-9;

/// Binary up/down state of every node and arc, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionalityState {
    pub node_up: Vec<bool>,
    pub arc_up: Vec<bool>,
}

impl FunctionalityState {
    pub fn all_up(net: &Network) -> Self {
        FunctionalityState {
            node_up: vec![true; net.n_nodes()],
            arc_up: vec![true; net.n_arcs()],
        }
    }

    pub fn all_down(net: &Network) -> Self {
        FunctionalityState {
            node_up: vec![false; net.n_nodes()],
            arc_up: vec![false; net.n_arcs()],
        }
    }

    pub fn check(&self, net: &Network) -> Result<()> {
        if self.node_up.len() != net.n_nodes() {
            return Err(Error::Dimension {
                what: "node states",
                expected: net.n_nodes(),
                actual: self.node_up.len(),
            });
        }
        if self.arc_up.len() != net.n_arcs() {
            return Err(Error::Dimension {
                what: "arc states",
                expected: net.n_arcs(),
                actual: self.arc_up.len(),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.node_up.len() + self.arc_up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// State of canonical element `e`.
    pub fn is_up(&self, e: usize) -> bool {
        match self.node_up.get(e) {
            Some(&up) => up,
            None => self.arc_up[e - self.node_up.len()],
        }
    }

    pub fn set(&mut self, e: usize, up: bool) {
        let n = self.node_up.len();
        if e < n {
            self.node_up[e] = up;
        } else {
            self.arc_up[e - n] = up;
        }
    }

    /// Canonical indices of down elements, ascending.
    pub fn down_elements(&self) -> Vec<usize> {
        (0..self.len()).filter(|&e| !self.is_up(e)).collect()
    }

    /// `true` iff every element up here is also up in `other`.
    pub fn le(&self, other: &Self) -> bool {
        (0..self.len()).all(|e| !self.is_up(e) || other.is_up(e))
    }
}

/// Optimal flow of one layer. Vectors are aligned with
/// [`Network::layer_arcs`] and [`Network::layer_nodes`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub layer: usize,
    pub arc_flow: Vec<f64>,
    pub surplus: Vec<f64>,
    pub deficit: Vec<f64>,
    pub flow_cost: f64,
    pub imbalance_cost: f64,
}

impl FlowSolution {
    pub fn total_cost(&self) -> f64 {
        self.flow_cost + self.imbalance_cost
    }

    /// Largest `|inflow - outflow + b - surplus + deficit|` over the layer's nodes.
    pub fn conservation_residual(&self, net: &Network) -> f64 {
        let nodes = net.layer_nodes(self.layer);
        let mut net_in = vec![0.0; nodes.len()];
        for (&a, &f) in net.layer_arcs(self.layer).iter().zip(&self.arc_flow) {
            let (t, h) = net.arc_ends(a);
            net_in[t - nodes.start] -= f;
            net_in[h - nodes.start] += f;
        }
        nodes
            .clone()
            .enumerate()
            .map(|(i, v)| {
                let b = net.node(v).balance;
                let r = net_in[i] + b - self.surplus[i] + self.deficit[i];
                r.abs() / b.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Solves the slack-augmented min-cost flow of `layer` under `state`.
///
/// Arcs carry flow only when they and both endpoints are up; down nodes keep
/// their balance, which can then only be absorbed as surplus or deficit.
pub fn solve_layer_flow(net: &Network, layer: usize, state: &FunctionalityState) -> FlowSolution {
    let nodes = net.layer_nodes(layer);
    let m = nodes.len();
    let (balance_node, source, sink) = (m, m + 1, m + 2);
    let mut g = MinCostFlow::new(m + 3);

    let arcs = net.layer_arcs(layer);
    let mut arc_handles = Vec::with_capacity(arcs.len());
    for &a in arcs {
        let (t, h) = net.arc_ends(a);
        let spec = net.arc(a);
        let usable = state.arc_up[a] && state.node_up[t] && state.node_up[h] && spec.capacity > 0.0;
        arc_handles.push(
            usable.then(|| g.add_edge(t - nodes.start, h - nodes.start, spec.capacity, spec.flow_cost)),
        );
    }

    let mut slack = Vec::with_capacity(m);
    let mut total_balance = 0.0;
    let mut to_ship = 0.0;
    for (i, v) in nodes.clone().enumerate() {
        let spec = net.node(v);
        let plus = g.add_edge(i, balance_node, f64::INFINITY, spec.surplus_penalty);
        let minus = g.add_edge(balance_node, i, f64::INFINITY, spec.deficit_penalty);
        slack.push((plus, minus));
        let b = spec.balance;
        total_balance += b;
        if b > 0.0 {
            g.add_edge(source, i, b, 0.0);
            to_ship += b;
        } else if b < 0.0 {
            g.add_edge(i, sink, -b, 0.0);
        }
    }
    if total_balance < 0.0 {
        g.add_edge(source, balance_node, -total_balance, 0.0);
        to_ship -= total_balance;
    } else if total_balance > 0.0 {
        g.add_edge(balance_node, sink, total_balance, 0.0);
    }
    let (sent, _) = g.run(source, sink, to_ship);
    debug_assert!((sent - to_ship).abs() <= TOLERANCE * to_ship.max(1.0));

    let mut flow_cost = 0.0;
    let arc_flow: Vec<f64> = arcs
        .iter()
        .zip(&arc_handles)
        .map(|(&a, h)| {
            let f = h.map_or(0.0, |h| g.flow(h));
            flow_cost += f * net.arc(a).flow_cost;
            f
        })
        .collect();

    let mut imbalance_cost = 0.0;
    let mut surplus = Vec::with_capacity(m);
    let mut deficit = Vec::with_capacity(m);
    for (i, v) in nodes.enumerate() {
        let spec = net.node(v);
        let (mut plus, mut minus) = (g.flow(slack[i].0), g.flow(slack[i].1));
        let both = plus.min(minus);
        plus -= both;
        minus -= both;
        imbalance_cost += plus * spec.surplus_penalty + minus * spec.deficit_penalty;
        surplus.push(plus);
        deficit.push(minus);
    }

    FlowSolution {
        layer,
        arc_flow,
        surplus,
        deficit,
        flow_cost,
        imbalance_cost,
    }
}

/// Applies interdependency and arc-endpoint rules until stable.
fn propagate(net: &Network, state: &mut FunctionalityState) {
    loop {
        let mut changed = false;
        for v in 0..net.n_nodes() {
            if state.node_up[v] && net.parents(v).iter().any(|&p| !state.node_up[p]) {
                state.node_up[v] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for a in 0..net.n_arcs() {
        let (t, h) = net.arc_ends(a);
        state.arc_up[a] &= state.node_up[t] && state.node_up[h];
    }
}

fn fixed_point<S: AsRef<FlowSolution>>(
    net: &Network,
    raw: &FunctionalityState,
    mut solve: impl FnMut(usize, &FunctionalityState) -> S,
) -> (FunctionalityState, Vec<S>) {
    let mut state = raw.clone();
    loop {
        propagate(net, &mut state);
        let solutions: Vec<S> = (0..net.n_layers()).map(|k| solve(k, &state)).collect();
        let mut changed = false;
        for sol in &solutions {
            let sol = sol.as_ref();
            for (i, v) in net.layer_nodes(sol.layer).enumerate() {
                let spec = net.node(v);
                if spec.demand_completion
                    && state.node_up[v]
                    && sol.deficit[i] > TOLERANCE * spec.balance.abs().max(1.0)
                {
                    state.node_up[v] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return (state, solutions);
        }
    }
}

impl AsRef<FlowSolution> for FlowSolution {
    fn as_ref(&self) -> &FlowSolution {
        self
    }
}

/// Greatest state below `raw` consistent with interdependencies, arc
/// endpoints and demand completion.
pub fn effective_state(net: &Network, raw: &FunctionalityState) -> Result<FunctionalityState> {
    raw.check(net)?;
    Ok(fixed_point(net, raw, |k, s| solve_layer_flow(net, k, s)).0)
}

/// Operating cost of one time-step.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingCost {
    pub state: FunctionalityState,
    pub flow_cost: f64,
    pub imbalance_cost: f64,
    pub layers: Vec<FlowSolution>,
}

impl OperatingCost {
    pub fn total(&self) -> f64 {
        self.flow_cost + self.imbalance_cost
    }
}

/// Flow cost plus imbalance penalty of `raw` after resolving its effective state.
pub fn operating_cost(net: &Network, raw: &FunctionalityState) -> Result<OperatingCost> {
    raw.check(net)?;
    let (state, layers) = fixed_point(net, raw, |k, s| solve_layer_flow(net, k, s));
    Ok(OperatingCost {
        state,
        flow_cost: layers.iter().map(|l| l.flow_cost).sum(),
        imbalance_cost: layers.iter().map(|l| l.imbalance_cost).sum(),
        layers,
    })
}

/// Memoising evaluator for repeated cost queries against one network.
///
/// Layer solutions are cached by the layer's effective up/down pattern, so
/// candidate states differing in one layer only re-solve that layer.
pub struct Evaluator<'a> {
    net: &'a Network,
    cache: Vec<HashMap<Vec<u64>, Rc<FlowSolution>>>,
}

struct Shared(Rc<FlowSolution>);

impl AsRef<FlowSolution> for Shared {
    fn as_ref(&self) -> &FlowSolution {
        &self.0
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(net: &'a Network) -> Self {
        Evaluator {
            net,
            cache: vec![HashMap::new(); net.n_layers()],
        }
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    fn layer_key(net: &Network, k: usize, state: &FunctionalityState) -> Vec<u64> {
        let nodes = net.layer_nodes(k);
        let arcs = net.layer_arcs(k);
        let mut key = vec![0u64; (nodes.len() + arcs.len()).div_ceil(64)];
        let bits = nodes.map(|v| state.node_up[v]).chain(arcs.iter().map(|&a| state.arc_up[a]));
        for (i, up) in bits.enumerate() {
            if up {
                key[i / 64] |= 1 << (i % 64);
            }
        }
        key
    }

    /// Total operating cost (flow + imbalance) of `raw`.
    pub fn cost(&mut self, raw: &FunctionalityState) -> f64 {
        let (c_f, c_u) = self.cost_parts(raw);
        c_f + c_u
    }

    /// (flow cost, imbalance cost) of `raw`.
    pub fn cost_parts(&mut self, raw: &FunctionalityState) -> (f64, f64) {
        let net = self.net;
        let cache = &mut self.cache;
        let (_, layers) = fixed_point(net, raw, |k, s| {
            let key = Self::layer_key(net, k, s);
            let sol = cache[k]
                .entry(key)
                .or_insert_with(|| Rc::new(solve_layer_flow(net, k, s)))
                .clone();
            Shared(sol)
        });
        (
            layers.iter().map(|l| l.0.flow_cost).sum(),
            layers.iter().map(|l| l.0.imbalance_cost).sum(),
        )
    }

    pub fn cached_solutions(&self) -> usize {
        self.cache.iter().map(HashMap::len).sum()
    }
}
