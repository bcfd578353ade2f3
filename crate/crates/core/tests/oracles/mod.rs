//! Slow, independent reference computations used to check the library.
#![allow(dead_code)]

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::Rng;
use restoro_core::flow::{operating_cost, FunctionalityState};
use restoro_core::network::{ArcSpec, InterdependencyLink, NetworkSpec, NodeRef, NodeSpec, SpaceSpec};
use restoro_core::seed;
use restoro_core::surrogate::{Activation, SurrogateModel};
use restoro_core::{DamageScenario, Network};

pub struct Instance {
    pub net: Network,
    pub scenario: DamageScenario,
    pub resource_cap: u32,
    pub t_max: u32,
}

fn node(layer: &str, index: u32, balance: f64, rng: &mut impl Rng, spaces: usize) -> NodeSpec {
    NodeSpec {
        node: NodeRef::new(layer, index),
        balance,
        repair_cost: f64::from(rng.random_range(1..=20)),
        surplus_penalty: f64::from(rng.random_range(0..=3)),
        deficit_penalty: f64::from(rng.random_range(2..=15)),
        space: format!("s{}", rng.random_range(0..spaces)),
        demand_completion: balance < 0.0 && rng.random_bool(0.25),
        position: [rng.random(), rng.random()],
    }
}

/// Two-layer network with 2..=6 nodes per layer and integer data.
pub fn random_network(seed: u64) -> Network {
    let mut rng = seed::rng(seed);
    let n_spaces = rng.random_range(1..=3);
    let layers = ["a", "b"];
    let mut spec = NetworkSpec {
        layers: layers.iter().map(|s| s.to_string()).collect(),
        spaces: (0..n_spaces)
            .map(|i| SpaceSpec {
                id: format!("s{i}"),
                prep_cost: f64::from(rng.random_range(0..=10)),
            })
            .collect(),
        ..Default::default()
    };
    let mut sizes = Vec::new();
    for layer in layers {
        let n = rng.random_range(2..=6u32);
        sizes.push(n);
        for i in 0..n {
            let b = match rng.random_range(0..3) {
                0 => f64::from(rng.random_range(1..=4)),
                1 => -f64::from(rng.random_range(1..=4)),
                _ => 0.0,
            };
            spec.nodes.push(node(layer, i, b, &mut rng, n_spaces));
        }
        let n_arcs = rng.random_range(n..=2 * n);
        for _ in 0..n_arcs {
            let t = rng.random_range(0..n);
            let mut h = rng.random_range(0..n - 1);
            if h >= t {
                h += 1;
            }
            spec.arcs.push(ArcSpec {
                tail: NodeRef::new(layer, t),
                head: NodeRef::new(layer, h),
                capacity: f64::from(rng.random_range(0..=6)),
                flow_cost: f64::from(rng.random_range(1..=4)),
                repair_cost: f64::from(rng.random_range(1..=10)),
                space: format!("s{}", rng.random_range(0..n_spaces)),
            });
        }
    }
    for _ in 0..rng.random_range(0..=3) {
        let (p, c) = if rng.random_bool(0.5) { (0, 1) } else { (1, 0) };
        let link = InterdependencyLink {
            parent: NodeRef::new(layers[p], rng.random_range(0..sizes[p])),
            child: NodeRef::new(layers[c], rng.random_range(0..sizes[c])),
        };
        if !spec.links.contains(&link) {
            spec.links.push(link);
        }
    }
    Network::new(spec).expect("generated spec is valid")
}

/// Random instance with at most 6 damaged elements, `T <= 4`, `R_c <= 2`, and
/// every damaged element repairable within the horizon.
pub fn random_instance(seed: u64) -> Instance {
    let net = random_network(seed);
    let mut rng = seed::rng(seed::derive(seed, "instance"));
    let resource_cap = rng.random_range(1..=2);
    let t_max = rng.random_range(2..=4);
    let max_d = (6usize).min((resource_cap * t_max) as usize).min(net.n_elements());
    let d = rng.random_range(1..=max_d);
    // mostly nodes: draw from nodes first, fall back to all elements
    let pool = if rng.random_bool(0.7) { net.n_nodes() } else { net.n_elements() };
    let d = d.min(pool);
    let mut state = FunctionalityState::all_up(&net);
    for e in sample(&mut rng, pool, d) {
        state.set(e, false);
    }
    Instance {
        net,
        scenario: DamageScenario::new(state),
        resource_cap,
        t_max,
    }
}

/// Optimal layer cost by enumerating every integer flow vector. Valid for
/// integer balances and capacities, where the constraint matrix is totally
/// unimodular and an integral optimum exists.
pub fn brute_force_layer_cost(net: &Network, layer: usize, state: &FunctionalityState) -> f64 {
    let nodes: Vec<usize> = net.layer_nodes(layer).collect();
    let arcs = net.layer_arcs(layer);
    let caps: Vec<u32> = arcs
        .iter()
        .map(|&a| {
            let (t, h) = net.arc_ends(a);
            if state.arc_up[a] && state.node_up[t] && state.node_up[h] {
                net.arc(a).capacity as u32
            } else {
                0
            }
        })
        .collect();
    let mut flow = vec![0u32; arcs.len()];
    let mut best = f64::INFINITY;
    loop {
        let mut cost = 0.0;
        let mut residual: HashMap<usize, f64> = nodes.iter().map(|&v| (v, net.node(v).balance)).collect();
        for (i, &a) in arcs.iter().enumerate() {
            let f = f64::from(flow[i]);
            let (t, h) = net.arc_ends(a);
            cost += f * net.arc(a).flow_cost;
            *residual.get_mut(&t).unwrap() -= f;
            *residual.get_mut(&h).unwrap() += f;
        }
        for (&v, &r) in &residual {
            let spec = net.node(v);
            cost += if r > 0.0 { r * spec.surplus_penalty } else { -r * spec.deficit_penalty };
        }
        best = best.min(cost);

        let Some(i) = (0..flow.len()).find(|&i| flow[i] < caps[i]) else {
            return best;
        };
        flow[i] += 1;
        flow[..i].iter_mut().for_each(|f| *f = 0);
    }
}

/// Least plan cost over every assignment of damaged elements to steps
/// `1..=T` with at most `R_c` repairs per step. `None` if no assignment fits.
pub fn brute_force_plan_cost(inst: &Instance) -> Option<f64> {
    let net = &inst.net;
    let damaged = inst.scenario.initial.down_elements();
    let d = damaged.len();
    let t_max = inst.t_max as usize;
    let mut op_memo: HashMap<Vec<bool>, f64> = HashMap::new();
    let mut op = |repaired: Vec<bool>| -> f64 {
        *op_memo.entry(repaired.clone()).or_insert_with(|| {
            let mut s = inst.scenario.initial.clone();
            for (i, &r) in repaired.iter().enumerate() {
                if r {
                    s.set(damaged[i], true);
                }
            }
            operating_cost(net, &s).unwrap().total()
        })
    };

    let mut times = vec![1usize; d];
    let mut best: Option<f64> = None;
    loop {
        let mut per_step = vec![0u32; t_max + 1];
        for &t in &times {
            per_step[t] += 1;
        }
        if per_step.iter().all(|&c| c <= inst.resource_cap) {
            let mut total = 0.0;
            let mut prepared = vec![false; net.spaces().len()];
            for t in 0..=t_max {
                total += op(times.iter().map(|&x| x <= t).collect());
                for (i, &x) in times.iter().enumerate() {
                    if x == t {
                        total += net.element_repair_cost(damaged[i]);
                        let s = net.element_space(damaged[i]);
                        if !prepared[s] {
                            prepared[s] = true;
                            total += net.spaces()[s].prep_cost;
                        }
                    }
                }
            }
            best = Some(best.map_or(total, |b: f64| b.min(total)));
        }
        let Some(i) = (0..d).find(|&i| times[i] < t_max) else {
            return best;
        };
        times[i] += 1;
        times[..i].iter_mut().for_each(|t| *t = 1);
    }
}

/// Model with widths up to `[20, 8, 8, 20]`, random biases, and a batch of
/// binary inputs with small integer targets.
pub fn random_small_model(seed: u64) -> (SurrogateModel, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = seed::rng(seed::derive(seed, "small-model"));
    let n = rng.random_range(2..=20);
    let hidden: Vec<usize> = (0..rng.random_range(1..=2)).map(|_| rng.random_range(1..=8)).collect();
    let dims: Vec<usize> = std::iter::once(n).chain(hidden).chain(std::iter::once(n)).collect();
    let act = if seed % 3 == 0 { Activation::Identity } else { Activation::Relu };
    let mut model = restoro_core::surrogate::init_model(&dims, act, seed).unwrap();
    for b in &mut model.biases {
        b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    let batch = rng.random_range(1..=4);
    let xs = (0..batch)
        .map(|_| (0..n).map(|_| f64::from(rng.random_range(0..=1u8))).collect())
        .collect();
    let ys = (0..batch)
        .map(|_| (0..n).map(|_| f64::from(rng.random_range(0..=6u8))).collect())
        .collect();
    (model, xs, ys)
}

/// Forward pass with explicit loops.
pub fn reference_forward(model: &SurrogateModel, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for (l, (w, b)) in model.weights.iter().zip(&model.biases).enumerate() {
        let mut z = vec![0.0; w.nrows()];
        for j in 0..w.nrows() {
            let mut s = b[j];
            for i in 0..w.ncols() {
                s += w[[j, i]] * a[i];
            }
            z[j] = match model.activations.get(l) {
                Some(Activation::Relu) => s.max(0.0),
                _ => s,
            };
        }
        a = z;
    }
    a
}

pub fn reference_mse(model: &SurrogateModel, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        for (p, t) in reference_forward(model, x).iter().zip(y) {
            sum += (p - t) * (p - t);
            count += 1.0;
        }
    }
    sum / count
}

/// Central finite differences of [`reference_mse`] for every parameter.
pub fn finite_difference_gradients(
    model: &SurrogateModel,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    h: f64,
) -> (Vec<Array2<f64>>, Vec<Array1<f64>>) {
    let mut m = model.clone();
    let mut gw = Vec::new();
    let mut gb = Vec::new();
    for l in 0..model.weights.len() {
        let mut g = Array2::zeros(model.weights[l].raw_dim());
        for idx in ndarray::indices(model.weights[l].raw_dim()) {
            let orig = m.weights[l][idx];
            m.weights[l][idx] = orig + h;
            let up = reference_mse(&m, xs, ys);
            m.weights[l][idx] = orig - h;
            let down = reference_mse(&m, xs, ys);
            m.weights[l][idx] = orig;
            g[idx] = (up - down) / (2.0 * h);
        }
        gw.push(g);
        let mut g = Array1::zeros(model.biases[l].len());
        for j in 0..model.biases[l].len() {
            let orig = m.biases[l][j];
            m.biases[l][j] = orig + h;
            let up = reference_mse(&m, xs, ys);
            m.biases[l][j] = orig - h;
            let down = reference_mse(&m, xs, ys);
            m.biases[l][j] = orig;
            g[j] = (up - down) / (2.0 * h);
        }
        gb.push(g);
    }
    (gw, gb)
}

/// `|a - b| / max(|a|, |b|, 1e-6)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// `op[k, i] = sum_j W2[k, j] * W1[j, i]`, chained over all layers.
pub fn operator_by_loops(model: &SurrogateModel) -> Array2<f64> {
    let mut op = model.weights[0].clone();
    for w in &model.weights[1..] {
        let mut next = Array2::zeros((w.nrows(), op.ncols()));
        for k in 0..w.nrows() {
            for i in 0..op.ncols() {
                let mut s = 0.0;
                for j in 0..w.ncols() {
                    s += w[[k, j]] * op[[j, i]];
                }
                next[[k, i]] = s;
            }
        }
        op = next;
    }
    op
}

/// Single-layer network small enough for [`brute_force_layer_cost`]: 2..=4
/// nodes, up to 5 arcs of capacity <= 3, integer balances and real costs.
pub fn random_flow_layer(seed: u64) -> (Network, FunctionalityState) {
    let mut rng = seed::rng(seed);
    let n = rng.random_range(2..=4u32);
    let mut spec = NetworkSpec {
        layers: vec!["x".into()],
        spaces: vec![SpaceSpec {
            id: "s0".into(),
            prep_cost: 0.0,
        }],
        ..Default::default()
    };
    for i in 0..n {
        spec.nodes.push(NodeSpec {
            node: NodeRef::new("x", i),
            balance: f64::from(rng.random_range(-3..=3)),
            repair_cost: 1.0,
            surplus_penalty: rng.random_range(0.0..4.0),
            deficit_penalty: rng.random_range(0.0..12.0),
            space: "s0".into(),
            demand_completion: false,
            position: [0.0, 0.0],
        });
    }
    for _ in 0..rng.random_range(1..=5) {
        let t = rng.random_range(0..n);
        let mut h = rng.random_range(0..n - 1);
        if h >= t {
            h += 1;
        }
        spec.arcs.push(ArcSpec {
            tail: NodeRef::new("x", t),
            head: NodeRef::new("x", h),
            capacity: f64::from(rng.random_range(0..=3)),
            flow_cost: rng.random_range(0.0..3.0),
            repair_cost: 1.0,
            space: "s0".into(),
        });
    }
    let net = Network::new(spec).expect("valid layer");
    let mut state = FunctionalityState::all_up(&net);
    for e in 0..net.n_elements() {
        if rng.random_bool(0.15) {
            state.set(e, false);
        }
    }
    (net, state)
}
