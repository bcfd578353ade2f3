//! Seeded synthetic network generator.
//!
//! Each layer is a random geometric network over the unit square: a Euclidean
//! minimum spanning tree plus a few shortcut edges, every undirected edge
//! becoming a pair of opposing arcs. Costs are integer valued so that plan
//! costs are exact in floating point.

use rand::Rng;

use super::{ArcSpec, InterdependencyLink, NetworkSpec, NodeRef, NodeSpec, SpaceSpec};
use crate::seed;

pub const DEFAULT_LAYER_NAMES: [&str; 3] = ["water", "gas", "power"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// (layer id, node count) in declared order.
    pub layers: Vec<(String, usize)>,
    /// Spaces form a `grid x grid` tiling of the unit square.
    pub space_grid: usize,
    /// Probability that a node gets a shortcut edge to its nearest non-neighbour.
    pub shortcut_prob: f64,
    pub supply_fraction: f64,
    pub demand_fraction: f64,
    pub demand_completion_fraction: f64,
    /// Probability that a node of a non-final layer depends on the nearest
    /// node of the final layer (power-like).
    pub link_prob_from_last: f64,
    /// Probability for every other ordered layer pair.
    pub link_prob_other: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Generic config: layers named water/gas/power (then `layerN`).
    pub fn with_sizes(sizes: &[usize], seed: u64) -> Self {
        let layers = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let name = DEFAULT_LAYER_NAMES
                    .get(i)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| format!("layer{i}"));
                (name, n)
            })
            .collect();
        SynthConfig {
            layers,
            space_grid: 3,
            shortcut_prob: 0.3,
            supply_fraction: 0.15,
            demand_fraction: 0.6,
            demand_completion_fraction: 0.1,
            link_prob_from_last: 0.4,
            link_prob_other: 0.1,
            seed,
        }
    }

    /// Three layers of 49 water, 16 gas and 60 power nodes (125 in total).
    pub fn shelby_like(seed: u64) -> Self {
        Self::with_sizes(&[49, 16, 60], seed)
    }
}

pub fn generate(cfg: &SynthConfig) -> NetworkSpec {
    let mut spec = NetworkSpec {
        layers: cfg.layers.iter().map(|(l, _)| l.clone()).collect(),
        ..Default::default()
    };
    let grid = cfg.space_grid.max(1);
    let mut space_rng = seed::rng(seed::derive(cfg.seed, "spaces"));
    for r in 0..grid {
        for c in 0..grid {
            spec.spaces.push(SpaceSpec {
                id: format!("S{r}{c}"),
                prep_cost: f64::from(space_rng.random_range(100..=400u32)),
            });
        }
    }
    let space_of = |p: [f64; 2]| {
        let cell = |v: f64| ((v * grid as f64) as usize).min(grid - 1);
        format!("S{}{}", cell(p[1]), cell(p[0]))
    };

    let mut positions: Vec<Vec<[f64; 2]>> = Vec::new();
    for (k, (layer, n)) in cfg.layers.iter().enumerate() {
        let mut rng = seed::rng(seed::derive_indexed(cfg.seed, "layer", k as u64));
        let pos: Vec<[f64; 2]> = (0..*n).map(|_| [rng.random(), rng.random()]).collect();

        let n_supply = ((*n as f64 * cfg.supply_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
        let n_demand = ((*n as f64 * cfg.demand_fraction).round() as usize)
            .clamp(1.min(n - n_supply), n - n_supply);
        // role assignment by shuffled order
        let mut order: Vec<usize> = (0..*n).collect();
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut balance = vec![0.0; *n];
        let mut total_demand = 0u32;
        for &v in &order[n_supply..n_supply + n_demand] {
            let d = rng.random_range(1..=5u32);
            total_demand += d;
            balance[v] = -f64::from(d);
        }
        // supply exceeds demand by roughly 10% and is split evenly
        let total_supply = (f64::from(total_demand) * 1.1).ceil().max(1.0) as u32;
        for (s, &v) in order[..n_supply].iter().enumerate() {
            let share = total_supply / n_supply as u32 + u32::from((s as u32) < total_supply % n_supply as u32);
            balance[v] = f64::from(share);
        }
        let completion: Vec<bool> = (0..*n)
            .map(|v| balance[v] < 0.0 && rng.random_bool(cfg.demand_completion_fraction))
            .collect();

        for v in 0..*n {
            spec.nodes.push(NodeSpec {
                node: NodeRef::new(layer.clone(), v as u32),
                balance: balance[v],
                repair_cost: f64::from(rng.random_range(50..=300u32)),
                surplus_penalty: f64::from(rng.random_range(5..=10u32)),
                deficit_penalty: f64::from(rng.random_range(100..=200u32)),
                space: space_of(pos[v]),
                demand_completion: completion[v],
                position: pos[v],
            });
        }

        let tree_capacity = f64::from(total_supply);
        for (a, b, tree) in edges(&pos, cfg.shortcut_prob, &mut rng) {
            let capacity = if tree {
                tree_capacity
            } else {
                f64::from(rng.random_range(1..=total_supply.max(1)))
            };
            let flow_cost = f64::from(rng.random_range(1..=3u32));
            let repair_cost = f64::from(rng.random_range(20..=100u32));
            let mid = [(pos[a][0] + pos[b][0]) / 2.0, (pos[a][1] + pos[b][1]) / 2.0];
            for (t, h) in [(a, b), (b, a)] {
                spec.arcs.push(ArcSpec {
                    tail: NodeRef::new(layer.clone(), t as u32),
                    head: NodeRef::new(layer.clone(), h as u32),
                    capacity,
                    flow_cost,
                    repair_cost,
                    space: space_of(mid),
                });
            }
        }
        positions.push(pos);
    }

    let mut link_rng = seed::rng(seed::derive(cfg.seed, "links"));
    let last = cfg.layers.len().saturating_sub(1);
    for (c, (child_layer, _)) in cfg.layers.iter().enumerate() {
        for (p, (parent_layer, _)) in cfg.layers.iter().enumerate() {
            if p == c || positions[p].is_empty() {
                continue;
            }
            let prob = if p == last { cfg.link_prob_from_last } else { cfg.link_prob_other };
            for (v, pos) in positions[c].iter().enumerate() {
                if !link_rng.random_bool(prob) {
                    continue;
                }
                let parent = nearest(&positions[p], *pos);
                spec.links.push(InterdependencyLink {
                    parent: NodeRef::new(parent_layer.clone(), parent as u32),
                    child: NodeRef::new(child_layer.clone(), v as u32),
                });
            }
        }
    }
    spec
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn nearest(points: &[[f64; 2]], p: [f64; 2]) -> usize {
    let mut best = 0;
    for (i, q) in points.iter().enumerate() {
        if dist2(*q, p) < dist2(points[best], p) {
            best = i;
        }
    }
    best
}

/// Prim's MST plus shortcut edges; returns (a, b, is_tree_edge).
fn edges(pos: &[[f64; 2]], shortcut_prob: f64, rng: &mut impl Rng) -> Vec<(usize, usize, bool)> {
    let n = pos.len();
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, 0usize); n];
    in_tree[0] = true;
    for v in 1..n {
        best[v] = (dist2(pos[0], pos[v]), 0);
    }
    let mut adjacent = vec![vec![false; n]; n];
    for _ in 1..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0))
            .expect("non-empty");
        let u = best[v].1;
        in_tree[v] = true;
        out.push((u.min(v), u.max(v), true));
        adjacent[u][v] = true;
        adjacent[v][u] = true;
        for w in 0..n {
            if !in_tree[w] && dist2(pos[v], pos[w]) < best[w].0 {
                best[w] = (dist2(pos[v], pos[w]), v);
            }
        }
    }
    for v in 0..n {
        if !rng.random_bool(shortcut_prob) {
            continue;
        }
        let candidate = (0..n)
            .filter(|&w| w != v && !adjacent[v][w])
            .min_by(|&a, &b| dist2(pos[v], pos[a]).total_cmp(&dist2(pos[v], pos[b])));
        if let Some(w) = candidate {
            adjacent[v][w] = true;
            adjacent[w][v] = true;
            out.push((v.min(w), v.max(w), false));
        }
    }
    out
}
