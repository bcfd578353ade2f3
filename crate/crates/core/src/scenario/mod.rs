//! Seeded damage scenarios, bit-flip augmentation and solver-labelled
//! datasets.

mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

pub use io::{read_dataset, read_scenarios, write_dataset, write_scenarios};

use crate::error::{Error, Result};
use crate::flow::FunctionalityState;
use crate::network::Network;
use crate::seed;
use crate::solver::{self, DamageScenario, SolverLimits, SolverMode};

/// Mean damaged-node counts on a 125-node system for the weakest and strongest
/// modelled magnitudes.
const MEAN_DAMAGED_M6: f64 = 11.0;
const MEAN_DAMAGED_M9: f64 = 57.0;
const REFERENCE_NODES: f64 = 125.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialKernel {
    /// Distance at which the relative damage intensity falls by `1/e`.
    pub correlation_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DamageModel {
    pub rate_per_magnitude: BTreeMap<u8, f64>,
    /// When set, an epicenter is drawn uniformly over the bounding box of the
    /// node positions and each node's rate is scaled by `exp(-d / L)`,
    /// normalised so the mean rate is unchanged (then clipped to `[0, 1]`).
    pub spatial_kernel: Option<SpatialKernel>,
    pub damage_arcs: bool,
}

impl Default for DamageModel {
    /// Rates `11/125` at m=6 and `57/125` at m=9, log-linear in between.
    fn default() -> Self {
        let r6 = MEAN_DAMAGED_M6 / REFERENCE_NODES;
        let r9 = MEAN_DAMAGED_M9 / REFERENCE_NODES;
        let step = (r9.ln() - r6.ln()) / 3.0;
        let rate_per_magnitude = (6..=9u8)
            .map(|m| {
                let r = match m {
                    6 => r6,
                    9 => r9,
                    _ => (r6.ln() + step * f64::from(m - 6)).exp(),
                };
                (m, r)
            })
            .collect();
        DamageModel {
            rate_per_magnitude,
            spatial_kernel: None,
            damage_arcs: false,
        }
    }
}

impl DamageModel {
    /// Same rate for every magnitude.
    pub fn uniform(rate: f64) -> Self {
        DamageModel {
            rate_per_magnitude: (6..=9).map(|m| (m, rate)).collect(),
            ..Default::default()
        }
    }

    pub fn rate(&self, magnitude: u8) -> Result<f64> {
        self.rate_per_magnitude
            .get(&magnitude)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no damage rate for magnitude {magnitude}")))
    }

    pub fn check(&self) -> Result<()> {
        for (&m, &r) in &self.rate_per_magnitude {
            if !(6..=9).contains(&m) {
                return Err(Error::InvalidArgument(format!("magnitude {m} outside 6..=9")));
            }
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!("damage rate {r} for m={m} outside [0, 1]")));
            }
        }
        match self.spatial_kernel {
            Some(k) if !(k.correlation_length > 0.0) => Err(Error::InvalidArgument(
                "correlation length must be positive".into(),
            )),
            _ => Ok(()),
        }
    }
}

pub fn generate_scenario(net: &Network, model: &DamageModel, magnitude: u8, seed: u64) -> Result<DamageScenario> {
    model.check()?;
    let rate = model.rate(magnitude)?;
    let mut rng = seed::rng(seed);

    let mut positions: Vec<[f64; 2]> = net.nodes().iter().map(|n| n.position).collect();
    if model.damage_arcs {
        positions.extend((0..net.n_arcs()).map(|a| {
            let (t, h) = net.arc_ends(a);
            let (p, q) = (net.node(t).position, net.node(h).position);
            [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]
        }));
    }
    let probs: Vec<f64> = match model.spatial_kernel {
        None => vec![rate; positions.len()],
        Some(k) => {
            let (lo, hi) = bounding_box(&positions);
            let epi = [rng.random_range(lo[0]..=hi[0]), rng.random_range(lo[1]..=hi[1])];
            let weights: Vec<f64> = positions
                .iter()
                .map(|p| (-(p[0] - epi[0]).hypot(p[1] - epi[1]) / k.correlation_length).exp())
                .collect();
            let mean = weights.iter().sum::<f64>() / weights.len().max(1) as f64;
            weights.iter().map(|w| (rate * w / mean).clamp(0.0, 1.0)).collect()
        }
    };

    let mut state = FunctionalityState::all_up(net);
    for (e, p) in probs.into_iter().enumerate() {
        if rng.random::<f64>() < p {
            state.set(e, false);
        }
    }
    Ok(DamageScenario {
        initial: state,
        magnitude: Some(magnitude),
        metadata: format!("seed={seed}"),
    })
}

fn bounding_box(points: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    if points.is_empty() {
        return ([0.0; 2], [0.0; 2]);
    }
    (lo, hi)
}

/// Flips `f` distinct node bits, `f` uniform in `flips` (inclusive). Both
/// directions are allowed, so a flip may also repair a node. The flipped set
/// depends only on `seed` and the node count, so applying the same call twice
/// restores the input.
pub fn augment(scenario: &DamageScenario, flips: (usize, usize), seed: u64) -> Result<DamageScenario> {
    let n = scenario.initial.node_up.len();
    let (lo, hi) = flips;
    if lo == 0 || lo > hi || hi > n {
        return Err(Error::InvalidArgument(format!(
            "flip range [{lo}, {hi}] must lie within [1, {n}]"
        )));
    }
    let mut rng = seed::rng(seed);
    let f = rng.random_range(lo..=hi);
    let mut out = scenario.clone();
    for i in sample(&mut rng, n, f) {
        out.initial.node_up[i] = !out.initial.node_up[i];
    }
    out.metadata = format!("augment-seed={seed}");
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    Original,
    Augmented,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Original => "original",
            Provenance::Augmented => "augmented",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Provenance::Original),
            "augmented" => Ok(Provenance::Augmented),
            _ => Err(Error::InvalidArgument(format!("unknown provenance `{s}`"))),
        }
    }
}

/// How a damage vector is written as network input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    #[default]
    DamagedIs1,
    DamagedIs0,
}

impl Encoding {
    pub fn encode(self, damaged: bool) -> u8 {
        u8::from(damaged == (self == Encoding::DamagedIs1))
    }

    pub fn is_damaged(self, bit: u8) -> bool {
        (bit == 1) == (self == Encoding::DamagedIs1)
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::DamagedIs1 => "damaged_is_1",
            Encoding::DamagedIs0 => "damaged_is_0",
        })
    }
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "damaged_is_1" => Ok(Encoding::DamagedIs1),
            "damaged_is_0" => Ok(Encoding::DamagedIs0),
            _ => Err(Error::InvalidArgument(format!("unknown encoding `{s}`"))),
        }
    }
}

/// Scenarios sharing one generation run. Originals come first.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub seed: u64,
    pub magnitude: Option<u8>,
    pub scenarios: Vec<DamageScenario>,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSetConfig {
    pub magnitude: u8,
    pub originals: usize,
    /// Augmented copies per original.
    pub augment_per_original: usize,
    pub flips: (usize, usize),
    pub seed: u64,
}

/// Generates `originals` scenarios and `augment_per_original` flipped copies
/// of each. Every scenario draws from its own derived seed.
pub fn generate_set(net: &Network, model: &DamageModel, cfg: &ScenarioSetConfig) -> Result<ScenarioSet> {
    let mut scenarios = Vec::with_capacity(cfg.originals * (1 + cfg.augment_per_original));
    for i in 0..cfg.originals {
        let s = seed::derive_indexed(cfg.seed, "scenario", i as u64);
        scenarios.push(generate_scenario(net, model, cfg.magnitude, s)?);
    }
    let mut provenance = vec![Provenance::Original; cfg.originals];
    for i in 0..cfg.originals {
        let base = seed::derive_indexed(cfg.seed, "scenario", i as u64);
        for j in 0..cfg.augment_per_original {
            let s = seed::derive_indexed(base, "augment", j as u64);
            let mut a = augment(&scenarios[i], cfg.flips, s)?;
            a.magnitude = Some(cfg.magnitude);
            scenarios.push(a);
            provenance.push(Provenance::Augmented);
        }
    }
    Ok(ScenarioSet {
        seed: cfg.seed,
        magnitude: Some(cfg.magnitude),
        scenarios,
        provenance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// Encoded node functionality.
    pub input: Vec<u8>,
    /// Repair step per node, 0 for functional nodes.
    pub target: Vec<u32>,
    pub resource_cap: u32,
    pub magnitude: Option<u8>,
    pub provenance: Provenance,
}

impl Record {
    pub fn damaged(&self, encoding: Encoding) -> impl Iterator<Item = bool> + '_ {
        self.input.iter().map(move |&b| encoding.is_damaged(b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub encoding: Encoding,
    pub records: Vec<Record>,
}

impl Dataset {
    /// Re-encodes every input; targets are unchanged.
    pub fn with_encoding(&self, encoding: Encoding) -> Dataset {
        let flip = encoding != self.encoding;
        Dataset {
            encoding,
            records: self
                .records
                .iter()
                .map(|r| Record {
                    input: r.input.iter().map(|&b| if flip { 1 - b } else { b }).collect(),
                    ..r.clone()
                })
                .collect(),
        }
    }

    /// Checks lengths and that a target is nonzero exactly on damaged nodes.
    pub fn check(&self, n_nodes: usize) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.input.len() != n_nodes || r.target.len() != n_nodes {
                return Err(Error::Dimension {
                    what: "dataset record",
                    expected: n_nodes,
                    actual: r.input.len().max(r.target.len()),
                });
            }
            if r.damaged(self.encoding).zip(&r.target).any(|(d, &t)| d != (t > 0)) {
                return Err(Error::InvalidArgument(format!(
                    "dataset record {i}: nonzero targets must coincide with damaged nodes"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelConfig {
    pub resource_cap: u32,
    pub t_max: u32,
    pub mode: SolverMode,
    pub limits: SolverLimits,
    pub encoding: Encoding,
}

/// Labelled dataset plus the number of node labels that had to be clamped
/// to `t_max` because the solver left them unrepaired.
#[derive(Debug, Clone, PartialEq)]
pub struct Labelled {
    pub dataset: Dataset,
    pub clamped: usize,
}

/// Labels every scenario with the solver. Runs on the current rayon pool;
/// records keep the order of `set`.
pub fn build_dataset(net: &Network, set: &ScenarioSet, cfg: &LabelConfig) -> Result<Labelled> {
    let labelled: Vec<Result<(Record, usize)>> = set
        .scenarios
        .par_iter()
        .zip(set.provenance.par_iter())
        .map(|(sc, &prov)| label(net, sc, prov, cfg))
        .collect();
    let mut records = Vec::with_capacity(labelled.len());
    let mut clamped = 0;
    for r in labelled {
        let (rec, c) = r?;
        records.push(rec);
        clamped += c;
    }
    Ok(Labelled {
        dataset: Dataset {
            encoding: cfg.encoding,
            records,
        },
        clamped,
    })
}

fn label(net: &Network, sc: &DamageScenario, provenance: Provenance, cfg: &LabelConfig) -> Result<(Record, usize)> {
    let plan = solver::solve(net, sc, cfg.resource_cap, cfg.t_max, cfg.mode, &cfg.limits)?;
    let n = net.n_nodes();
    let mut target = vec![0; n];
    let mut clamped = 0;
    for (&e, &t) in plan.repair_time.range(..n) {
        target[e] = t.unwrap_or_else(|| {
            clamped += 1;
            cfg.t_max
        });
    }
    let input = sc.initial.node_up[..n].iter().map(|&up| cfg.encoding.encode(!up)).collect();
    Ok((
        Record {
            input,
            target,
            resource_cap: cfg.resource_cap,
            magnitude: sc.magnitude,
            provenance,
        },
        clamped,
    ))
}
