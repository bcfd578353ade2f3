//! Resource trade-off curves and weight-based views of trained surrogates.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::Network;
use crate::solver::{self, recovery_time, DamageScenario, SolverLimits, SolverMode};
use crate::surrogate::{predict_plan, SurrogateModel};

/// Named contiguous ranges of canonical node indices.
pub type Partition = [(String, Range<usize>)];

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub resource_cap: u32,
    /// `None` when the solver leaves an element unrepaired.
    pub solver_time: Option<u32>,
    /// Latest predicted step over damaged nodes (0 without damage).
    pub nn_time: u32,
    pub solver_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TradeoffCurve {
    pub points: Vec<TradeoffPoint>,
}

/// Solver and surrogate recovery times for one scenario across resource caps.
/// `caps` must be strictly increasing and each needs a model in `models`.
pub fn tradeoff(
    net: &Network,
    scenario: &DamageScenario,
    caps: &[u32],
    models: &BTreeMap<u32, SurrogateModel>,
    t_max: u32,
    mode: SolverMode,
    limits: &SolverLimits,
) -> Result<TradeoffCurve> {
    if caps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("resource caps must be strictly increasing".into()));
    }
    if let Some(rc) = caps.iter().find(|rc| !models.contains_key(rc)) {
        return Err(Error::InvalidArgument(format!("no surrogate model for R_c = {rc}")));
    }
    let points = caps
        .par_iter()
        .map(|&rc| {
            let plan = solver::solve(net, scenario, rc, t_max, mode, limits)?;
            let pred = predict_plan(&models[&rc], scenario)?;
            Ok(TradeoffPoint {
                resource_cap: rc,
                solver_time: recovery_time(&plan),
                nn_time: pred.values().copied().max().unwrap_or(0),
                solver_cost: plan.costs.total,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TradeoffCurve { points })
}

/// One block of rows per curve, each preceded by a `# scenario <i>` comment.
pub fn write_tradeoff_csv(curves: &[TradeoffCurve], path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::from("Rc,solver_time,nn_time,solver_cost\n");
    for (i, c) in curves.iter().enumerate() {
        let _ = writeln!(s, "# scenario {i}");
        for p in &c.points {
            let t = p.solver_time.map_or_else(|| "never".into(), |t| t.to_string());
            let _ = writeln!(s, "{},{t},{},{}", p.resource_cap, p.nn_time, p.solver_cost);
        }
    }
    write(path.as_ref(), &s)
}

/// Per hidden neuron weight mass by input/output category.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAggregate {
    pub categories: Vec<String>,
    /// `input[[j, c]]`: mass of weights from category `c` into neuron `j`.
    pub input: Array2<f64>,
    /// `output[[j, c]]`: mass of weights from neuron `j` into category `c`.
    pub output: Array2<f64>,
    pub signed: bool,
}

/// Sums `|W1[j, i]|` over inputs `i` in each category, and `|W2[k, j]|` over
/// outputs `k`. With `signed`, raw weights are summed instead.
pub fn block_aggregate(model: &SurrogateModel, partition: &Partition, signed: bool) -> Result<BlockAggregate> {
    if model.weights.len() != 2 {
        return Err(Error::Capability(format!(
            "block aggregation needs exactly one hidden layer, model has {}",
            model.weights.len() - 1
        )));
    }
    check_partition(partition, model.n_inputs())?;
    check_partition(partition, model.n_outputs())?;
    let (w1, w2) = (&model.weights[0], &model.weights[1]);
    let hidden = w1.nrows();
    let mass = |v: f64| if signed { v } else { v.abs() };
    let mut input = Array2::zeros((hidden, partition.len()));
    let mut output = Array2::zeros((hidden, partition.len()));
    for j in 0..hidden {
        for (c, (_, range)) in partition.iter().enumerate() {
            input[[j, c]] = range.clone().map(|i| mass(w1[[j, i]])).sum();
            output[[j, c]] = range.clone().map(|k| mass(w2[[k, j]])).sum();
        }
    }
    Ok(BlockAggregate {
        categories: partition.iter().map(|(n, _)| n.clone()).collect(),
        input,
        output,
        signed,
    })
}

pub fn write_aggregate_csv(agg: &BlockAggregate, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::from("neuron,side,category,mass\n");
    for j in 0..agg.input.nrows() {
        for (side, m) in [("input", &agg.input), ("output", &agg.output)] {
            for (c, name) in agg.categories.iter().enumerate() {
                let _ = writeln!(s, "{j},{side},{name},{:.16e}", m[[j, c]]);
            }
        }
    }
    write(path.as_ref(), &s)
}

fn check_partition(partition: &Partition, n: usize) -> Result<()> {
    let mut next = 0;
    for (name, r) in partition {
        if r.start != next {
            return Err(Error::InvalidArgument(format!("category `{name}` is not contiguous")));
        }
        next = r.end;
    }
    if next != n {
        return Err(Error::Dimension {
            what: "category partition",
            expected: n,
            actual: next,
        });
    }
    Ok(())
}

/// Product `W_{L+1} ... W_1` of all weight matrices (biases and activations
/// are ignored).
pub fn recovery_operator(model: &SurrogateModel) -> Array2<f64> {
    let mut op = model.weights[0].clone();
    for w in &model.weights[1..] {
        op = w.dot(&op);
    }
    op
}

/// Writes the operator row by row. Header comments list the column categories
/// and the column boundaries between them.
pub fn operator_heatmap_export(operator: &Array2<f64>, partition: &Partition, path: impl AsRef<Path>) -> Result<()> {
    check_partition(partition, operator.ncols())?;
    let mut s = format!("# recovery operator {}x{}\n", operator.nrows(), operator.ncols());
    let cats: Vec<String> = partition
        .iter()
        .map(|(n, r)| format!("{n}={}..{}", r.start, r.end))
        .collect();
    let _ = writeln!(s, "# categories {}", cats.join(" "));
    let bounds: Vec<String> = partition[..partition.len().saturating_sub(1)]
        .iter()
        .map(|(_, r)| r.end.to_string())
        .collect();
    let _ = writeln!(s, "# boundaries after columns {}", bounds.join(","));
    for row in operator.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    write(path.as_ref(), &s)
}

/// Coefficient of determination of `operator * x` against the full model
/// output, pooled over all rows of `inputs` and all outputs.
pub fn operator_r_squared(model: &SurrogateModel, operator: &Array2<f64>, inputs: &Array2<f64>) -> Result<f64> {
    let full = model.forward_batch(inputs.view())?;
    let linear = inputs.dot(&operator.t());
    let mean = full.mean().unwrap_or(0.0);
    let ss_tot: f64 = full.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = full.iter().zip(&linear).map(|(y, l)| (y - l).powi(2)).sum();
    if ss_tot == 0.0 {
        return Ok(if ss_res == 0.0 { 1.0 } else { f64::NEG_INFINITY });
    }
    Ok(1.0 - ss_res / ss_tot)
}

fn write(path: &Path, s: &str) -> Result<()> {
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
