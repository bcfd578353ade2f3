use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;
use restoro_core::analysis::{
    block_aggregate, operator_heatmap_export, operator_r_squared, recovery_operator, tradeoff, write_aggregate_csv,
    write_tradeoff_csv,
};
use restoro_core::network::synth::{generate, SynthConfig};
use restoro_core::network::{load_network, save_network, validate};
use restoro_core::scenario::{
    build_dataset, generate_set, read_dataset, read_scenarios, write_dataset, write_scenarios, DamageModel, Dataset,
    Encoding, LabelConfig, ScenarioSetConfig, SpatialKernel,
};
use restoro_core::solver::{recovery_time, solve, write_cost_csv, write_plan_csv, SolverMode};
use restoro_core::surrogate::{
    ar_accuracy, init_model, predictions_for, read_model, train, write_model, AdamConfig, SurrogateModel, TrainConfig,
};
use restoro_core::{seed, Error, Network, Result, SolverLimits};

use crate::{BuildDataset, Command, Evaluate, GenNetwork, GenScenarios, Operator, Solve, SolverArgs, Tradeoff, Train};

pub fn dispatch(command: Command, seed: u64) -> Result<()> {
    match command {
        Command::GenNetwork(a) => gen_network(a, seed),
        Command::GenScenarios(a) => gen_scenarios(a, seed),
        Command::Solve(a) => solve_one(a),
        Command::BuildDataset(a) => build(a),
        Command::Train(a) => train_models(a, seed),
        Command::Evaluate(a) => evaluate(a),
        Command::Tradeoff(a) => tradeoff_curves(a),
        Command::Operator(a) => operator(a),
    }
}

/// `5`, `2,4,6` or the inclusive range `2..8`.
pub fn parse_caps(s: &str) -> Result<Vec<u32>> {
    let bad = || Error::InvalidArgument(format!("invalid resource caps `{s}`"));
    let caps: Vec<u32> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        s.split(',').map(|c| c.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if caps.is_empty() || caps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad());
    }
    Ok(caps)
}

fn limits(a: &SolverArgs) -> SolverLimits {
    SolverLimits {
        exact_max_damaged: a.exact_max_damaged,
        exact_max_t: a.exact_max_t,
        ..Default::default()
    }
}

fn open_network(path: &Path) -> Result<Network> {
    Network::new(load_network(path)?)
}

fn model_path(dir: &Path, rc: u32) -> PathBuf {
    dir.join(format!("model_rc{rc}.txt"))
}

fn gen_network(a: GenNetwork, root: u64) -> Result<()> {
    let s = seed::derive(root, "network");
    let cfg = match a.preset.as_deref() {
        Some("shelby-like") => SynthConfig::shelby_like(s),
        Some(other) => return Err(Error::InvalidArgument(format!("unknown preset `{other}`"))),
        None => {
            if a.sizes.is_empty() {
                return Err(Error::InvalidArgument("give --preset or --sizes".into()));
            }
            if a.layers.is_some_and(|l| l != a.sizes.len()) {
                return Err(Error::InvalidArgument(format!(
                    "--layers {} does not match {} sizes",
                    a.layers.unwrap_or(0),
                    a.sizes.len()
                )));
            }
            SynthConfig::with_sizes(&a.sizes, s)
        }
    };
    let spec = generate(&cfg);
    let violations = validate(&spec);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    save_network(&spec, &a.out)?;
    println!("wrote {} nodes, {} arcs to {}", spec.nodes.len(), spec.arcs.len(), a.out.display());
    Ok(())
}

fn gen_scenarios(a: GenScenarios, root: u64) -> Result<()> {
    let net = open_network(&a.network)?;
    let mut model = DamageModel::default();
    if let Some(r) = a.rate {
        model.rate_per_magnitude.insert(a.magnitude, r);
    }
    model.spatial_kernel = a.correlation_length.map(|l| SpatialKernel {
        correlation_length: l,
    });
    model.damage_arcs = a.damage_arcs;
    let flips = match a.flips[..] {
        [lo, hi] => (lo, hi),
        _ => return Err(Error::InvalidArgument("--flips takes `lo,hi`".into())),
    };
    let set = generate_set(
        &net,
        &model,
        &ScenarioSetConfig {
            magnitude: a.magnitude,
            originals: a.count,
            augment_per_original: a.augment,
            flips,
            seed: seed::derive(root, "scenarios"),
        },
    )?;
    let encoding: Encoding = a.encoding.parse()?;
    write_scenarios(&set, encoding, &a.out)?;
    let damaged: usize = set.scenarios.iter().map(|s| s.damaged_count()).sum();
    println!(
        "wrote {} scenarios (mean {:.2} damaged) to {}",
        set.scenarios.len(),
        damaged as f64 / set.scenarios.len().max(1) as f64,
        a.out.display()
    );
    Ok(())
}

fn solve_one(a: Solve) -> Result<()> {
    let net = open_network(&a.network)?;
    let set = read_scenarios(&net, &a.scenario)?;
    let scenario = set.scenarios.get(a.index).ok_or_else(|| {
        Error::InvalidArgument(format!("scenario {} not found ({} in file)", a.index, set.scenarios.len()))
    })?;
    let mode: SolverMode = a.solver.mode.parse()?;
    let plan = solve(&net, scenario, a.rc, a.solver.tmax, mode, &limits(&a.solver))?;
    write_plan_csv(&net, &plan, &a.out)?;
    let costs = a.costs.unwrap_or_else(|| a.out.with_extension("cost.csv"));
    write_cost_csv(&plan.costs, &costs)?;
    let rt = recovery_time(&plan).map_or_else(|| "never".into(), |t| t.to_string());
    println!("total cost {} recovery time {rt}", plan.costs.total);
    Ok(())
}

fn build(a: BuildDataset) -> Result<()> {
    let net = open_network(&a.network)?;
    let set = read_scenarios(&net, &a.scenarios)?;
    let encoding: Encoding = a.encoding.parse()?;
    let mut all = Dataset {
        encoding,
        records: Vec::new(),
    };
    for rc in parse_caps(&a.rc)? {
        let out = build_dataset(
            &net,
            &set,
            &LabelConfig {
                resource_cap: rc,
                t_max: a.solver.tmax,
                mode: a.solver.mode.parse()?,
                limits: limits(&a.solver),
                encoding,
            },
        )?;
        if out.clamped > 0 {
            println!("R_c={rc}: {} node labels clamped to T_max (horizon exhausted)", out.clamped);
        }
        all.records.extend(out.dataset.records);
    }
    write_dataset(&all, &a.out)?;
    println!("wrote {} records to {}", all.records.len(), a.out.display());
    Ok(())
}

fn subset(ds: &Dataset, rc: u32) -> Dataset {
    Dataset {
        encoding: ds.encoding,
        records: ds.records.iter().filter(|r| r.resource_cap == rc).cloned().collect(),
    }
}

fn train_models(a: Train, root: u64) -> Result<()> {
    let ds = read_dataset(&a.dataset)?;
    let n = ds
        .records
        .first()
        .map(|r| r.input.len())
        .ok_or_else(|| Error::InvalidArgument("dataset is empty".into()))?;
    let dims: Vec<usize> = std::iter::once(n).chain(a.hidden.iter().copied()).chain([n]).collect();
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    for rc in parse_caps(&a.rc)? {
        let data = subset(&ds, rc);
        if data.records.is_empty() {
            return Err(Error::InvalidArgument(format!("dataset has no records for R_c = {rc}")));
        }
        let mut model = init_model(&dims, a.activation.parse()?, seed::derive_indexed(root, "init", u64::from(rc)))?;
        model.encoding = ds.encoding;
        model.resource_cap = rc;
        model.t_max = a.tmax;
        let cfg = TrainConfig {
            epochs: a.epochs,
            batch_size: a.batch_size,
            validation_fraction: a.validation_fraction,
            patience: a.patience,
            adam: AdamConfig {
                learning_rate: a.lr,
                ..Default::default()
            },
            masked_loss: a.masked,
            seed: seed::derive_indexed(root, "train", u64::from(rc)),
        };
        let (trained, history) = train(&model, &data, &cfg)?;
        let path = model_path(&a.out, rc);
        write_model(&trained, &path)?;
        let val = history.validation_mse.get(history.best_epoch).copied();
        println!(
            "R_c={rc}: {} records, {} epochs, best epoch {} (validation MSE {}) -> {}",
            data.records.len(),
            history.train_mse.len(),
            history.best_epoch,
            val.map_or_else(|| "n/a".into(), |v| format!("{v:.4}")),
            path.display()
        );
    }
    Ok(())
}

fn evaluate(a: Evaluate) -> Result<()> {
    let ds = read_dataset(&a.dataset)?;
    let caps = match &a.rc {
        Some(s) => parse_caps(s)?,
        None => {
            let mut caps: Vec<u32> = ds.records.iter().map(|r| r.resource_cap).collect();
            caps.sort_unstable();
            caps.dedup();
            caps
        }
    };
    let mut table = String::from("Rc");
    for r in &a.ar {
        let _ = write!(table, ",ar_{r}");
    }
    table.push('\n');
    for rc in caps {
        let model = read_model(model_path(&a.models, rc))?;
        let (preds, truths) = predictions_for(&model, &subset(&ds, rc))?;
        let _ = write!(table, "{rc}");
        for &r in &a.ar {
            let _ = write!(table, ",{:.6}", ar_accuracy(&preds, &truths, r)?);
        }
        table.push('\n');
    }
    print!("{table}");
    if let Some(out) = &a.out {
        std::fs::write(out, &table).map_err(|e| Error::io(out, e))?;
    }
    Ok(())
}

fn tradeoff_curves(a: Tradeoff) -> Result<()> {
    let net = open_network(&a.network)?;
    let set = read_scenarios(&net, &a.scenarios)?;
    let caps = parse_caps(&a.rc)?;
    let models: BTreeMap<u32, SurrogateModel> = caps
        .iter()
        .map(|&rc| Ok((rc, read_model(model_path(&a.models, rc))?)))
        .collect::<Result<_>>()?;
    let mode: SolverMode = a.solver.mode.parse()?;
    let limits = limits(&a.solver);
    let n = a.count.unwrap_or(set.scenarios.len()).min(set.scenarios.len());
    let curves = set.scenarios[..n]
        .par_iter()
        .map(|sc| tradeoff(&net, sc, &caps, &models, a.solver.tmax, mode, &limits))
        .collect::<Result<Vec<_>>>()?;
    write_tradeoff_csv(&curves, &a.out)?;
    let close = curves
        .iter()
        .flat_map(|c| &c.points)
        .filter(|p| p.solver_time.is_some_and(|t| t.abs_diff(p.nn_time) <= 2))
        .count();
    let total: usize = curves.iter().map(|c| c.points.len()).sum();
    println!("{close}/{total} points with surrogate recovery time within 2 steps of the solver");
    Ok(())
}

fn operator(a: Operator) -> Result<()> {
    let model = read_model(&a.model)?;
    let net = open_network(&a.network)?;
    let partition = net.layer_partition();
    let op = recovery_operator(&model);
    operator_heatmap_export(&op, &partition, &a.out)?;
    if let Some(path) = &a.aggregate {
        write_aggregate_csv(&block_aggregate(&model, &partition, a.signed)?, path)?;
    }
    if let Some(path) = &a.scenarios {
        let set = read_scenarios(&net, path)?;
        let n = net.n_nodes();
        let x = Array2::from_shape_fn((set.scenarios.len(), n), |(i, j)| {
            f64::from(model.encoding.encode(!set.scenarios[i].initial.node_up[j]))
        });
        println!("operator R^2 against the full model: {:.6}", operator_r_squared(&model, &op, &x)?);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resource_cap_lists() {
        assert_eq!(parse_caps("2..8").unwrap(), (2..=8).collect::<Vec<_>>());
        assert_eq!(parse_caps("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_caps("5").unwrap(), vec![5]);
        assert_eq!(parse_caps("1, 3,7").unwrap(), vec![1, 3, 7]);
        assert!(parse_caps("3,2").is_err());
        assert!(parse_caps("x").is_err());
    }
}
