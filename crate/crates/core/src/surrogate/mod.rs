//! Fully connected regression network mapping an encoded damage vector to
//! per-node repair steps.

mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;

pub use io::{read_model, write_model};

use crate::error::{Error, Result};
use crate::scenario::{Dataset, Encoding};
use crate::seed;
use crate::solver::{DamageScenario, DEFAULT_T_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        if self == Activation::Relu {
            z.mapv_inplace(|v| v.max(0.0));
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            _ => Err(Error::InvalidArgument(format!("unknown activation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub dims: Vec<usize>,
    /// `weights[l]` has shape `dims[l + 1] x dims[l]`.
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    /// One per hidden layer; the output layer is always linear.
    pub activations: Vec<Activation>,
    pub encoding: Encoding,
    pub resource_cap: u32,
    pub t_max: u32,
}

/// Glorot-uniform weights, zero biases.
pub fn init_model(dims: &[usize], activation: Activation, seed: u64) -> Result<SurrogateModel> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "layer widths {dims:?} need at least two nonzero entries"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-limit..=limit)));
        biases.push(Array1::zeros(fan_out));
    }
    Ok(SurrogateModel {
        dims: dims.to_vec(),
        weights,
        biases,
        activations: vec![activation; dims.len() - 2],
        encoding: Encoding::default(),
        resource_cap: 0,
        t_max: DEFAULT_T_MAX,
    })
}

impl SurrogateModel {
    pub fn n_inputs(&self) -> usize {
        self.dims[0]
    }

    pub fn n_outputs(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Array2::len).sum::<usize>() + self.biases.iter().map(Array1::len).sum::<usize>()
    }

    /// Checks the shape chain and that every parameter is finite.
    pub fn check(&self) -> Result<()> {
        let layers = self.dims.len().saturating_sub(1);
        if layers == 0 || self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::InvalidArgument("weight and bias count must match the layer count".into()));
        }
        if self.activations.len() != layers - 1 {
            return Err(Error::Dimension {
                what: "hidden activations",
                expected: layers - 1,
                actual: self.activations.len(),
            });
        }
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if w.dim() != (self.dims[l + 1], self.dims[l]) || b.len() != self.dims[l + 1] {
                return Err(Error::InvalidArgument(format!("layer {l} parameters do not match dims")));
            }
            if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("layer {l} has non-finite parameters")));
            }
        }
        Ok(())
    }

    /// Forward pass over a batch of row vectors.
    pub fn forward_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::Dimension {
                what: "model input",
                expected: self.n_inputs(),
                actual: x.ncols(),
            });
        }
        let mut a = x.to_owned();
        for l in 0..self.weights.len() {
            let mut z = a.dot(&self.weights[l].t()) + &self.biases[l];
            if let Some(act) = self.activations.get(l) {
                act.apply(&mut z);
            }
            a = z;
        }
        Ok(a)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        Ok(self.forward_batch(view)?.into_raw_vec_and_offset().0)
    }
}

/// Parameter-shaped container used for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    fn zeros_like(model: &SurrogateModel) -> Self {
        Gradients {
            weights: model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
        }
    }
}

/// Mean squared error over the batch and all output coordinates (or only the
/// coordinates where `mask` is 1) together with its gradient.
pub fn loss_and_gradients(
    model: &SurrogateModel,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    mask: Option<ArrayView2<'_, f64>>,
) -> Result<(f64, Gradients)> {
    if x.nrows() == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if y.dim() != (x.nrows(), model.n_outputs()) {
        return Err(Error::Dimension {
            what: "model target",
            expected: model.n_outputs(),
            actual: y.ncols(),
        });
    }
    if x.ncols() != model.n_inputs() {
        return Err(Error::Dimension {
            what: "model input",
            expected: model.n_inputs(),
            actual: x.ncols(),
        });
    }
    let layers = model.weights.len();
    // acts[l] is the input to layer l; pre-activations are needed for ReLU'.
    let mut acts = Vec::with_capacity(layers + 1);
    let mut pre = Vec::with_capacity(layers);
    acts.push(x.to_owned());
    for l in 0..layers {
        let z = acts[l].dot(&model.weights[l].t()) + &model.biases[l];
        let mut a = z.clone();
        if let Some(act) = model.activations.get(l) {
            act.apply(&mut a);
        }
        pre.push(z);
        acts.push(a);
    }

    let mut err = &acts[layers] - &y;
    let count = match mask {
        Some(m) => {
            err *= &m;
            m.sum()
        }
        None => err.len() as f64,
    };
    if count == 0.0 {
        return Ok((0.0, Gradients::zeros_like(model)));
    }
    let mse = err.iter().map(|e| e * e).sum::<f64>() / count;

    let mut grads = Gradients::zeros_like(model);
    let mut delta = err * (2.0 / count);
    for l in (0..layers).rev() {
        grads.weights[l] = delta.t().dot(&acts[l]);
        grads.biases[l] = delta.sum_axis(Axis(0));
        if l == 0 {
            break;
        }
        let mut back = delta.dot(&model.weights[l]);
        if model.activations[l - 1] == Activation::Relu {
            Zip::from(&mut back).and(&pre[l - 1]).for_each(|d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
        }
        delta = back;
    }
    Ok((mse, grads))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first: Gradients,
    pub second: Gradients,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(model: &SurrogateModel, config: AdamConfig) -> Self {
        AdamState {
            step: 0,
            first: Gradients::zeros_like(model),
            second: Gradients::zeros_like(model),
            config,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(model: &mut SurrogateModel, state: &mut AdamState, grads: &Gradients) {
    state.step += 1;
    let AdamConfig {
        learning_rate: lr,
        beta1: b1,
        beta2: b2,
        epsilon: eps,
    } = state.config;
    let c1 = 1.0 - b1.powi(state.step as i32);
    let c2 = 1.0 - b2.powi(state.step as i32);
    let update = |p: f64, m: &mut f64, v: &mut f64, g: f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        p - lr * (*m / c1) / ((*v / c2).sqrt() + eps)
    };
    for l in 0..model.weights.len() {
        Zip::from(&mut model.weights[l])
            .and(&mut state.first.weights[l])
            .and(&mut state.second.weights[l])
            .and(&grads.weights[l])
            .for_each(|p, m, v, &g| *p = update(*p, m, v, g));
        Zip::from(&mut model.biases[l])
            .and(&mut state.first.biases[l])
            .and(&mut state.second.biases[l])
            .and(&grads.biases[l])
            .for_each(|p, m, v, &g| *p = update(*p, m, v, g));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub patience: usize,
    pub adam: AdamConfig,
    /// Restrict the loss to damaged nodes.
    pub masked_loss: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            validation_fraction: 0.1,
            patience: 10,
            adam: AdamConfig::default(),
            masked_loss: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub train_mse: Vec<f64>,
    /// Empty when the dataset is too small to hold out a validation split.
    pub validation_mse: Vec<f64>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
}

struct Matrices {
    x: Array2<f64>,
    y: Array2<f64>,
    mask: Array2<f64>,
}

impl Matrices {
    fn new(ds: &Dataset, rows: &[usize]) -> Self {
        let n = ds.records[0].input.len();
        let mut x = Array2::zeros((rows.len(), n));
        let mut y = Array2::zeros((rows.len(), n));
        let mut mask = Array2::zeros((rows.len(), n));
        for (r, &i) in rows.iter().enumerate() {
            let rec = &ds.records[i];
            for j in 0..n {
                x[[r, j]] = f64::from(rec.input[j]);
                y[[r, j]] = f64::from(rec.target[j]);
                mask[[r, j]] = f64::from(u8::from(ds.encoding.is_damaged(rec.input[j])));
            }
        }
        Matrices { x, y, mask }
    }

    fn rows(&self, idx: &[usize]) -> Matrices {
        Matrices {
            x: self.x.select(Axis(0), idx),
            y: self.y.select(Axis(0), idx),
            mask: self.mask.select(Axis(0), idx),
        }
    }

    fn loss(&self, model: &SurrogateModel, masked: bool) -> Result<f64> {
        let mask = masked.then(|| self.mask.view());
        Ok(loss_and_gradients(model, self.x.view(), self.y.view(), mask)?.0)
    }
}

/// Mini-batch Adam with per-epoch shuffling and early stopping on the
/// validation split. The parameters of the best epoch are returned.
pub fn train(model: &SurrogateModel, dataset: &Dataset, cfg: &TrainConfig) -> Result<(SurrogateModel, History)> {
    model.check()?;
    if dataset.records.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty dataset".into()));
    }
    if dataset.encoding != model.encoding {
        return Err(Error::InvalidArgument(format!(
            "dataset encoding {} does not match model encoding {}",
            dataset.encoding, model.encoding
        )));
    }
    dataset.check(model.n_inputs())?;
    if model.n_outputs() != model.n_inputs() {
        return Err(Error::Dimension {
            what: "model output",
            expected: model.n_inputs(),
            actual: model.n_outputs(),
        });
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }

    let mut order: Vec<usize> = (0..dataset.records.len()).collect();
    order.shuffle(&mut seed::rng(seed::derive(cfg.seed, "split")));
    let n_val = ((order.len() as f64) * cfg.validation_fraction).round() as usize;
    let n_val = n_val.min(order.len() - 1);
    let (val_rows, train_rows) = order.split_at(n_val);
    let train_set = Matrices::new(dataset, train_rows);
    let val_set = (n_val > 0).then(|| Matrices::new(dataset, val_rows));

    let mut current = model.clone();
    let mut adam = AdamState::new(&current, cfg.adam);
    let mut history = History::default();
    let mut best = (f64::INFINITY, current.clone());
    let mut stale = 0;
    let mut idx: Vec<usize> = (0..train_rows.len()).collect();
    for epoch in 0..cfg.epochs {
        idx.shuffle(&mut seed::rng(seed::derive_indexed(cfg.seed, "epoch", epoch as u64)));
        for chunk in idx.chunks(cfg.batch_size) {
            let b = train_set.rows(chunk);
            let mask = cfg.masked_loss.then(|| b.mask.view());
            let (_, g) = loss_and_gradients(&current, b.x.view(), b.y.view(), mask)?;
            adam_step(&mut current, &mut adam, &g);
        }
        let train_loss = train_set.loss(&current, cfg.masked_loss)?;
        history.train_mse.push(train_loss);
        let score = match &val_set {
            Some(v) => {
                let l = v.loss(&current, cfg.masked_loss)?;
                history.validation_mse.push(l);
                l
            }
            None => train_loss,
        };
        if score < best.0 {
            best = (score, current.clone());
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok((best.1, history))
}

/// Predicted repair step per damaged node.
pub type Prediction = BTreeMap<usize, u32>;

/// Rounds the output for every damaged node and clamps it to `[1, T_max]`.
/// Undamaged nodes get no assignment.
pub fn predict_plan(model: &SurrogateModel, scenario: &DamageScenario) -> Result<Prediction> {
    let bits: Vec<u8> = scenario
        .initial
        .node_up
        .iter()
        .map(|&up| model.encoding.encode(!up))
        .collect();
    predict_encoded(model, &bits)
}

/// Same as [`predict_plan`] for an already encoded input vector.
pub fn predict_encoded(model: &SurrogateModel, input: &[u8]) -> Result<Prediction> {
    let x: Vec<f64> = input.iter().map(|&b| f64::from(b)).collect();
    let y = model.forward(&x)?;
    let t_max = model.t_max.max(1);
    Ok(input
        .iter()
        .zip(y)
        .enumerate()
        .filter(|(_, (&b, _))| model.encoding.is_damaged(b))
        .map(|(i, (_, v))| (i, v.round().clamp(1.0, f64::from(t_max)) as u32))
        .collect())
}

/// Pooled fraction of damaged nodes whose predicted step is within `r` of the
/// true step. `truths` defines the damaged nodes of each scenario.
pub fn ar_accuracy(predictions: &[Prediction], truths: &[Prediction], r: u32) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::Dimension {
            what: "prediction set",
            expected: truths.len(),
            actual: predictions.len(),
        });
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    for (p, t) in predictions.iter().zip(truths) {
        for (node, &truth) in t {
            let pred = p
                .get(node)
                .ok_or_else(|| Error::InvalidArgument(format!("no prediction for damaged node {node}")))?;
            total += 1;
            if pred.abs_diff(truth) <= r {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::InvalidArgument("evaluation set has no damaged nodes".into()));
    }
    Ok(hits as f64 / total as f64)
}

/// Predictions and solver truths for every record of a dataset.
pub fn predictions_for(model: &SurrogateModel, dataset: &Dataset) -> Result<(Vec<Prediction>, Vec<Prediction>)> {
    let ds = dataset.with_encoding(model.encoding);
    let mut preds = Vec::with_capacity(ds.records.len());
    let mut truths = Vec::with_capacity(ds.records.len());
    for rec in &ds.records {
        preds.push(predict_encoded(model, &rec.input)?);
        truths.push(
            rec.damaged(ds.encoding)
                .zip(&rec.target)
                .enumerate()
                .filter(|(_, (d, _))| *d)
                .map(|(i, (_, &t))| (i, t))
                .collect(),
        );
    }
    Ok((preds, truths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Provenance, Record};
    use ndarray::array;

    #[test]
    fn parameter_counts() {
        let big = init_model(&[125, 400, 400, 400, 125], Activation::Relu, 1).unwrap();
        assert_eq!(big.parameter_count(), 125 * 400 + 400 + 2 * (400 * 400 + 400) + 400 * 125 + 125);
        assert_eq!(big.parameter_count(), 421_325);
        let small = init_model(&[125, 4, 125], Activation::Identity, 1).unwrap();
        assert_eq!(small.parameter_count(), 1_129);
        assert_eq!(small, init_model(&[125, 4, 125], Activation::Identity, 1).unwrap());
        assert!(init_model(&[5], Activation::Relu, 1).is_err());
        assert!(init_model(&[5, 0, 5], Activation::Relu, 1).is_err());
    }

    #[test]
    fn init_respects_glorot_limit() {
        let m = init_model(&[30, 10, 30], Activation::Relu, 7).unwrap();
        let limit = (6.0f64 / 40.0).sqrt();
        assert!(m.weights.iter().flatten().all(|w| w.abs() <= limit));
        assert!(m.biases.iter().flatten().all(|&b| b == 0.0));
    }

    #[test]
    fn trivial_forward_passes() {
        let mut m = init_model(&[3, 4, 3], Activation::Relu, 1).unwrap();
        m.weights.iter_mut().for_each(|w| w.fill(0.0));
        assert_eq!(m.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);

        let mut id = init_model(&[3, 3], Activation::Identity, 1).unwrap();
        id.weights[0] = Array2::eye(3);
        assert_eq!(id.forward(&[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
        assert!(matches!(id.forward(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn perfect_fit_has_zero_loss_and_gradient() {
        let mut m = init_model(&[2, 2], Activation::Identity, 1).unwrap();
        m.weights[0] = Array2::eye(2);
        let x = array![[1.0, 2.0], [3.0, -1.0]];
        let (mse, g) = loss_and_gradients(&m, x.view(), x.view(), None).unwrap();
        assert_eq!(mse, 0.0);
        assert!(g.weights[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicated_batch_keeps_loss_and_gradients() {
        let m = init_model(&[3, 5, 3], Activation::Relu, 2).unwrap();
        let x = array![[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]];
        let y = array![[2.0, 0.0, 3.0], [0.0, 1.0, 4.0]];
        let x2 = ndarray::concatenate![Axis(0), x, x];
        let y2 = ndarray::concatenate![Axis(0), y, y];
        let (a, ga) = loss_and_gradients(&m, x.view(), y.view(), None).unwrap();
        let (b, gb) = loss_and_gradients(&m, x2.view(), y2.view(), None).unwrap();
        assert!((a - b).abs() < 1e-12);
        for (p, q) in ga.weights.iter().zip(&gb.weights) {
            assert!(p.iter().zip(q).all(|(u, v)| (u - v).abs() < 1e-12));
        }
        assert!(loss_and_gradients(&m, x.slice(ndarray::s![0..0, ..]), y.slice(ndarray::s![0..0, ..]), None).is_err());
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut m = init_model(&[2, 2], Activation::Identity, 3).unwrap();
        let before = m.clone();
        let mut st = AdamState::new(&m, AdamConfig::default());
        let mut g = Gradients::zeros_like(&m);
        adam_step(&mut m, &mut st, &g);
        assert_eq!(m, before);

        g.weights[0][[0, 1]] = 3.0;
        g.biases[0][1] = -0.5;
        adam_step(&mut m, &mut st, &g);
        let dw = m.weights[0][[0, 1]] - before.weights[0][[0, 1]];
        let db = m.biases[0][1] - before.biases[0][1];
        // second step: bias-corrected moments of a (0, g) gradient sequence
        let m_hat = 0.1 * 3.0 / (1.0 - 0.81);
        let v_hat = 0.001 * 9.0 / (1.0 - 0.999f64.powi(2));
        assert!((dw + 0.01 * m_hat / (v_hat.sqrt() + 1e-8)).abs() < 1e-12);
        assert!(db > 0.0);
        assert_eq!(m.weights[0][[0, 0]], before.weights[0][[0, 0]]);

        let mut fresh = before.clone();
        let mut st = AdamState::new(&fresh, AdamConfig::default());
        adam_step(&mut fresh, &mut st, &g);
        let step = fresh.weights[0][[0, 1]] - before.weights[0][[0, 1]];
        assert!((step + 0.01).abs() < 1e-9);
    }

    fn toy_dataset(n: usize, count: usize) -> Dataset {
        let records = (0..count)
            .map(|i| {
                let input: Vec<u8> = (0..n).map(|j| u8::from((i + j) % 3 == 0)).collect();
                let target = input.iter().enumerate().map(|(j, &b)| u32::from(b) * (1 + j as u32 % 3)).collect();
                Record {
                    input,
                    target,
                    resource_cap: 2,
                    magnitude: Some(6),
                    provenance: Provenance::Original,
                }
            })
            .collect();
        Dataset {
            encoding: Encoding::DamagedIs1,
            records,
        }
    }

    #[test]
    fn single_record_is_overfit() {
        let m = init_model(&[6, 8, 6], Activation::Relu, 4).unwrap();
        let ds = toy_dataset(6, 1);
        let cfg = TrainConfig {
            epochs: 500,
            patience: 500,
            ..Default::default()
        };
        let (_, h) = train(&m, &ds, &cfg).unwrap();
        assert!(h.validation_mse.is_empty());
        assert!(*h.train_mse.last().unwrap() < 1e-3);
    }

    #[test]
    fn zero_learning_rate_leaves_model_unchanged() {
        let m = init_model(&[6, 8, 6], Activation::Relu, 4).unwrap();
        let ds = toy_dataset(6, 20);
        let cfg = TrainConfig {
            epochs: 5,
            adam: AdamConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let (out, h) = train(&m, &ds, &cfg).unwrap();
        assert_eq!(out, m);
        assert!(h.train_mse.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(h.validation_mse.len(), 5);
    }

    #[test]
    fn training_is_deterministic_and_checks_inputs() {
        let m = init_model(&[6, 8, 6], Activation::Relu, 4).unwrap();
        let ds = toy_dataset(6, 30);
        let cfg = TrainConfig {
            epochs: 8,
            masked_loss: true,
            ..Default::default()
        };
        assert_eq!(train(&m, &ds, &cfg).unwrap(), train(&m, &ds, &cfg).unwrap());
        let empty = Dataset {
            encoding: Encoding::DamagedIs1,
            records: vec![],
        };
        assert!(train(&m, &empty, &cfg).is_err());
        assert!(train(&m, &ds.with_encoding(Encoding::DamagedIs0), &cfg).is_err());
    }

    #[test]
    fn prediction_masks_and_clamps() {
        let mut m = init_model(&[3, 3], Activation::Identity, 1).unwrap();
        m.weights[0].fill(0.0);
        m.t_max = 20;
        m.biases[0] = array![0.4, 26.0, 7.6];
        assert!(predict_encoded(&m, &[0, 0, 0]).unwrap().is_empty());
        let p = predict_encoded(&m, &[1, 1, 1]).unwrap();
        assert_eq!(p, Prediction::from([(0, 1), (1, 20), (2, 8)]));
        let p = predict_encoded(&m, &[0, 1, 0]).unwrap();
        assert_eq!(p.keys().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn ar_accuracy_pools_nodes() {
        let truth = vec![Prediction::from([(0, 1), (3, 5)]), Prediction::from([(1, 2)])];
        let pred = vec![Prediction::from([(0, 2), (3, 1)]), Prediction::from([(1, 2)])];
        assert_eq!(ar_accuracy(&truth, &truth, 0).unwrap(), 1.0);
        assert!((ar_accuracy(&pred, &truth, 0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((ar_accuracy(&pred, &truth, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ar_accuracy(&pred, &truth, 4).unwrap(), 1.0);
        assert!(ar_accuracy(&[Prediction::new()], &[Prediction::new()], 1).is_err());
    }
}
