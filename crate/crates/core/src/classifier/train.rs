//! Backpropagation, binary cross-entropy and the training loop.

use rand::seq::SliceRandom;

use super::model::{logistic, Layer, MlpModel};
use crate::emission::WaveformRecord;
use crate::error::{Error, Module, Result};
use crate::rng::stream_rng;

/// One labelled input vector; label 0 is detector 1, label 1 detector 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub label: u8,
}

impl Sample {
    pub fn new(input: Vec<f64>, label: u8) -> Self {
        Self { input, label }
    }
}

/// Converts labelled records; unlabelled records are rejected.
pub fn samples_from_records(ws: &[WaveformRecord]) -> Result<Vec<Sample>> {
    ws.iter()
        .enumerate()
        .map(|(i, w)| match w.label {
            Some(l @ (0 | 1)) => Ok(Sample::new(w.samples.clone(), l)),
            _ => Err(Error::invalid(
                Module::Classifier,
                format!("record {i} has no 0/1 detector label"),
            )),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    GradientDescent,
    #[default]
    Adam,
}

impl Optimizer {
    pub fn as_str(self) -> &'static str {
        match self {
            Optimizer::GradientDescent => "sgd",
            Optimizer::Adam => "adam",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sgd" | "gd" => Some(Optimizer::GradientDescent),
            "adam" => Some(Optimizer::Adam),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// 0 means full batch.
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Stop after this many epochs without a lower training loss.
    pub patience: Option<usize>,
    /// L2 penalty on weights (not biases), added to the gradient.
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 300,
            batch_size: 16,
            seed: 0,
            optimizer: Optimizer::Adam,
            patience: None,
            weight_decay: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid(Module::Classifier, "learning rate must be > 0"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid(Module::Classifier, "weight decay must be >= 0"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid(Module::Classifier, "epochs must be >= 1"));
        }
        Ok(())
    }
}

/// Gradients with the same layout as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.biases.iter_mut()).for_each(|g| *g *= s);
        }
    }
}

/// `−[y·ln p + (1−y)·ln(1−p)]` evaluated from the logit without overflow.
pub fn bce_with_logit(z: f64, y: u8) -> f64 {
    let softplus = |x: f64| x.max(0.0) + (-x.abs()).exp().ln_1p();
    if y == 1 {
        softplus(-z)
    } else {
        softplus(z)
    }
}

pub fn sample_loss(model: &MlpModel, s: &Sample) -> Result<f64> {
    Ok(bce_with_logit(model.logit(&s.input)?, s.label))
}

/// Mean cross-entropy over a dataset.
pub fn dataset_loss(model: &MlpModel, data: &[Sample]) -> Result<f64> {
    let mut total = 0.0;
    for s in data {
        total += sample_loss(model, s)?;
    }
    Ok(total / data.len().max(1) as f64)
}

/// Adds the loss gradient of one sample to `grads`; returns the loss.
pub fn accumulate_gradients(model: &MlpModel, s: &Sample, grads: &mut Gradients) -> Result<f64> {
    model.check_input(&s.input)?;
    let act = model.hidden_activation;
    let n = model.layers.len();
    // activations[i] is the input to layer i; pre[i] its affine output.
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(n);
    activations.push(s.input.clone());
    for (i, layer) in model.layers.iter().enumerate() {
        let mut z = Vec::with_capacity(layer.outputs);
        layer.affine(&activations[i], &mut z);
        if i + 1 < n {
            activations.push(z.iter().map(|&v| act.apply(v)).collect());
        }
        pre.push(z);
    }
    let logit = pre[n - 1][0];
    let y = f64::from(s.label);
    let mut delta = vec![logistic(logit) - y];

    for i in (0..n).rev() {
        let layer = &model.layers[i];
        let g = &mut grads.layers[i];
        let a_in = &activations[i];
        for (o, d) in delta.iter().enumerate() {
            g.biases[o] += d;
            let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (gw, a) in row.iter_mut().zip(a_in) {
                *gw += d * a;
            }
        }
        if i == 0 {
            break;
        }
        let mut next = vec![0.0; layer.inputs];
        for (o, d) in delta.iter().enumerate() {
            let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            for (nx, w) in next.iter_mut().zip(row) {
                *nx += d * w;
            }
        }
        for (k, nx) in next.iter_mut().enumerate() {
            *nx *= act.derivative(pre[i - 1][k], activations[i][k]);
        }
        delta = next;
    }
    Ok(bce_with_logit(logit, s.label))
}

/// Mean-loss gradient over `batch`.
pub fn batch_gradients(model: &MlpModel, batch: &[&Sample]) -> Result<Gradients> {
    let mut g = Gradients::zeros_like(model);
    for s in batch {
        accumulate_gradients(model, s, &mut g)?;
    }
    g.scale(1.0 / batch.len().max(1) as f64);
    Ok(g)
}

struct AdamState {
    m: Gradients,
    v: Gradients,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn apply_step(model: &mut MlpModel, g: &Gradients, cfg: &TrainConfig, adam: &mut Option<AdamState>) {
    let lr = cfg.learning_rate;
    match adam {
        None => {
            for (l, gl) in model.layers.iter_mut().zip(&g.layers) {
                for (p, d) in l.weights.iter_mut().zip(&gl.weights) {
                    *p -= lr * d;
                }
                for (p, d) in l.biases.iter_mut().zip(&gl.biases) {
                    *p -= lr * d;
                }
            }
        }
        Some(st) => {
            st.t += 1;
            let c1 = 1.0 - BETA1.powi(st.t);
            let c2 = 1.0 - BETA2.powi(st.t);
            let update = |p: &mut f64, d: f64, m: &mut f64, v: &mut f64| {
                *m = BETA1 * *m + (1.0 - BETA1) * d;
                *v = BETA2 * *v + (1.0 - BETA2) * d * d;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
            };
            for (((l, gl), ml), vl) in model
                .layers
                .iter_mut()
                .zip(&g.layers)
                .zip(&mut st.m.layers)
                .zip(&mut st.v.layers)
            {
                for (((p, d), m), v) in l
                    .weights
                    .iter_mut()
                    .zip(&gl.weights)
                    .zip(&mut ml.weights)
                    .zip(&mut vl.weights)
                {
                    update(p, *d, m, v);
                }
                for (((p, d), m), v) in l
                    .biases
                    .iter_mut()
                    .zip(&gl.biases)
                    .zip(&mut ml.biases)
                    .zip(&mut vl.biases)
                {
                    update(p, *d, m, v);
                }
            }
        }
    }
}

/// Mini-batch training on binary cross-entropy. Returns the trained model
/// and the full-dataset loss after every epoch.
pub fn train(model: &MlpModel, data: &[Sample], cfg: &TrainConfig) -> Result<(MlpModel, Vec<f64>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::invalid(Module::Classifier, "training set is empty"));
    }
    if let Some(s) = data.iter().find(|s| s.label > 1) {
        return Err(Error::invalid(Module::Classifier, format!("label {} is not 0 or 1", s.label)));
    }
    if data.iter().all(|s| s.label == data[0].label) {
        return Err(Error::invalid(Module::Classifier, "training set contains a single class"));
    }
    for s in data {
        model.check_input(&s.input)?;
    }

    let mut model = model.clone();
    let mut rng = stream_rng(cfg.seed, "train-shuffle", 0);
    let mut adam = match cfg.optimizer {
        Optimizer::Adam => Some(AdamState {
            m: Gradients::zeros_like(&model),
            v: Gradients::zeros_like(&model),
            t: 0,
        }),
        Optimizer::GradientDescent => None,
    };
    let batch = if cfg.batch_size == 0 {
        data.len()
    } else {
        cfg.batch_size.min(data.len())
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0;
    for _ in 0..cfg.epochs {
        if batch < data.len() {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            let refs: Vec<&Sample> = chunk.iter().map(|&i| &data[i]).collect();
            let mut g = batch_gradients(&model, &refs)?;
            if cfg.weight_decay > 0.0 {
                for (gl, l) in g.layers.iter_mut().zip(&model.layers) {
                    for (d, w) in gl.weights.iter_mut().zip(&l.weights) {
                        *d += cfg.weight_decay * w;
                    }
                }
            }
            apply_step(&mut model, &g, cfg, &mut adam);
        }
        let loss = dataset_loss(&model, data)?;
        history.push(loss);
        if loss < best {
            best = loss;
            stale = 0;
        } else {
            stale += 1;
        }
        if cfg.patience.is_some_and(|p| stale >= p) {
            break;
        }
    }
    Ok((model, history))
}
