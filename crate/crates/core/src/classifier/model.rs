//! Fully-connected feed-forward network with a single logistic output.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Module, Result};
use crate::rng::stream_rng;

pub const DEFAULT_LAYER_DIMS: [usize; 7] = [256, 128, 64, 32, 16, 8, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
    Logistic,
    Identity,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Logistic => "logistic",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "logistic" => Some(Activation::Logistic),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Logistic => logistic(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Logistic => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Dense layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    pub fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + dot(row, x)
        }));
    }
}

/// Dot product with four independent accumulators so the loop vectorises.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<Layer>,
    pub hidden_activation: Activation,
}

fn validate_dims(dims: &[usize], input_len: usize) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::invalid(
            Module::Classifier,
            "need at least an input and an output layer",
        ));
    }
    if dims.contains(&0) {
        return Err(Error::invalid(Module::Classifier, "layer widths must be > 0"));
    }
    if dims[0] != input_len {
        return Err(Error::invalid(
            Module::Classifier,
            format!("first layer has {} inputs, expected {input_len}", dims[0]),
        ));
    }
    if *dims.last().unwrap() != 1 {
        return Err(Error::invalid(Module::Classifier, "output layer must have exactly one unit"));
    }
    Ok(())
}

/// Weights ~ N(0, 1/fan_in), zero biases.
pub fn init_model(layer_dims: &[usize], input_len: usize, seed: u64) -> Result<MlpModel> {
    validate_dims(layer_dims, input_len)?;
    let mut rng = stream_rng(seed, "mlp-init", 0);
    let layers = layer_dims
        .windows(2)
        .map(|d| {
            let scale = 1.0 / (d[0] as f64).sqrt();
            let mut layer = Layer::zeros(d[0], d[1]);
            for w in &mut layer.weights {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w = z * scale;
            }
            layer
        })
        .collect();
    Ok(MlpModel {
        layer_dims: layer_dims.to_vec(),
        layers,
        hidden_activation: Activation::default(),
    })
}

impl MlpModel {
    pub fn from_layers(layers: Vec<Layer>, hidden_activation: Activation) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::invalid(Module::Classifier, "model has no layers"))?;
        let mut dims = vec![first.inputs];
        for l in &layers {
            if l.inputs != *dims.last().unwrap()
                || l.weights.len() != l.inputs * l.outputs
                || l.biases.len() != l.outputs
            {
                return Err(Error::invalid(Module::Classifier, "inconsistent layer shapes"));
            }
            dims.push(l.outputs);
        }
        validate_dims(&dims, first.inputs)?;
        Ok(Self {
            layer_dims: dims,
            layers,
            hidden_activation,
        })
    }

    pub fn input_len(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn with_hidden_activation(mut self, act: Activation) -> Self {
        self.hidden_activation = act;
        self
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_len() {
            return Err(Error::invalid(
                Module::Classifier,
                format!("input has {} samples, model expects {}", x.len(), self.input_len()),
            ));
        }
        Ok(())
    }

    /// Pre-sigmoid output.
    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&a, &mut z);
            if i == last {
                return Ok(z[0]);
            }
            a.clear();
            a.extend(z.iter().map(|&v| self.hidden_activation.apply(v)));
        }
        unreachable!("model has at least one layer")
    }

    /// Score in (0, 1); above 0.5 means detector 2 (label 1).
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.logit(x).map(logistic)
    }

    pub fn forward_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.par_iter().map(|x| self.forward(x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(self.forward(x)? > 0.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shapes() {
        let m = init_model(&DEFAULT_LAYER_DIMS, 256, 1).unwrap();
        assert_eq!(m.layers.len(), 6);
        for (l, d) in m.layers.iter().zip(DEFAULT_LAYER_DIMS.windows(2)) {
            assert_eq!((l.inputs, l.outputs), (d[0], d[1]));
            assert_eq!(l.weights.len(), d[0] * d[1]);
            assert!(l.biases.iter().all(|b| *b == 0.0));
        }
    }

    #[test]
    fn seeded_init() {
        let a = init_model(&[8, 4, 1], 8, 0).unwrap();
        assert_eq!(a, init_model(&[8, 4, 1], 8, 0).unwrap());
        assert_ne!(a, init_model(&[8, 4, 1], 8, 1).unwrap());
    }

    #[test]
    fn bad_dims_rejected() {
        assert!(init_model(&[128, 1], 256, 0).is_err());
        assert!(init_model(&[256, 2], 256, 0).is_err());
        assert!(init_model(&[256], 256, 0).is_err());
        assert!(init_model(&[256, 0, 1], 256, 0).is_err());
    }

    #[test]
    fn zero_network_scores_half() {
        let layers = vec![Layer::zeros(3, 2), Layer::zeros(2, 1)];
        let m = MlpModel::from_layers(layers, Activation::Relu).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), 0.5);
    }

    #[test]
    fn hand_built_network() {
        let l1 = Layer {
            inputs: 2,
            outputs: 2,
            weights: vec![1.0, -1.0, 0.5, 2.0],
            biases: vec![0.0, -1.0],
        };
        let l2 = Layer {
            inputs: 2,
            outputs: 1,
            weights: vec![1.5, -0.5],
            biases: vec![0.25],
        };
        let m = MlpModel::from_layers(vec![l1, l2], Activation::Relu).unwrap();
        // h = relu([0.3 - 0.7, 0.15 + 1.4 - 1]) = [0, 0.55]
        let z: f64 = 0.25 - 0.5 * 0.55;
        let expected = 1.0 / (1.0 + (-z).exp());
        assert!((m.forward(&[0.3, 0.7]).unwrap() - expected).abs() < 1e-12);
        assert_eq!(m.forward_batch(&[vec![0.3, 0.7]]).unwrap()[0], m.forward(&[0.3, 0.7]).unwrap());
    }

    #[test]
    fn wrong_input_length() {
        let m = init_model(&[4, 1], 4, 0).unwrap();
        assert!(m.forward(&[1.0; 3]).is_err());
    }

    #[test]
    fn logistic_is_stable() {
        assert_eq!(logistic(-1000.0), 0.0);
        assert_eq!(logistic(1000.0), 1.0);
        assert_eq!(logistic(0.0), 0.5);
    }
}
