//! Finite-difference verification of backpropagation.

use super::model::MlpModel;
use super::train::{accumulate_gradients, sample_loss, Gradients, Sample};
use crate::error::Result;

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Relative errors below this magnitude are measured against it instead,
/// so near-zero gradients do not amplify rounding noise.
pub const RELATIVE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub max_abs_analytic: f64,
    pub max_abs_numeric: f64,
    pub parameters: usize,
}

pub fn gradient_check(model: &MlpModel, sample: &Sample) -> Result<GradCheckReport> {
    gradient_check_with_step(model, sample, DEFAULT_FD_STEP)
}

/// Compares analytic gradients to central differences over every parameter.
pub fn gradient_check_with_step(model: &MlpModel, sample: &Sample, step: f64) -> Result<GradCheckReport> {
    let mut analytic = Gradients::zeros_like(model);
    accumulate_gradients(model, sample, &mut analytic)?;

    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        max_abs_analytic: 0.0,
        max_abs_numeric: 0.0,
        parameters: 0,
    };
    for li in 0..model.layers.len() {
        let n_w = model.layers[li].weights.len();
        let n_b = model.layers[li].biases.len();
        for k in 0..n_w + n_b {
            let (orig, a) = if k < n_w {
                (model.layers[li].weights[k], analytic.layers[li].weights[k])
            } else {
                (model.layers[li].biases[k - n_w], analytic.layers[li].biases[k - n_w])
            };
            let set = |p: &mut MlpModel, v: f64| {
                if k < n_w {
                    p.layers[li].weights[k] = v;
                } else {
                    p.layers[li].biases[k - n_w] = v;
                }
            };
            set(&mut probe, orig + step);
            let up = sample_loss(&probe, sample)?;
            set(&mut probe, orig - step);
            let down = sample_loss(&probe, sample)?;
            set(&mut probe, orig);
            let numeric = (up - down) / (2.0 * step);
            let denom = a.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
            report.max_relative_error = report.max_relative_error.max((a - numeric).abs() / denom);
            report.max_abs_analytic = report.max_abs_analytic.max(a.abs());
            report.max_abs_numeric = report.max_abs_numeric.max(numeric.abs());
            report.parameters += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::model::{init_model, Activation, Layer};
    use super::*;

    fn probe_sample(n: usize) -> Sample {
        Sample::new((0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect(), 1)
    }

    #[test]
    fn small_tanh_model_matches() {
        let m = init_model(&[6, 5, 4, 1], 6, 2).unwrap().with_hidden_activation(Activation::Tanh);
        let r = gradient_check(&m, &probe_sample(6)).unwrap();
        assert_eq!(r.parameters, m.parameter_count());
        assert!(r.max_relative_error < 1e-5, "{r:?}");
    }

    #[test]
    fn symmetric_point_has_zero_gradient_in_hidden_weights() {
        // Zero output weights: nothing upstream of the output receives gradient.
        let mut m = init_model(&[3, 2, 1], 3, 0).unwrap();
        m.layers[1] = Layer::zeros(2, 1);
        let mut g = Gradients::zeros_like(&m);
        accumulate_gradients(&m, &probe_sample(3), &mut g).unwrap();
        assert!(g.layers[0].weights.iter().all(|w| *w == 0.0));
        let r = gradient_check(&m, &probe_sample(3)).unwrap();
        assert!(r.max_relative_error < 1e-5);
    }
}
