use super::model::MlpModel;
use super::train::Sample;
use crate::error::{Error, Module, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: [[usize; 2]; 2],
    pub scores: Vec<f64>,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn from_predictions(truth: &[u8], predicted: &[u8], scores: Vec<f64>) -> Result<Self> {
        if truth.is_empty() || truth.len() != predicted.len() {
            return Err(Error::invalid(
                Module::Classifier,
                "evaluation needs a nonempty, equal number of labels and predictions",
            ));
        }
        let mut confusion = [[0usize; 2]; 2];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t > 1 || p > 1 {
                return Err(Error::invalid(Module::Classifier, "labels must be 0 or 1"));
            }
            confusion[t as usize][p as usize] += 1;
        }
        let accuracy = (confusion[0][0] + confusion[1][1]) as f64 / truth.len() as f64;
        Ok(Self {
            accuracy,
            confusion,
            scores,
        })
    }
}

/// Scores every sample and thresholds at 0.5.
pub fn evaluate(model: &MlpModel, test: &[Sample]) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::invalid(Module::Classifier, "test set is empty"));
    }
    let inputs: Vec<Vec<f64>> = test.iter().map(|s| s.input.clone()).collect();
    let scores = model.forward_batch(&inputs)?;
    let predicted: Vec<u8> = scores.iter().map(|&s| u8::from(s > 0.5)).collect();
    let truth: Vec<u8> = test.iter().map(|s| s.label).collect();
    EvalReport::from_predictions(&truth, &predicted, scores)
}
