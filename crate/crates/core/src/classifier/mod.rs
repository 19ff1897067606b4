//! Feed-forward binary classifier over processed waveforms: label 0 is
//! detector 1, label 1 is detector 2.

pub mod eval;
pub mod format;
pub mod gradcheck;
pub mod model;
pub mod train;

pub use eval::{evaluate, EvalReport};
pub use format::{read_model, write_model};
pub use gradcheck::{gradient_check, gradient_check_with_step, GradCheckReport, DEFAULT_FD_STEP};
pub use model::{init_model, logistic, Activation, Layer, MlpModel, DEFAULT_LAYER_DIMS};
pub use train::{
    bce_with_logit, dataset_loss, samples_from_records, train, Optimizer, Sample, TrainConfig,
};
