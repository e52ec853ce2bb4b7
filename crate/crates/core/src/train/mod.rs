//! Loss, gradients and RMSProp training of the tied edge weights.

mod engine;
mod grad;
mod loss;
mod optim;

pub use engine::{
    train, train_from, validate, write_history_csv, EpochRecord, TrainConfig, TrainOutcome, ValidationConfig,
    ValidationPoint,
};
pub use grad::{batch_gradient, batch_loss, l3_gradient, trace_gradient, BatchGradient};
pub use loss::{bce_logit, bce_logit_grad, l2_penalty, loss, mean_bce, sigmoid, LossBreakdown, LOG_EPS};
pub use optim::{clip_gradient, rmsprop_step, ClipMode, RmsPropConfig, TrainState};
