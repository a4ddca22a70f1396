//! Minimal dense numerical core: matrices, activations, an LSTM cell,
//! feature normalization, dropout, Adam, gradient clipping, and a
//! finite-difference gradient checker. Every backward pass here is
//! hand-derived; there is no autodiff anywhere in this crate.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod lstm;
pub mod matrix;
pub mod norm;
pub mod ops;

use thiserror::Error;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{AdamCheckpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use gradcheck::{finite_diff_check, snapshot_grads, GradCheckReport, GroupResult};
pub use lstm::{lstm_backward, lstm_sequence, lstm_step, LstmGrads, LstmStepCache};
pub use matrix::{Matrix, Parameter};
pub use norm::{feature_norm_backward, feature_norm_forward, NormCache, RunningStats, NORM_EPS};
pub use ops::{clip_global_norm, cosine, dropout, elu, elu_backward, elu_scalar, softmax};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("dropout probability {0} is outside [0, 1)")]
    InvalidDropout(f64),
    #[error("softmax over an empty vector")]
    EmptySoftmax,
    #[error("i/o error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("invalid checkpoint: {0}")]
    BadCheckpoint(String),
}
