//! Non-semantic reference classifiers over TF-IDF features: multinomial
//! naive Bayes, logistic regression and a linear SVM.
//!
//! Trainers are deterministic given (data, config, seed): sample order is
//! drawn from a seeded generator and every update is sequential.

mod linear;
mod nb;

pub use linear::{
    predict_linear, svm_objective, train_linear_svm, train_logreg, logreg_loss_and_grad,
    LinearKind, LinearModel,
};
pub use nb::{train_multinomial_nb, NaiveBayesModel};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("negative feature weight at row {row}, column {column}")]
    NegativeFeature { row: usize, column: u32 },
    #[error("training requires at least two classes")]
    SingleClass,
    #[error("row references column {0} outside the model")]
    ColumnOutOfRange(u32),
    #[error("model parse error at line {0}: {1}")]
    ParseError(u64, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BaselineError>;

/// Hyper-parameters shared by the gradient-descent trainers, plus the
/// naive-Bayes smoothing constant.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    /// Initial step size; decays as `lr / (1 + decay * epoch)`.
    pub learning_rate: f64,
    pub decay: f64,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Additive smoothing for naive Bayes.
    pub smoothing: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            decay: 0.1,
            l2_lambda: 1e-4,
            epochs: 50,
            seed: 0,
            smoothing: 1.0,
        }
    }
}

pub(crate) fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if max.is_infinite() {
        return max;
    }
    max + scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln()
}
