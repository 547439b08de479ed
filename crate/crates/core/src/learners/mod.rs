//! Small deterministic learners used to produce learning curves.

mod kmeans;
mod linear;
mod logistic;

pub use kmeans::{fit_kmeans, KMeansModel};
pub use linear::{fit_linear, LinearModel};
pub use logistic::{fit_logistic, LogisticModel};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("empty training data")]
    Empty,
    #[error("row {row} has {got} features, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("{rows} rows but {targets} targets")]
    Shape { rows: usize, targets: usize },
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("normal equations are singular even with ridge regularization")]
    Singular,
}

pub type Result<T> = std::result::Result<T, LearnerError>;

/// Checks that `x` is a non-empty rectangular matrix and returns its width.
pub(crate) fn matrix_width(x: &[Vec<f64>]) -> Result<usize> {
    let first = x.first().ok_or(LearnerError::Empty)?;
    let width = first.len();
    for (row, r) in x.iter().enumerate() {
        if r.len() != width {
            return Err(LearnerError::Ragged {
                row,
                got: r.len(),
                expected: width,
            });
        }
    }
    Ok(width)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
