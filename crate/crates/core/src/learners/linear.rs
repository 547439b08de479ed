use nalgebra::{DMatrix, DVector};

use super::{matrix_width, LearnerError, Result};

/// Ridge strength added to the diagonal when `XᵀX` is numerically singular.
pub const RIDGE_FALLBACK: f64 = 1e-8;

/// Smallest Cholesky pivot (squared, relative to the largest diagonal entry)
/// accepted before switching to the ridge fallback.
const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict_one(&self, x: &[f64]) -> f64 {
        self.intercept + super::dot(&self.weights, x)
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.iter().map(|r| self.predict_one(r)).collect()
    }
}

/// Ordinary least squares through the normal equations.
///
/// The system `[1 X]ᵀ[1 X] β = [1 X]ᵀ y` is solved by Cholesky. If the
/// factorization fails or has a vanishing pivot, a small ridge term is
/// added to the diagonal and the solve is retried.
pub fn fit_linear(x: &[Vec<f64>], y: &[f64]) -> Result<LinearModel> {
    let d = matrix_width(x)?;
    if x.len() != y.len() {
        return Err(LearnerError::Shape {
            rows: x.len(),
            targets: y.len(),
        });
    }
    let n = x.len();
    let design = DMatrix::from_fn(n, d + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let target = DVector::from_column_slice(y);
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * target;

    let max_diag = gram.diagonal().max().max(1.0);
    let well_conditioned = gram.clone().cholesky().filter(|c| {
        let l = c.l_dirty();
        (0..=d).all(|i| l[(i, i)] * l[(i, i)] > PIVOT_TOLERANCE * max_diag)
    });
    let beta = match well_conditioned {
        Some(c) => c.solve(&rhs),
        None => {
            let mut ridged = gram;
            for i in 0..=d {
                ridged[(i, i)] += RIDGE_FALLBACK;
            }
            ridged.cholesky().ok_or(LearnerError::Singular)?.solve(&rhs)
        }
    };
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(LearnerError::Singular);
    }
    Ok(LinearModel {
        weights: beta.iter().skip(1).copied().collect(),
        intercept: beta[0],
    })
}
