use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, matrix_width, LearnerError, Result};
use crate::metric::argmax;

/// Half-width of the uniform interval used for initial weights.
const INIT_SCALE: f64 = 0.01;

/// Logistic regression: a single sigmoid unit for two classes, softmax over
/// `classes` linear scores otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// One row for the binary model, `classes` rows for multinomial.
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub classes: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl LogisticModel {
    fn is_binary(&self) -> bool {
        self.classes == 2
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.intercepts)
            .map(|(w, b)| b + dot(w, x))
            .collect()
    }

    /// Probability vector over all classes.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let scores = self.scores(x);
        if self.is_binary() {
            let p = sigmoid(scores[0]);
            vec![1.0 - p, p]
        } else {
            softmax(&scores)
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.predict_proba(x))
    }

    /// Predicted class together with the probability assigned to it.
    pub fn predict_with_confidence(&self, x: &[f64]) -> (usize, f64) {
        let p = self.predict_proba(x);
        let c = argmax(&p);
        (c, p[c])
    }

    /// Mean cross-entropy over the samples.
    pub fn loss(&self, x: &[Vec<f64>], y: &[usize]) -> f64 {
        let total: f64 = x
            .iter()
            .zip(y)
            .map(|(row, &label)| {
                let s = self.scores(row);
                if self.is_binary() {
                    // ln(1 + e^z) − y·z, written to avoid overflow.
                    let z = s[0];
                    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
                    softplus - if label == 1 { z } else { 0.0 }
                } else {
                    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let lse = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                    lse - s[label]
                }
            })
            .sum();
        total / x.len() as f64
    }

    /// Gradient of [`loss`](Self::loss) with respect to weights and intercepts.
    pub fn gradient(&self, x: &[Vec<f64>], y: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let rows = self.weights.len();
        let d = self.weights[0].len();
        let mut gw = vec![vec![0.0; d]; rows];
        let mut gb = vec![0.0; rows];
        for (row, &label) in x.iter().zip(y) {
            let residuals: Vec<f64> = if self.is_binary() {
                vec![sigmoid(self.scores(row)[0]) - if label == 1 { 1.0 } else { 0.0 }]
            } else {
                let mut p = softmax(&self.scores(row));
                p[label] -= 1.0;
                p
            };
            for (k, r) in residuals.iter().enumerate() {
                gb[k] += r;
                for (g, xi) in gw[k].iter_mut().zip(row) {
                    *g += r * xi;
                }
            }
        }
        let inv = 1.0 / x.len() as f64;
        gw.iter_mut().flatten().for_each(|g| *g *= inv);
        gb.iter_mut().for_each(|g| *g *= inv);
        (gw, gb)
    }
}

/// Full-batch gradient descent on the mean cross-entropy.
///
/// Weights start uniform in `±0.01` from a ChaCha8 stream seeded with
/// `seed`; intercepts start at zero.
pub fn fit_logistic(
    x: &[Vec<f64>],
    y: &[usize],
    classes: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<LogisticModel> {
    let d = matrix_width(x)?;
    if x.len() != y.len() {
        return Err(LearnerError::Shape {
            rows: x.len(),
            targets: y.len(),
        });
    }
    if classes < 2 {
        return Err(LearnerError::Parameter(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    if epochs == 0 {
        return Err(LearnerError::Parameter("epochs must be at least 1".into()));
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(LearnerError::Parameter(format!(
            "learning rate {learning_rate} must be positive"
        )));
    }
    if let Some(&label) = y.iter().find(|&&l| l >= classes) {
        return Err(LearnerError::LabelOutOfRange { label, classes });
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(LearnerError::DegenerateLabels);
    }

    let rows = if classes == 2 { 1 } else { classes };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..rows)
        .map(|_| {
            (0..d)
                .map(|_| rng.gen_range(-INIT_SCALE..INIT_SCALE))
                .collect()
        })
        .collect();
    let mut model = LogisticModel {
        weights,
        intercepts: vec![0.0; rows],
        classes,
    };

    for _ in 0..epochs {
        let (gw, gb) = model.gradient(x, y);
        for (w_row, g_row) in model.weights.iter_mut().zip(&gw) {
            for (w, g) in w_row.iter_mut().zip(g_row) {
                *w -= learning_rate * g;
            }
        }
        for (b, g) in model.intercepts.iter_mut().zip(&gb) {
            *b -= learning_rate * g;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    /// Two well separated Gaussian-ish blobs in 2-D, 20 points each.
    fn blobs() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let c = i % 2;
            let centre = if c == 0 { -2.0 } else { 2.0 };
            x.push(vec![
                centre + rng.gen_range(-1.0..1.0),
                centre + rng.gen_range(-1.0..1.0),
            ]);
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let (x, y) = blobs();
        let m = fit_logistic(&x, &y, 2, 500, 0.1, 3).unwrap();
        let correct = x.iter().zip(&y).filter(|(r, &t)| m.predict(r) == t).count();
        assert_eq!(correct, 40);
        for r in &x {
            let p = m.predict_proba(r);
            assert!(p.iter().all(|v| *v > 0.0 && *v < 1.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn multinomial_probabilities_are_distributions() {
        let (mut x, mut y) = blobs();
        x.extend((0..10).map(|i| vec![-2.0 + 0.1 * i as f64, 2.5]));
        y.extend([2; 10]);
        let m = fit_logistic(&x, &y, 3, 300, 0.1, 1).unwrap();
        assert_eq!(m.weights.len(), 3);
        for r in &x {
            let p = m.predict_proba(r);
            assert_eq!(p.len(), 3);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn same_seed_same_weights() {
        let (x, y) = blobs();
        let a = fit_logistic(&x, &y, 2, 50, 0.1, 11).unwrap();
        let b = fit_logistic(&x, &y, 2, 50, 0.1, 11).unwrap();
        let bits = |m: &LogisticModel| -> Vec<u64> {
            m.weights
                .iter()
                .flatten()
                .chain(&m.intercepts)
                .map(|v| v.to_bits())
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
        let c = fit_logistic(&x, &y, 2, 50, 0.1, 12).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn loss_nonincreasing_at_small_rate() {
        let (x, y) = blobs();
        let mut prev = f64::INFINITY;
        for epochs in (1..=200).step_by(9) {
            let loss = fit_logistic(&x, &y, 2, epochs, 0.01, 5)
                .unwrap()
                .loss(&x, &y);
            assert!(loss <= prev + 1e-15, "epochs {epochs}: {loss} > {prev}");
            prev = loss;
        }
    }

    fn finite_difference_check(model: &LogisticModel, x: &[Vec<f64>], y: &[usize]) {
        let (gw, gb) = model.gradient(x, y);
        let h = 1e-6;
        let check = |analytic: f64, perturb: &dyn Fn(f64) -> LogisticModel| {
            let numeric = (perturb(h).loss(x, y) - perturb(-h).loss(x, y)) / (2.0 * h);
            let scale = analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(
                (analytic - numeric).abs() / scale < 1e-5,
                "analytic {analytic} vs numeric {numeric}"
            );
        };
        for k in 0..model.weights.len() {
            for (j, &grad) in gw[k].iter().enumerate() {
                check(grad, &|e| {
                    let mut m = model.clone();
                    m.weights[k][j] += e;
                    m
                });
            }
            check(gb[k], &|e| {
                let mut m = model.clone();
                m.intercepts[k] += e;
                m
            });
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let x = vec![vec![0.5, -1.0], vec![1.5, 0.25], vec![-0.75, 2.0]];
        let binary = LogisticModel {
            weights: vec![vec![0.3, -0.2]],
            intercepts: vec![0.1],
            classes: 2,
        };
        finite_difference_check(&binary, &x, &[1, 0, 1]);
        let multi = LogisticModel {
            weights: vec![vec![0.3, -0.2], vec![-0.5, 0.4], vec![0.05, 0.1]],
            intercepts: vec![0.1, -0.2, 0.0],
            classes: 3,
        };
        finite_difference_check(&multi, &x, &[2, 0, 1]);
    }

    #[test]
    fn rejects_single_class() {
        let x = vec![vec![1.0], vec![2.0]];
        assert_eq!(
            fit_logistic(&x, &[1, 1], 2, 10, 0.1, 0),
            Err(LearnerError::DegenerateLabels)
        );
        assert!(matches!(
            fit_logistic(&x, &[0, 2], 2, 10, 0.1, 0),
            Err(LearnerError::LabelOutOfRange { .. })
        ));
        assert!(fit_logistic(&x, &[0, 1], 2, 0, 0.1, 0).is_err());
    }
}
