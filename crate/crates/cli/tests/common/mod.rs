//! Shared fixtures for the integration suites.
#![allow(dead_code)]

use normetric_core::metric::{Targets, TaskKind};
use normetric_core::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Binary data with a logistic ground truth: features are standard normal,
/// the clean label is `σ(w·x + b) ≥ 1/2` for standard-normal weights `w`,
/// and each label is flipped with probability `label_noise`.
pub fn logistic_binary(n: usize, d: usize, intercept: f64, label_noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let score: f64 = intercept + w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        let p = 1.0 / (1.0 + (-score).exp());
        let mut y = usize::from(p >= 0.5);
        if rng.gen::<f64>() < label_noise {
            y = 1 - y;
        }
        features.push(x);
        labels.push(y);
    }
    Dataset {
        feature_names: (0..d).map(|j| format!("x{j}")).collect(),
        target_name: "y".into(),
        features,
        target: Targets::Classes(labels),
        task: TaskKind::BinaryClassification,
        class_labels: vec!["0".into(), "1".into()],
    }
}
