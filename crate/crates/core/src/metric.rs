//! The normalized metric and every factor that feeds it.
//!
//! The composite score is
//!
//! ```text
//! normalized = min(1, base · f(d, N) · g(SNR) / h(imbalance))
//! ```
//!
//! where `f` boosts models trained with fewer than twenty samples per
//! feature, `g` rewards a clean signal-to-noise ratio on held-out
//! predictions and `h` penalizes skewed class (or cluster) distributions.
//! All logarithms in the imbalance penalties are base 10.
//!
//! Infinite decibel values are represented with `f64::INFINITY` and
//! `f64::NEG_INFINITY`; [`normalize_snr`] maps them to 0.5 and 0.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::eval::{self, ConfusionMatrix, EvalError};

/// Samples-per-feature ratio at which the dimensionality factor is neutral.
pub const SAMPLES_PER_FEATURE: f64 = 20.0;

/// Tolerance on the sum of a multiclass probability vector.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate distribution: {0}")]
    Degenerate(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("undefined signal: the sum of squared targets is zero")]
    UndefinedSignal,
    #[error("undefined ratio: signal and noise are both zero")]
    Undefined,
    #[error("configuration error: {0}")]
    Config(String),
}

impl From<EvalError> for MetricError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Shape { .. } => MetricError::Shape(e.to_string()),
            _ => MetricError::Domain(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, MetricError>;

/// Kind of learning task being scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    BinaryClassification,
    MulticlassClassification,
    Regression,
    Clustering,
}

impl TaskKind {
    /// Whether targets are class indices (true for everything but regression).
    pub fn has_classes(self) -> bool {
        !matches!(self, TaskKind::Regression)
    }
}

impl std::str::FromStr for TaskKind {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(TaskKind::BinaryClassification),
            "multiclass" => Ok(TaskKind::MulticlassClassification),
            "regression" => Ok(TaskKind::Regression),
            "clustering" => Ok(TaskKind::Clustering),
            other => Err(MetricError::Config(format!("unknown task `{other}`"))),
        }
    }
}

/// Per-sample targets or predictions.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(v) => v.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_classes(&self) -> Option<&[usize]> {
        match self {
            Targets::Classes(v) => Some(v),
            Targets::Values(_) => None,
        }
    }

    pub fn as_values(&self) -> Option<&[f64]> {
        match self {
            Targets::Values(v) => Some(v),
            Targets::Classes(_) => None,
        }
    }

    /// Subset in the given index order.
    pub fn select(&self, idx: &[usize]) -> Targets {
        match self {
            Targets::Classes(v) => Targets::Classes(idx.iter().map(|&i| v[i]).collect()),
            Targets::Values(v) => Targets::Values(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Probability output of a classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Probabilities {
    /// Probability of the predicted class, one per sample (binary tasks).
    PredictedClass(Vec<f64>),
    /// Full distribution over the C classes, one vector per sample.
    Distribution(Vec<Vec<f64>>),
}

/// Everything one evaluation of the normalized metric needs.
#[derive(Debug, Clone)]
pub struct EvaluationBundle {
    pub task: TaskKind,
    pub y_true: Targets,
    pub y_pred: Targets,
    pub probabilities: Option<Probabilities>,
    /// Feature count, target column excluded.
    pub d: usize,
    /// Training sample count.
    pub n_train: usize,
    /// Base metric. When `None` it is computed from `y_true`/`y_pred`:
    /// accuracy, `1 - MAPE` or NMI depending on the task.
    pub base_metric: Option<f64>,
    /// Class (or cluster) sizes in the training data. When `None` the
    /// sizes are counted from `y_true` (or from `y_pred` for clustering).
    pub group_sizes: Option<Vec<usize>>,
}

/// Base value, every factor and the final capped score of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricBreakdown {
    pub base: f64,
    pub dim_factor_f: f64,
    #[serde(serialize_with = "serialize_extended")]
    pub snr_db: f64,
    pub snr_normalized: f64,
    pub snr_factor_g: f64,
    pub imbalance_ratio: f64,
    pub imbalance_factor_h: f64,
    pub normalized: f64,
}

/// Writes infinities as the strings `"inf"` / `"-inf"` since JSON has no
/// representation for them.
fn serialize_extended<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_infinite() {
        s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*x)
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Dimensionality factor `1 + max(0, σ(d / (0.05·n) − 1) − 1/2)`.
///
/// Exactly 1 while `n ≥ 20·d`, rising towards 1.5 as samples per feature
/// shrink.
pub fn dimensionality_factor(d: usize, n: usize) -> Result<f64> {
    if d == 0 || n == 0 {
        return Err(MetricError::Domain(format!(
            "feature count and sample count must be positive (d={d}, n={n})"
        )));
    }
    // d / (0.05 n) written as 20 d / n so the neutral point is exact.
    let ratio = SAMPLES_PER_FEATURE * d as f64 / n as f64;
    Ok(1.0 + (logistic(ratio - 1.0) - 0.5).max(0.0))
}

fn check_counts(sizes: &[usize], what: &str) -> Result<()> {
    if let Some(i) = sizes.iter().position(|&c| c == 0) {
        return Err(MetricError::Degenerate(format!(
            "{what} {i} has no samples"
        )));
    }
    Ok(())
}

/// Majority over minority count for a two-class problem.
pub fn class_imbalance_ratio(class_sizes: &[usize]) -> Result<f64> {
    if class_sizes.len() != 2 {
        return Err(MetricError::Domain(format!(
            "class imbalance ratio needs exactly 2 classes, got {}",
            class_sizes.len()
        )));
    }
    check_counts(class_sizes, "class")?;
    let (a, b) = (class_sizes[0] as f64, class_sizes[1] as f64);
    Ok(a.max(b) / a.min(b))
}

/// Binary imbalance penalty `1 + log10(CI)`.
pub fn imbalance_adjustment_binary(ci: f64) -> Result<f64> {
    if !ci.is_finite() || ci < 1.0 {
        return Err(MetricError::Domain(format!(
            "imbalance ratio must be >= 1, got {ci}"
        )));
    }
    Ok(1.0 + ci.log10())
}

/// Mean over classes of `size / majority size`; 1 means perfectly balanced.
pub fn average_class_imbalance_ratio(class_sizes: &[usize]) -> Result<f64> {
    if class_sizes.len() < 2 {
        return Err(MetricError::Domain(format!(
            "average class imbalance ratio needs at least 2 classes, got {}",
            class_sizes.len()
        )));
    }
    check_counts(class_sizes, "class")?;
    let majority = *class_sizes.iter().max().unwrap() as f64;
    let total: f64 = class_sizes.iter().map(|&c| c as f64 / majority).sum();
    Ok(total / class_sizes.len() as f64)
}

/// Multiclass imbalance penalty `1 + log10(1 / ACIR)`.
pub fn imbalance_adjustment_multiclass(acir: f64) -> Result<f64> {
    if !(acir > 0.0 && acir <= 1.0) {
        return Err(MetricError::Domain(format!(
            "ACIR must lie in (0, 1], got {acir}"
        )));
    }
    Ok(1.0 + (1.0 / acir).log10())
}

/// Cluster imbalance penalty: ACIR over cluster sizes, then `1 + log10(1 / ACIR)`.
///
/// Every cluster must be non-empty; callers that tolerate empty clusters
/// have to filter them out first.
pub fn cluster_imbalance_adjustment(cluster_sizes: &[usize]) -> Result<f64> {
    if cluster_sizes.len() < 2 {
        return Err(MetricError::Domain(format!(
            "cluster imbalance needs at least 2 clusters, got {}",
            cluster_sizes.len()
        )));
    }
    check_counts(cluster_sizes, "cluster")?;
    imbalance_adjustment_multiclass(average_class_imbalance_ratio(cluster_sizes)?)
}

fn check_same_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(MetricError::Shape(format!(
            "{what}: lengths {a} and {b} differ"
        )));
    }
    if a == 0 {
        return Err(MetricError::Domain(format!("{what}: empty input")));
    }
    Ok(())
}

/// `10 · log10(signal / noise)` with the zero cases mapped to infinities.
fn decibels(signal: f64, noise: f64) -> Result<f64> {
    match (signal > 0.0, noise > 0.0) {
        (true, true) => Ok(10.0 * (signal / noise).log10()),
        (true, false) => Ok(f64::INFINITY),
        (false, true) => Ok(f64::NEG_INFINITY),
        (false, false) => Err(MetricError::Undefined),
    }
}

/// Regression SNR: `10 · log10(Σ y² / Σ (ŷ − y)²)`.
pub fn snr_regression(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_same_len(y_true.len(), y_pred.len(), "snr_regression")?;
    let signal: f64 = y_true.iter().map(|y| y * y).sum();
    if signal == 0.0 {
        return Err(MetricError::UndefinedSignal);
    }
    let noise: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (p - t).powi(2))
        .sum();
    decibels(signal, noise)
}

/// Binary SNR: correct-prediction count over `Σ (1 − p)²`, where `p` is
/// the probability the model gave its predicted class.
pub fn snr_binary(y_true: &[usize], y_pred: &[usize], y_prob: &[f64]) -> Result<f64> {
    check_same_len(y_true.len(), y_pred.len(), "snr_binary")?;
    check_same_len(y_true.len(), y_prob.len(), "snr_binary probabilities")?;
    if let Some(p) = y_prob.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(MetricError::Domain(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    let signal = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count() as f64;
    let noise: f64 = y_prob.iter().map(|p| (1.0 - p).powi(2)).sum();
    decibels(signal, noise)
}

/// Predicted class of a probability vector; ties go to the lowest index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = j;
        }
    }
    best
}

/// Multiclass SNR.
///
/// Signal is the sum of squared diagonal counts of the confusion matrix
/// built from `y_true` and the argmax of each probability vector. Noise is
/// the squared distance of each vector from the one-hot vector of its true
/// class, summed over samples.
pub fn snr_multiclass(y_true: &[usize], prob_matrix: &[Vec<f64>]) -> Result<f64> {
    check_same_len(y_true.len(), prob_matrix.len(), "snr_multiclass")?;
    let classes = prob_matrix[0].len();
    if classes < 2 {
        return Err(MetricError::Domain(
            "probability vectors need at least 2 classes".into(),
        ));
    }
    for (k, row) in prob_matrix.iter().enumerate() {
        if row.len() != classes {
            return Err(MetricError::Shape(format!(
                "probability vector {k} has {} entries, expected {classes}",
                row.len()
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(MetricError::Domain(format!(
                "probability vector {k} is not a distribution (sum {sum})"
            )));
        }
    }
    let y_pred: Vec<usize> = prob_matrix.iter().map(|p| argmax(p)).collect();
    let cm = ConfusionMatrix::new(y_true, &y_pred, classes)?;
    let signal: f64 = cm.diagonal().map(|tp| (tp as f64).powi(2)).sum();
    let noise: f64 = y_true
        .iter()
        .zip(prob_matrix)
        .map(|(&i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &p)| {
                    let ideal = if j == i { 1.0 } else { 0.0 };
                    (p - ideal).powi(2)
                })
                .sum::<f64>()
        })
        .sum();
    decibels(signal, noise)
}

/// Piecewise map from decibels onto `[0, 0.5]`.
///
/// Each 0–10, 10–15, 15–25 and 25–40 dB band is linear; the result is
/// clamped to `[0, 0.5]`, negative inputs give 0 and anything at or above
/// 40 dB gives 0.5. NaN maps to 0.
pub fn normalize_snr(x: f64) -> f64 {
    let raw = if x.is_nan() || x < 0.0 {
        0.0
    } else if x < 10.0 {
        0.125 + 0.125 * (x - 0.0) / 10.0
    } else if x < 15.0 {
        0.25 + 0.125 * (x - 10.0) / 5.0
    } else if x < 25.0 {
        0.375 + 0.125 * (x - 15.0) / 10.0
    } else if x < 40.0 {
        0.5 + 0.125 * (x - 25.0) / 15.0
    } else {
        0.5
    };
    raw.clamp(0.0, 0.5)
}

/// `g = 1 + normalized SNR`.
pub fn snr_adjustment(snr_normalized: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&snr_normalized) {
        return Err(MetricError::Domain(format!(
            "normalized SNR must lie in [0, 0.5], got {snr_normalized}"
        )));
    }
    Ok(1.0 + snr_normalized)
}

/// `min(1, base · f · g / h)`.
pub fn compose_normalized_metric(base: f64, f: f64, g: f64, h: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&base) {
        return Err(MetricError::Domain(format!(
            "base metric must lie in [0, 1], got {base}"
        )));
    }
    if !f.is_finite() || !g.is_finite() || f < 1.0 || g < 1.0 {
        return Err(MetricError::Domain(format!(
            "boost factors must be >= 1 (f={f}, g={g})"
        )));
    }
    if !h.is_finite() || h < 1.0 {
        return Err(MetricError::Domain(format!(
            "imbalance factor must be >= 1, got {h}"
        )));
    }
    Ok((base * f * g / h).min(1.0))
}

/// Counts per label in `0..classes`.
pub fn class_counts(labels: &[usize], classes: usize) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for &l in labels {
        if l >= counts.len() {
            counts.resize(l + 1, 0);
        }
        counts[l] += 1;
    }
    counts
}

/// Relabels every cluster with the most frequent true label among its
/// members (ties to the lowest label).
pub fn map_clusters_to_majority(y_true: &[usize], clusters: &[usize]) -> Vec<usize> {
    let n_clusters = clusters.iter().max().map_or(0, |m| m + 1);
    let n_labels = y_true.iter().max().map_or(0, |m| m + 1);
    let mut votes = vec![vec![0usize; n_labels]; n_clusters];
    for (&t, &c) in y_true.iter().zip(clusters) {
        votes[c][t] += 1;
    }
    let mapping: Vec<usize> = votes
        .iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    clusters.iter().map(|&c| mapping[c]).collect()
}

fn classes_of<'a>(t: &'a Targets, name: &str) -> Result<&'a [usize]> {
    t.as_classes()
        .ok_or_else(|| MetricError::Config(format!("{name} must hold class labels for this task")))
}

fn values_of<'a>(t: &'a Targets, name: &str) -> Result<&'a [f64]> {
    t.as_values()
        .ok_or_else(|| MetricError::Config(format!("{name} must hold real values for regression")))
}

fn nonempty(sizes: &[usize]) -> Vec<usize> {
    sizes.iter().copied().filter(|&c| c > 0).collect()
}

/// Computes the full breakdown for one bundle, dispatching on the task.
pub fn evaluate(bundle: &EvaluationBundle) -> Result<MetricBreakdown> {
    check_same_len(bundle.y_true.len(), bundle.y_pred.len(), "evaluate")?;
    if let Some(b) = bundle.base_metric {
        if !(0.0..=1.0).contains(&b) {
            return Err(MetricError::Domain(format!(
                "base metric must lie in [0, 1], got {b}"
            )));
        }
    }
    let f = dimensionality_factor(bundle.d, bundle.n_train)?;

    let (base, snr_db, imbalance_ratio, h) = match bundle.task {
        TaskKind::BinaryClassification => {
            let y_true = classes_of(&bundle.y_true, "y_true")?;
            let y_pred = classes_of(&bundle.y_pred, "y_pred")?;
            let probs = match &bundle.probabilities {
                Some(Probabilities::PredictedClass(p)) => p,
                Some(Probabilities::Distribution(_)) => {
                    return Err(MetricError::Config(
                        "binary evaluation expects the predicted-class probability per sample"
                            .into(),
                    ))
                }
                None => {
                    return Err(MetricError::Config(
                        "binary evaluation needs probabilities".into(),
                    ))
                }
            };
            let base = match bundle.base_metric {
                Some(b) => b,
                None => eval::accuracy(y_true, y_pred)?,
            };
            let snr = snr_binary(y_true, y_pred, probs)?;
            let sizes = match &bundle.group_sizes {
                Some(s) => s.clone(),
                None => class_counts(y_true, 2),
            };
            let ci = class_imbalance_ratio(&sizes)?;
            (base, snr, ci, imbalance_adjustment_binary(ci)?)
        }
        TaskKind::MulticlassClassification => {
            let y_true = classes_of(&bundle.y_true, "y_true")?;
            let y_pred = classes_of(&bundle.y_pred, "y_pred")?;
            let probs = match &bundle.probabilities {
                Some(Probabilities::Distribution(p)) => p,
                Some(Probabilities::PredictedClass(_)) => {
                    return Err(MetricError::Config(
                        "multiclass evaluation expects a probability vector per sample".into(),
                    ))
                }
                None => {
                    return Err(MetricError::Config(
                        "multiclass evaluation needs probabilities".into(),
                    ))
                }
            };
            let base = match bundle.base_metric {
                Some(b) => b,
                None => eval::accuracy(y_true, y_pred)?,
            };
            let snr = snr_multiclass(y_true, probs)?;
            let sizes = match &bundle.group_sizes {
                Some(s) => s.clone(),
                None => nonempty(&class_counts(y_true, probs[0].len())),
            };
            let acir = average_class_imbalance_ratio(&sizes)?;
            (base, snr, acir, imbalance_adjustment_multiclass(acir)?)
        }
        TaskKind::Regression => {
            let y_true = values_of(&bundle.y_true, "y_true")?;
            let y_pred = values_of(&bundle.y_pred, "y_pred")?;
            let base = match bundle.base_metric {
                Some(b) => b,
                None => eval::mape_score(y_true, y_pred)?,
            };
            let snr = snr_regression(y_true, y_pred)?;
            // Continuous targets carry no class structure: neutral penalty.
            (base, snr, 1.0, 1.0)
        }
        TaskKind::Clustering => {
            let y_true = classes_of(&bundle.y_true, "y_true")?;
            let clusters = classes_of(&bundle.y_pred, "y_pred")?;
            let base = match bundle.base_metric {
                Some(b) => b,
                None => eval::nmi(y_true, clusters)?,
            };
            let mapped = map_clusters_to_majority(y_true, clusters);
            let classes = y_true.iter().max().map_or(0, |m| m + 1).max(2);
            let one_hot: Vec<Vec<f64>> = mapped
                .iter()
                .map(|&c| {
                    let mut v = vec![0.0; classes];
                    v[c] = 1.0;
                    v
                })
                .collect();
            let snr = snr_multiclass(y_true, &one_hot)?;
            let sizes = match &bundle.group_sizes {
                Some(s) => s.clone(),
                None => nonempty(&class_counts(clusters, 0)),
            };
            let acir = average_class_imbalance_ratio(&sizes)?;
            (base, snr, acir, cluster_imbalance_adjustment(&sizes)?)
        }
    };

    let snr_normalized = normalize_snr(snr_db);
    let g = snr_adjustment(snr_normalized)?;
    let normalized = compose_normalized_metric(base, f, g, h)?;
    Ok(MetricBreakdown {
        base,
        dim_factor_f: f,
        snr_db,
        snr_normalized,
        snr_factor_g: g,
        imbalance_ratio,
        imbalance_factor_h: h,
        normalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dimensionality_examples() {
        assert_eq!(dimensionality_factor(10, 200).unwrap(), 1.0);
        assert_eq!(dimensionality_factor(10, 10_000).unwrap(), 1.0);
        // σ(2.25) evaluated at 40 digits.
        assert_relative_eq!(
            dimensionality_factor(13, 80).unwrap(),
            1.404_650_535_100_890_5,
            epsilon = 1e-14
        );
        assert!(dimensionality_factor(0, 10).is_err());
        assert!(dimensionality_factor(3, 0).is_err());
    }

    #[test]
    fn dimensionality_neutral_at_twenty_per_feature() {
        for d in 1..=500 {
            assert_eq!(dimensionality_factor(d, 20 * d).unwrap(), 1.0, "d={d}");
            assert!(dimensionality_factor(d, 20 * d - 1).unwrap() > 1.0, "d={d}");
        }
    }

    #[test]
    fn class_imbalance_examples() {
        assert_eq!(class_imbalance_ratio(&[75, 25]).unwrap(), 3.0);
        assert_eq!(class_imbalance_ratio(&[50, 50]).unwrap(), 1.0);
        assert_eq!(class_imbalance_ratio(&[1000, 1]).unwrap(), 1000.0);
        assert_eq!(class_imbalance_ratio(&[1, 1000]).unwrap(), 1000.0);
        assert!(matches!(
            class_imbalance_ratio(&[10, 0]),
            Err(MetricError::Degenerate(_))
        ));
        assert!(class_imbalance_ratio(&[1, 2, 3]).is_err());
    }

    #[test]
    fn binary_penalty_examples() {
        assert_eq!(imbalance_adjustment_binary(1000.0).unwrap(), 4.0);
        assert_eq!(imbalance_adjustment_binary(1.0).unwrap(), 1.0);
        assert_eq!(imbalance_adjustment_binary(10.0).unwrap(), 2.0);
        assert!(imbalance_adjustment_binary(0.5).is_err());
        assert!(imbalance_adjustment_binary(f64::NAN).is_err());
    }

    #[test]
    fn acir_examples() {
        assert_eq!(
            average_class_imbalance_ratio(&[100, 100, 100]).unwrap(),
            1.0
        );
        assert_relative_eq!(
            average_class_imbalance_ratio(&[100, 50, 50]).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            average_class_imbalance_ratio(&[90, 10]).unwrap(),
            0.555_555_555_555_555_6,
            epsilon = 1e-15
        );
        assert!(average_class_imbalance_ratio(&[5]).is_err());
        assert!(matches!(
            average_class_imbalance_ratio(&[5, 0, 3]),
            Err(MetricError::Degenerate(_))
        ));
    }

    #[test]
    fn multiclass_penalty_examples() {
        assert_eq!(imbalance_adjustment_multiclass(1.0).unwrap(), 1.0);
        assert_relative_eq!(
            imbalance_adjustment_multiclass(2.0 / 3.0).unwrap(),
            1.176_091_259_055_681_2,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            imbalance_adjustment_multiclass(0.1).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert!(imbalance_adjustment_multiclass(0.0).is_err());
        assert!(imbalance_adjustment_multiclass(1.01).is_err());
    }

    #[test]
    fn cluster_penalty_examples() {
        assert_eq!(cluster_imbalance_adjustment(&[60, 60, 60]).unwrap(), 1.0);
        assert_relative_eq!(
            cluster_imbalance_adjustment(&[120, 40, 40]).unwrap(),
            1.255_272_505_103_306,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            cluster_imbalance_adjustment(&[99, 1]).unwrap(),
            1.296_665_190_261_531,
            epsilon = 1e-14
        );
        assert!(matches!(
            cluster_imbalance_adjustment(&[10, 0]),
            Err(MetricError::Degenerate(_))
        ));
    }

    #[test]
    fn regression_snr_examples() {
        assert_relative_eq!(
            snr_regression(&[3.0, 4.0], &[3.0, 5.0]).unwrap(),
            13.979_400_086_720_376,
            epsilon = 1e-12
        );
        assert_eq!(
            snr_regression(&[3.0, 4.0], &[3.0, 4.0]).unwrap(),
            f64::INFINITY
        );
        assert_eq!(snr_regression(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(
            snr_regression(&[0.0, 0.0], &[1.0, 0.0]),
            Err(MetricError::UndefinedSignal)
        );
        assert!(matches!(
            snr_regression(&[1.0], &[1.0, 2.0]),
            Err(MetricError::Shape(_))
        ));
    }

    #[test]
    fn binary_snr_examples() {
        let y_true = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let mut y_pred = y_true;
        y_pred[0] = 1;
        y_pred[1] = 0;
        assert_relative_eq!(
            snr_binary(&y_true, &y_pred, &[0.9; 10]).unwrap(),
            19.030_899_869_919_436,
            epsilon = 1e-12
        );
        assert_eq!(
            snr_binary(&y_true, &y_true, &[1.0; 10]).unwrap(),
            f64::INFINITY
        );
        assert_relative_eq!(
            snr_binary(&[0, 1, 0, 1], &[0, 1, 1, 0], &[1.0, 1.0, 0.5, 0.5]).unwrap(),
            6.020_599_913_279_624,
            epsilon = 1e-12
        );
        assert_eq!(
            snr_binary(&[0, 1], &[1, 0], &[0.5, 0.5]).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            snr_binary(&[0, 1], &[1, 0], &[1.0, 1.0]),
            Err(MetricError::Undefined)
        );
        assert!(matches!(
            snr_binary(&[0], &[0], &[1.5]),
            Err(MetricError::Domain(_))
        ));
    }

    #[test]
    fn multiclass_snr_examples() {
        // Diagonal (5, 3, 2); one sample carries noise 0.25 + 0.09 + 0.04.
        let mut y_true = vec![0; 5];
        y_true.extend([1; 3]);
        y_true.extend([2; 2]);
        let mut probs: Vec<Vec<f64>> = y_true
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; 3];
                v[c] = 1.0;
                v
            })
            .collect();
        probs[0] = vec![0.5, 0.3, 0.2];
        assert_relative_eq!(
            snr_multiclass(&y_true, &probs).unwrap(),
            20.0,
            epsilon = 1e-12
        );

        let one_hot: Vec<Vec<f64>> = vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(snr_multiclass(&[0, 2], &one_hot).unwrap(), f64::INFINITY);

        // One sample: diagonal (1, 0, 0) so signal 1, noise 0.38.
        let single = snr_multiclass(&[0], &[vec![0.5, 0.3, 0.2]]).unwrap();
        assert_relative_eq!(single, 10.0 * (1.0 / 0.38f64).log10(), epsilon = 1e-12);

        assert!(matches!(
            snr_multiclass(&[0], &[vec![0.5, 0.3, 0.3]]),
            Err(MetricError::Domain(_))
        ));
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn normalize_snr_examples() {
        assert_eq!(normalize_snr(0.0), 0.125);
        assert_eq!(normalize_snr(45.0), 0.5);
        assert_eq!(normalize_snr(40.0), 0.5);
        assert_eq!(normalize_snr(20.0), 0.4375);
        // Band 25–40 starts at 0.5 and rises; the clamp holds it there.
        assert_eq!(normalize_snr(30.0), 0.5);
        assert_eq!(normalize_snr(-3.0), 0.0);
        assert_eq!(normalize_snr(f64::INFINITY), 0.5);
        assert_eq!(normalize_snr(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn snr_adjustment_examples() {
        assert_eq!(snr_adjustment(0.0).unwrap(), 1.0);
        assert_eq!(snr_adjustment(0.5).unwrap(), 1.5);
        assert_eq!(snr_adjustment(normalize_snr(20.0)).unwrap(), 1.4375);
        assert!(snr_adjustment(0.6).is_err());
    }

    #[test]
    fn composition_examples() {
        assert_eq!(compose_normalized_metric(0.5, 1.0, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(compose_normalized_metric(0.8, 1.4, 1.3, 1.2).unwrap(), 1.0);
        assert_relative_eq!(
            compose_normalized_metric(0.9, 1.0, 1.0, 4.0).unwrap(),
            0.225,
            epsilon = 1e-15
        );
        assert!(compose_normalized_metric(0.9, 1.0, 1.0, 0.9).is_err());
    }

    #[test]
    fn majority_predictor_is_penalized() {
        // 150/50 split, always predicting the majority at 0.75 confidence.
        // Noise spans every sample: 200 · 0.0625 = 12.5, so SNR = 10·log10(12).
        let mut y_true = vec![0; 150];
        y_true.extend([1; 50]);
        let b = evaluate(&EvaluationBundle {
            task: TaskKind::BinaryClassification,
            y_true: Targets::Classes(y_true),
            y_pred: Targets::Classes(vec![0; 200]),
            probabilities: Some(Probabilities::PredictedClass(vec![0.75; 200])),
            d: 10,
            n_train: 200,
            base_metric: None,
            group_sizes: None,
        })
        .unwrap();
        assert_eq!(b.base, 0.75);
        assert_eq!(b.dim_factor_f, 1.0);
        assert_relative_eq!(b.snr_db, 10.0 * 12f64.log10(), epsilon = 1e-12);
        assert_relative_eq!(b.imbalance_factor_h, 1.0 + 3f64.log10(), epsilon = 1e-12);
        assert_relative_eq!(b.normalized, 0.644_731_419_706_415_5, epsilon = 1e-12);
    }

    #[test]
    fn cluster_majority_mapping() {
        let mapped = map_clusters_to_majority(&[0, 0, 1, 1, 1, 2], &[1, 1, 0, 0, 1, 0]);
        // Cluster 0 holds labels {1, 1, 2} -> 1; cluster 1 holds {0, 0, 1} -> 0.
        assert_eq!(mapped, vec![0, 0, 1, 1, 0, 1]);
    }

    #[test]
    fn breakdown_serializes_infinity_as_token() {
        let b = MetricBreakdown {
            base: 1.0,
            dim_factor_f: 1.0,
            snr_db: f64::INFINITY,
            snr_normalized: 0.5,
            snr_factor_g: 1.5,
            imbalance_ratio: 1.0,
            imbalance_factor_h: 1.0,
            normalized: 1.0,
        };
        let json = serde_json::to_string(&b).unwrap();
        assert!(json.contains("\"snr_db\":\"inf\""), "{json}");
        let neg = MetricBreakdown {
            snr_db: f64::NEG_INFINITY,
            ..b
        };
        assert!(serde_json::to_string(&neg).unwrap().contains("\"-inf\""));
    }
}
