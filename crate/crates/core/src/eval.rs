//! Base performance metrics: accuracy, `1 - MAPE`, NMI and the confusion
//! matrix they share with the multiclass SNR.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    Shape { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("true value at index {0} is zero; percentage error is undefined")]
    ZeroTarget(usize),
    #[error("label {label} at index {index} is outside 0..{classes}")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        classes: usize,
    },
    #[error("confusion matrix needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
}

pub type Result<T> = std::result::Result<T, EvalError>;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(EvalError::Shape { left: a, right: b });
    }
    if a == 0 {
        return Err(EvalError::Empty);
    }
    Ok(())
}

/// C×C count grid; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn new(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(EvalError::TooFewClasses(classes));
        }
        if y_true.len() != y_pred.len() {
            return Err(EvalError::Shape {
                left: y_true.len(),
                right: y_pred.len(),
            });
        }
        let mut counts = vec![0; classes * classes];
        for (index, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
            for label in [t, p] {
                if label >= classes {
                    return Err(EvalError::LabelOutOfRange {
                        index,
                        label,
                        classes,
                    });
                }
            }
            counts[t * classes + p] += 1;
        }
        Ok(Self { classes, counts })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, true_class: usize, predicted: usize) -> usize {
        self.counts[true_class * self.classes + predicted]
    }

    /// True-positive count per class.
    pub fn diagonal(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.classes).map(move |i| self.get(i, i))
    }

    pub fn trace(&self) -> usize {
        self.diagonal().sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.counts
            .chunks(self.classes)
            .map(<[usize]>::to_vec)
            .collect()
    }
}

/// Fraction of exact label matches.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    let correct = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(correct as f64 / y_true.len() as f64)
}

/// `1 - MAPE`, floored at 0 so it stays a valid base metric.
pub fn mape_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_lengths(y_true.len(), y_pred.len())?;
    if let Some(i) = y_true.iter().position(|&t| t == 0.0) {
        return Err(EvalError::ZeroTarget(i));
    }
    let mape = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| ((p - t) / t).abs())
        .sum::<f64>()
        / y_true.len() as f64;
    Ok((1.0 - mape).max(0.0))
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information, normalized by the arithmetic mean of the
/// two label entropies.
///
/// Two single-cluster labelings score 1; if only one side is a single
/// cluster the score is 0.
pub fn nmi(labels_a: &[usize], labels_b: &[usize]) -> Result<f64> {
    check_lengths(labels_a.len(), labels_b.len())?;
    let n = labels_a.len() as f64;

    let mut count_a: BTreeMap<usize, usize> = BTreeMap::new();
    let mut count_b: BTreeMap<usize, usize> = BTreeMap::new();
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&a, &b) in labels_a.iter().zip(labels_b) {
        *count_a.entry(a).or_default() += 1;
        *count_b.entry(b).or_default() += 1;
        *joint.entry((a, b)).or_default() += 1;
    }

    let h_a = entropy(count_a.values().copied(), n);
    let h_b = entropy(count_b.values().copied(), n);
    if count_a.len() == 1 && count_b.len() == 1 {
        return Ok(1.0);
    }
    if count_a.len() == 1 || count_b.len() == 1 {
        return Ok(0.0);
    }

    let mi: f64 = joint
        .iter()
        .map(|(&(a, b), &c)| {
            let p_ab = c as f64 / n;
            let p_a = count_a[&a] as f64 / n;
            let p_b = count_b[&b] as f64 / n;
            p_ab * (p_ab / (p_a * p_b)).ln()
        })
        .sum();
    let score = mi / (0.5 * (h_a + h_b));
    Ok(score.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
        let mut y = vec![0; 75];
        y.extend([1; 25]);
        assert_eq!(accuracy(&y, &[0; 100]).unwrap(), 0.75);
        assert_eq!(
            accuracy(&[0], &[0, 1]),
            Err(EvalError::Shape { left: 1, right: 2 })
        );
        assert_eq!(accuracy(&[], &[]), Err(EvalError::Empty));
    }

    #[test]
    fn mape_examples() {
        assert_eq!(mape_score(&[100.0, 200.0], &[100.0, 200.0]).unwrap(), 1.0);
        assert_relative_eq!(
            mape_score(&[100.0, 200.0], &[110.0, 180.0]).unwrap(),
            0.9,
            epsilon = 1e-15
        );
        assert_eq!(mape_score(&[10.0], &[30.0]).unwrap(), 0.0);
        assert_eq!(
            mape_score(&[1.0, 0.0], &[1.0, 1.0]),
            Err(EvalError::ZeroTarget(1))
        );
    }

    #[test]
    fn confusion_examples() {
        let cm = ConfusionMatrix::new(&[0, 1], &[0, 1], 2).unwrap();
        assert_eq!(cm.rows(), vec![vec![1, 0], vec![0, 1]]);
        let cm = ConfusionMatrix::new(&[0, 0], &[1, 1], 2).unwrap();
        assert_eq!(cm.rows(), vec![vec![0, 2], vec![0, 0]]);
        let cm = ConfusionMatrix::new(&[0, 1, 2, 2], &[0, 2, 2, 1], 3).unwrap();
        assert_eq!(cm.rows(), vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 1]]);
        assert_eq!(cm.total(), 4);
        assert_eq!(cm.trace(), 2);
        assert!(matches!(
            ConfusionMatrix::new(&[0, 3], &[0, 1], 3),
            Err(EvalError::LabelOutOfRange {
                index: 1,
                label: 3,
                ..
            })
        ));
    }

    #[test]
    fn nmi_examples() {
        assert_relative_eq!(
            nmi(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.0);
        assert_eq!(nmi(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap(), 0.0);
        assert_eq!(nmi(&[2, 2, 2], &[5, 5, 5]).unwrap(), 1.0);
    }

    #[test]
    fn nmi_matches_entropy_oracle() {
        // a = [0,0,0,1,1,2], b = [0,0,1,1,2,2] evaluated by hand in nats.
        let a = [0, 0, 0, 1, 1, 2];
        let b = [0, 0, 1, 1, 2, 2];
        let h = |ps: &[f64]| -ps.iter().map(|p| p * p.ln()).sum::<f64>();
        let h_a = h(&[0.5, 1.0 / 3.0, 1.0 / 6.0]);
        let h_b = h(&[1.0 / 3.0; 3]);
        let h_joint = h(&[2.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]);
        let expected = (h_a + h_b - h_joint) / (0.5 * (h_a + h_b));
        assert_relative_eq!(nmi(&a, &b).unwrap(), expected, epsilon = 1e-12);
    }

    fn labels_and_pred() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(0usize..4, n),
                prop::collection::vec(0usize..4, n),
            )
        })
    }

    proptest! {
        #[test]
        fn accuracy_is_trace_over_total((t, p) in labels_and_pred()) {
            let cm = ConfusionMatrix::new(&t, &p, 4).unwrap();
            prop_assert_eq!(cm.total(), t.len());
            prop_assert_eq!(accuracy(&t, &p).unwrap(), cm.trace() as f64 / cm.total() as f64);
        }

        #[test]
        fn nmi_symmetric_and_relabel_invariant((a, b) in labels_and_pred()) {
            let ab = nmi(&a, &b).unwrap();
            prop_assert!((ab - nmi(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
            let relabeled: Vec<usize> = a.iter().map(|&x| (x + 7) * 3).collect();
            prop_assert!((ab - nmi(&relabeled, &b).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn mape_scale_invariant(
            pairs in prop::collection::vec((1.0f64..100.0, 0.5f64..150.0), 1..20),
            k in 0.01f64..100.0,
        ) {
            let t: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let ts: Vec<f64> = t.iter().map(|x| x * k).collect();
            let ps: Vec<f64> = p.iter().map(|x| x * k).collect();
            prop_assert!((mape_score(&t, &p).unwrap() - mape_score(&ts, &ps).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn metrics_permutation_invariant((t, p) in labels_and_pred(), rot in 0usize..40) {
            let n = t.len();
            let r = rot % n;
            let tr: Vec<usize> = (0..n).map(|i| t[(i + r) % n]).collect();
            let pr: Vec<usize> = (0..n).map(|i| p[(i + r) % n]).collect();
            prop_assert_eq!(accuracy(&t, &p).unwrap(), accuracy(&tr, &pr).unwrap());
            prop_assert!((nmi(&t, &p).unwrap() - nmi(&tr, &pr).unwrap()).abs() < 1e-12);
        }
    }
}
