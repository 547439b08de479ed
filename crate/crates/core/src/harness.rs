//! Learning-curve experiments and the stability statistics computed over
//! them.

use std::fmt::Write as _;
use std::io::{Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::data::{self, DataError, Dataset, SampleSchedule, Standardizer};
use crate::eval;
use crate::learners::{self, LearnerError};
use crate::metric::{
    self, class_counts, EvaluationBundle, MetricBreakdown, MetricError, Probabilities, Targets,
    TaskKind,
};

/// Samples per feature at which a training set stops counting as small.
pub const N_STAR_RATIO: usize = 20;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("training failed at size {size}: {source}")]
    Learner { size: usize, source: LearnerError },
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("report error: {0}")]
    Report(String),
    #[error("series error: {0}")]
    Series(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Cluster count; defaults to the number of classes in the dataset.
    pub k: Option<usize>,
    pub max_iters: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.1,
            k: None,
            max_iters: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveConfig {
    pub seed: u64,
    pub test_fraction: f64,
    /// Feature count used by the metric; defaults to the dataset's.
    pub d_override: Option<usize>,
    pub learner: LearnerConfig,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            test_fraction: 0.2,
            d_override: None,
            learner: LearnerConfig::default(),
        }
    }
}

/// One learning-curve sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub train_size: usize,
    pub base_metric: f64,
    pub adjusted_metric: f64,
    pub breakdown: MetricBreakdown,
}

impl CurvePoint {
    pub fn from_breakdown(train_size: usize, breakdown: MetricBreakdown) -> Self {
        Self {
            train_size,
            base_metric: breakdown.base,
            adjusted_metric: breakdown.normalized,
            breakdown,
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-size seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const PREFIX_STREAM: u64 = u64::MAX;

/// Trains and scores the task's learner at every schedule size.
///
/// The dataset is split once; each size `m` trains on the first `m` rows of
/// a single seeded shuffle of the training pool, so larger training sets
/// contain the smaller ones. Every point is scored on the same test set.
pub fn run_curve(
    ds: &Dataset,
    sched: &SampleSchedule,
    cfg: &CurveConfig,
) -> Result<Vec<CurvePoint>> {
    let (train, test) = data::split(ds, cfg.test_fraction, cfg.seed)?;
    if sched.max() > train.n() {
        return Err(HarnessError::Schedule(format!(
            "largest size {} exceeds the training pool of {} rows",
            sched.max(),
            train.n()
        )));
    }
    if ds.task == TaskKind::BinaryClassification && ds.num_classes() != 2 {
        return Err(HarnessError::Schedule(format!(
            "binary task needs exactly 2 classes, dataset has {}",
            ds.num_classes()
        )));
    }

    let mut order: Vec<usize> = (0..train.n()).collect();
    {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(mix_seed(
            cfg.seed,
            PREFIX_STREAM,
        )));
    }
    let pool = train.select(&order);
    let d = cfg.d_override.unwrap_or(ds.d());

    sched
        .sizes
        .par_iter()
        .map(|&m| curve_point(&pool.select(&(0..m).collect::<Vec<_>>()), &test, ds, d, cfg))
        .collect()
}

fn curve_point(
    train: &Dataset,
    test: &Dataset,
    full: &Dataset,
    d: usize,
    cfg: &CurveConfig,
) -> Result<CurvePoint> {
    let m = train.n();
    let seed = mix_seed(cfg.seed, m as u64);
    let scaler = Standardizer::fit(&train.features);
    let x_train = scaler.transform(&train.features);
    let x_test = scaler.transform(&test.features);
    let lc = &cfg.learner;
    let learner_err = |source| HarnessError::Learner { size: m, source };

    let bundle = match full.task {
        TaskKind::BinaryClassification | TaskKind::MulticlassClassification => {
            let y_train = train.target.as_classes().expect("class task");
            let y_test = test.target.as_classes().expect("class task");
            let classes = full.num_classes();
            let model = learners::fit_logistic(
                &x_train,
                y_train,
                classes,
                lc.epochs,
                lc.learning_rate,
                seed,
            )
            .map_err(learner_err)?;
            let counts = class_counts(y_train, classes);
            if full.task == TaskKind::BinaryClassification {
                let (pred, prob): (Vec<usize>, Vec<f64>) = x_test
                    .iter()
                    .map(|r| model.predict_with_confidence(r))
                    .unzip();
                EvaluationBundle {
                    task: full.task,
                    y_true: Targets::Classes(y_test.to_vec()),
                    y_pred: Targets::Classes(pred),
                    probabilities: Some(Probabilities::PredictedClass(prob)),
                    d,
                    n_train: m,
                    base_metric: None,
                    group_sizes: Some(counts),
                }
            } else {
                let probs: Vec<Vec<f64>> = x_test.iter().map(|r| model.predict_proba(r)).collect();
                let pred = probs.iter().map(|p| metric::argmax(p)).collect();
                EvaluationBundle {
                    task: full.task,
                    y_true: Targets::Classes(y_test.to_vec()),
                    y_pred: Targets::Classes(pred),
                    probabilities: Some(Probabilities::Distribution(probs)),
                    d,
                    n_train: m,
                    base_metric: None,
                    // Classes absent from this prefix are left out of ACIR.
                    group_sizes: Some(counts.into_iter().filter(|&c| c > 0).collect()),
                }
            }
        }
        TaskKind::Regression => {
            let y_train = train.target.as_values().expect("regression task");
            let model = learners::fit_linear(&x_train, y_train).map_err(learner_err)?;
            EvaluationBundle {
                task: full.task,
                y_true: test.target.clone(),
                y_pred: Targets::Values(model.predict(&x_test)),
                probabilities: None,
                d,
                n_train: m,
                base_metric: None,
                group_sizes: None,
            }
        }
        TaskKind::Clustering => {
            let y_test = test
                .target
                .as_classes()
                .expect("clustering needs reference labels");
            let k = lc.k.unwrap_or(full.num_classes()).max(2);
            let model =
                learners::fit_kmeans(&x_train, k, lc.max_iters, seed).map_err(learner_err)?;
            let clusters: Vec<usize> = x_test.iter().map(|r| model.predict(r)).collect();
            let base = eval::nmi(y_test, &clusters).map_err(MetricError::from)?;
            EvaluationBundle {
                task: full.task,
                y_true: Targets::Classes(y_test.to_vec()),
                y_pred: Targets::Classes(clusters),
                probabilities: None,
                d,
                n_train: m,
                base_metric: Some(base),
                // Empty clusters are dropped before the imbalance penalty.
                group_sizes: Some(
                    model
                        .cluster_sizes()
                        .into_iter()
                        .filter(|&c| c > 0)
                        .collect(),
                ),
            }
        }
    };
    Ok(CurvePoint::from_breakdown(m, metric::evaluate(&bundle)?))
}

/// Display-series point after smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedPoint {
    pub train_size: usize,
    pub base_metric: f64,
    pub adjusted_metric: f64,
}

/// Centered moving average of the base and adjusted series. The window is
/// truncated at both ends; a window of 1 is the identity.
pub fn smooth(points: &[CurvePoint], window: usize) -> Result<Vec<SmoothedPoint>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(HarnessError::Series(format!(
            "smoothing window must be odd, got {window}"
        )));
    }
    let half = window / 2;
    let mean = |vals: &mut dyn Iterator<Item = f64>| {
        let (s, c) = vals.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        s / c as f64
    };
    Ok((0..points.len())
        .map(|i| {
            let span = &points[i.saturating_sub(half)..(i + half + 1).min(points.len())];
            let (base, adjusted) = if span.len() == 1 {
                (points[i].base_metric, points[i].adjusted_metric)
            } else {
                (
                    mean(&mut span.iter().map(|p| p.base_metric)),
                    mean(&mut span.iter().map(|p| p.adjusted_metric)),
                )
            };
            SmoothedPoint {
                train_size: points[i].train_size,
                base_metric: base,
                adjusted_metric: adjusted,
            }
        })
        .collect())
}

/// Which points enter the mean absolute deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MadScope {
    #[default]
    All,
    Before,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub overall_avg: f64,
    pub avg_before: f64,
    pub avg_after: f64,
    pub mad_from_target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub threshold_n_star: usize,
    pub initial: MetricSummary,
    pub adjusted: MetricSummary,
}

/// Report with the threshold at `20 · d` and MAD over all points.
pub fn stability_report(points: &[CurvePoint], d: usize) -> Result<StabilityReport> {
    stability_report_with(points, N_STAR_RATIO * d, MadScope::All)
}

/// Averages before (`size < n_star`) and after the threshold, plus the mean
/// absolute deviation of each series from the target: the mean initial
/// metric over sizes `≥ n_star`.
pub fn stability_report_with(
    points: &[CurvePoint],
    n_star: usize,
    scope: MadScope,
) -> Result<StabilityReport> {
    let (before, after): (Vec<&CurvePoint>, Vec<&CurvePoint>) =
        points.iter().partition(|p| p.train_size < n_star);
    if before.is_empty() {
        return Err(HarnessError::Report(format!(
            "no points before N* = {n_star}"
        )));
    }
    if after.is_empty() {
        return Err(HarnessError::Report(format!(
            "no points at or after N* = {n_star}"
        )));
    }
    let mean = |ps: &[&CurvePoint], f: fn(&CurvePoint) -> f64| {
        ps.iter().map(|p| f(p)).sum::<f64>() / ps.len() as f64
    };
    let all: Vec<&CurvePoint> = points.iter().collect();
    let target = mean(&after, |p| p.base_metric);
    let mad_set: &[&CurvePoint] = match scope {
        MadScope::All => &all,
        MadScope::Before => &before,
    };
    let summary = |f: fn(&CurvePoint) -> f64| MetricSummary {
        overall_avg: mean(&all, f),
        avg_before: mean(&before, f),
        avg_after: mean(&after, f),
        mad_from_target: mad_set.iter().map(|p| (f(p) - target).abs()).sum::<f64>()
            / mad_set.len() as f64,
    };
    Ok(StabilityReport {
        threshold_n_star: n_star,
        initial: summary(|p| p.base_metric),
        adjusted: summary(|p| p.adjusted_metric),
    })
}

pub const SERIES_HEADER: [&str; 9] = [
    "train_size",
    "base_metric",
    "adjusted_metric",
    "f",
    "g",
    "h",
    "snr_db",
    "snr_normalized",
    "imbalance_ratio",
];

/// Writes raw curve points; floats use the shortest round-trip form and
/// infinite SNR is written `inf` / `-inf`.
pub fn write_series<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| HarnessError::Data(DataError::Csv(e));
    w.write_record(SERIES_HEADER).map_err(io)?;
    for p in points {
        let b = &p.breakdown;
        w.write_record([
            p.train_size.to_string(),
            p.base_metric.to_string(),
            p.adjusted_metric.to_string(),
            b.dim_factor_f.to_string(),
            b.snr_factor_g.to_string(),
            b.imbalance_factor_h.to_string(),
            b.snr_db.to_string(),
            b.snr_normalized.to_string(),
            b.imbalance_ratio.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| HarnessError::Data(DataError::Io(e)))?;
    Ok(())
}

pub fn read_series<R: Read>(input: R) -> Result<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r
        .headers()
        .map_err(|e| HarnessError::Data(e.into()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != SERIES_HEADER {
        return Err(HarnessError::Series(format!(
            "unexpected header {:?}",
            header
        )));
    }
    let mut points = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Data(e.into()))?;
        let num = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|_| {
                HarnessError::Series(format!(
                    "row {}: bad value `{}` in {}",
                    line + 1,
                    &rec[i],
                    SERIES_HEADER[i]
                ))
            })
        };
        let train_size = rec[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| HarnessError::Series(format!("row {}: bad train_size", line + 1)))?;
        let breakdown = MetricBreakdown {
            base: num(1)?,
            normalized: num(2)?,
            dim_factor_f: num(3)?,
            snr_factor_g: num(4)?,
            imbalance_factor_h: num(5)?,
            snr_db: num(6)?,
            snr_normalized: num(7)?,
            imbalance_ratio: num(8)?,
        };
        points.push(CurvePoint::from_breakdown(train_size, breakdown));
    }
    Ok(points)
}

/// Report as JSON with every real printed to six decimal places.
pub fn report_json(report: &StabilityReport) -> String {
    let mut s = String::new();
    let block = |s: &mut String, name: &str, m: &MetricSummary, last: bool| {
        let _ = writeln!(s, "  \"{name}\": {{");
        let _ = writeln!(s, "    \"overall_avg\": {:.6},", m.overall_avg);
        let _ = writeln!(s, "    \"avg_before\": {:.6},", m.avg_before);
        let _ = writeln!(s, "    \"avg_after\": {:.6},", m.avg_after);
        let _ = writeln!(s, "    \"mad_from_target\": {:.6}", m.mad_from_target);
        let _ = writeln!(s, "  }}{}", if last { "" } else { "," });
    };
    s.push_str("{\n");
    let _ = writeln!(s, "  \"threshold_n_star\": {},", report.threshold_n_star);
    block(&mut s, "initial", &report.initial, false);
    block(&mut s, "adjusted", &report.adjusted, true);
    s.push_str("}\n");
    s
}

pub fn write_smoothed<W: Write>(points: &[SmoothedPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| HarnessError::Data(DataError::Csv(e));
    w.write_record(["train_size", "base_metric", "adjusted_metric"])
        .map_err(io)?;
    for p in points {
        w.write_record([
            p.train_size.to_string(),
            p.base_metric.to_string(),
            p.adjusted_metric.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| HarnessError::Data(DataError::Io(e)))?;
    Ok(())
}
