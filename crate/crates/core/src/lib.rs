//! Dataset-adaptive normalized evaluation metric.
//!
//! A base score (accuracy, `1 - MAPE` or NMI) is scaled by a
//! dimensionality boost and a signal-to-noise boost, divided by a class or
//! cluster imbalance penalty, and capped at 1. The crate also ships the
//! small learners, data handling and learning-curve harness used to study
//! how the adjusted score behaves as training data grows.

pub mod data;
pub mod eval;
pub mod harness;
pub mod learners;
pub mod metric;

pub use data::{Dataset, SampleSchedule};
pub use harness::{CurvePoint, StabilityReport};
pub use metric::{evaluate, EvaluationBundle, MetricBreakdown, TaskKind};
