//! `normetric` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric/domain error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use normetric_core::data::{self, DataError};
use normetric_core::harness::{self, CurveConfig, HarnessError, LearnerConfig, MadScope};
use normetric_core::metric::{
    self, EvaluationBundle, MetricError, Probabilities, Targets, TaskKind,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "normetric",
    version,
    about = "Dataset-adaptive normalized metric toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Task {
    Binary,
    Multiclass,
    Regression,
    Clustering,
}

impl From<Task> for TaskKind {
    fn from(t: Task) -> Self {
        match t {
            Task::Binary => TaskKind::BinaryClassification,
            Task::Multiclass => TaskKind::MulticlassClassification,
            Task::Regression => TaskKind::Regression,
            Task::Clustering => TaskKind::Clustering,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scope {
    All,
    Before,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_enum)]
    task: Task,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Feature count used by the metric (defaults to the dataset's).
    #[arg(long)]
    d: Option<usize>,
    /// Small/large threshold (defaults to 20·d).
    #[arg(long)]
    n_star: Option<usize>,
    #[arg(long, default_value_t = 5)]
    smooth_window: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score one set of predictions.
    Evaluate {
        #[arg(long, value_enum)]
        task: Task,
        /// CSV with y_true, y_pred and y_prob (binary) or p_0..p_{C-1} (multiclass).
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        d: usize,
        /// Training sample count.
        #[arg(long)]
        n: usize,
        /// Training class (or cluster) sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        class_sizes: Option<Vec<usize>>,
        /// Base metric to use instead of the one computed from the predictions.
        #[arg(long)]
        base: Option<f64>,
    },
    /// Run a learning-curve experiment on a dataset.
    Curve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        target_column: String,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        stop: usize,
        #[arg(long)]
        step: usize,
        /// Raw series CSV (stdout when omitted).
        #[arg(long)]
        series: Option<PathBuf>,
        /// Stability report JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Smoothed display series CSV.
        #[arg(long)]
        smoothed: Option<PathBuf>,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        /// Cluster count for clustering tasks.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 300)]
        max_iters: usize,
    },
    /// Grow a dataset with nearest-neighbor interpolation.
    Expand {
        #[arg(long, value_enum)]
        task: Task,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        target_column: String,
        #[arg(long)]
        target_n: usize,
        #[arg(long, default_value_t = 5)]
        k_neighbors: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the stability report from a series CSV.
    Report {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n_star: Option<usize>,
        #[arg(long, value_enum, default_value = "all")]
        mad_scope: Scope,
        /// Output JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
    fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Domain(_) => CliError::numeric(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::numeric(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Data(d) => d.into(),
            HarnessError::Series(_) => CliError::data(e.to_string()),
            _ => CliError::numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::data(e.to_string())
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit status. Diagnostics go to stderr.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("normetric: {}", e.message);
            e.code
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", path.display())))
}

fn resolve_n_star(d: Option<usize>, n_star: Option<usize>) -> Result<usize, CliError> {
    match (n_star, d) {
        (Some(n), _) => Ok(n),
        (None, Some(d)) => Ok(harness::N_STAR_RATIO * d),
        (None, None) => Err(CliError::usage("either --d or --n-star is required")),
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Evaluate {
            task,
            predictions,
            d,
            n,
            class_sizes,
            base,
        } => {
            let mut bundle = read_predictions(&predictions, task.into())?;
            bundle.d = d;
            bundle.n_train = n;
            bundle.group_sizes = class_sizes;
            bundle.base_metric = base;
            let breakdown = metric::evaluate(&bundle)?;
            let json = serde_json::to_string_pretty(&breakdown)
                .map_err(|e| CliError::numeric(e.to_string()))?;
            println!("{json}");
            Ok(())
        }
        Command::Curve {
            common,
            data: path,
            target_column,
            start,
            stop,
            step,
            series,
            report,
            smoothed,
            epochs,
            lr,
            k,
            max_iters,
        } => {
            let loaded = data::load_csv(&path, &target_column, common.task.into())?;
            if loaded.dropped_rows > 0 {
                eprintln!(
                    "normetric: dropped {} unparseable rows",
                    loaded.dropped_rows
                );
            }
            let ds = loaded.dataset;
            let sched = data::schedule(start, stop, step)?;
            let cfg = CurveConfig {
                seed: common.seed,
                test_fraction: common.test_fraction,
                d_override: common.d,
                learner: LearnerConfig {
                    epochs,
                    learning_rate: lr,
                    k,
                    max_iters,
                },
            };
            let points = harness::run_curve(&ds, &sched, &cfg)?;

            let stability = match &report {
                Some(_) => {
                    let n_star = resolve_n_star(Some(common.d.unwrap_or(ds.d())), common.n_star)?;
                    Some(harness::stability_report_with(
                        &points,
                        n_star,
                        MadScope::All,
                    )?)
                }
                None => None,
            };
            let display = match &smoothed {
                Some(_) => Some(harness::smooth(&points, common.smooth_window)?),
                None => None,
            };

            match &series {
                Some(p) => harness::write_series(&points, create(p)?)?,
                None => harness::write_series(&points, io::stdout().lock())?,
            }
            if let (Some(p), Some(r)) = (&report, &stability) {
                let mut w = create(p)?;
                w.write_all(harness::report_json(r).as_bytes())?;
                w.flush()?;
            }
            if let (Some(p), Some(s)) = (&smoothed, &display) {
                harness::write_smoothed(s, create(p)?)?;
            }
            Ok(())
        }
        Command::Expand {
            task,
            data: path,
            target_column,
            target_n,
            k_neighbors,
            seed,
            out,
        } => {
            let loaded = data::load_csv(&path, &target_column, task.into())?;
            let expanded = data::synthetic_expand(&loaded.dataset, target_n, k_neighbors, seed)?;
            match out {
                Some(p) => expanded.write_csv(create(&p)?)?,
                None => expanded.write_csv(io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Report {
            series,
            d,
            n_star,
            mad_scope,
            out,
        } => {
            let n_star = resolve_n_star(d, n_star)?;
            let file = File::open(&series)
                .map_err(|e| CliError::data(format!("cannot open {}: {e}", series.display())))?;
            let points = harness::read_series(file)?;
            let scope = match mad_scope {
                Scope::All => MadScope::All,
                Scope::Before => MadScope::Before,
            };
            let report = harness::stability_report_with(&points, n_star, scope)?;
            let json = harness::report_json(&report);
            match out {
                Some(p) => {
                    let mut w = create(&p)?;
                    w.write_all(json.as_bytes())?;
                    w.flush()?;
                }
                None => print!("{json}"),
            }
            Ok(())
        }
    }
}

/// Reads an `evaluate` predictions file into a bundle; `d`, `n_train`,
/// sizes and base metric are filled in by the caller.
fn read_predictions(path: &Path, task: TaskKind) -> Result<EvaluationBundle, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::data(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let y_true_col =
        col("y_true").ok_or_else(|| CliError::data("predictions file lacks y_true"))?;
    let y_pred_col =
        col("y_pred").ok_or_else(|| CliError::data("predictions file lacks y_pred"))?;
    let prob_col = col("y_prob");
    let dist_cols: Vec<usize> = (0..).map_while(|j| col(&format!("p_{j}"))).collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(e.to_string()))?;
        let row = rec
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| CliError::data(format!("predictions row {} is not numeric", line + 1)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::data("predictions file has no rows"));
    }

    let as_class = |v: f64| -> Result<usize, CliError> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(CliError::data(format!("`{v}` is not a class index")))
        }
    };
    let classes = |c: usize| -> Result<Vec<usize>, CliError> {
        rows.iter().map(|r| as_class(r[c])).collect()
    };

    let (y_true, y_pred, probabilities) = match task {
        TaskKind::Regression => (
            Targets::Values(rows.iter().map(|r| r[y_true_col]).collect()),
            Targets::Values(rows.iter().map(|r| r[y_pred_col]).collect()),
            None,
        ),
        TaskKind::BinaryClassification => {
            let c = prob_col
                .ok_or_else(|| CliError::numeric("binary evaluation needs a y_prob column"))?;
            (
                Targets::Classes(classes(y_true_col)?),
                Targets::Classes(classes(y_pred_col)?),
                Some(Probabilities::PredictedClass(
                    rows.iter().map(|r| r[c]).collect(),
                )),
            )
        }
        TaskKind::MulticlassClassification => {
            if dist_cols.is_empty() {
                return Err(CliError::numeric(
                    "multiclass evaluation needs p_0..p_{C-1} columns",
                ));
            }
            (
                Targets::Classes(classes(y_true_col)?),
                Targets::Classes(classes(y_pred_col)?),
                Some(Probabilities::Distribution(
                    rows.iter()
                        .map(|r| dist_cols.iter().map(|&c| r[c]).collect())
                        .collect(),
                )),
            )
        }
        TaskKind::Clustering => (
            Targets::Classes(classes(y_true_col)?),
            Targets::Classes(classes(y_pred_col)?),
            None,
        ),
    };
    Ok(EvaluationBundle {
        task,
        y_true,
        y_pred,
        probabilities,
        d: 0,
        n_train: 0,
        base_metric: None,
        group_sizes: None,
    })
}
