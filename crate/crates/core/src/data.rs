//! Tabular datasets: CSV ingestion, seeded splits, learning-curve schedules
//! and nearest-neighbor synthetic expansion.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::metric::{Targets, TaskKind};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("target column `{0}` not found in header")]
    MissingTargetColumn(String),
    #[error("no usable rows ({dropped} dropped)")]
    NoUsableRows { dropped: usize },
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Column-labeled numeric table with a designated target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub target_name: String,
    /// Row-major feature matrix, `n × d`.
    pub features: Vec<Vec<f64>>,
    pub target: Targets,
    pub task: TaskKind,
    /// Original label text for each class index; empty for regression.
    pub class_labels: Vec<String>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.features.len()
    }

    pub fn d(&self) -> usize {
        self.feature_names.len()
    }

    pub fn num_classes(&self) -> usize {
        match &self.target {
            Targets::Classes(c) => {
                let seen = c.iter().max().map_or(0, |m| m + 1);
                seen.max(self.class_labels.len())
            }
            Targets::Values(_) => 0,
        }
    }

    /// Rows `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            target: self.target.select(idx),
            task: self.task,
            class_labels: self.class_labels.clone(),
        }
    }

    /// Writes the dataset as CSV: feature columns followed by the target.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(&self.target_name);
        w.write_record(&header)?;
        for (i, row) in self.features.iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(match &self.target {
                Targets::Classes(c) => self
                    .class_labels
                    .get(c[i])
                    .cloned()
                    .unwrap_or_else(|| c[i].to_string()),
                Targets::Values(v) => v[i].to_string(),
            });
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Result of reading a CSV file.
#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub dataset: Dataset,
    /// Rows discarded because a cell could not be parsed.
    pub dropped_rows: usize,
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn load_csv(path: impl AsRef<Path>, target_column: &str, task: TaskKind) -> Result<CsvLoad> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Open {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, target_column, task)
}

/// Reads a headered, comma-separated table.
///
/// A feature column in which no cell parses as a number is treated as
/// categorical and label-encoded in order of first appearance. In numeric
/// columns, any unparseable or empty cell drops its row. Class targets are
/// re-indexed `0..C` in order of first appearance.
pub fn read_csv<R: Read>(input: R, target_column: &str, task: TaskKind) -> Result<CsvLoad> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| DataError::MissingTargetColumn(target_column.to_string()))?;
    if header.len() < 2 {
        return Err(DataError::NoFeatures);
    }

    let mut records = Vec::new();
    let mut dropped = 0;
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            dropped += 1;
            continue;
        }
        records.push(rec.iter().map(|c| c.trim().to_string()).collect::<Vec<_>>());
    }

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != target_idx).collect();
    let categorical: Vec<bool> = feature_cols
        .iter()
        .map(|&c| !records.iter().any(|r| parse_number(&r[c]).is_some()))
        .collect();

    let usable = |r: &Vec<String>| -> bool {
        let features_ok = feature_cols.iter().zip(&categorical).all(|(&c, &is_cat)| {
            if is_cat {
                !r[c].is_empty()
            } else {
                parse_number(&r[c]).is_some()
            }
        });
        let target_ok = if task.has_classes() {
            !r[target_idx].is_empty()
        } else {
            parse_number(&r[target_idx]).is_some()
        };
        features_ok && target_ok
    };
    let before = records.len();
    records.retain(|r| usable(r));
    dropped += before - records.len();
    if records.is_empty() {
        return Err(DataError::NoUsableRows { dropped });
    }

    let mut encoders: Vec<HashMap<String, usize>> = vec![HashMap::new(); feature_cols.len()];
    let features: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            feature_cols
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    if categorical[k] {
                        let enc = &mut encoders[k];
                        let next = enc.len();
                        *enc.entry(r[c].clone()).or_insert(next) as f64
                    } else {
                        parse_number(&r[c]).expect("filtered above")
                    }
                })
                .collect()
        })
        .collect();

    let (target, class_labels) = if task.has_classes() {
        let mut labels: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let classes = records
            .iter()
            .map(|r| {
                let raw = &r[target_idx];
                *index.entry(raw.clone()).or_insert_with(|| {
                    labels.push(raw.clone());
                    labels.len() - 1
                })
            })
            .collect();
        (Targets::Classes(classes), labels)
    } else {
        let values = records
            .iter()
            .map(|r| parse_number(&r[target_idx]).unwrap())
            .collect();
        (Targets::Values(values), Vec::new())
    };

    Ok(CsvLoad {
        dataset: Dataset {
            feature_names: feature_cols.iter().map(|&c| header[c].clone()).collect(),
            target_name: header[target_idx].clone(),
            features,
            target,
            task,
            class_labels,
        },
        dropped_rows: dropped,
    })
}

/// Seeded shuffle-and-partition into `(train, test)`.
///
/// The test set holds `⌊n · test_fraction⌋` rows. When every class has at
/// least two members the split is stratified: each class contributes its
/// proportional share (largest remainder), never all of its rows.
pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::Domain(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = ds.n();
    let n_test = (n as f64 * test_fraction).floor() as usize;
    if n_test < 1 || n_test >= n {
        return Err(DataError::Domain(format!(
            "{n} rows with test fraction {test_fraction} leave an empty split"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut in_test = vec![false; n];
    match stratified_quotas(ds, n_test) {
        Some((labels, mut quota)) => {
            for &i in &order {
                let c = labels[i];
                if quota[c] > 0 {
                    quota[c] -= 1;
                    in_test[i] = true;
                }
            }
        }
        None => order.iter().take(n_test).for_each(|&i| in_test[i] = true),
    }

    let test: Vec<usize> = order.iter().copied().filter(|&i| in_test[i]).collect();
    let train: Vec<usize> = order.iter().copied().filter(|&i| !in_test[i]).collect();
    Ok((ds.select(&train), ds.select(&test)))
}

fn stratified_quotas(ds: &Dataset, n_test: usize) -> Option<(&[usize], Vec<usize>)> {
    let labels = ds.target.as_classes()?;
    let counts = crate::metric::class_counts(labels, ds.num_classes());
    if counts.iter().any(|&c| c < 2) {
        return None;
    }
    let n = labels.len() as f64;
    let exact: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 * n_test as f64 / n)
        .collect();
    let mut quota: Vec<usize> = exact
        .iter()
        .zip(&counts)
        .map(|(e, &c)| (e.floor() as usize).min(c - 1))
        .collect();
    let mut remaining = n_test - quota.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..counts.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    while remaining > 0 {
        let before = remaining;
        for &c in &by_remainder {
            if remaining > 0 && quota[c] + 1 < counts[c] {
                quota[c] += 1;
                remaining -= 1;
            }
        }
        if remaining == before {
            return None;
        }
    }
    Some((labels, quota))
}

/// Training-set sizes of a learning curve: `start, start + step, …, ≤ stop`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSchedule {
    pub start: usize,
    pub stop: usize,
    pub step: usize,
    pub sizes: Vec<usize>,
}

impl SampleSchedule {
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn max(&self) -> usize {
        *self.sizes.last().expect("schedules are never empty")
    }
}

pub fn schedule(start: usize, stop: usize, step: usize) -> Result<SampleSchedule> {
    if start < 1 || start > stop || step < 1 {
        return Err(DataError::Domain(format!(
            "invalid schedule start={start} stop={stop} step={step}"
        )));
    }
    let sizes = (start..=stop).step_by(step).collect();
    Ok(SampleSchedule {
        start,
        stop,
        step,
        sizes,
    })
}

/// Parents of one synthetic row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    pub anchor: usize,
    pub neighbor: usize,
    /// Interpolation weight: `row = anchor + lambda · (neighbor − anchor)`.
    pub lambda: f64,
}

/// Grows `ds` to `target_n` rows by interpolating between nearby rows.
pub fn synthetic_expand(
    ds: &Dataset,
    target_n: usize,
    k_neighbors: usize,
    seed: u64,
) -> Result<Dataset> {
    synthetic_expand_traced(ds, target_n, k_neighbors, seed).map(|(d, _)| d)
}

/// Like [`synthetic_expand`], also returning the parents of every new row.
///
/// Each new row picks a random original anchor, one of its `k_neighbors`
/// nearest original rows (restricted to the anchor's class when the target
/// is a class label) and a weight drawn uniformly from (0, 1). The new row
/// inherits the anchor's target. Original rows come first, unchanged.
pub fn synthetic_expand_traced(
    ds: &Dataset,
    target_n: usize,
    k_neighbors: usize,
    seed: u64,
) -> Result<(Dataset, Vec<SyntheticOrigin>)> {
    let n = ds.n();
    if target_n <= n {
        return Err(DataError::Domain(format!(
            "target size {target_n} must exceed {n}"
        )));
    }
    if k_neighbors < 1 || k_neighbors >= n {
        return Err(DataError::Domain(format!(
            "k_neighbors must lie in 1..{n}, got {k_neighbors}"
        )));
    }

    let same_group = |a: usize, b: usize| match &ds.target {
        Targets::Classes(c) => c[a] == c[b],
        Targets::Values(_) => true,
    };
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|a| {
            let mut cands: Vec<(f64, usize)> = (0..n)
                .filter(|&b| b != a && same_group(a, b))
                .map(|b| {
                    let dist: f64 = ds.features[a]
                        .iter()
                        .zip(&ds.features[b])
                        .map(|(x, y)| (x - y).powi(2))
                        .sum();
                    (dist, b)
                })
                .collect();
            cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            cands
                .into_iter()
                .take(k_neighbors)
                .map(|(_, b)| b)
                .collect()
        })
        .collect();
    let anchors: Vec<usize> = (0..n).filter(|&a| !neighbors[a].is_empty()).collect();
    if anchors.is_empty() {
        return Err(DataError::Domain(
            "no row has a same-class neighbor to interpolate with".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ds.clone();
    let mut origins = Vec::with_capacity(target_n - n);
    let mut new_classes = Vec::new();
    let mut new_values = Vec::new();
    for _ in n..target_n {
        let anchor = anchors[rng.gen_range(0..anchors.len())];
        let neighbor = neighbors[anchor][rng.gen_range(0..neighbors[anchor].len())];
        let lambda = loop {
            let l: f64 = rng.gen();
            if l > 0.0 {
                break l;
            }
        };
        let a = &ds.features[anchor];
        let b = &ds.features[neighbor];
        out.features
            .push(a.iter().zip(b).map(|(x, y)| x + lambda * (y - x)).collect());
        match &ds.target {
            Targets::Classes(c) => new_classes.push(c[anchor]),
            Targets::Values(v) => new_values.push(v[anchor]),
        }
        origins.push(SyntheticOrigin {
            anchor,
            neighbor,
            lambda,
        });
    }
    match &mut out.target {
        Targets::Classes(c) => c.extend(new_classes),
        Targets::Values(v) => v.extend(new_values),
    }
    Ok((out, origins))
}

/// Per-feature z-scoring with statistics from a reference sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl Standardizer {
    /// Constant columns get unit scale.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let means: Vec<f64> = (0..d)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let scales = (0..d)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, scales }
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.iter()
                    .zip(self.means.iter().zip(&self.scales))
                    .map(|(v, (m, s))| (v - m) / s)
                    .collect()
            })
            .collect()
    }
}
