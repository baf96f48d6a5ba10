//! Collision and overlap analytics over encoded datasets, and the qubit sweep that
//! turns them into `Q_train`, `Q_test` and `Q_dataset`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dimred::ReducerSpec;
use crate::encoder::{allocate_bits, encode_with, fit_encoder_with, Bitstring, EncoderOptions};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Per-bitstring class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BitstringTable {
    entries: HashMap<Bitstring, Vec<u64>>,
    n_classes: usize,
    width: Option<usize>,
    total: u64,
    budget: Option<usize>,
    bytes: usize,
}

impl BitstringTable {
    pub fn new(n_classes: usize) -> Self {
        Self {
            entries: HashMap::new(),
            n_classes,
            width: None,
            total: 0,
            budget: None,
            bytes: 0,
        }
    }

    /// Fixes the width up front so an empty table still rejects other widths.
    pub fn with_width(mut self, width: usize) -> Self {
        self.width = Some(width);
        self
    }

    /// Fails inserts once the estimated table size passes `bytes`.
    pub fn with_byte_budget(mut self, bytes: usize) -> Self {
        self.budget = Some(bytes);
        self
    }

    pub fn insert(&mut self, z: &Bitstring, label: usize) -> Result<()> {
        match self.width {
            Some(w) if w != z.width() => {
                return Err(Error::WidthMismatch {
                    expected: w,
                    got: z.width(),
                })
            }
            _ => self.width = Some(z.width()),
        }
        if label >= self.n_classes {
            return Err(Error::InvalidArgument(format!(
                "label {label} outside 0..{}",
                self.n_classes
            )));
        }
        if let Some(counts) = self.entries.get_mut(z) {
            counts[label] += 1;
        } else {
            let entry_bytes = z.words().len() * 8 + self.n_classes * 8 + 64;
            if let Some(budget) = self.budget {
                if self.bytes + entry_bytes > budget {
                    return Err(Error::TableBudgetExceeded { budget });
                }
            }
            self.bytes += entry_bytes;
            let mut counts = vec![0u64; self.n_classes];
            counts[label] = 1;
            self.entries.insert(z.clone(), counts);
        }
        self.total += 1;
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn width(&self) -> Option<usize> {
        self.width
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn n_unique(&self) -> usize {
        self.entries.len()
    }

    pub fn counts(&self, z: &Bitstring) -> Option<&[u64]> {
        self.entries.get(z).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Bitstring, &[u64])> {
        self.entries.iter().map(|(z, c)| (z, c.as_slice()))
    }

    /// `C(z)`: most frequent class, smallest id on ties.
    pub fn majority_label(&self, z: &Bitstring) -> Result<usize> {
        let counts = self
            .entries
            .get(z)
            .ok_or_else(|| Error::UnknownBitstring(z.to_string()))?;
        Ok(argmax_first(counts))
    }

    /// Samples that are not in their bucket's majority class, over all samples.
    pub fn train_collision_incidence(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptyTable);
        }
        Ok(self.minority_samples() as f64 / self.total as f64)
    }

    pub fn minority_samples(&self) -> u64 {
        self.entries
            .values()
            .map(|c| c.iter().sum::<u64>() - c.iter().copied().max().unwrap_or(0))
            .sum()
    }

    fn check_width(&self, z: &Bitstring) -> Result<()> {
        match self.width {
            Some(w) if w != z.width() => Err(Error::WidthMismatch {
                expected: w,
                got: z.width(),
            }),
            _ => Ok(()),
        }
    }
}

pub(crate) fn argmax_first(counts: &[u64]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

/// Aggregates `(bitstring, label)` records.
pub fn build_table<'a>(
    records: impl IntoIterator<Item = (&'a Bitstring, usize)>,
    n_classes: usize,
) -> Result<BitstringTable> {
    let mut t = BitstringTable::new(n_classes);
    for (z, label) in records {
        t.insert(z, label)?;
    }
    Ok(t)
}

/// Test-side overlap counts against a training table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOverlap {
    pub incidence: f64,
    pub overlap_fraction: f64,
    pub total: u64,
    /// Test samples whose bitstring occurs in training.
    pub overlapping: u64,
    /// Overlapping samples whose label differs from the training majority.
    pub errors: u64,
}

impl TestOverlap {
    pub fn correct_overlapping(&self) -> u64 {
        self.overlapping - self.errors
    }
}

/// A test sample errs when its bitstring is in the table with a different majority
/// label; unseen bitstrings count as covered.
pub fn test_overlap_incidence<'a>(
    table: &BitstringTable,
    test: impl IntoIterator<Item = (&'a Bitstring, usize)>,
) -> Result<TestOverlap> {
    let mut total = 0u64;
    let mut overlapping = 0u64;
    let mut errors = 0u64;
    for (z, label) in test {
        table.check_width(z)?;
        total += 1;
        if let Some(counts) = table.counts(z) {
            overlapping += 1;
            if argmax_first(counts) != label {
                errors += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    Ok(TestOverlap {
        incidence: errors as f64 / total as f64,
        overlap_fraction: overlapping as f64 / total as f64,
        total,
        overlapping,
        errors,
    })
}

/// `ceil(log2 c)` class-register qubits.
pub fn compute_q_y(n_classes: usize) -> Result<usize> {
    if n_classes < 2 {
        return Err(Error::TooFewClasses(n_classes));
    }
    Ok((n_classes - 1).ilog2() as usize + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageMetrics {
    pub train_collision_incidence: f64,
    pub test_overlap_incidence: f64,
    pub theoretical_train_accuracy: f64,
    pub theoretical_test_accuracy: f64,
    pub test_train_overlap_fraction: f64,
    pub train_samples: u64,
    pub test_samples: u64,
    pub unique_train_bitstrings: u64,
    pub test_overlapping: u64,
    pub test_overlap_correct: u64,
}

impl CoverageMetrics {
    pub fn from_parts(table: &BitstringTable, overlap: &TestOverlap) -> Result<Self> {
        let train = table.train_collision_incidence()?;
        Ok(Self {
            train_collision_incidence: train,
            test_overlap_incidence: overlap.incidence,
            theoretical_train_accuracy: 1.0 - train,
            theoretical_test_accuracy: 1.0 - overlap.incidence,
            test_train_overlap_fraction: overlap.overlap_fraction,
            train_samples: table.total(),
            test_samples: overlap.total,
            unique_train_bitstrings: table.n_unique() as u64,
            test_overlapping: overlap.overlapping,
            test_overlap_correct: overlap.correct_overlapping(),
        })
    }
}

/// Builds the training table from `train` and scores `test` against it.
pub fn coverage_metrics(
    train: &[Bitstring],
    train_labels: &[usize],
    test: &[Bitstring],
    test_labels: &[usize],
    n_classes: usize,
) -> Result<CoverageMetrics> {
    let table = build_table(train.iter().zip(train_labels.iter().copied()), n_classes)?;
    let overlap = test_overlap_incidence(&table, test.iter().zip(test_labels.iter().copied()))?;
    CoverageMetrics::from_parts(&table, &overlap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n_x: usize,
    pub metrics: CoverageMetrics,
}

/// Qubit counts read off a sweep curve at one accuracy threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitEstimate {
    pub threshold: f64,
    pub q_train: Option<usize>,
    pub q_test: Option<usize>,
    pub q_y: usize,
    /// `max(q_train, q_test) + q_y`, absent when either side never reached the threshold.
    pub q_dataset: Option<usize>,
    pub covered: bool,
    #[serde(skip)]
    pub curve: Vec<CurvePoint>,
}

impl QubitEstimate {
    /// First swept `N_x` at which each accuracy reaches `threshold`.
    pub fn from_curve(curve: &[CurvePoint], threshold: f64, n_classes: usize) -> Result<Self> {
        let q_y = compute_q_y(n_classes)?;
        let q_train = curve
            .iter()
            .find(|p| p.metrics.theoretical_train_accuracy >= threshold)
            .map(|p| p.n_x);
        let q_test = curve
            .iter()
            .find(|p| p.metrics.theoretical_test_accuracy >= threshold)
            .map(|p| p.n_x);
        let q_dataset = match (q_train, q_test) {
            (Some(a), Some(b)) => Some(a.max(b) + q_y),
            _ => None,
        };
        Ok(Self {
            threshold,
            q_train,
            q_test,
            q_y,
            q_dataset,
            covered: q_dataset.is_some(),
            curve: curve.to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub reducer: ReducerSpec,
    pub n_x_max: usize,
    pub step: usize,
    /// The sweep stops once both accuracies have reached this value.
    pub stop_threshold: f64,
    pub encoder: EncoderOptions,
}

/// Swept `N_x` values: `1, 1 + step, ...` up to `n_x_max`.
pub fn sweep_points(n_x_max: usize, step: usize) -> impl Iterator<Item = usize> {
    (1..=n_x_max).step_by(step.max(1))
}

/// Coverage at each swept qubit count.
///
/// Only the bit allocation depends on `N_x`, so the reducer, ranges, importances and
/// copula are fitted once and each point re-allocates and re-discretizes; this equals
/// fitting a fresh encoder at every point.
pub fn sweep_curve<T: Real>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    cfg: &SweepConfig,
) -> Result<Vec<CurvePoint>> {
    if cfg.step == 0 {
        return Err(Error::InvalidArgument(
            "sweep step must be at least 1".into(),
        ));
    }
    if !(cfg.stop_threshold > 0.0 && cfg.stop_threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold {} not in (0, 1]",
            cfg.stop_threshold
        )));
    }
    let base = fit_encoder_with(train, &cfg.reducer, 1, &cfg.encoder)?;
    let u_train = base.uniform_features(train.features())?;
    let u_test = base.uniform_features(test.features())?;
    let n_classes = train.n_classes().max(test.n_classes());

    let mut curve = Vec::new();
    let mut train_done = false;
    let mut test_done = false;
    for n_x in sweep_points(cfg.n_x_max, cfg.step) {
        let alloc = allocate_bits(&base.importances.scores, n_x);
        let z_train: Vec<Bitstring> = u_train
            .rows()
            .into_iter()
            .map(|r| encode_with(&alloc, r))
            .collect();
        let z_test: Vec<Bitstring> = u_test
            .rows()
            .into_iter()
            .map(|r| encode_with(&alloc, r))
            .collect();
        let metrics =
            coverage_metrics(&z_train, train.labels(), &z_test, test.labels(), n_classes)?;
        train_done |= metrics.theoretical_train_accuracy >= cfg.stop_threshold;
        test_done |= metrics.theoretical_test_accuracy >= cfg.stop_threshold;
        curve.push(CurvePoint { n_x, metrics });
        if train_done && test_done {
            break;
        }
    }
    Ok(curve)
}

/// Sweeps `N_x = 1, 1 + step, ..` until both theoretical accuracies reach `threshold`
/// or `n_x_max` is passed (then the estimate is not covered).
pub fn sweep_qubits<T: Real>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    spec: &ReducerSpec,
    threshold: f64,
    n_x_max: usize,
    step: usize,
) -> Result<QubitEstimate> {
    let cfg = SweepConfig {
        reducer: *spec,
        n_x_max,
        step,
        stop_threshold: threshold,
        encoder: EncoderOptions::default(),
    };
    let curve = sweep_curve(train, test, &cfg)?;
    QubitEstimate::from_curve(&curve, threshold, train.n_classes())
}
