//! Tabular classification datasets: CSV ingestion, validation, seeded splits and a
//! Gaussian-blob generator for tests.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Feature matrix (one row per sample) with contiguous integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    features: Array2<T>,
    labels: Vec<usize>,
    n_classes: usize,
    feature_names: Option<Vec<String>>,
    label_names: Option<Vec<String>>,
}

impl<T: Real> Dataset<T> {
    /// Builds a dataset, checking shape agreement and that every label is below
    /// `n_classes`. Class presence is not required here (splits may lose classes);
    /// use [`Dataset::validate`] for the full invariant set.
    pub fn new(features: Array2<T>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(Error::InvalidDataset(format!(
                "row {row}: label {label} outside 0..{n_classes}"
            )));
        }
        Ok(Self {
            features,
            labels,
            n_classes,
            feature_names: None,
            label_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = Some(names);
        self
    }

    pub fn with_label_names(mut self, names: Vec<String>) -> Self {
        self.label_names = Some(names);
        self
    }

    pub fn features(&self) -> ArrayView2<'_, T> {
        self.features.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Original label values by class id, when loaded from CSV.
    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    fn feature_label(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => format!("{:?}", names[j]),
            None => format!("#{j}"),
        }
    }

    /// Class ids in `0..n_classes` with no samples.
    pub fn absent_classes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_classes];
        for &l in &self.labels {
            seen[l] = true;
        }
        (0..self.n_classes).filter(|&k| !seen[k]).collect()
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, rows: &[usize]) -> Dataset<T> {
        Dataset {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
        }
    }

    /// Checks every dataset invariant; an empty list means the dataset is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n_samples() < 2 {
            out.push(Violation::TooFewSamples(self.n_samples()));
        }
        if self.n_features() < 1 {
            out.push(Violation::NoFeatures);
        }
        if self.n_classes < 2 {
            out.push(Violation::TooFewClasses(self.n_classes));
        }
        for j in 0..self.n_features() {
            let col = self.features.column(j);
            if let Some(row) = col.iter().position(|x| !x.is_finite()) {
                out.push(Violation::NonFinite {
                    feature: self.feature_label(j),
                    row,
                    value: col[row].to_string(),
                });
            }
        }
        for (row, &label) in self.labels.iter().enumerate() {
            if label >= self.n_classes {
                out.push(Violation::LabelOutOfRange { row, label });
            }
        }
        for k in self.absent_classes() {
            out.push(Violation::ClassAbsent(k));
        }
        out
    }
}

/// One broken dataset invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    TooFewSamples(usize),
    NoFeatures,
    TooFewClasses(usize),
    NonFinite {
        feature: String,
        row: usize,
        value: String,
    },
    LabelOutOfRange {
        row: usize,
        label: usize,
    },
    ClassAbsent(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewSamples(s) => write!(f, "only {s} samples (need at least 2)"),
            Violation::NoFeatures => write!(f, "no feature columns"),
            Violation::TooFewClasses(c) => write!(f, "fewer than 2 classes ({c})"),
            Violation::NonFinite {
                feature,
                row,
                value,
            } => write!(
                f,
                "feature {feature} has non-finite value {value} at row {row}"
            ),
            Violation::LabelOutOfRange { row, label } => {
                write!(f, "row {row}: label {label} out of range")
            }
            Violation::ClassAbsent(k) => write!(f, "class {k} absent"),
        }
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl LabelColumn {
    /// Resolves against a header row. A bare integer that is not a header name is
    /// taken as an index.
    pub fn resolve(&self, headers: &[String]) -> Result<usize> {
        match self {
            LabelColumn::Last if !headers.is_empty() => Ok(headers.len() - 1),
            LabelColumn::Last => Err(Error::InvalidArgument("CSV has no columns".into())),
            LabelColumn::Index(i) if *i < headers.len() => Ok(*i),
            LabelColumn::Index(i) => Err(Error::InvalidArgument(format!(
                "label column index {i} out of range ({} columns)",
                headers.len()
            ))),
            LabelColumn::Name(name) => {
                if let Some(i) = headers.iter().position(|h| h == name) {
                    Ok(i)
                } else if let Ok(i) = name.parse::<usize>() {
                    LabelColumn::Index(i).resolve(headers)
                } else {
                    Err(Error::InvalidArgument(format!(
                        "label column {name:?} not found in header"
                    )))
                }
            }
        }
    }
}

/// Label values mapped to contiguous ids by order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn id(&mut self, raw: &str) -> usize {
        if let Some(&id) = self.index.get(raw) {
            return id;
        }
        let id = self.names.len();
        self.names.push(raw.to_string());
        self.index.insert(raw.to_string(), id);
        id
    }

    pub fn get(&self, raw: &str) -> Option<usize> {
        self.index.get(raw).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

pub(crate) fn parse_cell<T: Real>(raw: &str, row: usize, column: &str) -> Result<T> {
    let trimmed = raw.trim();
    let cell_err = |message: String| Error::Cell {
        row,
        column: column.to_string(),
        message,
    };
    if trimmed.is_empty() {
        return Err(cell_err("missing value".into()));
    }
    let v: f64 = trimmed
        .parse()
        .map_err(|_| cell_err(format!("cannot parse {trimmed:?} as a number")))?;
    if v.is_nan() {
        return Err(cell_err("missing value (NaN)".into()));
    }
    if !v.is_finite() {
        return Err(cell_err(format!("non-finite value {trimmed:?}")));
    }
    Ok(T::of(v))
}

/// Header layout of a feature/label CSV, shared by the in-memory and batched readers.
#[derive(Debug, Clone)]
pub(crate) struct CsvLayout {
    pub headers: Vec<String>,
    pub label_idx: usize,
}

impl CsvLayout {
    pub fn new(headers: Vec<String>, label_column: &LabelColumn) -> Result<Self> {
        let label_idx = label_column.resolve(&headers)?;
        if headers.len() < 2 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        Ok(Self { headers, label_idx })
    }

    pub fn n_features(&self) -> usize {
        self.headers.len() - 1
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.headers
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != self.label_idx)
            .map(|(_, h)| h.clone())
            .collect()
    }

    fn check_len(&self, record: &csv::StringRecord, row: usize) -> Result<()> {
        if record.len() != self.headers.len() {
            return Err(Error::Cell {
                row,
                column: "*".into(),
                message: format!(
                    "expected {} fields, found {}",
                    self.headers.len(),
                    record.len()
                ),
            });
        }
        Ok(())
    }

    /// Raw label of a record, trimmed.
    pub fn label<'r>(&self, record: &'r csv::StringRecord, row: usize) -> Result<&'r str> {
        self.check_len(record, row)?;
        let raw = record[self.label_idx].trim();
        if raw.is_empty() {
            return Err(Error::Cell {
                row,
                column: self.headers[self.label_idx].clone(),
                message: "missing label".into(),
            });
        }
        Ok(raw)
    }

    /// Appends the record's features to `out`.
    pub fn features<T: Real>(
        &self,
        record: &csv::StringRecord,
        row: usize,
        out: &mut Vec<T>,
    ) -> Result<()> {
        self.check_len(record, row)?;
        for (j, cell) in record.iter().enumerate() {
            if j != self.label_idx {
                out.push(parse_cell::<T>(cell, row, &self.headers[j])?);
            }
        }
        Ok(())
    }
}

pub(crate) fn open_csv(path: &Path) -> Result<csv::Reader<std::io::BufReader<std::fs::File>>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(std::io::BufReader::new(file)))
}

/// Reads a headered, comma-delimited CSV. Every non-label column must be numeric.
///
/// Rows are numbered from 1 (the first data row) in error messages.
pub fn load_csv<T: Real>(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<Dataset<T>> {
    let mut map = LabelMap::new();
    let ds = load_csv_mapped(path, label_column, &mut map)?;
    if map.len() < 2 {
        return Err(Error::TooFewClasses(map.len()));
    }
    if let Some(v) = ds.validate().into_iter().next() {
        return Err(Error::InvalidDataset(v.to_string()));
    }
    Ok(ds)
}

/// Like [`load_csv`] but assigns label ids through an existing map (new labels are
/// appended), so a separate test file shares the training ids. Class presence is not
/// checked.
pub fn load_csv_mapped<T: Real>(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    map: &mut LabelMap,
) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let layout = CsvLayout::new(headers, label_column)?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let label = map.id(layout.label(&record, row)?);
        layout.features::<T>(&record, row, &mut values)?;
        labels.push(label);
    }
    let s = labels.len();
    let features = Array2::from_shape_vec((s, layout.n_features()), values)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    Ok(Dataset::new(features, labels, map.len())?
        .with_feature_names(layout.feature_names())
        .with_label_names(map.names().to_vec()))
}

/// Seeded train/test split parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Split each class separately so class proportions carry over.
    #[serde(default)]
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        Self {
            train_fraction,
            seed,
            stratified: false,
        }
    }
}

/// Train and test row indices, each in shuffled order.
pub fn split_indices(labels: &[usize], spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let s = labels.len();
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {} not in (0, 1)",
            spec.train_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut train, mut test) = if spec.stratified {
        let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut by_class = vec![Vec::new(); n_classes];
        for (i, &l) in labels.iter().enumerate() {
            by_class[l].push(i);
        }
        let mut train = Vec::new();
        let mut test = Vec::new();
        for mut rows in by_class {
            rows.shuffle(&mut rng);
            let k = (spec.train_fraction * rows.len() as f64).floor() as usize;
            train.extend_from_slice(&rows[..k]);
            test.extend_from_slice(&rows[k..]);
        }
        (train, test)
    } else {
        let mut rows: Vec<usize> = (0..s).collect();
        rows.shuffle(&mut rng);
        let k = (spec.train_fraction * s as f64).floor() as usize;
        let test = rows.split_off(k);
        (rows, test)
    };
    if train.is_empty() || test.is_empty() {
        return Err(Error::DegenerateSplit {
            train: train.len(),
            test: test.len(),
        });
    }
    if spec.stratified {
        train.shuffle(&mut rng);
        test.shuffle(&mut rng);
    }
    Ok((train, test))
}

/// Uniform random (or stratified) train/test split. Both halves keep the full class
/// count; use [`Dataset::absent_classes`] to flag classes a split lost.
pub fn split_train_test<T: Real>(
    d: &Dataset<T>,
    spec: &SplitSpec,
) -> Result<(Dataset<T>, Dataset<T>)> {
    let (train, test) = split_indices(d.labels(), spec)?;
    Ok((d.select(&train), d.select(&test)))
}

/// `c` unit-variance Gaussian blobs; class `k` is centered at `k * separation` on every
/// feature. Labels cycle `0, 1, .., c-1` so every class is present when `s >= c`.
pub fn make_synthetic<T: Real>(
    s: usize,
    n: usize,
    c: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    if c < 2 || s < c || n < 1 {
        return Err(Error::InvalidArgument(format!(
            "make_synthetic needs c >= 2, s >= c, n >= 1 (got s={s}, n={n}, c={c})"
        )));
    }
    let mut gen = BlobGenerator::new(n, c, separation, seed);
    let mut values = Vec::with_capacity(s * n);
    let mut labels = Vec::with_capacity(s);
    gen.fill::<T>(s, &mut values, &mut labels);
    let features =
        Array2::from_shape_vec((s, n), values).map_err(|e| Error::InvalidDataset(e.to_string()))?;
    Dataset::new(features, labels, c)
}

/// Row-at-a-time generator behind [`make_synthetic`].
#[derive(Debug, Clone)]
pub(crate) struct BlobGenerator {
    rng: ChaCha8Rng,
    n: usize,
    c: usize,
    separation: f64,
    next_row: usize,
}

impl BlobGenerator {
    pub fn new(n: usize, c: usize, separation: f64, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
            c,
            separation,
            next_row: 0,
        }
    }

    pub fn fill<T: Real>(&mut self, rows: usize, values: &mut Vec<T>, labels: &mut Vec<usize>) {
        for _ in 0..rows {
            let k = self.next_row % self.c;
            for _ in 0..self.n {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                values.push(T::of(k as f64 * self.separation + z));
            }
            labels.push(k);
            self.next_row += 1;
        }
    }
}
