//! Batched encoding for data that does not fit in memory.
//!
//! Fitting takes three passes over the training source: accumulate second moments for
//! the reducer, then transform each batch to record ranges, batch importances and a
//! reservoir sample for the copula, then encode to disk. Test data is encoded with the
//! persisted model and coverage is computed from the two encoded files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coverage::{
    argmax_first, sweep_points, BitstringTable, CoverageMetrics, CurvePoint, SweepConfig,
    TestOverlap,
};
use crate::data::{open_csv, BlobGenerator, CsvLayout, Dataset, LabelColumn, LabelMap};
use crate::dimred::{IncrementalPcaState, ReducerSpec, Scheme};
use crate::encoder::format::{EncodedReader, EncodedWriter};
use crate::encoder::{
    estimate_mutual_information, normalize, Bitstring, CopulaModel, EncoderModel, EncoderOptions,
    ImportanceScores,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MODEL_FILE: &str = "model.json";
pub const TRAIN_FILE: &str = "train.enc";
pub const TEST_FILE: &str = "test.enc";
pub const REPORT_FILE: &str = "report.json";

/// Rows and labels read in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub features: Array2<T>,
    pub labels: Vec<usize>,
}

impl<T> Batch<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A re-readable stream of labelled rows.
pub trait BatchSource<T> {
    fn n_features(&self) -> usize;

    /// Label ids are below this.
    fn n_classes(&self) -> usize;

    /// Up to `max_rows` rows; `None` once exhausted.
    fn next_batch(&mut self, max_rows: usize) -> Result<Option<Batch<T>>>;

    /// Restarts from the first row.
    fn rewind(&mut self) -> Result<()>;
}

/// Rows of an in-memory dataset, optionally restricted to a subset of row indices.
pub struct MemorySource<'a, T> {
    data: &'a Dataset<T>,
    rows: Option<Vec<usize>>,
    pos: usize,
}

impl<'a, T: Real> MemorySource<'a, T> {
    pub fn new(data: &'a Dataset<T>) -> Self {
        Self {
            data,
            rows: None,
            pos: 0,
        }
    }

    pub fn with_rows(data: &'a Dataset<T>, rows: Vec<usize>) -> Self {
        Self {
            data,
            rows: Some(rows),
            pos: 0,
        }
    }

    fn len(&self) -> usize {
        self.rows.as_ref().map_or(self.data.n_samples(), Vec::len)
    }
}

impl<T: Real> BatchSource<T> for MemorySource<'_, T> {
    fn n_features(&self) -> usize {
        self.data.n_features()
    }

    fn n_classes(&self) -> usize {
        self.data.n_classes()
    }

    fn next_batch(&mut self, max_rows: usize) -> Result<Option<Batch<T>>> {
        let end = (self.pos + max_rows.max(1)).min(self.len());
        if self.pos >= end {
            return Ok(None);
        }
        let idx: Vec<usize> = match &self.rows {
            Some(rows) => rows[self.pos..end].to_vec(),
            None => (self.pos..end).collect(),
        };
        self.pos = end;
        let part = self.data.select(&idx);
        Ok(Some(Batch {
            features: part.features().to_owned(),
            labels: part.labels().to_vec(),
        }))
    }

    fn rewind(&mut self) -> Result<()> {
        self.pos = 0;
        Ok(())
    }
}

/// Result of a label-only pass over a CSV: the column layout, every row's label id and
/// the label mapping (first appearance order, as [`crate::data::load_csv`] assigns it).
#[derive(Debug, Clone)]
pub struct CsvScan {
    path: PathBuf,
    layout: CsvLayout,
    labels: Arc<[usize]>,
    label_map: LabelMap,
}

impl CsvScan {
    pub fn new(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<Self> {
        Self::with_map(path, label_column, LabelMap::new())
    }

    /// Continues numbering from an existing map, e.g. a training file's.
    pub fn with_map(
        path: impl AsRef<Path>,
        label_column: &LabelColumn,
        mut label_map: LabelMap,
    ) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut reader = open_csv(&path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let layout = CsvLayout::new(headers, label_column)?;
        let mut labels = Vec::new();
        let mut record = csv::StringRecord::new();
        while reader.read_record(&mut record)? {
            let row = labels.len() + 1;
            labels.push(label_map.id(layout.label(&record, row)?));
        }
        Ok(Self {
            path,
            layout,
            labels: labels.into(),
            label_map,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_map(&self) -> &LabelMap {
        &self.label_map
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.layout.feature_names()
    }

    /// A source over every row, or only the listed rows (read in file order).
    pub fn source<T: Real>(&self, rows: Option<&[usize]>) -> Result<CsvSource<T>> {
        let keep = match rows {
            None => None,
            Some(rows) => {
                let mut mask = vec![false; self.labels.len()];
                for &r in rows {
                    *mask.get_mut(r).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "row {r} out of range ({} rows)",
                            self.labels.len()
                        ))
                    })? = true;
                }
                Some(mask)
            }
        };
        Ok(CsvSource {
            reader: open_csv(&self.path)?,
            scan: self.clone(),
            keep,
            next_row: 0,
            record: csv::StringRecord::new(),
            _scalar: PhantomData,
        })
    }
}

/// CSV rows read in fixed-size batches.
pub struct CsvSource<T> {
    scan: CsvScan,
    reader: csv::Reader<BufReader<File>>,
    keep: Option<Vec<bool>>,
    next_row: usize,
    record: csv::StringRecord,
    _scalar: PhantomData<T>,
}

impl<T: Real> BatchSource<T> for CsvSource<T> {
    fn n_features(&self) -> usize {
        self.scan.layout.n_features()
    }

    fn n_classes(&self) -> usize {
        self.scan.label_map.len()
    }

    fn next_batch(&mut self, max_rows: usize) -> Result<Option<Batch<T>>> {
        let max_rows = max_rows.max(1);
        let mut values = Vec::with_capacity(max_rows * self.n_features());
        let mut labels = Vec::with_capacity(max_rows);
        while labels.len() < max_rows && self.reader.read_record(&mut self.record)? {
            let i = self.next_row;
            self.next_row += 1;
            if self
                .keep
                .as_ref()
                .is_some_and(|k| !k.get(i).copied().unwrap_or(false))
            {
                continue;
            }
            let label = *self.scan.labels.get(i).ok_or_else(|| {
                Error::InvalidDataset(format!(
                    "{} changed since it was scanned",
                    self.scan.path.display()
                ))
            })?;
            self.scan
                .layout
                .features(&self.record, i + 1, &mut values)?;
            labels.push(label);
        }
        if labels.is_empty() {
            return Ok(None);
        }
        let features = Array2::from_shape_vec((labels.len(), self.n_features()), values)
            .map_err(|e| Error::InvalidDataset(e.to_string()))?;
        Ok(Some(Batch { features, labels }))
    }

    fn rewind(&mut self) -> Result<()> {
        self.reader = open_csv(&self.scan.path)?;
        self.next_row = 0;
        Ok(())
    }
}

/// Gaussian blobs generated on the fly; yields the same rows as
/// [`crate::data::make_synthetic`] with the same arguments without holding them.
pub struct SyntheticSource<T> {
    rows: usize,
    n: usize,
    c: usize,
    separation: f64,
    seed: u64,
    emitted: usize,
    gen: BlobGenerator,
    _scalar: PhantomData<T>,
}

impl<T: Real> SyntheticSource<T> {
    pub fn new(rows: usize, n: usize, c: usize, separation: f64, seed: u64) -> Result<Self> {
        if c < 2 || rows < c || n < 1 {
            return Err(Error::InvalidArgument(format!(
                "synthetic source needs c >= 2, rows >= c, n >= 1 (got rows={rows}, n={n}, c={c})"
            )));
        }
        Ok(Self {
            rows,
            n,
            c,
            separation,
            seed,
            emitted: 0,
            gen: BlobGenerator::new(n, c, separation, seed),
            _scalar: PhantomData,
        })
    }
}

impl<T: Real> BatchSource<T> for SyntheticSource<T> {
    fn n_features(&self) -> usize {
        self.n
    }

    fn n_classes(&self) -> usize {
        self.c
    }

    fn next_batch(&mut self, max_rows: usize) -> Result<Option<Batch<T>>> {
        let take = max_rows.max(1).min(self.rows - self.emitted);
        if take == 0 {
            return Ok(None);
        }
        let mut values = Vec::with_capacity(take * self.n);
        let mut labels = Vec::with_capacity(take);
        self.gen.fill(take, &mut values, &mut labels);
        self.emitted += take;
        let features = Array2::from_shape_vec((take, self.n), values)
            .map_err(|e| Error::InvalidDataset(e.to_string()))?;
        Ok(Some(Batch { features, labels }))
    }

    fn rewind(&mut self) -> Result<()> {
        self.gen = BlobGenerator::new(self.n, self.c, self.separation, self.seed);
        self.emitted = 0;
        Ok(())
    }
}

/// How batch importances are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiWeighting {
    /// Plain mean over batches.
    #[default]
    Unweighted,
    /// Mean weighted by batch size.
    RecordWeighted,
}

/// Which label a test bitstring is judged by.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestRule {
    /// All test samples sharing `z` are judged by their most common label.
    #[default]
    TestMajority,
    /// Each test sample is judged by its own label, as in the in-memory path.
    PerSample,
}

impl std::str::FromStr for TestRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "test-majority" => Ok(TestRule::TestMajority),
            "per-sample" => Ok(TestRule::PerSample),
            other => Err(Error::InvalidArgument(format!(
                "unknown test rule {other:?} (expected test-majority or per-sample)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub batch_size: usize,
    pub work_dir: PathBuf,
    /// Rows kept for fitting the copula.
    pub reservoir_size: usize,
    /// Seeds the reservoir.
    pub seed: u64,
    pub mi_weighting: MiWeighting,
    pub encoder: EncoderOptions,
    pub test_rule: TestRule,
    /// Upper bound on the estimated size of each bitstring table.
    pub table_budget: Option<usize>,
}

impl StreamConfig {
    pub const DEFAULT_RESERVOIR: usize = 100_000;

    pub fn new(batch_size: usize, work_dir: impl Into<PathBuf>) -> Self {
        Self {
            batch_size,
            work_dir: work_dir.into(),
            reservoir_size: Self::DEFAULT_RESERVOIR,
            seed: 0,
            mi_weighting: MiWeighting::default(),
            encoder: EncoderOptions::default(),
            test_rule: TestRule::default(),
            table_budget: None,
        }
    }

    fn check(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "batch size must be at least 1".into(),
            ));
        }
        if self.reservoir_size == 0 {
            return Err(Error::InvalidArgument(
                "reservoir size must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn model_path(&self) -> PathBuf {
        self.work_dir.join(MODEL_FILE)
    }

    pub fn train_path(&self) -> PathBuf {
        self.work_dir.join(TRAIN_FILE)
    }

    pub fn test_path(&self) -> PathBuf {
        self.work_dir.join(TEST_FILE)
    }
}

/// Per-pass running statistics.
#[derive(Debug, Clone)]
pub struct BatchAccumulators<T> {
    pub pca_state: IncrementalPcaState<T>,
    pub mins: Vec<T>,
    pub maxs: Vec<T>,
    /// Importances of each batch with at least two rows.
    pub batch_scores: Vec<Vec<T>>,
    pub batch_sizes: Vec<usize>,
    pub batch_count: usize,
}

impl<T: Real> BatchAccumulators<T> {
    fn new(n_features: usize) -> Self {
        Self {
            pca_state: IncrementalPcaState::new(n_features),
            mins: Vec::new(),
            maxs: Vec::new(),
            batch_scores: Vec::new(),
            batch_sizes: Vec::new(),
            batch_count: 0,
        }
    }

    fn mean_scores(&self, d: usize, weighting: MiWeighting) -> Vec<T> {
        let mut out = vec![T::zero(); d];
        let mut total = T::zero();
        for (scores, &size) in self.batch_scores.iter().zip(&self.batch_sizes) {
            let w = match weighting {
                MiWeighting::Unweighted => T::one(),
                MiWeighting::RecordWeighted => T::of_usize(size),
            };
            for (o, &v) in out.iter_mut().zip(scores) {
                *o += w * v;
            }
            total += w;
        }
        if total > T::zero() {
            for o in &mut out {
                *o /= total;
            }
        }
        out
    }
}

/// Uniform sample of rows (algorithm R).
struct Reservoir<T> {
    cap: usize,
    seen: u64,
    rows: Vec<Vec<T>>,
    rng: ChaCha8Rng,
}

impl<T: Real> Reservoir<T> {
    fn new(cap: usize, seed: u64) -> Self {
        Self {
            cap,
            seen: 0,
            rows: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn offer(&mut self, row: impl Iterator<Item = T>) {
        if self.rows.len() < self.cap {
            self.rows.push(row.collect());
        } else {
            let j = self.rng.random_range(0..=self.seen);
            if (j as usize) < self.cap {
                self.rows[j as usize] = row.collect();
            }
        }
        self.seen += 1;
    }
}

/// Model from passes 1 and 2, with any warnings raised on the way.
#[derive(Debug, Clone)]
pub struct StreamFit<T> {
    pub model: EncoderModel<T>,
    pub n_records: u64,
    pub warnings: Vec<String>,
}

/// Passes 1 and 2: reducer, ranges, averaged batch importances and copula. The model
/// carries a one-qubit allocation; use [`EncoderModel::with_budget`] to re-allocate.
pub fn stream_fit_statistics<T: Real>(
    cfg: &StreamConfig,
    source: &mut dyn BatchSource<T>,
    spec: &ReducerSpec,
) -> Result<StreamFit<T>> {
    cfg.check()?;
    if spec.scheme == Scheme::Lsa {
        return Err(Error::InvalidArgument(
            "streaming supports the none and pca schemes only".into(),
        ));
    }
    let n = source.n_features();
    let mut acc = BatchAccumulators::new(n);

    source.rewind()?;
    while let Some(batch) = source.next_batch(cfg.batch_size)? {
        acc.pca_state.absorb(batch.features.view())?;
        acc.batch_count += 1;
    }
    if acc.pca_state.count() == 0 {
        return Err(Error::EmptySource("training source yielded no rows".into()));
    }
    let reducer = match spec.scheme {
        Scheme::None => {
            if spec.n_components != n {
                return Err(Error::InvalidArgument(format!(
                    "identity reducer keeps all {n} features, {} components requested",
                    spec.n_components
                )));
            }
            acc.pca_state.finalize_identity()?
        }
        _ => acc.pca_state.finalize(spec.n_components)?,
    };
    let d = reducer.n_components();
    let mut warnings: Vec<String> = reducer.warnings().to_vec();

    source.rewind()?;
    acc.mins = vec![T::infinity(); d];
    acc.maxs = vec![T::neg_infinity(); d];
    let mut reservoir = Reservoir::new(cfg.reservoir_size, cfg.seed);
    let mut column = Vec::new();
    let mut records = 0u64;
    while let Some(batch) = source.next_batch(cfg.batch_size)? {
        let reduced = reducer.transform(batch.features.view())?;
        for row in reduced.rows() {
            for (k, &v) in row.iter().enumerate() {
                if v < acc.mins[k] {
                    acc.mins[k] = v;
                }
                if v > acc.maxs[k] {
                    acc.maxs[k] = v;
                }
            }
            reservoir.offer(row.iter().copied());
        }
        records += batch.len() as u64;
        if batch.len() >= 2 {
            let scores = (0..d)
                .map(|k| {
                    column.clear();
                    column.extend(reduced.column(k).iter().copied());
                    estimate_mutual_information(&column, &batch.labels, cfg.encoder.mi_bins)
                })
                .collect();
            acc.batch_scores.push(scores);
            acc.batch_sizes.push(batch.len());
        }
    }
    if acc.batch_scores.is_empty() {
        warnings.push("no batch had two or more rows; importances are all zero".into());
    }
    let importances = ImportanceScores::new(acc.mean_scores(d, cfg.mi_weighting));

    let mut columns = vec![Vec::with_capacity(reservoir.rows.len()); d];
    for row in &reservoir.rows {
        for (k, &v) in row.iter().enumerate() {
            columns[k].push(normalize(v, acc.mins[k], acc.maxs[k]));
        }
    }
    let copula = CopulaModel::from_columns(columns);
    let model = EncoderModel::from_parts(reducer, acc.mins, acc.maxs, copula, importances, 1)?;
    Ok(StreamFit {
        model,
        n_records: records,
        warnings,
    })
}

/// All three passes: fits at `n_x` qubits, writes `train.enc` and persists `model.json`
/// in the work dir.
pub fn stream_fit_encoder<T: Real>(
    cfg: &StreamConfig,
    source: &mut dyn BatchSource<T>,
    spec: &ReducerSpec,
    n_x: usize,
) -> Result<StreamFit<T>> {
    let mut fit = stream_fit_statistics(cfg, source, spec)?;
    fit.model = fit.model.with_budget(n_x)?;
    std::fs::create_dir_all(&cfg.work_dir).map_err(|e| Error::io(&cfg.work_dir, e))?;
    encode_to_file(&fit.model, source, &cfg.train_path(), cfg.batch_size)?;
    fit.model.persist(cfg.model_path())?;
    Ok(fit)
}

fn encode_to_file<T: Real>(
    model: &EncoderModel<T>,
    source: &mut dyn BatchSource<T>,
    path: &Path,
    batch_size: usize,
) -> Result<u64> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let sink = BufWriter::new(file);
    stream_encode(model, source, sink, batch_size)
}

/// Encodes every row of `source` (from the start) into `sink`; returns the record count.
pub fn stream_encode<T: Real, W: Write>(
    model: &EncoderModel<T>,
    source: &mut dyn BatchSource<T>,
    sink: W,
    batch_size: usize,
) -> Result<u64> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument(
            "batch size must be at least 1".into(),
        ));
    }
    source.rewind()?;
    let mut writer = EncodedWriter::new(sink, model.width())?;
    while let Some(batch) = source.next_batch(batch_size)? {
        let u = model.uniform_features(batch.features.view())?;
        for (row, &label) in u.rows().into_iter().zip(&batch.labels) {
            writer.write(&model.encode_uniform_row(row), label)?;
        }
    }
    let count = writer.count();
    writer.finish()?;
    Ok(count)
}

fn read_table(path: &Path, n_classes: usize, budget: Option<usize>) -> Result<BitstringTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = EncodedReader::new(BufReader::new(file))?;
    let mut table = BitstringTable::new(n_classes).with_width(reader.width());
    if let Some(b) = budget {
        table = table.with_byte_budget(b);
    }
    for rec in reader {
        let (z, label) = rec?;
        table.insert(&z, label)?;
    }
    Ok(table)
}

/// Coverage from two encoded files.
///
/// Under [`TestRule::TestMajority`] every test sample with bitstring `z` counts as an
/// error when `z` is in the training table and the most common test label of `z`
/// differs from its training majority.
pub fn stream_coverage(
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
    n_classes: usize,
    rule: TestRule,
    budget: Option<usize>,
) -> Result<CoverageMetrics> {
    let train = read_table(train_path.as_ref(), n_classes, budget)?;
    let overlap = match rule {
        TestRule::TestMajority => {
            let test = read_table(test_path.as_ref(), n_classes, budget)?;
            majority_overlap(&train, &test)?
        }
        TestRule::PerSample => {
            let path = test_path.as_ref();
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let reader = EncodedReader::new(BufReader::new(file))?;
            if reader.width() != train.width().unwrap_or(reader.width()) {
                return Err(Error::WidthMismatch {
                    expected: train.width().unwrap_or(0),
                    got: reader.width(),
                });
            }
            per_sample_overlap(&train, reader)?
        }
    };
    CoverageMetrics::from_parts(&train, &overlap)
}

fn per_sample_overlap(
    train: &BitstringTable,
    test: impl Iterator<Item = Result<(Bitstring, usize)>>,
) -> Result<TestOverlap> {
    let (mut total, mut overlapping, mut errors) = (0u64, 0u64, 0u64);
    for rec in test {
        let (z, label) = rec?;
        total += 1;
        if let Some(counts) = train.counts(&z) {
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

fn majority_overlap(train: &BitstringTable, test: &BitstringTable) -> Result<TestOverlap> {
    if let (Some(a), Some(b)) = (train.width(), test.width()) {
        if a != b {
            return Err(Error::WidthMismatch {
                expected: a,
                got: b,
            });
        }
    }
    let total = test.total();
    if total == 0 {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let mut overlapping = 0u64;
    let mut errors = 0u64;
    for (z, counts) in test.iter() {
        if let Some(train_counts) = train.counts(z) {
            let n: u64 = counts.iter().sum();
            overlapping += n;
            if argmax_first(counts) != argmax_first(train_counts) {
                errors += n;
            }
        }
    }
    Ok(TestOverlap {
        incidence: errors as f64 / total as f64,
        overlap_fraction: overlapping as f64 / total as f64,
        total,
        overlapping,
        errors,
    })
}

/// Streaming counterpart of [`crate::coverage::sweep_curve`].
#[derive(Debug, Clone)]
pub struct StreamSweep<T> {
    pub curve: Vec<CurvePoint>,
    /// Model at the last swept `N_x` (also persisted in the work dir).
    pub model: EncoderModel<T>,
    pub n_train: u64,
    pub n_test: u64,
    pub warnings: Vec<String>,
}

/// Fits once, then per swept `N_x` re-encodes both sources to the work dir and scores
/// them with [`stream_coverage`].
pub fn stream_sweep<T: Real>(
    cfg: &StreamConfig,
    train: &mut dyn BatchSource<T>,
    test: &mut dyn BatchSource<T>,
    sweep: &SweepConfig,
) -> Result<StreamSweep<T>> {
    if sweep.step == 0 {
        return Err(Error::InvalidArgument(
            "sweep step must be at least 1".into(),
        ));
    }
    if !(sweep.stop_threshold > 0.0 && sweep.stop_threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold {} not in (0, 1]",
            sweep.stop_threshold
        )));
    }
    let cfg = StreamConfig {
        encoder: sweep.encoder,
        ..cfg.clone()
    };
    let base = stream_fit_statistics(&cfg, train, &sweep.reducer)?;
    std::fs::create_dir_all(&cfg.work_dir).map_err(|e| Error::io(&cfg.work_dir, e))?;
    let n_classes = train.n_classes().max(test.n_classes());

    let mut curve = Vec::new();
    let mut model = base.model.clone();
    let mut n_test = 0;
    let (mut train_done, mut test_done) = (false, false);
    for n_x in sweep_points(sweep.n_x_max, sweep.step) {
        model = base.model.with_budget(n_x)?;
        encode_to_file(&model, train, &cfg.train_path(), cfg.batch_size)?;
        n_test = encode_to_file(&model, test, &cfg.test_path(), cfg.batch_size)?;
        let metrics = stream_coverage(
            cfg.train_path(),
            cfg.test_path(),
            n_classes,
            cfg.test_rule,
            cfg.table_budget,
        )?;
        train_done |= metrics.theoretical_train_accuracy >= sweep.stop_threshold;
        test_done |= metrics.theoretical_test_accuracy >= sweep.stop_threshold;
        curve.push(CurvePoint { n_x, metrics });
        if train_done && test_done {
            break;
        }
    }
    model.persist(cfg.model_path())?;
    Ok(StreamSweep {
        curve,
        model,
        n_train: base.n_records,
        n_test,
        warnings: base.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::{build_table, coverage_metrics, sweep_curve, test_overlap_incidence};
    use crate::data::{make_synthetic, split_indices, SplitSpec};
    use crate::encoder::fit_encoder;

    fn z(s: &str) -> Bitstring {
        Bitstring::from_binary(s).unwrap()
    }

    fn write_enc(dir: &Path, name: &str, width: usize, recs: &[(&str, usize)]) -> PathBuf {
        let path = dir.join(name);
        let mut w = EncodedWriter::new(File::create(&path).unwrap(), width).unwrap();
        for (b, l) in recs {
            w.write(&z(b), *l).unwrap();
        }
        w.finish().unwrap();
        path
    }

    #[test]
    fn memory_source_batches_cover_all_rows() {
        let d = make_synthetic::<f64>(23, 2, 2, 1.0, 0).unwrap();
        let mut src = MemorySource::new(&d);
        let mut seen = 0;
        while let Some(b) = src.next_batch(5).unwrap() {
            assert!(b.len() <= 5);
            seen += b.len();
        }
        assert_eq!(seen, 23);
        src.rewind().unwrap();
        assert_eq!(src.next_batch(100).unwrap().unwrap().features, d.features());
    }

    #[test]
    fn synthetic_source_matches_generator() {
        let d = make_synthetic::<f64>(37, 3, 3, 2.0, 9).unwrap();
        let mut src = SyntheticSource::<f64>::new(37, 3, 3, 2.0, 9).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        while let Some(b) = src.next_batch(10).unwrap() {
            rows.extend(b.features.iter().copied());
            labels.extend(b.labels);
        }
        assert_eq!(rows, d.features().iter().copied().collect::<Vec<_>>());
        assert_eq!(labels, d.labels());
    }

    #[test]
    fn csv_source_reads_selected_rows_in_file_order() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "a,b,y\n1,2,x\n3,4,y\n5,6,x\n7,8,z\n").unwrap();
        let scan = CsvScan::new(f.path(), &LabelColumn::Last).unwrap();
        assert_eq!(scan.labels(), &[0, 1, 0, 2]);
        let mut src = scan.source::<f64>(Some(&[3, 1])).unwrap();
        let b = src.next_batch(10).unwrap().unwrap();
        assert_eq!(b.features, ndarray::array![[3.0, 4.0], [7.0, 8.0]]);
        assert_eq!(b.labels, vec![1, 2]);
        assert!(src.next_batch(10).unwrap().is_none());
        src.rewind().unwrap();
        assert_eq!(src.next_batch(1).unwrap().unwrap().len(), 1);
    }

    #[test]
    fn csv_malformed_record_names_row() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "a,y\n1,x\nfoo,y\n").unwrap();
        let scan = CsvScan::new(f.path(), &LabelColumn::Last).unwrap();
        let mut src = scan.source::<f64>(None).unwrap();
        let err = src.next_batch(10).unwrap_err();
        assert!(matches!(err, Error::Cell { row: 2, .. }), "{err}");
    }

    #[test]
    fn empty_source_is_an_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "a,y\n").unwrap();
        let scan = CsvScan::new(f.path(), &LabelColumn::Last).unwrap();
        let mut src = scan.source::<f64>(None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cfg = StreamConfig::new(10, dir.path());
        let spec = ReducerSpec::full(Scheme::None, 1);
        assert!(matches!(
            stream_fit_encoder(&cfg, &mut src, &spec, 4),
            Err(Error::EmptySource(_))
        ));
    }

    #[test]
    fn lsa_is_rejected() {
        let d = make_synthetic::<f64>(20, 2, 2, 1.0, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cfg = StreamConfig::new(10, dir.path());
        let r = stream_fit_statistics(
            &cfg,
            &mut MemorySource::new(&d),
            &ReducerSpec::new(Scheme::Lsa, 2),
        );
        assert!(r.is_err());
    }

    #[test]
    fn single_batch_matches_in_memory_model() {
        let d = make_synthetic::<f64>(200, 3, 2, 1.0, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cfg = StreamConfig::new(1000, dir.path());
        let spec = ReducerSpec::full(Scheme::None, 3);
        let fit = stream_fit_encoder(&cfg, &mut MemorySource::new(&d), &spec, 9).unwrap();
        let mem = fit_encoder(&d, &spec, 9).unwrap();
        assert_eq!(fit.model.mins, mem.mins);
        assert_eq!(fit.model.maxs, mem.maxs);
        assert_eq!(fit.model.copula, mem.copula);
        assert_eq!(fit.model.importances, mem.importances);
        assert_eq!(fit.model.allocation, mem.allocation);
        let want = mem.encode_samples(d.features()).unwrap();
        let file = File::open(cfg.train_path()).unwrap();
        let got: Vec<Bitstring> = EncodedReader::new(BufReader::new(file))
            .unwrap()
            .map(|r| r.unwrap().0)
            .collect();
        assert_eq!(got, want);
        let loaded = EncoderModel::<f64>::load(cfg.model_path()).unwrap();
        assert_eq!(loaded, fit.model);
    }

    #[test]
    fn batch_size_leaves_reducer_and_ranges_alone() {
        let d = make_synthetic::<f64>(500, 4, 3, 1.0, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let spec = ReducerSpec::new(Scheme::Pca, 3);
        let a = stream_fit_statistics(
            &StreamConfig::new(50, dir.path()),
            &mut MemorySource::new(&d),
            &spec,
        )
        .unwrap();
        let b = stream_fit_statistics(
            &StreamConfig::new(100, dir.path()),
            &mut MemorySource::new(&d),
            &spec,
        )
        .unwrap();
        let ra = a.model.reducer.components();
        let rb = b.model.reducer.components();
        for (x, y) in ra.iter().zip(rb.iter()) {
            assert!((x - y).abs() < 1e-6);
        }
        for k in 0..3 {
            assert!((a.model.mins[k] - b.model.mins[k]).abs() < 1e-9);
            assert!((a.model.maxs[k] - b.model.maxs[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn record_weighted_mean_differs_only_with_uneven_batches() {
        let mut acc = BatchAccumulators::<f64>::new(1);
        acc.batch_scores = vec![vec![1.0], vec![0.0]];
        acc.batch_sizes = vec![3, 1];
        assert_eq!(acc.mean_scores(1, MiWeighting::Unweighted), vec![0.5]);
        assert_eq!(acc.mean_scores(1, MiWeighting::RecordWeighted), vec![0.75]);
    }

    #[test]
    fn reservoir_keeps_everything_below_capacity_and_caps_above() {
        let mut r = Reservoir::<f64>::new(10, 1);
        for i in 0..7 {
            r.offer(std::iter::once(i as f64));
        }
        assert_eq!(r.rows.len(), 7);
        for i in 7..1000 {
            r.offer(std::iter::once(i as f64));
        }
        assert_eq!(r.rows.len(), 10);
        assert_eq!(r.seen, 1000);
    }

    #[test]
    fn encoding_twice_is_byte_identical() {
        let d = make_synthetic::<f64>(300, 2, 2, 1.0, 2).unwrap();
        let m = fit_encoder(&d, &ReducerSpec::new(Scheme::Pca, 2), 7).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut src = MemorySource::new(&d);
        assert_eq!(stream_encode(&m, &mut src, &mut a, 64).unwrap(), 300);
        stream_encode(&m, &mut src, &mut b, 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn majority_rule_hand_count() {
        let dir = tempfile::tempdir().unwrap();
        let train = write_enc(
            dir.path(),
            "tr",
            2,
            &[("01", 0), ("01", 0), ("01", 0), ("01", 1)],
        );
        let test = write_enc(dir.path(), "te", 2, &[("01", 1), ("01", 1), ("01", 0)]);
        let m = stream_coverage(&train, &test, 2, TestRule::TestMajority, None).unwrap();
        assert_eq!(m.test_overlap_incidence, 1.0);
        let m = stream_coverage(&train, &test, 2, TestRule::PerSample, None).unwrap();
        assert!((m.test_overlap_incidence - 2.0 / 3.0).abs() < 1e-15);

        let disjoint = write_enc(dir.path(), "dj", 2, &[("10", 1), ("11", 0)]);
        let m = stream_coverage(&train, &disjoint, 2, TestRule::TestMajority, None).unwrap();
        assert_eq!(m.test_overlap_incidence, 0.0);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let train = write_enc(dir.path(), "tr", 2, &[("01", 0)]);
        let test = write_enc(dir.path(), "te", 3, &[("001", 0)]);
        assert!(stream_coverage(&train, &test, 2, TestRule::TestMajority, None).is_err());
        assert!(stream_coverage(&train, &test, 2, TestRule::PerSample, None).is_err());
    }

    #[test]
    fn rules_agree_when_each_test_bitstring_is_unique() {
        let dir = tempfile::tempdir().unwrap();
        let tr: Vec<(String, usize)> = (0..64)
            .map(|i| (format!("{:06b}", i % 16), i % 3 % 2))
            .collect();
        let te: Vec<(String, usize)> = (0..20).map(|i| (format!("{:06b}", i * 3), i % 2)).collect();
        let tr_refs: Vec<(&str, usize)> = tr.iter().map(|(s, l)| (s.as_str(), *l)).collect();
        let te_refs: Vec<(&str, usize)> = te.iter().map(|(s, l)| (s.as_str(), *l)).collect();
        let train = write_enc(dir.path(), "tr", 6, &tr_refs);
        let test = write_enc(dir.path(), "te", 6, &te_refs);
        let streamed = stream_coverage(&train, &test, 2, TestRule::TestMajority, None).unwrap();

        let zs: Vec<Bitstring> = tr.iter().map(|(s, _)| z(s)).collect();
        let table = build_table(zs.iter().zip(tr.iter().map(|(_, l)| *l)), 2).unwrap();
        let tz: Vec<Bitstring> = te.iter().map(|(s, _)| z(s)).collect();
        let direct =
            test_overlap_incidence(&table, tz.iter().zip(te.iter().map(|(_, l)| *l))).unwrap();
        assert_eq!(streamed.test_overlap_incidence, direct.incidence);
        assert_eq!(
            streamed.train_collision_incidence,
            table.train_collision_incidence().unwrap()
        );
    }

    #[test]
    fn streamed_sweep_matches_in_memory_sweep() {
        let d = make_synthetic::<f64>(400, 3, 2, 1.5, 12).unwrap();
        let (tr, te) = split_indices(d.labels(), &SplitSpec::new(0.8, 3)).unwrap();
        let (train, test) = (d.select(&tr), d.select(&te));
        let sweep = SweepConfig {
            reducer: ReducerSpec::new(Scheme::Pca, 2),
            n_x_max: 40,
            step: 1,
            stop_threshold: 1.0,
            encoder: EncoderOptions::default(),
        };
        let mem = sweep_curve(&train, &test, &sweep).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = StreamConfig::new(10_000, dir.path());
        cfg.test_rule = TestRule::PerSample;
        let streamed = stream_sweep(
            &cfg,
            &mut MemorySource::with_rows(&d, tr.clone()),
            &mut MemorySource::with_rows(&d, te.clone()),
            &sweep,
        )
        .unwrap();
        assert_eq!(streamed.curve, mem);
        assert!(cfg.model_path().exists() && cfg.train_path().exists() && cfg.test_path().exists());

        // Sanity: the in-memory metrics are what the coverage module gives directly.
        let last = mem.last().unwrap();
        let m = fit_encoder(&train, &sweep.reducer, last.n_x).unwrap();
        let direct = coverage_metrics(
            &m.encode_samples(train.features()).unwrap(),
            train.labels(),
            &m.encode_samples(test.features()).unwrap(),
            test.labels(),
            2,
        )
        .unwrap();
        assert_eq!(direct, last.metrics);
    }

    #[test]
    fn table_budget_surfaces_as_error() {
        let dir = tempfile::tempdir().unwrap();
        let train = write_enc(
            dir.path(),
            "tr",
            2,
            &[("00", 0), ("01", 0), ("10", 1), ("11", 1)],
        );
        let test = write_enc(dir.path(), "te", 2, &[("00", 0)]);
        let r = stream_coverage(&train, &test, 2, TestRule::TestMajority, Some(100));
        assert!(matches!(r, Err(Error::TableBudgetExceeded { .. })));
    }
}
