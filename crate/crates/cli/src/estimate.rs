use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bitbit_core::coverage::{compute_q_y, sweep_curve, CurvePoint, QubitEstimate, SweepConfig};
use bitbit_core::data::{
    load_csv_mapped, split_indices, split_train_test, Dataset, LabelMap, SplitSpec,
};
use bitbit_core::dimred::ReducerSpec;
use bitbit_core::stream::{stream_sweep, CsvScan, StreamConfig};
use rayon::prelude::*;

use crate::args::{EncoderArgs, EstimateArgs, InputArgs, SplitArgs};
use crate::report::{
    report_thresholds, timestamp, Aggregate, DatasetSummary, LabelEntry, ReplicateReport, Report,
    SCHEMA_VERSION,
};

pub const DEFAULT_STEP: usize = 1;
pub const DEFAULT_STREAM_STEP: usize = 10;

/// A training file and optional separate test file read through one label map.
pub(crate) struct Loaded {
    pub data: Dataset<f64>,
    pub test: Option<Dataset<f64>>,
    pub labels: LabelMap,
    pub warnings: Vec<String>,
}

pub(crate) fn load(input: &InputArgs, test_input: Option<&Path>) -> Result<Loaded> {
    let col = input.label_column();
    let mut labels = LabelMap::new();
    let data = load_csv_mapped::<f64>(&input.input, &col, &mut labels)
        .with_context(|| format!("reading {}", input.input.display()))?;
    let test = match test_input {
        Some(path) => {
            let t = load_csv_mapped::<f64>(path, &col, &mut labels)
                .with_context(|| format!("reading {}", path.display()))?;
            if t.n_features() != data.n_features() {
                bail!(
                    "{} has {} features but {} has {}",
                    path.display(),
                    t.n_features(),
                    input.input.display(),
                    data.n_features()
                );
            }
            Some(t)
        }
        None => None,
    };
    if labels.len() < 2 {
        bail!(bitbit_core::Error::TooFewClasses(labels.len()));
    }
    let c = labels.len();
    let mut warnings = Vec::new();
    let mut checked = |d: Dataset<f64>, what: &str| -> Result<Dataset<f64>> {
        let names = d.feature_names().map(<[String]>::to_vec);
        let mut d = Dataset::new(d.features().to_owned(), d.labels().to_vec(), c)?
            .with_label_names(labels.names().to_vec());
        if let Some(names) = names {
            d = d.with_feature_names(names);
        }
        for v in d.validate() {
            match v {
                bitbit_core::data::Violation::ClassAbsent(k) => warnings.push(format!(
                    "class {:?} absent from the {what}",
                    labels.names()[k]
                )),
                other => bail!("invalid {what}: {other}"),
            }
        }
        Ok(d)
    };
    let data = checked(data, "input")?;
    let test = test.map(|t| checked(t, "test input")).transpose()?;
    Ok(Loaded {
        data,
        test,
        labels,
        warnings,
    })
}

pub(crate) fn reducer_spec(args: &EncoderArgs, n_features: usize) -> ReducerSpec {
    ReducerSpec::new(args.scheme, args.components.unwrap_or(n_features))
}

pub(crate) fn split_spec(args: &SplitArgs, seed: u64) -> SplitSpec {
    SplitSpec {
        train_fraction: args.train_fraction,
        seed,
        stratified: args.stratified,
    }
}

pub(crate) fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()?)
}

fn label_entries(map: &LabelMap) -> Vec<LabelEntry> {
    map.names()
        .iter()
        .enumerate()
        .map(|(id, name)| LabelEntry {
            id,
            name: name.clone(),
        })
        .collect()
}

/// `(replicate, seed)` pairs; a fixed test file allows only one.
fn replicate_plan(args: &EstimateArgs, warnings: &mut Vec<String>) -> Result<Vec<(usize, u64)>> {
    if args.replicates == 0 {
        bail!("--replicates must be at least 1");
    }
    if args.split.test_input.is_some() {
        if args.replicates > 1 {
            warnings.push(format!(
                "a separate test file fixes the split; running 1 replicate instead of {}",
                args.replicates
            ));
        }
        return Ok(vec![(0, args.split.seed)]);
    }
    Ok((0..args.replicates)
        .map(|r| (r, args.split.seed.wrapping_add(r as u64)))
        .collect())
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        bail!("--threshold must be in (0, 1], got {t}");
    }
    Ok(())
}

fn sweep_config(
    args: &EstimateArgs,
    n_features: usize,
    step: usize,
    thresholds: &[f64],
) -> SweepConfig {
    SweepConfig {
        reducer: reducer_spec(&args.encoder, n_features),
        n_x_max: args.n_x_max,
        step,
        stop_threshold: *thresholds.last().expect("thresholds are never empty"),
        encoder: args.encoder.options(),
    }
}

fn estimates(
    curve: &[CurvePoint],
    thresholds: &[f64],
    n_classes: usize,
) -> Result<Vec<QubitEstimate>> {
    thresholds
        .iter()
        .map(|&t| Ok(QubitEstimate::from_curve(curve, t, n_classes)?))
        .collect()
}

fn absent(
    labels: impl Iterator<Item = usize>,
    map: &LabelMap,
    what: &str,
    r: usize,
) -> Vec<String> {
    let mut seen = vec![false; map.len()];
    for l in labels {
        seen[l] = true;
    }
    (0..map.len())
        .filter(|&k| !seen[k])
        .map(|k| {
            format!(
                "replicate {r}: class {:?} absent from the {what} split",
                map.names()[k]
            )
        })
        .collect()
}

fn config_echo(args: &EstimateArgs, step: usize) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(args)?;
    v["step"] = step.into();
    Ok(v)
}

fn assemble(
    command: &str,
    streamed: bool,
    config: serde_json::Value,
    dataset: DatasetSummary,
    labels: &LabelMap,
    thresholds: Vec<f64>,
    results: Vec<(ReplicateReport, Vec<String>)>,
    mut warnings: Vec<String>,
) -> Report {
    let mut replicates = Vec::with_capacity(results.len());
    for (rep, w) in results {
        warnings.extend(w);
        replicates.push(rep);
    }
    let aggregates = thresholds
        .iter()
        .map(|&t| Aggregate::from_replicates(t, &replicates))
        .collect();
    Report {
        schema_version: SCHEMA_VERSION.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        generated_at: timestamp(),
        command: command.to_string(),
        streamed,
        config,
        dataset,
        labels: label_entries(labels),
        thresholds,
        replicates,
        aggregates,
        warnings,
    }
}

/// In-memory estimation: split, sweep and read off `Q_dataset` per replicate.
pub fn run_estimate(args: &EstimateArgs) -> Result<Report> {
    check_threshold(args.threshold)?;
    let loaded = load(&args.input, args.split.test_input.as_deref())?;
    let mut warnings = loaded.warnings.clone();
    if args.batch_size.is_some() {
        warnings.push("--batch-size only applies to stream-estimate; ignored".into());
    }
    let plan = replicate_plan(args, &mut warnings)?;
    let thresholds = report_thresholds(args.threshold);
    let step = args.step.unwrap_or(DEFAULT_STEP);
    let c = loaded.labels.len();
    let cfg = sweep_config(args, loaded.data.n_features(), step, &thresholds);

    let run = |&(r, seed): &(usize, u64)| -> Result<(ReplicateReport, Vec<String>)> {
        let (train, test) = match &loaded.test {
            Some(t) => (loaded.data.clone(), t.clone()),
            None => split_train_test(&loaded.data, &split_spec(&args.split, seed))?,
        };
        let mut w = Vec::new();
        if loaded.test.is_none() {
            w.extend(absent(
                train.labels().iter().copied(),
                &loaded.labels,
                "training",
                r,
            ));
            w.extend(absent(
                test.labels().iter().copied(),
                &loaded.labels,
                "test",
                r,
            ));
        }
        let curve = sweep_curve(&train, &test, &cfg).with_context(|| format!("replicate {r}"))?;
        let rep = ReplicateReport {
            replicate: r,
            seed,
            train_samples: train.n_samples() as u64,
            test_samples: test.n_samples() as u64,
            estimates: estimates(&curve, &thresholds, c)?,
            curve,
        };
        Ok((rep, w))
    };
    let results =
        thread_pool(args.jobs)?.install(|| plan.par_iter().map(run).collect::<Result<Vec<_>>>())?;

    let dataset = DatasetSummary {
        input: args.input.input.clone(),
        test_input: args.split.test_input.clone(),
        n_samples: loaded.data.n_samples(),
        n_test_samples: loaded.test.as_ref().map(Dataset::n_samples),
        n_features: loaded.data.n_features(),
        n_classes: c,
        q_y: compute_q_y(c)?,
    };
    Ok(assemble(
        "estimate",
        false,
        config_echo(args, step)?,
        dataset,
        &loaded.labels,
        thresholds,
        results,
        warnings,
    ))
}

/// Streaming estimation: the same protocol with batched passes over the CSV and
/// encodings written under the work directory.
pub fn run_stream_estimate(args: &EstimateArgs) -> Result<Report> {
    check_threshold(args.threshold)?;
    let Some(batch_size) = args.batch_size else {
        bail!("stream-estimate requires --batch-size");
    };
    let col = args.input.label_column();
    let scan = CsvScan::new(&args.input.input, &col)
        .with_context(|| format!("reading {}", args.input.input.display()))?;
    let test_scan = match &args.split.test_input {
        Some(p) => Some(
            CsvScan::with_map(p, &col, scan.label_map().clone())
                .with_context(|| format!("reading {}", p.display()))?,
        ),
        None => None,
    };
    let labels = test_scan.as_ref().unwrap_or(&scan).label_map().clone();
    if labels.len() < 2 {
        bail!(bitbit_core::Error::TooFewClasses(labels.len()));
    }
    let n_features = scan.feature_names().len();
    if let Some(t) = &test_scan {
        if t.feature_names().len() != n_features {
            bail!(
                "test input has {} features, input has {n_features}",
                t.feature_names().len()
            );
        }
    }
    let c = labels.len();
    let mut warnings = Vec::new();
    let plan = replicate_plan(args, &mut warnings)?;
    let thresholds = report_thresholds(args.threshold);
    let step = args.step.unwrap_or(DEFAULT_STREAM_STEP);
    let cfg = sweep_config(args, n_features, step, &thresholds);

    let temp;
    let work_dir: PathBuf = match &args.work_dir {
        Some(d) => d.clone(),
        None => {
            temp = tempfile::tempdir()?;
            temp.path().to_path_buf()
        }
    };

    let run = |&(r, seed): &(usize, u64)| -> Result<(ReplicateReport, Vec<String>)> {
        let mut w = Vec::new();
        let (mut train, mut test) = match &test_scan {
            Some(t) => (scan.source::<f64>(None)?, t.source::<f64>(None)?),
            None => {
                let (tr, te) = split_indices(scan.labels(), &split_spec(&args.split, seed))?;
                w.extend(absent(
                    tr.iter().map(|&i| scan.labels()[i]),
                    &labels,
                    "training",
                    r,
                ));
                w.extend(absent(
                    te.iter().map(|&i| scan.labels()[i]),
                    &labels,
                    "test",
                    r,
                ));
                (
                    scan.source::<f64>(Some(&tr))?,
                    scan.source::<f64>(Some(&te))?,
                )
            }
        };
        let mut sc = StreamConfig::new(batch_size, work_dir.join(format!("replicate-{r}")));
        sc.seed = seed;
        if let Some(n) = args.reservoir_size {
            sc.reservoir_size = n;
        }
        sc.test_rule = args.test_rule;
        sc.table_budget = args.table_budget;
        let out = stream_sweep(&sc, &mut train, &mut test, &cfg)
            .with_context(|| format!("replicate {r}"))?;
        w.extend(out.warnings.iter().map(|m| format!("replicate {r}: {m}")));
        let rep = ReplicateReport {
            replicate: r,
            seed,
            train_samples: out.n_train,
            test_samples: out.n_test,
            estimates: estimates(&out.curve, &thresholds, c)?,
            curve: out.curve,
        };
        Ok((rep, w))
    };
    let results =
        thread_pool(args.jobs)?.install(|| plan.par_iter().map(run).collect::<Result<Vec<_>>>())?;

    let dataset = DatasetSummary {
        input: args.input.input.clone(),
        test_input: args.split.test_input.clone(),
        n_samples: scan.n_rows(),
        n_test_samples: test_scan.as_ref().map(CsvScan::n_rows),
        n_features,
        n_classes: c,
        q_y: compute_q_y(c)?,
    };
    Ok(assemble(
        "stream-estimate",
        true,
        config_echo(args, step)?,
        dataset,
        &labels,
        thresholds,
        results,
        warnings,
    ))
}

/// True when some replicate never reached the configured threshold.
pub fn any_uncovered(report: &Report, threshold: f64) -> bool {
    report
        .replicates
        .iter()
        .any(|r| r.estimate(threshold).is_none_or(|e| !e.covered))
}

/// One row per replicate and swept `N_x`.
pub fn write_curve_csv(report: &Report, path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record([
        "replicate",
        "n_x",
        "theoretical_train_accuracy",
        "theoretical_test_accuracy",
        "train_collision_incidence",
        "test_overlap_incidence",
        "test_train_overlap_fraction",
        "unique_train_bitstrings",
    ])?;
    for rep in &report.replicates {
        for p in &rep.curve {
            let m = &p.metrics;
            w.write_record([
                rep.replicate.to_string(),
                p.n_x.to_string(),
                m.theoretical_train_accuracy.to_string(),
                m.theoretical_test_accuracy.to_string(),
                m.train_collision_incidence.to_string(),
                m.test_overlap_incidence.to_string(),
                m.test_train_overlap_fraction.to_string(),
                m.unique_train_bitstrings.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
