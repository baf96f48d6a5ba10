use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use bitbit_core::coverage::{build_table, compute_q_y, coverage_metrics, CoverageMetrics};
use bitbit_core::data::split_train_test;
use bitbit_core::encoder::{fit_encoder_with, Bitstring};
use bitbit_core::qsim::{
    evaluate_loss, sample_accuracy, table_accuracy, train_sweeps_with, train_with_restarts_with,
    ParamInit, QuantumModel, TrainingBatch,
};

use crate::args::{sibling, InitArg, TrainArgs};
use crate::estimate::{load, reducer_spec, split_spec, thread_pool};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub sweep: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

/// Result of a `train` run; the trace and model are also written to disk.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub n_x: usize,
    pub n_y: usize,
    pub ceilings: CoverageMetrics,
    pub trace: Vec<TraceRow>,
    pub kept_restart: usize,
    pub model: QuantumModel<f64>,
    pub model_path: PathBuf,
    pub warnings: Vec<String>,
}

/// Encodes at `N_x`, resolves collisions by training-set majority, trains the ansatz
/// and records loss and accuracies after every sweep.
pub fn run_train(args: &TrainArgs) -> Result<TrainOutcome> {
    if args.sweeps == 0 {
        bail!("--sweeps must be at least 1");
    }
    let loaded = load(&args.input, args.split.test_input.as_deref())?;
    let mut warnings = loaded.warnings.clone();
    let (train, test) = match &loaded.test {
        Some(t) => (loaded.data.clone(), t.clone()),
        None => split_train_test(&loaded.data, &split_spec(&args.split, args.split.seed))?,
    };
    let c = loaded.labels.len();
    let n_y = compute_q_y(c)?;
    let spec = reducer_spec(&args.encoder, train.n_features());
    let encoder = fit_encoder_with(&train, &spec, args.n_x, &args.encoder.options())?;
    let z_train = encoder.encode_samples(train.features())?;
    let z_test = encoder.encode_samples(test.features())?;
    let ceilings = coverage_metrics(&z_train, train.labels(), &z_test, test.labels(), c)?;
    let table = build_table(z_train.iter().zip(train.labels().iter().copied()), c)?;
    let batch = TrainingBatch::<f64>::from_table(&table, args.weighting.into())?;
    let template = QuantumModel::<f64>::with_cap(args.n_x, n_y, args.layers, args.qubit_cap)?;
    if args.n_x + n_y > 16 {
        warnings.push(format!(
            "{} qubits: each statevector takes {} MiB",
            args.n_x + n_y,
            (16usize << (args.n_x + n_y)) >> 20
        ));
    }

    let test_pairs: Vec<(&Bitstring, usize)> =
        z_test.iter().zip(test.labels().iter().copied()).collect();
    let measure = |sweep: usize, loss: f64, m: &QuantumModel<f64>| -> Result<TraceRow> {
        Ok(TraceRow {
            sweep,
            loss,
            train_accuracy: table_accuracy(m, &table)?,
            test_accuracy: sample_accuracy(m, test_pairs.iter().copied())?,
        })
    };

    let pool = thread_pool(args.jobs)?;
    let (model, trace, kept) = pool.install(|| -> Result<_> {
        let mut error = None;
        match args.init {
            InitArg::Zero => {
                let mut model = template.clone();
                let mut trace = vec![measure(0, evaluate_loss(&model, &batch)?, &model)?];
                train_sweeps_with(&mut model, &batch, args.sweeps, |k, l, m| {
                    match measure(k, l, m) {
                        Ok(row) => trace.push(row),
                        Err(e) => {
                            error.get_or_insert(e);
                        }
                    }
                })?;
                error.map_or(Ok(()), Err)?;
                Ok((model, trace, 0))
            }
            InitArg::Random => {
                let mut traces: Vec<Vec<TraceRow>> = Vec::new();
                let out = train_with_restarts_with(
                    &template,
                    &batch,
                    args.sweeps,
                    args.restarts,
                    args.split.seed,
                    1e-12,
                    |r, k, l, m| {
                        if traces.len() <= r {
                            traces.resize(r + 1, Vec::new());
                        }
                        match measure(k, l, m) {
                            Ok(row) => traces[r].push(row),
                            Err(e) => {
                                error.get_or_insert(e);
                            }
                        }
                    },
                )?;
                error.map_or(Ok(()), Err)?;
                let mut start = template.clone();
                start.initialize(ParamInit::Uniform {
                    scale: std::f64::consts::PI,
                    seed: args.split.seed.wrapping_add(out.best_restart as u64),
                });
                let mut trace = vec![measure(0, evaluate_loss(&start, &batch)?, &start)?];
                trace.append(&mut traces[out.best_restart]);
                Ok((out.model, trace, out.best_restart))
            }
        }
    })?;

    let model_path = args
        .model_output
        .clone()
        .unwrap_or_else(|| sibling(&args.output, ".model.json"));
    write_trace(args, n_y, &ceilings, kept, &trace)?;
    model.persist(&model_path)?;
    Ok(TrainOutcome {
        n_x: args.n_x,
        n_y,
        ceilings,
        trace,
        kept_restart: kept,
        model,
        model_path,
        warnings,
    })
}

fn write_trace(
    args: &TrainArgs,
    n_y: usize,
    ceilings: &CoverageMetrics,
    kept: usize,
    trace: &[TraceRow],
) -> Result<()> {
    let path = &args.output;
    let file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(
        out,
        "# n_x={} n_y={} layers={} sweeps={}",
        args.n_x, n_y, args.layers, args.sweeps
    )?;
    match args.init {
        InitArg::Zero => writeln!(out, "# init=zero")?,
        InitArg::Random => writeln!(out, "# init=random restarts={} kept={kept}", args.restarts)?,
    }
    writeln!(
        out,
        "# theoretical_train_accuracy={}",
        ceilings.theoretical_train_accuracy
    )?;
    writeln!(
        out,
        "# theoretical_test_accuracy={}",
        ceilings.theoretical_test_accuracy
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sweep", "loss", "train_accuracy", "test_accuracy"])?;
    for r in trace {
        w.write_record([
            r.sweep.to_string(),
            r.loss.to_string(),
            r.train_accuracy.to_string(),
            r.test_accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a trace written by `train`: the header values and the rows.
pub fn read_trace(text: &str) -> Result<(Vec<(String, String)>, Vec<TraceRow>)> {
    let mut header = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix("# ") {
            Some(h) => {
                for kv in h.split_whitespace() {
                    if let Some((k, v)) = kv.split_once('=') {
                        header.push((k.to_string(), v.to_string()));
                    }
                }
            }
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let mut rows = Vec::new();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> { Ok(rec.get(i).context("short trace row")?.parse()?) };
        rows.push(TraceRow {
            sweep: rec.get(0).context("short trace row")?.parse()?,
            loss: f(1)?,
            train_accuracy: f(2)?,
            test_accuracy: f(3)?,
        });
    }
    Ok((header, rows))
}
