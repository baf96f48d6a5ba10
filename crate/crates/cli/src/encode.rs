use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use bitbit_core::data::LabelColumn;
use bitbit_core::encoder::format::EncodedWriter;
use bitbit_core::encoder::{fit_encoder_with, EncoderModel};
use bitbit_core::stream::{stream_encode, stream_fit_statistics, CsvScan, StreamConfig};

use crate::args::{sibling, EncodeArgs};
use crate::estimate::{load, reducer_spec};

/// Summary of an `encode` run.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodeOutcome {
    pub records: u64,
    pub test_records: Option<u64>,
    pub warnings: Vec<String>,
}

fn write_encoded(
    model: &EncoderModel<f64>,
    rows: &bitbit_core::data::Dataset<f64>,
    path: &Path,
) -> Result<u64> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = EncodedWriter::new(BufWriter::new(file), model.width())?;
    for (z, &label) in model
        .encode_samples(rows.features())?
        .iter()
        .zip(rows.labels())
    {
        w.write(z, label)?;
    }
    let n = w.count();
    w.finish()?;
    Ok(n)
}

fn stream_to(
    model: &EncoderModel<f64>,
    scan: &CsvScan,
    path: &Path,
    batch_size: usize,
) -> Result<u64> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut src = scan.source::<f64>(None)?;
    Ok(stream_encode(
        model,
        &mut src,
        BufWriter::new(file),
        batch_size,
    )?)
}

/// Fits an encoder on the input at `n_x` qubits and writes the encoded records and the
/// model. With a batch size the input is read in batches.
pub fn run_encode(args: &EncodeArgs) -> Result<EncodeOutcome> {
    let model_path = args
        .model_output
        .clone()
        .unwrap_or_else(|| sibling(&args.output, ".model.json"));
    let test = args.test_input.as_deref().zip(args.test_output.as_deref());
    let outcome = match args.batch_size {
        None => {
            let loaded = load(&args.input, args.test_input.as_deref())?;
            let spec = reducer_spec(&args.encoder, loaded.data.n_features());
            let model = fit_encoder_with(&loaded.data, &spec, args.n_x, &args.encoder.options())?;
            let records = write_encoded(&model, &loaded.data, &args.output)?;
            let test_records = match (&loaded.test, test) {
                (Some(t), Some((_, out))) => Some(write_encoded(&model, t, out)?),
                _ => None,
            };
            model.persist(&model_path)?;
            EncodeOutcome {
                records,
                test_records,
                warnings: loaded.warnings,
            }
        }
        Some(batch_size) => {
            let col: LabelColumn = args.input.label_column();
            let scan = CsvScan::new(&args.input.input, &col)?;
            let mut cfg = StreamConfig::new(batch_size, std::env::temp_dir());
            cfg.seed = args.seed;
            cfg.encoder = args.encoder.options();
            let spec = reducer_spec(&args.encoder, scan.feature_names().len());
            let mut src = scan.source::<f64>(None)?;
            let fit = stream_fit_statistics(&cfg, &mut src, &spec)?;
            let model = fit.model.with_budget(args.n_x)?;
            let records = stream_to(&model, &scan, &args.output, batch_size)?;
            let test_records = match test {
                Some((input, out)) => {
                    let ts = CsvScan::with_map(input, &col, scan.label_map().clone())?;
                    Some(stream_to(&model, &ts, out, batch_size)?)
                }
                None => None,
            };
            model.persist(&model_path)?;
            EncodeOutcome {
                records,
                test_records,
                warnings: fit.warnings,
            }
        }
    };
    Ok(outcome)
}
