//! Command-line front end: in-memory and streaming qubit estimation, encoding,
//! circuit training and report summaries.

pub mod args;
pub mod encode;
pub mod estimate;
pub mod report;
pub mod train;

use std::io::Write;

use anyhow::{Context, Result};

pub use args::{Cli, Command};
pub use encode::run_encode;
pub use estimate::{run_estimate, run_stream_estimate};
pub use report::Report;
pub use train::run_train;

/// Exit status when every step succeeded.
pub const EXIT_OK: i32 = 0;
/// Exit status for any error, including bad usage.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when some replicate never reached the threshold within `--nx-max`.
pub const EXIT_UNCOVERED: i32 = 2;

fn emit_report(report: &Report, args: &args::EstimateArgs, out: &mut dyn Write) -> Result<i32> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    match &args.output {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
        }
        None => out.write_all(text.as_bytes())?,
    }
    if let Some(path) = &args.curve_csv {
        estimate::write_curve_csv(report, path)?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if estimate::any_uncovered(report, args.threshold) {
        eprintln!(
            "some replicates did not reach accuracy {} within {} data qubits",
            args.threshold, args.n_x_max
        );
        EXIT_UNCOVERED
    } else {
        EXIT_OK
    })
}

/// Runs one command, writing primary output to `out`; returns the exit status.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Estimate(a) => emit_report(&run_estimate(&a)?, &a, out),
        Command::StreamEstimate(a) => emit_report(&run_stream_estimate(&a)?, &a, out),
        Command::Encode(a) => {
            let o = run_encode(&a)?;
            for w in &o.warnings {
                eprintln!("warning: {w}");
            }
            writeln!(
                out,
                "encoded {} records to {}",
                o.records,
                a.output.display()
            )?;
            if let (Some(n), Some(p)) = (o.test_records, &a.test_output) {
                writeln!(out, "encoded {n} records to {}", p.display())?;
            }
            Ok(EXIT_OK)
        }
        Command::Train(a) => {
            let o = run_train(&a)?;
            for w in &o.warnings {
                eprintln!("warning: {w}");
            }
            let last = o.trace.last().expect("trace has the initial row");
            writeln!(
                out,
                "loss {:.6}, train accuracy {:.4} (ceiling {:.4}), test accuracy {:.4} (ceiling {:.4})",
                last.loss,
                last.train_accuracy,
                o.ceilings.theoretical_train_accuracy,
                last.test_accuracy,
                o.ceilings.theoretical_test_accuracy
            )?;
            writeln!(
                out,
                "trace: {}, model: {}",
                a.output.display(),
                o.model_path.display()
            )?;
            Ok(EXIT_OK)
        }
        Command::Report(a) => {
            let text = std::fs::read_to_string(&a.report)
                .with_context(|| format!("reading {}", a.report.display()))?;
            let report: Report = serde_json::from_str(&text).context("not a bitbit report")?;
            if report.schema_version != report::SCHEMA_VERSION {
                anyhow::bail!(
                    "report schema {} is not supported (expected {})",
                    report.schema_version,
                    report::SCHEMA_VERSION
                );
            }
            if a.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            } else {
                out.write_all(report::summarize(&report).as_bytes())?;
            }
            Ok(EXIT_OK)
        }
    }
}
