//! Qubit resource estimation for classical datasets under bit-bit encoding.
//!
//! Rows are reduced, ranked by mutual information with the label, squeezed through an
//! empirical copula and discretized into `N_x`-bit strings. Sweeping `N_x` until the
//! encoded training and test sets stop colliding gives the number of qubits needed
//! to hold the dataset.

pub mod coverage;
pub mod data;
pub mod dimred;
pub mod encoder;
pub mod error;
mod linalg;
pub mod qsim;
pub mod scalar;
pub mod stream;

pub use coverage::{
    build_table, compute_q_y, coverage_metrics, sweep_curve, sweep_qubits, test_overlap_incidence,
    BitstringTable, CoverageMetrics, CurvePoint, QubitEstimate, SweepConfig, TestOverlap,
};
pub use data::{
    load_csv, load_csv_mapped, make_synthetic, split_indices, split_train_test, LabelColumn,
    LabelMap, SplitSpec,
};
pub use dimred::{fit_reducer, IncrementalPcaState, ReducerSpec, Scheme};
pub use encoder::{
    allocate_bits, discretize_value, fit_encoder, fit_encoder_with, BitAllocation, Bitstring,
    EncoderOptions,
};
pub use error::{Error, Result};
pub use qsim::{
    build_exact_classifier, evaluate_loss, predict, rotosolve_step, train_sweeps,
    train_with_restarts, train_with_restarts_with, BatchWeighting, ParamInit, QuantumModel,
    TrainingBatch,
};
pub use scalar::Real;
pub use stream::{
    stream_coverage, stream_encode, stream_fit_encoder, stream_fit_statistics, stream_sweep,
    BatchSource, CsvScan, CsvSource, MemorySource, StreamConfig, SyntheticSource, TestRule,
};

pub type Dataset64 = data::Dataset<f64>;
pub type Dataset32 = data::Dataset<f32>;
pub type EncoderModel64 = encoder::EncoderModel<f64>;
pub type EncoderModel32 = encoder::EncoderModel<f32>;
pub type FittedReducer64 = dimred::FittedReducer<f64>;
pub type FittedReducer32 = dimred::FittedReducer<f32>;
pub type QuantumModel64 = qsim::QuantumModel<f64>;
pub type TrainingBatch64 = qsim::TrainingBatch<f64>;
