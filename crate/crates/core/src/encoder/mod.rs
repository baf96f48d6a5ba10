//! Bit-bit encoding: reduce, score, allocate, normalize, copula-transform and
//! discretize feature rows into fixed-width bitstrings.

mod allocation;
mod bitstring;
mod copula;
pub mod format;
mod mutual_info;

use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

pub use allocation::{allocate_bits, BitAllocation};
pub use bitstring::Bitstring;
pub(crate) use bitstring::MsbWriter;
pub use copula::{fit_copula, CopulaModel};
pub use mutual_info::{default_bins, estimate_mutual_information, ImportanceScores};

use crate::data::Dataset;
use crate::dimred::{fit_reducer, FittedReducer, ReducerSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MODEL_VERSION: &str = "1";

/// `min(floor(x * 2^b), 2^b - 1)` with `x` clamped to `[0, 1]`; `b = 0` gives 0.
pub fn discretize_value<T: Real>(x: T, b: u32) -> u64 {
    assert!(b <= 64, "discretize_value supports at most 64 bits");
    let mut code = 0u64;
    push_fraction_bits(x, b as usize, |bit| code = (code << 1) | u64::from(bit));
    code
}

/// Emits the first `b` binary digits of `x` (clamped to `[0, 1]`), most significant
/// first. Doubling and subtracting one are exact in binary floating point, so this is
/// `floor(x * 2^b)` for any `b`, with `x = 1` mapping to all ones.
#[inline]
fn push_fraction_bits<T: Real>(x: T, b: usize, mut emit: impl FnMut(bool)) {
    let one = T::one();
    let mut x = x.max(T::zero());
    if x >= one {
        for _ in 0..b {
            emit(true);
        }
        return;
    }
    for _ in 0..b {
        x = x + x;
        if x >= one {
            emit(true);
            x -= one;
        } else {
            emit(false);
        }
    }
}

/// Options for fitting an encoder beyond the reducer and qubit budget.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderOptions {
    /// Histogram bins for the MI estimator; `None` uses [`default_bins`].
    pub mi_bins: Option<usize>,
}

/// Everything needed to encode rows the same way the training data was encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct EncoderModel<T> {
    pub version: String,
    pub reducer: FittedReducer<T>,
    pub mins: Vec<T>,
    pub maxs: Vec<T>,
    pub copula: CopulaModel<T>,
    pub importances: ImportanceScores<T>,
    pub allocation: BitAllocation,
}

impl<T: Real> EncoderModel<T> {
    /// Assembles a model from already fitted parts, allocating `n_bits` by importance.
    pub fn from_parts(
        reducer: FittedReducer<T>,
        mins: Vec<T>,
        maxs: Vec<T>,
        copula: CopulaModel<T>,
        importances: ImportanceScores<T>,
        n_bits: usize,
    ) -> Result<Self> {
        let d = reducer.n_components();
        if mins.len() != d
            || maxs.len() != d
            || copula.n_components() != d
            || importances.len() != d
        {
            return Err(Error::InvalidArgument(format!(
                "encoder parts disagree on component count {d}"
            )));
        }
        if n_bits == 0 {
            return Err(Error::InvalidArgument(
                "qubit budget must be at least 1".into(),
            ));
        }
        let allocation = allocate_bits(&importances.scores, n_bits);
        Ok(Self {
            version: MODEL_VERSION.to_string(),
            reducer,
            mins,
            maxs,
            copula,
            importances,
            allocation,
        })
    }

    pub fn n_features(&self) -> usize {
        self.reducer.n_features()
    }

    pub fn n_components(&self) -> usize {
        self.reducer.n_components()
    }

    /// Encoded width `N_x`.
    pub fn width(&self) -> usize {
        self.allocation.total
    }

    /// Same fitted statistics, re-allocated to a different qubit budget.
    pub fn with_budget(&self, n_bits: usize) -> Result<Self> {
        if n_bits == 0 {
            return Err(Error::InvalidArgument(
                "qubit budget must be at least 1".into(),
            ));
        }
        Ok(Self {
            allocation: allocate_bits(&self.importances.scores, n_bits),
            ..self.clone()
        })
    }

    fn normalize(&self, value: T, d: usize) -> T {
        normalize(value, self.mins[d], self.maxs[d])
    }

    /// Rows mapped through reduce, min-max and copula: each entry in `[0, 1)`.
    pub fn uniform_features(&self, features: ArrayView2<T>) -> Result<Array2<T>> {
        let mut reduced = self.reducer.transform(features)?;
        for mut row in reduced.rows_mut() {
            for (d, v) in row.iter_mut().enumerate() {
                *v = self.copula.apply_unchecked(self.normalize(*v, d), d);
            }
        }
        Ok(reduced)
    }

    /// Encodes one copula-space row under this model's allocation.
    pub fn encode_uniform_row(&self, row: ArrayView1<T>) -> Bitstring {
        encode_with(&self.allocation, row)
    }

    pub fn encode_samples(&self, features: ArrayView2<T>) -> Result<Vec<Bitstring>> {
        let u = self.uniform_features(features)?;
        Ok(u.rows()
            .into_iter()
            .map(|r| self.encode_uniform_row(r))
            .collect())
    }

    /// Writes the model as JSON.
    pub fn persist(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Reads a model written by [`EncoderModel::persist`], checking the schema version.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = match value.get("version") {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(other) => other.to_string(),
            None => "<missing>".to_string(),
        };
        if found != MODEL_VERSION {
            return Err(Error::SchemaVersion {
                found,
                expected: MODEL_VERSION.to_string(),
            });
        }
        let model: Self = serde_json::from_value(value)?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        let d = self.n_components();
        let ok = self.mins.len() == d
            && self.maxs.len() == d
            && self.copula.n_components() == d
            && self.importances.len() == d
            && self.allocation.len() == d
            && self.allocation.bits.iter().sum::<usize>() == self.allocation.total;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "encoder model fields are inconsistent".into(),
            ))
        }
    }
}

#[inline]
pub(crate) fn normalize<T: Real>(value: T, min: T, max: T) -> T {
    let range = max - min;
    if range > T::zero() {
        ((value - min) / range).max(T::zero()).min(T::one())
    } else {
        T::zero()
    }
}

/// Concatenates per-component codes, component 0 in the most significant bits.
pub fn encode_with<T: Real>(allocation: &BitAllocation, uniform_row: ArrayView1<T>) -> Bitstring {
    let mut w = MsbWriter::new(allocation.total);
    for (d, &b) in allocation.bits.iter().enumerate() {
        if b > 0 {
            push_fraction_bits(uniform_row[d], b, |bit| w.push(bit));
        }
    }
    w.finish()
}

/// Per-column minimum and maximum.
pub(crate) fn column_ranges<T: Real>(x: ArrayView2<T>) -> (Vec<T>, Vec<T>) {
    let d = x.ncols();
    let mut mins = vec![T::infinity(); d];
    let mut maxs = vec![T::neg_infinity(); d];
    for row in x.rows() {
        for k in 0..d {
            mins[k] = mins[k].min(row[k]);
            maxs[k] = maxs[k].max(row[k]);
        }
    }
    (mins, maxs)
}

/// Fits reducer, importances, ranges and copula on the training split and allocates
/// `n_bits` across components.
pub fn fit_encoder<T: Real>(
    train: &Dataset<T>,
    spec: &ReducerSpec,
    n_bits: usize,
) -> Result<EncoderModel<T>> {
    fit_encoder_with(train, spec, n_bits, &EncoderOptions::default())
}

pub fn fit_encoder_with<T: Real>(
    train: &Dataset<T>,
    spec: &ReducerSpec,
    n_bits: usize,
    options: &EncoderOptions,
) -> Result<EncoderModel<T>> {
    if n_bits == 0 {
        return Err(Error::InvalidArgument(
            "qubit budget must be at least 1".into(),
        ));
    }
    let reducer = fit_reducer(spec, train.features())?;
    let reduced = reducer.transform(train.features())?;
    let importances = ImportanceScores::new(
        reduced
            .columns()
            .into_iter()
            .map(|c| estimate_mutual_information(&c.to_vec(), train.labels(), options.mi_bins))
            .collect(),
    );
    let (mins, maxs) = column_ranges(reduced.view());
    let mut normalized = reduced;
    for mut row in normalized.rows_mut() {
        for (d, v) in row.iter_mut().enumerate() {
            *v = normalize(*v, mins[d], maxs[d]);
        }
    }
    let copula = fit_copula(normalized.view());
    EncoderModel::from_parts(reducer, mins, maxs, copula, importances, n_bits)
}
