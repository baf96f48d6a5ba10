//! Statevector simulation of bit-bit classifiers: a data register `|z>` under a class
//! register initialised to `|0>`, a parameterized circuit, and training by exact
//! single-parameter minimization.

mod circuit;
mod statevector;

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use circuit::{Circuit, Gate};
pub use statevector::{class_probabilities, prepare_basis_state, Statevector, HARD_QUBIT_LIMIT};

use crate::coverage::{argmax_first, BitstringTable};
use crate::encoder::Bitstring;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default limit on `N_x + N_y`; 20 qubits is 16 MiB of complex doubles per state.
pub const DEFAULT_QUBIT_CAP: usize = 20;

pub const MODEL_FILE_VERSION: &str = "1";

/// Data register of `n_x` qubits below a class register of `n_y` qubits, acted on by
/// a parameterized circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumModel<T> {
    n_x: usize,
    n_y: usize,
    layers: Option<usize>,
    circuit: Circuit,
    theta: Vec<T>,
}

impl<T: Real> QuantumModel<T> {
    /// Hardware-efficient ansatz with all parameters at zero.
    pub fn new(n_x: usize, n_y: usize, layers: usize) -> Result<Self> {
        Self::with_cap(n_x, n_y, layers, DEFAULT_QUBIT_CAP)
    }

    pub fn with_cap(n_x: usize, n_y: usize, layers: usize, cap: usize) -> Result<Self> {
        check_register(n_x, n_y, cap)?;
        let circuit = Circuit::hardware_efficient(n_x + n_y, layers);
        let theta = vec![T::zero(); circuit.n_params()];
        Ok(Self {
            n_x,
            n_y,
            layers: Some(layers),
            circuit,
            theta,
        })
    }

    /// Any circuit over `n_x + n_y` qubits.
    pub fn from_circuit(n_x: usize, n_y: usize, circuit: Circuit, theta: Vec<T>) -> Result<Self> {
        check_register(n_x, n_y, HARD_QUBIT_LIMIT)?;
        if circuit.n_qubits() != n_x + n_y {
            return Err(Error::DimensionMismatch {
                expected: n_x + n_y,
                got: circuit.n_qubits(),
            });
        }
        if theta.len() != circuit.n_params() {
            return Err(Error::DimensionMismatch {
                expected: circuit.n_params(),
                got: theta.len(),
            });
        }
        Ok(Self {
            n_x,
            n_y,
            layers: None,
            circuit,
            theta,
        })
    }

    pub fn n_data_qubits(&self) -> usize {
        self.n_x
    }

    pub fn n_class_qubits(&self) -> usize {
        self.n_y
    }

    pub fn n_qubits(&self) -> usize {
        self.n_x + self.n_y
    }

    /// Ansatz depth; `None` for custom circuits.
    pub fn layers(&self) -> Option<usize> {
        self.layers
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn set_theta(&mut self, j: usize, value: T) {
        self.theta[j] = value;
    }

    pub fn set_all_theta(&mut self, theta: Vec<T>) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.len(),
                got: theta.len(),
            });
        }
        self.theta = theta;
        Ok(())
    }

    fn check_width(&self, z: &Bitstring) -> Result<()> {
        if z.width() != self.n_x {
            return Err(Error::WidthMismatch {
                expected: self.n_x,
                got: z.width(),
            });
        }
        Ok(())
    }

    /// Output state for input `|0>|z>`.
    pub fn output_state(&self, z: &Bitstring) -> Result<Statevector<T>> {
        self.check_width(z)?;
        let index = z.as_u64().expect("data register within the qubit limit") as usize;
        let mut state = Statevector::basis(self.n_qubits(), index)?;
        self.circuit.apply(&mut state, &self.theta);
        Ok(state)
    }

    /// Class-register distribution for input `z`.
    pub fn class_distribution(&self, z: &Bitstring) -> Result<Vec<T>> {
        Ok(class_probabilities(&self.output_state(z)?, self.n_y))
    }

    pub fn to_json(&self) -> Result<String> {
        let layers = self.layers.ok_or_else(|| {
            Error::InvalidArgument(
                "only ansatz models can be saved; this one has a custom circuit".into(),
            )
        })?;
        let file = ModelFile {
            version: MODEL_FILE_VERSION.to_string(),
            n_data_qubits: self.n_x,
            n_class_qubits: self.n_y,
            layers,
            theta: self.theta.iter().map(|t| t.as_f64()).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::SchemaVersion {
                found: file.version,
                expected: MODEL_FILE_VERSION.to_string(),
            });
        }
        let mut m = Self::with_cap(
            file.n_data_qubits,
            file.n_class_qubits,
            file.layers,
            HARD_QUBIT_LIMIT,
        )?;
        m.set_all_theta(file.theta.into_iter().map(T::of).collect())?;
        Ok(m)
    }

    pub fn persist(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

fn check_register(n_x: usize, n_y: usize, cap: usize) -> Result<()> {
    if n_x == 0 || n_y == 0 {
        return Err(Error::InvalidArgument(format!(
            "data and class registers need at least one qubit each (got {n_x} and {n_y})"
        )));
    }
    let cap = cap.min(HARD_QUBIT_LIMIT);
    if n_x + n_y > cap {
        return Err(Error::QubitCap {
            n_qubits: n_x + n_y,
            cap,
        });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: String,
    n_data_qubits: usize,
    n_class_qubits: usize,
    layers: usize,
    theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord<T> {
    pub z: Bitstring,
    pub class: usize,
    pub weight: T,
}

/// How [`TrainingBatch::from_table`] weights distinct bitstrings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchWeighting {
    /// By frequency in the training data.
    #[default]
    Frequency,
    /// Equal weight per distinct bitstring.
    Uniform,
}

/// Collision-free training targets: one record per distinct `z`, weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch<T> {
    n_x: usize,
    records: Vec<TrainingRecord<T>>,
}

impl<T: Real> TrainingBatch<T> {
    pub fn new(n_x: usize, records: Vec<TrainingRecord<T>>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidArgument("training batch is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut total = 0.0;
        for r in &records {
            if r.z.width() != n_x {
                return Err(Error::WidthMismatch {
                    expected: n_x,
                    got: r.z.width(),
                });
            }
            if !seen.insert(&r.z) {
                return Err(Error::InvalidArgument(format!(
                    "bitstring {} appears twice",
                    r.z
                )));
            }
            if !(r.weight >= T::zero()) {
                return Err(Error::InvalidArgument(format!(
                    "negative weight for {}",
                    r.z
                )));
            }
            total += r.weight.as_f64();
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { n_x, records })
    }

    /// Majority label per distinct bitstring, sorted by bitstring.
    pub fn from_table(table: &BitstringTable, weighting: BatchWeighting) -> Result<Self> {
        let n_x = table.width().ok_or(Error::EmptyTable)?;
        if table.total() == 0 {
            return Err(Error::EmptyTable);
        }
        let mut entries: Vec<(&Bitstring, &[u64])> = table.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        let unique = T::of_usize(entries.len());
        let total = T::of(table.total() as f64);
        let records = entries
            .into_iter()
            .map(|(z, counts)| TrainingRecord {
                z: z.clone(),
                class: argmax_first(counts),
                weight: match weighting {
                    BatchWeighting::Frequency => T::of(counts.iter().sum::<u64>() as f64) / total,
                    BatchWeighting::Uniform => T::one() / unique,
                },
            })
            .collect();
        Self::new(n_x, records)
    }

    pub fn n_data_qubits(&self) -> usize {
        self.n_x
    }

    pub fn records(&self) -> &[TrainingRecord<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn check_batch<T: Real>(model: &QuantumModel<T>, batch: &TrainingBatch<T>) -> Result<()> {
    if batch.n_x != model.n_x {
        return Err(Error::WidthMismatch {
            expected: model.n_x,
            got: batch.n_x,
        });
    }
    let classes = 1usize << model.n_y;
    if let Some(r) = batch.records.iter().find(|r| r.class >= classes) {
        return Err(Error::InvalidArgument(format!(
            "class {} does not fit in {} class qubits",
            r.class, model.n_y
        )));
    }
    Ok(())
}

/// `1 - sum_z f(z) P(C(z) | z)`.
///
/// Records are simulated in parallel and summed in batch order, so the result does
/// not depend on the thread count.
pub fn evaluate_loss<T: Real>(model: &QuantumModel<T>, batch: &TrainingBatch<T>) -> Result<T> {
    check_batch(model, batch)?;
    let terms: Vec<T> = batch
        .records
        .par_iter()
        .map(|r| {
            let p = model.class_distribution(&r.z)?;
            Ok(r.weight * p[r.class])
        })
        .collect::<Result<_>>()?;
    let hit = terms.into_iter().fold(T::zero(), |a, b| a + b);
    Ok(T::one() - hit)
}

fn loss_at<T: Real>(
    model: &mut QuantumModel<T>,
    batch: &TrainingBatch<T>,
    j: usize,
    angle: T,
) -> Result<T> {
    let keep = model.theta[j];
    model.theta[j] = angle;
    let loss = evaluate_loss(model, batch);
    model.theta[j] = keep;
    loss
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(x: T) -> T {
    let two_pi = T::PI() + T::PI();
    let y = x - two_pi * ((x - T::PI()) / two_pi).ceil();
    if y <= -T::PI() {
        y + two_pi
    } else {
        y
    }
}

/// Exact minimization over parameter `j` with the others fixed.
///
/// Every rotation is `exp(-i theta G / 2)` with `G^2 = I`, so along one coordinate the
/// loss is `A + B cos(d) + C sin(d)` in the offset `d` from the current angle. Three
/// evaluations at `d = 0, +-pi/2` determine it and the minimizer is
/// `atan2(C, B) + pi`. Flat slices (amplitude below 1e-10) are left unchanged.
/// Returns the new angle and the loss there.
pub fn rotosolve_step<T: Real>(
    model: &mut QuantumModel<T>,
    batch: &TrainingBatch<T>,
    j: usize,
) -> Result<(T, T)> {
    if j >= model.theta.len() {
        return Err(Error::InvalidArgument(format!(
            "parameter {j} out of range ({} parameters)",
            model.theta.len()
        )));
    }
    let t0 = model.theta[j];
    let half_pi = T::FRAC_PI_2();
    let l0 = evaluate_loss(model, batch)?;
    let lp = loss_at(model, batch, j, t0 + half_pi)?;
    let lm = loss_at(model, batch, j, t0 - half_pi)?;
    let a = (lp + lm) / T::of(2.0);
    let b = l0 - a;
    let c = (lp - lm) / T::of(2.0);
    if (b * b + c * c).sqrt() < T::of(1e-10) {
        return Ok((t0, l0));
    }
    let candidate = wrap_angle(t0 + c.atan2(b) + T::PI());
    let loss = loss_at(model, batch, j, candidate)?;
    // Guard against rounding pushing the re-evaluated loss above the starting point.
    if loss > l0 {
        return Ok((t0, l0));
    }
    model.theta[j] = candidate;
    Ok((candidate, loss))
}

/// `sweeps` passes of exact coordinate minimization over every parameter in index
/// order; returns the loss after each sweep.
pub fn train_sweeps<T: Real>(
    model: &mut QuantumModel<T>,
    batch: &TrainingBatch<T>,
    sweeps: usize,
) -> Result<Vec<T>> {
    train_sweeps_with(model, batch, sweeps, |_, _, _| {})
}

/// As [`train_sweeps`], calling `after_sweep(index, loss, model)` after each sweep.
///
/// Each coordinate is minimized exactly as in [`rotosolve_step`], but the sinusoid
/// comes from the state just before the gate rather than from three full
/// evaluations. Writing `R(t) = cos(t/2) I + sin(t/2) (-iG)`, the output is
/// `cos(t/2) u + sin(t/2) v` with `u`, `v` the rest of the circuit applied to the
/// cached prefix state and to `-iG` times it.
pub fn train_sweeps_with<T: Real, F>(
    model: &mut QuantumModel<T>,
    batch: &TrainingBatch<T>,
    sweeps: usize,
    mut after_sweep: F,
) -> Result<Vec<T>>
where
    F: FnMut(usize, T, &QuantumModel<T>),
{
    if sweeps == 0 {
        return Err(Error::InvalidArgument(
            "at least one sweep is required".into(),
        ));
    }
    check_batch(model, batch)?;
    let state_bytes = (1usize << model.n_qubits()) * 2 * std::mem::size_of::<T>();
    let cache = batch.len().saturating_mul(state_bytes) <= PREFIX_CACHE_BYTES;
    let mut history = Vec::with_capacity(sweeps);
    let mut loss = evaluate_loss(model, batch)?;
    for sweep in 0..sweeps {
        loss = analytic_sweep(model, batch, loss, cache)?;
        history.push(loss);
        after_sweep(sweep + 1, loss, model);
    }
    Ok(history)
}

/// Memory allowed for the per-record prefix states kept during a sweep.
const PREFIX_CACHE_BYTES: usize = 256 << 20;

fn input_state<T: Real>(model: &QuantumModel<T>, z: &Bitstring) -> Result<Statevector<T>> {
    let index = z.as_u64().expect("data register within the qubit limit") as usize;
    Statevector::basis(model.n_qubits(), index)
}

fn analytic_sweep<T: Real>(
    model: &mut QuantumModel<T>,
    batch: &TrainingBatch<T>,
    start: T,
    cache: bool,
) -> Result<T> {
    let circuit = model.circuit.clone();
    let gates = circuit.gates();
    let shift = model.n_x;
    let mut prefix: Option<Vec<Statevector<T>>> = if cache {
        Some(
            batch
                .records
                .iter()
                .map(|r| input_state(model, &r.z))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    let mut loss = start;
    for (g, gate) in gates.iter().enumerate() {
        let (qubit, param, is_y) = match gate {
            Gate::Ry { qubit, param } => (*qubit, *param, true),
            Gate::Rz { qubit, param } => (*qubit, *param, false),
            _ => {
                if let Some(states) = prefix.as_mut() {
                    states
                        .par_iter_mut()
                        .for_each(|s| circuit::apply_gate(gate, s, &model.theta));
                }
                continue;
            }
        };
        let theta = &model.theta;
        let terms: Vec<(T, T, T)> = batch
            .records
            .par_iter()
            .enumerate()
            .map(|(k, r)| {
                let mut u = match &prefix {
                    Some(states) => states[k].clone(),
                    None => {
                        let mut s = input_state(model, &r.z)?;
                        circuit.apply_range(&mut s, theta, 0..g);
                        s
                    }
                };
                let mut v = u.clone();
                if is_y {
                    v.apply_minus_i_y(qubit);
                } else {
                    v.apply_minus_i_z(qubit);
                }
                circuit.apply_range(&mut u, theta, g + 1..gates.len());
                circuit.apply_range(&mut v, theta, g + 1..gates.len());
                let (mut a, mut b, mut d) = (T::zero(), T::zero(), T::zero());
                let lo = r.class << shift;
                for i in lo..lo + (1usize << shift) {
                    let (x, y) = (u.amplitudes()[i], v.amplitudes()[i]);
                    a += x.norm_sqr();
                    b += y.norm_sqr();
                    d += x.re * y.re + x.im * y.im;
                }
                Ok((r.weight * a, r.weight * b, r.weight * d))
            })
            .collect::<Result<_>>()?;
        let (mut alpha, mut beta, mut delta) = (T::zero(), T::zero(), T::zero());
        for (a, b, d) in terms {
            alpha += a;
            beta += b;
            delta += d;
        }
        // loss(t) = a0 + b0 cos t + c0 sin t
        let two = T::of(2.0);
        let a0 = T::one() - (alpha + beta) / two;
        let b0 = -(alpha - beta) / two;
        let c0 = -delta;
        let t0 = model.theta[param];
        let current = a0 + b0 * t0.cos() + c0 * t0.sin();
        let amplitude = (b0 * b0 + c0 * c0).sqrt();
        if amplitude >= T::of(1e-10) && a0 - amplitude <= current {
            model.theta[param] = wrap_angle((-c0).atan2(-b0));
            loss = a0 - amplitude;
        } else {
            loss = current;
        }
        if let Some(states) = prefix.as_mut() {
            states
                .par_iter_mut()
                .for_each(|s| circuit::apply_gate(gate, s, &model.theta));
        }
    }
    Ok(loss)
}

/// How trainable parameters start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ParamInit {
    Zero,
    /// Independent uniform draws from `[-scale, scale)`.
    Uniform {
        scale: f64,
        seed: u64,
    },
}

impl<T: Real> QuantumModel<T> {
    pub fn initialize(&mut self, init: ParamInit) {
        match init {
            ParamInit::Zero => self.theta.iter_mut().for_each(|t| *t = T::zero()),
            ParamInit::Uniform { scale, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for t in &mut self.theta {
                    *t = T::of(rng.random_range(-scale..scale));
                }
            }
        }
    }
}

/// Result of [`train_with_restarts`].
#[derive(Debug, Clone)]
pub struct RestartOutcome<T> {
    pub model: QuantumModel<T>,
    /// Loss after each sweep of the kept run.
    pub history: Vec<T>,
    /// Index of the kept run.
    pub best_restart: usize,
    /// Final loss of every run.
    pub final_losses: Vec<T>,
}

/// Trains `restarts` copies of `template`, each from uniform angles in `[-pi, pi)`
/// seeded with `seed + r`, and keeps the run with the lowest final training loss
/// (earliest on ties). Stops early once a run's loss falls to `target_loss`.
pub fn train_with_restarts<T: Real>(
    template: &QuantumModel<T>,
    batch: &TrainingBatch<T>,
    sweeps: usize,
    restarts: usize,
    seed: u64,
    target_loss: T,
) -> Result<RestartOutcome<T>> {
    train_with_restarts_with(
        template,
        batch,
        sweeps,
        restarts,
        seed,
        target_loss,
        |_, _, _, _| {},
    )
}

/// As [`train_with_restarts`], calling `after_sweep(restart, sweep, loss, model)`.
pub fn train_with_restarts_with<T: Real, F>(
    template: &QuantumModel<T>,
    batch: &TrainingBatch<T>,
    sweeps: usize,
    restarts: usize,
    seed: u64,
    target_loss: T,
    mut after_sweep: F,
) -> Result<RestartOutcome<T>>
where
    F: FnMut(usize, usize, T, &QuantumModel<T>),
{
    if restarts == 0 {
        return Err(Error::InvalidArgument(
            "at least one restart is required".into(),
        ));
    }
    let mut best: Option<RestartOutcome<T>> = None;
    let mut final_losses = Vec::with_capacity(restarts);
    for r in 0..restarts {
        let mut model = template.clone();
        model.initialize(ParamInit::Uniform {
            scale: std::f64::consts::PI,
            seed: seed.wrapping_add(r as u64),
        });
        let history =
            train_sweeps_with(&mut model, batch, sweeps, |k, l, m| after_sweep(r, k, l, m))?;
        let last = *history.last().expect("at least one sweep");
        final_losses.push(last);
        if best
            .as_ref()
            .map_or(true, |b| last < *b.history.last().unwrap())
        {
            best = Some(RestartOutcome {
                model,
                history,
                best_restart: r,
                final_losses: Vec::new(),
            });
        }
        if last <= target_loss {
            break;
        }
    }
    let mut out = best.expect("at least one restart ran");
    out.final_losses = final_losses;
    Ok(out)
}

/// The basis permutation `|y>|z> -> |y xor C(z)>|z>` for `classes[z] = C(z)`.
pub fn exact_classifier_permutation(classes: &[usize], n_x: usize, n_y: usize) -> Result<Vec<u32>> {
    check_register(n_x, n_y, HARD_QUBIT_LIMIT)?;
    if classes.len() != 1usize << n_x {
        return Err(Error::InvalidArgument(format!(
            "classifier table has {} entries, expected {}",
            classes.len(),
            1usize << n_x
        )));
    }
    if let Some(&c) = classes.iter().find(|&&c| c >= 1usize << n_y) {
        return Err(Error::InvalidArgument(format!(
            "class {c} does not fit in {n_y} class qubits"
        )));
    }
    let dim = 1usize << (n_x + n_y);
    let mask = (1usize << n_x) - 1;
    Ok((0..dim)
        .map(|i| {
            let (y, z) = (i >> n_x, i & mask);
            (((y ^ classes[z]) << n_x) | z) as u32
        })
        .collect())
}

/// A parameter-free model whose circuit maps `|0>|z>` to `|C(z)>|z>`.
pub fn build_exact_classifier<T: Real>(
    classes: &[usize],
    n_x: usize,
    n_y: usize,
) -> Result<QuantumModel<T>> {
    build_exact_classifier_with_cap(classes, n_x, n_y, DEFAULT_QUBIT_CAP)
}

pub fn build_exact_classifier_with_cap<T: Real>(
    classes: &[usize],
    n_x: usize,
    n_y: usize,
    cap: usize,
) -> Result<QuantumModel<T>> {
    check_register(n_x, n_y, cap)?;
    let perm = exact_classifier_permutation(classes, n_x, n_y)?;
    let mut circuit = Circuit::new(n_x + n_y);
    circuit.permutation(perm)?;
    QuantumModel::from_circuit(n_x, n_y, circuit, Vec::new())
}

/// Most probable class for `z`; the smallest class wins ties.
pub fn predict<T: Real>(model: &QuantumModel<T>, z: &Bitstring) -> Result<usize> {
    let p = model.class_distribution(z)?;
    let mut best = 0;
    for (k, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = k;
        }
    }
    Ok(best)
}

/// Fraction of the samples behind `table` that the model labels correctly, i.e. the
/// accuracy on the full training set. Bounded by `1 - train collision incidence`.
pub fn table_accuracy<T: Real>(model: &QuantumModel<T>, table: &BitstringTable) -> Result<f64> {
    if table.total() == 0 {
        return Err(Error::EmptyTable);
    }
    let entries: Vec<(&Bitstring, &[u64])> = table.iter().collect();
    let correct: Vec<u64> = entries
        .par_iter()
        .map(|(z, counts)| Ok(counts.get(predict(model, z)?).copied().unwrap_or(0)))
        .collect::<Result<_>>()?;
    Ok(correct.iter().sum::<u64>() as f64 / table.total() as f64)
}

/// Fraction of `(z, label)` samples predicted correctly.
pub fn sample_accuracy<'a, T: Real>(
    model: &QuantumModel<T>,
    samples: impl IntoIterator<Item = (&'a Bitstring, usize)>,
) -> Result<f64> {
    let mut cache: HashMap<&Bitstring, usize> = HashMap::new();
    let (mut total, mut correct) = (0u64, 0u64);
    for (z, label) in samples {
        let pred = match cache.get(z) {
            Some(&p) => p,
            None => {
                let p = predict(model, z)?;
                cache.insert(z, p);
                p
            }
        };
        total += 1;
        correct += u64::from(pred == label);
    }
    if total == 0 {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// Weighted fraction of batch records predicted as their target.
pub fn batch_accuracy<T: Real>(model: &QuantumModel<T>, batch: &TrainingBatch<T>) -> Result<f64> {
    check_batch(model, batch)?;
    let hits: Vec<f64> = batch
        .records
        .par_iter()
        .map(|r| {
            Ok(if predict(model, &r.z)? == r.class {
                r.weight.as_f64()
            } else {
                0.0
            })
        })
        .collect::<Result<_>>()?;
    Ok(hits.iter().sum())
}
