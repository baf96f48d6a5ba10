use num_complex::Complex;

use crate::encoder::Bitstring;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest register the simulator will allocate regardless of configured caps.
pub const HARD_QUBIT_LIMIT: usize = 30;

/// Amplitudes of an `n`-qubit register. Qubit `q` is bit `q` of the basis index, so
/// the highest qubits are the most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector<T> {
    n_qubits: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> Statevector<T> {
    /// `|0...0>`.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits > HARD_QUBIT_LIMIT {
            return Err(Error::QubitCap {
                n_qubits,
                cap: HARD_QUBIT_LIMIT,
            });
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); dim];
        amps[index] = Complex::new(T::one(), T::zero());
        Ok(Self { n_qubits, amps })
    }

    /// Normalizes the given amplitudes.
    pub fn from_amplitudes(mut amps: Vec<Complex<T>>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes is not a power of two",
                amps.len()
            )));
        }
        let norm = amps
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |x, y| x + y)
            .sqrt();
        if !(norm > T::zero()) {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        for a in &mut amps {
            *a = *a / norm;
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps
            .iter()
            .map(|a| a.norm_sqr())
            .fold(T::zero(), |x, y| x + y)
    }

    fn check_qubit(&self, q: usize) {
        assert!(
            q < self.n_qubits,
            "qubit {q} out of range for {} qubits",
            self.n_qubits
        );
    }

    /// `exp(-i theta Y / 2)`.
    pub fn apply_ry(&mut self, q: usize, theta: T) {
        self.check_qubit(q);
        let half = theta / T::of(2.0);
        let (s, c) = (half.sin(), half.cos());
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | mask];
                self.amps[i] = a0 * c - a1 * s;
                self.amps[i | mask] = a0 * s + a1 * c;
            }
        }
    }

    /// `exp(-i theta Z / 2)`.
    pub fn apply_rz(&mut self, q: usize, theta: T) {
        self.check_qubit(q);
        let half = theta / T::of(2.0);
        let minus = Complex::new(half.cos(), -half.sin());
        let plus = Complex::new(half.cos(), half.sin());
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a = *a * if i & mask == 0 { minus } else { plus };
        }
    }

    /// `-i Y` on qubit `q`: the derivative direction of `Ry`.
    pub(crate) fn apply_minus_i_y(&mut self, q: usize) {
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let a0 = self.amps[i];
                self.amps[i] = -self.amps[i | mask];
                self.amps[i | mask] = a0;
            }
        }
    }

    /// `-i Z` on qubit `q`.
    pub(crate) fn apply_minus_i_z(&mut self, q: usize) {
        let mask = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a = if i & mask == 0 {
                Complex::new(a.im, -a.re)
            } else {
                Complex::new(-a.im, a.re)
            };
        }
    }

    pub fn apply_x(&mut self, q: usize) {
        self.check_qubit(q);
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                self.amps.swap(i, i | mask);
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        self.check_qubit(control);
        self.check_qubit(target);
        assert_ne!(control, target, "CNOT control and target coincide");
        let (cm, tm) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    /// Moves the amplitude of basis state `i` to `perm[i]`.
    pub fn apply_permutation(&mut self, perm: &[u32]) {
        assert_eq!(perm.len(), self.amps.len(), "permutation size");
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.amps.len()];
        for (i, &p) in perm.iter().enumerate() {
            out[p as usize] = self.amps[i];
        }
        self.amps = out;
    }
}

/// `|bits>` with the bitstring read as a binary number (leftmost character = top qubit).
pub fn prepare_basis_state<T: Real>(n_qubits: usize, bits: &Bitstring) -> Result<Statevector<T>> {
    if bits.width() != n_qubits {
        return Err(Error::WidthMismatch {
            expected: n_qubits,
            got: bits.width(),
        });
    }
    let index = bits.as_u64().ok_or(Error::QubitCap {
        n_qubits,
        cap: HARD_QUBIT_LIMIT,
    })?;
    Statevector::basis(n_qubits, index as usize)
}

/// Probability of each value of the top `n_class_qubits` qubits.
pub fn class_probabilities<T: Real>(state: &Statevector<T>, n_class_qubits: usize) -> Vec<T> {
    assert!(
        n_class_qubits <= state.n_qubits(),
        "class register larger than the state"
    );
    let shift = state.n_qubits() - n_class_qubits;
    let mut p = vec![T::zero(); 1 << n_class_qubits];
    for (i, a) in state.amplitudes().iter().enumerate() {
        p[i >> shift] += a.norm_sqr();
    }
    p
}
