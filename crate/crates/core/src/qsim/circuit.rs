use std::sync::Arc;

use super::statevector::Statevector;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One circuit instruction. Rotations read their angle from the parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Ry {
        qubit: usize,
        param: usize,
    },
    Rz {
        qubit: usize,
        param: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    X {
        qubit: usize,
    },
    /// Basis permutation: state `i` goes to `perm[i]`.
    Permutation(Arc<[u32]>),
}

/// An ordered gate list over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            gates: Vec::new(),
            n_params: 0,
        }
    }

    /// `layers` repetitions of: `Ry` then `Rz` on every qubit, then CNOTs `q -> q+1`
    /// around the ring (omitted for a single qubit). Parameters are numbered by layer,
    /// then qubit, with `Ry` before `Rz`.
    pub fn hardware_efficient(n_qubits: usize, layers: usize) -> Self {
        let mut c = Self::new(n_qubits);
        for _ in 0..layers {
            for q in 0..n_qubits {
                c.ry(q);
                c.rz(q);
            }
            if n_qubits > 1 {
                for q in 0..n_qubits {
                    c.cnot(q, (q + 1) % n_qubits);
                }
            }
        }
        c
    }

    /// Appends a parameterized `Ry`; returns its parameter index.
    pub fn ry(&mut self, qubit: usize) -> usize {
        self.check(qubit);
        let param = self.next_param();
        self.gates.push(Gate::Ry { qubit, param });
        param
    }

    pub fn rz(&mut self, qubit: usize) -> usize {
        self.check(qubit);
        let param = self.next_param();
        self.gates.push(Gate::Rz { qubit, param });
        param
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.check(control);
        self.check(target);
        assert_ne!(control, target, "CNOT control and target coincide");
        self.gates.push(Gate::Cnot { control, target });
        self
    }

    pub fn x(&mut self, qubit: usize) -> &mut Self {
        self.check(qubit);
        self.gates.push(Gate::X { qubit });
        self
    }

    pub fn permutation(&mut self, perm: Vec<u32>) -> Result<&mut Self> {
        if perm.len() != 1usize << self.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "permutation has {} entries, register has {} states",
                perm.len(),
                1usize << self.n_qubits
            )));
        }
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            match seen.get_mut(p as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(Error::InvalidArgument("not a permutation".into())),
            }
        }
        self.gates.push(Gate::Permutation(perm.into()));
        Ok(self)
    }

    fn next_param(&mut self) -> usize {
        self.n_params += 1;
        self.n_params - 1
    }

    fn check(&self, q: usize) {
        assert!(
            q < self.n_qubits,
            "qubit {q} out of range for {} qubits",
            self.n_qubits
        );
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn apply<T: Real>(&self, state: &mut Statevector<T>, theta: &[T]) {
        assert_eq!(state.n_qubits(), self.n_qubits, "register size");
        assert_eq!(theta.len(), self.n_params, "parameter count");
        self.apply_range(state, theta, 0..self.gates.len());
    }

    pub(crate) fn apply_range<T: Real>(
        &self,
        state: &mut Statevector<T>,
        theta: &[T],
        range: std::ops::Range<usize>,
    ) {
        for g in &self.gates[range] {
            apply_gate(g, state, theta);
        }
    }
}

pub(crate) fn apply_gate<T: Real>(gate: &Gate, state: &mut Statevector<T>, theta: &[T]) {
    match gate {
        Gate::Ry { qubit, param } => state.apply_ry(*qubit, theta[*param]),
        Gate::Rz { qubit, param } => state.apply_rz(*qubit, theta[*param]),
        Gate::Cnot { control, target } => state.apply_cnot(*control, *target),
        Gate::X { qubit } => state.apply_x(*qubit),
        Gate::Permutation(p) => state.apply_permutation(p),
    }
}
