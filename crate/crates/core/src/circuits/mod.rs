//! Quench preparation, Lie–Trotter compilation to single-qubit rotations and
//! CZ, Pauli twirling and readout-flip (TREX) instrumentation.

mod format;
mod gate;
mod kak;
mod trex;
mod trotter;
mod twirl;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use format::{parse_circuit, write_circuit};
pub use gate::{
    cz4, gate_from_matrix, hadamard, kron2, pauli2, rx, ry, rz, s_gate, u_gate, zyz_angles, Basis, Gate, Mat2,
    Mat4,
};
pub use kak::{canonical_gate, decompose_two_qubit, gates_unitary, weyl_coordinates, TwoQubitDecomposition, WEYL_TOL};
pub use trex::{attach_trex, attach_trex_mask, TrexRecord};
pub use trotter::{bond_gate_unitary, build_trotter_circuit, measurement_suffix, prepare_quench, step_stats, StepStats};
pub use twirl::{cz_conjugate_pauli, pauli_twirl};

/// Provenance and accounting attached to a circuit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitMetadata {
    pub q_label: Option<String>,
    pub n_trotter_steps: usize,
    pub tau: f64,
    pub twirl_seed: Option<u64>,
    pub trex: Option<TrexRecord>,
    /// Logical measurement basis realized by the basis-change suffix.
    pub measurement_basis: Option<Basis>,
    pub step_stats: Option<StepStats>,
}

/// One scheduling unit: a gate or a barrier that synchronizes all qubits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Op {
    Gate(Gate),
    Barrier,
}

/// Gates packed into moments; `barriers[k]` is the moment index at which the
/// k-th barrier sits (all earlier moments precede it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub moments: Vec<Vec<Gate>>,
    pub barriers: Vec<usize>,
    pub metadata: CircuitMetadata,
}

impl Circuit {
    pub fn empty(n_qubits: usize) -> Self {
        Self { n_qubits, moments: Vec::new(), barriers: Vec::new(), metadata: CircuitMetadata::default() }
    }

    /// Schedules `ops` as early as possible; barriers are respected.
    pub fn from_ops(n_qubits: usize, ops: &[Op], metadata: CircuitMetadata) -> Result<Self> {
        let mut moments: Vec<Vec<Gate>> = Vec::new();
        let mut barriers = Vec::new();
        let mut next_free = vec![0usize; n_qubits];
        let mut floor = 0usize;
        for op in ops {
            match op {
                Op::Barrier => {
                    floor = moments.len();
                    barriers.push(floor);
                    next_free.iter_mut().for_each(|x| *x = floor);
                }
                Op::Gate(g) => {
                    let (a, b) = g.qubits();
                    if a >= n_qubits || b.is_some_and(|b| b >= n_qubits || b == a) {
                        return Err(Error::InvalidArgument(format!("gate {g:?} on {n_qubits} qubits")));
                    }
                    let mut slot = next_free[a].max(floor);
                    if let Some(b) = b {
                        slot = slot.max(next_free[b]);
                    }
                    if slot == moments.len() {
                        moments.push(Vec::new());
                    }
                    moments[slot].push(*g);
                    next_free[a] = slot + 1;
                    if let Some(b) = b {
                        next_free[b] = slot + 1;
                    }
                }
            }
        }
        Ok(Self { n_qubits, moments, barriers, metadata })
    }

    /// Gates and barriers in execution order.
    pub fn ops(&self) -> Vec<Op> {
        let mut out = Vec::new();
        let mut bar = self.barriers.iter().peekable();
        for (k, m) in self.moments.iter().enumerate() {
            while bar.peek() == Some(&&k) {
                out.push(Op::Barrier);
                bar.next();
            }
            out.extend(m.iter().map(|g| Op::Gate(*g)));
        }
        out.extend(bar.map(|_| Op::Barrier));
        out
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.moments.iter().flatten()
    }

    pub fn depth(&self) -> usize {
        self.moments.len()
    }

    pub fn cz_count(&self) -> usize {
        self.gates().filter(|g| g.is_two_qubit()).count()
    }

    pub fn two_qubit_depth(&self) -> usize {
        self.moments.iter().filter(|m| m.iter().any(Gate::is_two_qubit)).count()
    }

    /// Moments [start, end) as a circuit slice.
    pub fn moment_range(&self, start: usize, end: usize) -> &[Vec<Gate>] {
        &self.moments[start..end]
    }

    pub fn has_terminal_measurements(&self) -> bool {
        (0..self.n_qubits).all(|q| {
            self.gates().filter(|g| g.touches(q)).last().is_some_and(Gate::is_measurement)
        })
    }

    /// Every moment touches each qubit at most once.
    pub fn check_moments(&self) -> bool {
        self.moments.iter().all(|m| {
            let mut seen = vec![false; self.n_qubits];
            m.iter().all(|g| {
                let (a, b) = g.qubits();
                let ok = !seen[a] && b.map_or(true, |b| !seen[b]);
                seen[a] = true;
                if let Some(b) = b {
                    seen[b] = true;
                }
                ok
            })
        })
    }

    /// Appends the ops of `other` after a barrier-free concatenation.
    pub fn concat(&self, other: &Circuit) -> Result<Circuit> {
        let mut ops = self.ops();
        ops.extend(other.ops());
        Circuit::from_ops(self.n_qubits, &ops, self.metadata.clone())
    }
}

/// Multiplies runs of adjacent single-qubit unitaries on each qubit into one
/// generic gate; X-flips, CZ, measurements and barriers end a run.
pub fn merge_single_qubit_gates(circuit: &Circuit) -> Result<Circuit> {
    let n = circuit.n_qubits;
    let mut pending: Vec<Option<Mat2>> = vec![None; n];
    let mut out: Vec<Op> = Vec::new();
    let flush = |q: usize, pending: &mut Vec<Option<Mat2>>, out: &mut Vec<Op>| {
        if let Some(m) = pending[q].take() {
            if let Some(g) = gate_from_matrix(q, &m) {
                out.push(Op::Gate(g));
            }
        }
    };
    for op in circuit.ops() {
        match op {
            Op::Barrier => {
                for q in 0..n {
                    flush(q, &mut pending, &mut out);
                }
                out.push(Op::Barrier);
            }
            Op::Gate(g) => {
                let mergeable = g.is_single_qubit_unitary() && !matches!(g, Gate::XFlip { .. });
                if mergeable {
                    let q = g.qubits().0;
                    let m = g.matrix2().expect("single-qubit unitary");
                    pending[q] = Some(match pending[q] {
                        Some(p) => m * p,
                        None => m,
                    });
                } else {
                    let (a, b) = g.qubits();
                    flush(a, &mut pending, &mut out);
                    if let Some(b) = b {
                        flush(b, &mut pending, &mut out);
                    }
                    out.push(Op::Gate(g));
                }
            }
        }
    }
    for q in 0..n {
        flush(q, &mut pending, &mut out);
    }
    Circuit::from_ops(n, &out, circuit.metadata.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asap_packing_and_barriers() {
        let ops = [
            Op::Gate(Gate::Rx { q: 0, theta: 0.1 }),
            Op::Gate(Gate::Rx { q: 1, theta: 0.1 }),
            Op::Gate(Gate::Cz { a: 0, b: 1 }),
            Op::Gate(Gate::Rz { q: 2, theta: 0.3 }),
            Op::Barrier,
            Op::Gate(Gate::Rz { q: 2, theta: 0.3 }),
        ];
        let c = Circuit::from_ops(3, &ops, CircuitMetadata::default()).unwrap();
        assert_eq!(c.depth(), 3);
        assert_eq!(c.barriers, vec![2]);
        assert_eq!(c.moments[0].len(), 3);
        assert!(c.check_moments());
        let again = Circuit::from_ops(3, &c.ops(), CircuitMetadata::default()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn merging_keeps_unitary() {
        let ops = [
            Op::Gate(Gate::Rx { q: 0, theta: 0.4 }),
            Op::Gate(Gate::Ry { q: 0, theta: -0.4 }),
            Op::Gate(Gate::Rz { q: 0, theta: 1.0 }),
            Op::Gate(Gate::Cz { a: 0, b: 1 }),
            Op::Gate(Gate::Rz { q: 0, theta: 0.0 }),
        ];
        let c = Circuit::from_ops(2, &ops, CircuitMetadata::default()).unwrap();
        let m = merge_single_qubit_gates(&c).unwrap();
        assert_eq!(m.gates().count(), 2);
    }
}
