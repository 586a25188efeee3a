//! Random pre-measurement X flips for twirled readout-error extinction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::gate::Gate;
use super::{Circuit, Op};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrexRecord {
    /// Flip bit per qubit.
    pub flips: Vec<u8>,
    /// Readout symmetrization factor per qubit, in (0, 1]; 1 until calibrated.
    pub factors: Vec<f64>,
}

impl TrexRecord {
    pub fn flip_mask(&self) -> u64 {
        self.flips.iter().enumerate().fold(0, |m, (q, &f)| m | ((f as u64) << q))
    }
}

/// Draws one flip bit per qubit from `seed`.
pub fn attach_trex(circuit: &Circuit, seed: u64) -> Result<Circuit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flips: Vec<u8> = (0..circuit.n_qubits).map(|_| rng.random_range(0..2u8)).collect();
    attach_trex_mask(circuit, &flips)
}

/// Inserts an X flip right before the measurement of every flagged qubit.
pub fn attach_trex_mask(circuit: &Circuit, flips: &[u8]) -> Result<Circuit> {
    if flips.len() != circuit.n_qubits || flips.iter().any(|&f| f > 1) {
        return Err(Error::InvalidArgument("flip mask must hold one bit per qubit".into()));
    }
    if !circuit.has_terminal_measurements() {
        return Err(Error::InvalidArgument("TREX needs terminal measurements on every qubit".into()));
    }
    let mut ops = Vec::new();
    for op in circuit.ops() {
        if let Op::Gate(Gate::Measure { q, .. }) = op {
            if flips[q] == 1 {
                ops.push(Op::Gate(Gate::XFlip { q }));
            }
        }
        ops.push(op);
    }
    let mut metadata = circuit.metadata.clone();
    metadata.trex = Some(TrexRecord { flips: flips.to_vec(), factors: vec![1.0; circuit.n_qubits] });
    Circuit::from_ops(circuit.n_qubits, &ops, metadata)
}
