//! Pauli twirling of CZ gates.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Result;

use super::gate::Gate;
use super::{merge_single_qubit_gates, Circuit, Op};

/// Pauli index 0..4 (I, X, Y, Z) as (x, z) bits.
fn xz(p: usize) -> (bool, bool) {
    match p {
        0 => (false, false),
        1 => (true, false),
        2 => (true, true),
        3 => (false, true),
        _ => panic!("Pauli index {p} out of range"),
    }
}

fn from_xz(x: bool, z: bool) -> usize {
    match (x, z) {
        (false, false) => 0,
        (true, false) => 1,
        (true, true) => 2,
        (false, true) => 3,
    }
}

/// (P'_a, P'_b) with CZ (P_a ⊗ P_b) CZ = ±P'_a ⊗ P'_b.
pub fn cz_conjugate_pauli(pa: usize, pb: usize) -> (usize, usize) {
    let (xa, za) = xz(pa);
    let (xb, zb) = xz(pb);
    (from_xz(xa, za ^ xb), from_xz(xb, zb ^ xa))
}

fn pauli_gate(q: usize, p: usize) -> Option<Gate> {
    match p {
        1 => Some(Gate::Rx { q, theta: PI }),
        2 => Some(Gate::Ry { q, theta: PI }),
        3 => Some(Gate::Rz { q, theta: PI }),
        _ => None,
    }
}

/// Wraps every CZ in a random Pauli pair and its CZ-conjugate, then merges
/// single-qubit runs. The noiseless action is unchanged up to global phase.
pub fn pauli_twirl(circuit: &Circuit, seed: u64) -> Result<Circuit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ops = Vec::new();
    for op in circuit.ops() {
        match op {
            Op::Gate(Gate::Cz { a, b }) => {
                let pa = rng.random_range(0..4);
                let pb = rng.random_range(0..4);
                let (qa, qb) = cz_conjugate_pauli(pa, pb);
                ops.extend(pauli_gate(a, pa).map(Op::Gate));
                ops.extend(pauli_gate(b, pb).map(Op::Gate));
                ops.push(op);
                ops.extend(pauli_gate(a, qa).map(Op::Gate));
                ops.extend(pauli_gate(b, qb).map(Op::Gate));
            }
            other => ops.push(other),
        }
    }
    let mut metadata = circuit.metadata.clone();
    metadata.twirl_seed = Some(seed);
    let twirled = Circuit::from_ops(circuit.n_qubits, &ops, metadata)?;
    merge_single_qubit_gates(&twirled)
}

#[cfg(test)]
mod tests {
    use super::super::gate::{cz4, kron2, pauli2};
    use super::*;

    #[test]
    fn conjugation_table() {
        for pa in 0..4 {
            for pb in 0..4 {
                let (qa, qb) = cz_conjugate_pauli(pa, pb);
                let lhs = cz4() * kron2(&pauli2(pa), &pauli2(pb)) * cz4();
                let rhs = kron2(&pauli2(qa), &pauli2(qb));
                let ov = (lhs.adjoint() * rhs).trace().norm() / 4.0;
                assert!((ov - 1.0).abs() < 1e-14, "{pa}{pb}");
            }
        }
    }
}
