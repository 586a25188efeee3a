//! Quench fragment, closed-form bond gates and the Lie–Trotter circuit.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::hamiltonian::EffectiveRingModel;
use crate::spin_algebra::BondCouplings;
use crate::{Error, Result, C64};

use super::gate::{Basis, Gate, Mat4};
use super::kak::{decompose_two_qubit, TwoQubitDecomposition};
use super::{merge_single_qubit_gates, Circuit, CircuitMetadata, Op};

/// Gate accounting of one Trotter step and of the whole circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub cz_per_step: usize,
    pub two_qubit_depth_per_step: usize,
    pub depth_per_step: usize,
    pub cz_count: usize,
    pub two_qubit_depth: usize,
}

/// RX(angle) on qubits 0..N/2 of |0…0⟩. Angle 0 gives an empty fragment.
pub fn prepare_quench(n_qubits: usize, angle: f64) -> Result<Circuit> {
    if n_qubits == 0 || n_qubits % 2 == 1 {
        return Err(Error::InvalidArgument(format!("quench needs an even qubit count, got {n_qubits}")));
    }
    let ops: Vec<Op> = if angle == 0.0 {
        Vec::new()
    } else {
        (0..n_qubits / 2).map(|q| Op::Gate(Gate::Rx { q, theta: angle })).collect()
    };
    Circuit::from_ops(n_qubits, &ops, CircuitMetadata::default())
}

/// exp(−iτh) of one bond, h = J⊥(sx sx + sy sy) + Jz sz sz + J×(sx sy − sy sx)
/// + h_L sz⊗1 + h_R 1⊗sz + offset. Basis |00⟩,|01⟩,|10⟩,|11⟩ with 0 = up.
pub fn bond_gate_unitary(bond: &BondCouplings, tau: f64) -> Mat4 {
    let e = bond.e_offset;
    let hs = 0.5 * (bond.h_left + bond.h_right);
    let hd = 0.5 * (bond.h_left - bond.h_right);
    let phase = |x: f64| C64::from_polar(1.0, -tau * x);
    let mut u = Mat4::zeros();
    u[(0, 0)] = phase(0.25 * bond.j_z + hs + e);
    u[(3, 3)] = phase(0.25 * bond.j_z - hs + e);
    // Middle block [[d1, w], [w*, d2]].
    let d1 = -0.25 * bond.j_z + hd + e;
    let d2 = -0.25 * bond.j_z - hd + e;
    let w = C64::new(0.5 * bond.j_perp, 0.5 * bond.j_cross);
    let m = 0.5 * (d1 + d2);
    let half = 0.5 * (d1 - d2);
    let r = (half * half + w.norm_sqr()).sqrt();
    let (cos, sinc) = if r == 0.0 { (1.0, tau) } else { ((tau * r).cos(), (tau * r).sin() / r) };
    let g = phase(m);
    let mi = C64::new(0.0, -sinc);
    u[(1, 1)] = g * (C64::new(cos, 0.0) + mi * half);
    u[(2, 2)] = g * (C64::new(cos, 0.0) - mi * half);
    u[(1, 2)] = g * mi * w;
    u[(2, 1)] = g * mi * w.conj();
    u
}

/// Basis change and Z readout for measuring every qubit in `basis`.
pub fn measurement_suffix(n_qubits: usize, basis: Basis) -> Vec<Op> {
    let mut ops = Vec::with_capacity(2 * n_qubits);
    for q in 0..n_qubits {
        match basis {
            Basis::X => ops.push(Op::Gate(Gate::Ry { q, theta: -FRAC_PI_2 })),
            Basis::Y => ops.push(Op::Gate(Gate::Rx { q, theta: FRAC_PI_2 })),
            Basis::Z => {}
        }
    }
    ops.extend((0..n_qubits).map(|q| Op::Gate(Gate::Measure { q, basis: Basis::Z })));
    ops
}

fn bond_key(b: &BondCouplings) -> [u64; 6] {
    [b.j_perp, b.j_z, b.j_cross, b.h_left, b.h_right, b.e_offset].map(f64::to_bits)
}

/// Quench, `n_steps` × [even bonds; odd bonds], then the measurement suffix.
/// A barrier follows the quench and every step, so barrier k closes the
/// prefix that prepares time k τ.
pub fn build_trotter_circuit(
    model: &EffectiveRingModel,
    tau: f64,
    n_steps: usize,
    quench: &Circuit,
    measure: Option<Basis>,
) -> Result<Circuit> {
    let n = model.n_sites;
    if quench.n_qubits != n {
        return Err(Error::InvalidArgument(format!("quench on {} qubits, model has {n} sites", quench.n_qubits)));
    }
    if n < 2 || n % 2 == 1 {
        return Err(Error::InvalidArgument(format!("ring needs an even site count, got {n}")));
    }
    let mut cache: HashMap<[u64; 6], TwoQubitDecomposition> = HashMap::new();
    let mut layer_ops: Vec<Op> = Vec::new();
    for parity in [0, 1] {
        for bond in (parity..n).step_by(2) {
            let b = model.bond_with_field_share(bond);
            let key = bond_key(&b);
            if !cache.contains_key(&key) {
                cache.insert(key, decompose_two_qubit(&bond_gate_unitary(&b, tau))?);
            }
            let (i, j) = model.bond_sites(bond);
            let map = |q: usize| if q == 0 { i } else { j };
            layer_ops.extend(cache[&key].gates.iter().map(|g| Op::Gate(g.relabel(map))));
        }
    }
    let mut ops = quench.ops();
    ops.push(Op::Barrier);
    for _ in 0..n_steps {
        ops.extend(layer_ops.iter().copied());
        ops.push(Op::Barrier);
    }
    if let Some(basis) = measure {
        ops.extend(measurement_suffix(n, basis));
    }
    let metadata = CircuitMetadata {
        q_label: Some(model.q.label_str()),
        n_trotter_steps: n_steps,
        tau,
        measurement_basis: measure,
        ..quench.metadata.clone()
    };
    let mut circuit = merge_single_qubit_gates(&Circuit::from_ops(n, &ops, metadata)?)?;
    circuit.metadata.step_stats = Some(step_stats(&circuit));
    Ok(circuit)
}

/// Gate accounting with steps delimited by barriers (first step between
/// barriers 0 and 1).
pub fn step_stats(c: &Circuit) -> StepStats {
    let (cz_per_step, two_qubit_depth_per_step, depth_per_step) = if c.barriers.len() >= 2 {
        let step = c.moment_range(c.barriers[0], c.barriers[1]);
        (
            step.iter().flatten().filter(|g| g.is_two_qubit()).count(),
            step.iter().filter(|m| m.iter().any(Gate::is_two_qubit)).count(),
            step.len(),
        )
    } else {
        (0, 0, 0)
    };
    StepStats {
        cz_per_step,
        two_qubit_depth_per_step,
        depth_per_step,
        cz_count: c.cz_count(),
        two_qubit_depth: c.two_qubit_depth(),
    }
}
