//! Noiseless and noisy execution: statevector simulation, Pauli-noise
//! trajectory sampling, a density-matrix oracle and TREX-mitigated estimation.

mod engine;
mod estimate;
mod noise;
mod oracle;
mod sampler;

use crate::circuits::{Circuit, Gate};
use crate::propagators::{SiteExpectations, StateVector};
use crate::{Error, Result, C64};

pub use engine::{apply_1q, apply_2q, block_kind, BlockKind, FusedOp, Fuser};
pub use estimate::{calibrate_trex, estimate_observables, mitigated_z, ObservableEstimates, TrexCalibration};
pub use noise::{bundled_presets, noise_preset, presets_version, NoisePreset, PRESET_ALIASES};
pub use oracle::{density_matrix_oracle, pauli_transfer_matrix, OracleResult, ORACLE_MAX_QUBITS};
pub use sampler::{
    run_time_series, rzz, sample_noisy, sample_noisy_with, SamplerOptions, ShotBatch, TimeSeriesRequest,
};

/// Default qubit limit of the statevector backend.
pub const STATEVECTOR_MAX_QUBITS: usize = 24;

fn fuse_unitary<'a>(n: usize, gates: impl Iterator<Item = &'a Gate>) -> Vec<FusedOp> {
    let mut f = Fuser::new(n);
    for g in gates {
        match *g {
            Gate::Cz { a, b } => f.push_2q(a, b, &crate::circuits::cz4()),
            Gate::Measure { .. } => {}
            _ => f.push_1q(g.qubits().0, &g.matrix2().expect("single-qubit unitary")),
        }
    }
    f.finish()
}

fn check_qubits(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::SizeLimit { what: "statevector qubits", requested: n, limit });
    }
    Ok(())
}

/// Exact amplitudes after every unitary gate; measurements are skipped, so
/// the result is the state right before readout.
pub fn run_statevector(circuit: &Circuit) -> Result<StateVector> {
    run_statevector_with(circuit, STATEVECTOR_MAX_QUBITS)
}

pub fn run_statevector_with(circuit: &Circuit, max_qubits: usize) -> Result<StateVector> {
    let n = circuit.n_qubits;
    check_qubits(n, max_qubits)?;
    let mut state = StateVector::zero_state(n);
    for op in fuse_unitary(n, circuit.gates()) {
        op.apply(&mut state.amplitudes, n);
    }
    Ok(state)
}

/// Noiseless expectations at every barrier of a time-series circuit.
pub fn exact_time_series(circuit: &Circuit) -> Result<Vec<SiteExpectations>> {
    let n = circuit.n_qubits;
    check_qubits(n, STATEVECTOR_MAX_QUBITS)?;
    let mut state = StateVector::zero_state(n);
    let mut out = Vec::with_capacity(circuit.barriers.len());
    let mut start = 0;
    for &b in &circuit.barriers {
        for op in fuse_unitary(n, circuit.moment_range(start, b).iter().flatten()) {
            op.apply(&mut state.amplitudes, n);
        }
        start = b;
        out.push(state.site_expectations());
    }
    Ok(out)
}

/// Born probabilities of a state indexed by amplitude index.
pub fn born_probabilities(state: &StateVector) -> Vec<f64> {
    state.amplitudes.iter().map(C64::norm_sqr).collect()
}
