//! Exact density-matrix evolution under the same noise model as the sampler.

use nalgebra::DMatrix;

use crate::circuits::{cz4, kron2, pauli2, Circuit, Gate, Mat2, Mat4};
use crate::{Error, Result, C64};

use super::engine::{apply_1q, apply_2q, block_kind};
use super::noise::NoisePreset;
use super::sampler::{basis_rotation, rzz, split_terminal};

pub const ORACLE_MAX_QUBITS: usize = 6;

type CMat = DMatrix<C64>;

/// Distribution of recorded bit patterns (bit q = qubit q).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub n_qubits: usize,
    pub probabilities: Vec<f64>,
}

impl OracleResult {
    /// ⟨Π_{q∈mask} (−1)^{bit q}⟩.
    pub fn z_string(&self, mask: u64) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(b, p)| if (b as u64 & mask).count_ones() % 2 == 0 { *p } else { -*p })
            .sum()
    }

    pub fn z(&self, q: usize) -> f64 {
        self.z_string(1 << q)
    }
}

enum Op {
    One(usize, Mat2),
    Two(usize, usize, Mat4),
}

fn left_apply(rho: &mut CMat, n: usize, op: &Op) {
    let dim = rho.nrows();
    for col in rho.as_mut_slice().chunks_mut(dim) {
        match op {
            Op::One(q, m) => apply_1q(col, n, *q, m),
            Op::Two(a, b, m) => apply_2q(col, n, *a, *b, m, block_kind(m)),
        }
    }
}

/// ρ ← U ρ U† for any (not necessarily Hermitian) ρ.
fn conjugate(rho: &mut CMat, n: usize, op: &Op) {
    left_apply(rho, n, op);
    *rho = rho.adjoint();
    left_apply(rho, n, op);
    *rho = rho.adjoint();
}

/// Σ_k w_k P_k ρ P_k over single-qubit Paulis (index 0..4) with weights `w`.
fn pauli_mix_1q(rho: &mut CMat, n: usize, q: usize, w: [f64; 4]) {
    if w[0] == 1.0 {
        return;
    }
    let mut acc = &*rho * C64::new(w[0], 0.0);
    for (k, &wk) in w.iter().enumerate().skip(1) {
        if wk == 0.0 {
            continue;
        }
        let mut t = rho.clone();
        conjugate(&mut t, n, &Op::One(q, pauli2(k)));
        acc += t * C64::new(wk, 0.0);
    }
    *rho = acc;
}

fn depolarize_2q(rho: &mut CMat, n: usize, a: usize, b: usize, p: f64) {
    if p == 0.0 {
        return;
    }
    let mut acc = &*rho * C64::new(1.0 - p, 0.0);
    for k in 1..16 {
        let mut t = rho.clone();
        conjugate(&mut t, n, &Op::Two(a, b, kron2(&pauli2(k / 4), &pauli2(k % 4))));
        acc += t * C64::new(p / 15.0, 0.0);
    }
    *rho = acc;
}

fn relax(rho: &mut CMat, n: usize, q: usize, r: [f64; 3]) {
    if r != [0.0; 3] {
        pauli_mix_1q(rho, n, q, [1.0 - r[0] - r[1] - r[2], r[0], r[1], r[2]]);
    }
}

/// Applies the noisy channel of one gate.
fn gate_channel(rho: &mut CMat, n: usize, g: &Gate, noise: &NoisePreset) {
    match *g {
        Gate::Cz { a, b } => {
            conjugate(rho, n, &Op::Two(a, b, cz4()));
            if noise.cz_overrotation != 0.0 {
                conjugate(rho, n, &Op::Two(a, b, rzz(noise.cz_overrotation)));
            }
            depolarize_2q(rho, n, a, b, noise.p_2q());
            let r = noise.relaxation(noise.t_2q_ns);
            relax(rho, n, a, r);
            relax(rho, n, b, r);
        }
        Gate::Measure { .. } => {}
        _ => {
            let q = g.qubits().0;
            conjugate(rho, n, &Op::One(q, g.matrix2().expect("single-qubit unitary")));
            let p = noise.p_1q();
            pauli_mix_1q(rho, n, q, [1.0 - p, p / 3.0, p / 3.0, p / 3.0]);
            relax(rho, n, q, noise.relaxation(noise.t_1q_ns));
        }
    }
}

fn check_size(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::SizeLimit { what: "density-matrix qubits", requested: n, limit });
    }
    Ok(())
}

/// Exact distribution of recorded bits for a circuit with terminal
/// measurements, including readout confusion.
pub fn density_matrix_oracle(circuit: &Circuit, noise: &NoisePreset) -> Result<OracleResult> {
    let n = circuit.n_qubits;
    check_size(n, ORACLE_MAX_QUBITS)?;
    noise.validate()?;
    let split = split_terminal(circuit)?;
    let dim = 1usize << n;
    let mut rho = CMat::zeros(dim, dim);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    for g in &split.body {
        gate_channel(&mut rho, n, g, noise);
    }
    for (q, b) in split.measured.iter().enumerate() {
        if let Some(m) = b.and_then(basis_rotation) {
            conjugate(&mut rho, n, &Op::One(q, m));
        }
    }
    let mut probs = vec![0.0; dim];
    for x in 0..dim {
        probs[super::engine::index_to_bits(x, n) as usize] = rho[(x, x)].re;
    }
    for (q, b) in split.measured.iter().enumerate() {
        let bit = 1usize << q;
        if b.is_none() {
            // Unmeasured qubits are recorded as 0.
            for x in 0..dim {
                if x & bit != 0 {
                    probs[x & !bit] += probs[x];
                    probs[x] = 0.0;
                }
            }
            continue;
        }
        let (p01, p10) = (noise.p01(), noise.p10());
        for x in 0..dim {
            if x & bit == 0 {
                let (p0, p1) = (probs[x], probs[x | bit]);
                probs[x] = (1.0 - p01) * p0 + p10 * p1;
                probs[x | bit] = p01 * p0 + (1.0 - p10) * p1;
            }
        }
    }
    Ok(OracleResult { n_qubits: n, probabilities: probs })
}

/// Pauli transfer matrix R_ij = Tr(P_i E(P_j)) / 2^n of the noisy unitary
/// part of a circuit (measurements ignored). Pauli index j has digit k
/// (base 4) for qubit k, qubit 0 most significant.
pub fn pauli_transfer_matrix(circuit: &Circuit, noise: &NoisePreset) -> Result<DMatrix<f64>> {
    let n = circuit.n_qubits;
    check_size(n, 3)?;
    noise.validate()?;
    let paulis: Vec<CMat> = (0..1usize << (2 * n))
        .map(|j| {
            (0..n).fold(CMat::identity(1, 1), |acc, q| {
                let k = j >> (2 * (n - 1 - q)) & 3;
                let p = pauli2(k);
                acc.kronecker(&CMat::from_fn(2, 2, |r, c| p[(r, c)]))
            })
        })
        .collect();
    let d = (1usize << n) as f64;
    let mut r = DMatrix::<f64>::zeros(paulis.len(), paulis.len());
    for (j, pj) in paulis.iter().enumerate() {
        let mut e = pj.clone();
        for g in circuit.gates() {
            gate_channel(&mut e, n, g, noise);
        }
        for (i, pi) in paulis.iter().enumerate() {
            r[(i, j)] = (pi * &e).trace().re / d;
        }
    }
    Ok(r)
}
