//! Exact propagation by eigen-decomposition of every fixed-magnetization block.

use std::time::Instant;

use crate::linalg::{self, CMat, ZERO};
use crate::{Error, Result, C64};

use super::{EvolutionRequest, ObservableTable, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseOptions {
    pub max_qubits: usize,
}

impl Default for DenseOptions {
    fn default() -> Self {
        Self { max_qubits: 12 }
    }
}

struct SectorEigen {
    states: Vec<usize>,
    values: Vec<f64>,
    vectors: CMat,
    /// V† ψ(0) restricted to the sector.
    coeffs: Vec<C64>,
}

pub fn dense_evolve(req: &EvolutionRequest<'_>, opts: DenseOptions) -> Result<ObservableTable> {
    req.validate()?;
    let n = req.model.n_sites;
    if n > opts.max_qubits {
        return Err(Error::SizeLimit { what: "dense qubits", requested: n, limit: opts.max_qubits });
    }
    let start = Instant::now();
    let op = req.model.ring_operator(req.frame);
    let psi0 = &req.initial_state.amplitudes;
    let mut sectors = Vec::new();
    for n_down in 0..=n {
        let states = crate::hamiltonian::RingOperator::sector_states(n, n_down);
        if states.iter().all(|&s| psi0[s].norm() == 0.0) {
            continue;
        }
        let (values, vectors) = linalg::eigh(&op.sector_matrix(&states));
        let coeffs = (0..states.len())
            .map(|c| states.iter().enumerate().map(|(r, &s)| vectors[(r, c)].conj() * psi0[s]).sum())
            .collect();
        sectors.push(SectorEigen { states, values, vectors, coeffs });
    }
    let mut table = ObservableTable::new();
    for &t in &req.times {
        let mut amps = vec![ZERO; 1 << n];
        let mut energy = 0.0;
        for s in &sectors {
            for (c, (&lam, &coef)) in s.values.iter().zip(&s.coeffs).enumerate() {
                let a = coef * C64::from_polar(1.0, -lam * t);
                energy += lam * a.norm_sqr();
                for (r, &idx) in s.states.iter().enumerate() {
                    amps[idx] += s.vectors[(r, c)] * a;
                }
            }
        }
        let state = StateVector { n_qubits: n, amplitudes: amps };
        table.max_norm_error = table.max_norm_error.max((state.norm() - 1.0).abs());
        table.push(t, state.site_expectations(), energy);
    }
    table.wall_time_s = start.elapsed().as_secs_f64();
    Ok(table)
}
