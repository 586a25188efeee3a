//! Exact classical time evolution: Krylov (Lanczos) propagation of the
//! term-wise ring operator and a sector-blocked dense oracle.

mod dense;
pub mod krylov;

use serde::{Deserialize, Serialize};

use crate::hamiltonian::{EffectiveRingModel, Frame};
use crate::linalg::ZERO;
use crate::{Error, Result, C64};

pub use dense::{dense_evolve, DenseOptions};
pub use krylov::{krylov_evolve, KrylovOptions};

/// Amplitudes on N qubits; qubit k is bit (N−1−k) of the index, bit 0 = m = 3/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amplitudes: Vec<C64>,
}

/// Per-site expectation values of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteExpectations {
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub sz: Vec<f64>,
}

impl SiteExpectations {
    /// ⟨S^+_j⟩ = ⟨S^x_j⟩ + i⟨S^y_j⟩.
    pub fn s_plus(&self) -> Vec<C64> {
        self.sx.iter().zip(&self.sy).map(|(&x, &y)| C64::new(x, y)).collect()
    }
}

impl StateVector {
    /// |0…0⟩, the fully polarized state.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { n_qubits, amplitudes }
    }

    /// Product state from per-qubit amplitudes (⟨0|q⟩, ⟨1|q⟩).
    pub fn product(factors: &[[C64; 2]]) -> Self {
        let n = factors.len();
        let mut amplitudes = vec![C64::new(1.0, 0.0)];
        for f in factors {
            let mut next = Vec::with_capacity(amplitudes.len() * 2);
            for a in &amplitudes {
                next.push(a * f[0]);
                next.push(a * f[1]);
            }
            amplitudes = next;
        }
        Self { n_qubits: n, amplitudes }
    }

    /// RX(angle) applied to qubits 0..N/2 of |0…0⟩.
    pub fn quench(n_qubits: usize, angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        let rotated = [C64::new(c, 0.0), C64::new(0.0, -s)];
        let up = [C64::new(1.0, 0.0), ZERO];
        let factors: Vec<_> = (0..n_qubits).map(|k| if k < n_qubits / 2 { rotated } else { up }).collect();
        Self::product(&factors)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// ⟨S^x_j⟩, ⟨S^y_j⟩, ⟨S^z_j⟩ for every site.
    pub fn site_expectations(&self) -> SiteExpectations {
        let n = self.n_qubits;
        let mut sz = vec![0.0; n];
        let mut sp = vec![ZERO; n];
        for (x, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for k in 0..n {
                let b = 1usize << (n - 1 - k);
                if x & b == 0 {
                    sz[k] += 0.5 * p;
                } else {
                    sz[k] -= 0.5 * p;
                    // ⟨S^+⟩ = Σ conj(ψ(x with site up)) ψ(x).
                    sp[k] += self.amplitudes[x ^ b].conj() * a;
                }
            }
        }
        SiteExpectations { sx: sp.iter().map(|z| z.re).collect(), sy: sp.iter().map(|z| z.im).collect(), sz }
    }

    pub fn sz_total(&self) -> f64 {
        self.site_expectations().sz.iter().sum()
    }
}

/// Request for exact propagation of a ring model.
#[derive(Debug, Clone)]
pub struct EvolutionRequest<'a> {
    pub model: &'a EffectiveRingModel,
    pub frame: Frame,
    pub initial_state: StateVector,
    pub times: Vec<f64>,
}

impl<'a> EvolutionRequest<'a> {
    /// Uniform grid t_k = k τ, k = 0..=n_steps, centered frame.
    pub fn uniform(model: &'a EffectiveRingModel, initial_state: StateVector, tau: f64, n_steps: usize) -> Self {
        let times = (0..=n_steps).map(|k| k as f64 * tau).collect();
        Self { model, frame: Frame::Centered, initial_state, times }
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_state.n_qubits != self.model.n_sites {
            return Err(Error::InvalidArgument(format!(
                "state has {} qubits, model has {} sites",
                self.initial_state.n_qubits, self.model.n_sites
            )));
        }
        if self.times.first() != Some(&0.0) {
            return Err(Error::MissingInitialSample);
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("times must be strictly increasing".into()));
        }
        if (self.initial_state.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument("initial state is not normalized".into()));
        }
        Ok(())
    }
}

/// Per-time, per-site expectation values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableTable {
    pub times: Vec<f64>,
    /// Indexed [time][site].
    pub sx: Vec<Vec<f64>>,
    pub sy: Vec<Vec<f64>>,
    pub sz: Vec<Vec<f64>>,
    /// ⟨H⟩ at every sample (operator of the evolution frame, no offset).
    pub energy: Vec<f64>,
    /// Largest |‖ψ‖ − 1| seen along the evolution.
    pub max_norm_error: f64,
    pub wall_time_s: f64,
}

impl ObservableTable {
    pub fn new() -> Self {
        Self {
            times: Vec::new(),
            sx: Vec::new(),
            sy: Vec::new(),
            sz: Vec::new(),
            energy: Vec::new(),
            max_norm_error: 0.0,
            wall_time_s: 0.0,
        }
    }

    pub fn push(&mut self, t: f64, e: SiteExpectations, energy: f64) {
        self.times.push(t);
        self.sx.push(e.sx);
        self.sy.push(e.sy);
        self.sz.push(e.sz);
        self.energy.push(energy);
    }

    pub fn n_sites(&self) -> usize {
        self.sx.first().map_or(0, Vec::len)
    }

    /// ⟨S^+_j(t_k)⟩ as a [time][site] table.
    pub fn s_plus(&self) -> Vec<Vec<C64>> {
        self.sx
            .iter()
            .zip(&self.sy)
            .map(|(x, y)| x.iter().zip(y).map(|(&a, &b)| C64::new(a, b)).collect())
            .collect()
    }

    pub fn sz_total(&self) -> Vec<f64> {
        self.sz.iter().map(|row| row.iter().sum()).collect()
    }

    /// Largest absolute difference over all observables.
    pub fn max_abs_diff(&self, other: &ObservableTable) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in [(&self.sx, &other.sx), (&self.sy, &other.sy), (&self.sz, &other.sz)] {
            for (ra, rb) in a.iter().zip(b) {
                for (x, y) in ra.iter().zip(rb) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        worst
    }
}

impl Default for ObservableTable {
    fn default() -> Self {
        Self::new()
    }
}
