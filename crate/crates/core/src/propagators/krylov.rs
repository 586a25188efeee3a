//! Lanczos-based propagation exp(−iHΔt)ψ with adaptive sub-stepping, and a
//! Lanczos extreme-eigenvalue routine.

use std::time::Instant;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hamiltonian::RingOperator;
use crate::linalg::ZERO;
use crate::{Error, Result, C64};

use super::{EvolutionRequest, ObservableTable, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub krylov_dim: usize,
    /// Local error bound per sub-step (state norm 1).
    pub tol: f64,
    pub max_qubits: usize,
    pub memory_budget_bytes: usize,
    /// Sub-steps allowed per sample interval before giving up.
    pub max_substeps: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { krylov_dim: 30, tol: 1e-9, max_qubits: 20, memory_budget_bytes: 3 << 30, max_substeps: 4096 }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Propagates states under one operator, reusing buffers between calls.
pub struct KrylovPropagator<'a> {
    op: &'a RingOperator,
    diag: Vec<f64>,
    basis: Vec<Vec<C64>>,
    work: Vec<C64>,
    opts: KrylovOptions,
    /// Total sub-steps taken so far.
    pub substeps: usize,
    /// Total operator applications so far.
    pub matvecs: usize,
}

impl<'a> KrylovPropagator<'a> {
    pub fn new(op: &'a RingOperator, opts: KrylovOptions) -> Result<Self> {
        if op.n_sites > opts.max_qubits {
            return Err(Error::SizeLimit { what: "Krylov qubits", requested: op.n_sites, limit: opts.max_qubits });
        }
        let dim = op.dim();
        let bytes = (opts.krylov_dim + 2) * dim * 16 + dim * 8;
        if bytes > opts.memory_budget_bytes {
            return Err(Error::MemoryBudget(format!(
                "{} bytes needed for N = {} with Krylov dimension {}, budget {}",
                bytes, op.n_sites, opts.krylov_dim, opts.memory_budget_bytes
            )));
        }
        Ok(Self {
            op,
            diag: op.diagonal(),
            basis: Vec::with_capacity(opts.krylov_dim),
            work: vec![ZERO; dim],
            opts,
            substeps: 0,
            matvecs: 0,
        })
    }

    pub fn apply(&mut self, x: &[C64], y: &mut [C64]) {
        self.matvecs += 1;
        self.op.apply_with_diagonal(&self.diag, x, y);
    }

    /// ⟨ψ|H|ψ⟩.
    pub fn energy(&mut self, psi: &[C64]) -> f64 {
        let mut y = std::mem::take(&mut self.work);
        self.apply(psi, &mut y);
        let e = dot(psi, &y).re;
        self.work = y;
        e
    }

    /// ψ ← exp(−iH dt) ψ.
    pub fn propagate(&mut self, psi: &mut [C64], dt: f64) -> Result<()> {
        let mut remaining = dt;
        let mut taken = 0usize;
        while remaining.abs() > 0.0 {
            let h = self.substep(psi, remaining)?;
            remaining -= h;
            if remaining.abs() < 1e-15 * dt.abs() {
                remaining = 0.0;
            }
            taken += 1;
            if taken > self.opts.max_substeps {
                return Err(Error::NonConvergence(format!(
                    "more than {} sub-steps for Δt = {dt}",
                    self.opts.max_substeps
                )));
            }
        }
        Ok(())
    }

    /// One Lanczos sub-step of at most `h_max`; returns the step taken.
    fn substep(&mut self, psi: &mut [C64], h_max: f64) -> Result<f64> {
        let beta0 = norm(psi);
        let m = self.opts.krylov_dim;
        self.basis.clear();
        self.basis.push(psi.iter().map(|x| x / beta0).collect());
        let mut alpha: Vec<f64> = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut happy = false;
        let mut w = std::mem::take(&mut self.work);
        for j in 0..m {
            let vj = std::mem::take(&mut self.basis[j]);
            self.apply(&vj, &mut w);
            let a = dot(&vj, &w).re;
            for (k, x) in w.iter_mut().enumerate() {
                *x -= a * vj[k];
            }
            if j > 0 {
                let b = beta[j - 1];
                let prev = &self.basis[j - 1];
                for (k, x) in w.iter_mut().enumerate() {
                    *x -= b * prev[k];
                }
            }
            self.basis[j] = vj;
            alpha.push(a);
            let b = norm(&w);
            beta.push(b);
            let scale = alpha.iter().map(|x| x.abs()).fold(1.0, f64::max);
            if b < 1e-13 * scale {
                happy = true;
                break;
            }
            if j + 1 < m {
                self.basis.push(w.iter().map(|x| x / b).collect());
            }
        }
        self.work = w;
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let coeffs = |h: f64| -> Vec<C64> {
            (0..k)
                .map(|r| {
                    (0..k)
                        .map(|c| {
                            let q0 = eig.eigenvectors[(0, c)];
                            C64::from_polar(eig.eigenvectors[(r, c)] * q0, -h * eig.eigenvalues[c])
                        })
                        .sum()
                })
                .collect()
        };
        let mut h = h_max;
        let mut y = coeffs(h);
        if !happy {
            let beta_last = beta[k - 1];
            let floor = h_max.abs() * 1e-8;
            loop {
                let err = beta_last * y[k - 1].norm();
                if err <= self.opts.tol {
                    break;
                }
                let shrink = (0.9 * (self.opts.tol / err).powf(1.0 / k as f64)).clamp(0.1, 0.9);
                h *= shrink;
                if h.abs() < floor {
                    return Err(Error::NonConvergence(format!("sub-step fell below {floor:e}")));
                }
                y = coeffs(h);
            }
        }
        for x in psi.iter_mut() {
            *x = ZERO;
        }
        for (j, v) in self.basis.iter().enumerate().take(k) {
            let c = beta0 * y[j];
            for (p, x) in psi.iter_mut().zip(v) {
                *p += c * x;
            }
        }
        self.substeps += 1;
        Ok(h)
    }
}

/// Samples observables of the request on its time grid.
pub fn krylov_evolve(req: &EvolutionRequest<'_>, opts: KrylovOptions) -> Result<ObservableTable> {
    req.validate()?;
    let start = Instant::now();
    let op = req.model.ring_operator(req.frame);
    let mut prop = KrylovPropagator::new(&op, opts)?;
    let mut psi = req.initial_state.amplitudes.clone();
    let mut table = ObservableTable::new();
    let mut t_prev = 0.0;
    for &t in &req.times {
        if t > t_prev {
            prop.propagate(&mut psi, t - t_prev)?;
            t_prev = t;
        }
        let state = StateVector { n_qubits: op.n_sites, amplitudes: psi };
        table.max_norm_error = table.max_norm_error.max((state.norm() - 1.0).abs());
        let exp = state.site_expectations();
        psi = state.amplitudes;
        let e = prop.energy(&psi);
        table.push(t, exp, e);
    }
    table.wall_time_s = start.elapsed().as_secs_f64();
    Ok(table)
}

/// Smallest and largest eigenvalue of a Hermitian operator given as a
/// matrix-vector product (Lanczos with full reorthogonalization).
pub fn lanczos_extremes<F>(mut apply: F, dim: usize, max_iter: usize, tol: f64, seed: u64) -> (f64, f64)
where
    F: FnMut(&[C64], &mut [C64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..dim).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut basis: Vec<Vec<C64>> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; dim];
    let mut last = (f64::NAN, f64::NAN);
    let iters = max_iter.min(dim);
    for j in 0..iters {
        apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let b = norm(&w);
        let extremes = tridiagonal_extremes(&alpha, &beta);
        let converged = (extremes.0 - last.0).abs() <= tol * extremes.0.abs().max(1.0)
            && (extremes.1 - last.1).abs() <= tol * extremes.1.abs().max(1.0);
        last = extremes;
        if b < 1e-12 || (converged && j >= 4) || j + 1 == iters {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    last
}

fn tridiagonal_extremes(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let ev = SymmetricEigen::new(t).eigenvalues;
    (ev.min(), ev.max())
}
