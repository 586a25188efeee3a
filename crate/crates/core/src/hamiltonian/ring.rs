//! Term-wise nearest-neighbor ring operator acting on 2^N amplitudes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::linalg::{CMat, ZERO};
use crate::spin_algebra::BondCouplings;
use crate::C64;

/// One two-site term j_perp (sx sx + sy sy) + j_z sz sz + j_cross (sx sy − sy sx).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondTerm {
    pub i: usize,
    pub j: usize,
    pub j_perp: f64,
    pub j_z: f64,
    pub j_cross: f64,
}

/// H = Σ bond terms + Σ_i h_i sz_i + constant, never stored as a matrix.
///
/// Site k is bit (N−1−k) of the basis index; bit value 0 is spin up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingOperator {
    pub n_sites: usize,
    pub terms: Vec<BondTerm>,
    pub fields: Vec<f64>,
    pub constant: f64,
}

impl RingOperator {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites, terms: Vec::new(), fields: vec![0.0; n_sites], constant: 0.0 }
    }

    pub fn from_bonds(n_sites: usize, bonds: &[(usize, usize, BondCouplings)], fields: &[f64]) -> Self {
        let terms = bonds
            .iter()
            .map(|&(i, j, b)| BondTerm { i, j, j_perp: b.j_perp, j_z: b.j_z, j_cross: b.j_cross })
            .collect();
        Self { n_sites, terms, fields: fields.to_vec(), constant: 0.0 }
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    #[inline]
    pub fn bit(&self, site: usize) -> usize {
        self.n_sites - 1 - site
    }

    /// ⟨x|H|x⟩.
    #[inline]
    pub fn diagonal_element(&self, x: usize) -> f64 {
        let sz = |site: usize| if (x >> self.bit(site)) & 1 == 0 { 0.5 } else { -0.5 };
        let mut e = self.constant;
        for t in &self.terms {
            e += t.j_z * sz(t.i) * sz(t.j);
        }
        for (k, h) in self.fields.iter().enumerate() {
            e += h * sz(k);
        }
        e
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|x| self.diagonal_element(x)).collect()
    }

    /// Off-diagonal hops: (mask, coefficient when bit_i = 0 & bit_j = 1,
    /// coefficient when bit_i = 1 & bit_j = 0) for each term.
    fn hops(&self) -> Vec<(usize, usize, C64, C64)> {
        self.terms
            .iter()
            .filter(|t| t.j_perp != 0.0 || t.j_cross != 0.0)
            .map(|t| {
                let bi = 1usize << self.bit(t.i);
                let bj = 1usize << self.bit(t.j);
                // s+_i s-_j carries (j_perp + i j_cross)/2 and moves the flip from i to j.
                let raise_i = C64::new(0.5 * t.j_perp, 0.5 * t.j_cross);
                (bi | bj, bi, raise_i, raise_i.conj())
            })
            .collect()
    }

    /// y = H x.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        let diag = self.diagonal();
        self.apply_with_diagonal(&diag, x, y);
    }

    /// y = H x with a precomputed diagonal.
    pub fn apply_with_diagonal(&self, diag: &[f64], x: &[C64], y: &mut [C64]) {
        let hops = self.hops();
        for (idx, out) in y.iter_mut().enumerate() {
            let mut acc = x[idx] * diag[idx];
            for &(mask, bi, up_i, down_i) in &hops {
                let m = idx & mask;
                if m != 0 && m != mask {
                    // Target has bit_i = 0 (site i up): reached by s+_i s-_j.
                    let coef = if idx & bi == 0 { up_i } else { down_i };
                    acc += coef * x[idx ^ mask];
                }
            }
            *out = acc;
        }
    }

    /// ⟨ψ|H|ψ⟩ (real part).
    pub fn expectation(&self, psi: &[C64]) -> f64 {
        let mut y = vec![ZERO; psi.len()];
        self.apply(psi, &mut y);
        psi.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Matrix of H restricted to the given basis states, which must span an
    /// invariant subspace for the result to be meaningful.
    pub fn sector_matrix(&self, states: &[usize]) -> CMat {
        let pos: HashMap<usize, usize> = states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        let hops = self.hops();
        let n = states.len();
        let mut m = CMat::zeros(n, n);
        for (col, &x) in states.iter().enumerate() {
            m[(col, col)] += C64::new(self.diagonal_element(x), 0.0);
            for &(mask, bi, up_i, down_i) in &hops {
                let b = x & mask;
                if b != 0 && b != mask {
                    let y = x ^ mask;
                    let coef = if y & bi == 0 { up_i } else { down_i };
                    if let Some(&row) = pos.get(&y) {
                        m[(row, col)] += coef;
                    }
                }
            }
        }
        m
    }

    pub fn to_dense(&self) -> CMat {
        let states: Vec<usize> = (0..self.dim()).collect();
        self.sector_matrix(&states)
    }

    /// Basis states with exactly `n_down` sites flipped, ascending.
    pub fn sector_states(n_sites: usize, n_down: usize) -> Vec<usize> {
        (0..1usize << n_sites).filter(|x| x.count_ones() as usize == n_down).collect()
    }

    /// Single-flip states ordered by flipped site 0..N.
    pub fn single_flip_states(&self) -> Vec<usize> {
        (0..self.n_sites).map(|k| 1usize << self.bit(k)).collect()
    }

    /// Operator restricted to the listed terms (fields and constant dropped).
    pub fn subset(&self, keep: impl Fn(usize) -> bool) -> RingOperator {
        let terms = self.terms.iter().enumerate().filter(|(k, _)| keep(*k)).map(|(_, t)| *t).collect();
        RingOperator { n_sites: self.n_sites, terms, fields: vec![0.0; self.n_sites], constant: 0.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, c, frobenius};
    use crate::spin_algebra::spin_half;

    fn reference_dense(op: &RingOperator) -> CMat {
        let n = op.n_sites;
        let s = spin_half();
        let site = |k: usize, comp: usize| linalg::site_operator(&s[comp], k, n, 2);
        let mut h = linalg::identity(1 << n) * c(op.constant);
        for t in &op.terms {
            h += (site(t.i, 0) * site(t.j, 0) + site(t.i, 1) * site(t.j, 1)) * c(t.j_perp);
            h += site(t.i, 2) * site(t.j, 2) * c(t.j_z);
            h += (site(t.i, 0) * site(t.j, 1) - site(t.i, 1) * site(t.j, 0)) * c(t.j_cross);
        }
        for (k, f) in op.fields.iter().enumerate() {
            h += site(k, 2) * c(*f);
        }
        h
    }

    #[test]
    fn matches_kronecker_construction() {
        let mut op = RingOperator::new(4);
        op.terms = vec![
            BondTerm { i: 0, j: 1, j_perp: 0.7, j_z: -0.3, j_cross: 0.4 },
            BondTerm { i: 1, j: 2, j_perp: -1.1, j_z: 0.2, j_cross: -0.6 },
            BondTerm { i: 2, j: 3, j_perp: 0.5, j_z: 0.9, j_cross: 0.0 },
            BondTerm { i: 3, j: 0, j_perp: 0.1, j_z: -0.8, j_cross: 1.3 },
        ];
        op.fields = vec![0.1, -0.2, 0.3, 0.05];
        op.constant = 0.25;
        let diff = op.to_dense() - reference_dense(&op);
        assert!(frobenius(&diff) < 1e-13);
        let x: Vec<C64> = (0..16).map(|k| C64::new(k as f64 * 0.1, 1.0 - k as f64 * 0.05)).collect();
        let mut y = vec![ZERO; 16];
        op.apply(&x, &mut y);
        let yd = reference_dense(&op) * nalgebra::DVector::from_vec(x);
        for k in 0..16 {
            assert!((y[k] - yd[k]).norm() < 1e-13);
        }
    }
}
