//! Commutator-based first-order Trotter error estimate
//! ε_LT = (T_max τ / 2) Σ_{l<m} ‖[H_l, H_m]‖ with T_max = n_steps·τ.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, C64_I};
use crate::propagators::krylov::lanczos_extremes;
use crate::C64;

use super::{EffectiveRingModel, Frame, RingOperator};

/// How the fragments H_l and the operator norm are chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormConvention {
    /// Fragments are the individual Pauli strings of H'; ‖[P_l, P_m]‖ = 2 for
    /// anticommuting pairs, so the sum is Σ 2|c_l c_m|.
    #[default]
    PauliTerms,
    /// Two fragments (even and odd bond layers), exact spectral norm of the
    /// commutator. Limited to N ≤ 14.
    LayerSpectral,
    /// Two fragments, bounded by Σ_b ‖[h_b, h_{b+1}]‖ over neighboring bonds.
    LocalBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrotterErrorEstimate {
    pub epsilon: f64,
    pub convention: NormConvention,
    pub commutator_sum: f64,
    pub tau: f64,
    pub n_steps: usize,
    pub t_max: f64,
}

/// Largest N for which the layer commutator is evaluated exactly.
pub const LAYER_SPECTRAL_MAX_SITES: usize = 14;

pub fn lie_trotter_error_estimate(
    model: &EffectiveRingModel,
    tau: f64,
    n_steps: usize,
    convention: NormConvention,
) -> TrotterErrorEstimate {
    let op = model.ring_operator(Frame::Centered);
    let convention = match convention {
        NormConvention::LayerSpectral if model.n_sites > LAYER_SPECTRAL_MAX_SITES => NormConvention::LocalBound,
        c => c,
    };
    let commutator_sum = match convention {
        NormConvention::PauliTerms => pauli_term_sum(&op),
        NormConvention::LayerSpectral => layer_spectral(&op),
        NormConvention::LocalBound => local_bound(&op),
    };
    let t_max = n_steps as f64 * tau;
    TrotterErrorEstimate {
        epsilon: 0.5 * t_max * tau * commutator_sum,
        convention,
        commutator_sum,
        tau,
        n_steps,
        t_max,
    }
}

/// Pauli strings as (x mask, z mask) with real coefficients.
fn pauli_terms(op: &RingOperator) -> BTreeMap<(u64, u64), f64> {
    let mut terms: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let mut push = |x: u64, z: u64, v: f64| {
        *terms.entry((x, z)).or_insert(0.0) += v;
    };
    for t in &op.terms {
        let (bi, bj) = (1u64 << t.i, 1u64 << t.j);
        // s s = σσ/4; XY = x on i, y on j where y = (x|z).
        push(bi | bj, 0, 0.25 * t.j_perp);
        push(bi | bj, bi | bj, 0.25 * t.j_perp);
        push(0, bi | bj, 0.25 * t.j_z);
        push(bi | bj, bj, 0.25 * t.j_cross);
        push(bi | bj, bi, -0.25 * t.j_cross);
    }
    for (k, h) in op.fields.iter().enumerate() {
        push(0, 1u64 << k, 0.5 * h);
    }
    terms.retain(|_, v| v.abs() > 1e-15);
    terms
}

fn pauli_term_sum(op: &RingOperator) -> f64 {
    let terms: Vec<_> = pauli_terms(op).into_iter().collect();
    let mut sum = 0.0;
    for a in 0..terms.len() {
        for b in a + 1..terms.len() {
            let ((xa, za), ca) = terms[a];
            let ((xb, zb), cb) = terms[b];
            if ((xa & zb) ^ (za & xb)).count_ones() % 2 == 1 {
                sum += 2.0 * (ca * cb).abs();
            }
        }
    }
    sum
}

fn layers(op: &RingOperator) -> (RingOperator, RingOperator) {
    let mut even = op.subset(|b| b % 2 == 0);
    even.fields = op.fields.clone();
    let odd = op.subset(|b| b % 2 == 1);
    (even, odd)
}

fn layer_spectral(op: &RingOperator) -> f64 {
    let (even, odd) = layers(op);
    let (de, dodd) = (even.diagonal(), odd.diagonal());
    let dim = op.dim();
    let mut t1 = vec![C64::new(0.0, 0.0); dim];
    let mut t2 = vec![C64::new(0.0, 0.0); dim];
    let mut t3 = vec![C64::new(0.0, 0.0); dim];
    // K = i[He, Ho] is Hermitian; its norm is the largest |eigenvalue|.
    let apply = |x: &[C64], y: &mut [C64]| {
        odd.apply_with_diagonal(&dodd, x, &mut t1);
        even.apply_with_diagonal(&de, &t1, &mut t2);
        even.apply_with_diagonal(&de, x, &mut t1);
        odd.apply_with_diagonal(&dodd, &t1, &mut t3);
        for k in 0..dim {
            y[k] = C64_I * (t2[k] - t3[k]);
        }
    };
    let (lo, hi) = lanczos_extremes(apply, dim, 300, 1e-10, 0x5eed);
    lo.abs().max(hi.abs())
}

fn local_bound(op: &RingOperator) -> f64 {
    let n = op.n_sites;
    let mut sum = 0.0;
    for b in 0..op.terms.len() {
        let next = (b + 1) % op.terms.len();
        if next == b {
            continue;
        }
        let (t1, t2) = (op.terms[b], op.terms[next]);
        let mut sites: Vec<usize> = vec![t1.i, t1.j, t2.i, t2.j];
        sites.sort_unstable();
        sites.dedup();
        let local = |s: usize| sites.iter().position(|&x| x == s).unwrap();
        let mut h1 = RingOperator::new(sites.len());
        h1.terms.push(super::BondTerm { i: local(t1.i), j: local(t1.j), ..t1 });
        let mut h2 = RingOperator::new(sites.len());
        h2.terms.push(super::BondTerm { i: local(t2.i), j: local(t2.j), ..t2 });
        // Field shares: each site's field split over its two bonds.
        for (h, t) in [(&mut h1, t1), (&mut h2, t2)] {
            h.fields[local(t.i)] += 0.5 * op.fields[t.i % n];
            h.fields[local(t.j)] += 0.5 * op.fields[t.j % n];
        }
        let comm = linalg::commutator(&h1.to_dense(), &h2.to_dense()) * C64_I;
        sum += linalg::hermitian_norm(&comm);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::BondTerm;

    fn ring(n: usize, jp: f64, jz: f64, jx: f64) -> RingOperator {
        let mut op = RingOperator::new(n);
        for b in 0..n {
            op.terms.push(BondTerm { i: b, j: (b + 1) % n, j_perp: jp, j_z: jz, j_cross: jx });
        }
        op
    }

    #[test]
    fn zz_only_commutes() {
        let op = ring(6, 0.0, 1.3, 0.0);
        assert_eq!(pauli_term_sum(&op), 0.0);
        assert!(layer_spectral(&op) < 1e-10);
        assert!(local_bound(&op) < 1e-12);
    }

    #[test]
    fn layer_norm_matches_dense() {
        let op = ring(6, -0.9, 0.4, 0.3);
        let (e, o) = layers(&op);
        let k = linalg::commutator(&e.to_dense(), &o.to_dense()) * C64_I;
        let exact = linalg::hermitian_norm(&k);
        assert!((layer_spectral(&op) - exact).abs() < 1e-8 * exact);
        assert!(local_bound(&op) >= exact - 1e-10);
    }

    #[test]
    fn pauli_sum_two_terms() {
        // One XX+YY bond next to one ZZ bond: XX and YY each anticommute with
        // the neighboring ZZ (one shared site) → 2·(2|jp/4 · jz/4|).
        let mut op = RingOperator::new(3);
        op.terms.push(BondTerm { i: 0, j: 1, j_perp: 1.0, j_z: 0.0, j_cross: 0.0 });
        op.terms.push(BondTerm { i: 1, j: 2, j_perp: 0.0, j_z: 2.0, j_cross: 0.0 });
        assert!((pauli_term_sum(&op) - 4.0 * 0.25 * 0.5).abs() < 1e-15);
    }
}
