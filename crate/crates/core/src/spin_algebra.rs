//! Spin operators, the Clebsch–Gordan change of basis for three spin-1/2,
//! quartet projection, two-level truncation and bond-coupling extraction.
//!
//! Conventions: per-site levels are ordered by decreasing m, and site 0 is the
//! slowest-varying tensor factor. For spin-1/2 this means index bit 0 = ↑.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lattice::{SpinLabel, TwistedCoupling};
use crate::linalg::{self, c, CMat, ONE, ZERO};
use crate::{Error, Result, C64};

/// Entries below this magnitude are dropped when building sparse operators.
const DROP_TOL: f64 = 1e-15;

/// Sparse complex operator stored as sorted, de-duplicated triplets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseOperator {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
    pub hermitian: bool,
}

impl SparseOperator {
    /// Sums duplicates, drops zeros and sets the hermitian flag.
    pub fn from_triplets(dim: usize, mut entries: Vec<(usize, usize, C64)>) -> Self {
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for (r, col, v) in entries {
            assert!(r < dim && col < dim, "entry ({r},{col}) outside dimension {dim}");
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == col => last.2 += v,
                _ => merged.push((r, col, v)),
            }
        }
        merged.retain(|e| e.2.norm() > DROP_TOL);
        let mut op = Self { dim, entries: merged, hermitian: false };
        op.hermitian = op.hermiticity_error() <= 1e-12;
        op
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: Vec::new(), hermitian: true }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, entries: (0..dim).map(|i| (i, i, ONE)).collect(), hermitian: true }
    }

    pub fn from_dense(m: &CMat) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                if m[(r, col)].norm() > DROP_TOL {
                    entries.push((r, col, m[(r, col)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), entries)
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for &(r, col, v) in &self.entries {
            m[(r, col)] += v;
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, r: usize, col: usize) -> C64 {
        match self.entries.binary_search_by_key(&(r, col), |&(a, b, _)| (a, b)) {
            Ok(k) => self.entries[k].2,
            Err(_) => ZERO,
        }
    }

    /// Largest |A_rc − conj(A_cr)|.
    pub fn hermiticity_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(r, col, v)| (v - self.get(col, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![ZERO; self.dim];
        for &(r, col, v) in &self.entries {
            y[r] += v * x[col];
        }
        y
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, col, v)| (r, col, s * v)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut e = self.entries.clone();
        e.extend_from_slice(&other.entries);
        Self::from_triplets(self.dim, e)
    }

    /// Restriction to the listed basis states (in the given order).
    pub fn restrict(&self, basis: &[usize]) -> CMat {
        let mut pos = BTreeMap::new();
        for (k, &b) in basis.iter().enumerate() {
            pos.insert(b, k);
        }
        let mut m = CMat::zeros(basis.len(), basis.len());
        for &(r, col, v) in &self.entries {
            if let (Some(&i), Some(&j)) = (pos.get(&r), pos.get(&col)) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// Spin-1/2 matrices (sx, sy, sz) = σ/2.
pub fn spin_half() -> [CMat; 3] {
    [
        linalg::pauli_x() * c(0.5),
        linalg::pauli_y() * c(0.5),
        linalg::pauli_z() * c(0.5),
    ]
}

/// Spin-s matrices (sx, sy, sz) for 2s = `two_s`, levels ordered by decreasing m.
pub fn spin_matrices(two_s: usize) -> [CMat; 3] {
    let d = two_s + 1;
    let s = two_s as f64 / 2.0;
    let m_of = |k: usize| s - k as f64;
    let mut sp = CMat::zeros(d, d);
    for k in 1..d {
        let m = m_of(k);
        sp[(k - 1, k)] = c((s * (s + 1.0) - m * (m + 1.0)).sqrt());
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm) * c(0.5);
    let sy = (&sp - &sm) * C64::new(0.0, -0.5);
    let sz = CMat::from_diagonal(&nalgebra::DVector::from_fn(d, |k, _| c(m_of(k))));
    [sx, sy, sz]
}

fn factorial(n: i64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Clebsch–Gordan coefficient ⟨j1 m1; j2 m2 | j m⟩ with all arguments doubled.
pub fn clebsch_gordan(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    if m1 + m2 != m || j > j1 + j2 || j < (j1 - j2).abs() || (j1 + j2 + j) % 2 != 0 {
        return 0.0;
    }
    if m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    // Racah's closed form; every argument below is an integer once halved.
    let h = |x: i64| x / 2;
    let pre = ((j + 1) as f64
        * factorial(h(j1 + j2 - j))
        * factorial(h(j1 - j2 + j))
        * factorial(h(-j1 + j2 + j))
        / factorial(h(j1 + j2 + j) + 1))
        .sqrt();
    let norm = (factorial(h(j1 + m1))
        * factorial(h(j1 - m1))
        * factorial(h(j2 + m2))
        * factorial(h(j2 - m2))
        * factorial(h(j + m))
        * factorial(h(j - m)))
    .sqrt();
    let mut sum = 0.0;
    for k in 0..=h(j1 + j2 - j) {
        let d = [
            h(j1 + j2 - j) - k,
            h(j1 - m1) - k,
            h(j2 + m2) - k,
            h(j - j2 + m1) + k,
            h(j - j1 - m2) + k,
        ];
        if d.iter().any(|&x| x < 0) {
            continue;
        }
        let denom = factorial(k) * d.iter().map(|&x| factorial(x)).product::<f64>();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
    }
    pre * norm * sum
}

/// Change of basis from (spin-1/2)^⊗3 to the S = 3/2 quartet ⊕ two doublets.
#[derive(Debug, Clone)]
pub struct CgBasisChange {
    /// Row r is the coupled state ⟨r| expressed in the product basis.
    pub unitary: CMat,
    pub quartet: std::ops::Range<usize>,
    /// (2·S_ab, 2·S, 2·M) per row.
    pub labels: Vec<(i64, i64, i64)>,
}

/// Coupled basis |((a b) S_ab, c) S M⟩. Rows 0..4: quartet M = 3/2 … −3/2;
/// rows 4..6: doublet from S_ab = 1; rows 6..8: doublet from S_ab = 0.
pub fn cg_unitary() -> CgBasisChange {
    let labels: Vec<(i64, i64, i64)> = vec![
        (2, 3, 3),
        (2, 3, 1),
        (2, 3, -1),
        (2, 3, -3),
        (2, 1, 1),
        (2, 1, -1),
        (0, 1, 1),
        (0, 1, -1),
    ];
    // Doubled m of a spin-1/2 from its bit (0 = up).
    let m_of = |bit: usize| if bit == 0 { 1 } else { -1 };
    let mut u = CMat::zeros(8, 8);
    for (row, &(s_ab, s, m)) in labels.iter().enumerate() {
        for p in 0..8 {
            let (ma, mb, mc) = (m_of((p >> 2) & 1), m_of((p >> 1) & 1), m_of(p & 1));
            let amp = clebsch_gordan(1, ma, 1, mb, s_ab, ma + mb)
                * clebsch_gordan(s_ab, ma + mb, 1, mc, s, m);
            u[(row, p)] = c(amp);
        }
    }
    CgBasisChange { unitary: u, quartet: 0..4, labels }
}

fn log_base(dim: usize, base: usize) -> Result<u32> {
    let mut k = 0u32;
    let mut d = 1usize;
    while d < dim {
        d *= base;
        k += 1;
    }
    if d == dim && dim > 0 {
        Ok(k)
    } else {
        Err(Error::BadDimension { dim, base })
    }
}

/// P_Q U_CG^{⊗k} op U_CG^{†⊗k} P_Q for an operator on k centers of three spin-1/2.
pub fn project_quartet(op: &SparseOperator) -> Result<SparseOperator> {
    let k = log_base(op.dim, 8)? as usize;
    let cg = cg_unitary();
    // Every product state has a definite M, so it overlaps exactly one quartet level.
    let mut single = [(0usize, ZERO); 8];
    let mut has = [false; 8];
    for p in 0..8 {
        for r in cg.quartet.clone() {
            let v = cg.unitary[(r, p)];
            if v.norm() > DROP_TOL {
                single[p] = (r, v);
                has[p] = true;
            }
        }
    }
    let map = |idx: usize| -> Option<(usize, C64)> {
        let mut out = 0usize;
        let mut w = ONE;
        for s in 0..k {
            let p = (idx >> (3 * (k - 1 - s))) & 7;
            if !has[p] {
                return None;
            }
            out = out * 4 + single[p].0;
            w *= single[p].1;
        }
        Some((out, w))
    };
    let mut acc: Vec<(usize, usize, C64)> = Vec::new();
    for &(i, j, v) in &op.entries {
        if let (Some((r, wr)), Some((col, wc))) = (map(i), map(j)) {
            acc.push((r, col, wr * v * wc.conj()));
        }
    }
    Ok(SparseOperator::from_triplets(4usize.pow(k as u32), acc))
}

/// Keeps m ∈ {3/2, 1/2} per site: an operator on 4^k becomes one on 2^k.
pub fn truncate_two_level(op: &SparseOperator) -> Result<SparseOperator> {
    let k = log_base(op.dim, 4)? as usize;
    let map = |idx: usize| -> Option<usize> {
        let mut out = 0usize;
        for s in 0..k {
            let level = (idx >> (2 * (k - 1 - s))) & 3;
            if level > 1 {
                return None;
            }
            out = (out << 1) | level;
        }
        Some(out)
    };
    let entries = op
        .entries
        .iter()
        .filter_map(|&(i, j, v)| Some((map(i)?, map(j)?, v)))
        .collect();
    Ok(SparseOperator::from_triplets(1 << k, entries))
}

/// Couplings of one ring bond, in terms of spin-1/2 operators s = σ/2:
/// h = j_perp (sx sx + sy sy) + j_z sz sz + j_cross (sx sy − sy sx)
///   + h_left sz⊗1 + h_right 1⊗sz + e_offset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BondCouplings {
    pub j_perp: f64,
    pub j_z: f64,
    pub j_cross: f64,
    pub h_left: f64,
    pub h_right: f64,
    pub e_offset: f64,
}

impl BondCouplings {
    pub fn add(&self, o: &BondCouplings) -> BondCouplings {
        BondCouplings {
            j_perp: self.j_perp + o.j_perp,
            j_z: self.j_z + o.j_z,
            j_cross: self.j_cross + o.j_cross,
            h_left: self.h_left + o.h_left,
            h_right: self.h_right + o.h_right,
            e_offset: self.e_offset + o.e_offset,
        }
    }

    /// The 4×4 two-site operator these couplings describe.
    pub fn matrix(&self) -> CMat {
        let [sx, sy, sz] = spin_half();
        let id = linalg::identity(2);
        let k = linalg::kron;
        (k(&sx, &sx) + k(&sy, &sy)) * c(self.j_perp)
            + k(&sz, &sz) * c(self.j_z)
            + (k(&sx, &sy) - k(&sy, &sx)) * c(self.j_cross)
            + k(&sz, &id) * c(self.h_left)
            + k(&id, &sz) * c(self.h_right)
            + linalg::identity(4) * c(self.e_offset)
    }
}

/// Residual gate for [`extract_bond_couplings`].
pub const FIT_RESIDUAL_LIMIT: f64 = 1e-12;

/// Fits a two-qubit operator to the span of the effective bond terms.
pub fn fit_two_site(m: &CMat) -> Result<BondCouplings> {
    let x = linalg::pauli_x();
    let y = linalg::pauli_y();
    let z = linalg::pauli_z();
    let id = linalg::identity(2);
    let k = linalg::kron;
    let basis = [
        k(&x, &x) + k(&y, &y),
        k(&z, &z),
        k(&x, &y) - k(&y, &x),
        k(&z, &id),
        k(&id, &z),
        linalg::identity(4),
    ];
    // The basis is Hilbert–Schmidt orthogonal, so least squares is a projection.
    let coef: Vec<f64> = basis
        .iter()
        .map(|b| {
            let num = (b.adjoint() * m).trace();
            let den = (b.adjoint() * b).trace().re;
            num.re / den
        })
        .collect();
    let mut rebuilt = CMat::zeros(4, 4);
    for (b, &cf) in basis.iter().zip(&coef) {
        rebuilt += b * c(cf);
    }
    let residual = linalg::frobenius(&(m - rebuilt));
    if residual > FIT_RESIDUAL_LIMIT {
        return Err(Error::ResidualTooLarge { residual, limit: FIT_RESIDUAL_LIMIT });
    }
    // Pauli coefficients to spin-1/2 coefficients: σσ = 4 ss, σ = 2 s.
    Ok(BondCouplings {
        j_perp: 4.0 * coef[0],
        j_z: 4.0 * coef[1],
        j_cross: 4.0 * coef[2],
        h_left: 2.0 * coef[3],
        h_right: 2.0 * coef[4],
        e_offset: coef[5],
    })
}

/// Projects a 64×64 two-center operator to quartets, truncates to two levels
/// and fits the effective bond couplings.
pub fn extract_bond_couplings(dimer_op: &SparseOperator) -> Result<BondCouplings> {
    if dimer_op.dim != 64 {
        return Err(Error::InvalidArgument(format!(
            "dimer operator must be 64×64, got {}",
            dimer_op.dim
        )));
    }
    let q = project_quartet(dimer_op)?;
    let t = truncate_two_level(&q)?;
    fit_two_site(&t.to_dense())
}

/// Dense operator of constituent spin `spin` (0..3), component `comp`, on
/// `center` among `n_centers` centers of three spin-1/2.
pub fn constituent_spin(center: usize, spin: usize, comp: usize, n_centers: usize) -> CMat {
    let s = spin_half();
    linalg::site_operator(&s[comp], 3 * center + spin, 3 * n_centers, 2)
}

/// −Σ_αβ a_αβ S^α_{1,x} S^β_{2,x} on two centers (64×64), x = `label`.
pub fn dimer_bond_operator(twist: &TwistedCoupling, label: SpinLabel) -> SparseOperator {
    let x = label.index();
    let mut m = CMat::zeros(64, 64);
    for alpha in 0..3 {
        for beta in 0..3 {
            let a = twist.matrix[alpha][beta];
            if a != 0.0 {
                m -= constituent_spin(0, x, alpha, 2) * constituent_spin(1, x, beta, 2) * c(a);
            }
        }
    }
    SparseOperator::from_dense(&m)
}

/// On-site ferromagnetic triangle −A(S_a·S_b + S_b·S_c + S_c·S_a) on one center.
pub fn triangle_operator(a_onsite: f64) -> SparseOperator {
    let mut m = CMat::zeros(8, 8);
    for (p, q) in [(0, 1), (1, 2), (2, 0)] {
        for comp in 0..3 {
            m -= constituent_spin(0, p, comp, 1) * constituent_spin(0, q, comp, 1) * c(a_onsite);
        }
    }
    SparseOperator::from_dense(&m)
}
