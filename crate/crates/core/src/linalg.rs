//! Small dense linear-algebra helpers on complex matrices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::C64;

pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);
pub const C64_I: C64 = I;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Pauli matrix by index 0..4 = I, X, Y, Z.
pub fn pauli(k: usize) -> CMat {
    match k {
        0 => identity(2),
        1 => pauli_x(),
        2 => pauli_y(),
        3 => pauli_z(),
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// Kronecker product; `a` is the slower-varying factor.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_all(factors: &[CMat]) -> CMat {
    factors
        .iter()
        .fold(identity(1), |acc, f| kron(&acc, f))
}

/// `op` acting on `site` of `n_sites` sites with local dimension `d`.
pub fn site_operator(op: &CMat, site: usize, n_sites: usize, d: usize) -> CMat {
    assert_eq!(op.nrows(), d);
    let left = d.pow(site as u32);
    let right = d.pow((n_sites - site - 1) as u32);
    kron(&kron(&identity(left), op), &identity(right))
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest deviation of `m` from its conjugate transpose.
pub fn hermiticity_error(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry of `U†U − 1` in magnitude.
pub fn unitarity_error(u: &CMat) -> f64 {
    let p = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    eigh(m).0
}

/// exp(−i t H) for Hermitian `H` via its eigen-decomposition.
pub fn expm_hermitian(h: &CMat, t: f64) -> CMat {
    let (vals, vecs) = eigh(h);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (k, lam) in vals.iter().enumerate() {
        let ph = C64::from_polar(1.0, -t * lam);
        for r in 0..n {
            scaled[(r, k)] *= ph;
        }
    }
    scaled * vecs.adjoint()
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(m: &CMat) -> f64 {
    eigvalsh(m).iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Spectral norm of a general matrix.
pub fn spectral_norm(m: &CMat) -> f64 {
    hermitian_norm(&(m.adjoint() * m)).sqrt()
}

/// Global-phase-insensitive overlap |tr(A†B)| / n.
pub fn phase_fidelity(a: &CMat, b: &CMat) -> f64 {
    (a.adjoint() * b).trace().norm() / a.nrows() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paulis_square_to_identity() {
        for k in 0..4 {
            let p = pauli(k);
            assert!(frobenius(&(&p * &p - identity(2))) < 1e-15);
        }
    }

    #[test]
    fn expm_of_pauli_z() {
        let u = expm_hermitian(&pauli_z(), 0.3);
        assert!((u[(0, 0)] - C64::from_polar(1.0, -0.3)).norm() < 1e-14);
        assert!((u[(1, 1)] - C64::from_polar(1.0, 0.3)).norm() < 1e-14);
        assert!(unitarity_error(&u) < 1e-14);
    }

    #[test]
    fn site_operator_places_factor() {
        let z1 = site_operator(&pauli_z(), 1, 2, 2);
        let expect = kron(&identity(2), &pauli_z());
        assert!(frobenius(&(z1 - expect)) < 1e-15);
    }
}
