//! Native gates, 2×2/4×4 matrix helpers and ZYZ Euler angles.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

const Z0: C64 = C64::new(0.0, 0.0);
const O1: C64 = C64::new(1.0, 0.0);

/// Measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::X => "x",
            Basis::Y => "y",
            Basis::Z => "z",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Basis::X),
            "y" => Ok(Basis::Y),
            "z" => Ok(Basis::Z),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Gates of the native set. `U` is Rz(phi)·Ry(theta)·Rz(lambda).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Rx { q: usize, theta: f64 },
    Ry { q: usize, theta: f64 },
    Rz { q: usize, theta: f64 },
    U { q: usize, theta: f64, phi: f64, lambda: f64 },
    Cz { a: usize, b: usize },
    Measure { q: usize, basis: Basis },
    XFlip { q: usize },
}

impl Gate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Rx { q, .. }
            | Gate::Ry { q, .. }
            | Gate::Rz { q, .. }
            | Gate::U { q, .. }
            | Gate::Measure { q, .. }
            | Gate::XFlip { q } => (q, None),
            Gate::Cz { a, b } => (a, Some(b)),
        }
    }

    pub fn touches(&self, qubit: usize) -> bool {
        let (a, b) = self.qubits();
        a == qubit || b == Some(qubit)
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cz { .. })
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Gate::Measure { .. })
    }

    /// Unitary single-qubit gates (rotations, U and X-flips).
    pub fn is_single_qubit_unitary(&self) -> bool {
        matches!(self, Gate::Rx { .. } | Gate::Ry { .. } | Gate::Rz { .. } | Gate::U { .. } | Gate::XFlip { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Gate::Rx { .. } => "rx",
            Gate::Ry { .. } => "ry",
            Gate::Rz { .. } => "rz",
            Gate::U { .. } => "u",
            Gate::Cz { .. } => "cz",
            Gate::Measure { basis: Basis::X, .. } => "measure_x",
            Gate::Measure { basis: Basis::Y, .. } => "measure_y",
            Gate::Measure { basis: Basis::Z, .. } => "measure_z",
            Gate::XFlip { .. } => "xflip",
        }
    }

    /// 2×2 matrix of a single-qubit unitary gate.
    pub fn matrix2(&self) -> Option<Mat2> {
        match *self {
            Gate::Rx { theta, .. } => Some(rx(theta)),
            Gate::Ry { theta, .. } => Some(ry(theta)),
            Gate::Rz { theta, .. } => Some(rz(theta)),
            Gate::U { theta, phi, lambda, .. } => Some(u_gate(theta, phi, lambda)),
            Gate::XFlip { .. } => Some(pauli2(1)),
            _ => None,
        }
    }

    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::Rx { q, theta } => Gate::Rx { q: map(q), theta },
            Gate::Ry { q, theta } => Gate::Ry { q: map(q), theta },
            Gate::Rz { q, theta } => Gate::Rz { q: map(q), theta },
            Gate::U { q, theta, phi, lambda } => Gate::U { q: map(q), theta, phi, lambda },
            Gate::Cz { a, b } => Gate::Cz { a: map(a), b: map(b) },
            Gate::Measure { q, basis } => Gate::Measure { q: map(q), basis },
            Gate::XFlip { q } => Gate::XFlip { q: map(q) },
        }
    }
}

pub fn rx(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    Mat2::new(C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0))
}

pub fn ry(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    Mat2::new(C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0))
}

pub fn rz(theta: f64) -> Mat2 {
    Mat2::new(C64::from_polar(1.0, -0.5 * theta), Z0, Z0, C64::from_polar(1.0, 0.5 * theta))
}

pub fn u_gate(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    rz(phi) * ry(theta) * rz(lambda)
}

pub fn hadamard() -> Mat2 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Mat2::new(C64::new(r, 0.0), C64::new(r, 0.0), C64::new(r, 0.0), C64::new(-r, 0.0))
}

pub fn s_gate() -> Mat2 {
    Mat2::new(O1, Z0, Z0, C64::new(0.0, 1.0))
}

/// I, X, Y, Z for k = 0..4.
pub fn pauli2(k: usize) -> Mat2 {
    match k {
        0 => Mat2::identity(),
        1 => Mat2::new(Z0, O1, O1, Z0),
        2 => Mat2::new(Z0, C64::new(0.0, -1.0), C64::new(0.0, 1.0), Z0),
        3 => Mat2::new(O1, Z0, Z0, -O1),
        _ => panic!("Pauli index {k} out of range"),
    }
}

pub fn cz4() -> Mat4 {
    let mut m = Mat4::identity();
    m[(3, 3)] = -O1;
    m
}

/// a ⊗ b with `a` on the first (more significant) qubit.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    m
}

/// ZYZ angles (theta, phi, lambda) and global phase γ with
/// m = e^{iγ} Rz(phi) Ry(theta) Rz(lambda).
pub fn zyz_angles(m: &Mat2) -> (f64, f64, f64, f64) {
    let det = m.determinant();
    let gamma = 0.5 * det.arg();
    let su = m * C64::from_polar(1.0, -gamma);
    let (a, b) = (su[(0, 0)], su[(1, 0)]);
    let theta = 2.0 * b.norm().atan2(a.norm());
    // su00 = e^{−i(φ+λ)/2} cos, su10 = e^{i(φ−λ)/2} sin.
    let (phi, lambda) = if b.norm() < 1e-14 {
        (-2.0 * a.arg(), 0.0)
    } else if a.norm() < 1e-14 {
        (2.0 * b.arg(), 0.0)
    } else {
        let sum = -2.0 * a.arg();
        let diff = 2.0 * b.arg();
        (0.5 * (sum + diff), 0.5 * (sum - diff))
    };
    // Fix the ± ambiguity of the SU(2) normalization through the global phase.
    let rebuilt = u_gate(theta, phi, lambda);
    let overlap = (rebuilt.adjoint() * m).trace();
    (theta, phi, lambda, overlap.arg())
}

/// Distance of a 2×2 unitary from the identity up to global phase.
pub fn distance_from_identity(m: &Mat2) -> f64 {
    1.0 - 0.5 * m.trace().norm()
}

/// Generic single-qubit gate for `m`, or `None` when `m` is a global phase.
pub fn gate_from_matrix(q: usize, m: &Mat2) -> Option<Gate> {
    if distance_from_identity(m) < 1e-14 {
        return None;
    }
    let (theta, phi, lambda, _) = zyz_angles(m);
    Some(Gate::U { q, theta, phi, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phase_distance(a: &Mat2, b: &Mat2) -> f64 {
        1.0 - 0.5 * (a.adjoint() * b).trace().norm()
    }

    #[test]
    fn euler_roundtrip() {
        let cases = [
            rx(0.3) * ry(-1.2) * rz(2.0),
            hadamard(),
            s_gate(),
            pauli2(1),
            pauli2(2),
            rz(0.7),
            ry(std::f64::consts::PI),
        ];
        for m in cases {
            let (t, p, l, g) = zyz_angles(&m);
            let r = u_gate(t, p, l) * C64::from_polar(1.0, g);
            assert!((r - m).norm() < 1e-12, "{m}");
            assert!(phase_distance(&r, &m) < 1e-14);
        }
    }

    #[test]
    fn kron_matches_nalgebra() {
        let a = rx(0.4);
        let b = ry(1.1);
        assert!((kron2(&a, &b) - a.kronecker(&b)).norm() < 1e-15);
    }
}
