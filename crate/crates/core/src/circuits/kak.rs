//! Two-qubit KAK decomposition in the magic basis and synthesis with the
//! minimal number of CZ gates for the canonical class.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

use super::gate::{cz4, gate_from_matrix, hadamard, kron2, pauli2, rx, ry, rz, s_gate, Gate, Mat2, Mat4};

/// Weyl coordinates below this are treated as zero.
pub const WEYL_TOL: f64 = 1e-9;

/// Gates on qubits 0 (first, more significant) and 1, in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitDecomposition {
    pub cz_count: usize,
    /// Canonical coordinates (a, b, c) with π/4 ≥ a ≥ b ≥ |c|.
    pub weyl: [f64; 3],
    pub gates: Vec<Gate>,
    /// |tr(U† U_rebuilt)| / 4.
    pub fidelity: f64,
}

fn magic() -> Mat4 {
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    let i = C64::new(0.0, FRAC_1_SQRT_2);
    let z = C64::new(0.0, 0.0);
    Mat4::new(r, z, z, i, z, i, r, z, z, i, -r, z, r, z, z, -i)
}

/// Diagonals of XX, YY, ZZ in the magic basis.
fn magic_diagonals() -> [Vector4<f64>; 3] {
    let b = magic();
    [1, 2, 3].map(|k| {
        let p = b.adjoint() * kron2(&pauli2(k), &pauli2(k)) * b;
        Vector4::from_fn(|i, _| p[(i, i)].re)
    })
}

/// exp(i(a XX + b YY + c ZZ)).
pub fn canonical_gate(a: f64, b: f64, c: f64) -> Mat4 {
    let [dx, dy, dz] = magic_diagonals();
    let m = magic();
    let d = Mat4::from_diagonal(&Vector4::from_fn(|k, _| C64::from_polar(1.0, a * dx[k] + b * dy[k] + c * dz[k])));
    m * d * m.adjoint()
}

/// U = e^{ig} · left · Can(a, b, c) · right with local left/right.
struct Kak {
    coords: [f64; 3],
    left: Mat4,
    right: Mat4,
}

fn unitarity_error(u: &Mat4) -> f64 {
    (u.adjoint() * u - Mat4::identity()).norm()
}

fn kak(u: &Mat4) -> Result<Kak> {
    let err = unitarity_error(u);
    if !(err < 1e-8) {
        return Err(Error::NotUnitary(err));
    }
    let det = u.determinant();
    let un = u * C64::from_polar(1.0, -det.arg() / 4.0);
    let b = magic();
    let up = b.adjoint() * un * b;
    let m2 = up.transpose() * up;
    let re = m2.map(|z| z.re);
    let im = m2.map(|z| z.im);

    let mut found = None;
    for x in [1.0, 0.5377, 1.8339, -2.2588, 0.8622, 0.3188, -1.3077, -0.4336, 0.3426, 3.5784] {
        let eig = SymmetricEigen::new(re + im * x);
        let p = eig.eigenvectors;
        let pc = p.map(|v| C64::new(v, 0.0));
        let d = pc.transpose() * m2 * pc;
        let off: f64 = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| d[(i, j)].norm()).sum();
        if off < 1e-10 {
            found = Some((p, d));
            break;
        }
    }
    let (mut p, d) = found.ok_or_else(|| Error::NonConvergence("magic-basis diagonalization".into()))?;
    if p.determinant() < 0.0 {
        p.column_mut(0).neg_mut();
    }
    let pc = p.map(|v| C64::new(v, 0.0));
    let mut theta: Vector4<f64> = Vector4::from_fn(|k, _| 0.5 * d[(k, k)].arg());
    let k1 = |theta: &Vector4<f64>| up * pc * Mat4::from_diagonal(&theta.map(|t| C64::from_polar(1.0, -t)));
    let mut kp = k1(&theta);
    if kp.determinant().re < 0.0 {
        theta[0] += std::f64::consts::PI;
        kp = k1(&theta);
    }

    let [dx, dy, dz] = magic_diagonals();
    let mut sys = Matrix4::<f64>::zeros();
    for k in 0..4 {
        sys[(k, 0)] = dx[k];
        sys[(k, 1)] = dy[k];
        sys[(k, 2)] = dz[k];
        sys[(k, 3)] = 1.0;
    }
    let sol = sys.lu().solve(&theta).ok_or_else(|| Error::NonConvergence("Weyl coordinate solve".into()))?;

    let mut left = b * kp * b.adjoint();
    let right = b * pc.transpose() * b.adjoint();
    let mut coords = [sol[0], sol[1], sol[2]];
    // Can(x + kπ/2) = (i PP)^k Can(x): move the shifts into the left local.
    for (axis, x) in coords.iter_mut().enumerate() {
        let mut k = ((*x + FRAC_PI_4) / FRAC_PI_2).floor();
        let mut r = *x - k * FRAC_PI_2;
        if r <= -FRAC_PI_4 + WEYL_TOL {
            r += FRAC_PI_2;
            k -= 1.0;
        }
        *x = r;
        let kk = (k as i64).rem_euclid(4);
        if kk != 0 {
            let pp = kron2(&pauli2(axis + 1), &pauli2(axis + 1)) * C64::new(0.0, 1.0);
            let mut shift = Mat4::identity();
            for _ in 0..kk {
                shift *= pp;
            }
            left *= shift;
        }
    }
    Ok(Kak { coords, left, right })
}

/// Canonical coordinates π/4 ≥ a ≥ b ≥ |c| of the local class of `u`.
pub fn weyl_coordinates(u: &Mat4) -> Result<[f64; 3]> {
    Ok(chamber(kak(u)?.coords))
}

fn chamber(c: [f64; 3]) -> [f64; 3] {
    let mut abs = c.map(f64::abs);
    abs.sort_by(|x, y| y.total_cmp(x));
    let sign = c.iter().map(|x| x.signum()).product::<f64>();
    // At a = π/4 the sign of c is a gauge choice.
    if sign < 0.0 && abs[2] > WEYL_TOL && (abs[0] - FRAC_PI_4).abs() > WEYL_TOL {
        abs[2] = -abs[2];
    }
    abs
}

/// Splits a local 4×4 into A ⊗ B.
fn factor_local(k: &Mat4) -> Result<(Mat2, Mat2)> {
    let block = |i: usize, j: usize| Mat2::from_fn(|r, c| k[(2 * i + r, 2 * j + c)]);
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..2 {
        for j in 0..2 {
            let n = block(i, j).norm();
            if n > best {
                (bi, bj, best) = (i, j, n);
            }
        }
    }
    let bm = block(bi, bj);
    let nb = bm.norm_squared();
    let a = Mat2::from_fn(|i, j| (bm.adjoint() * block(i, j)).trace() / nb);
    // Rescale so both factors are unitary.
    let s = (a.determinant()).sqrt();
    let (a, bm) = (a / s, bm * s);
    let res = (kron2(&a, &bm) - k).norm();
    if res > 1e-8 {
        return Err(Error::NonConvergence(format!("local factorization residual {res:e}")));
    }
    Ok((a, bm))
}

#[derive(Clone, Copy)]
enum Piece {
    Local(Mat2, Mat2),
    Cz,
}

fn pieces_unitary(pieces: &[Piece]) -> Mat4 {
    pieces.iter().fold(Mat4::identity(), |acc, p| match p {
        Piece::Local(a, b) => kron2(a, b) * acc,
        Piece::Cz => cz4() * acc,
    })
}

/// Single-qubit Cliffords realizing every permutation of (X, Y, Z) up to signs.
fn clifford_candidates() -> Vec<Mat2> {
    let h = hadamard();
    let s = s_gate();
    vec![Mat2::identity(), h, s, rx(FRAC_PI_2), s * h, h * s]
}

/// π with W P_j W† = ±P_{π(j)}, for j = X, Y, Z.
fn clifford_permutation(w: &Mat2) -> [usize; 3] {
    [1, 2, 3].map(|j| {
        let img = w * pauli2(j) * w.adjoint();
        (1..=3)
            .find(|&k| (0.5 * (pauli2(k) * img).trace().norm() - 1.0).abs() < 1e-12)
            .expect("Clifford maps Paulis to Paulis")
            - 1
    })
}

/// Picks W with Can(v) = (W⊗W) Can(v') (W⊗W)† and `ok(v')`.
fn permute_into(v: [f64; 3], ok: impl Fn(&[f64; 3]) -> bool) -> (Mat2, [f64; 3]) {
    for w in clifford_candidates() {
        let p = clifford_permutation(&w);
        let vp = [v[p[0]], v[p[1]], v[p[2]]];
        if ok(&vp) {
            return (w, vp);
        }
    }
    unreachable!("all axis permutations are covered")
}

fn cx12() -> [Piece; 3] {
    let h = hadamard();
    let i = Mat2::identity();
    [Piece::Local(i, h), Piece::Cz, Piece::Local(i, h)]
}

fn cx21() -> [Piece; 3] {
    let h = hadamard();
    let i = Mat2::identity();
    [Piece::Local(h, i), Piece::Cz, Piece::Local(h, i)]
}

/// Time-ordered pieces equal to Can(v) up to a global phase.
fn canonical_pieces(v: [f64; 3], n_cz: usize) -> Vec<Piece> {
    let i2 = Mat2::identity();
    let mut out = Vec::new();
    match n_cz {
        0 => {}
        1 => {
            // exp(iπ/4 ZZ) ∝ (Rz(−π/2) ⊗ Rz(−π/2)) · CZ.
            let (w, _) = permute_into(v, |vp| (vp[2].abs() - FRAC_PI_4).abs() < WEYL_TOL);
            let wd = w.adjoint();
            out.push(Piece::Local(wd, wd));
            out.push(Piece::Cz);
            out.push(Piece::Local(rz(-FRAC_PI_2), rz(-FRAC_PI_2)));
            out.push(Piece::Local(w, w));
        }
        2 => {
            // Can(a, 0, c) = CX12 · (e^{iaX} ⊗ e^{icZ}) · CX12.
            let (w, vp) = permute_into(v, |vp| vp[1].abs() < WEYL_TOL);
            let wd = w.adjoint();
            out.push(Piece::Local(wd, wd));
            out.extend(cx12());
            out.push(Piece::Local(rx(-2.0 * vp[0]), rz(-2.0 * vp[2])));
            out.extend(cx12());
            out.push(Piece::Local(w, w));
        }
        _ => {
            let [a, b, c] = v;
            out.push(Piece::Local(i2, rz(-FRAC_PI_2)));
            out.extend(cx21());
            out.push(Piece::Local(rz(FRAC_PI_2 - 2.0 * c), ry(2.0 * a - FRAC_PI_2)));
            out.extend(cx12());
            out.push(Piece::Local(i2, ry(FRAC_PI_2 - 2.0 * b)));
            out.extend(cx21());
            out.push(Piece::Local(rz(FRAC_PI_2), i2));
        }
    }
    out
}

fn cz_class(v: &[f64; 3]) -> usize {
    let zeros = v.iter().filter(|x| x.abs() < WEYL_TOL).count();
    let quarter = v.iter().filter(|x| (x.abs() - FRAC_PI_4).abs() < WEYL_TOL).count();
    match (zeros, quarter) {
        (3, _) => 0,
        (2, 1) => 1,
        (z, _) if z >= 1 => 2,
        _ => 3,
    }
}

/// Compiles a 4×4 unitary into single-qubit gates and the minimal number of CZ.
pub fn decompose_two_qubit(u: &Mat4) -> Result<TwoQubitDecomposition> {
    let k = kak(u)?;
    let n_cz = cz_class(&k.coords);
    let (la, lb) = factor_local(&k.left)?;
    let (ra, rb) = factor_local(&k.right)?;
    let mut pieces = vec![Piece::Local(ra, rb)];
    pieces.extend(canonical_pieces(k.coords, n_cz));
    pieces.push(Piece::Local(la, lb));

    // Merge consecutive locals.
    let mut merged: Vec<Piece> = Vec::new();
    for p in pieces {
        match (merged.last_mut(), p) {
            (Some(Piece::Local(a0, b0)), Piece::Local(a, b)) => {
                *a0 = a * *a0;
                *b0 = b * *b0;
            }
            _ => merged.push(p),
        }
    }
    let rebuilt = pieces_unitary(&merged);
    let fidelity = (u.adjoint() * rebuilt).trace().norm() / 4.0;
    if fidelity < 1.0 - 1e-9 {
        return Err(Error::NonConvergence(format!("two-qubit synthesis fidelity {fidelity}")));
    }
    let mut gates = Vec::new();
    for p in &merged {
        match p {
            Piece::Local(a, b) => {
                gates.extend(gate_from_matrix(0, a));
                gates.extend(gate_from_matrix(1, b));
            }
            Piece::Cz => gates.push(Gate::Cz { a: 0, b: 1 }),
        }
    }
    Ok(TwoQubitDecomposition { cz_count: n_cz, weyl: chamber(k.coords), gates, fidelity })
}

/// Unitary of a two-qubit gate list on qubits 0 and 1.
pub fn gates_unitary(gates: &[Gate]) -> Mat4 {
    gates.iter().fold(Mat4::identity(), |acc, g| {
        let m = match *g {
            Gate::Cz { .. } => cz4(),
            _ => {
                let m = g.matrix2().expect("unitary gate");
                if g.qubits().0 == 0 {
                    kron2(&m, &Mat2::identity())
                } else {
                    kron2(&Mat2::identity(), &m)
                }
            }
        };
        m * acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phase_fid(a: &Mat4, b: &Mat4) -> f64 {
        (a.adjoint() * b).trace().norm() / 4.0
    }

    #[test]
    fn magic_diagonals_are_orthogonal_signs() {
        let [dx, dy, dz] = magic_diagonals();
        for d in [dx, dy, dz] {
            assert!(d.iter().all(|x| (x.abs() - 1.0).abs() < 1e-14));
            assert!(d.sum().abs() < 1e-14);
        }
        assert!(dx.dot(&dy).abs() < 1e-14 && dx.dot(&dz).abs() < 1e-14 && dy.dot(&dz).abs() < 1e-14);
    }

    #[test]
    fn templates_reproduce_canonical_gates() {
        for v in [
            [0.0, 0.0, 0.0],
            [FRAC_PI_4, 0.0, 0.0],
            [0.0, FRAC_PI_4, 0.0],
            [0.0, 0.0, FRAC_PI_4],
            [0.3, 0.0, -0.2],
            [0.0, 0.3, 0.1],
            [0.2, 0.1, 0.0],
            [0.3, 0.2, 0.1],
            [0.7, -0.4, 0.25],
        ] {
            let can = canonical_gate(v[0], v[1], v[2]);
            let d = decompose_two_qubit(&can).unwrap();
            assert!(d.fidelity > 1.0 - 1e-12, "{v:?}");
            assert!(phase_fid(&can, &gates_unitary(&d.gates)) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn counts_for_simple_gates() {
        assert_eq!(decompose_two_qubit(&Mat4::identity()).unwrap().cz_count, 0);
        assert_eq!(decompose_two_qubit(&cz4()).unwrap().cz_count, 1);
        let local = kron2(&rx(0.3), &ry(1.2));
        assert_eq!(decompose_two_qubit(&local).unwrap().cz_count, 0);
        assert_eq!(decompose_two_qubit(&canonical_gate(0.0, 0.0, 0.3)).unwrap().cz_count, 2);
        assert_eq!(decompose_two_qubit(&canonical_gate(0.2, 0.2, 0.1)).unwrap().cz_count, 3);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = Mat4::identity() * C64::new(1.1, 0.0);
        assert!(matches!(decompose_two_qubit(&m), Err(Error::NotUnitary(_))));
    }
}
