//! Statevector kernels and a gate fuser that folds single-qubit gates and
//! repeated two-qubit blocks on the same pair into one 4×4 pass.
//!
//! Qubit q is bit (n−1−q) of the amplitude index, as everywhere else.

use crate::circuits::{kron2, Mat2, Mat4};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[inline]
fn insert_zero(x: usize, p: usize) -> usize {
    ((x >> p) << (p + 1)) | (x & ((1 << p) - 1))
}

fn is_diagonal2(m: &Mat2) -> bool {
    m[(0, 1)] == ZERO && m[(1, 0)] == ZERO
}

pub fn apply_1q(amps: &mut [C64], n: usize, q: usize, m: &Mat2) {
    let s = 1usize << (n - 1 - q);
    let dim = amps.len();
    if is_diagonal2(m) {
        let (d0, d1) = (m[(0, 0)], m[(1, 1)]);
        for base in (0..dim).step_by(2 * s) {
            for a in &mut amps[base..base + s] {
                *a *= d0;
            }
            for a in &mut amps[base + s..base + 2 * s] {
                *a *= d1;
            }
        }
        return;
    }
    let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    for base in (0..dim).step_by(2 * s) {
        let (lo, hi) = amps[base..base + 2 * s].split_at_mut(s);
        for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
            let (a0, a1) = (*x, *y);
            *x = m00 * a0 + m01 * a1;
            *y = m10 * a0 + m11 * a1;
        }
    }
}

/// Structure of a 4×4 block, used to pick a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Diagonal,
    /// |00⟩ and |11⟩ only acquire phases; {|01⟩, |10⟩} mix.
    NumberConserving,
    Dense,
}

/// Entries below this magnitude count as structural zeros.
pub const STRUCTURE_TOL: f64 = 1e-14;

pub fn block_kind(m: &Mat4) -> BlockKind {
    let off = |i: usize, j: usize| m[(i, j)].norm() < STRUCTURE_TOL;
    let diag = (0..4).all(|i| (0..4).all(|j| i == j || off(i, j)));
    if diag {
        return BlockKind::Diagonal;
    }
    let nc = (0..4).all(|i| {
        (0..4).all(|j| i == j || ((i == 1 || i == 2) && (j == 1 || j == 2)) || off(i, j))
    });
    if nc {
        BlockKind::NumberConserving
    } else {
        BlockKind::Dense
    }
}

/// Applies `m` with qubit `a` as the more significant index.
pub fn apply_2q(amps: &mut [C64], n: usize, a: usize, b: usize, m: &Mat4, kind: BlockKind) {
    let pa = n - 1 - a;
    let pb = n - 1 - b;
    let (lo, hi) = if pa < pb { (pa, pb) } else { (pb, pa) };
    let (ba, bb) = (1usize << pa, 1usize << pb);
    let quarter = amps.len() >> 2;
    match kind {
        BlockKind::Diagonal => {
            let d = [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(3, 3)]];
            for i in 0..quarter {
                let i00 = insert_zero(insert_zero(i, lo), hi);
                amps[i00] *= d[0];
                amps[i00 | bb] *= d[1];
                amps[i00 | ba] *= d[2];
                amps[i00 | ba | bb] *= d[3];
            }
        }
        BlockKind::NumberConserving => {
            let (d0, d3) = (m[(0, 0)], m[(3, 3)]);
            let (m11, m12, m21, m22) = (m[(1, 1)], m[(1, 2)], m[(2, 1)], m[(2, 2)]);
            for i in 0..quarter {
                let i00 = insert_zero(insert_zero(i, lo), hi);
                let (i01, i10) = (i00 | bb, i00 | ba);
                amps[i00] *= d0;
                amps[i00 | ba | bb] *= d3;
                let (x1, x2) = (amps[i01], amps[i10]);
                amps[i01] = m11 * x1 + m12 * x2;
                amps[i10] = m21 * x1 + m22 * x2;
            }
        }
        BlockKind::Dense => {
            for i in 0..quarter {
                let i00 = insert_zero(insert_zero(i, lo), hi);
                let idx = [i00, i00 | bb, i00 | ba, i00 | ba | bb];
                let x = idx.map(|k| amps[k]);
                for (r, &k) in idx.iter().enumerate() {
                    amps[k] = m[(r, 0)] * x[0] + m[(r, 1)] * x[1] + m[(r, 2)] * x[2] + m[(r, 3)] * x[3];
                }
            }
        }
    }
}

/// A pass over the state.
#[derive(Debug, Clone)]
pub enum FusedOp {
    One(usize, Mat2),
    Two(usize, usize, Mat4, BlockKind),
}

impl FusedOp {
    pub fn apply(&self, amps: &mut [C64], n: usize) {
        match self {
            FusedOp::One(q, m) => apply_1q(amps, n, *q, m),
            FusedOp::Two(a, b, m, k) => apply_2q(amps, n, *a, *b, m, *k),
        }
    }
}

fn swap_qubits(m: &Mat4) -> Mat4 {
    let p = [0usize, 2, 1, 3];
    Mat4::from_fn(|i, j| m[(p[i], p[j])])
}

struct Block {
    a: usize,
    b: usize,
    m: Mat4,
}

/// Accumulates gates and emits fused passes. Passes on disjoint qubits are
/// emitted in an order consistent with the gate order.
pub struct Fuser {
    pending: Vec<Option<Mat2>>,
    block_of: Vec<Option<usize>>,
    blocks: Vec<Option<Block>>,
    out: Vec<FusedOp>,
}

impl Fuser {
    pub fn new(n: usize) -> Self {
        Self { pending: vec![None; n], block_of: vec![None; n], blocks: Vec::new(), out: Vec::new() }
    }

    pub fn push_1q(&mut self, q: usize, m: &Mat2) {
        if let Some(k) = self.block_of[q] {
            let blk = self.blocks[k].as_mut().expect("active block");
            let emb = if blk.a == q { kron2(m, &Mat2::identity()) } else { kron2(&Mat2::identity(), m) };
            blk.m = emb * blk.m;
        } else {
            self.pending[q] = Some(match self.pending[q] {
                Some(p) => m * p,
                None => *m,
            });
        }
    }

    pub fn push_2q(&mut self, a: usize, b: usize, m: &Mat4) {
        if let (Some(ka), Some(kb)) = (self.block_of[a], self.block_of[b]) {
            if ka == kb {
                let blk = self.blocks[ka].as_mut().expect("active block");
                let mm = if blk.a == a { *m } else { swap_qubits(m) };
                blk.m = mm * blk.m;
                return;
            }
        }
        self.flush_qubit(a);
        self.flush_qubit(b);
        let id = Mat2::identity();
        let pa = self.pending[a].take().unwrap_or(id);
        let pb = self.pending[b].take().unwrap_or(id);
        let k = self.blocks.len();
        self.blocks.push(Some(Block { a, b, m: m * kron2(&pa, &pb) }));
        self.block_of[a] = Some(k);
        self.block_of[b] = Some(k);
    }

    fn flush_qubit(&mut self, q: usize) {
        if let Some(k) = self.block_of[q] {
            let blk = self.blocks[k].take().expect("active block");
            self.block_of[blk.a] = None;
            self.block_of[blk.b] = None;
            let kind = block_kind(&blk.m);
            self.out.push(FusedOp::Two(blk.a, blk.b, blk.m, kind));
        }
    }

    /// Emits every pending pass and returns the program.
    pub fn finish(mut self) -> Vec<FusedOp> {
        for q in 0..self.pending.len() {
            self.flush_qubit(q);
        }
        for (q, p) in self.pending.iter().enumerate() {
            if let Some(m) = p {
                if (m - Mat2::identity()).norm() > 0.0 {
                    self.out.push(FusedOp::One(q, *m));
                }
            }
        }
        self.out
    }
}

/// Index with bit q = qubit q, from an amplitude index.
pub fn index_to_bits(x: usize, n: usize) -> u64 {
    let mut out = 0u64;
    for q in 0..n {
        if x >> (n - 1 - q) & 1 == 1 {
            out |= 1 << q;
        }
    }
    out
}

/// Cumulative probabilities of `amps` into `buf`.
pub fn cumulative(amps: &[C64], buf: &mut Vec<f64>) {
    buf.clear();
    let mut acc = 0.0;
    for a in amps {
        acc += a.norm_sqr();
        buf.push(acc);
    }
}

/// Draws an amplitude index given a uniform number in [0, 1).
pub fn draw_index(cum: &[f64], u: f64) -> usize {
    let total = *cum.last().expect("non-empty state");
    let x = u * total;
    cum.partition_point(|&c| c <= x).min(cum.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{cz4, rx, ry, rz};
    use crate::linalg;

    fn dense_apply(amps: &[C64], n: usize, ops: &[(usize, Option<usize>, Vec<C64>)]) -> Vec<C64> {
        let mut v = linalg::CMat::from_column_slice(amps.len(), 1, amps);
        for (a, b, m) in ops {
            let full = match b {
                None => linalg::site_operator(&linalg::CMat::from_row_slice(2, 2, m), *a, n, 2),
                Some(b) => {
                    // Embed via a permutation-free construction on adjacent order a<b.
                    assert!(*a + 1 == *b);
                    let left = linalg::identity(1 << a);
                    let right = linalg::identity(1 << (n - b - 1));
                    linalg::kron(&linalg::kron(&left, &linalg::CMat::from_row_slice(4, 4, m)), &right)
                }
            };
            v = full * v;
        }
        v.iter().copied().collect()
    }

    fn row_major2(m: &Mat2) -> Vec<C64> {
        (0..2).flat_map(|i| (0..2).map(move |j| m[(i, j)])).collect()
    }

    fn row_major4(m: &Mat4) -> Vec<C64> {
        (0..4).flat_map(|i| (0..4).map(move |j| m[(i, j)])).collect()
    }

    #[test]
    fn fused_program_matches_dense() {
        let n = 4;
        let mut amps: Vec<C64> = (0..16).map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos())).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        let g1 = rx(0.3) * ry(0.9);
        let g2 = rz(1.3);
        let mut f = Fuser::new(n);
        f.push_1q(1, &g1);
        f.push_2q(1, 2, &cz4());
        f.push_1q(2, &g2);
        f.push_2q(2, 1, &cz4());
        f.push_1q(0, &g1);
        f.push_2q(0, 1, &cz4());
        f.push_1q(3, &g2);
        let prog = f.finish();
        let mut got = amps.clone();
        for op in &prog {
            op.apply(&mut got, n);
        }
        let want = dense_apply(
            &amps,
            n,
            &[
                (1, None, row_major2(&g1)),
                (1, Some(2), row_major4(&cz4())),
                (2, None, row_major2(&g2)),
                (1, Some(2), row_major4(&cz4())),
                (0, None, row_major2(&g1)),
                (0, Some(1), row_major4(&cz4())),
                (3, None, row_major2(&g2)),
            ],
        );
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn bit_order() {
        assert_eq!(index_to_bits(0b100, 3), 0b001);
        assert_eq!(index_to_bits(0b011, 3), 0b110);
    }
}
