//! Microscopic supercell Hamiltonian with three spin-1/2 per magnetic center.

use crate::lattice::{twist_matrix, SupercellChain, WaveVector};
use crate::linalg::{self, c, CMat};
use crate::spin_algebra::{spin_half, SparseOperator};
use crate::{Error, Result, C64};

use super::{AChoice, CouplingStrengths, MaterialPreset};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MicroscopicOptions {
    /// Largest number of spin-1/2 for which the sparse operator is built.
    pub max_spins: usize,
}

impl Default for MicroscopicOptions {
    fn default() -> Self {
        Self { max_spins: 18 }
    }
}

/// −Σ_αβ M_αβ s^α ⊗ s^β as a 4×4 matrix.
fn pair_matrix(m: &[[f64; 3]; 3]) -> CMat {
    let s = spin_half();
    let mut out = CMat::zeros(4, 4);
    for (alpha, row) in m.iter().enumerate() {
        for (beta, &v) in row.iter().enumerate() {
            if v != 0.0 {
                out -= linalg::kron(&s[alpha], &s[beta]) * c(v);
            }
        }
    }
    out
}

/// −A Σ_sites (S_a·S_b + S_b·S_c + S_c·S_a) − Σ_bonds S_{i,x}·a(φ)·S_{j,x}.
pub fn assemble_microscopic(
    chain: &SupercellChain,
    preset: &MaterialPreset,
    q: &WaveVector,
    a_choice: AChoice,
    options: MicroscopicOptions,
) -> Result<SparseOperator> {
    assemble_microscopic_with(chain, &CouplingStrengths::isotropic(preset, a_choice), q, options)
}

pub fn assemble_microscopic_with(
    chain: &SupercellChain,
    strengths: &CouplingStrengths,
    q: &WaveVector,
    options: MicroscopicOptions,
) -> Result<SparseOperator> {
    let n_spins = 3 * chain.n_sites();
    if n_spins > options.max_spins.min(24) {
        return Err(Error::SizeLimit {
            what: "microscopic spin count",
            requested: n_spins,
            limit: options.max_spins.min(24),
        });
    }
    let mut pairs: Vec<(usize, usize, CMat)> = Vec::new();
    let heis = [[strengths.a_onsite, 0.0, 0.0], [0.0, strengths.a_onsite, 0.0], [0.0, 0.0, strengths.a_onsite]];
    let onsite = pair_matrix(&heis);
    for site in 0..chain.n_sites() {
        for (p, r) in [(0, 1), (1, 2), (2, 0)] {
            pairs.push((3 * site + p, 3 * site + r, onsite.clone()));
        }
    }
    for rb in &chain.ring_bonds {
        for d in &rb.displacements {
            let t = twist_matrix(strengths.a_perp, strengths.a_parallel, d.vector, q);
            let x = d.label.index();
            pairs.push((3 * rb.site_i + x, 3 * rb.site_j + x, pair_matrix(&t.matrix)));
        }
    }
    let dim = 1usize << n_spins;
    let bit = |s: usize| n_spins - 1 - s;
    let mut entries: Vec<(usize, usize, C64)> = Vec::with_capacity(dim * (1 + pairs.len()));
    for x in 0..dim {
        for (p, r, m) in &pairs {
            let (bp, br) = (bit(*p), bit(*r));
            let col = 2 * ((x >> bp) & 1) + ((x >> br) & 1);
            let base = x & !(1 << bp) & !(1 << br);
            for row in 0..4 {
                let v = m[(row, col)];
                if v.norm() > 0.0 {
                    let y = base | ((row >> 1) << bp) | ((row & 1) << br);
                    entries.push((y, x, v));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(dim, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{material_preset, Material};
    use crate::lattice::{build_supercell_chain, high_symmetry_point, LatticeSpec, SymmetryPoint};

    #[test]
    fn size_guard() {
        let l = LatticeSpec::default();
        let chain = build_supercell_chain(4, &l).unwrap();
        let q = high_symmetry_point(SymmetryPoint::Gamma, &l);
        let r = assemble_microscopic(&chain, &material_preset(Material::CrBr3), &q, AChoice::Bare, Default::default());
        assert!(matches!(r, Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn fm_energy_is_exact() {
        let l = LatticeSpec::default();
        let chain = build_supercell_chain(1, &l).unwrap();
        let q = high_symmetry_point(SymmetryPoint::K, &l);
        let p = material_preset(Material::CrBr3);
        let h = assemble_microscopic(&chain, &p, &q, AChoice::Bare, Default::default()).unwrap();
        assert!(h.hermitian);
        // |↑…↑⟩ is index 0.
        let e = -0.75 * p.a_onsite * 2.0 - 3.0 * p.a_bare / 4.0;
        assert!((h.get(0, 0).re - e).abs() < 1e-10);
        let col0: Vec<_> = h.entries.iter().filter(|e| e.1 == 0 && e.0 != 0).collect();
        assert!(col0.is_empty());
    }
}
