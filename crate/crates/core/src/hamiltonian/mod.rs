//! Material presets, the microscopic supercell Hamiltonian, the effective
//! spin-1/2 ring model with centering, the one-magnon band and Trotter-error
//! estimates.

mod microscopic;
mod ring;
mod trotter_error;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lattice::{twist_matrix, SpinLabel, SupercellChain, WaveVector};
use crate::linalg::{self, CMat};
use crate::spin_algebra::{
    dimer_bond_operator, extract_bond_couplings, project_quartet, triangle_operator, BondCouplings,
};
use crate::{Error, Result};

pub use microscopic::{assemble_microscopic, assemble_microscopic_with, MicroscopicOptions};
pub use ring::{BondTerm, RingOperator};
pub use trotter_error::{lie_trotter_error_estimate, NormConvention, TrotterErrorEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Material {
    CrCl3,
    CrBr3,
    CrI3,
}

impl Material {
    pub const ALL: [Material; 3] = [Material::CrCl3, Material::CrBr3, Material::CrI3];

    pub fn as_str(self) -> &'static str {
        match self {
            Material::CrCl3 => "CrCl3",
            Material::CrBr3 => "CrBr3",
            Material::CrI3 => "CrI3",
        }
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Material {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "crcl3" => Ok(Material::CrCl3),
            "crbr3" => Ok(Material::CrBr3),
            "cri3" => Ok(Material::CrI3),
            _ => Err(Error::UnknownMaterial(s.to_string())),
        }
    }
}

/// On-site and inter-center couplings of a chromium tri-halide monolayer (meV).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialPreset {
    pub material: Material,
    /// Ferromagnetic on-site coupling A.
    pub a_onsite: f64,
    /// Bare inter-center coupling.
    pub a_bare: f64,
    /// Renormalized inter-center coupling.
    pub a_renorm: f64,
}

impl MaterialPreset {
    pub fn a(&self, choice: AChoice) -> f64 {
        match choice {
            AChoice::Bare => self.a_bare,
            AChoice::Renorm => self.a_renorm,
        }
    }

    /// Heisenberg exchange J = (4/9) a of the spin-3/2 description.
    pub fn heisenberg_j(&self, choice: AChoice) -> f64 {
        4.0 / 9.0 * self.a(choice)
    }
}

pub fn material_preset(material: Material) -> MaterialPreset {
    let (a_onsite, a_bare, a_renorm) = match material {
        Material::CrCl3 => (443.8, 3.4, 2.7),
        Material::CrBr3 => (438.8, 3.2, 3.1),
        Material::CrI3 => (429.9, 3.0, 3.7),
    };
    MaterialPreset { material, a_onsite, a_bare, a_renorm }
}

pub fn material_preset_by_name(name: &str) -> Result<MaterialPreset> {
    Ok(material_preset(name.parse()?))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AChoice {
    #[default]
    Bare,
    Renorm,
}

impl FromStr for AChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bare" => Ok(AChoice::Bare),
            "renorm" | "renormalized" => Ok(AChoice::Renorm),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Which Hamiltonian drives the dynamics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// H' with the uniform field α removed.
    #[default]
    Centered,
    /// H^(2) as projected and truncated.
    Uncentered,
}

/// Interaction strengths feeding the twist matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingStrengths {
    pub a_perp: f64,
    pub a_parallel: f64,
    pub a_onsite: f64,
}

impl CouplingStrengths {
    pub fn isotropic(preset: &MaterialPreset, choice: AChoice) -> Self {
        let a = preset.a(choice);
        Self { a_perp: a, a_parallel: a, a_onsite: preset.a_onsite }
    }
}

/// Projected two-level model on a ring of N sites; bond i joins i and i+1 mod N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRingModel {
    pub n_sites: usize,
    pub bonds: Vec<BondCouplings>,
    /// Raw local fields h_i (meV) before centering.
    pub local_fields: Vec<f64>,
    /// Uniform component α = mean(h_i).
    pub alpha: f64,
    /// h_i − α.
    pub centered_fields: Vec<f64>,
    /// Scalar energy offset excluded from the dynamics.
    pub e_offset: f64,
    pub q: WaveVector,
    pub preset: MaterialPreset,
    pub a_choice: AChoice,
    pub strengths: CouplingStrengths,
}

impl EffectiveRingModel {
    pub fn bond_sites(&self, bond: usize) -> (usize, usize) {
        (bond, (bond + 1) % self.n_sites)
    }

    pub fn fields(&self, frame: Frame) -> &[f64] {
        match frame {
            Frame::Centered => &self.centered_fields,
            Frame::Uncentered => &self.local_fields,
        }
    }

    /// Dynamical part of the Hamiltonian; the scalar offset is left out.
    pub fn ring_operator(&self, frame: Frame) -> RingOperator {
        let bonds: Vec<_> = (0..self.n_sites)
            .map(|b| {
                let (i, j) = self.bond_sites(b);
                (i, j, self.bonds[b])
            })
            .collect();
        RingOperator::from_bonds(self.n_sites, &bonds, self.fields(frame))
    }

    /// Bond couplings including half of each endpoint's centered field, the
    /// share a bond gate carries (every site sits on two ring bonds).
    pub fn bond_with_field_share(&self, bond: usize) -> BondCouplings {
        let (i, j) = self.bond_sites(bond);
        let b = self.bonds[bond];
        BondCouplings {
            j_perp: b.j_perp,
            j_z: b.j_z,
            j_cross: b.j_cross,
            h_left: 0.5 * self.centered_fields[i],
            h_right: 0.5 * self.centered_fields[j],
            e_offset: 0.0,
        }
    }

    /// Energy of |FM⟩ = |↑…↑⟩ under the dynamical operator of `frame`.
    pub fn fm_energy(&self, frame: Frame) -> f64 {
        let zz: f64 = self.bonds.iter().map(|b| 0.25 * b.j_z).sum();
        let h: f64 = self.fields(frame).iter().map(|h| 0.5 * h).sum();
        zz + h
    }
}

/// Couplings of one displacement, cached by (label, φ).
fn displacement_couplings(
    strengths: &CouplingStrengths,
    phi: f64,
    label: SpinLabel,
    cache: &mut HashMap<(usize, u64), BondCouplings>,
) -> Result<BondCouplings> {
    let key = (label.index(), phi.to_bits());
    if let Some(b) = cache.get(&key) {
        return Ok(*b);
    }
    let twist = crate::lattice::TwistedCoupling::from_phi(strengths.a_perp, strengths.a_parallel, phi);
    let b = extract_bond_couplings(&dimer_bond_operator(&twist, label))?;
    cache.insert(key, b);
    Ok(b)
}

/// Quartet energy of the on-site triangle (a scalar on the S = 3/2 block).
pub fn triangle_quartet_energy(a_onsite: f64) -> Result<f64> {
    let p = project_quartet(&triangle_operator(a_onsite))?.to_dense();
    let e = p[(0, 0)].re;
    let dev = linalg::frobenius(&(p - linalg::identity(4) * linalg::c(e)));
    if dev > 1e-10 * a_onsite.abs().max(1.0) {
        return Err(Error::ResidualTooLarge { residual: dev, limit: 1e-10 });
    }
    Ok(e)
}

pub fn assemble_effective_ring(
    chain: &SupercellChain,
    preset: &MaterialPreset,
    q: &WaveVector,
    a_choice: AChoice,
) -> Result<EffectiveRingModel> {
    assemble_effective_ring_with(chain, preset, q, a_choice, CouplingStrengths::isotropic(preset, a_choice))
}

/// As [`assemble_effective_ring`] with explicit (possibly anisotropic) strengths.
pub fn assemble_effective_ring_with(
    chain: &SupercellChain,
    preset: &MaterialPreset,
    q: &WaveVector,
    a_choice: AChoice,
    strengths: CouplingStrengths,
) -> Result<EffectiveRingModel> {
    let n = chain.n_sites();
    let mut cache = HashMap::new();
    let mut bonds = Vec::with_capacity(n);
    let mut fields = vec![0.0; n];
    let mut e_offset = n as f64 * triangle_quartet_energy(strengths.a_onsite)?;
    for rb in &chain.ring_bonds {
        let mut total = BondCouplings::default();
        for d in &rb.displacements {
            let phi = twist_matrix(strengths.a_perp, strengths.a_parallel, d.vector, q).phi;
            total = total.add(&displacement_couplings(&strengths, phi, d.label, &mut cache)?);
        }
        fields[rb.site_i] += total.h_left;
        fields[rb.site_j] += total.h_right;
        e_offset += total.e_offset;
        bonds.push(BondCouplings { h_left: 0.0, h_right: 0.0, e_offset: 0.0, ..total });
    }
    let alpha = fields.iter().sum::<f64>() / n as f64;
    let centered_fields = fields.iter().map(|h| h - alpha).collect();
    Ok(EffectiveRingModel {
        n_sites: n,
        bonds,
        local_fields: fields,
        alpha,
        centered_fields,
        e_offset,
        q: *q,
        preset: *preset,
        a_choice,
        strengths,
    })
}

/// Reference level for reported energies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyReference {
    /// Relative to the |FM⟩ level of the same operator.
    Fm,
    /// Including the scalar offset.
    Absolute,
}

/// Sorted single-flip eigenvalues of the chosen operator.
pub fn one_magnon_levels(model: &EffectiveRingModel, frame: Frame, reference: EnergyReference) -> Vec<f64> {
    let op = model.ring_operator(frame);
    let block = op.sector_matrix(&op.single_flip_states());
    let mut vals = linalg::eigvalsh(&block);
    let shift = match reference {
        EnergyReference::Fm => -model.fm_energy(frame),
        EnergyReference::Absolute => model.e_offset,
    };
    for v in &mut vals {
        *v += shift;
    }
    vals
}

/// One-magnon band of H' relative to the FM level (meV, ascending).
pub fn one_magnon_band(model: &EffectiveRingModel) -> Vec<f64> {
    one_magnon_levels(model, Frame::Centered, EnergyReference::Fm)
}

/// Spin-3/2 ring built directly from quartet-projected dimer operators,
/// restricted to the sector with one site lowered to m = 1/2. Returns
/// absolute eigenvalues (including on-site quartet energies), ascending.
pub fn quartet_one_magnon_levels(
    chain: &SupercellChain,
    strengths: &CouplingStrengths,
    q: &WaveVector,
) -> Result<Vec<f64>> {
    let n = chain.n_sites();
    let mut bond_ops: Vec<(usize, usize, CMat)> = Vec::with_capacity(n);
    for rb in &chain.ring_bonds {
        let mut m = CMat::zeros(16, 16);
        for d in &rb.displacements {
            let twist = twist_matrix(strengths.a_perp, strengths.a_parallel, d.vector, q);
            m += project_quartet(&dimer_bond_operator(&twist, d.label))?.to_dense();
        }
        bond_ops.push((rb.site_i, rb.site_j, m));
    }
    let onsite = triangle_quartet_energy(strengths.a_onsite)?;
    // State k: site k at level 1 (m = 1/2), all others at level 0.
    let level = |state: usize, site: usize| usize::from(state == site);
    let mut h = CMat::zeros(n, n);
    for col in 0..n {
        h[(col, col)] += linalg::c(n as f64 * onsite);
        for (i, j, b) in &bond_ops {
            let p = 4 * level(col, *i) + level(col, *j);
            for p_new in 0..16 {
                let v = b[(p_new, p)];
                if v.norm() == 0.0 {
                    continue;
                }
                let (li, lj) = (p_new / 4, p_new % 4);
                let mut lowered = Vec::with_capacity(2);
                if col != *i && col != *j {
                    lowered.push(col);
                }
                if li == 1 {
                    lowered.push(*i);
                }
                if lj == 1 {
                    lowered.push(*j);
                }
                if li > 1 || lj > 1 || lowered.len() != 1 {
                    return Err(Error::InvalidArgument(
                        "quartet bond operator leaves the single-flip sector".into(),
                    ));
                }
                h[(lowered[0], col)] += v;
            }
        }
    }
    Ok(linalg::eigvalsh(&h))
}
