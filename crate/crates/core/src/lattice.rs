//! Honeycomb geometry, the N×1 supercell folded into a ring, and
//! wave-vector-twisted coupling matrices.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Vec2 = [f64; 2];

fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn scale(s: f64, a: Vec2) -> Vec2 {
    [s * a[0], s * a[1]]
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Which constituent spin of a magnetic center couples along a displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinLabel {
    A,
    B,
    C,
}

impl SpinLabel {
    pub fn index(self) -> usize {
        match self {
            SpinLabel::A => 0,
            SpinLabel::B => 1,
            SpinLabel::C => 2,
        }
    }
}

/// Honeycomb lattice: Bravais vectors, two-site basis and the three
/// nearest-neighbor displacements A→B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub lattice_constant: f64,
    pub a1: Vec2,
    pub a2: Vec2,
    pub basis_a: Vec2,
    pub basis_b: Vec2,
    pub deltas: [Vec2; 3],
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self::with_constant(1.0)
    }
}

impl LatticeSpec {
    /// a1 = a(1, 0), a2 = a(1/2, √3/2), B at (a1 + a2)/3.
    /// δ1 = B, δ2 = B − a1, δ3 = B − a2.
    pub fn with_constant(a: f64) -> Self {
        let a1 = [a, 0.0];
        let a2 = [0.5 * a, 0.5 * 3f64.sqrt() * a];
        let basis_a = [0.0, 0.0];
        let basis_b = scale(1.0 / 3.0, add(a1, a2));
        let deltas = [basis_b, sub(basis_b, a1), sub(basis_b, a2)];
        Self { lattice_constant: a, a1, a2, basis_a, basis_b, deltas }
    }

    /// Reciprocal vectors with a_i · b_j = 2π δ_ij.
    pub fn reciprocal(&self) -> (Vec2, Vec2) {
        let det = self.a1[0] * self.a2[1] - self.a1[1] * self.a2[0];
        let b1 = scale(2.0 * PI / det, [self.a2[1], -self.a2[0]]);
        let b2 = scale(2.0 * PI / det, [-self.a1[1], self.a1[0]]);
        (b1, b2)
    }

    pub fn delta_length(&self) -> f64 {
        dot(self.deltas[0], self.deltas[0]).sqrt()
    }
}

/// Named high-symmetry points of the hexagonal Brillouin zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryPoint {
    #[serde(rename = "gamma", alias = "Γ", alias = "G")]
    Gamma,
    #[serde(rename = "k", alias = "K")]
    K,
    #[serde(rename = "m", alias = "M")]
    M,
}

impl SymmetryPoint {
    pub const ALL: [SymmetryPoint; 3] = [SymmetryPoint::Gamma, SymmetryPoint::K, SymmetryPoint::M];

    pub fn as_str(self) -> &'static str {
        match self {
            SymmetryPoint::Gamma => "gamma",
            SymmetryPoint::K => "k",
            SymmetryPoint::M => "m",
        }
    }
}

impl fmt::Display for SymmetryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SymmetryPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gamma" | "Gamma" | "GAMMA" | "G" | "g" | "Γ" => Ok(SymmetryPoint::Gamma),
            "k" | "K" => Ok(SymmetryPoint::K),
            "m" | "M" => Ok(SymmetryPoint::M),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// A wave vector in units of 1/lattice_constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveVector {
    pub qx: f64,
    pub qy: f64,
    pub label: Option<SymmetryPoint>,
}

impl WaveVector {
    pub fn custom(qx: f64, qy: f64) -> Self {
        Self { qx, qy, label: None }
    }

    pub fn vec(&self) -> Vec2 {
        [self.qx, self.qy]
    }

    pub fn label_str(&self) -> String {
        match self.label {
            Some(p) => p.to_string(),
            None => format!("q({:.6},{:.6})", self.qx, self.qy),
        }
    }
}

/// Γ = 0, K = (2b1 + b2)/3, M = (b1 + b2)/2.
pub fn high_symmetry_point(label: SymmetryPoint, lattice: &LatticeSpec) -> WaveVector {
    let (b1, b2) = lattice.reciprocal();
    let q = match label {
        SymmetryPoint::Gamma => [0.0, 0.0],
        SymmetryPoint::K => scale(1.0 / 3.0, add(scale(2.0, b1), b2)),
        SymmetryPoint::M => scale(0.5, add(b1, b2)),
    };
    WaveVector { qx: q[0], qy: q[1], label: Some(label) }
}

/// Parses a label such as "M" and returns the corresponding point.
pub fn high_symmetry_point_by_name(name: &str, lattice: &LatticeSpec) -> Result<WaveVector> {
    Ok(high_symmetry_point(name.parse()?, lattice))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub index: usize,
    pub cell: usize,
    pub sublattice: Sublattice,
    pub position: Vec2,
}

/// One honeycomb displacement folded onto a ring bond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    /// r_j − r_i for the ring bond i → j.
    pub vector: Vec2,
    pub label: SpinLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingBond {
    pub site_i: usize,
    pub site_j: usize,
    pub displacements: Vec<Displacement>,
}

/// The N×1 supercell (periodic along a1 with period N, along a2 with period 1)
/// viewed as a ring A_0, B_0, A_1, B_1, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupercellChain {
    pub n_cells: usize,
    pub sites: Vec<Site>,
    pub ring_bonds: Vec<RingBond>,
    pub lattice: LatticeSpec,
}

impl SupercellChain {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn multiplicity(&self) -> usize {
        self.ring_bonds.iter().map(|b| b.displacements.len()).sum()
    }
}

/// Builds the ring. Bond 2j joins A_j → B_j and carries δ1 and the a2-wrapped
/// δ3; bond 2j+1 joins B_j → A_{j+1} and carries −δ2.
pub fn build_supercell_chain(n_cells: usize, lattice: &LatticeSpec) -> Result<SupercellChain> {
    if n_cells == 0 {
        return Err(Error::InvalidArgument("n_cells must be at least 1".into()));
    }
    let mut sites = Vec::with_capacity(2 * n_cells);
    for j in 0..n_cells {
        let origin = scale(j as f64, lattice.a1);
        sites.push(Site {
            index: 2 * j,
            cell: j,
            sublattice: Sublattice::A,
            position: add(origin, lattice.basis_a),
        });
        sites.push(Site {
            index: 2 * j + 1,
            cell: j,
            sublattice: Sublattice::B,
            position: add(origin, lattice.basis_b),
        });
    }
    let [d1, d2, d3] = lattice.deltas;
    let n = 2 * n_cells;
    let ring_bonds = (0..n)
        .map(|i| {
            let displacements = if i % 2 == 0 {
                vec![
                    Displacement { vector: d1, label: SpinLabel::A },
                    Displacement { vector: d3, label: SpinLabel::C },
                ]
            } else {
                vec![Displacement { vector: scale(-1.0, d2), label: SpinLabel::B }]
            };
            RingBond { site_i: i, site_j: (i + 1) % n, displacements }
        })
        .collect();
    Ok(SupercellChain { n_cells, sites, ring_bonds, lattice: lattice.clone() })
}

/// The 3×3 twisted coupling a(φ) between neighboring centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistedCoupling {
    pub matrix: [[f64; 3]; 3],
    pub phi: f64,
    pub a_perp: f64,
    pub a_parallel: f64,
}

impl TwistedCoupling {
    pub fn from_phi(a_perp: f64, a_parallel: f64, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let matrix = [
            [a_perp * c, a_perp * s, 0.0],
            [-a_perp * s, a_perp * c, 0.0],
            [0.0, 0.0, a_parallel],
        ];
        Self { matrix, phi, a_perp, a_parallel }
    }
}

/// Twist for displacement `d` at wave vector `q`: φ = d·q.
pub fn twist_matrix(a_perp: f64, a_parallel: f64, displacement: Vec2, q: &WaveVector) -> TwistedCoupling {
    TwistedCoupling::from_phi(a_perp, a_parallel, dot(displacement, q.vec()))
}
