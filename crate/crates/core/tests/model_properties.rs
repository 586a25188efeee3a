use magnon_core::hamiltonian::{
    assemble_effective_ring, assemble_microscopic_with, material_preset, one_magnon_levels, quartet_one_magnon_levels,
    AChoice, CouplingStrengths, EnergyReference, Frame, Material, MicroscopicOptions, RingOperator,
};
use magnon_core::lattice::{
    build_supercell_chain, high_symmetry_point, twist_matrix, LatticeSpec, SpinLabel, SymmetryPoint, TwistedCoupling,
    WaveVector,
};
use magnon_core::linalg::{self, c, CMat};
use magnon_core::spin_algebra::{
    constituent_spin, dimer_bond_operator, project_quartet, spin_matrices, truncate_two_level, SparseOperator,
};
use magnon_core::C64;
use proptest::prelude::*;

fn lattice() -> LatticeSpec {
    LatticeSpec::default()
}

/// Euclidean norm of H e_0 − H_00 e_0 for the basis state 0.
fn basis_zero_residual(apply: impl Fn(&[C64]) -> Vec<C64>, dim: usize) -> f64 {
    let mut e0 = vec![C64::new(0.0, 0.0); dim];
    e0[0] = C64::new(1.0, 0.0);
    let h = apply(&e0);
    h.iter().skip(1).map(C64::norm_sqr).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn twist_at_opposite_q_is_transposed(qx in -8.0f64..8.0, qy in -8.0f64..8.0, k in 0usize..3, ap in 0.5f64..5.0, az in 0.5f64..5.0) {
        let d = lattice().deltas[k];
        let plus = twist_matrix(ap, az, d, &WaveVector::custom(qx, qy));
        let minus = twist_matrix(ap, az, d, &WaveVector::custom(-qx, -qy));
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((plus.matrix[i][j] - minus.matrix[j][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fm_is_an_eigenstate_through_projection(phi in -3.2f64..3.2, k in 0usize..3) {
        let label = [SpinLabel::A, SpinLabel::B, SpinLabel::C][k];
        let dimer = dimer_bond_operator(&TwistedCoupling::from_phi(3.2, 2.9, phi), label);
        let quartet = project_quartet(&dimer).unwrap();
        let two = truncate_two_level(&quartet).unwrap();
        for op in [&dimer, &quartet, &two] {
            prop_assert!(basis_zero_residual(|x| op.apply(x), op.dim) < 1e-10);
        }
    }

    #[test]
    fn krylov_conserves_sz_and_norm(angle in 0.1f64..3.0, pick in 0usize..3) {
        use magnon_core::propagators::{krylov_evolve, EvolutionRequest, KrylovOptions, StateVector};
        let chain = build_supercell_chain(3, &lattice()).unwrap();
        let q = high_symmetry_point(SymmetryPoint::ALL[pick], &lattice());
        let m = assemble_effective_ring(&chain, &material_preset(Material::CrBr3), &q, AChoice::Bare).unwrap();
        let t = krylov_evolve(&EvolutionRequest::uniform(&m, StateVector::quench(6, angle), 0.2, 10), KrylovOptions::default()).unwrap();
        prop_assert!(t.max_norm_error < 1e-10);
        let sz = t.sz_total();
        let e = &t.energy;
        for k in 0..sz.len() {
            prop_assert!((sz[k] - sz[0]).abs() < 1e-8);
            prop_assert!((e[k] - e[0]).abs() < 1e-8);
        }
    }
}

#[test]
fn gamma_sums_are_isotropic_multiples() {
    let lat = lattice();
    let chain = build_supercell_chain(4, &lat).unwrap();
    let gamma = high_symmetry_point(SymmetryPoint::Gamma, &lat);
    for rb in &chain.ring_bonds {
        let mut sum = [[0.0; 3]; 3];
        for d in &rb.displacements {
            let t = twist_matrix(3.2, 2.5, d.vector, &gamma);
            for i in 0..3 {
                for j in 0..3 {
                    sum[i][j] += t.matrix[i][j];
                }
            }
        }
        let m = rb.displacements.len() as f64;
        let want = [[3.2 * m, 0.0, 0.0], [0.0, 3.2 * m, 0.0], [0.0, 0.0, 2.5 * m]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((sum[i][j] - want[i][j]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn ring_is_a_single_cycle() {
    for n_cells in 1..=12 {
        let chain = build_supercell_chain(n_cells, &lattice()).unwrap();
        let n = chain.n_sites();
        let mut next = vec![usize::MAX; n];
        for rb in &chain.ring_bonds {
            assert_eq!(next[rb.site_i], usize::MAX);
            next[rb.site_i] = rb.site_j;
        }
        let mut seen = vec![false; n];
        let mut s = 0;
        for _ in 0..n {
            assert!(!seen[s]);
            seen[s] = true;
            s = next[s];
        }
        assert_eq!(s, 0);
        assert_eq!(chain.multiplicity(), 3 * n_cells);
    }
}

#[test]
fn constituent_spin_projects_to_one_third() {
    let big = spin_matrices(3);
    for x in 0..3 {
        for alpha in 0..3 {
            let op = SparseOperator::from_dense(&constituent_spin(0, x, alpha, 1));
            let p = project_quartet(&op).unwrap().to_dense();
            let want = &big[alpha] * c(1.0 / 3.0);
            assert!(linalg::frobenius(&(p - want)) < 1e-12, "x={x} alpha={alpha}");
        }
    }
}

fn sz_total(n: usize) -> CMat {
    let sz = &magnon_core::spin_algebra::spin_half()[2];
    (0..n).fold(CMat::zeros(1 << n, 1 << n), |acc, k| acc + linalg::site_operator(sz, k, n, 2))
}

#[test]
fn ring_operator_commutes_with_sz_total() {
    let lat = lattice();
    let chain = build_supercell_chain(3, &lat).unwrap();
    for label in SymmetryPoint::ALL {
        let q = high_symmetry_point(label, &lat);
        let m = assemble_effective_ring(&chain, &material_preset(Material::CrI3), &q, AChoice::Renorm).unwrap();
        for frame in [Frame::Centered, Frame::Uncentered] {
            let h = m.ring_operator(frame).to_dense();
            assert!(linalg::frobenius(&linalg::commutator(&h, &sz_total(6))) < 1e-10);
        }
    }
}

#[test]
fn one_magnon_levels_match_quartet_ring() {
    let lat = lattice();
    let preset = material_preset(Material::CrBr3);
    for n_cells in [2, 3] {
        let chain = build_supercell_chain(n_cells, &lat).unwrap();
        for label in SymmetryPoint::ALL {
            let q = high_symmetry_point(label, &lat);
            let m = assemble_effective_ring(&chain, &preset, &q, AChoice::Bare).unwrap();
            let eff = one_magnon_levels(&m, Frame::Uncentered, EnergyReference::Absolute);
            let quartet = quartet_one_magnon_levels(&chain, &CouplingStrengths::isotropic(&preset, AChoice::Bare), &q).unwrap();
            assert_eq!(eff.len(), quartet.len());
            for (a, b) in eff.iter().zip(&quartet) {
                assert!((a - b).abs() < 1e-10, "{label:?} N={}: {a} vs {b}", 2 * n_cells);
            }
        }
    }
}

/// Eigenvalues of every magnetization sector, sorted, of a ring operator.
fn sector_spectra(op: &RingOperator) -> Vec<Vec<f64>> {
    (0..=op.n_sites).map(|k| linalg::eigvalsh(&op.sector_matrix(&RingOperator::sector_states(op.n_sites, k)))).collect()
}

#[test]
fn centering_keeps_sector_gaps() {
    let lat = lattice();
    let chain = build_supercell_chain(3, &lat).unwrap();
    let q = high_symmetry_point(SymmetryPoint::K, &lat);
    let m = assemble_effective_ring(&chain, &material_preset(Material::CrCl3), &q, AChoice::Bare).unwrap();
    let a = sector_spectra(&m.ring_operator(Frame::Centered));
    let b = sector_spectra(&m.ring_operator(Frame::Uncentered));
    for (sa, sb) in a.iter().zip(&b) {
        let shift = sb[0] - sa[0];
        for (x, y) in sa.iter().zip(sb) {
            assert!((y - x - shift).abs() < 1e-12);
        }
    }
}

/// Lowest single-flip excitation energies of the microscopic model relative
/// to the fully polarized state.
fn microscopic_one_magnon(a_onsite: f64, q: &WaveVector) -> Vec<f64> {
    let lat = lattice();
    let chain = build_supercell_chain(1, &lat).unwrap();
    let strengths = CouplingStrengths { a_perp: 3.2, a_parallel: 3.2, a_onsite };
    let h = assemble_microscopic_with(&chain, &strengths, q, MicroscopicOptions::default()).unwrap();
    let n = 6;
    let states: Vec<usize> = (0..1usize << n).filter(|x| x.count_ones() == 1).collect();
    let e_fm = h.get(0, 0).re;
    let mut vals = linalg::eigvalsh(&h.restrict(&states));
    vals.truncate(2);
    vals.iter().map(|v| v - e_fm).collect()
}

#[test]
fn microscopic_levels_approach_effective_ring() {
    let lat = lattice();
    let chain = build_supercell_chain(1, &lat).unwrap();
    let q = high_symmetry_point(SymmetryPoint::K, &lat);
    let mut devs = Vec::new();
    for a_onsite in [50.0, 100.0, 200.0, 400.0] {
        let preset = magnon_core::hamiltonian::MaterialPreset { a_onsite, ..material_preset(Material::CrBr3) };
        let m = assemble_effective_ring(&chain, &preset, &q, AChoice::Bare).unwrap();
        let eff = one_magnon_levels(&m, Frame::Uncentered, EnergyReference::Fm);
        let micro = microscopic_one_magnon(a_onsite, &q);
        devs.push(eff.iter().zip(&micro).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    for w in devs.windows(2) {
        assert!(w[1] < w[0]);
        // O(1/A): doubling A roughly halves the deviation.
        assert!((w[0] / w[1] - 2.0).abs() < 0.3, "ratio {}", w[0] / w[1]);
    }
}

#[test]
fn fm_is_an_eigenstate_of_large_rings() {
    let lat = lattice();
    let preset = material_preset(Material::CrBr3);
    for n_cells in [3, 6, 9, 12] {
        let chain = build_supercell_chain(n_cells, &lat).unwrap();
        for label in SymmetryPoint::ALL {
            let q = high_symmetry_point(label, &lat);
            let m = assemble_effective_ring(&chain, &preset, &q, AChoice::Bare).unwrap();
            let op = m.ring_operator(Frame::Centered);
            let r = basis_zero_residual(
                |x| {
                    let mut y = vec![C64::new(0.0, 0.0); x.len()];
                    op.apply(x, &mut y);
                    y
                },
                op.dim(),
            );
            assert!(r <= 1e-10, "N={} {label:?}: {r}", 2 * n_cells);
        }
    }
}
