use magnon_core::circuits::{
    attach_trex_mask, build_trotter_circuit, measurement_suffix, pauli_twirl, prepare_quench, Basis, Circuit,
    CircuitMetadata, Gate, Op,
};
use magnon_core::hamiltonian::{assemble_effective_ring, material_preset, AChoice, Material};
use magnon_core::lattice::{build_supercell_chain, high_symmetry_point, LatticeSpec, SymmetryPoint};
use magnon_core::simulator::{
    born_probabilities, calibrate_trex, density_matrix_oracle, exact_time_series, mitigated_z, noise_preset,
    pauli_transfer_matrix, run_statevector, run_time_series, sample_noisy, NoisePreset, ShotBatch, TimeSeriesRequest,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn circuit(n: usize, ops: &[Op]) -> Circuit {
    Circuit::from_ops(n, ops, CircuitMetadata::default()).unwrap()
}

fn with_suffix(n: usize, body: &[Gate], basis: Basis) -> Circuit {
    let mut ops: Vec<Op> = body.iter().map(|g| Op::Gate(*g)).collect();
    ops.extend(measurement_suffix(n, basis));
    let mut c = circuit(n, &ops);
    c.metadata.measurement_basis = Some(basis);
    c
}

fn body3() -> Vec<Gate> {
    vec![
        Gate::Ry { q: 0, theta: 0.9 },
        Gate::Rx { q: 1, theta: -1.3 },
        Gate::U { q: 2, theta: 0.4, phi: 0.2, lambda: -0.7 },
        Gate::Cz { a: 0, b: 1 },
        Gate::Ry { q: 1, theta: 0.6 },
        Gate::Cz { a: 1, b: 2 },
        Gate::Rx { q: 0, theta: 0.5 },
        Gate::Cz { a: 0, b: 2 },
        Gate::Rz { q: 2, theta: 1.1 },
    ]
}

fn test_noise() -> NoisePreset {
    NoisePreset {
        eps_1q: 4e-3,
        eps_2q: 3e-2,
        readout_p01: Some(0.02),
        readout_p10: Some(0.05),
        t_1q_ns: 40.0,
        t_2q_ns: 300.0,
        t1_us: 20.0,
        t2_us: 15.0,
        ..NoisePreset::noiseless()
    }
}

fn assert_matches_oracle(c: &Circuit, noise: &NoisePreset, shots: usize, seed: u64) {
    let oracle = density_matrix_oracle(c, noise).unwrap();
    let batch = sample_noisy(c, noise, shots, seed).unwrap();
    for mask in 1..1u64 << c.n_qubits {
        let want = oracle.z_string(mask);
        let (got, _) = batch.z_string(mask);
        let sigma = ((1.0 - want * want).max(1e-12) / shots as f64).sqrt();
        assert!((got - want).abs() <= 4.0 * sigma, "mask {mask:b}: {got} vs {want} (σ {sigma})");
    }
}

#[test]
fn sampler_matches_density_oracle() {
    let shots = 100_000;
    assert_matches_oracle(&with_suffix(3, &body3(), Basis::Z), &test_noise(), shots, 1);
    let relax = NoisePreset { decoherence: true, ..test_noise() };
    assert_matches_oracle(&with_suffix(3, &body3(), Basis::X), &relax, shots, 2);
    let coherent = NoisePreset { cz_overrotation: 0.25, ..test_noise() };
    assert_matches_oracle(&with_suffix(3, &body3(), Basis::Y), &coherent, shots, 3);
}

#[test]
fn noiseless_sampling_passes_chi_square() {
    let n = 4;
    let mut body = body3();
    body.extend([Gate::Rx { q: 3, theta: 1.7 }, Gate::Cz { a: 2, b: 3 }, Gate::Ry { q: 3, theta: -0.4 }]);
    let c = with_suffix(n, &body, Basis::Z);
    let shots = 50_000;
    let batch = sample_noisy(&c, &NoisePreset::noiseless(), shots, 11).unwrap();
    let born = born_probabilities(&run_statevector(&c).unwrap());
    // Born index has qubit q at bit n−1−q; recorded bits have it at bit q.
    let to_bits = |x: usize| (0..n).fold(0usize, |b, q| b | ((x >> (n - 1 - q) & 1) << q));
    let mut counts = vec![0usize; 1 << n];
    for &b in &batch.bits {
        counts[b as usize] += 1;
    }
    let oracle = density_matrix_oracle(&c, &NoisePreset::noiseless()).unwrap();
    let mut chi2 = 0.0;
    for (x, p) in born.iter().enumerate() {
        assert!((oracle.probabilities[to_bits(x)] - p).abs() < 1e-12);
        let e = p * shots as f64;
        if e > 0.0 {
            chi2 += (counts[to_bits(x)] as f64 - e).powi(2) / e;
        }
    }
    // 15 degrees of freedom, p = 0.001.
    assert!(chi2 < 37.7, "chi2 {chi2}");
}

#[test]
fn sampling_is_deterministic() {
    let c = with_suffix(3, &body3(), Basis::X);
    let noise = test_noise();
    let a = sample_noisy(&c, &noise, 2000, 5).unwrap();
    let b = sample_noisy(&c, &noise, 2000, 5).unwrap();
    let other = sample_noisy(&c, &noise, 2000, 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.bits, other.bits);
}

#[test]
fn trex_is_unbiased_under_asymmetric_readout() {
    let noise = NoisePreset { readout_p01: Some(0.01), readout_p10: Some(0.05), ..NoisePreset::noiseless() };
    let theta: f64 = 1.1;
    let base = with_suffix(1, &[Gate::Ry { q: 0, theta }], Basis::Z);
    let (n_batches, per_batch) = (100, 1000);
    let batches: Vec<ShotBatch> = (0..n_batches)
        .map(|k| {
            let c = attach_trex_mask(&base, &[(k % 2) as u8]).unwrap();
            sample_noisy(&c, &noise, per_batch, 100 + k as u64).unwrap()
        })
        .collect();
    let cal = calibrate_trex(&noise, 1, 100_000, 9).unwrap();
    let refs: Vec<&ShotBatch> = batches.iter().collect();
    let (z, se) = mitigated_z(&refs, 0, cal.factors[0], cal.factor_se[0]);
    assert!((z - theta.cos()).abs() <= 3.0 * se, "{z} ± {se} vs {}", theta.cos());
    // Without the flips the readout bias is far outside the error bar.
    let plain: Vec<ShotBatch> =
        (0..n_batches).map(|k| sample_noisy(&base, &noise, per_batch, 500 + k as u64).unwrap()).collect();
    let plain_refs: Vec<&ShotBatch> = plain.iter().collect();
    let (zp, sep) = mitigated_z(&plain_refs, 0, cal.factors[0], cal.factor_se[0]);
    assert!((zp - theta.cos()).abs() > 3.0 * sep);
}

#[test]
fn calibration_factors_match_readout_model() {
    let noise = NoisePreset { readout_p01: Some(0.02), readout_p10: Some(0.06), ..NoisePreset::noiseless() };
    let cal = calibrate_trex(&noise, 3, 50_000, 4).unwrap();
    for q in 0..3 {
        assert!((cal.factors[q] - 0.92).abs() <= 4.0 * cal.factor_se[q]);
    }
}

/// Error channel R · R_ideal^T of one two-qubit circuit.
fn error_ptm(c: &Circuit, noise: &NoisePreset, ideal: &DMatrix<f64>) -> DMatrix<f64> {
    pauli_transfer_matrix(c, noise).unwrap() * ideal.transpose()
}

#[test]
fn twirled_overrotated_cz_is_pauli_diagonal() {
    let noise = NoisePreset { cz_overrotation: 0.3, ..NoisePreset::noiseless() };
    let cz = circuit(2, &[Op::Gate(Gate::Cz { a: 0, b: 1 })]);
    let ideal = pauli_transfer_matrix(&cz, &NoisePreset::noiseless()).unwrap();
    let bare = error_ptm(&cz, &noise, &ideal);
    let bare_off = (0..16).flat_map(|i| (0..16).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| bare[(i, j)].abs()).fold(0.0, f64::max);
    assert!(bare_off > 0.1);

    let k = 256;
    let draws: Vec<DMatrix<f64>> = (0..k).map(|s| error_ptm(&pauli_twirl(&cz, s).unwrap(), &noise, &ideal)).collect();
    let mean = draws.iter().fold(DMatrix::zeros(16, 16), |a, d| a + d) / k as f64;
    for i in 0..16 {
        for j in 0..16 {
            if i == j {
                continue;
            }
            let var = draws.iter().map(|d| (d[(i, j)] - mean[(i, j)]).powi(2)).sum::<f64>() / (k - 1) as f64;
            let se = (var / k as f64).sqrt();
            assert!(mean[(i, j)].abs() <= 4.0 * se + 1e-10, "({i},{j}): {} vs se {se}", mean[(i, j)]);
        }
    }
}

#[test]
fn time_series_marginals_match_prefix_oracle() {
    let lat = LatticeSpec::default();
    let chain = build_supercell_chain(2, &lat).unwrap();
    let q = high_symmetry_point(SymmetryPoint::M, &lat);
    let m = assemble_effective_ring(&chain, &material_preset(Material::CrBr3), &q, AChoice::Bare).unwrap();
    let quench = prepare_quench(4, 0.3 * std::f64::consts::PI).unwrap();
    let c = pauli_twirl(&build_trotter_circuit(&m, 0.2, 3, &quench, None).unwrap(), 21).unwrap();
    let noise = noise_preset("emerald").unwrap();
    let masks = [0b0000u64, 0b1010, 0b0111, 0b1111];
    let shots = 20_000;
    for basis in [Basis::X, Basis::Y] {
        let req = TimeSeriesRequest { circuit: &c, basis, masks: &masks, noise: &noise, shots, shots_per_trajectory: 4, seed: 8 };
        let batches = run_time_series(&req).unwrap();
        for (k, batch) in batches.iter().enumerate() {
            let mut ops: Vec<Op> = c.moment_range(0, c.barriers[k]).iter().flatten().map(|g| Op::Gate(*g)).collect();
            ops.extend(measurement_suffix(4, basis));
            let flips: Vec<u8> = (0..4).map(|qb| (masks[k] >> qb & 1) as u8).collect();
            let prefix = attach_trex_mask(&circuit(4, &ops), &flips).unwrap();
            let oracle = density_matrix_oracle(&prefix, &noise).unwrap();
            for qb in 0..4 {
                let want = oracle.z(qb);
                let sigma = ((1.0 - want * want).max(1e-12) / shots as f64).sqrt();
                // Shots sharing a trajectory are correlated; allow for it.
                assert!((batch.raw_z(qb) - want).abs() <= 4.0 * 2.0 * sigma, "t{k} q{qb} {basis:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn noiseless_time_series_tracks_exact(seed in any::<u64>()) {
        let lat = LatticeSpec::default();
        let chain = build_supercell_chain(2, &lat).unwrap();
        let q = high_symmetry_point(SymmetryPoint::K, &lat);
        let m = assemble_effective_ring(&chain, &material_preset(Material::CrBr3), &q, AChoice::Bare).unwrap();
        let quench = prepare_quench(4, 1.0).unwrap();
        let c = build_trotter_circuit(&m, 0.25, 4, &quench, None).unwrap();
        let exact = exact_time_series(&c).unwrap();
        let shots = 8000;
        let batches = run_time_series(&TimeSeriesRequest {
            circuit: &c, basis: Basis::X, masks: &[0, 3, 5, 9, 15], noise: &NoisePreset::noiseless(),
            shots, shots_per_trajectory: 1, seed,
        }).unwrap();
        for (b, e) in batches.iter().zip(&exact) {
            for qb in 0..4 {
                let want = 2.0 * e.sx[qb];
                let sigma = ((1.0 - want * want).max(1e-12) / shots as f64).sqrt();
                prop_assert!((b.flip_corrected_z(qb) - want).abs() <= 4.5 * sigma);
            }
        }
    }
}
