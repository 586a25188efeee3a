use std::f64::consts::PI;

use magnon_core::circuits::{build_trotter_circuit, prepare_quench, Basis};
use magnon_core::hamiltonian::{assemble_effective_ring, material_preset, AChoice, EffectiveRingModel, Frame, Material};
use magnon_core::lattice::{build_supercell_chain, high_symmetry_point, LatticeSpec, SymmetryPoint};
use magnon_core::propagators::{dense_evolve, krylov_evolve, DenseOptions, EvolutionRequest, KrylovOptions, StateVector};
use magnon_core::simulator::{run_time_series, NoisePreset, ShotBatch, TimeSeriesRequest, TrexCalibration};
use magnon_core::spectra::{
    assemble_signal, bootstrap_band, cosine_similarity, fit_damping, fourier, BootstrapOptions, DampingOptions,
    FourierOptions, Spectrum, TimeTrace, TraceSource, Window,
};
use magnon_core::{Error, C64};
use proptest::prelude::*;

fn model(n_cells: usize, label: SymmetryPoint) -> EffectiveRingModel {
    let lat = LatticeSpec::default();
    let chain = build_supercell_chain(n_cells, &lat).unwrap();
    let q = high_symmetry_point(label, &lat);
    assemble_effective_ring(&chain, &material_preset(Material::CrBr3), &q, AChoice::Bare).unwrap()
}

fn krylov_trace(m: &EffectiveRingModel, frame: Frame, tau: f64) -> TimeTrace {
    let mut req = EvolutionRequest::uniform(m, StateVector::quench(m.n_sites, 0.3 * PI), tau, 19);
    req.frame = frame;
    let t = krylov_evolve(&req, KrylovOptions::default()).unwrap();
    let alpha = if frame == Frame::Centered { m.alpha } else { 0.0 };
    TimeTrace::from_table(&t, TraceSource::Krylov, alpha).unwrap()
}

fn synthetic(c: impl Fn(f64) -> C64, tau: f64, n: usize) -> TimeTrace {
    let times: Vec<f64> = (0..n).map(|k| k as f64 * tau).collect();
    let c_values = times.iter().map(|&t| c(t)).collect();
    TimeTrace { times, c_values, per_site: None, source: TraceSource::Dense, alpha: 0.0 }
}

fn two_tone(tau: f64) -> TimeTrace {
    synthetic(|t| C64::from_polar(1.0, -0.4 * t) + C64::from_polar(0.6, -1.5 * t), tau, 20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..40), pad in 1usize..9, gauss in any::<bool>()) {
        let n = vals.len();
        let mut tr = synthetic(|_| C64::new(0.0, 0.0), 0.3, n);
        tr.c_values = vals.iter().map(|&(a, b)| C64::new(a, b)).collect();
        let window = if gauss { Window::Gaussian { width: 0.4 } } else { Window::None };
        let s = fourier(&tr, &FourierOptions { zero_pad_factor: pad, window, shift_alpha: false }).unwrap();
        let t_max = tr.t_max();
        let w = |t: f64| if gauss { (-0.5 * (t / (0.4 * t_max)).powi(2)).exp() } else { 1.0 };
        let time: f64 = tr.times.iter().zip(&tr.c_values).map(|(&t, c)| (w(t) * c.norm()).powi(2)).sum();
        let freq: f64 = s.magnitude.iter().map(|m| m * m).sum::<f64>() / s.omega.len() as f64;
        prop_assert!((time - freq).abs() <= 1e-10 * time.max(1.0));
    }

    #[test]
    fn cosine_is_symmetric_and_scale_free(a in 0.1f64..3.0, b in 0.1f64..3.0, w0 in -2.0f64..2.0, scale in 0.01f64..100.0) {
        let sa = fourier(&synthetic(|t| C64::from_polar(1.0, -w0 * t) * (-a * t).exp(), 0.2, 20), &FourierOptions::default()).unwrap();
        let sb = fourier(&synthetic(|t| C64::from_polar(1.0, -(w0 + 0.3) * t) * (-b * t).exp(), 0.25, 20), &FourierOptions::default()).unwrap();
        let ab = cosine_similarity(&sa, &sb, 512).unwrap();
        let ba = cosine_similarity(&sb, &sa, 512).unwrap();
        prop_assert!((ab - ba).abs() < 1e-14);
        let mut scaled = sb.clone();
        scaled.magnitude.iter_mut().for_each(|m| *m *= scale);
        prop_assert!((cosine_similarity(&sa, &scaled, 512).unwrap() - ab).abs() < 1e-12);
        prop_assert!((cosine_similarity(&sa, &sb, 1024).unwrap() - ab).abs() < 1e-3);
        prop_assert!((cosine_similarity(&sa, &sa, 512).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn on_grid_tone_and_constant() {
    let tau = 0.25;
    let opts = FourierOptions::default();
    let w0 = 2.0 * PI * 5.0 / (20.0 * 8.0 * tau);
    let s = fourier(&synthetic(|t| C64::from_polar(1.0, -w0 * t), tau, 20), &opts).unwrap();
    assert!((s.peaks()[0].omega - w0).abs() < 1e-12);
    let s = fourier(&synthetic(|_| C64::new(0.7, 0.0), tau, 20), &opts).unwrap();
    assert_eq!(s.peaks()[0].omega, 0.0);
    assert!((s.bin_width() - 2.0 * PI / (160.0 * tau)).abs() < 1e-15);
}

#[test]
fn free_precession_and_zero_signal() {
    let (alpha, n) = (0.8, 4);
    let times: Vec<f64> = (0..10).map(|k| 0.3 * k as f64).collect();
    let rows: Vec<Vec<C64>> =
        times.iter().map(|&t| (0..n).map(|j| C64::from_polar(0.4, 0.2 * j as f64 - alpha * t)).collect()).collect();
    let tr = assemble_signal(&times, &rows, TraceSource::Dense, 0.0).unwrap();
    for (t, c) in times.iter().zip(&tr.c_values) {
        assert!((c - tr.c_values[0] * C64::from_polar(1.0, -alpha * t)).norm() < 1e-14);
    }
    let zero = vec![vec![C64::new(0.0, 0.0); n]; times.len()];
    let tr = assemble_signal(&times, &zero, TraceSource::Dense, 0.0).unwrap();
    assert!(tr.c_values.iter().all(|c| c.norm() == 0.0));
    assert!(matches!(cosine_similarity(&fourier(&tr, &FourierOptions::default()).unwrap(), &fourier(&two_tone(0.3), &FourierOptions::default()).unwrap(), 512), Err(Error::ZeroNorm)));
}

#[test]
fn unquenched_ring_has_no_signal() {
    let m = model(3, SymmetryPoint::K);
    let t = krylov_evolve(&EvolutionRequest::uniform(&m, StateVector::zero_state(6), 0.2, 19), KrylovOptions::default()).unwrap();
    let tr = TimeTrace::from_table(&t, TraceSource::Krylov, m.alpha).unwrap();
    assert!(tr.c_values.iter().all(|c| c.norm() < 1e-14));
}

#[test]
fn krylov_trace_matches_dense_trace() {
    let m = model(3, SymmetryPoint::Gamma);
    let req = EvolutionRequest::uniform(&m, StateVector::quench(6, 0.3 * PI), 0.374 / 3.2, 19);
    let k = TimeTrace::from_table(&krylov_evolve(&req, KrylovOptions::default()).unwrap(), TraceSource::Krylov, m.alpha).unwrap();
    let d = TimeTrace::from_table(&dense_evolve(&req, DenseOptions::default()).unwrap(), TraceSource::Dense, m.alpha).unwrap();
    for (a, b) in k.c_values.iter().zip(&d.c_values) {
        assert!((a - b).norm() < 1e-8);
    }
}

#[test]
fn centered_and_uncentered_spectra_agree_after_shift() {
    for label in SymmetryPoint::ALL {
        let m = model(3, label);
        let tau = 0.3;
        let centered = fourier(&krylov_trace(&m, Frame::Centered, tau), &FourierOptions { shift_alpha: true, ..Default::default() }).unwrap();
        let raw = fourier(&krylov_trace(&m, Frame::Uncentered, tau), &FourierOptions::default()).unwrap();
        let (a, b) = (centered.peaks()[0].omega, raw.peaks()[0].omega);
        assert!((a - b).abs() <= raw.bin_width() + 1e-12, "{label:?}: {a} vs {b}");
    }
}

#[test]
fn disjoint_supports_give_zero() {
    let base = fourier(&two_tone(0.3), &FourierOptions::default()).unwrap();
    let mut far = base.clone();
    let span = base.omega[base.omega.len() - 1] - base.omega[0];
    far.omega.iter_mut().for_each(|w| *w += 2.0 * span);
    assert_eq!(cosine_similarity(&base, &far, 512).unwrap(), 0.0);
}

#[test]
fn damping_fit_closes_the_loop() {
    let reference = two_tone(0.225);
    let t_max = reference.t_max();
    for frac in [0.05, 0.2, 0.5] {
        let g_star = frac / t_max;
        let target = fourier(&reference.damped(g_star), &FourierOptions::default()).unwrap();
        let r = fit_damping(&reference, &target, &DampingOptions::default()).unwrap();
        assert!((r.gamma - g_star).abs() <= 0.02 * g_star, "{frac}: {} vs {g_star}", r.gamma);
        assert!(r.mismatch >= 0.0 && r.mismatch <= 2.0);
    }
    let target = fourier(&reference, &FourierOptions::default()).unwrap();
    let r = fit_damping(&reference, &target, &DampingOptions::default()).unwrap();
    assert_eq!(r.gamma, 0.0);
    assert!(r.cosine >= 1.0 - 1e-6);
    assert!(r.at_boundary);
}

#[test]
fn damping_objective_is_unimodal() {
    let reference = two_tone(0.225);
    let g_star = 0.3 / reference.t_max();
    let target = fourier(&reference.damped(g_star), &FourierOptions::default()).unwrap();
    let g_max = 4.0 / reference.t_max();
    let vals: Vec<f64> = (0..=200)
        .map(|k| {
            let g = g_max * k as f64 / 200.0;
            cosine_similarity(&fourier(&reference.damped(g), &FourierOptions::default()).unwrap(), &target, 512).unwrap()
        })
        .collect();
    let peak = (0..vals.len()).fold(0, |b, k| if vals[k] > vals[b] { k } else { b });
    assert!(vals[..=peak].windows(2).all(|w| w[1] >= w[0]));
    assert!(vals[peak..].windows(2).all(|w| w[1] <= w[0]));
}

fn noiseless_batches(shots: usize, seed: u64) -> Vec<ShotBatch> {
    let m = model(2, SymmetryPoint::M);
    let quench = prepare_quench(4, 0.3 * PI).unwrap();
    let c = build_trotter_circuit(&m, 0.225, 19, &quench, None).unwrap();
    let masks: Vec<u64> = (0..20u64).map(|k| (k * 7) % 16).collect();
    let mut out = Vec::new();
    for (i, basis) in [Basis::X, Basis::Y].into_iter().enumerate() {
        for twirl in 0..2u64 {
            let req = TimeSeriesRequest {
                circuit: &c,
                basis,
                masks: &masks,
                noise: &NoisePreset::noiseless(),
                shots,
                shots_per_trajectory: 1,
                seed: seed * 100 + 10 * i as u64 + twirl,
            };
            let mut batches = run_time_series(&req).unwrap();
            for (k, b) in batches.iter_mut().enumerate() {
                b.time_index = Some(k);
            }
            out.extend(batches);
        }
    }
    out
}

fn band_width(s: &Spectrum) -> f64 {
    let (lo, hi) = (s.band_lo.as_ref().unwrap(), s.band_hi.as_ref().unwrap());
    lo.iter().zip(hi).map(|(l, h)| h - l).sum::<f64>() / lo.len() as f64
}

#[test]
fn bootstrap_band_shrinks_with_shots() {
    let cal = TrexCalibration::identity(4);
    let opts = BootstrapOptions { n_resamples: 200, seed: 3, ..Default::default() };
    let widths: Vec<f64> = [128usize, 512, 2048]
        .iter()
        .map(|&s| band_width(&bootstrap_band(&noiseless_batches(s, 1), &cal, 0.225, 0.0, &FourierOptions::default(), &opts).unwrap()))
        .collect();
    for w in widths.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..=2.5).contains(&ratio), "ratio {ratio} from {widths:?}");
    }
}

#[test]
fn deterministic_shots_give_zero_width() {
    // Every shot of a cell is identical, as in the infinite-shot limit of a
    // computational-basis state.
    let mut batches = noiseless_batches(16, 2);
    for b in &mut batches {
        let first = (b.bits[0], b.trex_masks[0]);
        b.bits.iter_mut().for_each(|x| *x = first.0);
        b.trex_masks.iter_mut().for_each(|x| *x = first.1);
    }
    let s = bootstrap_band(&batches, &TrexCalibration::identity(4), 0.225, 0.0, &FourierOptions::default(), &BootstrapOptions::default()).unwrap();
    assert_eq!(s.max_band_width(), Some(0.0));
    let s2 = bootstrap_band(&batches, &TrexCalibration::identity(4), 0.225, 0.0, &FourierOptions::default(), &BootstrapOptions::default()).unwrap();
    assert_eq!(s, s2);
}
