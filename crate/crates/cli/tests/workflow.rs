use std::path::Path;
use std::process::Command;

use magnon_cli::commands::{cmd_compare, cmd_evolve, cmd_model, cmd_scaling, cmd_spectrum, SCALING_NOTE};
use magnon_cli::config::{QSpec, ScalingConfig};
use magnon_cli::pipeline::accounting;
use magnon_cli::{Backend, RunConfig};
use proptest::prelude::*;

fn cfg(dir: &Path, q: &str, n_cells: usize, backend: Backend) -> RunConfig {
    RunConfig {
        q_points: vec![QSpec::Label(q.into())],
        n_cells: vec![n_cells],
        backend,
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn magnon(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_magnon")).args(args).env("MAGNON_OUT", out).output().unwrap()
}

#[test]
fn gamma_model_has_no_cross_terms() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_model(&cfg(dir.path(), "gamma", 3, Backend::Krylov)).unwrap();
    let v = read_json(&dir.path().join("model_gamma_n6.json"));
    let bonds = v["data"]["model"]["bonds"].as_array().unwrap();
    assert_eq!(bonds.len(), 6);
    assert!(bonds.iter().all(|b| b["j_cross"].as_f64().unwrap() == 0.0));
    assert_eq!(v["manifest_sha256"], out.manifest.hash.as_str());
}

#[test]
fn model_echoes_onsite_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let c = RunConfig { material: "CrCl3".into(), ..cfg(dir.path(), "k", 2, Backend::Krylov) };
    cmd_model(&c).unwrap();
    let v = read_json(&dir.path().join("model_k_n4.json"));
    assert_eq!(v["data"]["a_onsite"].as_f64(), Some(443.8));
    assert_eq!(v["data"]["material"], "CrCl3");
}

#[test]
fn krylov_trace_has_twenty_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_evolve(&cfg(dir.path(), "gamma", 6, Backend::Krylov)).unwrap();
    let text = std::fs::read_to_string(dir.path().join("trace_gamma_n12_krylov.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], format!("# manifest_sha256={}", out.manifest.hash));
    assert_eq!(lines[1], "t,c_re,c_im");
    assert_eq!(lines.len() - 2, 20);
}

#[test]
fn same_seed_gives_identical_files() {
    let small = |dir: &Path| {
        let mut c = cfg(dir, "m", 2, Backend::Noisy);
        c.noisy.twirls = 2;
        c.noisy.shots = 64;
        c.noisy.shots_per_trajectory = 8;
        c.noisy.calibration_shots = 256;
        c.spectrum.bootstrap.as_mut().unwrap().n_resamples = 20;
        c
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let oa = cmd_spectrum(&small(a.path())).unwrap();
    let ob = cmd_spectrum(&small(b.path())).unwrap();
    assert_eq!(oa.manifest.hash, ob.manifest.hash);
    for f in &oa.files {
        let name = f.file_name().unwrap();
        if name.to_string_lossy().starts_with("manifest") {
            continue;
        }
        assert_eq!(std::fs::read(f).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
    let mut other = small(a.path());
    other.seed += 1;
    let oc = cmd_spectrum(&other).unwrap();
    assert_ne!(oc.manifest.hash, oa.manifest.hash);
}

#[test]
fn every_output_references_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_spectrum(&cfg(dir.path(), "k", 2, Backend::Statevector)).unwrap();
    for f in &out.files {
        let text = std::fs::read_to_string(f).unwrap();
        assert!(text.contains(&out.manifest.hash), "{f:?}");
    }
    let csv = std::fs::read_to_string(dir.path().join("spectrum_k_n4_statevector.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("omega,magnitude,band_lo,band_hi"));
}

#[test]
fn gamma_spectrum_has_one_dominant_low_peak() {
    let dir = tempfile::tempdir().unwrap();
    cmd_spectrum(&cfg(dir.path(), "gamma", 6, Backend::Krylov)).unwrap();
    let v = read_json(&dir.path().join("spectrum_gamma_n12_krylov.json"));
    let peaks = v["data"]["dominant_peaks"].as_array().unwrap();
    assert_eq!(peaks.len(), 1);
    let w = peaks[0]["omega"].as_f64().unwrap();
    let bin = v["data"]["bin_width"].as_f64().unwrap();
    let levels: Vec<f64> = v["data"]["oracle_frequencies"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let nearest = levels.iter().map(|l| (l - w).abs()).fold(f64::INFINITY, f64::min);
    assert!(nearest <= bin, "{w} vs {levels:?}");
    let mid = 0.5 * (levels[0] + levels[levels.len() - 1]);
    assert!(w < mid);
}

#[test]
fn zero_quench_gives_flat_zero_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let c = RunConfig { quench_angle: 0.0, ..cfg(dir.path(), "m", 3, Backend::Krylov) };
    cmd_spectrum(&c).unwrap();
    let v = read_json(&dir.path().join("spectrum_m_n6_krylov.json"));
    let mags = v["data"]["spectrum"]["magnitude"].as_array().unwrap();
    assert!(mags.iter().all(|m| m.as_f64().unwrap() == 0.0));
    assert!(v["data"]["dominant_peaks"].as_array().unwrap().is_empty());
}

#[test]
fn identical_inputs_compare_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_compare(&cfg(dir.path(), "k", 3, Backend::Krylov)).unwrap();
    assert_eq!(out.lines.len(), 1);
    let v = read_json(&dir.path().join("compare_k_n6_krylov.json"));
    let r = &v["data"]["report"];
    assert!(r["mismatch"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["gamma"].as_f64(), Some(0.0));
}

#[test]
fn trotter_target_compares_well() {
    let dir = tempfile::tempdir().unwrap();
    cmd_compare(&cfg(dir.path(), "gamma", 3, Backend::Statevector)).unwrap();
    let v = read_json(&dir.path().join("compare_gamma_n6_statevector.json"));
    assert!(v["data"]["report"]["cosine"].as_f64().unwrap() > 0.95);
}

#[test]
fn default_protocol_accounting() {
    let a = accounting(&RunConfig::default());
    assert_eq!((a.measurement_settings, a.time_points, a.twirls), (2, 20, 16));
    assert_eq!(a.executions, 640);
    assert_eq!(a.shots_per_execution, 512);
}

#[test]
fn scaling_stages_sum_to_total() {
    let dir = tempfile::tempdir().unwrap();
    let c = RunConfig {
        scaling: ScalingConfig { n_cells: vec![2, 4, 6], backends: vec![Backend::Krylov, Backend::Statevector] },
        ..cfg(dir.path(), "m", 2, Backend::Krylov)
    };
    let (out, report) = cmd_scaling(&c).unwrap();
    assert_eq!(report.rows.len(), 6);
    for r in &report.rows {
        let sum = r.model_s + r.evolve_s + r.spectrum_s;
        assert!((sum - r.total_s).abs() <= 0.01 * r.total_s, "{sum} vs {}", r.total_s);
    }
    assert_eq!(report.note, SCALING_NOTE);
    let csv = std::fs::read_to_string(dir.path().join("scaling.csv")).unwrap();
    assert!(csv.contains(&out.manifest.hash));
}

#[test]
fn binary_exit_codes_and_env_output() {
    let dir = tempfile::tempdir().unwrap();
    let ok = magnon(&["--q", "k", "--n-cells", "2", "model"], dir.path());
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("model_k_n4.json").exists());
    assert_eq!(magnon(&["--material", "CrXX", "model"], dir.path()).status.code(), Some(2));
    assert_eq!(magnon(&["--q", "x", "model"], dir.path()).status.code(), Some(2));
    assert_eq!(magnon(&["--n-cells", "7", "--q", "m", "--backend", "dense", "evolve"], dir.path()).status.code(), Some(3));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n_step": 4}"#).unwrap();
    assert_eq!(magnon(&["--config", bad.to_str().unwrap(), "model"], dir.path()).status.code(), Some(2));
}

#[test]
fn defaults_roundtrip_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out = magnon(&["defaults"], dir.path());
    assert!(out.status.success());
    let parsed = RunConfig::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(parsed, RunConfig::default());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn config_json_roundtrips(seed in any::<u64>(), cells in proptest::collection::vec(1usize..12, 1..4), twirls in 1usize..64) {
        let mut c = RunConfig { seed, n_cells: cells, ..RunConfig::default() };
        c.noisy.twirls = twirls;
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn job_seeds_are_distinct(seed in any::<u64>()) {
        let c = RunConfig { seed, n_cells: vec![2, 3, 9], ..RunConfig::default() };
        let jobs = c.jobs().unwrap();
        let mut seeds: Vec<u64> = jobs.iter().map(|j| j.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        prop_assert_eq!(seeds.len(), jobs.len());
    }
}
