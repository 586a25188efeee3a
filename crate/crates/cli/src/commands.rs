//! Subcommand implementations. Each returns the manifest and the files it wrote.

use std::path::PathBuf;
use std::time::Instant;

use magnon_core::circuits::StepStats;
use magnon_core::hamiltonian::{lie_trotter_error_estimate, one_magnon_band, AChoice, EffectiveRingModel, TrotterErrorEstimate};
use magnon_core::lattice::{high_symmetry_point, LatticeSpec, SymmetryPoint, WaveVector};
use magnon_core::spectra::{fourier, Peak, SimilarityReport, Spectrum, TimeTrace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Backend, Job, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{Laps, RunManifest};
use crate::output::{num, opt_num, OutputDir};
use crate::pipeline::{self, Accounting, Evolution};

/// Stated with every scaling report.
pub const SCALING_NOTE: &str = "Wall times are local emulation compute only (serialization excluded). \
A quantum processor runs a fixed number of circuits and shots per q point, so its wall time stays \
approximately constant in N; that constancy is a hardware property and cannot be reproduced by a \
classical emulator, whose cost grows with the 2^N state dimension.";

pub struct CommandOutput {
    pub manifest: RunManifest,
    pub files: Vec<PathBuf>,
    /// Human-readable summary, one line per job.
    pub lines: Vec<String>,
}

struct Session {
    manifest: RunManifest,
    out: OutputDir,
    lines: Vec<String>,
}

impl Session {
    fn open(command: &str, cfg: &RunConfig, jobs: &[Job]) -> CliResult<Self> {
        let manifest = RunManifest::new(command, cfg, jobs);
        let out = OutputDir::create(&cfg.output_dir, &manifest.hash)?;
        Ok(Self { manifest, out, lines: Vec::new() })
    }

    fn record_laps(&mut self, job: usize, laps: &Laps) {
        for (stage, t) in &laps.laps {
            self.manifest.record(Some(job), stage, *t);
        }
    }

    fn finish(mut self, serialization: Instant) -> CliResult<CommandOutput> {
        self.manifest.serialization_s = serialization.elapsed().as_secs_f64();
        let name = format!("manifest_{}.json", self.manifest.command);
        let manifest = self.manifest.clone();
        self.out.raw_json(&name, &manifest)?;
        Ok(CommandOutput { manifest: self.manifest, files: self.out.written, lines: self.lines })
    }
}

fn prepared(cfg: &RunConfig) -> CliResult<Vec<Job>> {
    cfg.validate()?;
    cfg.jobs()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRecord {
    pub material: String,
    pub a_choice: AChoice,
    /// On-site coupling A (meV).
    pub a_onsite: f64,
    /// Inter-center coupling a (meV).
    pub a: f64,
    pub heisenberg_j: f64,
    pub q_name: String,
    pub n_sites: usize,
    pub tau: f64,
    pub n_steps: usize,
    pub one_magnon_band: Vec<f64>,
    pub trotter_error: TrotterErrorEstimate,
    pub step_stats: Option<StepStats>,
    pub model: EffectiveRingModel,
}

pub fn model_record(cfg: &RunConfig, job: &Job) -> CliResult<ModelRecord> {
    let model = pipeline::build_model(cfg, job)?;
    let preset = cfg.preset()?;
    let step_stats = pipeline::trotter_circuit(cfg, job, &model)?.metadata.step_stats;
    Ok(ModelRecord {
        material: preset.material.to_string(),
        a_choice: cfg.a_choice,
        a_onsite: preset.a_onsite,
        a: preset.a(cfg.a_choice),
        heisenberg_j: preset.heisenberg_j(cfg.a_choice),
        q_name: job.q_name.clone(),
        n_sites: job.n_sites(),
        tau: job.tau,
        n_steps: cfg.n_steps,
        one_magnon_band: one_magnon_band(&model),
        trotter_error: lie_trotter_error_estimate(&model, job.tau, cfg.n_steps, cfg.trotter_norm),
        step_stats,
        model,
    })
}

pub fn cmd_model(cfg: &RunConfig) -> CliResult<CommandOutput> {
    let jobs = prepared(cfg)?;
    let mut s = Session::open("model", cfg, &jobs)?;
    let records: Vec<(ModelRecord, Laps)> = jobs
        .par_iter()
        .map(|job| {
            let mut laps = Laps::start();
            let r = model_record(cfg, job)?;
            laps.lap("model");
            Ok((r, laps))
        })
        .collect::<CliResult<_>>()?;
    let t = Instant::now();
    for (job, (r, laps)) in jobs.iter().zip(&records) {
        s.record_laps(job.index, laps);
        s.out.json(&format!("model_{}.json", job.tag()), r)?;
        s.lines.push(format!(
            "{}: N={} tau={:.6} eps_LT={:.3} ({:?}) CZ/step={}",
            job.q_name,
            job.n_sites(),
            job.tau,
            r.trotter_error.epsilon,
            r.trotter_error.convention,
            r.step_stats.map_or(0, |st| st.cz_per_step)
        ));
    }
    s.finish(t)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub q_name: String,
    pub n_sites: usize,
    pub backend: Backend,
    pub tau: f64,
    pub noise_preset: Option<String>,
    pub accounting: Option<Accounting>,
    pub step_stats: Option<StepStats>,
    pub trace: TimeTrace,
}

fn trace_record(cfg: &RunConfig, job: &Job, backend: Backend, evo: &Evolution) -> TraceRecord {
    TraceRecord {
        q_name: job.q_name.clone(),
        n_sites: job.n_sites(),
        backend,
        tau: job.tau,
        noise_preset: evo.noisy.as_ref().map(|_| cfg.noisy.preset.clone()),
        accounting: evo.noisy.as_ref().map(|r| r.accounting),
        step_stats: evo.step_stats,
        trace: evo.trace.clone(),
    }
}

fn trace_rows(trace: &TimeTrace) -> Vec<Vec<String>> {
    trace.times.iter().zip(&trace.c_values).map(|(t, c)| vec![num(*t), num(c.re), num(c.im)]).collect()
}

/// Runs model + backend for every job; laps are "model" and "evolve".
fn run_jobs(cfg: &RunConfig, jobs: &[Job], backend: Backend) -> CliResult<Vec<(EffectiveRingModel, Evolution, Laps)>> {
    jobs.par_iter()
        .map(|job| {
            let mut laps = Laps::start();
            let model = pipeline::build_model(cfg, job)?;
            laps.lap("model");
            let evo = pipeline::evolve(cfg, job, &model, backend)?;
            laps.lap("evolve");
            Ok((model, evo, laps))
        })
        .collect()
}

fn accounting_line(a: &Accounting) -> String {
    format!(
        "{} settings x {} time points x {} twirls = {} executions at {} shots",
        a.measurement_settings, a.time_points, a.twirls, a.executions, a.shots_per_execution
    )
}

pub fn cmd_evolve(cfg: &RunConfig) -> CliResult<CommandOutput> {
    let jobs = prepared(cfg)?;
    let mut s = Session::open("evolve", cfg, &jobs)?;
    let results = run_jobs(cfg, &jobs, cfg.backend)?;
    let t = Instant::now();
    for (job, (_, evo, laps)) in jobs.iter().zip(&results) {
        s.record_laps(job.index, laps);
        let stem = format!("trace_{}_{}", job.tag(), cfg.backend.as_str());
        s.out.csv(&format!("{stem}.csv"), &["t", "c_re", "c_im"], &trace_rows(&evo.trace))?;
        s.out.json(&format!("{stem}.json"), &trace_record(cfg, job, cfg.backend, evo))?;
        let mut line = format!("{}: N={} {} samples", job.q_name, job.n_sites(), evo.trace.len());
        if let Some(r) = &evo.noisy {
            line += &format!("; {}", accounting_line(&r.accounting));
        }
        s.lines.push(line);
    }
    s.finish(t)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub q_name: String,
    pub n_sites: usize,
    pub backend: Backend,
    pub bin_width: f64,
    pub dominant_peak_fraction: f64,
    pub dominant_peaks: Vec<Peak>,
    /// Distinct one-magnon levels on the same frequency axis.
    pub oracle_frequencies: Vec<f64>,
    pub accounting: Option<Accounting>,
    pub spectrum: Spectrum,
}

fn spectrum_rows(sp: &Spectrum) -> Vec<Vec<String>> {
    (0..sp.omega.len())
        .map(|i| {
            vec![
                num(sp.omega[i]),
                num(sp.magnitude[i]),
                opt_num(sp.band_lo.as_ref().map(|b| b[i])),
                opt_num(sp.band_hi.as_ref().map(|b| b[i])),
            ]
        })
        .collect()
}

pub fn spectrum_record(cfg: &RunConfig, job: &Job, model: &EffectiveRingModel, evo: &Evolution) -> CliResult<SpectrumRecord> {
    let sp = pipeline::spectrum(cfg, job, evo)?;
    let fraction = cfg.spectrum.dominant_peak_fraction;
    Ok(SpectrumRecord {
        q_name: job.q_name.clone(),
        n_sites: job.n_sites(),
        backend: cfg.backend,
        bin_width: sp.bin_width(),
        dominant_peak_fraction: fraction,
        dominant_peaks: sp.dominant_peaks(fraction),
        oracle_frequencies: pipeline::oracle_frequencies(model, sp.shift),
        accounting: evo.noisy.as_ref().map(|r| r.accounting),
        spectrum: sp,
    })
}

pub fn cmd_spectrum(cfg: &RunConfig) -> CliResult<CommandOutput> {
    let jobs = prepared(cfg)?;
    let mut s = Session::open("spectrum", cfg, &jobs)?;
    let mut results = run_jobs(cfg, &jobs, cfg.backend)?;
    let records: Vec<SpectrumRecord> = jobs
        .iter()
        .zip(&mut results)
        .map(|(job, (model, evo, laps))| {
            let r = spectrum_record(cfg, job, model, evo);
            laps.lap("spectrum");
            r
        })
        .collect::<CliResult<_>>()?;
    let t = Instant::now();
    for ((job, (_, _, laps)), r) in jobs.iter().zip(&results).zip(&records) {
        s.record_laps(job.index, laps);
        let stem = format!("spectrum_{}_{}", job.tag(), cfg.backend.as_str());
        s.out.csv(&format!("{stem}.csv"), &["omega", "magnitude", "band_lo", "band_hi"], &spectrum_rows(&r.spectrum))?;
        s.out.json(&format!("{stem}.json"), r)?;
        let peaks: Vec<String> = r.dominant_peaks.iter().map(|p| format!("{:.4}", p.omega)).collect();
        let oracle: Vec<String> = r.oracle_frequencies.iter().map(|w| format!("{w:.4}")).collect();
        s.lines.push(format!(
            "{}: N={} peaks [{}] meV, one-magnon levels [{}] meV, bin {:.4}",
            job.q_name,
            job.n_sites(),
            peaks.join(", "),
            oracle.join(", "),
            r.bin_width
        ));
    }
    s.finish(t)
}

/// Krylov spectra along Γ → K → M → Γ with `per_segment` points per leg, at
/// the first configured ring size, all with the custom time step.
pub fn cmd_qpath(cfg: &RunConfig, per_segment: usize) -> CliResult<CommandOutput> {
    cfg.validate()?;
    if per_segment == 0 {
        return Err(CliError::Config("q path needs at least one point per segment".into()));
    }
    let lat = LatticeSpec::default();
    let corners: Vec<WaveVector> =
        [SymmetryPoint::Gamma, SymmetryPoint::K, SymmetryPoint::M, SymmetryPoint::Gamma].iter().map(|&p| high_symmetry_point(p, &lat)).collect();
    let mut path = Vec::new();
    for w in corners.windows(2) {
        for i in 0..per_segment {
            let f = i as f64 / per_segment as f64;
            path.push(WaveVector::custom(w[0].qx + f * (w[1].qx - w[0].qx), w[0].qy + f * (w[1].qy - w[0].qy)));
        }
    }
    path.push(corners[3]);
    let n_cells = cfg.n_cells[0];
    let tau = cfg.tau.custom / cfg.a()?;
    let jobs: Vec<Job> = path
        .iter()
        .enumerate()
        .map(|(i, q)| Job { index: i, q_name: format!("path{i}"), q: *q, n_cells, tau, seed: cfg.seed })
        .collect();
    let mut s = Session::open("qpath", cfg, &jobs)?;
    let spectra: Vec<Spectrum> = jobs
        .par_iter()
        .map(|job| {
            let model = pipeline::build_model(cfg, job)?;
            let evo = pipeline::evolve(cfg, job, &model, Backend::Krylov)?;
            Ok(fourier(&evo.trace, &cfg.spectrum.fourier)?)
        })
        .collect::<CliResult<_>>()?;
    let t = Instant::now();
    let mut rows = Vec::new();
    for (job, sp) in jobs.iter().zip(&spectra) {
        for (w, m) in sp.omega.iter().zip(&sp.magnitude) {
            rows.push(vec![job.index.to_string(), num(job.q.qx), num(job.q.qy), num(*w), num(*m)]);
        }
    }
    s.out.csv(&format!("qpath_n{}.csv", 2 * n_cells), &["path_index", "qx", "qy", "omega", "magnitude"], &rows)?;
    s.lines.push(format!("{} q points at N={}", jobs.len(), 2 * n_cells));
    s.finish(t)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRecord {
    pub q_name: String,
    pub n_sites: usize,
    pub backend: Backend,
    pub reference_backend: Backend,
    pub report: SimilarityReport,
}

pub fn compare_job(cfg: &RunConfig, job: &Job) -> CliResult<(CompareRecord, Laps)> {
    let mut laps = Laps::start();
    let model = pipeline::build_model(cfg, job)?;
    laps.lap("model");
    let reference = pipeline::evolve(cfg, job, &model, cfg.reference_backend)?;
    laps.lap("reference");
    let target = if cfg.backend == cfg.reference_backend { None } else { Some(pipeline::evolve(cfg, job, &model, cfg.backend)?) };
    laps.lap("evolve");
    let spectrum = pipeline::spectrum(cfg, job, target.as_ref().unwrap_or(&reference))?;
    laps.lap("spectrum");
    let report = pipeline::compare(cfg, &reference.trace, &spectrum)?;
    laps.lap("compare");
    let record = CompareRecord {
        q_name: job.q_name.clone(),
        n_sites: job.n_sites(),
        backend: cfg.backend,
        reference_backend: cfg.reference_backend,
        report,
    };
    Ok((record, laps))
}

pub fn cmd_compare(cfg: &RunConfig) -> CliResult<CommandOutput> {
    let jobs = prepared(cfg)?;
    let mut s = Session::open("compare", cfg, &jobs)?;
    let results: Vec<(CompareRecord, Laps)> = jobs.par_iter().map(|job| compare_job(cfg, job)).collect::<CliResult<_>>()?;
    let t = Instant::now();
    let mut rows = Vec::new();
    for (job, (r, laps)) in jobs.iter().zip(&results) {
        s.record_laps(job.index, laps);
        s.out.json(&format!("compare_{}_{}.json", job.tag(), cfg.backend.as_str()), r)?;
        let rep = &r.report;
        rows.push(vec![
            r.q_name.clone(),
            r.n_sites.to_string(),
            r.backend.as_str().into(),
            r.reference_backend.as_str().into(),
            num(rep.cosine),
            num(rep.mismatch),
            num(rep.gamma),
            num(rep.gamma_max),
            rep.at_boundary.to_string(),
        ]);
        s.lines.push(format!(
            "{}: N={} cosine={:.5} mismatch={:.5} gamma={:.5}{}",
            r.q_name,
            r.n_sites,
            rep.cosine,
            rep.mismatch,
            rep.gamma,
            if rep.at_boundary { " (boundary)" } else { "" }
        ));
    }
    let header = ["q", "n_sites", "backend", "reference", "cosine", "mismatch", "gamma", "gamma_max", "at_boundary"];
    s.out.csv(&format!("compare_{}.csv", cfg.backend.as_str()), &header, &rows)?;
    s.finish(t)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRow {
    pub backend: Backend,
    pub n_sites: usize,
    pub model_s: f64,
    pub evolve_s: f64,
    pub spectrum_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub q_points: Vec<String>,
    pub rows: Vec<ScalingRow>,
    /// Per backend: does total wall time strictly increase with N?
    pub strictly_increasing: Vec<(Backend, bool)>,
    pub note: String,
}

/// Wall time of a full spectrum (all configured q points) per ring size.
/// Jobs run one at a time so the timings are not shared between workers.
pub fn cmd_scaling(cfg: &RunConfig) -> CliResult<(CommandOutput, ScalingReport)> {
    cfg.validate()?;
    if cfg.scaling.n_cells.is_empty() || cfg.scaling.backends.is_empty() {
        return Err(CliError::Config("scaling needs ring sizes and backends".into()));
    }
    let jobs = cfg.jobs_for(&cfg.scaling.n_cells)?;
    let mut s = Session::open("scaling", cfg, &jobs)?;
    let mut rows = Vec::new();
    for &backend in &cfg.scaling.backends {
        for &nc in &cfg.scaling.n_cells {
            let mut row = ScalingRow { backend, n_sites: 2 * nc, model_s: 0.0, evolve_s: 0.0, spectrum_s: 0.0, total_s: 0.0 };
            for job in jobs.iter().filter(|j| j.n_cells == nc) {
                let mut laps = Laps::start();
                let model = pipeline::build_model(cfg, job)?;
                laps.lap("model");
                let evo = pipeline::evolve(cfg, job, &model, backend)?;
                laps.lap("evolve");
                pipeline::spectrum(cfg, job, &evo)?;
                laps.lap("spectrum");
                row.model_s += laps.laps[0].1;
                row.evolve_s += laps.laps[1].1;
                row.spectrum_s += laps.laps[2].1;
                row.total_s += laps.total();
                s.record_laps(job.index, &laps);
            }
            rows.push(row);
        }
    }
    let strictly_increasing = cfg
        .scaling
        .backends
        .iter()
        .map(|&b| {
            let t: Vec<f64> = rows.iter().filter(|r| r.backend == b).map(|r| r.total_s).collect();
            (b, t.windows(2).all(|w| w[1] > w[0]))
        })
        .collect();
    let report = ScalingReport {
        q_points: cfg.wave_vectors()?.into_iter().map(|(n, _)| n).collect(),
        rows,
        strictly_increasing,
        note: SCALING_NOTE.into(),
    };
    let t = Instant::now();
    let csv_rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![r.backend.as_str().into(), r.n_sites.to_string(), num(r.model_s), num(r.evolve_s), num(r.spectrum_s), num(r.total_s)]
        })
        .collect();
    s.out.csv("scaling.csv", &["backend", "n_sites", "model_s", "evolve_s", "spectrum_s", "total_s"], &csv_rows)?;
    s.out.json("scaling.json", &report)?;
    for r in &report.rows {
        s.lines.push(format!("{} N={}: {:.3} s", r.backend.as_str(), r.n_sites, r.total_s));
    }
    s.lines.push(SCALING_NOTE.into());
    Ok((s.finish(t)?, report))
}

pub fn cmd_defaults() -> CliResult<String> {
    Ok(serde_json::to_string_pretty(&RunConfig::default())?)
}
