//! Backends behind `evolve`, `spectrum` and `compare`, one (q, N) job at a time.

use magnon_core::circuits::{build_trotter_circuit, pauli_twirl, prepare_quench, Basis, Circuit, StepStats};
use magnon_core::hamiltonian::{assemble_effective_ring, one_magnon_band, EffectiveRingModel};
use magnon_core::lattice::{build_supercell_chain, LatticeSpec};
use magnon_core::propagators::{dense_evolve, krylov_evolve, DenseOptions, EvolutionRequest, KrylovOptions, StateVector};
use magnon_core::simulator::{
    calibrate_trex, estimate_observables, exact_time_series, run_time_series, ShotBatch, TimeSeriesRequest,
    TrexCalibration,
};
use magnon_core::spectra::{
    assemble_signal, bootstrap_band, fit_damping, fourier, BootstrapOptions, SimilarityReport, Spectrum, TimeTrace,
    TraceSource,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Backend, Job, RunConfig};
use crate::error::CliResult;
use crate::manifest::derive_seed;

/// Levels closer than this are merged when listing oracle frequencies.
const LEVEL_MERGE_TOL: f64 = 1e-9;

pub fn build_model(cfg: &RunConfig, job: &Job) -> CliResult<EffectiveRingModel> {
    let chain = build_supercell_chain(job.n_cells, &LatticeSpec::default())?;
    Ok(assemble_effective_ring(&chain, &cfg.preset()?, &job.q, cfg.a_choice)?)
}

pub fn trotter_circuit(cfg: &RunConfig, job: &Job, model: &EffectiveRingModel) -> CliResult<Circuit> {
    let quench = prepare_quench(model.n_sites, cfg.quench_angle)?;
    Ok(build_trotter_circuit(model, job.tau, cfg.n_steps, &quench, None)?)
}

/// Circuit-execution bookkeeping of a noisy run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accounting {
    pub measurement_settings: usize,
    pub time_points: usize,
    pub twirls: usize,
    pub executions: usize,
    pub shots_per_execution: usize,
    pub total_shots: usize,
    pub shots_per_trajectory: usize,
    pub calibration_shots: usize,
}

pub struct NoisyRun {
    pub batches: Vec<ShotBatch>,
    pub calibration: TrexCalibration,
    pub accounting: Accounting,
}

pub struct Evolution {
    pub trace: TimeTrace,
    pub noisy: Option<NoisyRun>,
    pub step_stats: Option<StepStats>,
}

pub fn accounting(cfg: &RunConfig) -> Accounting {
    let n = &cfg.noisy;
    let executions = 2 * (cfg.n_steps + 1) * n.twirls;
    Accounting {
        measurement_settings: 2,
        time_points: cfg.n_steps + 1,
        twirls: n.twirls,
        executions,
        shots_per_execution: n.shots,
        total_shots: executions * n.shots,
        shots_per_trajectory: n.shots_per_trajectory,
        calibration_shots: n.calibration_shots,
    }
}

fn exact_trace(cfg: &RunConfig, job: &Job, model: &EffectiveRingModel, backend: Backend) -> CliResult<TimeTrace> {
    let req = EvolutionRequest::uniform(model, StateVector::quench(model.n_sites, cfg.quench_angle), job.tau, cfg.n_steps);
    let (table, source) = match backend {
        Backend::Dense => (dense_evolve(&req, DenseOptions::default())?, TraceSource::Dense),
        _ => (krylov_evolve(&req, KrylovOptions::default())?, TraceSource::Krylov),
    };
    Ok(TimeTrace::from_table(&table, source, model.alpha)?)
}

fn noisy_run(cfg: &RunConfig, job: &Job, circuit: &Circuit) -> CliResult<NoisyRun> {
    let noise = cfg.noise()?;
    let n = circuit.n_qubits;
    let full = (1u64 << n) - 1;
    let nc = &cfg.noisy;
    let twirled: Vec<Circuit> = (0..nc.twirls)
        .map(|t| pauli_twirl(circuit, derive_seed(job.seed, &format!("twirl/{t}"))))
        .collect::<magnon_core::Result<_>>()?;
    let tasks: Vec<(usize, Basis)> = (0..nc.twirls).flat_map(|t| [(t, Basis::X), (t, Basis::Y)]).collect();
    let per_task: Vec<Vec<ShotBatch>> = tasks
        .par_iter()
        .map(|&(t, basis)| {
            let masks: Vec<u64> = (0..circuit.barriers.len())
                .map(|k| derive_seed(job.seed, &format!("trex/{t}/{}/{k}", basis.as_str())) & full)
                .collect();
            run_time_series(&TimeSeriesRequest {
                circuit: &twirled[t],
                basis,
                masks: &masks,
                noise: &noise,
                shots: nc.shots,
                shots_per_trajectory: nc.shots_per_trajectory,
                seed: derive_seed(job.seed, &format!("shots/{t}/{}", basis.as_str())),
            })
        })
        .collect::<magnon_core::Result<_>>()?;
    let calibration = calibrate_trex(&noise, n, nc.calibration_shots, derive_seed(job.seed, "calibration"))?;
    Ok(NoisyRun { batches: per_task.into_iter().flatten().collect(), calibration, accounting: accounting(cfg) })
}

pub fn evolve(cfg: &RunConfig, job: &Job, model: &EffectiveRingModel, backend: Backend) -> CliResult<Evolution> {
    match backend {
        Backend::Krylov | Backend::Dense => {
            Ok(Evolution { trace: exact_trace(cfg, job, model, backend)?, noisy: None, step_stats: None })
        }
        Backend::Statevector => {
            let c = trotter_circuit(cfg, job, model)?;
            let series = exact_time_series(&c)?;
            let times: Vec<f64> = (0..series.len()).map(|k| k as f64 * job.tau).collect();
            let rows: Vec<_> = series.iter().map(|e| e.s_plus()).collect();
            let trace = assemble_signal(&times, &rows, TraceSource::QuantumSim, model.alpha)?;
            Ok(Evolution { trace, noisy: None, step_stats: c.metadata.step_stats })
        }
        Backend::Noisy => {
            let c = trotter_circuit(cfg, job, model)?;
            let run = noisy_run(cfg, job, &c)?;
            let est = estimate_observables(&run.batches, Some(&run.calibration))?;
            let trace = TimeTrace::from_estimates(&est, job.tau, model.alpha)?;
            Ok(Evolution { trace, noisy: Some(run), step_stats: c.metadata.step_stats })
        }
    }
}

/// Spectrum of an evolution; noisy runs get bootstrap bands when configured.
pub fn spectrum(cfg: &RunConfig, job: &Job, evo: &Evolution) -> CliResult<Spectrum> {
    let opts = &cfg.spectrum.fourier;
    match (&evo.noisy, &cfg.spectrum.bootstrap) {
        (Some(run), Some(b)) => {
            let b = BootstrapOptions { seed: derive_seed(job.seed, "bootstrap"), ..*b };
            Ok(bootstrap_band(&run.batches, &run.calibration, job.tau, evo.trace.alpha, opts, &b)?)
        }
        _ => Ok(fourier(&evo.trace, opts)?),
    }
}

/// Distinct one-magnon frequencies of the model on the spectrum's axis.
pub fn oracle_frequencies(model: &EffectiveRingModel, shift: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for l in one_magnon_band(model) {
        if out.last().map_or(true, |p| l - p > LEVEL_MERGE_TOL) {
            out.push(l);
        }
    }
    out.iter().map(|l| l - shift).collect()
}

/// Damping-fit similarity of `target` against the noiseless `reference` trace.
pub fn compare(cfg: &RunConfig, reference: &TimeTrace, target: &Spectrum) -> CliResult<SimilarityReport> {
    Ok(fit_damping(reference, target, &cfg.spectrum.damping)?)
}
