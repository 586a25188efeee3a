//! Run manifests and the content hash every output file carries.

use std::time::Instant;

use magnon_core::hamiltonian::NormConvention;
use magnon_core::lattice::{high_symmetry_point, LatticeSpec, SymmetryPoint, WaveVector};
use magnon_core::simulator::presets_version;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Job, RunConfig};

/// 64-bit seed from SHA-256(master ‖ tag).
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(tag.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftwareInfo {
    pub name: String,
    pub version: String,
    pub noise_presets_version: u32,
}

impl SoftwareInfo {
    pub fn current() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            noise_presets_version: presets_version(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub lattice: LatticeSpec,
    pub bz_points: Vec<WaveVector>,
    pub ring_fold: String,
    pub depolarizing: String,
    pub signal: String,
    pub frequency_axis: String,
    pub trotter_norm: NormConvention,
    pub units: String,
}

impl Conventions {
    pub fn new(trotter_norm: NormConvention) -> Self {
        let lattice = LatticeSpec::default();
        let bz_points = SymmetryPoint::ALL.iter().map(|&p| high_symmetry_point(p, &lattice)).collect();
        Self {
            lattice,
            bz_points,
            ring_fold: "bond A_j->B_j carries {d1 (label a), d3 (label c)}; bond B_j->A_j+1 carries -d2 (label b); phi = d.q".into(),
            depolarizing: "eps is the average gate infidelity; Pauli error probability p = eps (D+1)/D (1.5 eps_1q, 1.25 eps_2q)".into(),
            signal: "C(t) = -i/N sum_j conj(<S+_j(0)>) <S+_j(t)>, centered frame".into(),
            frequency_axis: "S(w) = |sum_n w_n C(t_n) exp(+i w t_n)|, w_k = 2 pi k/(n_pad tau); C ~ exp(-i w t) peaks at +w".into(),
            trotter_norm,
            units: "energies meV, times 1/meV (hbar = 1)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSeed {
    pub job: usize,
    pub tag: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTime {
    pub job: Option<usize>,
    pub stage: String,
    pub wall_s: f64,
}

/// Everything needed to rerun a command; `hash` covers all fields except
/// wall times and the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub hash: String,
    pub config: RunConfig,
    pub master_seed: u64,
    pub seeds: Vec<JobSeed>,
    pub software: SoftwareInfo,
    pub conventions: Conventions,
    pub wall_times: Vec<StageTime>,
    /// Time spent writing outputs, kept apart from the stage times.
    pub serialization_s: f64,
}

#[derive(Serialize)]
struct HashInput<'a> {
    command: &'a str,
    config: &'a RunConfig,
    seeds: &'a [JobSeed],
    software: &'a SoftwareInfo,
    conventions: &'a Conventions,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, jobs: &[Job]) -> Self {
        let seeds: Vec<JobSeed> = jobs.iter().map(|j| JobSeed { job: j.index, tag: j.tag(), seed: j.seed }).collect();
        let software = SoftwareInfo::current();
        let conventions = Conventions::new(config.trotter_norm);
        let mut hashed = config.clone();
        hashed.output_dir = Default::default();
        let input = HashInput { command, config: &hashed, seeds: &seeds, software: &software, conventions: &conventions };
        let bytes = serde_json::to_vec(&input).expect("manifest fields serialize");
        let hash = hex::encode(Sha256::digest(&bytes));
        Self {
            command: command.into(),
            hash,
            config: config.clone(),
            master_seed: config.seed,
            seeds,
            software,
            conventions,
            wall_times: Vec::new(),
            serialization_s: 0.0,
        }
    }

    pub fn record(&mut self, job: Option<usize>, stage: &str, wall_s: f64) {
        self.wall_times.push(StageTime { job, stage: stage.into(), wall_s });
    }
}

/// Consecutive stage timer: each lap ends where the next begins, so the
/// laps sum to the total exactly.
pub struct Laps {
    last: Instant,
    pub laps: Vec<(String, f64)>,
}

impl Laps {
    pub fn start() -> Self {
        Self { last: Instant::now(), laps: Vec::new() }
    }

    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.laps.push((stage.into(), (now - self.last).as_secs_f64()));
        self.last = now;
    }

    pub fn total(&self) -> f64 {
        self.laps.iter().map(|l| l.1).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_output_dir_and_wall_times() {
        let a = RunConfig::default();
        let b = RunConfig { output_dir: "elsewhere".into(), ..RunConfig::default() };
        let jobs = a.jobs().unwrap();
        let mut ma = RunManifest::new("evolve", &a, &jobs);
        let mb = RunManifest::new("evolve", &b, &jobs);
        ma.record(Some(0), "evolve", 1.5);
        assert_eq!(ma.hash, mb.hash);
        let c = RunConfig { seed: 7, ..RunConfig::default() };
        assert_ne!(RunManifest::new("evolve", &c, &c.jobs().unwrap()).hash, mb.hash);
        assert_ne!(RunManifest::new("spectrum", &a, &jobs).hash, mb.hash);
    }

    #[test]
    fn seeds_are_stable() {
        assert_eq!(derive_seed(1, "x"), derive_seed(1, "x"));
        assert_ne!(derive_seed(1, "x"), derive_seed(2, "x"));
        assert_ne!(derive_seed(1, "x"), derive_seed(1, "y"));
    }
}
