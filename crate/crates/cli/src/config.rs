//! Run configuration: embedded defaults, JSON loading and flag overrides.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use magnon_core::hamiltonian::{material_preset_by_name, AChoice, MaterialPreset, NormConvention};
use magnon_core::lattice::{high_symmetry_point, LatticeSpec, SymmetryPoint, WaveVector};
use magnon_core::simulator::{noise_preset, NoisePreset};
use magnon_core::spectra::{BootstrapOptions, DampingOptions, FourierOptions};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::derive_seed;

/// M-point step of the default CrBr3 protocol, 0.72 / 3.2 meV⁻¹.
pub const REFERENCE_TAU_M: f64 = 0.225;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Krylov,
    Dense,
    Statevector,
    Noisy,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Krylov => "krylov",
            Backend::Dense => "dense",
            Backend::Statevector => "statevector",
            Backend::Noisy => "noisy",
        }
    }
}

/// A q point: a high-symmetry label or explicit components (units of 1/lattice constant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QSpec {
    Label(String),
    Custom { qx: f64, qy: f64 },
}

/// Trotter steps in units of 1/a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauCoefficients {
    pub gamma: f64,
    pub k: f64,
    pub m: f64,
    /// Used for explicit q vectors.
    pub custom: f64,
}

impl Default for TauCoefficients {
    fn default() -> Self {
        Self { gamma: 0.374, k: 0.445, m: 0.72, custom: 0.445 }
    }
}

impl TauCoefficients {
    pub fn coefficient(&self, label: Option<SymmetryPoint>) -> f64 {
        match label {
            Some(SymmetryPoint::Gamma) => self.gamma,
            Some(SymmetryPoint::K) => self.k,
            Some(SymmetryPoint::M) => self.m,
            None => self.custom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoisyConfig {
    pub preset: String,
    pub twirls: usize,
    /// Shots per (basis, time point, twirl) execution.
    pub shots: usize,
    /// Shots drawn from one noise trajectory.
    pub shots_per_trajectory: usize,
    /// Shots per TREX calibration setting.
    pub calibration_shots: usize,
}

impl Default for NoisyConfig {
    fn default() -> Self {
        Self { preset: "emerald".into(), twirls: 16, shots: 512, shots_per_trajectory: 256, calibration_shots: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub fourier: FourierOptions,
    /// Shot-bootstrap bands for the noisy backend; `null` disables them.
    pub bootstrap: Option<BootstrapOptions>,
    pub damping: DampingOptions,
    /// Peaks at or above this fraction of the largest magnitude are dominant.
    pub dominant_peak_fraction: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            fourier: FourierOptions::default(),
            bootstrap: Some(BootstrapOptions::default()),
            damping: DampingOptions::default(),
            dominant_peak_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub n_cells: Vec<usize>,
    pub backends: Vec<Backend>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self { n_cells: vec![3, 6, 9, 10], backends: vec![Backend::Krylov] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub material: String,
    pub a_choice: AChoice,
    pub q_points: Vec<QSpec>,
    /// Ring sizes as unit-cell counts (N = 2 n_cells).
    pub n_cells: Vec<usize>,
    pub tau: TauCoefficients,
    pub n_steps: usize,
    pub quench_angle: f64,
    pub backend: Backend,
    /// Backend of the noiseless reference in `compare`.
    pub reference_backend: Backend,
    pub noisy: NoisyConfig,
    pub spectrum: SpectrumConfig,
    pub trotter_norm: NormConvention,
    pub scaling: ScalingConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            material: "CrBr3".into(),
            a_choice: AChoice::Bare,
            q_points: ["gamma", "k", "m"].iter().map(|s| QSpec::Label(s.to_string())).collect(),
            n_cells: vec![9],
            tau: TauCoefficients::default(),
            n_steps: 19,
            quench_angle: 0.3 * PI,
            backend: Backend::Krylov,
            reference_backend: Backend::Krylov,
            noisy: NoisyConfig::default(),
            spectrum: SpectrumConfig::default(),
            trotter_norm: NormConvention::PauliTerms,
            scaling: ScalingConfig::default(),
            seed: 20260131,
            output_dir: PathBuf::from("magnon-out"),
        }
    }
}

/// Command-line values that replace config entries when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub material: Option<String>,
    pub a_choice: Option<AChoice>,
    pub q_points: Option<Vec<String>>,
    pub n_cells: Option<Vec<usize>>,
    pub n_steps: Option<usize>,
    pub backend: Option<Backend>,
    pub noise: Option<String>,
    pub twirls: Option<usize>,
    pub shots: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// One (q, N) unit of work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub index: usize,
    /// File-name tag: the label, or `q<i>` for explicit vectors.
    pub q_name: String,
    pub q: WaveVector,
    pub n_cells: usize,
    pub tau: f64,
    pub seed: u64,
}

impl Job {
    pub fn n_sites(&self) -> usize {
        2 * self.n_cells
    }

    pub fn tag(&self) -> String {
        format!("{}_n{}", self.q_name, self.n_sites())
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.material {
            self.material = v.clone();
        }
        if let Some(v) = o.a_choice {
            self.a_choice = v;
        }
        if let Some(v) = &o.q_points {
            self.q_points = v.iter().map(|s| QSpec::Label(s.clone())).collect();
        }
        if let Some(v) = &o.n_cells {
            self.n_cells = v.clone();
        }
        if let Some(v) = o.n_steps {
            self.n_steps = v;
        }
        if let Some(v) = o.backend {
            self.backend = v;
        }
        if let Some(v) = &o.noise {
            self.noisy.preset = v.clone();
        }
        if let Some(v) = o.twirls {
            self.noisy.twirls = v;
        }
        if let Some(v) = o.shots {
            self.noisy.shots = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
    }

    pub fn preset(&self) -> CliResult<MaterialPreset> {
        Ok(material_preset_by_name(&self.material)?)
    }

    pub fn noise(&self) -> CliResult<NoisePreset> {
        Ok(noise_preset(&self.noisy.preset)?)
    }

    /// The inter-center coupling a that sets the time steps.
    pub fn a(&self) -> CliResult<f64> {
        Ok(self.preset()?.a(self.a_choice))
    }

    pub fn wave_vectors(&self) -> CliResult<Vec<(String, WaveVector)>> {
        let lat = LatticeSpec::default();
        self.q_points
            .iter()
            .enumerate()
            .map(|(i, q)| match q {
                QSpec::Label(s) => {
                    let p: SymmetryPoint = s.parse()?;
                    Ok((p.as_str().to_string(), high_symmetry_point(p, &lat)))
                }
                QSpec::Custom { qx, qy } if qx.is_finite() && qy.is_finite() => {
                    Ok((format!("q{i}"), WaveVector::custom(*qx, *qy)))
                }
                QSpec::Custom { .. } => Err(CliError::Config(format!("q point {i} is not finite"))),
            })
            .collect()
    }

    pub fn tau_for(&self, q: &WaveVector) -> CliResult<f64> {
        Ok(self.tau.coefficient(q.label) / self.a()?)
    }

    /// The default CrBr3 protocol must give τ_M = 0.225 meV⁻¹ (within 2 ulp).
    pub fn check_reference_tau(&self) -> CliResult<()> {
        let preset = self.preset()?;
        if preset.material.as_str() != "CrBr3" || self.a_choice != AChoice::Bare || self.tau.m != 0.72 {
            return Ok(());
        }
        let tau_m = self.tau.m / self.a()?;
        let ulp = REFERENCE_TAU_M - f64::from_bits(REFERENCE_TAU_M.to_bits() - 1);
        if (tau_m - REFERENCE_TAU_M).abs() > 2.0 * ulp {
            return Err(CliError::Config(format!("τ_M = {tau_m:e}, expected {REFERENCE_TAU_M}")));
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        self.preset()?;
        self.wave_vectors()?;
        if self.q_points.is_empty() {
            return Err(CliError::Config("no q points".into()));
        }
        if self.n_cells.is_empty() || self.n_cells.contains(&0) {
            return Err(CliError::Config("n_cells must be a non-empty list of positive counts".into()));
        }
        if self.n_steps == 0 {
            return Err(CliError::Config("n_steps must be at least 1".into()));
        }
        let t = &self.tau;
        if ![t.gamma, t.k, t.m, t.custom].iter().all(|c| c.is_finite() && *c > 0.0) {
            return Err(CliError::Config("time-step coefficients must be positive".into()));
        }
        if !self.quench_angle.is_finite() {
            return Err(CliError::Config("quench angle must be finite".into()));
        }
        if self.backend == Backend::Noisy {
            self.noise()?;
            let n = &self.noisy;
            if n.twirls == 0 || n.shots == 0 || n.calibration_shots == 0 {
                return Err(CliError::Config("twirls, shots and calibration shots must be positive".into()));
            }
        }
        let f = self.spectrum.dominant_peak_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(CliError::Config("dominant_peak_fraction must lie in (0, 1]".into()));
        }
        self.check_reference_tau()
    }

    /// Jobs in (q, n_cells) order; seeds derive from the master seed and the job tag.
    pub fn jobs(&self) -> CliResult<Vec<Job>> {
        self.jobs_for(&self.n_cells)
    }

    pub fn jobs_for(&self, n_cells: &[usize]) -> CliResult<Vec<Job>> {
        let mut out = Vec::new();
        for (q_name, q) in self.wave_vectors()? {
            let tau = self.tau_for(&q)?;
            for &nc in n_cells {
                let index = out.len();
                let seed = derive_seed(self.seed, &format!("job/{q_name}/{nc}"));
                out.push(Job { index, q_name: q_name.clone(), q, n_cells: nc, tau, seed });
            }
        }
        Ok(out)
    }
}
