//! Signal assembly, Fourier spectra, bootstrap bands, cosine similarity and
//! effective-damping fits.

mod bootstrap;
mod damping;

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::propagators::ObservableTable;
use crate::simulator::ObservableEstimates;
use crate::{Error, Result, C64};

pub use bootstrap::{bootstrap_band, BootstrapOptions};
pub use damping::{fit_damping, DampingOptions};

/// Relative tolerance on the spacing of a time grid.
const UNIFORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceSource {
    QuantumSim,
    Krylov,
    Dense,
}

/// C(t) on a uniform grid starting at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub times: Vec<f64>,
    pub c_values: Vec<C64>,
    /// ⟨S^+_j(t)⟩ indexed [time][site].
    pub per_site: Option<Vec<Vec<C64>>>,
    pub source: TraceSource,
    /// Uniform precession frequency removed from the evolution frame.
    pub alpha: f64,
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Ok(0.0);
    }
    let tau = times[1] - times[0];
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument("time grid must be increasing".into()));
    }
    for (k, t) in times.iter().enumerate() {
        if (t - times[0] - k as f64 * tau).abs() > UNIFORM_TOL * tau * (k.max(1) as f64) {
            return Err(Error::InvalidArgument(format!("time grid is not uniform at sample {k}")));
        }
    }
    Ok(tau)
}

/// C(t) = −i/N Σ_j ⟨S^−_j(0)⟩⟨S^+_j(t)⟩ from a [time][site] table of ⟨S^+⟩.
pub fn assemble_signal(times: &[f64], s_plus: &[Vec<C64>], source: TraceSource, alpha: f64) -> Result<TimeTrace> {
    if times.first().map_or(true, |t| t.abs() > 1e-12) || s_plus.is_empty() {
        return Err(Error::MissingInitialSample);
    }
    if times.len() != s_plus.len() {
        return Err(Error::InvalidArgument(format!("{} times but {} rows", times.len(), s_plus.len())));
    }
    check_uniform(times)?;
    let n = s_plus[0].len();
    if n == 0 || s_plus.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("rows must have one entry per site".into()));
    }
    let s_minus0: Vec<C64> = s_plus[0].iter().map(|z| z.conj()).collect();
    let c_values: Vec<C64> = s_plus
        .iter()
        .map(|row| {
            let s: C64 = row.iter().zip(&s_minus0).map(|(p, m)| m * p).sum();
            C64::new(0.0, -1.0) * s / n as f64
        })
        .collect();
    if c_values.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidArgument("signal is not finite".into()));
    }
    Ok(TimeTrace { times: times.to_vec(), c_values, per_site: Some(s_plus.to_vec()), source, alpha })
}

impl TimeTrace {
    pub fn from_table(table: &ObservableTable, source: TraceSource, alpha: f64) -> Result<Self> {
        assemble_signal(&table.times, &table.s_plus(), source, alpha)
    }

    /// Trace from mitigated estimates sampled at t = index · τ.
    pub fn from_estimates(est: &ObservableEstimates, tau: f64, alpha: f64) -> Result<Self> {
        let times: Vec<f64> = est.time_indices.iter().map(|&k| k as f64 * tau).collect();
        assemble_signal(&times, &est.s_plus(), TraceSource::QuantumSim, alpha)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn tau(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn t_max(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// C(t) e^{−γt}; the per-site table is dropped.
    pub fn damped(&self, gamma: f64) -> Self {
        let c_values = self.times.iter().zip(&self.c_values).map(|(t, c)| c * (-gamma * t).exp()).collect();
        Self { c_values, per_site: None, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Window {
    None,
    /// exp(−t² / (2 (width · T_max)²)).
    Gaussian { width: f64 },
}

impl Window {
    fn weights(&self, times: &[f64]) -> Vec<f64> {
        let t_max = times.last().copied().unwrap_or(0.0);
        match *self {
            Window::None => vec![1.0; times.len()],
            Window::Gaussian { width } => {
                let s = width * t_max;
                times.iter().map(|t| (-0.5 * (t / s).powi(2)).exp()).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierOptions {
    pub zero_pad_factor: usize,
    pub window: Window,
    /// Report frequencies of the uncentered Hamiltonian (ω − α).
    pub shift_alpha: bool,
}

impl Default for FourierOptions {
    fn default() -> Self {
        Self { zero_pad_factor: 8, window: Window::None, shift_alpha: false }
    }
}

/// |Σ_n w_n C(t_n) e^{iω t_n}| on a two-sided grid, ascending in ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub band_lo: Option<Vec<f64>>,
    pub band_hi: Option<Vec<f64>>,
    pub window: Window,
    pub zero_pad_factor: usize,
    pub n_samples: usize,
    pub tau: f64,
    /// Frequency offset subtracted from the grid (α or 0).
    pub shift: f64,
}

/// Local maximum of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub omega: f64,
    pub magnitude: f64,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        2.0 * PI / (self.omega.len() as f64 * self.tau)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }

    /// Local maxima, largest first. Neighbors wrap around since the DFT grid
    /// is periodic.
    pub fn peaks(&self) -> Vec<Peak> {
        let m = &self.magnitude;
        let n = m.len();
        let mut out: Vec<Peak> = (0..n)
            .filter(|&i| {
                let (l, r) = (m[(i + n - 1) % n], m[(i + 1) % n]);
                n == 1 || (m[i] > l && m[i] >= r)
            })
            .map(|i| Peak { index: i, omega: self.omega[i], magnitude: m[i] })
            .collect();
        out.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
        out
    }

    /// Peaks at least `fraction` of the global maximum.
    pub fn dominant_peaks(&self, fraction: f64) -> Vec<Peak> {
        let cut = fraction * self.max_magnitude();
        self.peaks().into_iter().filter(|p| p.magnitude >= cut).collect()
    }

    /// Largest hi − lo over the band, if present.
    pub fn max_band_width(&self) -> Option<f64> {
        let (lo, hi) = (self.band_lo.as_ref()?, self.band_hi.as_ref()?);
        Some(lo.iter().zip(hi).map(|(l, h)| h - l).fold(0.0, f64::max))
    }
}

/// Zero-padded DFT of the trace, two-sided with ω_k = 2πk/(n_pad τ).
pub fn fourier(trace: &TimeTrace, opts: &FourierOptions) -> Result<Spectrum> {
    let n = trace.len();
    if n < 2 {
        return Err(Error::InvalidArgument("a spectrum needs at least two samples".into()));
    }
    if opts.zero_pad_factor == 0 {
        return Err(Error::InvalidArgument("zero_pad_factor must be at least 1".into()));
    }
    if let Window::Gaussian { width } = opts.window {
        if !(width > 0.0) {
            return Err(Error::InvalidArgument("window width must be positive".into()));
        }
    }
    let tau = check_uniform(&trace.times)?;
    let n_pad = n * opts.zero_pad_factor;
    let w = opts.window.weights(&trace.times);
    let mut buf = vec![C64::new(0.0, 0.0); n_pad];
    for (k, (c, wk)) in trace.c_values.iter().zip(&w).enumerate() {
        buf[k] = c * wk;
    }
    // Inverse transform: Σ_n x_n e^{+2πi kn/n_pad}.
    FftPlanner::new().plan_fft_inverse(n_pad).process(&mut buf);
    let shift = if opts.shift_alpha { trace.alpha } else { 0.0 };
    let t0 = trace.times[0];
    let mut rows: Vec<(f64, f64)> = buf
        .iter()
        .enumerate()
        .map(|(k, z)| {
            let ks = if k < n_pad.div_ceil(2) { k as f64 } else { k as f64 - n_pad as f64 };
            let omega = 2.0 * PI * ks / (n_pad as f64 * tau);
            let z = z * C64::from_polar(1.0, omega * t0);
            (omega - shift, z.norm())
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (omega, magnitude) = rows.into_iter().unzip();
    Ok(Spectrum {
        omega,
        magnitude,
        band_lo: None,
        band_hi: None,
        window: opts.window,
        zero_pad_factor: opts.zero_pad_factor,
        n_samples: n,
        tau,
        shift,
    })
}

fn interpolate(s: &Spectrum, x: f64) -> f64 {
    let w = &s.omega;
    let (lo, hi) = (w[0], w[w.len() - 1]);
    if x < lo || x > hi {
        return 0.0;
    }
    let j = w.partition_point(|&v| v <= x);
    if j == 0 {
        return s.magnitude[0];
    }
    if j >= w.len() {
        return s.magnitude[w.len() - 1];
    }
    let (x0, x1) = (w[j - 1], w[j]);
    let f = (x - x0) / (x1 - x0);
    s.magnitude[j - 1] * (1.0 - f) + s.magnitude[j] * f
}

/// Riemann-sum cosine similarity on a uniform grid of `n_grid` points
/// spanning both supports; each spectrum is zero outside its own support.
pub fn cosine_similarity(a: &Spectrum, b: &Spectrum, n_grid: usize) -> Result<f64> {
    if n_grid < 2 {
        return Err(Error::InvalidArgument("n_grid must be at least 2".into()));
    }
    if a.omega.is_empty() || b.omega.is_empty() {
        return Err(Error::ZeroNorm);
    }
    let lo = a.omega[0].min(b.omega[0]);
    let hi = a.omega[a.omega.len() - 1].max(b.omega[b.omega.len() - 1]);
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for i in 0..n_grid {
        let x = lo + (hi - lo) * i as f64 / (n_grid - 1) as f64;
        let (fa, fb) = (interpolate(a, x), interpolate(b, x));
        ab += fa * fb;
        aa += fa * fa;
        bb += fb * fb;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

/// Similarity score of a target spectrum against a (damped) reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub cosine: f64,
    pub mismatch: f64,
    pub gamma: f64,
    pub gamma_max: f64,
    /// The optimum sits on an end of [0, γ_max].
    pub at_boundary: bool,
    pub n_grid: usize,
    pub evaluations: usize,
}

impl SimilarityReport {
    /// Score without damping.
    pub fn undamped(cosine: f64, n_grid: usize) -> Self {
        Self { cosine, mismatch: 1.0 - cosine, gamma: 0.0, gamma_max: 0.0, at_boundary: false, n_grid, evaluations: 1 }
    }
}
