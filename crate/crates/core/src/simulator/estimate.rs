//! TREX calibration and mitigated ⟨S^x⟩, ⟨S^y⟩ estimation from shot batches.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::Basis;
use crate::{Error, Result, C64};

use super::noise::NoisePreset;
use super::sampler::{trajectory_rng, Channel, ShotBatch};

/// Per-qubit readout symmetrization factors ⟨Z⟩_TREX(|0⟩) with uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrexCalibration {
    pub n_qubits: usize,
    pub shots_per_setting: usize,
    pub factors: Vec<f64>,
    pub factor_se: Vec<f64>,
    pub seed: u64,
}

impl TrexCalibration {
    /// Factors of 1: sign correction only.
    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, shots_per_setting: 0, factors: vec![1.0; n_qubits], factor_se: vec![0.0; n_qubits], seed: 0 }
    }

    /// Exact factors 1 − p01 − p10 of a readout model (no gate errors).
    pub fn exact(n_qubits: usize, p01: f64, p10: f64) -> Self {
        Self { factors: vec![1.0 - p01 - p10; n_qubits], ..Self::identity(n_qubits) }
    }
}

/// Samples the two calibration settings (all |0⟩, all |1⟩), each shot with a
/// fresh random flip mask, and averages the sign-corrected outcomes.
pub fn calibrate_trex(noise: &NoisePreset, n_qubits: usize, shots: usize, seed: u64) -> Result<TrexCalibration> {
    if shots == 0 {
        return Err(Error::InvalidArgument("calibration needs at least one shot".into()));
    }
    noise.validate()?;
    let ch = Channel::new(noise);
    let flip = ch.readout_side_flip();
    let mut sum = vec![0.0; n_qubits];
    for setting in 0..2u64 {
        let mut rng = trajectory_rng(seed, setting);
        let sign = if setting == 0 { 1.0 } else { -1.0 };
        for _ in 0..shots {
            for q in 0..n_qubits {
                let m = rng.random::<bool>();
                // Preparation X and the TREX flip each carry a gate error.
                let mut bit = setting == 1;
                if setting == 1 && flip > 0.0 && rng.random::<f64>() < flip {
                    bit = !bit;
                }
                if m {
                    bit = !bit;
                    if flip > 0.0 && rng.random::<f64>() < flip {
                        bit = !bit;
                    }
                }
                let r = ch.readout(bit, &mut rng);
                let z = if r ^ m { -1.0 } else { 1.0 };
                sum[q] += sign * z;
            }
        }
    }
    let total = 2.0 * shots as f64;
    let factors: Vec<f64> = sum.iter().map(|s| s / total).collect();
    if let Some(q) = factors.iter().position(|&f| f <= 0.0) {
        return Err(Error::InvalidArgument(format!("readout factor of qubit {q} is not positive")));
    }
    let factor_se = factors.iter().map(|f| ((1.0 - f * f).max(0.0) / total).sqrt()).collect();
    Ok(TrexCalibration {
        n_qubits,
        shots_per_setting: shots,
        factors: factors.into_iter().map(|f: f64| f.min(1.0)).collect(),
        factor_se,
        seed,
    })
}

/// Mitigated ⟨Z_q⟩ of one cell of twirl instances and its standard error.
pub fn mitigated_z(batches: &[&ShotBatch], q: usize, factor: f64, factor_se: f64) -> (f64, f64) {
    let means: Vec<f64> = batches.iter().map(|b| b.flip_corrected_z(q)).collect();
    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let shots: usize = batches.iter().map(|b| b.n_shots()).sum();
    let se_raw = if means.len() >= 2 {
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        ((1.0 - mean * mean).max(0.0) / shots as f64).sqrt()
    };
    let value = mean / factor;
    let se = ((se_raw / factor).powi(2) + (value * factor_se / factor).powi(2)).sqrt();
    (value, se)
}

/// Per-time, per-site ⟨S^x⟩ and ⟨S^y⟩ with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableEstimates {
    pub time_indices: Vec<usize>,
    pub sx: Vec<Vec<f64>>,
    pub sy: Vec<Vec<f64>>,
    pub sx_se: Vec<Vec<f64>>,
    pub sy_se: Vec<Vec<f64>>,
}

impl ObservableEstimates {
    pub fn s_plus(&self) -> Vec<Vec<C64>> {
        self.sx.iter().zip(&self.sy).map(|(x, y)| x.iter().zip(y).map(|(&a, &b)| C64::new(a, b)).collect()).collect()
    }
}

/// Groups batches by time index (absent = 0) and basis, sign-corrects the
/// TREX flips, divides by the calibrated factors and averages over twirl
/// instances. Z-basis batches are ignored.
pub fn estimate_observables(batches: &[ShotBatch], calibration: Option<&TrexCalibration>) -> Result<ObservableEstimates> {
    let cal = calibration.ok_or(Error::MissingCalibration)?;
    let n = batches.first().map_or(0, |b| b.n_qubits);
    if cal.n_qubits != n || batches.iter().any(|b| b.n_qubits != n) {
        return Err(Error::InvalidArgument("batches and calibration disagree on the qubit count".into()));
    }
    let mut cells: BTreeMap<usize, (Vec<&ShotBatch>, Vec<&ShotBatch>)> = BTreeMap::new();
    for b in batches {
        let e = cells.entry(b.time_index.unwrap_or(0)).or_default();
        match b.basis {
            Basis::X => e.0.push(b),
            Basis::Y => e.1.push(b),
            Basis::Z => {}
        }
    }
    if cells.is_empty() {
        return Err(Error::MissingBasis("no X or Y batches".into()));
    }
    let mut out = ObservableEstimates { time_indices: vec![], sx: vec![], sy: vec![], sx_se: vec![], sy_se: vec![] };
    for (t, (xs, ys)) in cells {
        for (v, basis) in [(&xs, Basis::X), (&ys, Basis::Y)] {
            if v.is_empty() {
                return Err(Error::MissingBasis(format!("time index {t} has no {basis} batch")));
            }
        }
        let est = |v: &[&ShotBatch]| -> (Vec<f64>, Vec<f64>) {
            (0..n).map(|q| mitigated_z(v, q, cal.factors[q], cal.factor_se[q])).map(|(m, s)| (0.5 * m, 0.5 * s)).unzip()
        };
        let (sx, sx_se) = est(&xs);
        let (sy, sy_se) = est(&ys);
        out.time_indices.push(t);
        out.sx.push(sx);
        out.sy.push(sy);
        out.sx_se.push(sx_se);
        out.sy_se.push(sy_se);
    }
    Ok(out)
}
