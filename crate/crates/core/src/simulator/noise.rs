//! Calibration-derived noise presets and their channel parameters.
//!
//! Depolarizing convention: eps is the average gate infidelity. A
//! D-dimensional depolarizing channel with Pauli error probability p (a
//! uniformly random non-identity Pauli) has infidelity p·D/(D+1), so
//! p = eps·(D+1)/D: 1.5·eps_1q and 1.25·eps_2q.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

static PRESETS_JSON: &str = include_str!("../../data/noise_presets.json");

/// Short names resolving to one bundled row.
pub const PRESET_ALIASES: [(&str, &str); 2] =
    [("emerald", "emerald-2026-01-31-n18-gamma"), ("garnet", "garnet-2026-01-22-n6-gamma")];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePreset {
    pub name: String,
    #[serde(default)]
    pub qpu: String,
    #[serde(default)]
    pub n_qubits: usize,
    #[serde(default)]
    pub q_label: String,
    #[serde(default)]
    pub date: String,
    pub eps_1q: f64,
    pub t_1q_ns: f64,
    pub eps_2q: f64,
    pub t_2q_ns: f64,
    pub eps_ro: f64,
    pub t_ro_ns: f64,
    pub t1_us: f64,
    pub t2_us: f64,
    /// Pauli-twirled T1/T2 relaxation per gate duration.
    #[serde(default)]
    pub decoherence: bool,
    /// Extra coherent exp(−i θ/2 Z⊗Z) after every CZ.
    #[serde(default)]
    pub cz_overrotation: f64,
    /// P(read 1 | 0) and P(read 0 | 1); both default to eps_ro.
    #[serde(default)]
    pub readout_p01: Option<f64>,
    #[serde(default)]
    pub readout_p10: Option<f64>,
}

#[derive(Deserialize)]
struct PresetFile {
    version: u32,
    presets: Vec<NoisePreset>,
}

/// Version of the bundled preset file.
pub fn presets_version() -> u32 {
    serde_json::from_str::<PresetFile>(PRESETS_JSON).map(|f| f.version).unwrap_or(0)
}

pub fn bundled_presets() -> Vec<NoisePreset> {
    serde_json::from_str::<PresetFile>(PRESETS_JSON).expect("bundled preset file parses").presets
}

/// Looks up a preset by exact name, alias or unique name prefix.
pub fn noise_preset(name: &str) -> Result<NoisePreset> {
    let all = bundled_presets();
    let key = PRESET_ALIASES.iter().find(|(a, _)| *a == name).map_or(name, |(_, full)| full);
    if let Some(p) = all.iter().find(|p| p.name == key) {
        return Ok(p.clone());
    }
    let hits: Vec<_> = all.iter().filter(|p| p.name.starts_with(key)).collect();
    match hits.as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(Error::UnknownNoisePreset(name.to_string())),
        many => Err(Error::UnknownNoisePreset(format!(
            "{name} is ambiguous: {}",
            many.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(", ")
        ))),
    }
}

impl NoisePreset {
    /// All error rates zero.
    pub fn noiseless() -> Self {
        Self {
            name: "noiseless".into(),
            qpu: String::new(),
            n_qubits: 0,
            q_label: String::new(),
            date: String::new(),
            eps_1q: 0.0,
            t_1q_ns: 0.0,
            eps_2q: 0.0,
            t_2q_ns: 0.0,
            eps_ro: 0.0,
            t_ro_ns: 0.0,
            t1_us: f64::INFINITY,
            t2_us: f64::INFINITY,
            decoherence: false,
            cz_overrotation: 0.0,
            readout_p01: None,
            readout_p10: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [("eps_1q", self.eps_1q), ("eps_2q", self.eps_2q), ("eps_ro", self.eps_ro)];
        let extra = [("readout_p01", self.readout_p01), ("readout_p10", self.readout_p10)];
        for (what, v) in rates.into_iter().chain(extra.into_iter().filter_map(|(w, v)| v.map(|v| (w, v)))) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{what} = {v} is outside [0, 1]")));
            }
        }
        if self.p_1q() > 1.0 || self.p_2q() > 1.0 {
            return Err(Error::InvalidArgument("gate error too large for the depolarizing conversion".into()));
        }
        if self.decoherence && !(self.t2_us <= 2.0 * self.t1_us) {
            return Err(Error::InvalidArgument(format!("T2 = {} µs exceeds 2·T1 = {} µs", self.t2_us, 2.0 * self.t1_us)));
        }
        Ok(())
    }

    /// Pauli error probability after a single-qubit gate.
    pub fn p_1q(&self) -> f64 {
        1.5 * self.eps_1q
    }

    /// Pauli error probability after a CZ.
    pub fn p_2q(&self) -> f64 {
        1.25 * self.eps_2q
    }

    pub fn p01(&self) -> f64 {
        self.readout_p01.unwrap_or(self.eps_ro)
    }

    pub fn p10(&self) -> f64 {
        self.readout_p10.unwrap_or(self.eps_ro)
    }

    /// (p_x, p_y, p_z) of the Pauli-twirled relaxation over `t_ns`; zeros when
    /// decoherence is off.
    pub fn relaxation(&self, t_ns: f64) -> [f64; 3] {
        if !self.decoherence || t_ns <= 0.0 {
            return [0.0; 3];
        }
        let t_us = 1e-3 * t_ns;
        let a = 1.0 - (-t_us / self.t1_us).exp();
        let b = 1.0 - (-t_us / self.t2_us).exp();
        let pxy = 0.25 * a;
        [pxy, pxy, (0.5 * b - 0.25 * a).max(0.0)]
    }

    pub fn is_noiseless(&self) -> bool {
        self.p_1q() == 0.0
            && self.p_2q() == 0.0
            && self.p01() == 0.0
            && self.p10() == 0.0
            && self.cz_overrotation == 0.0
            && !self.decoherence
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_rows_load() {
        let all = bundled_presets();
        assert_eq!(all.len(), 24);
        assert_eq!(presets_version(), 1);
        for p in &all {
            p.validate().unwrap();
        }
        let e = noise_preset("emerald").unwrap();
        assert_eq!((e.n_qubits, e.eps_2q, e.eps_ro), (18, 0.0057, 0.016));
        assert_eq!(noise_preset("garnet").unwrap().name, "garnet-2026-01-22-n6-gamma");
        assert!(noise_preset("emerald-2026-01-26").is_err());
        assert!(noise_preset("emerald-2026-01-26-n18-k").is_ok());
        assert!(noise_preset("nope").is_err());
    }
}
