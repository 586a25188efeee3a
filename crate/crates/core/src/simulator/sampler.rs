//! Monte-Carlo trajectory sampling with Pauli noise, shot batches and the
//! prefix-shared executor for Trotter time series.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{cz4, pauli2, rx, ry, Basis, Circuit, Gate, Mat2, Mat4};
use crate::{Error, Result, C64};

use super::engine::{cumulative, draw_index, index_to_bits, Fuser};
use super::noise::NoisePreset;

/// Recorded shots of one circuit execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotBatch {
    pub n_qubits: usize,
    /// Logical measurement basis.
    pub basis: Basis,
    /// Recorded bits per shot, bit q = qubit q.
    pub bits: Vec<u64>,
    /// TREX flip mask per shot.
    pub trex_masks: Vec<u64>,
    pub twirl_seed: Option<u64>,
    pub seed: u64,
    pub time_index: Option<usize>,
    pub timestamp: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format: u32,
    n_qubits: usize,
    basis: Basis,
    shots: usize,
    bytes_per_shot: usize,
    trex_masks: Vec<u64>,
    twirl_seed: Option<u64>,
    seed: u64,
    time_index: Option<usize>,
    timestamp: Option<String>,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

impl ShotBatch {
    pub fn n_shots(&self) -> usize {
        self.bits.len()
    }

    /// Mean of (−1)^(recorded bit q), no correction.
    pub fn raw_z(&self, q: usize) -> f64 {
        let ones = self.bits.iter().filter(|&&b| b >> q & 1 == 1).count();
        1.0 - 2.0 * ones as f64 / self.n_shots() as f64
    }

    /// Mean of (−1)^(bit q ⊕ flip q): TREX sign correction, no rescaling.
    pub fn flip_corrected_z(&self, q: usize) -> f64 {
        let ones = self.bits.iter().zip(&self.trex_masks).filter(|(&b, &m)| (b ^ m) >> q & 1 == 1).count();
        1.0 - 2.0 * ones as f64 / self.n_shots() as f64
    }

    /// Mean of the Z string on `mask` of the recorded bits, with its standard error.
    pub fn z_string(&self, mask: u64) -> (f64, f64) {
        let n = self.n_shots() as f64;
        let mean = self.bits.iter().map(|b| if (b & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 }).sum::<f64>() / n;
        (mean, ((1.0 - mean * mean).max(0.0) / n).sqrt())
    }

    /// Writes `<stem>.bin` (packed little-endian bits) and `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        let bytes_per_shot = self.n_qubits.div_ceil(8).max(1);
        let mut bin = Vec::with_capacity(bytes_per_shot * self.n_shots());
        for b in &self.bits {
            bin.extend_from_slice(&b.to_le_bytes()[..bytes_per_shot]);
        }
        fs::write(with_ext(stem, ".bin"), bin)?;
        let side = Sidecar {
            format: 1,
            n_qubits: self.n_qubits,
            basis: self.basis,
            shots: self.n_shots(),
            bytes_per_shot,
            trex_masks: self.trex_masks.clone(),
            twirl_seed: self.twirl_seed,
            seed: self.seed,
            time_index: self.time_index,
            timestamp: self.timestamp.clone(),
        };
        fs::write(with_ext(stem, ".json"), serde_json::to_string_pretty(&side)?)?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let side: Sidecar = serde_json::from_str(&fs::read_to_string(with_ext(stem, ".json"))?)?;
        let bin = fs::read(with_ext(stem, ".bin"))?;
        if bin.len() != side.shots * side.bytes_per_shot {
            return Err(Error::InvalidArgument(format!(
                "{} holds {} bytes, expected {}",
                stem.display(),
                bin.len(),
                side.shots * side.bytes_per_shot
            )));
        }
        let bits = bin
            .chunks(side.bytes_per_shot)
            .map(|c| {
                let mut buf = [0u8; 8];
                buf[..c.len()].copy_from_slice(c);
                u64::from_le_bytes(buf)
            })
            .collect();
        Ok(Self {
            n_qubits: side.n_qubits,
            basis: side.basis,
            bits,
            trex_masks: side.trex_masks,
            twirl_seed: side.twirl_seed,
            seed: side.seed,
            time_index: side.time_index,
            timestamp: side.timestamp,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerOptions {
    /// Shots drawn from one noise realization.
    pub shots_per_trajectory: usize,
    pub max_qubits: usize,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self { shots_per_trajectory: 1, max_qubits: 24 }
    }
}

/// exp(−i θ/2 Z⊗Z).
pub fn rzz(theta: f64) -> Mat4 {
    let p = C64::from_polar(1.0, -0.5 * theta);
    let m = C64::from_polar(1.0, 0.5 * theta);
    Mat4::from_diagonal(&nalgebra::Vector4::new(p, m, m, p))
}

pub(crate) fn basis_rotation(basis: Basis) -> Option<Mat2> {
    match basis {
        Basis::X => Some(ry(-FRAC_PI_2)),
        Basis::Y => Some(rx(FRAC_PI_2)),
        Basis::Z => None,
    }
}

pub(crate) fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Noise channel parameters in the order the sampler draws them.
pub(crate) struct Channel<'a> {
    pub noise: &'a NoisePreset,
    pub p1: f64,
    pub p2: f64,
    pub relax_1q: [f64; 3],
    pub relax_2q: [f64; 3],
    pub overrot: Option<Mat4>,
}

impl<'a> Channel<'a> {
    pub fn new(noise: &'a NoisePreset) -> Self {
        Self {
            noise,
            p1: noise.p_1q(),
            p2: noise.p_2q(),
            relax_1q: noise.relaxation(noise.t_1q_ns),
            relax_2q: noise.relaxation(noise.t_2q_ns),
            overrot: (noise.cz_overrotation != 0.0).then(|| rzz(noise.cz_overrotation)),
        }
    }

    fn relax_pauli(r: &[f64; 3], rng: &mut ChaCha8Rng) -> usize {
        if r == &[0.0; 3] {
            return 0;
        }
        let u: f64 = rng.random();
        if u < r[0] {
            1
        } else if u < r[0] + r[1] {
            2
        } else if u < r[0] + r[1] + r[2] {
            3
        } else {
            0
        }
    }

    /// Pushes a gate and its sampled errors into the fuser.
    pub fn push_noisy(&self, f: &mut Fuser, g: &Gate, rng: &mut ChaCha8Rng) {
        match *g {
            Gate::Cz { a, b } => {
                f.push_2q(a, b, &cz4());
                if let Some(m) = &self.overrot {
                    f.push_2q(a, b, m);
                }
                if self.p2 > 0.0 && rng.random::<f64>() < self.p2 {
                    let k = rng.random_range(1..16usize);
                    if k / 4 != 0 {
                        f.push_1q(a, &pauli2(k / 4));
                    }
                    if k % 4 != 0 {
                        f.push_1q(b, &pauli2(k % 4));
                    }
                }
                for q in [a, b] {
                    let p = Self::relax_pauli(&self.relax_2q, rng);
                    if p != 0 {
                        f.push_1q(q, &pauli2(p));
                    }
                }
            }
            Gate::Measure { .. } => {}
            _ => {
                let q = g.qubits().0;
                f.push_1q(q, &g.matrix2().expect("single-qubit unitary"));
                if self.p1 > 0.0 && rng.random::<f64>() < self.p1 {
                    f.push_1q(q, &pauli2(rng.random_range(1..4usize)));
                }
                let p = Self::relax_pauli(&self.relax_1q, rng);
                if p != 0 {
                    f.push_1q(q, &pauli2(p));
                }
            }
        }
    }

    /// Probability that a single-qubit gate right before Z readout flips the bit.
    pub fn readout_side_flip(&self) -> f64 {
        2.0 / 3.0 * self.p1 + self.relax_1q[0] + self.relax_1q[1]
    }

    /// Applies readout confusion to an ideal bit.
    pub fn readout(&self, bit: bool, rng: &mut ChaCha8Rng) -> bool {
        let p = if bit { self.noise.p10() } else { self.noise.p01() };
        if p > 0.0 && rng.random::<f64>() < p {
            !bit
        } else {
            bit
        }
    }
}

/// Unitary body, terminal measurement bases and the batch basis of a circuit.
pub(crate) struct Split {
    pub body: Vec<Gate>,
    pub measured: Vec<Option<Basis>>,
    pub basis: Basis,
}

pub(crate) fn split_terminal(circuit: &Circuit) -> Result<Split> {
    let n = circuit.n_qubits;
    let mut measured: Vec<Option<Basis>> = vec![None; n];
    let mut body = Vec::new();
    for g in circuit.gates() {
        let (a, b) = g.qubits();
        if measured[a].is_some() || b.is_some_and(|b| measured[b].is_some()) {
            return Err(Error::InvalidArgument(format!("gate {g:?} after a measurement")));
        }
        match *g {
            Gate::Measure { q, basis } => measured[q] = Some(basis),
            _ => body.push(*g),
        }
    }
    if measured.iter().all(Option::is_none) {
        return Err(Error::InvalidArgument("circuit has no measurements".into()));
    }
    let basis = circuit.metadata.measurement_basis.unwrap_or_else(|| {
        let first = measured.iter().flatten().next().copied().unwrap_or(Basis::Z);
        if measured.iter().flatten().all(|&b| b == first) {
            first
        } else {
            Basis::Z
        }
    });
    Ok(Split { body, measured, basis })
}

/// Samples `shots` noisy executions of a circuit with terminal measurements.
pub fn sample_noisy(circuit: &Circuit, noise: &NoisePreset, shots: usize, seed: u64) -> Result<ShotBatch> {
    sample_noisy_with(circuit, noise, shots, seed, SamplerOptions::default())
}

pub fn sample_noisy_with(
    circuit: &Circuit,
    noise: &NoisePreset,
    shots: usize,
    seed: u64,
    opts: SamplerOptions,
) -> Result<ShotBatch> {
    let n = circuit.n_qubits;
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    if n > opts.max_qubits {
        return Err(Error::SizeLimit { what: "statevector qubits", requested: n, limit: opts.max_qubits });
    }
    noise.validate()?;
    let split = split_terminal(circuit)?;
    let ch = Channel::new(noise);
    let mask = circuit.metadata.trex.as_ref().map_or(0, |t| t.flip_mask());
    // A noiseless circuit has a single trajectory.
    let spt = if noise.is_noiseless() { shots } else { opts.shots_per_trajectory.max(1) };
    let mut bits = Vec::with_capacity(shots);
    let mut cum = Vec::new();
    let mut traj = 0u64;
    while bits.len() < shots {
        let mut rng = trajectory_rng(seed, traj);
        traj += 1;
        let mut f = Fuser::new(n);
        for g in &split.body {
            ch.push_noisy(&mut f, g, &mut rng);
        }
        for (q, b) in split.measured.iter().enumerate() {
            if let Some(m) = b.and_then(basis_rotation) {
                f.push_1q(q, &m);
            }
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        for op in f.finish() {
            op.apply(&mut amps, n);
        }
        cumulative(&amps, &mut cum);
        for _ in 0..spt.min(shots - bits.len()) {
            let ideal = index_to_bits(draw_index(&cum, rng.random()), n);
            let mut rec = 0u64;
            for (q, b) in split.measured.iter().enumerate() {
                if b.is_some() && ch.readout(ideal >> q & 1 == 1, &mut rng) {
                    rec |= 1 << q;
                }
            }
            bits.push(rec);
        }
    }
    Ok(ShotBatch {
        n_qubits: n,
        basis: split.basis,
        bits,
        trex_masks: vec![mask; shots],
        twirl_seed: circuit.metadata.twirl_seed,
        seed,
        time_index: None,
        timestamp: None,
    })
}

/// Noisy execution of a barrier-delimited circuit: the time-k circuit is the
/// prefix up to barrier k, followed by the basis change, the TREX flips of
/// `masks[k]` and Z readout.
#[derive(Debug, Clone)]
pub struct TimeSeriesRequest<'a> {
    pub circuit: &'a Circuit,
    pub basis: Basis,
    pub masks: &'a [u64],
    pub noise: &'a NoisePreset,
    pub shots: usize,
    pub shots_per_trajectory: usize,
    pub seed: u64,
}

/// One batch per barrier. Each trajectory evolves once and is branched into
/// every time point; errors after the basis change only flip readout bits
/// and are applied per shot.
pub fn run_time_series(req: &TimeSeriesRequest<'_>) -> Result<Vec<ShotBatch>> {
    let c = req.circuit;
    let n = c.n_qubits;
    if n > 24 {
        return Err(Error::SizeLimit { what: "statevector qubits", requested: n, limit: 24 });
    }
    if req.shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    if req.masks.len() != c.barriers.len() {
        return Err(Error::InvalidArgument(format!("{} masks for {} time points", req.masks.len(), c.barriers.len())));
    }
    if c.gates().any(Gate::is_measurement) {
        return Err(Error::InvalidArgument("time-series circuits carry no measurements".into()));
    }
    req.noise.validate()?;
    let ch = Channel::new(req.noise);
    let rot = basis_rotation(req.basis);
    let side_flip = ch.readout_side_flip();
    let segments: Vec<Vec<Gate>> = (0..c.barriers.len())
        .map(|k| {
            let start = if k == 0 { 0 } else { c.barriers[k - 1] };
            c.moment_range(start, c.barriers[k]).iter().flatten().copied().collect()
        })
        .collect();
    let spt = req.shots_per_trajectory.max(1);
    let mut out: Vec<Vec<u64>> = vec![Vec::with_capacity(req.shots); segments.len()];
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    let mut work = amps.clone();
    let mut cum = Vec::with_capacity(1 << n);
    let mut traj = 0u64;
    let mut done = 0usize;
    while done < req.shots {
        let take = spt.min(req.shots - done);
        let mut rng = trajectory_rng(req.seed, traj);
        traj += 1;
        amps.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        amps[0] = C64::new(1.0, 0.0);
        for (k, seg) in segments.iter().enumerate() {
            let mut f = Fuser::new(n);
            for g in seg {
                ch.push_noisy(&mut f, g, &mut rng);
            }
            for op in f.finish() {
                op.apply(&mut amps, n);
            }
            work.copy_from_slice(&amps);
            if let Some(m) = &rot {
                for q in 0..n {
                    super::engine::apply_1q(&mut work, n, q, m);
                }
            }
            cumulative(&work, &mut cum);
            let mask = req.masks[k];
            for _ in 0..take {
                let ideal = index_to_bits(draw_index(&cum, rng.random()), n);
                let mut rec = 0u64;
                for q in 0..n {
                    let mut bit = ideal >> q & 1 == 1;
                    if rot.is_some() && side_flip > 0.0 && rng.random::<f64>() < side_flip {
                        bit = !bit;
                    }
                    if mask >> q & 1 == 1 {
                        bit = !bit;
                        if side_flip > 0.0 && rng.random::<f64>() < side_flip {
                            bit = !bit;
                        }
                    }
                    if ch.readout(bit, &mut rng) {
                        rec |= 1 << q;
                    }
                }
                out[k].push(rec);
            }
        }
        done += take;
    }
    Ok(out
        .into_iter()
        .enumerate()
        .map(|(k, bits)| ShotBatch {
            n_qubits: n,
            basis: req.basis,
            trex_masks: vec![req.masks[k]; bits.len()],
            bits,
            twirl_seed: c.metadata.twirl_seed,
            seed: req.seed,
            time_index: Some(k),
            timestamp: None,
        })
        .collect())
}
