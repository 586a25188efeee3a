use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::Basis;
use crate::simulator::{estimate_observables, ShotBatch, TrexCalibration};
use crate::{Error, Result, C64};

use super::{assemble_signal, fourier, FourierOptions, Spectrum, TimeTrace, TraceSource};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub n_resamples: usize,
    pub seed: u64,
    pub lower_percentile: f64,
    pub upper_percentile: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { n_resamples: 200, seed: 0, lower_percentile: 16.0, upper_percentile: 84.0 }
    }
}

/// Flip-corrected shot words of one batch.
struct Cell {
    words: Vec<u64>,
}

/// Time-ordered X and Y cells.
struct Layout {
    n_qubits: usize,
    times: Vec<usize>,
    x: Vec<Vec<Cell>>,
    y: Vec<Vec<Cell>>,
}

fn layout(batches: &[ShotBatch]) -> Result<Layout> {
    let n = batches.first().map_or(0, |b| b.n_qubits);
    let mut by_time: BTreeMap<usize, (Vec<Cell>, Vec<Cell>)> = BTreeMap::new();
    for b in batches {
        let cell = Cell { words: b.bits.iter().zip(&b.trex_masks).map(|(x, m)| x ^ m).collect() };
        let e = by_time.entry(b.time_index.unwrap_or(0)).or_default();
        match b.basis {
            Basis::X => e.0.push(cell),
            Basis::Y => e.1.push(cell),
            Basis::Z => {}
        }
    }
    let mut out = Layout { n_qubits: n, times: vec![], x: vec![], y: vec![] };
    for (t, (x, y)) in by_time {
        if x.is_empty() || y.is_empty() {
            return Err(Error::MissingBasis(format!("time index {t} lacks an X or Y batch")));
        }
        out.times.push(t);
        out.x.push(x);
        out.y.push(y);
    }
    Ok(out)
}

/// 0.5 · mean over batches of the corrected ⟨Z_q⟩ / factor_q, with shots
/// drawn in order or, with an rng, resampled with replacement.
fn cell_means(cells: &[Cell], n: usize, factors: &[f64], rng: &mut Option<ChaCha8Rng>) -> Vec<f64> {
    let mut acc = vec![0.0; n];
    let mut ones = vec![0usize; n];
    for c in cells {
        ones.iter_mut().for_each(|o| *o = 0);
        let shots = c.words.len();
        for s in 0..shots {
            let w = match rng {
                Some(r) => c.words[r.random_range(0..shots)],
                None => c.words[s],
            };
            let mut bits = w;
            while bits != 0 {
                let q = bits.trailing_zeros() as usize;
                if q < n {
                    ones[q] += 1;
                }
                bits &= bits - 1;
            }
        }
        for q in 0..n {
            acc[q] += 1.0 - 2.0 * ones[q] as f64 / shots as f64;
        }
    }
    let k = cells.len() as f64;
    acc.iter().zip(factors).map(|(a, f)| 0.5 * a / k / f).collect()
}

/// Percentile with linear interpolation between order statistics.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let x = p / 100.0 * (sorted.len() - 1) as f64;
    let i = x.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (sorted[j] - sorted[i]) * (x - i as f64)
}

/// Spectrum of the mitigated batches with a percentile band from resampling
/// shots within every (time, basis, twirl) cell. The calibration is held
/// fixed across resamples.
pub fn bootstrap_band(
    batches: &[ShotBatch],
    calibration: &TrexCalibration,
    tau: f64,
    alpha: f64,
    fourier_opts: &FourierOptions,
    opts: &BootstrapOptions,
) -> Result<Spectrum> {
    if opts.n_resamples == 0 {
        return Err(Error::InvalidArgument("n_resamples must be positive".into()));
    }
    let est = estimate_observables(batches, Some(calibration))?;
    let mut spectrum = fourier(&TimeTrace::from_estimates(&est, tau, alpha)?, fourier_opts)?;
    let lay = layout(batches)?;
    if lay.x.iter().chain(&lay.y).flatten().any(|c| c.words.is_empty()) {
        return Err(Error::InvalidArgument("empty shot batch".into()));
    }
    let times: Vec<f64> = lay.times.iter().map(|&k| k as f64 * tau).collect();
    let n = lay.n_qubits;
    let resample = |r: usize| -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        let mut rng = Some(rng);
        let rows: Vec<Vec<C64>> = lay
            .x
            .iter()
            .zip(&lay.y)
            .map(|(xc, yc)| {
                let sx = cell_means(xc, n, &calibration.factors, &mut rng);
                let sy = cell_means(yc, n, &calibration.factors, &mut rng);
                sx.into_iter().zip(sy).map(|(a, b)| C64::new(a, b)).collect()
            })
            .collect();
        let trace = assemble_signal(&times, &rows, TraceSource::QuantumSim, alpha)?;
        Ok(fourier(&trace, fourier_opts)?.magnitude)
    };
    let draws: Vec<Vec<f64>> = (0..opts.n_resamples).into_par_iter().map(resample).collect::<Result<_>>()?;
    let m = spectrum.magnitude.len();
    let mut lo = Vec::with_capacity(m);
    let mut hi = Vec::with_capacity(m);
    let mut col = vec![0.0; draws.len()];
    for k in 0..m {
        for (c, d) in col.iter_mut().zip(&draws) {
            *c = d[k];
        }
        col.sort_by(f64::total_cmp);
        lo.push(percentile(&col, opts.lower_percentile));
        hi.push(percentile(&col, opts.upper_percentile));
    }
    spectrum.band_lo = Some(lo);
    spectrum.band_hi = Some(hi);
    Ok(spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(basis: Basis, t: usize, bits: Vec<u64>, masks: Vec<u64>) -> ShotBatch {
        ShotBatch {
            n_qubits: 2,
            basis,
            bits,
            trex_masks: masks,
            twirl_seed: None,
            seed: 0,
            time_index: Some(t),
            timestamp: None,
        }
    }

    #[test]
    fn fast_path_matches_estimator() {
        let mk = |basis, t, s: u64| {
            let bits: Vec<u64> = (0..64).map(|k| (k * 7 + s) % 4).collect();
            let masks: Vec<u64> = (0..64).map(|k| (k * 3 + s) % 4).collect();
            batch(basis, t, bits, masks)
        };
        let batches = vec![mk(Basis::X, 0, 1), mk(Basis::X, 0, 2), mk(Basis::Y, 0, 3), mk(Basis::X, 1, 4), mk(Basis::Y, 1, 5)];
        let cal = TrexCalibration { factors: vec![0.9, 0.8], ..TrexCalibration::identity(2) };
        let est = estimate_observables(&batches, Some(&cal)).unwrap();
        let lay = layout(&batches).unwrap();
        for (k, (xc, yc)) in lay.x.iter().zip(&lay.y).enumerate() {
            let sx = cell_means(xc, 2, &cal.factors, &mut None);
            let sy = cell_means(yc, 2, &cal.factors, &mut None);
            for q in 0..2 {
                assert!((sx[q] - est.sx[k][q]).abs() < 1e-14);
                assert!((sy[q] - est.sy[k][q]).abs() < 1e-14);
            }
        }
    }
}
