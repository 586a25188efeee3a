use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::{cosine_similarity, fourier, FourierOptions, SimilarityReport, Spectrum, TimeTrace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingOptions {
    /// Grid intervals on [0, γ_max] before refinement.
    pub n_gamma: usize,
    pub rel_tol: f64,
    pub n_grid: usize,
}

impl Default for DampingOptions {
    fn default() -> Self {
        Self { n_gamma: 32, rel_tol: 1e-4, n_grid: 512 }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Chooses γ ∈ [0, 4/T_max] maximizing the cosine similarity between the
/// spectrum of e^{−γt} C_ref(t) and `target`. The reference is transformed
/// with the target's padding, window and shift settings.
pub fn fit_damping(reference: &TimeTrace, target: &Spectrum, opts: &DampingOptions) -> Result<SimilarityReport> {
    if opts.n_gamma < 2 {
        return Err(Error::InvalidArgument("n_gamma must be at least 2".into()));
    }
    let t_max = reference.t_max();
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument("reference trace needs a positive duration".into()));
    }
    let gamma_max = 4.0 / t_max;
    let fopts = FourierOptions {
        zero_pad_factor: target.zero_pad_factor,
        window: target.window,
        shift_alpha: target.shift != 0.0,
    };
    let mut evaluations = 0usize;
    let mut score = |g: f64| -> Result<f64> {
        evaluations += 1;
        cosine_similarity(&fourier(&reference.damped(g), &fopts)?, target, opts.n_grid)
    };

    let step = gamma_max / opts.n_gamma as f64;
    let mut grid = Vec::with_capacity(opts.n_gamma + 1);
    for k in 0..=opts.n_gamma {
        grid.push(score(k as f64 * step)?);
    }
    let best = (0..grid.len()).fold(0, |b, k| if grid[k] > grid[b] { k } else { b });
    let (mut a, mut b) = (best.saturating_sub(1) as f64 * step, (best + 1).min(opts.n_gamma) as f64 * step);

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (score(x1)?, score(x2)?);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if b - a <= opts.rel_tol * mid.max(1e-6 * gamma_max) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = score(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = score(x2)?;
        }
    }
    let (mut gamma, mut cosine) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    // Keep the grid point if refinement did not beat it (exact optimum on an end).
    let grid_gamma = best as f64 * step;
    if grid[best] >= cosine {
        gamma = grid_gamma;
        cosine = grid[best];
    }
    let tol = opts.rel_tol * gamma_max;
    Ok(SimilarityReport {
        cosine,
        mismatch: 1.0 - cosine,
        gamma,
        gamma_max,
        at_boundary: gamma <= tol || gamma >= gamma_max - tol,
        n_grid: opts.n_grid,
        evaluations,
    })
}
