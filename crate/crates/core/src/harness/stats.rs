//! Binomial intervals and transition location.

use serde::Serialize;

use crate::error::{Error, GridSide, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959964;

/// Wilson score interval for `errors` out of `trials`.
pub fn wilson_interval(errors: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

/// Weighted least-squares fit that is nonincreasing in the index
/// (pool-adjacent-violators).
pub fn isotonic_nonincreasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // Blocks of (mean, weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        let w = w.max(f64::MIN_POSITIVE);
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, l2) = blocks[blocks.len() - 1];
            let (m1, w1, l1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2, l1 + l2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, len)| std::iter::repeat(m).take(len))
        .collect()
}

/// Where a nonincreasing curve crosses ½, by linear interpolation.
fn crossing(ps: &[f64], curve: &[f64]) -> Result<f64> {
    const HALF: f64 = 0.5;
    if curve[0] < HALF {
        return Err(Error::TransitionOutsideGrid(GridSide::BelowMin));
    }
    let Some(j) = curve.iter().position(|&v| v <= HALF) else {
        return Err(Error::TransitionOutsideGrid(GridSide::AboveMax));
    };
    if j == 0 {
        return Ok(ps[0]);
    }
    let (a, b) = (curve[j - 1], curve[j]);
    Ok(ps[j - 1] + (a - HALF) / (a - b) * (ps[j] - ps[j - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub p_hat: f64,
    /// Crossing of the lower CI curve, or `p_min` if it lies below the grid.
    pub p_low: f64,
    /// Crossing of the upper CI curve, or `p_max` if it lies above the grid.
    pub p_high: f64,
}

/// Observation rate at which the isotonic error curve falls through ½.
/// `ps` must be increasing; `ci_low`/`ci_high` give the uncertainty band.
pub fn find_transition(
    ps: &[f64],
    error_rates: &[f64],
    weights: &[f64],
    ci_low: &[f64],
    ci_high: &[f64],
) -> Result<Transition> {
    if ps.len() < 3 {
        return Err(Error::Usage(format!(
            "transition needs at least 3 grid points, got {}",
            ps.len()
        )));
    }
    if ps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("grid points must be increasing".into()));
    }
    let fit = |v: &[f64]| isotonic_nonincreasing(v, weights);
    let p_hat = crossing(ps, &fit(error_rates))?;
    let first = ps[0];
    let last = ps[ps.len() - 1];
    let p_low = match crossing(ps, &fit(ci_low)) {
        Ok(p) => p,
        Err(_) => first,
    };
    let p_high = match crossing(ps, &fit(ci_high)) {
        Ok(p) => p,
        Err(_) => last,
    };
    Ok(Transition {
        p_hat,
        p_low: p_low.min(p_hat),
        p_high: p_high.max(p_hat),
    })
}
