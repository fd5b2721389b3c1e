//! Discrete norms: spectral L² and H^s, the grid Hölder norm C^δ, and an
//! empirical temporal Hölder exponent for paths.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{GridField, SpectralField};
use crate::error::{Error, Result};
use crate::regression::{fit_line, LinearFit};

/// Default number of neighbouring lags scanned exhaustively.
pub const DEFAULT_LAG_CAP: usize = 64;
/// Random long-range pairs added on top of the lag-capped scan.
pub const RANDOM_PAIRS: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub sup_norm: f64,
    pub seminorm: f64,
    pub pairs_used: usize,
}

impl HolderEstimate {
    /// `|f|_{C^δ} = |f|_∞ + [f]_δ`.
    pub fn norm(&self) -> f64 {
        self.sup_norm + self.seminorm
    }
}

pub fn norm_l2(v: &SpectralField) -> f64 {
    v.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `sqrt(Σ (kπ)^{2s} c_k²)`; any real `s`.
pub fn norm_h(v: &SpectralField, s: f64) -> f64 {
    if s == 0.0 {
        return norm_l2(v);
    }
    v.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| ((i + 1) as f64 * PI).powf(2.0 * s) * c * c)
        .sum::<f64>()
        .sqrt()
}

/// Location of the extremal values found by [`holder_scan`].
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct HolderWitness {
    pub sup_norm: f64,
    pub sup_index: usize,
    pub seminorm: f64,
    pub pair: (usize, usize),
    pub pairs_used: usize,
}

/// Lag-capped exhaustive scan plus `random_pairs` long-range pairs.
///
/// Node spacing is `1/G`, so a lag `ℓ` corresponds to `|x − y| = ℓ/G`. No
/// range check on `delta`; callers validate.
pub(crate) fn holder_scan(
    values: &[f64],
    delta: f64,
    lag_cap: usize,
    random_pairs: usize,
) -> HolderWitness {
    let g = values.len();
    let mut w = HolderWitness::default();
    for (j, v) in values.iter().enumerate() {
        if v.abs() > w.sup_norm {
            w.sup_norm = v.abs();
            w.sup_index = j;
        }
    }
    if g < 2 {
        return w;
    }
    let lag_cap = lag_cap.min(g - 1);
    let gf = g as f64;
    for lag in 1..=lag_cap {
        let weight = (gf / lag as f64).powf(delta);
        for j in 0..g - lag {
            let ratio = (values[j + lag] - values[j]).abs() * weight;
            if ratio > w.seminorm {
                w.seminorm = ratio;
                w.pair = (j, j + lag);
            }
        }
        w.pairs_used += g - lag;
    }
    if lag_cap < g - 1 && random_pairs > 0 {
        // Fixed stream per grid size keeps the estimate a deterministic
        // function of the values.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 ^ g as u64);
        for _ in 0..random_pairs {
            let a = rng.random_range(0..g);
            let b = rng.random_range(0..g);
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if j - i <= lag_cap {
                continue;
            }
            let ratio = (values[j] - values[i]).abs() * (gf / (j - i) as f64).powf(delta);
            if ratio > w.seminorm {
                w.seminorm = ratio;
                w.pair = (i, j);
            }
            w.pairs_used += 1;
        }
    }
    w
}

/// Discrete C^δ norm on the midpoint grid.
///
/// With `lag_cap ≥ G − 1` this is the exact grid Hölder norm; otherwise short
/// lags are scanned exhaustively and 512 random long pairs are sampled.
pub fn norm_c_delta(g: &GridField, delta: f64, lag_cap: usize) -> Result<HolderEstimate> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("δ = {delta} outside [0, 1)")));
    }
    if g.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            got: g.len(),
        });
    }
    let w = holder_scan(&g.values, delta, lag_cap, RANDOM_PAIRS);
    Ok(HolderEstimate {
        sup_norm: w.sup_norm,
        seminorm: w.seminorm,
        pairs_used: w.pairs_used,
    })
}

/// C^δ norm of raw grid values, skipping validation. Used in hot loops.
pub(crate) fn c_delta_values(values: &[f64], delta: f64, lag_cap: usize) -> f64 {
    let w = holder_scan(values, delta, lag_cap, RANDOM_PAIRS);
    w.sup_norm + w.seminorm
}

/// Result of a temporal Hölder-exponent fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TemporalExponent {
    /// Fitted slope; `+∞` when every increment vanishes.
    pub exponent: f64,
    /// Set when the path has no increments to fit.
    pub degenerate: bool,
    pub lags: Vec<usize>,
    pub max_increments: Vec<f64>,
    pub fit: Option<LinearFit>,
}

const MIN_SAMPLES: usize = 64;

/// Max-increment Hölder exponent of a path given through a distance.
///
/// For dyadic lags `h = 1, 2, 4, …, n/16` (in steps) the largest increment
/// `max_t dist(t, t + h)` is computed, and the slope of its logarithm against
/// `log(h·Δt)` is returned. The log-factor in the modulus of continuity biases
/// the estimate slightly downwards.
pub fn path_holder_exponent(
    times: &[f64],
    dist: impl Fn(usize, usize) -> f64,
) -> Result<TemporalExponent> {
    let n = times.len();
    if n < MIN_SAMPLES {
        return Err(Error::TooFewPoints {
            required: MIN_SAMPLES,
            got: n,
        });
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("time grid must be increasing".into()));
    }
    for (i, t) in times.iter().enumerate() {
        let expected = times[0] + i as f64 * dt;
        if (t - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
            return Err(Error::InvalidParameter("time grid is not uniform".into()));
        }
    }
    let max_lag = (n - 1) / 16;
    let mut lags = Vec::new();
    let mut lag = 1;
    while lag <= max_lag {
        lags.push(lag);
        lag *= 2;
    }
    let max_increments: Vec<f64> = lags
        .iter()
        .map(|&h| (0..n - h).map(|i| dist(i, i + h)).fold(0.0, f64::max))
        .collect();
    if max_increments.iter().all(|&m| m == 0.0) {
        return Ok(TemporalExponent {
            exponent: f64::INFINITY,
            degenerate: true,
            lags,
            max_increments,
            fit: None,
        });
    }
    if max_increments.iter().any(|&m| m <= 0.0 || !m.is_finite()) {
        return Err(Error::InvalidParameter(
            "path has vanishing or non-finite increments at some lags".into(),
        ));
    }
    let xs: Vec<f64> = lags.iter().map(|&h| (h as f64 * dt).ln()).collect();
    let ys: Vec<f64> = max_increments.iter().map(|m| m.ln()).collect();
    let fit = fit_line(&xs, &ys)?;
    Ok(TemporalExponent {
        exponent: fit.slope,
        degenerate: false,
        lags,
        max_increments,
        fit: Some(fit),
    })
}

/// Temporal Hölder exponent of a scalar series on a uniform grid.
pub fn temporal_holder_exponent(series: &[(f64, f64)]) -> Result<TemporalExponent> {
    let times: Vec<f64> = series.iter().map(|p| p.0).collect();
    path_holder_exponent(&times, |i, j| (series[j].1 - series[i].1).abs())
}
