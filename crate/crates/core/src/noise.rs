//! Truncated cylindrical Wiener process and its Ornstein–Uhlenbeck stochastic
//! convolution, sampled exactly and reproducibly.
//!
//! Every Gaussian comes from a counter-based stream: ChaCha20 keyed by the
//! seed, with the 64-bit stream id `tag << 32 | mode`, read at word position
//! `4 · step`. Each standard normal consumes exactly two 64-bit outputs
//! (Box–Muller, cosine branch), so the draw for `(seed, tag, mode, step)` is
//! a pure function of those four numbers. That gives:
//!
//! * refinement coupling: coarse grids are built from the same fine draws;
//! * mode coupling: mode `k` never depends on how many modes are simulated;
//! * schedule independence when modes or seeds are generated in parallel.

use std::f64::consts::PI;
use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::operator::FracParams;

/// Identifier of the random stream construction, recorded in every report.
pub const RNG_ID: &str = "chacha20:key=seed,stream=tag<<32|mode,word=4*step;box-muller-cos;v1";

/// Default finest time resolution.
pub const DEFAULT_BASE_STEPS: usize = 1 << 13;

/// Purpose tags keeping the OU and Wiener draws on disjoint streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum StreamTag {
    OrnsteinUhlenbeck = 1,
    Wiener = 2,
}

/// Random-access standard normals for one `(seed, tag, mode)` triple.
pub struct GaussianStream {
    rng: ChaCha20Rng,
}

impl GaussianStream {
    pub fn new(seed: u64, tag: StreamTag, mode: usize) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(((tag as u64) << 32) | mode as u64);
        Self { rng }
    }

    /// The normal attached to `step`.
    pub fn normal_at(&mut self, step: usize) -> f64 {
        self.rng.set_word_pos(4 * step as u128);
        self.next_normal()
    }

    /// The normal at the current position; consecutive calls walk the steps
    /// `0, 1, 2, …` in order after a fresh construction.
    pub fn next_normal(&mut self) -> f64 {
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        // u1 ∈ (0, 1], u2 ∈ [0, 1)
        let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

/// Noise realisation: seed, mode count, finest step count and horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub seed: u64,
    pub n_modes: usize,
    pub base_steps: usize,
    pub final_time: f64,
}

impl NoiseSpec {
    pub fn new(seed: u64, n_modes: usize, base_steps: usize, final_time: f64) -> Result<Self> {
        let spec = Self {
            seed,
            n_modes,
            base_steps,
            final_time,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidParameter("noise needs at least one mode".into()));
        }
        if !self.base_steps.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "base step count {} is not a power of two",
                self.base_steps
            )));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "final time {} must be positive",
                self.final_time
            )));
        }
        Ok(())
    }

    pub fn base_dt(&self) -> f64 {
        self.final_time / self.base_steps as f64
    }

    /// Fine steps per coarse step for an `steps`-step grid.
    pub fn stride(&self, steps: usize) -> Result<usize> {
        if steps == 0 || steps > self.base_steps || self.base_steps % steps != 0 {
            return Err(Error::Divisibility {
                coarse: steps,
                base: self.base_steps,
            });
        }
        Ok(self.base_steps / steps)
    }

    /// Hash of everything that determines the sample path of a given mode:
    /// seed, finest grid, horizon, `α` and the stream construction. The mode
    /// count is left out on purpose since runs at different `N` share modes.
    pub fn coupling_hash(&self, p: FracParams) -> String {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update((self.base_steps as u64).to_le_bytes());
        h.update(self.final_time.to_le_bytes());
        h.update(p.alpha().to_le_bytes());
        h.update(RNG_ID.as_bytes());
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Exact one-step law of an OU mode with rate `λ = (kπ)^α`:
/// `X(t + Δt) = decay · X(t) + std · ξ`, `ξ ~ N(0, 1)`.
pub fn ou_step_moments(rate: f64, dt: f64) -> Result<(f64, f64)> {
    if !(rate > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "OU step needs positive rate and step, got λ = {rate}, Δt = {dt}"
        )));
    }
    let decay = (-rate * dt).exp();
    let std = (-(-2.0 * rate * dt).exp_m1() / (2.0 * rate)).sqrt();
    Ok((decay, std))
}

/// Samples of the OU process `𝒲_N` at `t_m = m T / M`, row-major `(M + 1) × N`.
#[derive(Clone, Debug, PartialEq)]
pub struct OuPath {
    n_modes: usize,
    steps: usize,
    final_time: f64,
    values: Vec<f64>,
}

impl OuPath {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    /// Coefficients of `𝒲_N(t_m)`.
    pub fn row(&self, m: usize) -> &[f64] {
        &self.values[m * self.n_modes..(m + 1) * self.n_modes]
    }

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.values[m * self.n_modes + k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// First `n` modes. Bitwise equal to generating with `n` modes.
    pub fn truncate_modes(&self, n: usize) -> Result<OuPath> {
        if n == 0 || n > self.n_modes {
            return Err(Error::Dimension {
                expected: self.n_modes,
                got: n,
            });
        }
        let values = self
            .values
            .chunks_exact(self.n_modes)
            .flat_map(|row| row[..n].iter().copied())
            .collect();
        Ok(OuPath {
            n_modes: n,
            steps: self.steps,
            final_time: self.final_time,
            values,
        })
    }

    /// Every `steps / coarse`-th row.
    pub fn subsample(&self, coarse: usize) -> Result<OuPath> {
        if coarse == 0 || coarse > self.steps || self.steps % coarse != 0 {
            return Err(Error::Divisibility {
                coarse,
                base: self.steps,
            });
        }
        let stride = self.steps / coarse;
        let mut values = Vec::with_capacity((coarse + 1) * self.n_modes);
        for m in 0..=coarse {
            values.extend_from_slice(self.row(m * stride));
        }
        Ok(OuPath {
            n_modes: self.n_modes,
            steps: coarse,
            final_time: self.final_time,
            values,
        })
    }

    /// Binary dump: little-endian header `seed: u64, N: u64, M: u64, T: f64,
    /// α: f64`, then `(M + 1) · N` row-major `f64` values.
    pub fn write_binary<W: Write>(&self, mut w: W, seed: u64, alpha: f64) -> Result<()> {
        write_state_dump(
            &mut w,
            seed,
            self.n_modes,
            self.steps,
            self.final_time,
            alpha,
            &self.values,
        )
    }
}

/// Shared binary layout for OU paths and solver states.
pub fn write_state_dump<W: Write>(
    w: &mut W,
    seed: u64,
    n_modes: usize,
    steps: usize,
    final_time: f64,
    alpha: f64,
    values: &[f64],
) -> Result<()> {
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&(n_modes as u64).to_le_bytes())?;
    w.write_all(&(steps as u64).to_le_bytes())?;
    w.write_all(&final_time.to_le_bytes())?;
    w.write_all(&alpha.to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Exact OU recursion at the finest resolution for one mode (1-based `k`),
/// `base_steps + 1` values starting from 0.
fn ou_mode_column(spec: &NoiseSpec, p: FracParams, k: usize) -> Vec<f64> {
    let (decay, std) =
        ou_step_moments(p.symbol(k), spec.base_dt()).expect("validated positive rate and step");
    let mut stream = GaussianStream::new(spec.seed, StreamTag::OrnsteinUhlenbeck, k);
    let mut column = Vec::with_capacity(spec.base_steps + 1);
    let mut x = 0.0;
    column.push(x);
    for _ in 0..spec.base_steps {
        x = decay * x + std * stream.next_normal();
        column.push(x);
    }
    column
}

/// `𝒲_N(t_m)` on the `M`-step grid, `M | M_base`.
pub fn generate_ou_path(spec: &NoiseSpec, p: FracParams, steps: usize) -> Result<OuPath> {
    spec.validate()?;
    let stride = spec.stride(steps)?;
    let columns: Vec<Vec<f64>> = (1..=spec.n_modes)
        .into_par_iter()
        .map(|k| ou_mode_column(spec, p, k))
        .collect();
    let n = spec.n_modes;
    let mut values = vec![0.0; (steps + 1) * n];
    for (k, column) in columns.iter().enumerate() {
        for m in 0..=steps {
            values[m * n + k] = column[m * stride];
        }
    }
    Ok(OuPath {
        n_modes: n,
        steps,
        final_time: spec.final_time,
        values,
    })
}

/// Brownian increments `β_k(t_{m+1}) − β_k(t_m)` on the `M`-step grid,
/// row-major `M × N`. Each coarse increment is the in-order sum of its fine
/// increments `√Δt_base · ξ`.
pub fn wiener_increments(spec: &NoiseSpec, steps: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let stride = spec.stride(steps)?;
    let scale = spec.base_dt().sqrt();
    let columns: Vec<Vec<f64>> = (1..=spec.n_modes)
        .into_par_iter()
        .map(|k| {
            let mut stream = GaussianStream::new(spec.seed, StreamTag::Wiener, k);
            (0..steps)
                .map(|_| {
                    let mut sum = 0.0;
                    for _ in 0..stride {
                        sum += scale * stream.next_normal();
                    }
                    sum
                })
                .collect()
        })
        .collect();
    let n = spec.n_modes;
    let mut values = vec![0.0; steps * n];
    for (k, column) in columns.iter().enumerate() {
        for (m, v) in column.iter().enumerate() {
            values[m * n + k] = *v;
        }
    }
    Ok(values)
}
