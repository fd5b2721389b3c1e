//! Dirichlet sine eigenbasis on (0, 1) and the transforms between coefficient
//! space and the midpoint grid.
//!
//! Grid nodes sit at `x_j = (j + ½)/G`, so no node touches the boundary. All
//! transforms reduce to one complex FFT of length `2G`:
//!
//! ```text
//! Σ_k c_k sin(kπ x_j) = Im( Σ_k c_k e^{iπk/2G} e^{2πi kj/2G} )
//! Σ_j g_j cos(kπ x_j) = Re( e^{iπk/2G} Σ_j g_j e^{2πi kj/2G} )
//! ```

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncated sine basis `e_k = √2 sin(kπ·)`, `k = 1..=n_modes`, with the
/// Dirichlet Laplacian eigenvalues `λ_k = (kπ)²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    n_modes: usize,
    eigenvalues: Vec<f64>,
}

impl Basis {
    pub fn new(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter("basis needs at least one mode".into()));
        }
        let eigenvalues = (1..=n_modes).map(|k| (k as f64 * PI).powi(2)).collect();
        Ok(Self {
            n_modes,
            eigenvalues,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// `λ_1, …, λ_N`; index 0 holds `λ_1`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Evaluate `e_k(x)`. `k` is 1-based.
    pub fn eval(k: usize, x: f64) -> f64 {
        SQRT_2 * (k as f64 * PI * x).sin()
    }
}

/// Midpoint node `x_j = (j + ½)/G`.
pub fn grid_node(j: usize, grid_len: usize) -> f64 {
    (j as f64 + 0.5) / grid_len as f64
}

/// Sine coefficients of a function on (0, 1); `coeffs[k - 1]` multiplies `e_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(n_modes: usize) -> Self {
        Self {
            coeffs: vec![0.0; n_modes],
        }
    }

    /// `scale · e_k` in an `n_modes`-dimensional space.
    pub fn mode(k: usize, n_modes: usize, scale: f64) -> Self {
        let mut coeffs = vec![0.0; n_modes];
        coeffs[k - 1] = scale;
        Self { coeffs }
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    /// Zero-pad or truncate to `n_modes`.
    pub fn resized(&self, n_modes: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n_modes, 0.0);
        Self { coeffs }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self - other`, padding the shorter operand with zeros.
    pub fn sub(&self, other: &SpectralField) -> Self {
        let n = self.n_modes().max(other.n_modes());
        let coeffs = (0..n)
            .map(|i| {
                self.coeffs.get(i).copied().unwrap_or(0.0)
                    - other.coeffs.get(i).copied().unwrap_or(0.0)
            })
            .collect();
        Self { coeffs }
    }

    /// L² inner product (Parseval), over the common modes.
    pub fn dot(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Point values at the midpoint nodes `x_j = (j + ½)/G`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample `g` at the midpoint nodes.
    pub fn from_fn(grid_len: usize, g: impl Fn(f64) -> f64) -> Self {
        Self {
            values: (0..grid_len).map(|j| g(grid_node(j, grid_len))).collect(),
        }
    }

    /// Midpoint-rule L² norm.
    pub fn l2_norm(&self) -> f64 {
        let g = self.values.len() as f64;
        (self.values.iter().map(|v| v * v).sum::<f64>() / g).sqrt()
    }
}

/// Reusable FFT-backed transforms for a fixed (mode count, grid size) pair.
///
/// Synthesis works for any `G ≥ 1`; the analysis directions require
/// `G ≥ 2N + 1` so that the midpoint rule integrates the products exactly.
pub struct GridTransform {
    n_modes: usize,
    grid_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    shift: Vec<Complex64>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for GridTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridTransform")
            .field("n_modes", &self.n_modes)
            .field("grid_len", &self.grid_len)
            .finish()
    }
}

impl GridTransform {
    pub fn new(n_modes: usize, grid_len: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidParameter("transform needs at least one mode".into()));
        }
        if grid_len == 0 {
            return Err(Error::InsufficientGrid {
                grid: 0,
                modes: n_modes,
                required: 1,
            });
        }
        let len = 2 * grid_len;
        // Modes at or beyond 2G would wrap around inside the FFT.
        if n_modes >= len {
            return Err(Error::InsufficientGrid {
                grid: grid_len,
                modes: n_modes,
                required: n_modes / 2 + 1,
            });
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let shift = (0..=n_modes)
            .map(|k| Complex64::from_polar(1.0, PI * k as f64 / len as f64))
            .collect();
        Ok(Self {
            n_modes,
            grid_len,
            forward,
            inverse,
            shift,
            buffer: vec![Complex64::new(0.0, 0.0); len],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    fn require_analysis_grid(&self) -> Result<()> {
        let required = 2 * self.n_modes + 1;
        if self.grid_len < required {
            return Err(Error::InsufficientGrid {
                grid: self.grid_len,
                modes: self.n_modes,
                required,
            });
        }
        Ok(())
    }

    /// `out_j = Σ_k coeffs_k e_k(x_j)`. `coeffs` may be shorter than `n_modes`.
    pub fn synthesize_into(&mut self, coeffs: &[f64], out: &mut [f64]) -> Result<()> {
        if coeffs.len() > self.n_modes {
            return Err(Error::Dimension {
                expected: self.n_modes,
                got: coeffs.len(),
            });
        }
        if out.len() != self.grid_len {
            return Err(Error::Dimension {
                expected: self.grid_len,
                got: out.len(),
            });
        }
        self.buffer.fill(Complex64::new(0.0, 0.0));
        for (i, &c) in coeffs.iter().enumerate() {
            self.buffer[i + 1] = self.shift[i + 1] * c;
        }
        self.inverse
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (o, b) in out.iter_mut().zip(&self.buffer) {
            *o = SQRT_2 * b.im;
        }
        Ok(())
    }

    /// Load grid values and return, for `k = 1..=N`, the shifted sums
    /// `e^{iπk/2G} Σ_j g_j e^{iπkj/G}` in `buffer[1..=N]`.
    fn shifted_sums(&mut self, values: &[f64]) -> Result<()> {
        self.require_analysis_grid()?;
        if values.len() != self.grid_len {
            return Err(Error::Dimension {
                expected: self.grid_len,
                got: values.len(),
            });
        }
        self.buffer.fill(Complex64::new(0.0, 0.0));
        for (b, &v) in self.buffer.iter_mut().zip(values) {
            b.re = v;
        }
        // Forward FFT gives Σ g_j e^{-2πi kj/2G}; g is real so conjugation
        // flips the sign of the exponent.
        self.forward
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        for k in 1..=self.n_modes {
            self.buffer[k] = self.shift[k] * self.buffer[k].conj();
        }
        Ok(())
    }

    /// Midpoint-rule sine coefficients `c_k = (1/G) Σ_j g_j e_k(x_j)`.
    pub fn analyze_sine_into(&mut self, values: &[f64], out: &mut [f64]) -> Result<()> {
        if out.len() != self.n_modes {
            return Err(Error::Dimension {
                expected: self.n_modes,
                got: out.len(),
            });
        }
        self.shifted_sums(values)?;
        let scale = SQRT_2 / self.grid_len as f64;
        for (k, o) in out.iter_mut().enumerate() {
            *o = scale * self.buffer[k + 1].im;
        }
        Ok(())
    }

    /// Midpoint-rule cosine moments `m_k = (1/G) Σ_j g_j cos(kπ x_j)`.
    pub fn cosine_moments_into(&mut self, values: &[f64], out: &mut [f64]) -> Result<()> {
        if out.len() != self.n_modes {
            return Err(Error::Dimension {
                expected: self.n_modes,
                got: out.len(),
            });
        }
        self.shifted_sums(values)?;
        let scale = 1.0 / self.grid_len as f64;
        for (k, o) in out.iter_mut().enumerate() {
            *o = scale * self.buffer[k + 1].re;
        }
        Ok(())
    }

    pub fn synthesize(&mut self, v: &SpectralField) -> Result<GridField> {
        let mut values = vec![0.0; self.grid_len];
        self.synthesize_into(&v.coeffs, &mut values)?;
        Ok(GridField { values })
    }
}

/// Evaluate the sine series `v` at the `G` midpoint nodes.
pub fn synthesize(v: &SpectralField, basis: &Basis, grid_len: usize) -> Result<GridField> {
    if v.n_modes() > basis.n_modes() {
        return Err(Error::Dimension {
            expected: basis.n_modes(),
            got: v.n_modes(),
        });
    }
    // Pad the FFT's mode capacity when the grid is coarser than the basis;
    // synthesis itself has no grid-size requirement.
    let cap = basis.n_modes().max(v.n_modes()).max(1);
    if cap >= 2 * grid_len.max(1) {
        return Ok(synthesize_direct(v, grid_len));
    }
    GridTransform::new(cap, grid_len)?.synthesize(v)
}

fn synthesize_direct(v: &SpectralField, grid_len: usize) -> GridField {
    GridField::from_fn(grid_len, |x| {
        v.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * Basis::eval(i + 1, x))
            .sum()
    })
}

/// Sine coefficients of a grid function by the midpoint rule.
pub fn analyze_sine(g: &GridField, basis: &Basis) -> Result<SpectralField> {
    let mut t = GridTransform::new(basis.n_modes(), g.len())?;
    let mut coeffs = vec![0.0; basis.n_modes()];
    t.analyze_sine_into(&g.values, &mut coeffs)?;
    Ok(SpectralField { coeffs })
}

/// `m_j = ∫₀¹ g(x) cos(jπx) dx`, `j = 1..=n_modes`, by the midpoint rule.
pub fn cosine_moments(g: &GridField, n_modes: usize) -> Result<Vec<f64>> {
    let mut t = GridTransform::new(n_modes, g.len())?;
    let mut out = vec![0.0; n_modes];
    t.cosine_moments_into(&g.values, &mut out)?;
    Ok(out)
}

/// Hölder constant of the sine modes, `|e_k|_{C^δ} ≤ c_δ k^δ`.
///
/// From `|e_k(x) − e_k(y)| ≤ √2 min(2, kπ|x−y|) ≤ √2 · 2^{1−δ} (kπ|x−y|)^δ`
/// the seminorm is at most `√2 · 2^{1−δ} π^δ k^δ`; the sup part adds
/// `√2 ≤ √2 k^δ`.
pub fn holder_constant(delta: f64) -> f64 {
    SQRT_2 * (1.0 + 2f64.powf(1.0 - delta) * PI.powf(delta))
}

/// Grid C^δ norm of `e_k` next to the bound `c_δ k^δ`.
///
/// The grid has 64 points per wavelength (at least 1024) and every pair is
/// scanned, so `lhs` is a sharp lower estimate of the continuous norm.
pub fn holder_seminorm_bound_check(k: usize, delta: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidParameter("mode index starts at 1".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "δ = {delta} outside (0, 1]"
        )));
    }
    let grid_len = (32 * k).max(1024);
    let g = GridField::from_fn(grid_len, |x| Basis::eval(k, x));
    let est = crate::norms::holder_scan(&g.values, delta, grid_len - 1, 0);
    let rhs = holder_constant(delta) * (k as f64).powf(delta);
    Ok((est.sup_norm + est.seminorm, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_sum(coeffs: &[f64], x: f64) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * SQRT_2 * ((i + 1) as f64 * PI * x).sin())
            .sum()
    }

    #[test]
    fn basis_eigenvalues() {
        let b = Basis::new(5).unwrap();
        assert_eq!(b.eigenvalues()[0], PI * PI);
        assert!(b.eigenvalues().windows(2).all(|w| w[0] < w[1]));
        assert!(Basis::new(0).is_err());
    }

    #[test]
    fn single_mode_synthesis() {
        let b = Basis::new(4).unwrap();
        let g = synthesize(&SpectralField::mode(1, 4, 1.0), &b, 4).unwrap();
        for (j, x) in [0.125, 0.375, 0.625, 0.875].iter().enumerate() {
            assert!((g.values[j] - SQRT_2 * (PI * x).sin()).abs() < 1e-14);
        }
        let z = synthesize(&SpectralField::zeros(4), &b, 4).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn second_mode_at_quarter() {
        // G = 2 puts the nodes at 1/4 and 3/4.
        let b = Basis::new(2).unwrap();
        let g = synthesize(&SpectralField::new(vec![0.0, 1.0]), &b, 2).unwrap();
        assert!((g.values[0] - SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn fft_synthesis_matches_direct_sum() {
        let coeffs: Vec<f64> = (0..37).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
        let mut t = GridTransform::new(37, 75).unwrap();
        let mut out = vec![0.0; 75];
        t.synthesize_into(&coeffs, &mut out).unwrap();
        for (j, o) in out.iter().enumerate() {
            assert!((o - direct_sum(&coeffs, grid_node(j, 75))).abs() < 1e-12);
        }
    }

    #[test]
    fn analysis_round_trip() {
        let b = Basis::new(2).unwrap();
        let v = SpectralField::new(vec![0.3, -0.7]);
        let g = synthesize(&v, &b, 64).unwrap();
        let back = analyze_sine(&g, &b).unwrap();
        assert!((back.coeffs[0] - 0.3).abs() < 1e-12);
        assert!((back.coeffs[1] + 0.7).abs() < 1e-12);

        let b = Basis::new(8).unwrap();
        let g = synthesize(&SpectralField::mode(1, 8, 1.0), &b, 64).unwrap();
        let back = analyze_sine(&g, &b).unwrap();
        for (i, c) in back.coeffs.iter().enumerate() {
            let want = if i == 0 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-12);
        }
        let zero = analyze_sine(&GridField::new(vec![0.0; 64]), &b).unwrap();
        assert!(zero.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn analysis_rejects_small_grid() {
        let b = Basis::new(8).unwrap();
        let err = analyze_sine(&GridField::new(vec![1.0; 16]), &b).unwrap_err();
        assert!(matches!(err, Error::InsufficientGrid { required: 17, .. }));
        assert!(cosine_moments(&GridField::new(vec![1.0; 16]), 8).is_err());
    }

    #[test]
    fn cosine_moment_examples() {
        let g = GridField::from_fn(64, |x| (2.0 * PI * x).cos());
        let m = cosine_moments(&g, 16).unwrap();
        for (i, mj) in m.iter().enumerate() {
            let want = if i == 1 { 0.5 } else { 0.0 };
            assert!((mj - want).abs() < 1e-12, "j = {}: {mj}", i + 1);
        }
        // ∫₀¹ cos(jπx) dx = sin(jπ)/(jπ) = 0 for every integer j.
        let one = cosine_moments(&GridField::new(vec![1.0; 64]), 16).unwrap();
        assert!(one.iter().all(|m| m.abs() < 1e-12));
        let zero = cosine_moments(&GridField::new(vec![0.0; 64]), 16).unwrap();
        assert!(zero.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn synthesis_dimension_error() {
        let b = Basis::new(2).unwrap();
        assert!(matches!(
            synthesize(&SpectralField::zeros(3), &b, 8),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn holder_bound_examples() {
        for (k, d) in [(1, 0.5), (8, 0.1), (3, 1.0)] {
            let (lhs, rhs) = holder_seminorm_bound_check(k, d).unwrap();
            assert!(lhs <= rhs, "k = {k}, δ = {d}: {lhs} > {rhs}");
        }
        // Small δ: the norm approaches sup + oscillation = 3√2, as does c_δ.
        let (lhs, rhs) = holder_seminorm_bound_check(4, 1e-6).unwrap();
        assert!(lhs <= rhs);
        assert!((rhs - 3.0 * SQRT_2).abs() < 1e-4);
        assert!((lhs - 3.0 * SQRT_2).abs() < 1e-3);
    }
}
