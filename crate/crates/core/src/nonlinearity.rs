//! The Burgers-type drift `F(u) = ∂ₓ f(u)` for polynomial `f`, projected on the
//! first `N` sine modes.
//!
//! Integration by parts against `e_j` moves the derivative onto the test
//! function: `⟨∂ₓ g, e_j⟩ = −√2 jπ ∫₀¹ g(x) cos(jπx) dx`, boundary terms
//! vanishing because `e_j(0) = e_j(1) = 0`. So `f(u)` is formed on the grid and
//! only its cosine moments are needed; nothing is differentiated on the grid.
//!
//! Even powers of a sine polynomial are cosine polynomials, whose moments the
//! midpoint rule gets exactly. Odd powers are sine polynomials, for which it
//! does not; that part is analysed into sine coefficients `b_k` (exact on the
//! grid) and mapped through
//! `⟨∂ₓ e_k, e_j⟩ = 2j [1/(j − k) − 1/(j + k)]` for `k + j` odd, 0 otherwise.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::basis::{GridTransform, SpectralField};
use crate::error::{Error, Result};
use crate::norms::{c_delta_values, norm_h, DEFAULT_LAG_CAP};
use crate::operator::FracParams;

pub const MAX_DEGREE: usize = 8;

/// `f(x) = Σ a_j x^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coefficients: Vec<f64>,
}

impl Polynomial {
    /// Trailing zero coefficients are dropped so that `a_n ≠ 0`. An empty or
    /// all-zero list is the zero constant.
    pub fn new(mut coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite polynomial coefficient".into()));
        }
        while coefficients.len() > 1 && *coefficients.last().unwrap() == 0.0 {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            coefficients.push(0.0);
        }
        let degree = coefficients.len() - 1;
        if degree > MAX_DEGREE {
            return Err(Error::DegreeCap {
                degree,
                cap: MAX_DEGREE,
            });
        }
        Ok(Self { coefficients })
    }

    /// `f(x) = x²`, the stochastic Burgers case.
    pub fn burgers() -> Self {
        Self {
            coefficients: vec![0.0, 0.0, 1.0],
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    /// Smallest alias-free grid for `n_modes` modes: `2nN + 1`, and never
    /// below the `2N + 1` the transforms themselves need.
    pub fn alias_free_grid(&self, n_modes: usize) -> usize {
        2 * self.degree().max(1) * n_modes + 1
    }

    /// Split into the even-power and odd-power parts.
    fn parity_parts(&self) -> (Polynomial, Polynomial) {
        let pick = |odd: usize| {
            let c = self
                .coefficients
                .iter()
                .enumerate()
                .map(|(i, &a)| if i % 2 == odd { a } else { 0.0 })
                .collect();
            Polynomial::new(c).expect("subset of valid coefficients")
        };
        (pick(0), pick(1))
    }
}

/// Sine-polynomial half of the drift.
#[derive(Debug)]
struct OddPart {
    poly: Polynomial,
    transform: GridTransform,
    coeffs: Vec<f64>,
}

/// Cached evaluator of `P_N F` on a fixed grid.
#[derive(Debug)]
pub struct NonlinearTerm {
    poly: Polynomial,
    even: Polynomial,
    odd: Option<OddPart>,
    transform: GridTransform,
    grid: Vec<f64>,
    image: Vec<f64>,
    moments: Vec<f64>,
}

impl NonlinearTerm {
    pub fn new(poly: Polynomial, n_modes: usize, grid_len: usize) -> Result<Self> {
        let required = poly.alias_free_grid(n_modes);
        if poly.degree() >= 1 && grid_len < required {
            return Err(Error::Aliasing {
                grid: grid_len,
                modes: n_modes,
                degree: poly.degree(),
                required,
            });
        }
        let transform = GridTransform::new(n_modes, grid_len)?;
        let (even, odd) = poly.parity_parts();
        let odd = if odd.coefficients.iter().any(|&a| a != 0.0) {
            let k = odd.degree() * n_modes;
            Some(OddPart {
                transform: GridTransform::new(k, grid_len)?,
                coeffs: vec![0.0; k],
                poly: odd,
            })
        } else {
            None
        };
        Ok(Self {
            poly,
            even,
            odd,
            transform,
            grid: vec![0.0; grid_len],
            image: vec![0.0; grid_len],
            moments: vec![0.0; n_modes],
        })
    }

    pub fn n_modes(&self) -> usize {
        self.transform.n_modes()
    }

    pub fn grid_len(&self) -> usize {
        self.transform.grid_len()
    }

    /// Grid values of the last `u` passed to [`Self::apply`].
    pub fn last_grid(&self) -> &[f64] {
        &self.grid
    }

    /// Write `P_N F(u)` into `out`. After the call [`Self::last_grid`] holds
    /// `u` on the grid (not `f(u)`).
    pub fn apply(&mut self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.n_modes();
        if u.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: u.len(),
            });
        }
        if out.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: out.len(),
            });
        }
        self.transform.synthesize_into(u, &mut self.grid)?;
        if self.poly.degree() == 0 {
            out.fill(0.0);
            return Ok(());
        }
        out.fill(0.0);
        if self.even.degree() > 0 {
            for (y, &x) in self.image.iter_mut().zip(&self.grid) {
                *y = self.even.eval(x);
            }
            self.transform
                .cosine_moments_into(&self.image, &mut self.moments)?;
            for (j, (o, m)) in out.iter_mut().zip(&self.moments).enumerate() {
                *o = -SQRT_2 * (j + 1) as f64 * PI * m;
            }
        }
        if let Some(odd) = &mut self.odd {
            for (y, &x) in self.image.iter_mut().zip(&self.grid) {
                *y = odd.poly.eval(x);
            }
            odd.transform.analyze_sine_into(&self.image, &mut odd.coeffs)?;
            for (i, o) in out.iter_mut().enumerate() {
                let j = (i + 1) as f64;
                let mut acc = 0.0;
                // k + j odd: k starts at the opposite parity of j.
                let mut k = if i % 2 == 0 { 2 } else { 1 };
                while k <= odd.coeffs.len() {
                    let kf = k as f64;
                    acc += odd.coeffs[k - 1] * (1.0 / (j - kf) - 1.0 / (j + kf));
                    k += 2;
                }
                *o += 2.0 * j * acc;
            }
        }
        Ok(())
    }
}

/// `P_N ∂ₓ f(u)` with `N = u.n_modes()`, evaluated on a `G`-point grid.
pub fn apply_f(u: &SpectralField, f: &Polynomial, grid_len: usize) -> Result<SpectralField> {
    let n = u.n_modes();
    if f.degree() == 0 {
        return Ok(SpectralField::zeros(n));
    }
    let mut term = NonlinearTerm::new(f.clone(), n, grid_len)?;
    let mut out = vec![0.0; n];
    term.apply(&u.coeffs, &mut out)?;
    Ok(SpectralField { coeffs: out })
}

/// Outcome of one local Lipschitz probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzProbe {
    /// `|F(u) − F(v)|_{H^{−α/2}}`.
    pub lhs: f64,
    /// `lhs / |u − v|_{C^δ}`; 0 when `u = v`.
    pub ratio: f64,
    pub norm_u: f64,
    pub norm_v: f64,
}

/// Probe `|F(u) − F(v)|_{H^{−α/2}} ≤ C_R |u − v|_{C^δ}` for one pair with
/// `|u|_{C^δ}, |v|_{C^δ} ≤ R`. Both fields must have the same mode count.
pub fn local_lipschitz_probe(
    u: &SpectralField,
    v: &SpectralField,
    f: &Polynomial,
    delta: f64,
    radius: f64,
    p: FracParams,
    grid_len: usize,
) -> Result<LipschitzProbe> {
    if u.n_modes() != v.n_modes() {
        return Err(Error::Dimension {
            expected: u.n_modes(),
            got: v.n_modes(),
        });
    }
    let n = u.n_modes();
    let mut t = GridTransform::new(n, grid_len)?;
    let mut c_delta = |w: &SpectralField| -> Result<f64> {
        let g = t.synthesize(w)?;
        Ok(c_delta_values(&g.values, delta, DEFAULT_LAG_CAP))
    };
    let norm_u = c_delta(u)?;
    let norm_v = c_delta(v)?;
    for norm in [norm_u, norm_v] {
        if norm > radius {
            return Err(Error::NormExceedsRadius { norm, radius });
        }
    }
    let diff = c_delta(&u.sub(v))?;
    let fu = apply_f(u, f, grid_len)?;
    let fv = apply_f(v, f, grid_len)?;
    let lhs = norm_h(&fu.sub(&fv), -p.alpha() / 2.0);
    let ratio = if diff == 0.0 { 0.0 } else { lhs / diff };
    Ok(LipschitzProbe {
        lhs,
        ratio,
        norm_u,
        norm_v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_basics() {
        let p = Polynomial::new(vec![1.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.degree(), 1);
        assert_eq!(p.eval(3.0), 7.0);
        assert_eq!(Polynomial::burgers().eval(-2.0), 4.0);
        assert!(matches!(
            Polynomial::new(vec![1.0; 10]),
            Err(Error::DegreeCap { degree: 9, .. })
        ));
        assert_eq!(Polynomial::new(vec![]).unwrap().degree(), 0);
    }

    #[test]
    fn burgers_on_first_mode() {
        // ∂ₓ(2 sin²πx) = 2π sin 2πx = √2 π e_2.
        let n = 8;
        let u = SpectralField::mode(1, n, 1.0);
        let f = Polynomial::burgers();
        let out = apply_f(&u, &f, f.alias_free_grid(n)).unwrap();
        for (i, c) in out.coeffs.iter().enumerate() {
            let want = if i == 1 { SQRT_2 * PI } else { 0.0 };
            assert!((c - want).abs() < 1e-10, "mode {}: {c}", i + 1);
        }
        assert!((out.coeffs[1] - 4.442883).abs() < 1e-6);
    }

    #[test]
    fn linear_f_on_first_mode() {
        // ⟨∂ₓ e_1, e_j⟩ = 2π ∫ cos(πx) sin(jπx) dx = 2π · j(1 + (−1)^j) / (π(j² − 1))
        // for j ≠ 1 and 0 for j = 1.
        let n = 6;
        let f = Polynomial::new(vec![0.0, 1.0]).unwrap();
        let out = apply_f(&SpectralField::mode(1, n, 1.0), &f, f.alias_free_grid(n)).unwrap();
        for (i, c) in out.coeffs.iter().enumerate() {
            let j = (i + 1) as f64;
            let want = if i == 0 {
                0.0
            } else {
                2.0 * j * (1.0 + (-1f64).powi(i as i32 + 1)) / (j * j - 1.0)
            };
            assert!((c - want).abs() < 1e-12, "mode {}: {c} vs {want}", i + 1);
        }
    }

    #[test]
    fn zero_field_and_constant_f() {
        let f = Polynomial::new(vec![3.0, 0.5, 1.0]).unwrap();
        let out = apply_f(&SpectralField::zeros(5), &f, 21).unwrap();
        assert!(out.coeffs.iter().all(|c| c.abs() < 1e-14));
        let c = Polynomial::new(vec![2.0]).unwrap();
        let out = apply_f(&SpectralField::mode(2, 5, 1.0), &c, 3).unwrap();
        assert!(out.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn aliasing_guard() {
        let err = apply_f(&SpectralField::mode(1, 8, 1.0), &Polynomial::burgers(), 32).unwrap_err();
        assert!(matches!(err, Error::Aliasing { required: 33, .. }));
    }

    #[test]
    fn probe_examples() {
        let p = FracParams::new(1.9).unwrap();
        let f = Polynomial::burgers();
        let u = SpectralField::mode(1, 8, 1.0);
        let same = local_lipschitz_probe(&u, &u, &f, 0.1, 10.0, p, 33).unwrap();
        assert_eq!(same.lhs, 0.0);
        let v = u.scaled(0.9);
        let probe = local_lipschitz_probe(&u, &v, &f, 0.1, 10.0, p, 33).unwrap();
        assert!(probe.ratio.is_finite() && probe.ratio > 0.0);
        assert!(matches!(
            local_lipschitz_probe(&u, &v, &f, 0.1, 0.5, p, 33),
            Err(Error::NormExceedsRadius { .. })
        ));
    }
}
