//! Fractional powers of the Dirichlet Laplacian, the analytic semigroup it
//! generates, and the Galerkin projection. All of them are diagonal on the
//! sine basis, so they act as multipliers on the coefficient vector.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{grid_node, Basis, GridTransform, SpectralField};
use crate::error::{Error, Result};
use crate::norms::{holder_scan, DEFAULT_LAG_CAP};

/// Dissipation index `α ∈ (1, 2]` of `A^{α/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    alpha: f64,
}

impl FracParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "α = {alpha} outside (1, 2]"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Eigenvalue of `A^{α/2}` on `e_k`: `λ_k^{α/2} = (kπ)^α`.
    pub fn symbol(&self, k: usize) -> f64 {
        (k as f64 * PI).powf(self.alpha)
    }
}

/// `(kπ)^β`, the symbol of `A^{β/2}`.
fn power_symbol(k: usize, beta: f64) -> f64 {
    (k as f64 * PI).powf(beta)
}

/// `A^{β/2} v`; negative `β` gives the inverse powers.
pub fn apply_frac_power(v: &SpectralField, beta: f64) -> SpectralField {
    if beta == 0.0 {
        return v.clone();
    }
    SpectralField {
        coeffs: v
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| power_symbol(i + 1, beta) * c)
            .collect(),
    }
}

/// Multipliers `e^{-(kπ)^α t}` for `k = 1..=n_modes`.
pub fn semigroup_multipliers(n_modes: usize, t: f64, p: FracParams) -> Vec<f64> {
    (1..=n_modes).map(|k| (-p.symbol(k) * t).exp()).collect()
}

/// `e^{-A^{α/2} t} v`.
pub fn apply_semigroup(v: &SpectralField, t: f64, p: FracParams) -> Result<SpectralField> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(v.clone());
    }
    let m = semigroup_multipliers(v.n_modes(), t, p);
    Ok(SpectralField {
        coeffs: v.coeffs.iter().zip(&m).map(|(c, d)| c * d).collect(),
    })
}

/// `P_N v`: zero every coefficient beyond index `n`.
pub fn project(v: &SpectralField, n: usize) -> SpectralField {
    let mut out = v.clone();
    for c in out.coeffs.iter_mut().skip(n) {
        *c = 0.0;
    }
    out
}

/// Target space of an operator-norm estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormTarget {
    L2,
    /// `H^γ_2`.
    Sobolev(f64),
    /// `C^δ`.
    Holder(f64),
}

const MAX_TRUNCATION: usize = 256;
const RESTARTS: usize = 64;
const ASCENT_STEPS: usize = 8;

/// Norm of `e^{-A^{α/2} t}` from `H^β_2` into `target`, restricted to the span
/// of `e_1..e_N`.
///
/// Hilbert targets use the exact diagonal formula
/// `max_k (kπ)^{γ−β} e^{−(kπ)^α t}`. The C^δ target is a lower bound obtained
/// by [`holder_operator_norm`].
pub fn operator_norm_estimate(
    source_exponent: f64,
    target: NormTarget,
    t: f64,
    p: FracParams,
    n_trunc: usize,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    check_truncation(n_trunc)?;
    let decay = semigroup_multipliers(n_trunc, t, p);
    match target {
        NormTarget::L2 => Ok(diagonal_norm(&decay, source_exponent, 0.0)),
        NormTarget::Sobolev(gamma) => Ok(diagonal_norm(&decay, source_exponent, gamma)),
        NormTarget::Holder(delta) => {
            let multipliers: Vec<f64> = decay
                .iter()
                .enumerate()
                .map(|(i, d)| d * power_symbol(i + 1, -source_exponent))
                .collect();
            holder_operator_norm(&multipliers, delta)
        }
    }
}

/// `t^{β/α} ‖A^{β/2} e^{−A^{α/2} t}‖_{L(L²)} = t^{β/α} max_k (kπ)^β e^{−(kπ)^α t}`
/// over the first `n_trunc` modes. Bounded in `t` for `β ≥ 0`.
pub fn smoothing_profile(beta: f64, t: f64, p: FracParams, n_trunc: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    let decay = semigroup_multipliers(n_trunc, t, p);
    Ok(t.powf(beta / p.alpha()) * diagonal_norm(&decay, 0.0, beta))
}

fn check_truncation(n_trunc: usize) -> Result<()> {
    if n_trunc == 0 || n_trunc > MAX_TRUNCATION {
        return Err(Error::InvalidParameter(format!(
            "truncation {n_trunc} outside 1..={MAX_TRUNCATION}"
        )));
    }
    Ok(())
}

fn diagonal_norm(decay: &[f64], beta: f64, gamma: f64) -> f64 {
    decay
        .iter()
        .enumerate()
        .map(|(i, d)| power_symbol(i + 1, gamma - beta) * d)
        .fold(0.0, f64::max)
}

/// `‖e^{-A^{α/2} t} − e^{-A^{α/2} s}‖` from `H^{−α/2}_2` into `C^δ` on the
/// first `n_trunc` modes; `s ≤ t`.
pub fn semigroup_difference_norm(
    t: f64,
    s: f64,
    delta: f64,
    p: FracParams,
    n_trunc: usize,
) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must be positive")));
    }
    if t < s {
        return Err(Error::InvalidParameter(format!(
            "ordering violated: t = {t} < s = {s}"
        )));
    }
    check_truncation(n_trunc)?;
    if t == s {
        return Ok(0.0);
    }
    let half = p.alpha() / 2.0;
    let multipliers: Vec<f64> = (1..=n_trunc)
        .map(|k| {
            let l = p.symbol(k);
            // e^{-ls} - e^{-lt} = e^{-ls} (1 - e^{-l(t-s)}), both factors exact.
            power_symbol(k, half) * (-l * s).exp() * -(-l * (t - s)).exp_m1()
        })
        .collect();
    holder_operator_norm(&multipliers, delta)
}

/// Lower bound on `sup { |Σ d_k a_k e_k|_{C^δ} : |a|_2 = 1 }`.
///
/// The C^δ norm is a supremum of linear functionals of `a` (point values and
/// difference quotients), so each ascent step takes the functional attaining
/// the current maximum and jumps to its normalised gradient. Starting points
/// are every single mode plus 64 random unit vectors.
pub fn holder_operator_norm(multipliers: &[f64], delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("δ = {delta} outside [0, 1)")));
    }
    let n = multipliers.len();
    if n == 0 {
        return Ok(0.0);
    }
    let grid_len = 8 * n + 1;
    let mut transform = GridTransform::new(n, grid_len)?;
    let mut coeffs = vec![0.0; n];
    let mut values = vec![0.0; grid_len];

    let mut evaluate = |a: &[f64], grad: Option<&mut [f64]>| -> Result<f64> {
        for ((c, d), ai) in coeffs.iter_mut().zip(multipliers).zip(a) {
            *c = d * ai;
        }
        transform.synthesize_into(&coeffs, &mut values)?;
        let w = holder_scan(&values, delta, DEFAULT_LAG_CAP, 0);
        if let Some(grad) = grad {
            let xs = grid_node(w.sup_index, grid_len);
            let sign_sup = values[w.sup_index].signum();
            let (i, j) = w.pair;
            let (xi, xj) = (grid_node(i, grid_len), grid_node(j, grid_len));
            let sign_pair = (values[j] - values[i]).signum();
            let weight = if i == j {
                0.0
            } else {
                sign_pair / (xj - xi).powf(delta)
            };
            for (k, gk) in grad.iter_mut().enumerate() {
                let m = k + 1;
                *gk = multipliers[k]
                    * (sign_sup * Basis::eval(m, xs)
                        + weight * (Basis::eval(m, xj) - Basis::eval(m, xi)));
            }
        }
        Ok(w.sup_norm + w.seminorm)
    };

    let mut best = 0.0f64;
    let mut unit = vec![0.0; n];
    for k in 0..n {
        unit.fill(0.0);
        unit[k] = 1.0;
        best = best.max(evaluate(&unit, None)?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x0b5e_55ed ^ n as u64);
    let mut a = vec![0.0; n];
    let mut grad = vec![0.0; n];
    for _ in 0..RESTARTS {
        for ai in a.iter_mut() {
            *ai = rng.random::<f64>() - 0.5;
        }
        normalise(&mut a);
        for _ in 0..ASCENT_STEPS {
            let value = evaluate(&a, Some(&mut grad))?;
            best = best.max(value);
            if normalise(&mut grad) == 0.0 {
                break;
            }
            a.copy_from_slice(&grad);
        }
        best = best.max(evaluate(&a, None)?);
    }
    Ok(best)
}

fn normalise(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64) -> FracParams {
        FracParams::new(alpha).unwrap()
    }

    #[test]
    fn alpha_range() {
        assert!(FracParams::new(1.0).is_err());
        assert!(FracParams::new(2.1).is_err());
        assert!(FracParams::new(2.0).is_ok());
    }

    #[test]
    fn frac_power_examples() {
        let v = SpectralField::new(vec![0.5, -1.0, 2.0]);
        assert_eq!(apply_frac_power(&v, 0.0), v);
        let e1 = SpectralField::mode(1, 3, 1.0);
        assert!((apply_frac_power(&e1, 2.0).coeffs[0] - PI * PI).abs() < 1e-12);
        let back = apply_frac_power(&apply_frac_power(&v, 1.3), -1.3);
        for (a, b) in back.coeffs.iter().zip(&v.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn semigroup_examples() {
        let e1 = SpectralField::mode(1, 2, 1.0);
        assert_eq!(apply_semigroup(&e1, 0.0, p(1.9)).unwrap(), e1);
        let out = apply_semigroup(&e1, 1.0, p(2.0)).unwrap();
        assert!((out.coeffs[0] - (-PI * PI).exp()).abs() < 1e-18);
        assert!((out.coeffs[0] - 5.1723e-5).abs() < 1e-8);
        assert!(matches!(
            apply_semigroup(&e1, -1.0, p(2.0)),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn projection_examples() {
        let v = SpectralField::new(vec![1.0, 1.0, 1.0]);
        assert_eq!(project(&v, 2).coeffs, vec![1.0, 1.0, 0.0]);
        assert_eq!(project(&v, 5), v);
        assert_eq!(project(&project(&v, 2), 2), project(&v, 2));
    }

    #[test]
    fn hilbert_norms() {
        let n = operator_norm_estimate(0.5, NormTarget::Sobolev(0.5), 0.01, p(1.9), 64).unwrap();
        assert!(n <= 1.0);
        // β = 0, γ = 1, α = 2: max_k kπ e^{-(kπ)² t}, scanned directly.
        let t = 0.003;
        let scan = (1..=64)
            .map(|k| k as f64 * PI * (-(k as f64 * PI).powi(2) * t).exp())
            .fold(0.0, f64::max);
        let got = operator_norm_estimate(0.0, NormTarget::Sobolev(1.0), t, p(2.0), 64).unwrap();
        assert!((got - scan).abs() < 1e-12 * scan);
        assert!(operator_norm_estimate(0.0, NormTarget::L2, 0.0, p(2.0), 8).is_err());
    }

    #[test]
    fn difference_norm_edges() {
        assert_eq!(semigroup_difference_norm(0.1, 0.1, 0.1, p(1.9), 16).unwrap(), 0.0);
        assert!(semigroup_difference_norm(0.05, 0.1, 0.1, p(1.9), 16).is_err());
        let d = semigroup_difference_norm(0.2, 0.1, 0.1, p(1.9), 16).unwrap();
        assert!(d > 0.0 && d.is_finite());
    }

    #[test]
    fn holder_norm_of_single_mode_operator() {
        // One mode: the norm is exactly |e_1|_{C^δ} times the multiplier.
        let one = holder_operator_norm(&[0.5], 0.25).unwrap();
        let g = crate::basis::GridField::from_fn(9, |x| 0.5 * Basis::eval(1, x));
        let direct = crate::norms::norm_c_delta(&g, 0.25, 8).unwrap().norm();
        assert!((one - direct).abs() < 1e-12);
    }
}
