//! Coupled-refinement studies: spatial and temporal convergence rates in the
//! C^δ norm, pathwise temporal regularity, and the parameter windows in which
//! the rate statements hold.
//!
//! Within one seed every run consumes the same noise: spatial runs use the
//! leading columns of one `N_ref`-mode OU path, temporal runs subsample one
//! `M_base`-step path. Errors are measured against the finest run, never
//! against a closed form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::GridTransform;
use crate::error::{Error, Result};
use crate::noise::{generate_ou_path, NoiseSpec, OuPath, RNG_ID};
use crate::norms::{c_delta_values, path_holder_exponent};
use crate::regression::{loglog_slope, median};
use crate::solver::{energy_diagnostic_with_path, solve_with_path, SolveConfig, Trajectory};

pub const SPACE_TOLERANCE: f64 = 0.15;
pub const TIME_TOLERANCE: f64 = 0.08;
pub const REGULARITY_TOLERANCE: f64 = 0.1;

/// Errors at or below this (relative to the solution size) count as zero.
const EXACT_THRESHOLD: f64 = 1e-12;

/// `(α − 1)/2 − δ`.
pub fn space_theory_rate(alpha: f64, delta: f64) -> f64 {
    (alpha - 1.0) / 2.0 - delta
}

/// `(α − 1 − 2δ)/(2α)`.
pub fn time_theory_rate(alpha: f64, delta: f64) -> f64 {
    (alpha - 1.0 - 2.0 * delta) / (2.0 * alpha)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub passed: bool,
    pub violations: Vec<String>,
}

impl WindowCheck {
    fn from(violations: Vec<String>) -> Self {
        Self {
            passed: violations.is_empty(),
            violations,
        }
    }
}

/// Which nested parameter windows `(α, δ)` falls into.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub alpha: f64,
    pub delta: f64,
    /// `1 < α ≤ 2`, `δ ∈ (1 − α/2, 1)`: the drift maps C^δ into H^{−α/2}.
    pub nonlinearity: WindowCheck,
    /// `α ∈ (3/2, 2)`, `δ ∈ (1 − α/2, (α − 1)/2)`: Galerkin well-posedness.
    pub existence: WindowCheck,
    /// `α ∈ (7/4, 2)`, `δ ∈ (1 − α/2, (2α − 3)/2)`: the convergence rates.
    pub rate_theorems: WindowCheck,
}

/// Short decimal form for messages: at most six decimals, no trailing zeros.
fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn validity_window(alpha: f64, delta: f64) -> WindowReport {
    let (a, d) = (num(alpha), num(delta));
    let lower = 1.0 - alpha / 2.0;
    let delta_above_lower = || {
        (delta <= lower).then(|| format!("δ ≤ 1 − α/2 (δ = {d}, 1 − α/2 = {})", num(lower)))
    };

    let mut nonlinearity = Vec::new();
    if alpha <= 1.0 {
        nonlinearity.push(format!("α ≤ 1 (α = {a})"));
    }
    if alpha > 2.0 {
        nonlinearity.push(format!("α > 2 (α = {a})"));
    }
    nonlinearity.extend(delta_above_lower());
    if delta >= 1.0 {
        nonlinearity.push(format!("δ ≥ 1 (δ = {d})"));
    }

    let mut existence = Vec::new();
    if alpha <= 1.5 {
        existence.push(format!("α ≤ 3/2 (α = {a})"));
    }
    if alpha >= 2.0 {
        existence.push(format!("α ≥ 2 (α = {a})"));
    }
    existence.extend(delta_above_lower());
    let upper = (alpha - 1.0) / 2.0;
    if delta >= upper {
        existence.push(format!("δ ≥ (α − 1)/2 (δ = {d}, (α − 1)/2 = {})", num(upper)));
    }

    let mut rates = Vec::new();
    if alpha <= 1.75 {
        rates.push(format!("α ≤ 7/4 (α = {a})"));
    }
    if alpha >= 2.0 {
        rates.push(format!("α ≥ 2 (α = {a})"));
    }
    rates.extend(delta_above_lower());
    let upper = (2.0 * alpha - 3.0) / 2.0;
    if delta >= upper {
        rates.push(format!("δ ≥ (2α − 3)/2 (δ = {d}, (2α − 3)/2 = {})", num(upper)));
    }

    WindowReport {
        alpha,
        delta,
        nonlinearity: WindowCheck::from(nonlinearity),
        existence: WindowCheck::from(existence),
        rate_theorems: WindowCheck::from(rates),
    }
}

fn enforce_rate_window(base: &SolveConfig) -> Result<()> {
    let w = validity_window(base.params.alpha(), base.delta);
    if w.rate_theorems.passed {
        Ok(())
    } else {
        Err(Error::Window(w.rate_theorems.violations.join("; ")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyOptions {
    pub seeds: Vec<u64>,
    /// Output times at which spatial errors are measured (divides `M_base`).
    pub output_steps: usize,
    /// Samples per path in the regularity study (divides `M_base`).
    pub regularity_samples: usize,
    /// Mode count for the regularity study.
    pub regularity_modes: usize,
    pub space_tolerance: f64,
    pub time_tolerance: f64,
    pub regularity_tolerance: f64,
    /// Reject `(α, δ)` outside the rate-theorem window.
    pub enforce_window: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            seeds: (0..8).collect(),
            output_steps: 256,
            regularity_samples: 1024,
            regularity_modes: 64,
            space_tolerance: SPACE_TOLERANCE,
            time_tolerance: TIME_TOLERANCE,
            regularity_tolerance: REGULARITY_TOLERANCE,
            enforce_window: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub study: String,
    pub alpha: f64,
    pub delta: f64,
    /// `"N"` or `"M"`.
    pub axis_name: String,
    pub parameter_axis: Vec<usize>,
    pub seeds: Vec<u64>,
    /// `errors_cdelta[s][i]`: sup over output times of the C^δ error for seed
    /// `s` at `parameter_axis[i]`.
    pub errors_cdelta: Vec<Vec<f64>>,
    pub errors_l2: Vec<Vec<f64>>,
    /// Per-seed slope of `log error` against `log N` (space) or `log Δt`
    /// (time).
    pub fitted_slopes: Vec<f64>,
    pub median_slope: Option<f64>,
    /// Decay rate read off the median slope, positive when errors shrink.
    pub observed_rate: Option<f64>,
    pub theory_rate: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub degenerate: Option<String>,
    pub noise_hashes: Vec<String>,
    pub rng_id: String,
    /// Largest C^δ norm seen on any diagnostic step of any run.
    pub sup_c_delta: f64,
    /// Runs whose discrete energy exceeded its budget.
    pub energy_violations: usize,
}

impl RateReport {
    /// CSV rows `seed,axis_value,error_cdelta,error_l2`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "seed,axis_value,error_cdelta,error_l2")?;
        for (s, seed) in self.seeds.iter().enumerate() {
            for (i, axis) in self.parameter_axis.iter().enumerate() {
                writeln!(
                    w,
                    "{seed},{axis},{:e},{:e}",
                    self.errors_cdelta[s][i], self.errors_l2[s][i]
                )?;
            }
        }
        Ok(())
    }
}

struct SeedOutcome {
    errors_cdelta: Vec<f64>,
    errors_l2: Vec<f64>,
    noise_hash: String,
    sup_c_delta: f64,
    energy_violations: usize,
    scale: f64,
}

fn run_checked(cfg: &SolveConfig, path: Option<&OuPath>) -> Result<(Trajectory, bool)> {
    let traj = solve_with_path(cfg, path)?;
    let energy = energy_diagnostic_with_path(&traj, cfg, path)?;
    Ok((traj, energy.violation))
}

fn seed_path(cfg: &SolveConfig) -> Result<Option<OuPath>> {
    if !cfg.stochastic {
        return Ok(None);
    }
    let spec = NoiseSpec {
        n_modes: cfg.n_modes,
        ..cfg.noise
    };
    generate_ou_path(&spec, cfg.params, spec.base_steps).map(Some)
}

/// C^δ and L² norms of `fine(m_fine) − coarse(m_coarse)` on the fine grid.
fn state_gap(
    transform: &mut GridTransform,
    grid: &mut [f64],
    fine: &[f64],
    coarse: &[f64],
    delta: f64,
    lag_cap: usize,
) -> Result<(f64, f64)> {
    let diff: Vec<f64> = fine
        .iter()
        .enumerate()
        .map(|(k, f)| f - coarse.get(k).copied().unwrap_or(0.0))
        .collect();
    transform.synthesize_into(&diff, grid)?;
    let l2 = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    Ok((c_delta_values(grid, delta, lag_cap), l2))
}

fn assemble(
    study: &str,
    axis_name: &str,
    base: &SolveConfig,
    axis: &[usize],
    abscissa: &[f64],
    seeds: &[u64],
    outcomes: Vec<SeedOutcome>,
    theory_rate: f64,
    tolerance: f64,
    decay_sign: f64,
) -> Result<RateReport> {
    let scale = outcomes.iter().map(|o| o.scale).fold(1.0, f64::max);
    let all_exact = outcomes
        .iter()
        .flat_map(|o| &o.errors_cdelta)
        .all(|&e| e <= EXACT_THRESHOLD * scale);
    let (fitted_slopes, degenerate) = if all_exact {
        (Vec::new(), Some("exact scheme: every error is at rounding level".to_string()))
    } else {
        if outcomes
            .iter()
            .flat_map(|o| &o.errors_cdelta)
            .any(|&e| !(e > 0.0))
        {
            return Err(Error::Config(
                "identical trajectories at some resolution: check the study configuration".into(),
            ));
        }
        let slopes = outcomes
            .iter()
            .map(|o| loglog_slope(abscissa, &o.errors_cdelta).map(|f| f.slope))
            .collect::<Result<Vec<_>>>()?;
        (slopes, None)
    };
    let median_slope = median(&fitted_slopes);
    let observed_rate = median_slope.map(|s| decay_sign * s);
    let pass = match observed_rate {
        Some(r) => r >= theory_rate - tolerance,
        None => degenerate.is_some(),
    };
    Ok(RateReport {
        study: study.to_string(),
        alpha: base.params.alpha(),
        delta: base.delta,
        axis_name: axis_name.to_string(),
        parameter_axis: axis.to_vec(),
        seeds: seeds.to_vec(),
        errors_cdelta: outcomes.iter().map(|o| o.errors_cdelta.clone()).collect(),
        errors_l2: outcomes.iter().map(|o| o.errors_l2.clone()).collect(),
        fitted_slopes,
        median_slope,
        observed_rate,
        theory_rate,
        tolerance,
        pass,
        degenerate,
        noise_hashes: outcomes.iter().map(|o| o.noise_hash.clone()).collect(),
        rng_id: RNG_ID.to_string(),
        sup_c_delta: outcomes.iter().map(|o| o.sup_c_delta).fold(0.0, f64::max),
        energy_violations: outcomes.iter().map(|o| o.energy_violations).sum(),
    })
}

fn check_axis(list: &[usize]) -> Result<()> {
    if list.len() < 3 {
        return Err(Error::TooFewPoints {
            required: 3,
            got: list.len(),
        });
    }
    if list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("resolution list must be strictly increasing".into()));
    }
    Ok(())
}

/// Spatial rate: runs at each `N` in `n_list` against the `N_ref = base.n_modes`
/// reference, all at `M = M_base` and with mode-coupled noise.
pub fn space_convergence_study(
    base: &SolveConfig,
    n_list: &[usize],
    options: &StudyOptions,
) -> Result<RateReport> {
    check_axis(n_list)?;
    if options.enforce_window {
        enforce_rate_window(base)?;
    }
    let n_ref = base.n_modes;
    if n_list.last().copied().unwrap_or(0) * 4 > n_ref {
        return Err(Error::Config(format!(
            "reference N = {n_ref} must be at least 4× the largest N in the list"
        )));
    }
    let base = base.with_steps(base.noise.base_steps);
    let stride = base.noise.stride(options.output_steps)?;
    base.validate()?;

    let outcomes = options
        .seeds
        .par_iter()
        .map(|&seed| -> Result<SeedOutcome> {
            let mut reference_cfg = base.with_seed(seed);
            reference_cfg.diag_stride = stride;
            let path = seed_path(&reference_cfg)?;
            let (reference, mut violated) = run_checked(&reference_cfg, path.as_ref())?;
            let mut sup_c_delta = reference.sup_c_delta();
            let mut energy_violations = usize::from(violated);
            let mut transform = GridTransform::new(n_ref, reference_cfg.grid_len)?;
            let mut grid = vec![0.0; reference_cfg.grid_len];
            let mut errors_cdelta = Vec::with_capacity(n_list.len());
            let mut errors_l2 = Vec::with_capacity(n_list.len());
            for &n in n_list {
                let cfg = reference_cfg.with_modes(n);
                let sub_path = path.as_ref().map(|p| p.truncate_modes(n)).transpose()?;
                let (traj, v) = run_checked(&cfg, sub_path.as_ref())?;
                violated = v;
                energy_violations += usize::from(violated);
                sup_c_delta = sup_c_delta.max(traj.sup_c_delta());
                let mut worst = (0.0f64, 0.0f64);
                for m in (0..=base.steps).step_by(stride) {
                    let (c, l2) = state_gap(
                        &mut transform,
                        &mut grid,
                        reference.state(m),
                        traj.state(m),
                        base.delta,
                        base.lag_cap,
                    )?;
                    worst = (worst.0.max(c), worst.1.max(l2));
                }
                errors_cdelta.push(worst.0);
                errors_l2.push(worst.1);
            }
            Ok(SeedOutcome {
                errors_cdelta,
                errors_l2,
                noise_hash: reference_cfg.noise.coupling_hash(base.params),
                sup_c_delta,
                energy_violations,
                scale: reference.sup_c_delta(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let abscissa: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    assemble(
        "converge-space",
        "N",
        &base,
        n_list,
        &abscissa,
        &options.seeds,
        outcomes,
        space_theory_rate(base.params.alpha(), base.delta),
        options.space_tolerance,
        -1.0,
    )
}

/// Temporal rate: runs at each `M` in `m_list` against the `M_base` run at
/// the same `N`, all driven by one subsampled OU path per seed.
pub fn time_convergence_study(
    base: &SolveConfig,
    m_list: &[usize],
    options: &StudyOptions,
) -> Result<RateReport> {
    check_axis(m_list)?;
    if options.enforce_window {
        enforce_rate_window(base)?;
    }
    let m_base = base.noise.base_steps;
    if m_list.last().copied().unwrap_or(0) * 8 > m_base {
        return Err(Error::Config(format!(
            "M_base = {m_base} must be at least 8× the largest M in the list"
        )));
    }
    for &m in m_list {
        base.noise.stride(m)?;
    }
    let fine_cfg = base.with_steps(m_base);
    fine_cfg.validate()?;
    let fine_stride = m_base / m_list[0];

    let outcomes = options
        .seeds
        .par_iter()
        .map(|&seed| -> Result<SeedOutcome> {
            let mut reference_cfg = fine_cfg.with_seed(seed);
            reference_cfg.diag_stride = fine_stride;
            let path = seed_path(&reference_cfg)?;
            let (reference, violated) = run_checked(&reference_cfg, path.as_ref())?;
            let mut sup_c_delta = reference.sup_c_delta();
            let mut energy_violations = usize::from(violated);
            let mut transform = GridTransform::new(base.n_modes, base.grid_len)?;
            let mut grid = vec![0.0; base.grid_len];
            let mut errors_cdelta = Vec::with_capacity(m_list.len());
            let mut errors_l2 = Vec::with_capacity(m_list.len());
            for &m_coarse in m_list {
                let cfg = reference_cfg.with_steps(m_coarse);
                let coarse_path = path.as_ref().map(|p| p.subsample(m_coarse)).transpose()?;
                let (traj, violated) = run_checked(&cfg, coarse_path.as_ref())?;
                energy_violations += usize::from(violated);
                sup_c_delta = sup_c_delta.max(traj.sup_c_delta());
                let ratio = m_base / m_coarse;
                let mut worst = (0.0f64, 0.0f64);
                for m in 0..=m_coarse {
                    let (c, l2) = state_gap(
                        &mut transform,
                        &mut grid,
                        reference.state(m * ratio),
                        traj.state(m),
                        base.delta,
                        base.lag_cap,
                    )?;
                    worst = (worst.0.max(c), worst.1.max(l2));
                }
                errors_cdelta.push(worst.0);
                errors_l2.push(worst.1);
            }
            Ok(SeedOutcome {
                errors_cdelta,
                errors_l2,
                noise_hash: reference_cfg.noise.coupling_hash(base.params),
                sup_c_delta,
                energy_violations,
                scale: reference.sup_c_delta(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let abscissa: Vec<f64> = m_list
        .iter()
        .map(|&m| base.final_time / m as f64)
        .collect();
    assemble(
        "converge-time",
        "M",
        &fine_cfg,
        m_list,
        &abscissa,
        &options.seeds,
        outcomes,
        time_theory_rate(base.params.alpha(), base.delta),
        options.time_tolerance,
        1.0,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub study: String,
    pub alpha: f64,
    pub delta: f64,
    pub n_modes: usize,
    pub samples: usize,
    pub seeds: Vec<u64>,
    /// Exponent of `t ↦ 𝒲_N(t)` in C^δ, per seed.
    pub ou_exponents: Vec<f64>,
    /// Exponent of `t ↦ u_N(t)` in C^δ, per seed (informational).
    pub solution_exponents: Vec<f64>,
    pub ou_median: f64,
    pub solution_median: f64,
    pub theory_rate: f64,
    pub tolerance: f64,
    /// `ou_median ≥ theory − tolerance`.
    pub pass: bool,
    pub noise_hashes: Vec<String>,
    pub rng_id: String,
}

/// Max-increment Hölder exponent of a C^δ-valued path sampled at `rows`.
fn c_delta_path_exponent(
    rows: &[&[f64]],
    times: &[f64],
    n_modes: usize,
    grid_len: usize,
    delta: f64,
    lag_cap: usize,
) -> Result<f64> {
    let mut transform = GridTransform::new(n_modes, grid_len)?;
    let mut grids = Vec::with_capacity(rows.len());
    for row in rows {
        let mut g = vec![0.0; grid_len];
        transform.synthesize_into(row, &mut g)?;
        grids.push(g);
    }
    let mut scratch = vec![0.0; grid_len];
    let scratch = std::cell::RefCell::new(&mut scratch);
    let est = path_holder_exponent(times, |i, j| {
        let mut s = scratch.borrow_mut();
        for ((d, a), b) in s.iter_mut().zip(&grids[j]).zip(&grids[i]) {
            *d = a - b;
        }
        c_delta_values(&s, delta, lag_cap)
    })?;
    Ok(est.exponent)
}

/// Temporal Hölder exponents of the OU path and of the solution, as C^δ-valued
/// paths, against `(α − 1 − 2δ)/(2α)`.
pub fn path_regularity_study(base: &SolveConfig, options: &StudyOptions) -> Result<RegularityReport> {
    let n = options.regularity_modes.min(base.n_modes);
    let cfg = base.with_modes(n).with_steps(base.noise.base_steps);
    cfg.validate()?;
    let samples = options.regularity_samples;
    let stride = cfg.noise.stride(samples)?;
    let times: Vec<f64> = (0..=samples)
        .map(|m| m as f64 * cfg.final_time / samples as f64)
        .collect();

    let per_seed = options
        .seeds
        .par_iter()
        .map(|&seed| -> Result<(f64, f64, String)> {
            let mut run = cfg.with_seed(seed);
            run.diag_stride = stride;
            let spec = NoiseSpec {
                n_modes: n,
                ..run.noise
            };
            let path = generate_ou_path(&spec, run.params, spec.base_steps)?;
            let coarse = path.subsample(samples)?;
            let rows: Vec<&[f64]> = (0..=samples).map(|m| coarse.row(m)).collect();
            let ou = c_delta_path_exponent(&rows, &times, n, run.grid_len, run.delta, run.lag_cap)?;

            let traj = solve_with_path(&run, Some(&path))?;
            let rows: Vec<&[f64]> = (0..=samples).map(|m| traj.state(m * stride)).collect();
            let sol = c_delta_path_exponent(&rows, &times, n, run.grid_len, run.delta, run.lag_cap)?;
            Ok((ou, sol, run.noise.coupling_hash(run.params)))
        })
        .collect::<Result<Vec<_>>>()?;

    let ou_exponents: Vec<f64> = per_seed.iter().map(|r| r.0).collect();
    let solution_exponents: Vec<f64> = per_seed.iter().map(|r| r.1).collect();
    let ou_median = median(&ou_exponents).unwrap_or(f64::NAN);
    let solution_median = median(&solution_exponents).unwrap_or(f64::NAN);
    let theory_rate = time_theory_rate(cfg.params.alpha(), cfg.delta);
    Ok(RegularityReport {
        study: "regularity".into(),
        alpha: cfg.params.alpha(),
        delta: cfg.delta,
        n_modes: n,
        samples,
        seeds: options.seeds.clone(),
        pass: ou_median >= theory_rate - options.regularity_tolerance,
        ou_exponents,
        solution_exponents,
        ou_median,
        solution_median,
        theory_rate,
        tolerance: options.regularity_tolerance,
        noise_hashes: per_seed.into_iter().map(|r| r.2).collect(),
        rng_id: RNG_ID.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_rates() {
        assert!((space_theory_rate(1.9, 0.1) - 0.35).abs() < 1e-12);
        assert!((time_theory_rate(1.9, 0.1) - 0.7 / 3.8).abs() < 1e-12);
        assert!((time_theory_rate(2.0, 0.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn window_examples() {
        let w = validity_window(1.9, 0.1);
        assert!(w.nonlinearity.passed && w.existence.passed && w.rate_theorems.passed);

        let w = validity_window(1.6, 0.25);
        assert!(w.nonlinearity.passed);
        assert!(!w.rate_theorems.passed);
        assert!(w.rate_theorems.violations.iter().any(|v| v.contains("α ≤ 7/4")));

        let w = validity_window(2.0, 0.0);
        assert!(!w.nonlinearity.passed);
        assert!(w.nonlinearity.violations[0].contains("δ ≤ 1 − α/2"));
    }

    #[test]
    fn single_entry_axis_is_rejected() {
        let base = SolveConfig::burgers_default(0);
        let err = space_convergence_study(&base, &[8], &StudyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::TooFewPoints { required: 3, got: 1 }));
    }

    #[test]
    fn out_of_window_study_is_rejected() {
        let mut base = SolveConfig::burgers_default(0);
        base.params = crate::operator::FracParams::new(1.6).unwrap();
        let err = space_convergence_study(&base, &[8, 16, 32], &StudyOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Window(ref m) if m.contains("α ≤ 7/4")));
    }
}
