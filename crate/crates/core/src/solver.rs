//! Exponential-Euler Galerkin solver.
//!
//! One step of the fully discrete scheme reads
//!
//! ```text
//! u^{m+1} = S(Δt) (u^m + Δt P_N F(u^m)) + 𝒲_N(t_{m+1}) − S(Δt) 𝒲_N(t_m),
//! ```
//!
//! with `S(t) = e^{−A^{α/2} t}`. The loop evaluates it as
//! `S(Δt)(u^m − 𝒲^m + Δt F^m) + 𝒲^{m+1}`, i.e. it advances `v = u − 𝒲`. Both
//! forms agree in exact arithmetic; the second makes the stochastic part
//! bitwise exact, so with `F ≡ 0` and `u₀ = 0` the states are the OU samples.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::basis::SpectralField;
use crate::error::{Error, Result};
use crate::noise::{generate_ou_path, write_state_dump, NoiseSpec, OuPath, DEFAULT_BASE_STEPS};
use crate::nonlinearity::{NonlinearTerm, Polynomial};
use crate::norms::{c_delta_values, norm_h, norm_l2, DEFAULT_LAG_CAP};
use crate::operator::{semigroup_multipliers, FracParams};

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub params: FracParams,
    /// Hölder index used for the C^δ diagnostics.
    pub delta: f64,
    pub poly: Polynomial,
    pub u0: SpectralField,
    pub final_time: f64,
    pub n_modes: usize,
    pub steps: usize,
    pub grid_len: usize,
    pub noise: NoiseSpec,
    /// `false` replaces `𝒲` by zero.
    pub stochastic: bool,
    pub blowup_threshold: f64,
    pub lag_cap: usize,
    /// C^δ diagnostics are taken every `diag_stride` steps and at the end.
    pub diag_stride: usize,
}

impl SolveConfig {
    /// `α = 1.9`, `δ = 0.1`, `f(x) = x²`, `u₀ = e_1`, `T = 0.5`, `N = 256`,
    /// `M = M_base = 2^13`, alias-free grid.
    pub fn burgers_default(seed: u64) -> Self {
        let n = 256;
        let poly = Polynomial::burgers();
        Self {
            params: FracParams::new(1.9).expect("valid α"),
            delta: 0.1,
            grid_len: poly.alias_free_grid(n),
            poly,
            u0: SpectralField::mode(1, 1, 1.0),
            final_time: 0.5,
            n_modes: n,
            steps: DEFAULT_BASE_STEPS,
            noise: NoiseSpec {
                seed,
                n_modes: n,
                base_steps: DEFAULT_BASE_STEPS,
                final_time: 0.5,
            },
            stochastic: true,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            lag_cap: DEFAULT_LAG_CAP,
            diag_stride: 1,
        }
    }

    /// Same problem at `n` modes on its alias-free grid.
    pub fn with_modes(&self, n: usize) -> Self {
        let mut c = self.clone();
        c.n_modes = n;
        c.grid_len = c.poly.alias_free_grid(n);
        c.noise.n_modes = n;
        c
    }

    pub fn with_steps(&self, steps: usize) -> Self {
        Self {
            steps,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.noise.seed = seed;
        c
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    /// `P_N u₀`.
    pub fn initial_state(&self) -> SpectralField {
        self.u0.resized(self.n_modes)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_modes == 0 {
            return bad("N must be positive".into());
        }
        if self.steps == 0 {
            return bad("M must be positive".into());
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return bad(format!("T = {} must be positive", self.final_time));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return bad(format!("δ = {} outside [0, 1)", self.delta));
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blow-up threshold must be positive".into());
        }
        if self.diag_stride == 0 {
            return bad("diagnostic stride must be positive".into());
        }
        if !self.u0.is_finite() {
            return bad("u0 has non-finite coefficients".into());
        }
        if self.poly.degree() >= 1 {
            let required = self.poly.alias_free_grid(self.n_modes);
            if self.grid_len < required {
                return Err(Error::Aliasing {
                    grid: self.grid_len,
                    modes: self.n_modes,
                    degree: self.poly.degree(),
                    required,
                });
            }
        } else if self.grid_len < 2 * self.n_modes + 1 {
            return Err(Error::InsufficientGrid {
                grid: self.grid_len,
                modes: self.n_modes,
                required: 2 * self.n_modes + 1,
            });
        }
        self.noise.validate()?;
        if (self.noise.final_time - self.final_time).abs() > 1e-12 * self.final_time {
            return bad("noise horizon differs from T".into());
        }
        self.noise.stride(self.steps)?;
        check_initial_smoothness(&self.u0, self.delta)
    }
}

/// Numerical stand-in for `u₀ ∈ H^β`, `β = δ + 0.51`: the weighted energy
/// `Σ k^{2β} c_k²` carried by the upper half of the available modes must be a
/// small share of the total. Data with only a handful of active modes is
/// accepted as is.
pub fn check_initial_smoothness(u0: &SpectralField, delta: f64) -> Result<()> {
    let beta = delta + 0.51;
    let n = u0.n_modes();
    if u0.coeffs.iter().filter(|c| **c != 0.0).count() < 8 {
        return Ok(());
    }
    let weighted: Vec<f64> = u0
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| ((i + 1) as f64).powf(2.0 * beta) * c * c)
        .collect();
    let total: f64 = weighted.iter().sum();
    let tail: f64 = weighted[n / 2..].iter().sum();
    if total > 0.0 && tail > 0.15 * total {
        return Err(Error::InvalidParameter(format!(
            "u0 is too rough: {:.0}% of its H^{beta:.2} energy sits in the upper half of the modes",
            100.0 * tail / total
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub m: usize,
    pub t: f64,
    pub l2_norm: f64,
    pub h_alpha2_norm: f64,
    /// Present on diagnostic steps only.
    pub c_delta_norm: Option<f64>,
    /// `|P_N F(u^m)|_{H^{−α/2}}`, used by the energy budget.
    pub forcing_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub n_modes: usize,
    pub steps: usize,
    pub final_time: f64,
    pub times: Vec<f64>,
    states: Vec<f64>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    /// Number of stored states (`M + 1` when complete).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.len() == self.steps + 1
    }

    pub fn state(&self, m: usize) -> &[f64] {
        &self.states[m * self.n_modes..(m + 1) * self.n_modes]
    }

    pub fn state_field(&self, m: usize) -> SpectralField {
        SpectralField::new(self.state(m).to_vec())
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// Largest C^δ norm over the diagnostic steps.
    pub fn sup_c_delta(&self) -> f64 {
        self.diagnostics
            .iter()
            .filter_map(|d| d.c_delta_norm)
            .fold(0.0, f64::max)
    }

    /// Every `steps / coarse`-th state and diagnostic record.
    pub fn subsample(&self, coarse: usize) -> Result<Trajectory> {
        if !self.is_complete() || coarse == 0 || self.steps % coarse != 0 {
            return Err(Error::Divisibility {
                coarse,
                base: self.steps,
            });
        }
        let stride = self.steps / coarse;
        let mut states = Vec::with_capacity((coarse + 1) * self.n_modes);
        let mut times = Vec::with_capacity(coarse + 1);
        let mut diagnostics = Vec::with_capacity(coarse + 1);
        for m in 0..=coarse {
            states.extend_from_slice(self.state(m * stride));
            times.push(self.times[m * stride]);
            let mut d = self.diagnostics[m * stride];
            d.m = m;
            diagnostics.push(d);
        }
        Ok(Trajectory {
            n_modes: self.n_modes,
            steps: coarse,
            final_time: self.final_time,
            times,
            states,
            diagnostics,
        })
    }

    /// CSV with columns `m,t,l2_norm,h_alpha2_norm,c_delta_norm`; the C^δ
    /// cell is empty on non-diagnostic steps.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "m,t,l2_norm,h_alpha2_norm,c_delta_norm")?;
        for d in &self.diagnostics {
            let c = d.c_delta_norm.map(|c| format!("{c:e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{:e},{:e},{:e},{}",
                d.m, d.t, d.l2_norm, d.h_alpha2_norm, c
            )?;
        }
        Ok(())
    }

    /// Full-state dump with the same header layout as [`OuPath::write_binary`].
    pub fn write_binary<W: Write>(&self, mut w: W, seed: u64, alpha: f64) -> Result<()> {
        write_state_dump(
            &mut w,
            seed,
            self.n_modes,
            self.steps,
            self.final_time,
            alpha,
            &self.states,
        )
    }
}

/// Cached per-resolution pieces of the time step.
struct Stepper {
    decay: Vec<f64>,
    dt: f64,
    term: NonlinearTerm,
    forcing: Vec<f64>,
}

impl Stepper {
    fn new(cfg: &SolveConfig) -> Result<Self> {
        Ok(Self {
            decay: semigroup_multipliers(cfg.n_modes, cfg.dt(), cfg.params),
            dt: cfg.dt(),
            term: NonlinearTerm::new(cfg.poly.clone(), cfg.n_modes, cfg.grid_len)?,
            forcing: vec![0.0; cfg.n_modes],
        })
    }

    /// Evaluate `P_N F(u)` into `self.forcing`; leaves `u` on the grid.
    fn evaluate(&mut self, u: &[f64]) -> Result<()> {
        self.term.apply(u, &mut self.forcing)
    }

    /// In-place split-form update using the forcing from [`Self::evaluate`].
    fn advance(&self, u: &mut [f64], ou_now: Option<&[f64]>, ou_next: Option<&[f64]>) {
        match (ou_now, ou_next) {
            (Some(now), Some(next)) => {
                for k in 0..u.len() {
                    u[k] = self.decay[k] * (u[k] - now[k] + self.dt * self.forcing[k]) + next[k];
                }
            }
            _ => {
                for k in 0..u.len() {
                    u[k] = self.decay[k] * (u[k] + self.dt * self.forcing[k]);
                }
            }
        }
    }
}

/// One step in the textbook form
/// `S(Δt)(u + Δt P_N F(u)) + [𝒲(t_{m+1}) − S(Δt)𝒲(t_m)]`.
pub fn step_exponential_euler(
    u: &SpectralField,
    cfg: &SolveConfig,
    ou_increment: &SpectralField,
) -> Result<SpectralField> {
    let n = cfg.n_modes;
    for got in [u.n_modes(), ou_increment.n_modes()] {
        if got != n {
            return Err(Error::Dimension { expected: n, got });
        }
    }
    let norm = norm_l2(u);
    if !(norm < cfg.blowup_threshold) {
        return Err(Error::Blowup {
            step: 0,
            norm,
            partial: Box::new(Trajectory {
                n_modes: n,
                steps: 1,
                final_time: cfg.dt(),
                times: vec![0.0],
                states: u.coeffs.clone(),
                diagnostics: Vec::new(),
            }),
        });
    }
    let mut stepper = Stepper::new(cfg)?;
    stepper.evaluate(&u.coeffs)?;
    let coeffs = (0..n)
        .map(|k| stepper.decay[k] * (u.coeffs[k] + stepper.dt * stepper.forcing[k]) + ou_increment.coeffs[k])
        .collect();
    Ok(SpectralField { coeffs })
}

/// OU increment `𝒲(t_{m+1}) − S(Δt) 𝒲(t_m)` of the first `n` modes.
pub fn ou_increment(path: &OuPath, m: usize, n: usize, p: FracParams) -> SpectralField {
    let decay = semigroup_multipliers(n, path.dt(), p);
    let (now, next) = (path.row(m), path.row(m + 1));
    SpectralField::new((0..n).map(|k| next[k] - decay[k] * now[k]).collect())
}

/// Run the scheme with its own noise (generated from `cfg.noise` at `M`
/// steps) or deterministically when `cfg.stochastic` is false.
pub fn solve_fully_discrete(cfg: &SolveConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.stochastic {
        let spec = NoiseSpec {
            n_modes: cfg.n_modes,
            ..cfg.noise
        };
        let path = generate_ou_path(&spec, cfg.params, cfg.steps)?;
        solve_with_path(cfg, Some(&path))
    } else {
        solve_with_path(cfg, None)
    }
}

/// Run the scheme against a given OU path on the same `M`-step grid. The path
/// may carry more modes than `cfg.n_modes`; only the leading ones are used.
pub fn solve_with_path(cfg: &SolveConfig, path: Option<&OuPath>) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.n_modes;
    let path = if cfg.stochastic { path } else { None };
    if cfg.stochastic {
        let path = path.ok_or_else(|| Error::Config("stochastic run without an OU path".into()))?;
        if path.steps() != cfg.steps {
            return Err(Error::Dimension {
                expected: cfg.steps,
                got: path.steps(),
            });
        }
        if path.n_modes() < n {
            return Err(Error::Dimension {
                expected: n,
                got: path.n_modes(),
            });
        }
        if (path.final_time() - cfg.final_time).abs() > 1e-12 * cfg.final_time {
            return Err(Error::Config("OU path horizon differs from T".into()));
        }
    }

    let mut stepper = Stepper::new(cfg)?;
    let dt = cfg.dt();
    let half_alpha = cfg.params.alpha() / 2.0;
    let mut traj = Trajectory {
        n_modes: n,
        steps: cfg.steps,
        final_time: cfg.final_time,
        times: Vec::with_capacity(cfg.steps + 1),
        states: Vec::with_capacity((cfg.steps + 1) * n),
        diagnostics: Vec::with_capacity(cfg.steps + 1),
    };
    let mut u = cfg.initial_state().coeffs;

    for m in 0..=cfg.steps {
        let t = m as f64 * dt;
        let field = SpectralField::new(u.clone());
        let l2 = norm_l2(&field);
        if !l2.is_finite() || l2 >= cfg.blowup_threshold || !field.is_finite() {
            return Err(Error::Blowup {
                step: m,
                norm: l2,
                partial: Box::new(traj),
            });
        }
        stepper.evaluate(&u)?;
        let forcing_norm = norm_h(&SpectralField::new(stepper.forcing.clone()), -half_alpha);
        let c_delta_norm = (m % cfg.diag_stride == 0 || m == cfg.steps)
            .then(|| c_delta_values(stepper.term.last_grid(), cfg.delta, cfg.lag_cap));
        traj.times.push(t);
        traj.states.extend_from_slice(&u);
        traj.diagnostics.push(StepDiagnostics {
            m,
            t,
            l2_norm: l2,
            h_alpha2_norm: norm_h(&field, half_alpha),
            c_delta_norm,
            forcing_norm,
        });
        if m == cfg.steps {
            break;
        }
        let rows = path.map(|p| (&p.row(m)[..n], &p.row(m + 1)[..n]));
        stepper.advance(&mut u, rows.map(|r| r.0), rows.map(|r| r.1));
    }
    Ok(traj)
}

/// Fine-grid stand-in for the continuous-time Galerkin solution: the scheme
/// at `m_fine = M_base` steps, subsampled to `output_steps`.
pub fn solve_galerkin_reference(
    cfg: &SolveConfig,
    m_fine: usize,
    output_steps: usize,
) -> Result<Trajectory> {
    if m_fine != cfg.noise.base_steps {
        return Err(Error::Config(format!(
            "reference must run at the base resolution {} (got {m_fine})",
            cfg.noise.base_steps
        )));
    }
    let fine = solve_fully_discrete(&cfg.with_steps(m_fine))?;
    if output_steps == m_fine {
        return Ok(fine);
    }
    fine.subsample(output_steps)
}

/// Discrete energy budget for `v = u − 𝒲_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `E_m = |v^m|² + Δt Σ_{j=1}^{m} |v^j|²_{H^{α/2}}`.
    pub energy: Vec<f64>,
    /// `B_m = |v^0|² + Δt Σ_{j=0}^{m−1} |P_N F(u^j)|²_{H^{−α/2}}`.
    pub budget: Vec<f64>,
    pub max_ratio: f64,
    pub finite: bool,
    /// `E_m > B_m` beyond rounding at some step, or non-finite data.
    pub violation: bool,
    /// `|v^m|²` never increases.
    pub l2_nonincreasing: bool,
}

/// Energy diagnostic for a complete trajectory, regenerating the OU path
/// from `cfg.noise` when the run is stochastic.
pub fn energy_diagnostic(traj: &Trajectory, cfg: &SolveConfig) -> Result<EnergyReport> {
    if cfg.stochastic {
        let spec = NoiseSpec {
            n_modes: traj.n_modes,
            ..cfg.noise
        };
        let path = generate_ou_path(&spec, cfg.params, traj.steps)?;
        energy_diagnostic_with_path(traj, cfg, Some(&path))
    } else {
        energy_diagnostic_with_path(traj, cfg, None)
    }
}

/// Each step satisfies, mode by mode with `x = (kπ)^α Δt`,
/// `(1 + x) e^{−2x} (a + b)² ≤ a² + b²/x`, which telescopes into `E_m ≤ B_m`;
/// so any excess beyond rounding is a defect.
pub fn energy_diagnostic_with_path(
    traj: &Trajectory,
    cfg: &SolveConfig,
    path: Option<&OuPath>,
) -> Result<EnergyReport> {
    if !traj.is_complete() || traj.diagnostics.len() != traj.len() {
        return Err(Error::Config("energy diagnostic needs a complete trajectory".into()));
    }
    let n = traj.n_modes;
    let dt = traj.final_time / traj.steps as f64;
    let half_alpha = cfg.params.alpha() / 2.0;
    let v = |m: usize| -> SpectralField {
        let u = traj.state(m);
        match path {
            Some(p) => SpectralField::new((0..n).map(|k| u[k] - p.row(m)[k]).collect()),
            None => SpectralField::new(u.to_vec()),
        }
    };
    let mut energy = Vec::with_capacity(traj.len());
    let mut budget = Vec::with_capacity(traj.len());
    let v0 = norm_l2(&v(0)).powi(2);
    let mut dissipated = 0.0;
    let mut supplied = 0.0;
    let mut previous_l2 = f64::INFINITY;
    let mut l2_nonincreasing = true;
    for m in 0..traj.len() {
        let vm = v(m);
        let l2 = norm_l2(&vm).powi(2);
        if m > 0 {
            dissipated += dt * norm_h(&vm, half_alpha).powi(2);
            supplied += dt * traj.diagnostics[m - 1].forcing_norm.powi(2);
        }
        if l2 > previous_l2 {
            l2_nonincreasing = false;
        }
        previous_l2 = l2;
        energy.push(l2 + dissipated);
        budget.push(v0 + supplied);
    }
    let finite = energy.iter().chain(&budget).all(|x| x.is_finite());
    let mut max_ratio = 0.0f64;
    let mut violation = !finite;
    for (e, b) in energy.iter().zip(&budget) {
        if *b > 0.0 {
            max_ratio = max_ratio.max(e / b);
        }
        if *e > b * (1.0 + 1e-9) + 1e-14 {
            violation = true;
        }
    }
    if !finite {
        max_ratio = f64::NAN;
    }
    Ok(EnergyReport {
        energy,
        budget,
        max_ratio,
        finite,
        violation,
        l2_nonincreasing,
    })
}

/// Max-abs gap between `u^m` and the summed form
/// `S(t_m) u^0 + Δt Σ_{k<m} S(t_m − t_k) P_N F(u^k) + 𝒲_N(t_m)`.
pub fn mild_form_residual(
    traj: &Trajectory,
    cfg: &SolveConfig,
    path: Option<&OuPath>,
    m: usize,
) -> Result<f64> {
    let n = traj.n_modes;
    let dt = traj.final_time / traj.steps as f64;
    let mut term = NonlinearTerm::new(cfg.poly.clone(), n, cfg.grid_len)?;
    let mut forcing = vec![0.0; n];
    let mut sum = vec![0.0; n];
    for k in 0..m {
        term.apply(traj.state(k), &mut forcing)?;
        let s = semigroup_multipliers(n, (m - k) as f64 * dt, cfg.params);
        for j in 0..n {
            sum[j] += dt * s[j] * forcing[j];
        }
    }
    let s0 = semigroup_multipliers(n, m as f64 * dt, cfg.params);
    let u0 = traj.state(0);
    let um = traj.state(m);
    let mut worst = 0.0f64;
    for j in 0..n {
        let w = if cfg.stochastic {
            path.map(|p| p.row(m)[j]).unwrap_or(0.0)
        } else {
            0.0
        };
        let mild = s0[j] * u0[j] + sum[j] + w;
        worst = worst.max((mild - um[j]).abs());
    }
    Ok(worst)
}
