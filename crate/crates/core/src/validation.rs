//! Structural self-checks run by `fsb validate`: identities the discretisation
//! must satisfy to rounding, evaluated on a reduced copy of a configuration.

use serde::{Deserialize, Serialize};

use crate::basis::{holder_seminorm_bound_check, GridTransform, SpectralField};
use crate::error::Result;
use crate::noise::{generate_ou_path, NoiseSpec};
use crate::nonlinearity::NonlinearTerm;
use crate::operator::semigroup_multipliers;
use crate::solver::{energy_diagnostic_with_path, mild_form_residual, solve_with_path, SolveConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
        }
    }
}

/// Reduced copy of `cfg` used by [`run_checks`]: at most 32 modes and 256 steps.
pub fn reduced_config(cfg: &SolveConfig) -> SolveConfig {
    let n = cfg.n_modes.min(32);
    let steps = cfg.steps.min(256).next_power_of_two();
    let mut c = cfg.with_modes(n).with_steps(steps);
    c.noise.base_steps = steps;
    c.diag_stride = steps;
    c
}

fn smooth_field(n: usize, seed: u64) -> SpectralField {
    let phase = seed as f64 * 0.618;
    SpectralField::new(
        (1..=n)
            .map(|k| (k as f64 * 1.3 + phase).sin() / (k as f64).powi(2))
            .collect(),
    )
}

pub fn run_checks(cfg: &SolveConfig) -> Result<Vec<Check>> {
    let cfg = reduced_config(cfg);
    cfg.validate()?;
    let n = cfg.n_modes;
    let mut checks = Vec::new();
    let u = smooth_field(n, cfg.noise.seed);

    let mut t = GridTransform::new(n, cfg.grid_len)?;
    let grid = t.synthesize(&u)?;
    let mut back = vec![0.0; n];
    t.analyze_sine_into(&grid.values, &mut back)?;
    let roundtrip = back
        .iter()
        .zip(&u.coeffs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("transform round trip", roundtrip, 1e-12));

    let l2 = u.dot(&u).sqrt();
    checks.push(Check::at_most(
        "Parseval",
        (grid.l2_norm() - l2).abs() / l2,
        1e-12,
    ));

    let mut term = NonlinearTerm::new(cfg.poly.clone(), n, cfg.grid_len)?;
    let mut forcing = vec![0.0; n];
    term.apply(&u.coeffs, &mut forcing)?;
    let pairing: f64 = forcing.iter().zip(&u.coeffs).map(|(a, b)| a * b).sum();
    let scale = forcing.iter().map(|x| x * x).sum::<f64>().sqrt() * l2;
    checks.push(Check::at_most(
        "drift orthogonal to state",
        pairing.abs() / scale.max(f64::MIN_POSITIVE),
        1e-11,
    ));

    let (s1, s2, s3) = (
        semigroup_multipliers(n, 0.01, cfg.params),
        semigroup_multipliers(n, 0.02, cfg.params),
        semigroup_multipliers(n, 0.03, cfg.params),
    );
    let semigroup = (0..n)
        .map(|k| (s1[k] * s2[k] - s3[k]).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("semigroup property", semigroup, 1e-14));

    let (ratio, constant) = holder_seminorm_bound_check(8, cfg.delta.max(1e-3))?;
    checks.push(Check::at_most("Hölder bound on e_8", ratio / constant, 1.0));

    let spec = NoiseSpec {
        n_modes: n,
        ..cfg.noise
    };
    let path = cfg
        .stochastic
        .then(|| generate_ou_path(&spec, cfg.params, cfg.steps))
        .transpose()?;
    if let Some(p) = &path {
        let again = generate_ou_path(&spec, cfg.params, cfg.steps)?;
        let same = p.values() == again.values();
        checks.push(Check::at_most("noise determinism", f64::from(u8::from(!same)), 0.0));
        let coarse = generate_ou_path(&spec, cfg.params, cfg.steps / 4)?;
        let sub = p.subsample(cfg.steps / 4)?;
        let same = coarse.values() == sub.values();
        checks.push(Check::at_most("noise coupling across Δt", f64::from(u8::from(!same)), 0.0));
    }

    let traj = solve_with_path(&cfg, path.as_ref())?;
    let energy = energy_diagnostic_with_path(&traj, &cfg, path.as_ref())?;
    checks.push(Check::at_most("energy within budget", energy.max_ratio, 1.0 + 1e-9));
    let residual = mild_form_residual(&traj, &cfg, path.as_ref(), cfg.steps)?;
    checks.push(Check::at_most("mild form residual", residual, 1e-10));
    Ok(checks)
}
