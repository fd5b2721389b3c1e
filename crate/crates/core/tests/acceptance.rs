//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p fsb-core --test acceptance`.

use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use fsb_core::basis::GridTransform;
use fsb_core::experiments::{RateReport, StudyOptions};
use fsb_core::noise::generate_ou_path;
use fsb_core::nonlinearity::{apply_f, Polynomial};
use fsb_core::norms::{norm_h, norm_l2};
use fsb_core::operator::{project, smoothing_profile};
use fsb_core::regression::{loglog_slope, median};
use fsb_core::{
    path_regularity_study, space_convergence_study, time_convergence_study, FracParams, NoiseSpec,
    SolveConfig, SpectralField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_field(rng: &mut ChaCha8Rng, n: usize, decay: f64) -> SpectralField {
    SpectralField::new(
        (1..=n)
            .map(|k| rng.sample::<f64, _>(StandardNormal) * (k as f64).powf(-decay))
            .collect(),
    )
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_roundtrip = 0.0f64;
    let mut worst_parseval = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=128);
        let g = 2 * n + 1 + rng.random_range(0..64);
        let v = random_field(&mut rng, n, 0.0);
        let mut t = GridTransform::new(n, g).unwrap();
        let grid = t.synthesize(&v).unwrap();
        let mut back = vec![0.0; n];
        t.analyze_sine_into(&grid.values, &mut back).unwrap();
        for (a, b) in back.iter().zip(&v.coeffs) {
            worst_roundtrip = worst_roundtrip.max((a - b).abs());
        }
        worst_parseval = worst_parseval.max((grid.l2_norm() - norm_l2(&v)).abs());
    }
    outcome(
        worst_roundtrip < 1e-10 && worst_parseval < 1e-10,
        format!("round trip {worst_roundtrip:.1e}, Parseval {worst_parseval:.1e} (< 1e-10)"),
    )
}

fn criterion_2() -> Outcome {
    let f = Polynomial::burgers();
    let n = 16;
    let out = apply_f(&SpectralField::mode(1, n, 1.0), &f, f.alias_free_grid(n)).unwrap();
    let oracle = out
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| (c - if i == 1 { SQRT_2 * PI } else { 0.0 }).abs())
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut doubling = 0.0f64;
    let mut skew = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(4..=64);
        let u = random_field(&mut rng, n, 1.0);
        let g = f.alias_free_grid(n);
        let a = apply_f(&u, &f, g).unwrap();
        let b = apply_f(&u, &f, 2 * g).unwrap();
        let scale = 1.0 + a.coeffs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            doubling = doubling.max((x - y).abs() / scale);
        }
        let norm = norm_l2(&u);
        skew = skew.max(a.dot(&u).abs() / (1.0 + norm.powi(3)));
    }
    outcome(
        oracle < 1e-10 && doubling < 1e-12 && skew < 1e-10,
        format!(
            "e_1 oracle {oracle:.1e} (< 1e-10), G-doubling {doubling:.1e} (< 1e-12), \
             skew {skew:.1e} (< 1e-10)"
        ),
    )
}

fn criterion_3() -> Outcome {
    let seeds = 10_000u64;
    let steps = 64;
    let checked_steps = [1usize, 8, 64];
    let modes = [1usize, 4, 16];
    let mut worst_z = 0.0f64;
    for alpha in [1.8, 1.9, 2.0] {
        let p = FracParams::new(alpha).unwrap();
        let mut sum_sq = vec![0.0f64; modes.len() * checked_steps.len()];
        for seed in 0..seeds {
            let spec = NoiseSpec::new(seed, 16, steps, 0.5).unwrap();
            let path = generate_ou_path(&spec, p, steps).unwrap();
            for (i, &m) in checked_steps.iter().enumerate() {
                for (j, &k) in modes.iter().enumerate() {
                    sum_sq[i * modes.len() + j] += path.get(m, k - 1).powi(2);
                }
            }
        }
        for (i, &m) in checked_steps.iter().enumerate() {
            let t = m as f64 * 0.5 / steps as f64;
            for (j, &k) in modes.iter().enumerate() {
                let l = p.symbol(k);
                let variance = -(-2.0 * l * t).exp_m1() / (2.0 * l);
                let sample = sum_sq[i * modes.len() + j] / seeds as f64;
                // Mean is known to be zero, so Var(X²) = 2σ⁴.
                let se = variance * (2.0 / seeds as f64).sqrt();
                worst_z = worst_z.max((sample - variance).abs() / se);
            }
        }
    }
    let p = FracParams::new(1.9).unwrap();
    let spec = NoiseSpec::new(7, 16, 64, 0.5).unwrap();
    let fine = generate_ou_path(&spec, p, 64).unwrap();
    let coarse = generate_ou_path(&spec, p, 32).unwrap();
    let coupled = (0..=32).all(|m| {
        coarse
            .row(m)
            .iter()
            .zip(fine.row(2 * m))
            .all(|(a, b)| a.to_bits() == b.to_bits())
    });
    outcome(
        worst_z < 3.0 && coupled,
        format!("worst |z| {worst_z:.2} (< 3), M=32 vs M=64 bitwise: {coupled}"),
    )
}

fn criterion_4() -> Outcome {
    let p = FracParams::new(1.9).unwrap();
    let mut worst_cv = 0.0f64;
    for beta in [0.5, 1.0] {
        let values: Vec<f64> = (0..=50)
            .map(|i| {
                let t = 10f64.powf(-6.0 + 5.0 * i as f64 / 50.0);
                smoothing_profile(beta, t, p, 1 << 14).unwrap()
            })
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        worst_cv = worst_cv.max(var.sqrt() / mean);
    }
    outcome(
        worst_cv < 0.05,
        format!("coefficient of variation {worst_cv:.4} (< 0.05)"),
    )
}

fn criterion_5() -> Outcome {
    let alpha: f64 = 1.9;
    let gamma = alpha / 2.0;
    let beta = 0.0;
    let total = 1 << 14;
    let ns = [8usize, 16, 32, 64, 128];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut decays = Vec::new();
    for _ in 0..8 {
        let v = random_field(&mut rng, total, gamma + 0.51);
        let source = norm_h(&v, gamma);
        let ratios: Vec<f64> = ns
            .iter()
            .map(|&n| norm_h(&v.sub(&project(&v, n)), beta) / source)
            .collect();
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let slope = loglog_slope(&xs, &ratios).unwrap().slope;
        decays.push(-slope);
    }
    let target = gamma - beta - 0.1;
    let med = median(&decays).unwrap();
    let worst = decays.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        med >= target,
        format!("median fitted decay {med:.3} over 8 fields (≥ {target:.3}), worst {worst:.3}"),
    )
}

fn rate_line(r: &RateReport) -> String {
    format!(
        "median decay {:.3} (≥ {:.3} − {}), per-seed {:?}",
        r.observed_rate.unwrap_or(f64::NAN),
        r.theory_rate,
        r.tolerance,
        r.fitted_slopes
            .iter()
            .map(|s| (s * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    )
}

fn main() {
    let base = SolveConfig::burgers_default(0);
    let options = StudyOptions::default();
    let mut results: Vec<(usize, Outcome, f64)> = Vec::new();
    let mut timed = |id: usize, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {id:>2}: {} [{secs:.1}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((id, o, secs));
    };

    timed(1, &mut criterion_1);
    timed(2, &mut criterion_2);
    timed(3, &mut criterion_3);
    timed(4, &mut criterion_4);
    timed(5, &mut criterion_5);

    let mut space = None;
    timed(6, &mut || match space_convergence_study(&base, &[8, 16, 32, 64], &options) {
        Ok(r) => {
            let o = outcome(r.pass, rate_line(&r));
            space = Some(r);
            o
        }
        Err(e) => outcome(false, format!("error: {e}")),
    });

    let mut time = None;
    let m_list: Vec<usize> = (5..=10).map(|e| 1usize << e).collect();
    timed(7, &mut || match time_convergence_study(&base, &m_list, &options) {
        Ok(r) => {
            let o = outcome(r.pass, rate_line(&r));
            time = Some(r);
            o
        }
        Err(e) => outcome(false, format!("error: {e}")),
    });

    timed(8, &mut || {
        let opts = StudyOptions {
            seeds: (0..16).collect(),
            ..options.clone()
        };
        match path_regularity_study(&base, &opts) {
            Ok(r) => outcome(
                r.pass,
                format!(
                    "OU median exponent {:.3} (≥ {:.3} − {}), solution median {:.3}",
                    r.ou_median, r.theory_rate, r.tolerance, r.solution_median
                ),
            ),
            Err(e) => outcome(false, format!("error: {e}")),
        }
    });

    timed(9, &mut || {
        let reports: Vec<&RateReport> = space.iter().chain(time.iter()).collect();
        if reports.len() != 2 {
            return outcome(false, "a study ended with an error (blow-up or failure)".into());
        }
        let sup = reports.iter().map(|r| r.sup_c_delta).fold(0.0, f64::max);
        let violations: usize = reports.iter().map(|r| r.energy_violations).sum();
        outcome(
            sup.is_finite() && violations == 0,
            format!("no blow-up, sup C^δ norm {sup:.3}, energy violations {violations}"),
        )
    });

    timed(10, &mut || {
        let small = base.with_modes(64);
        let opts = StudyOptions {
            seeds: vec![11, 12],
            ..options.clone()
        };
        let render = || -> String {
            let s = space_convergence_study(&small, &[4, 8, 16], &opts).unwrap();
            let t = time_convergence_study(&small, &[32, 64, 128], &opts).unwrap();
            let mut csv = Vec::new();
            s.write_csv(&mut csv).unwrap();
            t.write_csv(&mut csv).unwrap();
            serde_json::to_string(&(s, t)).unwrap() + &String::from_utf8(csv).unwrap()
        };
        let a = render();
        let b = render();
        let same_full = match (&space, &time) {
            (Some(s), Some(_)) => {
                let again = space_convergence_study(&base, &[8, 16, 32, 64], &StudyOptions {
                    seeds: vec![0],
                    ..options.clone()
                })
                .unwrap();
                again.errors_cdelta[0]
                    .iter()
                    .zip(&s.errors_cdelta[0])
                    .all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        };
        outcome(
            a == b && same_full,
            format!(
                "re-run byte-identical: {} ({} bytes), seed 0 of criterion 6 reproduced: {same_full}",
                a == b,
                a.len()
            ),
        )
    });

    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    let total: f64 = results.iter().map(|r| r.2).sum();
    if failed.is_empty() {
        println!("acceptance: all 10 criteria PASS ({total:.0}s)");
    } else {
        println!("acceptance: FAIL on criteria {failed:?} ({total:.0}s)");
        std::process::exit(1);
    }
}
