//! `fsb`: simulate the fractional stochastic Burgers equation and run the
//! convergence studies.
//!
//! Exit status: 0 on success, 2 when a rate or property check fails, 1 on any
//! operational error.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use fsb_core::experiments::{space_theory_rate, time_theory_rate};
use fsb_core::io::{json_hash, write_atomic, write_json};
use fsb_core::noise::generate_ou_path;
use fsb_core::solver::{energy_diagnostic_with_path, solve_with_path};
use fsb_core::validation::run_checks;
use fsb_core::{
    path_regularity_study, space_convergence_study, time_convergence_study, validity_window,
    Error, NoiseSpec, RateReport, Result, SolveConfig, StudyOptions, RNG_ID, TOOL_VERSION,
};
use serde::Serialize;
use serde_json::json;

use config::{RunConfig, StudyParams};

#[derive(Parser)]
#[command(name = "fsb", version, about = "Spectral Galerkin solver and convergence studies for the fractional stochastic Burgers equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "fsb-out")]
    out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    /// Treat parameter-window warnings as errors.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq)]
enum Command {
    /// Solve once and write the trajectory diagnostics.
    Simulate {
        /// Also write the full state history as binary.
        #[arg(long)]
        dump_states: bool,
        /// Also write the OU path as binary.
        #[arg(long)]
        dump_noise: bool,
    },
    /// Spatial convergence rate against an N-mode reference.
    ConvergeSpace,
    /// Temporal convergence rate against an M_base-step reference.
    ConvergeTime,
    /// Temporal Hölder exponents of the noise and the solution.
    Regularity,
    /// Structural self-checks of the discretisation.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::ConvergeSpace => "converge-space",
            Command::ConvergeTime => "converge-time",
            Command::Regularity => "regularity",
            Command::Validate => "validate",
        }
    }

    fn outputs(self) -> Vec<String> {
        let mut files = vec![format!("{}.manifest.json", self.name())];
        match self {
            Command::Simulate {
                dump_states,
                dump_noise,
            } => {
                files.push("trajectory.csv".into());
                files.push("simulate.json".into());
                if dump_states {
                    files.push("trajectory.bin".into());
                }
                if dump_noise {
                    files.push("noise.bin".into());
                }
            }
            Command::ConvergeSpace | Command::ConvergeTime | Command::Regularity => {
                files.push(format!("{}.csv", self.name()));
                files.push(format!("{}.json", self.name()));
            }
            Command::Validate => files.push("validate.json".into()),
        }
        files
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    config_path: Option<String>,
    output_dir: String,
    config: &'a SolveConfig,
    study: &'a StudyParams,
    rng_id: &'a str,
    tool_version: &'a str,
    timestamp_unix: u64,
}

impl RunManifest<'_> {
    /// Hash of everything except the timestamp.
    fn hash(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("timestamp_unix");
        }
        Ok(json_hash(&value))
    }
}

enum Verdict {
    Pass,
    Fail,
}

fn git_ref() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Warn about, or under strict mode reject, parameters outside the window the
/// subcommand relies on.
fn check_window(cmd: Command, cfg: &SolveConfig, strict: bool) -> Result<bool> {
    let w = validity_window(cfg.params.alpha(), cfg.delta);
    let (label, check) = match cmd {
        Command::ConvergeSpace | Command::ConvergeTime => ("rate-theorem", &w.rate_theorems),
        _ => ("existence", &w.existence),
    };
    if check.passed {
        return Ok(true);
    }
    let reasons = check.violations.join("; ");
    if strict {
        return Err(Error::Window(format!("{label} window: {reasons}")));
    }
    eprintln!("warning: {label} window violated: {reasons}");
    Ok(false)
}

fn write_csv_with_hash(
    path: &Path,
    hash: &str,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "# manifest_hash={hash}")?;
        body(w)
    })
}

fn rate_summary(r: &RateReport, hash: &str) -> serde_json::Value {
    json!({
        "study": r.study,
        "alpha": r.alpha,
        "delta": r.delta,
        "theory_rate": r.theory_rate,
        "median_slope": r.median_slope,
        "observed_rate": r.observed_rate,
        "per_seed_slopes": r.fitted_slopes,
        "tolerance": r.tolerance,
        "pass": r.pass,
        "degenerate": r.degenerate,
        "axis_name": r.axis_name,
        "parameter_axis": r.parameter_axis,
        "seeds": r.seeds,
        "errors_cdelta": r.errors_cdelta,
        "errors_l2": r.errors_l2,
        "noise_hashes": r.noise_hashes,
        "sup_c_delta": r.sup_c_delta,
        "energy_violations": r.energy_violations,
        "rng_id": r.rng_id,
        "git_ref": git_ref(),
        "tool_version": TOOL_VERSION,
        "manifest_hash": hash,
    })
}

fn run_rate_study(
    cmd: Command,
    run: &RunConfig,
    options: &StudyOptions,
    out: &Path,
    hash: &str,
) -> Result<Verdict> {
    let report = match cmd {
        Command::ConvergeSpace => space_convergence_study(&run.solve, &run.study.n_list, options)?,
        _ => time_convergence_study(&run.solve, &run.study.m_list, options)?,
    };
    let name = cmd.name();
    write_csv_with_hash(&out.join(format!("{name}.csv")), hash, |w| report.write_csv(w))?;
    write_json(&out.join(format!("{name}.json")), &rate_summary(&report, hash))?;
    println!("{name}: axis {} = {:?}", report.axis_name, report.parameter_axis);
    for (seed, slope) in report.seeds.iter().zip(&report.fitted_slopes) {
        println!("  seed {seed:>4}: slope {slope:+.4}");
    }
    match (&report.degenerate, report.observed_rate) {
        (Some(reason), _) => println!("  degenerate: {reason}"),
        (None, Some(rate)) => println!(
            "  observed rate {rate:.4}, theory {:.4}, tolerance {}",
            report.theory_rate, report.tolerance
        ),
        _ => {}
    }
    println!("  {}", if report.pass { "PASS" } else { "FAIL" });
    Ok(if report.pass { Verdict::Pass } else { Verdict::Fail })
}

fn run_simulate(
    run: &RunConfig,
    dump_states: bool,
    dump_noise: bool,
    out: &Path,
    hash: &str,
) -> Result<Verdict> {
    let cfg = &run.solve;
    let path = if cfg.stochastic {
        let spec = NoiseSpec {
            n_modes: cfg.n_modes,
            ..cfg.noise
        };
        Some(generate_ou_path(&spec, cfg.params, cfg.steps)?)
    } else {
        None
    };
    let traj = match solve_with_path(cfg, path.as_ref()) {
        Ok(t) => t,
        Err(Error::Blowup {
            step,
            norm,
            partial,
        }) => {
            write_csv_with_hash(&out.join("trajectory.csv"), hash, |w| partial.write_csv(w))?;
            return Err(Error::Blowup {
                step,
                norm,
                partial,
            });
        }
        Err(e) => return Err(e),
    };
    let energy = energy_diagnostic_with_path(&traj, cfg, path.as_ref())?;
    write_csv_with_hash(&out.join("trajectory.csv"), hash, |w| traj.write_csv(w))?;
    if dump_states {
        write_atomic(&out.join("trajectory.bin"), |w| {
            traj.write_binary(w, cfg.noise.seed, cfg.params.alpha())
        })?;
    }
    if let (true, Some(p)) = (dump_noise, &path) {
        write_atomic(&out.join("noise.bin"), |w| {
            p.write_binary(w, cfg.noise.seed, cfg.params.alpha())
        })?;
    }
    let last = traj.diagnostics.last().expect("complete trajectory");
    let summary = json!({
        "seed": cfg.noise.seed,
        "alpha": cfg.params.alpha(),
        "delta": cfg.delta,
        "N": cfg.n_modes,
        "M": cfg.steps,
        "T": cfg.final_time,
        "final_l2_norm": last.l2_norm,
        "sup_c_delta": traj.sup_c_delta(),
        "energy_max_ratio": energy.max_ratio,
        "energy_violation": energy.violation,
        "noise_hash": cfg.noise.coupling_hash(cfg.params),
        "rng_id": RNG_ID,
        "tool_version": TOOL_VERSION,
        "manifest_hash": hash,
    });
    write_json(&out.join("simulate.json"), &summary)?;
    println!(
        "simulate: N = {}, M = {}, final |u|_L2 = {:.6}, sup C^δ = {:.6}, energy ratio {:.4}",
        cfg.n_modes,
        cfg.steps,
        last.l2_norm,
        traj.sup_c_delta(),
        energy.max_ratio
    );
    Ok(if energy.violation {
        Verdict::Fail
    } else {
        Verdict::Pass
    })
}

fn run_regularity(
    run: &RunConfig,
    options: &StudyOptions,
    out: &Path,
    hash: &str,
) -> Result<Verdict> {
    let report = path_regularity_study(&run.solve, options)?;
    write_csv_with_hash(&out.join("regularity.csv"), hash, |w| {
        writeln!(w, "seed,ou_exponent,solution_exponent")?;
        for ((seed, ou), sol) in report
            .seeds
            .iter()
            .zip(&report.ou_exponents)
            .zip(&report.solution_exponents)
        {
            writeln!(w, "{seed},{ou:e},{sol:e}")?;
        }
        Ok(())
    })?;
    let mut value = serde_json::to_value(&report)?;
    if let Some(map) = value.as_object_mut() {
        map.insert("git_ref".into(), git_ref().into());
        map.insert("manifest_hash".into(), hash.into());
        map.insert("tool_version".into(), TOOL_VERSION.into());
    }
    write_json(&out.join("regularity.json"), &value)?;
    println!(
        "regularity: OU median exponent {:.4}, solution median {:.4}, theory {:.4} − {}",
        report.ou_median, report.solution_median, report.theory_rate, report.tolerance
    );
    println!("  {}", if report.pass { "PASS" } else { "FAIL" });
    Ok(if report.pass { Verdict::Pass } else { Verdict::Fail })
}

fn run_validate(run: &RunConfig, out: &Path, hash: &str) -> Result<Verdict> {
    let checks = run_checks(&run.solve)?;
    println!("{:<28} {:>12} {:>12}  result", "check", "value", "tolerance");
    for c in &checks {
        println!(
            "{:<28} {:>12.3e} {:>12.3e}  {}",
            c.name,
            c.value,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let pass = checks.iter().all(|c| c.pass);
    write_json(
        &out.join("validate.json"),
        &json!({ "checks": checks, "pass": pass, "manifest_hash": hash, "tool_version": TOOL_VERSION }),
    )?;
    Ok(if pass { Verdict::Pass } else { Verdict::Fail })
}

fn run(cli: &Cli) -> Result<Verdict> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let mut run_cfg = config::load(cli.config.as_deref())?;
    run_cfg.study.strict |= cli.strict;
    let cmd = cli.command;
    let in_window = check_window(cmd, &run_cfg.solve, run_cfg.study.strict)?;

    let out = &cli.out;
    let existing: Vec<String> = cmd
        .outputs()
        .into_iter()
        .filter(|f| out.join(f).exists())
        .collect();
    if !existing.is_empty() && !cli.force {
        return Err(Error::Config(format!(
            "{} already contains {}; pass --force to overwrite",
            out.display(),
            existing.join(", ")
        )));
    }

    let timestamp_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = RunManifest {
        subcommand: cmd.name(),
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        output_dir: out.display().to_string(),
        config: &run_cfg.solve,
        study: &run_cfg.study,
        rng_id: RNG_ID,
        tool_version: TOOL_VERSION,
        timestamp_unix,
    };
    let hash = manifest.hash()?;
    let mut manifest_value = serde_json::to_value(&manifest)?;
    if let Some(map) = manifest_value.as_object_mut() {
        map.insert("manifest_hash".into(), hash.clone().into());
        map.insert(
            "theory_rates".into(),
            json!({
                "space": space_theory_rate(run_cfg.solve.params.alpha(), run_cfg.solve.delta),
                "time": time_theory_rate(run_cfg.solve.params.alpha(), run_cfg.solve.delta),
            }),
        );
    }
    write_json(&out.join(format!("{}.manifest.json", cmd.name())), &manifest_value)?;

    let options = StudyOptions {
        seeds: run_cfg.study.seeds(),
        enforce_window: in_window,
        ..StudyOptions::default()
    };
    match cmd {
        Command::Simulate {
            dump_states,
            dump_noise,
        } => run_simulate(&run_cfg, dump_states, dump_noise, out, &hash),
        Command::ConvergeSpace | Command::ConvergeTime => {
            run_rate_study(cmd, &run_cfg, &options, out, &hash)
        }
        Command::Regularity => run_regularity(&run_cfg, &options, out, &hash),
        Command::Validate => run_validate(&run_cfg, out, &hash),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
