//! Command-line front end. Exit codes: 0 success, 1 verdict failure or failed
//! run, 2 config or input error.

use crate::attack::{AdmissibilityVerdict, AttackSchedule};
use crate::batch::{self, Execution};
use crate::scenarios::builders;
use crate::scenarios::repro::{repro, Experiment};
use crate::scenarios::{
    resolve, run, seed_from_env, write_certificate, write_json, write_outputs, EpsPolicy, RunSummary, ScenarioConfig,
    ScenarioError, ScheduleSpec,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "hybris", version, about = "Certificates and hybrid simulation for attacked feedback optimization")]
pub struct Cli {
    /// Output directory; each run writes below its own subdirectory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Sequential execution for batch commands.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the certificate and write certificate.json.
    Certify { config: PathBuf },
    /// Simulate and write trajectory, monitor, certificate and summary files.
    Simulate { config: PathBuf },
    /// Check the schedule's admissibility and print the verdict and witness.
    CheckSchedule { config: PathBuf },
    /// Run one of the built-in experiments end to end.
    Repro { scenario: Experiment },
    /// Run a config repeatedly over a parameter range.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// `start:stop:count`, inclusive, evenly spaced.
        #[arg(long)]
        range: String,
    },
    /// Print the config of a built-in experiment.
    ShowConfig {
        scenario: Experiment,
        /// For the power grid: the plant-attacked variant instead of the controller-attacked one.
        #[arg(long)]
        plant_attacks: bool,
        /// For the synthetic experiments: the certificate-compliant variant.
        #[arg(long)]
        certified: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Seed,
    Eps,
    EpsFraction,
    Kappa1,
    Kappa2,
    T0,
    N0,
}

impl clap::ValueEnum for Experiment {
    fn value_variants<'a>() -> &'a [Self] {
        &Experiment::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

/// Parses `start:stop:count` into evenly spaced values.
pub fn parse_range(s: &str) -> Result<Vec<f64>, ScenarioError> {
    let bad = || ScenarioError::Config(format!("range `{s}` is not start:stop:count"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else { return Err(bad()) };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

/// Applies one sweep value to a copy of `cfg`.
pub fn apply_param(cfg: &ScenarioConfig, param: SweepParam, v: f64) -> Result<ScenarioConfig, ScenarioError> {
    let mut c = cfg.clone();
    let as_count = |v: f64| -> Result<u64, ScenarioError> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as u64)
        } else {
            Err(ScenarioError::Config(format!("{param:?} needs non-negative integers, got {v}")))
        }
    };
    match param {
        SweepParam::Seed => match &mut c.schedule {
            ScheduleSpec::Generated { seed, .. } => *seed = as_count(v)?,
            ScheduleSpec::Explicit { .. } => {
                return Err(ScenarioError::Config("seed sweep needs a generated schedule".into()));
            }
        },
        SweepParam::Eps => c.eps = EpsPolicy::Explicit { value: v },
        SweepParam::EpsFraction => c.eps = EpsPolicy::Certificate { fraction: v },
        SweepParam::Kappa1 => c.params.kappa1 = v,
        SweepParam::Kappa2 => c.params.kappa2 = v,
        SweepParam::T0 => c.params.t0 = v,
        SweepParam::N0 => c.params.n0 = u32::try_from(as_count(v)?).map_err(|e| ScenarioError::Config(e.to_string()))?,
    }
    c.name = format!("{}-{}-{}", cfg.name, serde_json::to_value(param).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default(), v);
    Ok(c)
}

#[derive(Debug, Serialize)]
struct ScheduleReport<'a> {
    name: &'a str,
    seed: Option<u64>,
    schedule: &'a AttackSchedule,
    verdict: &'a AdmissibilityVerdict,
}

fn verdict_code(ok: bool) -> i32 {
    if ok {
        0
    } else {
        1
    }
}

fn load(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    ScenarioConfig::load(path)
}

fn cmd_certify(path: &Path, out: &Path) -> Result<i32, ScenarioError> {
    let r = resolve(&load(path)?, seed_from_env())?;
    let dir = out.join(&r.name);
    write_certificate(&dir, &r.certificate)?;
    let c = &r.certificate;
    println!(
        "{}: kappa feasible {}, rho {:.6e}, tau0 {:.6e}, eps* {}, eps {:.6e}, Xi pd {}",
        r.name,
        c.kappa_feasible,
        c.rho,
        c.tau0,
        c.eps_star.map_or("none".into(), |e| format!("{e:.6e}")),
        c.eps,
        c.xi_pd
    );
    for w in &c.warnings {
        log::warn!("{w}");
    }
    println!("wrote {}", dir.join("certificate.json").display());
    Ok(verdict_code(c.kappa_feasible && c.xi_pd))
}

fn cmd_simulate(path: &Path, out: &Path) -> Result<i32, ScenarioError> {
    let r = resolve(&load(path)?, seed_from_env())?;
    let o = run(&r)?;
    let dir = out.join(&r.name);
    let s = write_outputs(&dir, &r, &o)?;
    for w in &s.warnings {
        log::warn!("{w}");
    }
    println!(
        "{}: {} jumps, certified {}, jump ok {}, flow ok {} ({:.4}), iss ok {}, final error {:.6e}",
        s.name, s.jumps, s.certified, s.jump.ok, s.flow.ok, s.flow.fraction, s.iss.ok, s.final_error
    );
    println!("wrote {}", dir.display());
    Ok(verdict_code(!s.certified || s.verdicts_hold()))
}

fn cmd_check_schedule(path: &Path, out: &Path) -> Result<i32, ScenarioError> {
    let r = resolve(&load(path)?, seed_from_env())?;
    let v = &r.validation.schedule;
    let report = ScheduleReport { name: &r.name, seed: r.seed, schedule: &r.setup.schedule, verdict: v };
    let dir = out.join(&r.name);
    std::fs::create_dir_all(&dir)?;
    write_json(&dir.join("schedule.json"), &report)?;
    println!(
        "{}: admissible {}, switch slack {:.6e}, attack-time slack {:.6e}",
        r.name, v.admissible, v.switch_slack, v.time_slack
    );
    if let Some(w) = v.violation() {
        println!("witness: {:?} on [{:.6e}, {:.6e}], {:.6e} > {:.6e}", w.kind, w.s, w.t, w.lhs, w.rhs);
    }
    Ok(verdict_code(v.admissible))
}

fn cmd_repro(scenario: Experiment, out: &Path) -> Result<i32, ScenarioError> {
    let dir = out.join(scenario.name());
    let s = repro(scenario, seed_from_env(), Some(&dir))?;
    for e in &s.eps_star {
        println!(
            "eps* [{}]: computed {}, reported {}, relative deviation {}",
            e.label,
            e.computed.map_or("none (kappa infeasible)".into(), |x| format!("{x:.6e}")),
            e.reported,
            e.relative_deviation.map_or("n/a".into(), |x| format!("{x:+.3}"))
        );
    }
    for r in &s.runs {
        println!(
            "run {}: eps {:.6e}, certified {}, tail sup error {:.6e}, log-error slope {}",
            r.name,
            r.eps,
            r.certified,
            r.tail_sup_error,
            r.log_error_slope.map_or("n/a".into(), |x| format!("{x:.6e}"))
        );
    }
    for c in &s.checks {
        let tag = if c.pass { "PASS" } else if c.hard { "FAIL" } else { "WARN" };
        println!("{tag} {} value {:.6e} threshold {:.6e}", c.name, c.value, c.threshold);
    }
    for n in &s.notes {
        println!("note: {n}");
    }
    println!("wrote {}", dir.join("summary.json").display());
    Ok(verdict_code(s.passed))
}

fn cmd_sweep(path: &Path, param: SweepParam, range: &str, out: &Path, exec: Execution) -> Result<i32, ScenarioError> {
    let base = load(path)?;
    let values = parse_range(range)?;
    let cfgs = values.iter().map(|&v| apply_param(&base, param, v)).collect::<Result<Vec<_>, _>>()?;
    let env_seed = if param == SweepParam::Seed { None } else { seed_from_env() };
    let dir = out.join(format!("{}-sweep", base.name));
    std::fs::create_dir_all(&dir)?;
    let results = batch::map(&cfgs, exec, |c| -> Result<RunSummary, ScenarioError> {
        let r = resolve(c, env_seed)?;
        let o = run(&r)?;
        write_outputs(&dir.join(&r.name), &r, &o)
    });

    let mut csv = String::from("value,status,eps,eps_star,certified,admissible,jumps,jump_ok,flow_ok,flow_fraction,iss_ok,final_error,tail_sup_error,log_error_slope\n");
    let mut failed = false;
    let num = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.16e}"));
    for (v, res) in values.iter().zip(&results) {
        match res {
            Ok(s) => {
                failed |= s.certified && !s.verdicts_hold();
                let _ = writeln!(
                    csv,
                    "{v:.16e},ok,{:.16e},{},{},{},{},{},{},{:.16e},{},{:.16e},{:.16e},{}",
                    s.eps,
                    num(s.eps_star),
                    s.certified,
                    s.admissible,
                    s.jumps,
                    s.jump.ok,
                    s.flow.ok,
                    s.flow.fraction,
                    s.iss.ok,
                    s.final_error,
                    s.tail_sup_error,
                    num(s.log_error_slope)
                );
            }
            Err(e) => {
                failed = true;
                log::warn!("sweep value {v}: {e}");
                let status = match e.exit_code() {
                    1 => "run_failed",
                    _ => "config_error",
                };
                let _ = writeln!(csv, "{v:.16e},{status},,,,,,,,,,,,");
            }
        }
    }
    std::fs::write(dir.join("sweep.csv"), csv)?;
    println!("{} runs, wrote {}", values.len(), dir.join("sweep.csv").display());
    Ok(verdict_code(!failed))
}

fn cmd_show_config(scenario: Experiment, plant_attacks: bool, certified: bool) -> Result<i32, ScenarioError> {
    let cfg = match (scenario, certified) {
        (Experiment::SyntheticStatic, false) => builders::build_synthetic_static(),
        (Experiment::SyntheticStatic, true) => builders::synthetic_static_certified(),
        (Experiment::SyntheticDynamic, false) => builders::build_synthetic_dynamic(),
        (Experiment::SyntheticDynamic, true) => builders::synthetic_dynamic_certified(),
        (Experiment::PowerGrid, _) => {
            let (c, p) = builders::build_power_grid();
            if plant_attacks {
                p
            } else {
                c
            }
        }
    };
    println!("{}", cfg.to_json());
    Ok(0)
}

/// Runs the parsed command and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let res = match &cli.command {
        Command::Certify { config } => cmd_certify(config, &cli.out),
        Command::Simulate { config } => cmd_simulate(config, &cli.out),
        Command::CheckSchedule { config } => cmd_check_schedule(config, &cli.out),
        Command::Repro { scenario } => cmd_repro(*scenario, &cli.out),
        Command::Sweep { config, param, range } => cmd_sweep(config, *param, range, &cli.out, exec),
        Command::ShowConfig { scenario, plant_attacks, certified } => {
            cmd_show_config(*scenario, *plant_attacks, *certified)
        }
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` (including the program name) and runs. Usage errors exit 2.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                2
            } else {
                0
            }
        }
    }
}
