//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error,
//! 3 oracle enumeration cap exceeded.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::config::{load_config, ScenarioConfig};
use crate::coordinator::Scenario;
use crate::error::Error;
use crate::oracle::exhaustive_search;
use crate::output::{learned_sum_for, write_oracle, write_run, Manifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_ORACLE_CAP: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "femtoq", version, about = "Cooperative Q-learning power allocation for femtocell networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the density sweep and write CSV artifacts.
    Run(CommonArgs),
    /// Solve a small instance by exhaustive search.
    Oracle(CommonArgs),
    /// Load, validate and print the effective configuration.
    ValidateConfig(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Scenario file (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest density of the sweep (oracle: number of femtocells).
    #[arg(long = "m-max")]
    m_max: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

impl CommonArgs {
    fn resolve(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(m) = self.m_max {
            cfg.phases.m_max = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::ConfigParse { .. } => EXIT_CONFIG,
        Error::EnumerationCap { .. } => EXIT_ORACLE_CAP,
        _ => EXIT_RUNTIME,
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let common = match &cli.command {
        Command::Run(a) | Command::Oracle(a) | Command::ValidateConfig(a) => a,
    };
    let level = if common.quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_target(false)
        .try_init();

    // a missing config file is a configuration problem, not a runtime one
    let cfg = match common.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };

    let result = match cli.command {
        Command::Run(_) => run(cfg, common.quiet),
        Command::Oracle(_) => oracle(cfg, common.quiet),
        Command::ValidateConfig(_) => {
            print!("{}", cfg.to_toml_string());
            Ok(())
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run(cfg: ScenarioConfig, quiet: bool) -> Result<(), Error> {
    let scenario = Scenario::new(cfg.clone())?;
    let trace = scenario.run()?;
    let dir = cfg.output.dir.clone();
    let files = write_run(&trace, &cfg, &dir)?;
    for s in trace.summaries() {
        info!(
            "M={:2} C_MUE={:.3} min C_FUE={:.3} sum={:.3} jain={:.3} iterations={}{}",
            s.m,
            s.c_mue,
            s.min_fue_capacity,
            s.sum_capacity,
            s.jain,
            s.iterations_to_converge.unwrap_or(s.iterations_run),
            if s.iterations_to_converge.is_some() { "" } else { " (not converged)" },
        );
    }
    if !quiet {
        let manifest = Manifest::new(&cfg, trace.densities.len());
        println!("seed = {}", manifest.seed);
        println!("config_hash = {}", manifest.config_hash);
        println!("version = {}", manifest.version);
        println!("files = {}", files.len());
        println!("out = {}", dir.display());
    }
    Ok(())
}

fn oracle(cfg: ScenarioConfig, quiet: bool) -> Result<(), Error> {
    let m = cfg.oracle.m.unwrap_or(cfg.phases.m_max);
    if m > cfg.phases.m_max {
        return Err(Error::config("oracle.m", format!("{m} exceeds phases.m_max")));
    }
    let scenario = Scenario::new(cfg.clone())?;
    let ids: Vec<usize> = scenario.admission_order()[..m].to_vec();
    let env = scenario.environment(&ids)?;
    let result = exhaustive_search(&env, &scenario.actions, cfg.oracle.enumeration_cap)?;
    let learned = learned_sum_for(&cfg.output.dir, &cfg, m);
    let summary = write_oracle(
        &result,
        &ids,
        scenario.actions.levels_dbm(),
        learned,
        &cfg.output.dir,
    )?;
    if !quiet {
        println!(
            "evaluated = {}\nfeasible = {}\nbest_objective = {:.6}\nc_mue = {:.6}",
            summary.evaluated, summary.feasible, summary.best_objective, summary.c_mue
        );
        if let Some(gap) = summary.gap {
            println!("gap = {gap:.6}");
        }
    }
    Ok(())
}
