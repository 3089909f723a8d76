//! `mg`: gates as monodromy, from the command line.
//!
//! Every subcommand emits one report (JSON by default) holding the resolved
//! configuration, a `deviations` map of named checks and the result payload.
//! Exit status: 0 success, 1 input error, 2 numerical failure, 3 a check
//! exceeded its tolerance.

mod commands;
mod config;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, RunConfig};
use report::CliError;

#[derive(Parser)]
#[command(name = "mg", version, about = "Quantum gates as monodromy of logarithmic connections")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Local error tolerance of the transport integrator.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    unitarity_tol: f64,
    /// Tolerance for braid, flatness and group relations.
    #[arg(long, global = true, default_value_t = 1e-6)]
    relation_tol: f64,
    /// Tolerance for forward monodromy against synthesis targets.
    #[arg(long, global = true, default_value_t = 1e-5)]
    match_tol: f64,
    /// Truncation order of the series.
    #[arg(long, global = true, default_value_t = 4)]
    order: usize,
    /// Coupling, e.g. `3`, `0.05`, `3+1i`. Default depends on the command.
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
pub enum Command {
    /// Named gates, controlled gates, tensor products.
    #[command(subcommand)]
    Gate(commands::GateCmd),
    /// Loops around punctures and braid paths.
    #[command(subcommand)]
    Paths(commands::PathsCmd),
    /// Monodromy, logarithms and flatness of logarithmic connections.
    #[command(subcommand)]
    Fuchsian(commands::FuchsianCmd),
    /// Synthesize a connection family with prescribed monodromy.
    Synth(commands::SynthArgs),
    /// Knizhnik-Zamolodchikov braid matrices.
    #[command(subcommand)]
    Kz(commands::KzCmd),
    /// Heuristic density screening of gate sets.
    #[command(subcommand)]
    Universality(commands::UniversalityCmd),
    /// Targets near identity, synthesis, forward check and density screen.
    Pipeline(commands::PipelineArgs),
}

impl Command {
    fn default_lambda(&self) -> f64 {
        match self {
            Command::Kz(_) => 3.0,
            _ => 0.05,
        }
    }
}

fn resolve(global: &GlobalArgs, command: &Command) -> Result<RunConfig, CliError> {
    let lambda = match &global.lambda {
        Some(s) => config::parse_complex(s).map_err(CliError::Validation)?,
        None => mg_core::C64::new(command.default_lambda(), 0.0),
    };
    let cfg = RunConfig {
        tol: global.tol,
        unitarity_tol: global.unitarity_tol,
        relation_tol: global.relation_tol,
        match_tol: global.match_tol,
        order: global.order,
        lambda: lambda.into(),
        seed: global.seed,
        out: global.out.clone(),
        format: global.format,
        threads: config::thread_cap()?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = resolve(&cli.global, &cli.command)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot size thread pool: {e}")))?;
    }
    let report = commands::dispatch(cli.command, &cfg)?;
    let text = report.render(cfg.format)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    for (name, d) in report.deviations.iter().filter(|(_, d)| !d.pass) {
        eprintln!("deviation {name} = {:.3e} exceeds tolerance {:.1e}", d.value, d.tol);
    }
    Ok(report.passes())
}

fn main() -> ExitCode {
    // clap's own usage-error status would collide with the numerical code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("mg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
