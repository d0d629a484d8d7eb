//! `bhl`: command-line front end to the numerical laboratory.
//!
//! Exit codes: 0 all checks pass, 1 invariant violation or numerical failure,
//! 2 invalid input, 3 missing required key, 4 unreadable or unwritable file.

mod config;
mod error;
mod geometry;
mod index;
mod report;
mod solvers;
mod wave;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Params, Resolved};
use crate::error::Failure;
use crate::report::{write_atomic, Outcome, Report, VERSION};

#[derive(Parser, Debug)]
#[command(name = "bhl", version, about = "Hyperbolic PDE laboratory on Kerr and 1+1 cylinders")]
struct Cli {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    KerrCheck(geometry::KerrCheckArgs),
    Geodesic(geometry::GeodesicArgs),
    WaveEvolve(wave::WaveArgs),
    Morawetz(wave::MorawetzArgs),
    MaxwellCurrents(geometry::MaxwellArgs),
    Green(solvers::GreenArgs),
    Goursat(solvers::GoursatArgs),
    Dirac(solvers::DiracArgs),
    Index(index::IndexArgs),
}

fn execute<P: Params>(
    args: &P,
    config: Option<&PathBuf>,
    body: fn(&P::Config) -> Result<Outcome, Failure>,
) -> Result<(), Failure> {
    let file = config.map(|p| config::load_file(p, P::NAME)).transpose()?;
    let conf = args.resolve(file.as_ref())?;
    if let Some(n) = config::thread_count(conf.threads())? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Input(format!("thread pool: {e}")))?;
    }
    let out = body(&conf)?;
    let report = Report {
        subcommand: P::NAME,
        version: VERSION,
        threads: rayon::current_num_threads(),
        config: &conf,
        observed_orders: &out.observed_orders,
        checks: &out.checks.0,
        passed: out.checks.failures().next().is_none(),
        results: &out.results,
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Failure::Numerical(e.to_string()))?;
    text.push('\n');
    match conf.out() {
        Some(path) => write_atomic(path, &text)?,
        None => print!("{text}"),
    }
    let mut failed = 0;
    for c in out.checks.failures() {
        eprintln!("invariant violation: {}: {:e} {} {:e} does not hold", c.name, c.value, c.relation, c.limit);
        failed += 1;
    }
    if failed > 0 {
        return Err(Failure::Violations(failed));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = cli.config.as_ref();
    match &cli.command {
        Command::KerrCheck(a) => execute(a, cfg, geometry::kerr_check),
        Command::Geodesic(a) => execute(a, cfg, geometry::geodesic),
        Command::WaveEvolve(a) => execute(a, cfg, wave::wave_evolve),
        Command::Morawetz(a) => execute(a, cfg, wave::morawetz),
        Command::MaxwellCurrents(a) => execute(a, cfg, geometry::maxwell_currents),
        Command::Green(a) => execute(a, cfg, solvers::green),
        Command::Goursat(a) => execute(a, cfg, solvers::goursat),
        Command::Dirac(a) => execute(a, cfg, solvers::dirac),
        Command::Index(a) => execute(a, cfg, index::index),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bhl: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
