use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use momtunnel::app::{self, AppError};
use momtunnel::config::RunConfig;
use momtunnel::dynamics::Order;

#[derive(Parser)]
#[command(name = "momtunnel", version, about = "Moment-hierarchy tunneling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one packet and classify its fate
    Simulate(RunArgs),
    /// Classify a family of packets over one swept parameter
    Sweep(RunArgs),
    /// Tabulate the effective potential on a (t, q) grid
    Surface(RunArgs),
    /// Point-particle run (moments switched off)
    Classical(RunArgs),
    /// Check the equation tables against the moment algebra
    CheckAlgebra(AlgebraArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration
    #[arg(short, long)]
    config: PathBuf,
    /// Output table; overrides `output.path`
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Truncation order: 0, 2 or 3
    #[arg(long, value_parser = parse_order)]
    order: Option<Order>,
}

#[derive(Args)]
struct AlgebraArgs {
    /// Report file
    #[arg(short, long, default_value = "algebra_report.txt")]
    out: PathBuf,
    /// Table to check instead of the built-in ones (repeatable)
    #[arg(long = "eom-table")]
    eom_table: Vec<PathBuf>,
}

fn parse_order(s: &str) -> Result<Order, String> {
    match s {
        "0" => Ok(Order::Classical),
        "2" => Ok(Order::Second),
        "3" => Ok(Order::Third),
        _ => Err(format!("unsupported order {s}; expected 0, 2 or 3")),
    }
}

fn prepare(args: &RunArgs, forced: Option<Order>, default_out: &str) -> Result<(RunConfig, PathBuf), AppError> {
    let mut cfg = app::load_config(&args.config)?;
    if let Some(order) = forced.or(args.order) {
        cfg.model.order = order;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.path.clone())
        .unwrap_or_else(|| PathBuf::from(default_out));
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<PathBuf, AppError> {
    match cli.command {
        Command::Simulate(a) => {
            let (cfg, out) = prepare(&a, None, "trajectory.csv")?;
            let r = app::run_simulate(&cfg, &out)?;
            eprintln!("{}: {}", r.outcome.tag, r.trajectory.termination.as_str());
            Ok(out)
        }
        Command::Classical(a) => {
            let (cfg, out) = prepare(&a, Some(Order::Classical), "classical.csv")?;
            let r = app::run_simulate(&cfg, &out)?;
            eprintln!("{}: {}", r.outcome.tag, r.trajectory.termination.as_str());
            Ok(out)
        }
        Command::Sweep(a) => {
            let (cfg, out) = prepare(&a, None, "sweep.csv")?;
            let rows = app::run_sweep(&cfg, &out)?;
            eprintln!("{} points", rows.len());
            Ok(out)
        }
        Command::Surface(a) => {
            let (cfg, out) = prepare(&a, None, "surface.csv")?;
            let s = app::run_surface(&cfg, &out)?;
            eprintln!("{} rows", s.rows.len());
            Ok(out)
        }
        Command::CheckAlgebra(a) => {
            let tables = a
                .eom_table
                .iter()
                .map(|p| app::load_table(p))
                .collect::<Result<Vec<_>, _>>()?;
            app::run_check_algebra(&tables, &a.out)?;
            Ok(a.out)
        }
    }
}

fn main() -> ExitCode {
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
        Ok(out) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
