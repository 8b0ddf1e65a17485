use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pitransfer::output::{self, Format};
use pitransfer::runner::{self, SweepParam};
use pitransfer::scenario::Scenario;
use pitransfer::{DriveMode, Error};

#[derive(Parser)]
#[command(name = "pitransfer", version, about = "Design and verify chirped population-transfer pulses")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Relative tolerance for the integrator and the duration fixed point.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Number of output samples per trajectory.
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the optimized pulse and write the design report.
    Design {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the dynamics for one mode.
    Simulate {
        scenario: PathBuf,
        /// unoptimized | frequency_only | optimized | manual (defaults to the scenario's mode)
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        traj: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run every applicable mode and tabulate them.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat the comparison over a grid of F0 or n_half values.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        param: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Scenario(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Scenario(e.to_string())
        }
    }
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure::Scenario(format!("{}: {e}", path.display()))
}

fn load(path: &Path, global: &Global) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    let mut s = Scenario::parse(&text)?;
    if let Some(tol) = global.tol {
        if !(tol > 0.0) {
            return Err(Failure::Scenario("--tol must be positive".into()));
        }
        s.numerics.tol = tol;
    }
    if let Some(grid) = global.grid {
        if grid < 2 {
            return Err(Failure::Scenario("--grid must be at least 2".into()));
        }
        s.numerics.grid = grid;
    }
    Ok(s)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_mode(s: &Scenario, name: &str) -> Result<DriveMode, Failure> {
    match name {
        "unoptimized" => Ok(DriveMode::Unoptimized),
        "frequency_only" => Ok(DriveMode::FrequencyOnly),
        "optimized" => Ok(DriveMode::Optimized),
        "manual" => s
            .manual_duration
            .map(DriveMode::Manual)
            .ok_or_else(|| Failure::Scenario("manual mode needs `duration` in [drive]".into())),
        other => Err(Failure::Scenario(format!("unknown mode {other:?}"))),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match cli.command {
        Command::Design { scenario, out } => {
            let s = load(&scenario, g)?;
            let (_, report) = runner::design(&s, s.mode)?;
            emit(&output::design_report(&report, g.format), out.as_deref())
        }
        Command::Simulate {
            scenario,
            mode,
            traj,
            summary,
        } => {
            let s = load(&scenario, g)?;
            let mode = match mode {
                Some(m) => parse_mode(&s, &m)?,
                None => s.mode,
            };
            let run = runner::simulate(&s, mode)?;
            if let Some(p) = traj {
                std::fs::write(&p, output::trajectory_csv(&run.trajectory)).map_err(|e| io(&p, e))?;
            }
            emit(&output::run_summary(&run.summary, g.format), summary.as_deref())?;
            if run.trajectory.norm_flag {
                return Err(Failure::Numerical(format!(
                    "norm drift {:.3e} exceeds tolerance",
                    run.trajectory.norm_drift
                )));
            }
            Ok(())
        }
        Command::Compare { scenario, out } => {
            let s = load(&scenario, g)?;
            let rows = runner::compare(&s)?;
            emit(&output::compare_table(&rows, g.format), out.as_deref())
        }
        Command::Sweep {
            scenario,
            param,
            from,
            to,
            steps,
            out,
        } => {
            let s = load(&scenario, g)?;
            let rows = runner::sweep(&s, param, from, to, steps, &s.applicable_modes())?;
            emit(&output::sweep_table(param, &rows, g.format), out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Scenario(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
