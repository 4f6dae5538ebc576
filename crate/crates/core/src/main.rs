use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vanka_lfa::cli::{self, CsvReport, SolveConfig};
use vanka_lfa::lfa::{FrequencyGrid, SmootherKind};
use vanka_lfa::solver::{CycleKind, MIN_CYCLES};
use vanka_lfa::Error;

#[derive(Parser)]
#[command(name = "vanka-lfa", version, about = "Fourier analysis and multigrid solves for Vanka and mass smoothers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cycle {
    TwoGrid,
    VCycle,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Frequency samples per dimension.
    #[arg(long, default_value_t = FrequencyGrid::DEFAULT_SAMPLES)]
    samples: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal damping and smoothing factors, exact and sampled.
    Table1(Output),
    /// Two-grid convergence factors for one to four sweeps.
    Table2(Output),
    /// Eigenvalues of the 2D two-grid symbol over the low frequencies.
    Eigfield {
        #[arg(long, value_parser = parse_kind, default_value = "vanka-e")]
        kind: SmootherKind,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        nu1: u32,
        #[arg(long, default_value_t = 0)]
        nu2: u32,
        #[arg(long)]
        omega: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Measured convergence of a Dirichlet solve against the Fourier prediction.
    Solve {
        #[arg(long, value_parser = parse_kind, default_value = "vanka-e")]
        kind: SmootherKind,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        nu1: u32,
        #[arg(long, default_value_t = 0)]
        nu2: u32,
        #[arg(long)]
        omega: Option<f64>,
        /// Meshsize 1/2^k, e.g. 1/64.
        #[arg(long, default_value = "1/64")]
        h: String,
        #[arg(long, value_enum, default_value = "two-grid")]
        cycle: Cycle,
        #[arg(long, default_value_t = MIN_CYCLES)]
        cycles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Two-grid factor over a grid of damping parameters in (0, 1.5].
    ScanOmega {
        #[arg(long, value_parser = parse_kind, default_value = "vanka-v")]
        kind: SmootherKind,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1)]
        nu1: u32,
        #[arg(long, default_value_t = 0)]
        nu2: u32,
        #[arg(long, default_value_t = 0.02)]
        step: f64,
        #[command(flatten)]
        output: Output,
    },
}

fn parse_kind(s: &str) -> Result<SmootherKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::Unsupported { .. }
            | Error::UnsupportedDimension(_)
            | Error::NotNestable(_)
            | Error::InvalidMeshsize(_)
            | Error::GridTooSmall(_) => Failure::Usage(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize + CsvReport>(report: &T, output: &Output) -> Result<(), Failure> {
    let mut w = sink(&output.out)?;
    match output.format {
        Format::Json => w.write_all(cli::to_json(report).as_bytes())?,
        Format::Csv => report.write_csv(&mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn check_sweeps(nu1: u32, nu2: u32) -> Result<(), Failure> {
    if nu1 + nu2 == 0 {
        return Err(Failure::Usage("nu1 + nu2 must be at least 1; pass --nu1 1 or --nu2 1".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Table1(output) => {
            let report = cli::table1(output.samples)?;
            emit(&report, &output)?;
            Ok(report.pass)
        }
        Command::Table2(output) => {
            let report = cli::table2(output.samples)?;
            emit(&report, &output)?;
            Ok(report.pass)
        }
        Command::Eigfield {
            kind,
            dim,
            nu1,
            nu2,
            omega,
            output,
        } => {
            if dim != 2 {
                return Err(Failure::Usage(format!("eigfield needs --dim 2, got {dim}")));
            }
            check_sweeps(nu1, nu2)?;
            let (field, summary) = cli::eigfield(kind, nu1, nu2, omega, output.samples)?;
            match output.format {
                Format::Json => {
                    let mut w = sink(&output.out)?;
                    w.write_all(cli::to_json(&summary).as_bytes())?;
                    w.flush()?;
                }
                Format::Csv => {
                    let mut w = sink(&output.out)?;
                    CsvReport::write_csv(&field, &mut w)?;
                    w.flush()?;
                    eprint!("{}", cli::to_json(&summary));
                }
            }
            Ok(summary.pass)
        }
        Command::Solve {
            kind,
            dim,
            nu1,
            nu2,
            omega,
            h,
            cycle,
            cycles,
            seed,
            output,
        } => {
            check_sweeps(nu1, nu2)?;
            let cfg = SolveConfig {
                kind,
                dim,
                nu1,
                nu2,
                omega,
                h: cli::parse_h(&h)?,
                cycle: match cycle {
                    Cycle::TwoGrid => CycleKind::TwoGrid,
                    Cycle::VCycle => CycleKind::VCycle,
                },
                cycles,
                seed,
                samples: output.samples,
            };
            let report = cli::solve(&cfg)?;
            emit(&report, &output)?;
            Ok(report.pass)
        }
        Command::ScanOmega {
            kind,
            dim,
            nu1,
            nu2,
            step,
            output,
        } => {
            check_sweeps(nu1, nu2)?;
            let report = cli::scan_omega(kind, dim, nu1, nu2, step, output.samples)?;
            if let Some(w) = &report.warning {
                eprintln!("warning: {w}");
            }
            emit(&report, &output)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
