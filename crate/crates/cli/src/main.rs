use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iim_core::harness::{
    consistency_study, convergence_study, operator_norm_study, ManufacturedCase, RunConfig, StudyOptions, CONFIG_KEYS,
};
use iim_core::solver::{JumpMode, Solver};
use iim_core::Error;

#[derive(Parser)]
#[command(name = "iim", version, about = "Immersed interface Navier-Stokes solver and study drivers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single solve from a TOML configuration file.
    #[command(after_help = CONFIG_KEYS)]
    Run {
        /// Path to the configuration file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Error and observed rates of a manufactured case under refinement.
    Converge(ConvergeArgs),
    /// Residuals of the corrected difference operators on the exact solution.
    Consistency(ConsistencyArgs),
    /// Exact max norms of the discrete operators.
    Opnorms(OpnormArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Analytic,
    Derived,
}

#[derive(Args)]
struct ConvergeArgs {
    /// taylor-green, static-circle, moving-circle or quiescent.
    #[arg(long)]
    case: String,
    /// Ascending comma-separated list of N.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    grids: Vec<usize>,
    /// Final time.
    #[arg(long = "T", default_value_t = 0.25)]
    t_final: f64,
    /// tau / h.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "analytic")]
    jump_mode: Mode,
    /// Drop the time-derivative crossing correction.
    #[arg(long)]
    no_c1: bool,
    /// Drop the side-shift crossing corrections.
    #[arg(long)]
    no_c7: bool,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConsistencyArgs {
    #[arg(long, default_value = "static-circle")]
    case: String,
    #[arg(long, value_delimiter = ',', default_value = "32,64,128,256")]
    grids: Vec<usize>,
    /// Time at which the exact solution is sampled.
    #[arg(long, default_value_t = 0.0)]
    time: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OpnormArgs {
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
    grids: Vec<usize>,
    /// Powers n of the Crank-Nicolson step operator.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64,128,256")]
    powers: Vec<u32>,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn case_by_cli_name(name: &str) -> Result<ManufacturedCase, Error> {
    ManufacturedCase::by_name(&name.replace('-', "_"))
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let solver = Solver::new(cfg.problem()?, cfg.solver_config())?;
            let mut out = sink(cfg.output.as_deref())?;
            writeln!(out, "step,t,max_velocity,mean_removed,residual_mean,divergence,crossings")?;
            let mut io_err = None;
            solver.run(|s| {
                let d = s.diagnostics;
                if let Err(e) = writeln!(
                    out,
                    "{},{:.6},{:.6e},{:.6e},{:.3e},{:.6e},{}",
                    s.step,
                    s.t,
                    s.u.max_abs(),
                    d.mean_removed,
                    d.residual_mean,
                    d.divergence,
                    d.crossings
                ) {
                    io_err.get_or_insert(e);
                }
            })?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
            out.flush()?;
        }
        Command::Converge(a) => {
            let case = case_by_cli_name(&a.case)?;
            let opts = StudyOptions {
                lambda: a.lambda,
                t_final: a.t_final,
                jump_mode: match a.jump_mode {
                    Mode::Analytic => JumpMode::Analytic,
                    Mode::Derived => JumpMode::Derived,
                },
                enable_c1: !a.no_c1,
                enable_c7: !a.no_c7,
                ..StudyOptions::default()
            };
            let report = convergence_study(&case, &a.grids, &opts)?;
            let mut out = sink(a.output.as_deref())?;
            report.write_csv(&mut out)?;
            out.flush()?;
        }
        Command::Consistency(a) => {
            let case = case_by_cli_name(&a.case)?;
            let report = consistency_study(&case, &a.grids, a.time)?;
            let mut out = sink(a.output.as_deref())?;
            report.write_csv(&mut out)?;
            out.flush()?;
        }
        Command::Opnorms(a) => {
            let report = operator_norm_study(&a.grids, &a.powers, a.lambda)?;
            let mut out = sink(a.output.as_deref())?;
            report.write_csv(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.root() {
            root @ Error::Diverged { .. } => {
                eprintln!("error: {root}");
                ExitCode::from(2)
            }
            _ => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
