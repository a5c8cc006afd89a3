use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod run_report;

use run_report::Failure;

#[derive(Parser, Debug)]
#[command(name = "phaselab", version, about = "Projector phases, Gaussian kernels and symplectic normal forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Include wall time in the report (breaks byte-identical output).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Args, Debug, Clone)]
pub struct PhaseArg {
    /// Phase spec file.
    #[arg(value_name = "PHASE")]
    pub file: Option<PathBuf>,
    /// Phase spec file (alternative to the positional argument).
    #[arg(long = "phase", value_name = "FILE")]
    pub flag: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of seeded sample points.
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Projector-phase conditions on diagonal jets.
    Check {
        #[command(flatten)]
        phase: PhaseArg,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Kähler package, tangent models and cross-Hessian rank.
    Geometry {
        #[command(flatten)]
        phase: PhaseArg,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Critical-point residuals of φ ⊙ φ at seeded near-diagonal pairs.
    Critical {
        #[command(flatten)]
        phase: PhaseArg,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Distance scale of the second point from the first.
        #[arg(long, default_value_t = 0.2)]
        radius: f64,
    },
    /// Idempotence defect of the geometric-amplitude kernel on a packet.
    Project {
        #[command(flatten)]
        phase: PhaseArg,
        /// Packet spec file; defaults to a coherent state at the domain center.
        #[arg(long, value_name = "FILE")]
        packet: Option<PathBuf>,
        #[arg(long)]
        h: f64,
        #[command(flatten)]
        quad: QuadArgs,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Write Πf as a binary grid dump with a JSON sidecar.
        #[arg(long, value_name = "FILE")]
        emit: Option<PathBuf>,
    },
    /// Idempotence defects over a list of h and the fitted decay.
    Sweep {
        #[command(flatten)]
        phase: PhaseArg,
        /// Comma-separated values of h.
        #[arg(long = "h-list", value_delimiter = ',', required = true)]
        h_list: Vec<f64>,
        #[command(flatten)]
        quad: QuadArgs,
        /// Expected log–log slope (default: order + 1).
        #[arg(long)]
        expect_slope: Option<f64>,
        /// Allowed slope deviation (default 0.3 at order 0, 0.4 at order 1).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Write a built-in phase spec.
    Models {
        #[arg(value_enum)]
        kind: ModelName,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "general-linear")]
        scramble: String,
        #[arg(long, value_name = "FILE")]
        emit: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Linear symplectic analysis of the tangent pair (J, J*) at a point.
    Symplin {
        #[command(flatten)]
        phase: PhaseArg,
        /// Basepoint (defaults to the domain center).
        #[arg(long, value_delimiter = ',')]
        at: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Args, Debug, Clone)]
pub struct QuadArgs {
    /// Grid spacing, or "auto" for √h/4 with window factor 3.
    #[arg(long, default_value = "auto")]
    pub grid: String,
    /// Window radius factor (default 3).
    #[arg(long)]
    pub window: Option<f64>,
    /// Half-width of the quadrature box around the center.
    #[arg(long = "box", default_value_t = 1.2)]
    pub half: f64,
    /// Amplitude order: 0 = (c₀c₀)^{1/2}, 1 = with the transport correction.
    #[arg(long, default_value_t = 0)]
    pub order: u8,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ModelName {
    Bargmann,
    #[value(alias = "fubini-study")]
    Fs,
    Scrambled,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(report) => {
            let text = report.render(cli.json);
            print!("{text}");
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
