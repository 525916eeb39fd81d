//! Command-line front end for the half-line boundary-value toolkit.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Run};
use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "halfline-cli", version, about = "Semiclassical half-line NLS toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults reproduce the built-in example profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    t: Option<f64>,
    #[arg(long, global = true)]
    x: Option<f64>,
    /// Nodes per RHP panel.
    #[arg(long, global = true)]
    nodes: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check the boundary data admissibility clauses.
    ValidateData,
    /// Tabulate τ, Φ and its derivatives, and ℓ on a uniform k-grid.
    EmitTransforms,
    /// Compare the exact reflection coefficient with the model one.
    ScanGamma,
    /// Trace the vacuum-domain boundary on a log-spaced t-grid.
    VacuumBoundary,
    /// Band endpoints and modulation fields on an (x, t) grid.
    Whitham,
    /// Solve the Riemann–Hilbert problem at one (x, t, ε).
    SolveRhp,
    /// Run the acceptance suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::ValidateData => "validate-data",
            Command::EmitTransforms => "emit-transforms",
            Command::ScanGamma => "scan-gamma",
            Command::VacuumBoundary => "vacuum-boundary",
            Command::Whitham => "whitham",
            Command::SolveRhp => "solve-rhp",
            Command::Verify => "verify",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    cfg.apply(Overrides { eps: cli.eps, t: cli.t, x: cli.x, nodes: cli.nodes });
    cfg.validate().map_err(Failure::Config)?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|cfg| {
        let run = Run::new(cfg, cli.command.name());
        match cli.command {
            Command::ValidateData => run.validate_data(),
            Command::EmitTransforms => run.emit_transforms(),
            Command::ScanGamma => run.scan_gamma(),
            Command::VacuumBoundary => run.vacuum_boundary(),
            Command::Whitham => run.whitham(),
            Command::SolveRhp => run.solve_rhp(),
            Command::Verify => run.verify(),
        }
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
