use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heatnet::cli::{self, RunOptions};

/// Steady-state heat transport in static and periodically driven harmonic
/// oscillator networks.
#[derive(Parser)]
#[command(name = "heatnet", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Path to the JSON run configuration.
    #[arg(long, global = true, default_value = "heatnet.json")]
    config: PathBuf,

    /// Output directory (overrides output.dir from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps (overrides solver.workers).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Quadrature relative tolerance (overrides solver.quad_rel_tol).
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Also write a gnuplot script next to heatmap CSVs.
    #[arg(long, global = true)]
    emit_gnuplot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Steady-state currents of a static network.
    StaticCurrents,
    /// Period-averaged currents and work rate of a driven network.
    DrivenCurrents,
    /// Rectification coefficient over an (omega_d, c0) grid.
    RectificationMap,
    /// Quasi-current rectification over an (omega_d, c0) grid.
    QuasiRectificationMap,
    /// Dynamical amplification factors over a drive-frequency sweep.
    TransistorDynamic,
    /// Static three-bath amplification factors over a T3 sweep.
    TransistorStatic,
    /// Cross-validate the spectral solver against the discrete-bath oracle.
    OracleCheck,
    /// Floquet stability flags over an (omega_d, c0) grid.
    StabilityMap,
}

impl Command {
    fn to_cli(&self) -> cli::Subcommand {
        match self {
            Command::StaticCurrents => cli::Subcommand::StaticCurrents,
            Command::DrivenCurrents => cli::Subcommand::DrivenCurrents,
            Command::RectificationMap => cli::Subcommand::RectificationMap,
            Command::QuasiRectificationMap => cli::Subcommand::QuasiRectificationMap,
            Command::TransistorDynamic => cli::Subcommand::TransistorDynamic,
            Command::TransistorStatic => cli::Subcommand::TransistorStatic,
            Command::OracleCheck => cli::Subcommand::OracleCheck,
            Command::StabilityMap => cli::Subcommand::StabilityMap,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let opts = RunOptions {
        config_path: args.config,
        subcommand: args.command.to_cli(),
        out_dir: args.out,
        workers: args.workers,
        tolerance: args.tolerance,
        emit_gnuplot: args.emit_gnuplot,
    };
    match cli::run(&opts) {
        Ok(outputs) => {
            for path in outputs {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
