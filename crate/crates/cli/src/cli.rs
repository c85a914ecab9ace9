use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::commands::{linearize_report, reproduce, run_config, twist_report};
use crate::config::{Format, GeneratorSpec, RunConfig, TwistSpec};
use crate::error::{CliError, CliResult, EXIT_OK};
use crate::presets::PresetId;

#[derive(Debug, Parser)]
#[command(name = "commuteflow", version, about = "Gradient flow of commutator energies for symmetric matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a JSON configuration file.
    Run { config: PathBuf },
    /// Re-run one of the figure experiments.
    Reproduce {
        preset: PresetId,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze an N-oscillator twisted state.
    Twist {
        #[arg(long = "N")]
        n_osc: usize,
        #[arg(long, default_value_t = 1)]
        winding: usize,
        /// Also linearize and report the spectrum.
        #[arg(long)]
        spectrum: bool,
    },
    /// Spectrum of the linearization at a random commuting family.
    Linearize {
        #[arg(long)]
        seed: u64,
        #[arg(long = "N")]
        n_osc: usize,
        #[arg(long = "n")]
        dim: usize,
    },
}

// A closed pipe (e.g. `| head`) is not an error worth reporting.
fn print_json(v: &Value) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("serializes"));
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json, Format::Svg]
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", config.display())))?;
            let cfg = RunConfig::parse(&text)?;
            for f in run_config(&cfg)?.files {
                println!("{}", f.display());
            }
        }
        Command::Reproduce { preset, out } => {
            for f in reproduce(preset, &out, &all_formats())?.files {
                println!("{}", f.display());
            }
        }
        Command::Twist { n_osc, winding, spectrum } => {
            let spec = TwistSpec { n_osc, winding, gap: 1.0, traces: None };
            print_json(&twist_report(&spec, spectrum)?.0);
        }
        Command::Linearize { seed, n_osc, dim } => {
            if n_osc == 0 || dim == 0 {
                return Err(CliError::config("linearize needs N >= 1 and n >= 1"));
            }
            let g = GeneratorSpec { seed, n_osc, dim, scale: 1.0 };
            print_json(&linearize_report(&g)?.0);
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
