use std::path::PathBuf;
use std::process::ExitCode;

use benjamin_core::experiments::{
    fmt_g17, hilbert_convergence, kernel_dump, preset_with, run_experiment, scheme_convergence,
    PresetName, RunConfig, RunSummary,
};
use benjamin_core::integrators::Scheme;
use benjamin_core::solvers::{JacobianMode, NewtonSettings};
use benjamin_core::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};

/// Structure-preserving solvers for the Benjamin and Benjamin-Ono equations.
#[derive(Parser)]
#[command(name = "benjamin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file (flat `key = value` format).
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `out` key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named preset: bo-soliton, gaussian-split or wave-breaking.
    Preset {
        name: String,
        /// `key=value`, repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Use the published grids and horizons (hours of compute).
        #[arg(long)]
        full_scale: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the resolved config instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// Fitted order of accuracy on a sequence of grids.
    Convergence {
        #[arg(long, value_enum)]
        target: Target,
        /// Scheme for `--target scheme`.
        #[arg(long, default_value = "euler-box")]
        scheme: String,
        /// Grid sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        points: Option<Vec<usize>>,
        /// Horizon for `--target scheme`.
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
    },
    /// Hilbert kernel and Fourier symbols of an N-point grid as CSV.
    KernelDump {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Hilbert,
    Scheme,
}

fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{s}` is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn print_summary(s: &RunSummary) {
    println!("out: {}", s.out.display());
    println!("steps: {}", s.steps);
    println!("final_time: {}", fmt_g17(s.final_time));
    println!("mass_drift: {}", fmt_g17(s.last.mass - s.first.mass));
    println!("momentum_drift: {}", fmt_g17(s.last.momentum - s.first.momentum));
    println!("energy_drift: {}", fmt_g17(s.last.energy - s.first.energy));
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::Io(format!("{}: {e}", config.display())))?;
            let mut cfg = RunConfig::parse(&text)?;
            if let Some(out) = out {
                cfg.out = out;
            }
            print_summary(&run_experiment(&cfg)?);
        }
        Command::Preset {
            name,
            overrides,
            full_scale,
            out,
            print_config,
        } => {
            let name: PresetName = name.parse()?;
            let mut overrides = overrides
                .iter()
                .map(|s| parse_override(s))
                .collect::<Result<Vec<_>>>()?;
            if let Some(out) = out {
                overrides.push(("out".into(), out.display().to_string()));
            }
            let cfg = preset_with(name, full_scale, &overrides)?;
            if print_config {
                print!("{}", cfg.to_text());
            } else {
                print_summary(&run_experiment(&cfg)?);
            }
        }
        Command::Convergence {
            target,
            scheme,
            points,
            t_end,
        } => {
            let report = match target {
                Target::Hilbert => hilbert_convergence(&points.unwrap_or_else(|| vec![64, 128, 256]))?,
                Target::Scheme => {
                    let scheme: Scheme = scheme.parse()?;
                    let default = match scheme {
                        Scheme::Tvm => vec![64, 128, 256],
                        _ => vec![63, 127, 255],
                    };
                    let newton = NewtonSettings {
                        jacobian_mode: if scheme == Scheme::Tvm {
                            JacobianMode::Chord
                        } else {
                            JacobianMode::Analytic
                        },
                        ..NewtonSettings::default()
                    };
                    scheme_convergence(scheme, &points.unwrap_or(default), t_end, newton)?
                }
            };
            println!("points,dx,error");
            for ((n, dx), e) in report.points.iter().zip(&report.dx).zip(&report.errors) {
                println!("{n},{},{}", fmt_g17(*dx), fmt_g17(*e));
            }
            match report.order {
                Some(o) => println!("order,{}", fmt_g17(o)),
                None => println!("order,n/a"),
            }
        }
        Command::KernelDump { n } => print!("{}", kernel_dump(n)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
