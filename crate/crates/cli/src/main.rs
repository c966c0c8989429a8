use clap::{Parser, Subcommand, ValueEnum};
use formation_core::scenario::{load_config, EstimateMode, LoadedConfig, Realization, Scenario};
use formation_core::{output, sim};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "formation-sim", version, about = "Adaptive delay-compensated formation control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write series.csv plus snapshots
    Run {
        /// TOML scenario file (omit when --preset is given)
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Hold the delay estimate fixed at this value instead of adapting
        #[arg(long, value_name = "X")]
        fixed_delay_estimate: Option<f64>,
        #[arg(long, value_enum)]
        realization: Option<RealizationArg>,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        #[arg(long, short)]
        quiet: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RealizationArg {
    Spectral,
    Simpson,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Paper,
    Moderate,
    Mismatch,
}

impl PresetArg {
    fn name(self) -> &'static str {
        match self {
            PresetArg::Paper => "paper",
            PresetArg::Moderate => "moderate",
            PresetArg::Mismatch => "mismatch",
        }
    }
}

fn load(config: Option<PathBuf>, preset: Option<PresetArg>) -> Result<LoadedConfig, String> {
    match (config, preset) {
        (Some(p), None) => load_config(&p).map_err(|e| e.to_string()),
        (None, Some(p)) => Scenario::preset(p.name()).map_err(|e| e.to_string()),
        (Some(_), Some(_)) => Err("give either a config file or --preset, not both".into()),
        (None, None) => Err("missing config file (or --preset)".into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        config,
        out,
        fixed_delay_estimate,
        realization,
        preset,
        quiet,
    } = cli.command;

    let loaded = match load(config, preset) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    for d in &loaded.defaults_applied {
        println!("default: {d}");
    }
    let mut sc = loaded.scenario;
    if let Some(x) = fixed_delay_estimate {
        if !(x.is_finite() && x > 0.0) {
            eprintln!("config error: --fixed-delay-estimate must be positive, got {x}");
            return ExitCode::from(1);
        }
        sc.estimate_mode = EstimateMode::Fixed(x);
    }
    if let Some(r) = realization {
        sc.realization = match r {
            RealizationArg::Spectral => Realization::Spectral,
            RealizationArg::Simpson => Realization::Simpson,
        };
    }

    let record = match sim::run(&sc, |row| {
        if !quiet {
            eprintln!("t={:9.4}  Dhat={:.6}  err_u={:.3e}  err_z={:.3e}", row.t, row.dhat, row.err_u, row.err_z);
        }
    }) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = output::write_run(&out, &record) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    println!("dt = {:e}, kernel rebuilds = {}", record.dt, record.kernel_rebuilds);
    println!("Dhat(T) = {:.10}", record.final_dhat);
    println!("output written to {}", out.display());
    match record.guard {
        Some(g) => {
            eprintln!("instability guard tripped at t = {} (|u| = {:e})", g.t, g.value);
            ExitCode::from(2)
        }
        None => ExitCode::SUCCESS,
    }
}
