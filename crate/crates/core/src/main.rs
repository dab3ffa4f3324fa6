use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use reconlab::harness::{self, ExperimentConfig};

/// Output directory override, taking precedence over the config file.
const OUT_ENV: &str = "RECONLAB_OUT";

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "reconlab",
    version,
    about = "Reconstruction, disclosure-control and privacy experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report.
    Run {
        config: PathBuf,
        /// Override a config value, e.g. `--set seed=7 --set bounds=[0,2]`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory; beats both RECONLAB_OUT and the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List experiments and their parameters.
    ListExperiments,
}

fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, ExitCode> {
    let mut config = ExperimentConfig::load(path).map_err(|e| {
        eprintln!("error: cannot read config {}: {e}", path.display());
        ExitCode::from(EXIT_VALIDATION)
    })?;
    for o in overrides {
        config.set(o).map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        })?;
    }
    let violations = harness::validate(&config);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("invalid config: {v}");
        }
        return Err(ExitCode::from(EXIT_VALIDATION));
    }
    Ok(config)
}

fn run(config: PathBuf, overrides: Vec<String>, out: Option<PathBuf>) -> Result<(), ExitCode> {
    let config = load(&config, &overrides)?;
    let dir = out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| config.output_path.clone())
        .unwrap_or_else(|| PathBuf::from("reconlab-out"));
    let report = harness::run(&config).map_err(|e| {
        eprintln!("error: {} failed: {e}", config.experiment);
        ExitCode::from(EXIT_RUNTIME)
    })?;
    let path = report.write(&dir).map_err(|e| {
        eprintln!("error: cannot write report to {}: {e}", dir.display());
        ExitCode::from(EXIT_RUNTIME)
    })?;
    print!("{}", report.summary());
    println!("\nreport written to {}", path.display());
    Ok(())
}

fn list() {
    for e in harness::EXPERIMENTS {
        println!("{e}: {}", harness::describe(e).unwrap_or_default());
        for (name, default, help) in harness::parameter_help(e).unwrap_or_default() {
            println!("    {name} = {default}  ({help})");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            overrides,
            out,
        } => run(config, overrides, out),
        Command::Validate { config, overrides } => load(&config, &overrides).map(|c| {
            println!("{} config is valid", c.experiment);
        }),
        Command::ListExperiments => {
            list();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
