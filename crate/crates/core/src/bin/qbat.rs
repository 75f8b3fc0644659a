use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qbat::runner::{self, ExperimentConfig};
use qbat::Error;

#[derive(Parser)]
#[command(name = "qbat", version, about = "Spin-chain quantum battery charging simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file or a named preset.
    Run {
        /// Configuration file (TOML).
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Preset name (see `list-presets`).
        #[arg(long)]
        preset: Option<String>,
        /// Output directory, overriding the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print every preset with its parameters.
    ListPresets,
    /// Parse and validate a configuration file without running it.
    Validate { config: PathBuf },
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Config { .. } | Error::Parameter { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn describe(cfg: &ExperimentConfig) -> String {
    let p = &cfg.protocol;
    let mode = match &cfg.sweep {
        Some(s) => format!("sweep {} over {} values", s.parameter.name(), s.values.len()),
        None => "single run".to_string(),
    };
    format!(
        "{mode}: battery={} charger={} N={} lambda={} grid=[0,{}] step={} backend={:?} convention={:?}",
        p.battery.family(),
        p.charger.family(),
        p.n,
        p.lambda,
        cfg.grid.end,
        cfg.grid.step,
        cfg.backend.kind,
        p.ata_convention
    )
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::ListPresets => {
            for row in runner::list_presets() {
                println!("{:<7} {:<6} {}", row.name, row.panel, row.summary);
            }
        }
        Command::Validate { config } => {
            let cfg = runner::load_config(&config)?;
            println!("ok: {}", describe(&cfg));
            println!("config_hash: {}", runner::config_hash(&cfg));
        }
        Command::Run { config, preset, out } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => runner::load_config(&path)?,
                (None, Some(name)) => runner::find_preset(&name)
                    .ok_or_else(|| Error::Config {
                        key: "preset".into(),
                        reason: format!("unknown preset {name:?}"),
                    })?
                    .config(),
                (None, None) => unreachable!("clap requires one"),
            };
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            eprintln!("{}", describe(&cfg));
            let report = runner::run(&cfg)?;
            if report.boundary_max {
                eprintln!("warning: a maximum sits on the last grid time; consider a longer grid");
            }
            for f in &report.files {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
