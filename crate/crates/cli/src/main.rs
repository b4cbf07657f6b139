use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use torque_prop::{exit, list_scenarios, parse_config, preset, run_scenario, ScenarioConfig};

#[derive(Parser)]
#[command(name = "torque-prop", version, about = "Run torque-propagator scenarios and write CSV tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration file or a built-in preset.
    Run {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output directory; defaults to $TORQUE_PROP_OUT, then the current directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in presets.
    List,
    /// Parse and validate a configuration file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::List => {
            for (name, description) in list_scenarios() {
                println!("{name:<24} {description}");
            }
            exit::OK
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("{}: valid {} configuration", config.display(), cfg.scenario.name());
                exit::OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit::CONFIG_ERROR
            }
        },
        Command::Run { config, preset: name, out } => {
            let cfg = match (config, name) {
                (Some(path), _) => load(&path),
                (None, Some(n)) => preset(&n).ok_or_else(|| format!("unknown preset {n}; see `torque-prop list`")),
                (None, None) => Err("give --config or --preset".to_string()),
            };
            match cfg {
                Err(e) => {
                    eprintln!("error: {e}");
                    exit::CONFIG_ERROR
                }
                Ok(cfg) => {
                    let out = out
                        .or_else(|| std::env::var_os("TORQUE_PROP_OUT").map(PathBuf::from))
                        .unwrap_or_else(|| PathBuf::from("."));
                    match run_scenario(&cfg, &out) {
                        Ok(report) => {
                            print!("{report}");
                            if report.passed() {
                                exit::OK
                            } else {
                                eprintln!("error: diagnostics exceeded their bounds");
                                exit::DIAGNOSTICS_EXCEEDED
                            }
                        }
                        Err(e) => {
                            eprintln!("error: {e}");
                            e.exit_code()
                        }
                    }
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
