use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wcontract_cli::{catalog, load_config, output_dir, run_config, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "wcontract", version, about = "Weighted contraction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// List experiments, their anchors and required keys.
    List,
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            print!("{}", catalog::list_text());
            code(0)
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                println!("{}: ok ({})", config.display(), cfg.experiment);
                code(0)
            }
            Err(e) => {
                eprintln!("error: {}: {e}", config.display());
                code(EXIT_ERROR)
            }
        },
        Command::Run { config } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return code(EXIT_ERROR);
                }
            };
            let dir = output_dir(&cfg);
            match run_config(&cfg, &dir) {
                Ok(s) => {
                    println!("{} [{}] -> {}", cfg.experiment, s.report.status, s.output_dir.display());
                    for c in &s.report.claims {
                        println!("  {} = {} ({})", c.name, c.value, c.method.as_str());
                    }
                    if let Some(e) = &s.report.error {
                        eprintln!("error: {e}");
                    }
                    code(s.exit_code)
                }
                Err(e) => {
                    eprintln!("error: writing outputs to {}: {e}", dir.display());
                    code(EXIT_ERROR)
                }
            }
        }
    }
}
