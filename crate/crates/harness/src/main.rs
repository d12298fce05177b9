use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aniflow::pipeline::{self, ErrorRecord, RunManifest, EXIT_CONFIG, EXIT_FAILED};
use aniflow::{Scenario, SweepConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aniflow", version, about = "Anisotropic graphical flow with capillary and Neumann boundaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Tensor identities and decay constants of the anisotropy.
    Verify,
    /// Run the flow and write the diagnostics series.
    Evolve,
    /// Translating speed by every configured method.
    Translator,
    /// Repeat a command over a parameter grid.
    Sweep,
}

fn config_error(out: &Path, message: String) -> ExitCode {
    let record = ErrorRecord {
        kind: "config".into(),
        message,
    };
    eprintln!("error: {}", record.message);
    let _ = aniflow::output::write_json(&out.join("error.json"), &record);
    ExitCode::from(EXIT_CONFIG as u8)
}

fn report(m: &RunManifest, quiet: bool) {
    if quiet {
        return;
    }
    for (name, v) in &m.verdicts {
        println!("{name}: {} ({})", if v.pass { "pass" } else { "FAIL" }, v.detail);
    }
    for t in &m.translator {
        println!("lambda[{:?}] = {:.10} (residual {:.2e})", t.method, t.lambda, t.residual);
    }
    if let Some(e) = &m.error {
        eprintln!("error: {}", e.message);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config.as_ref() else {
        return config_error(&cli.out, "--config is required".into());
    };
    if let Command::Sweep = cli.command {
        let sweep = match SweepConfig::load(path) {
            Ok(s) => s,
            Err(e) => return config_error(&cli.out, format!("{e:#}")),
        };
        return match pipeline::cmd_sweep(&sweep, &cli.out) {
            Ok(ms) => {
                for m in &ms {
                    if !cli.quiet {
                        println!("== {}", m.scenario.name);
                    }
                    report(m, cli.quiet);
                }
                let worst = ms.iter().map(|m| m.exit_code()).max().unwrap_or(0);
                ExitCode::from(worst as u8)
            }
            Err(e) => config_error(&cli.out, format!("{e:#}")),
        };
    }
    let mut scenario = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => return config_error(&cli.out, format!("{e:#}")),
    };
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    let result = match cli.command {
        Command::Verify => pipeline::cmd_verify(&scenario, &cli.out),
        Command::Evolve => pipeline::cmd_evolve(&scenario, &cli.out),
        Command::Translator => pipeline::cmd_translator(&scenario, &cli.out),
        Command::Sweep => unreachable!(),
    };
    match result {
        Ok(m) => {
            report(&m, cli.quiet);
            ExitCode::from(m.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILED as u8)
        }
    }
}
