use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sle_gff_lab::report::CliError;
use sle_gff_lab::{execute, experiments::EXPERIMENTS, suites::SUITES, Command};

#[derive(Parser)]
#[command(name = "sle-gff-lab", version, about = "Verification suites and experiments for sle-gff")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a verification suite; exit 0 iff every check passes.
    Verify(Target),
    /// Run an experiment and write CSV/JSON outputs.
    Experiment(Target),
}

#[derive(clap::Args)]
struct Target {
    name: String,
    /// [--config file.json] [--seed N] [--out dir] and `--key value`
    /// overrides of config fields.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    rest: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (cmd, t) = match cli.cmd {
        Cmd::Verify(t) => (Command::Verify, t),
        Cmd::Experiment(t) => (Command::Experiment, t),
    };
    match execute(cmd, &t.name, &t.rest) {
        Ok(o) => {
            let text = serde_json::to_string_pretty(&o.report).unwrap_or_default();
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::from(if o.pass { 0 } else { 1 })
        }
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            eprintln!("usage: sle-gff-lab <verify|experiment> <name> [--config file.json] [--seed N] [--out dir]");
            eprintln!("  verify:     {}", SUITES.join(", "));
            eprintln!("  experiment: {}", EXPERIMENTS.join(", "));
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
