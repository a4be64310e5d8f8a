use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use passive_agreement_cli::run::{exit, run, RunOptions};
use passive_agreement_cli::{load_scenario, LoadError};

#[derive(Parser)]
#[command(name = "agreement", version, about = "Simulate and certify output agreement of passive networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trajectory, plot and report.
    Run {
        scenario: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Assemble and evaluate the certificate without simulating.
        #[arg(long)]
        check_only: bool,
        /// Override the integration step.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the final time.
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Run {
        scenario,
        out,
        check_only,
        dt,
        t_end,
    } = cli.command;

    let parsed = match load_scenario(&scenario) {
        Ok(s) => s,
        Err(e) => {
            match &e {
                LoadError::Invalid(d) => {
                    for diag in &d.0 {
                        eprintln!("{}: {diag}", scenario.display());
                    }
                }
                LoadError::Io { .. } => eprintln!("error: {e}"),
            }
            return ExitCode::from(e.exit_code());
        }
    };
    let prepared = match parsed.with_overrides(dt, t_end).prepare() {
        Ok(p) => p,
        Err(d) => {
            for diag in &d.0 {
                eprintln!("{}: {diag} (command-line override)", scenario.display());
            }
            return ExitCode::from(exit::CONFIG);
        }
    };

    match run(&prepared, &RunOptions { out_dir: out, check_only }) {
        Ok(outcome) => {
            let r = &outcome.report;
            if let Some(c) = &r.certificate {
                println!("certificate: {} (M = {})", c.verdict, c.m);
            }
            if let Some(a) = &r.agreement {
                match a.value {
                    Some(v) => println!("agreement: {v:.6}"),
                    None => println!("agreement: not detected (final disagreement {:.3e})", a.final_disagreement),
                }
            }
            for audit in &r.audits {
                println!("audit {}: {} ({} violations)", audit.id, audit.status, audit.violations);
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(exit::OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
