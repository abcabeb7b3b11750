use std::io::Write as _;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use galaxy_cli::commands;
use galaxy_cli::config::{Overrides, RunConfig};
use galaxy_cli::error::Result;

#[derive(Parser)]
#[command(
    name = "galaxy",
    version,
    about = "Galaxy morphology classification with KNN and an MLP"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an input CSV and report the class distribution
    Ingest(#[command(flatten)] Overrides),
    /// Write a synthetic, well-separated three-class CSV
    Synth(#[command(flatten)] Overrides),
    /// Fit the selected models and write evaluation artifacts
    Train(#[command(flatten)] Overrides),
    /// Run the KNN grid search and/or the MLP randomized search
    Search(#[command(flatten)] Overrides),
}

fn run(command: Command) -> Result<String> {
    match command {
        Command::Ingest(o) => {
            let cfg = RunConfig::resolve(&o)?;
            let r = commands::ingest(&cfg)?;
            Ok(format!(
                "read {} rows, rejected {}; class counts {:?}",
                r.rows_read, r.rows_rejected, r.class_counts
            ))
        }
        Command::Synth(o) => {
            let cfg = RunConfig::resolve(&o)?;
            let path = commands::synth(&cfg)?;
            Ok(format!("wrote {} rows to {}", cfg.synth.n, path.display()))
        }
        Command::Train(o) => {
            let cfg = RunConfig::resolve(&o)?;
            let doc = commands::train(&cfg)?;
            let mut lines = Vec::new();
            for m in &doc.models {
                lines.push(format!(
                    "{}: train accuracy {:.4}, test accuracy {:.4}",
                    m.model, m.train_accuracy, m.test.accuracy
                ));
            }
            for w in &doc.warnings {
                lines.push(format!("warning: {w}"));
            }
            Ok(lines.join("\n"))
        }
        Command::Search(o) => {
            let cfg = RunConfig::resolve(&o)?;
            let outcome = commands::search(&cfg)?;
            let mut lines: Vec<String> = outcome
                .best
                .best
                .iter()
                .map(|b| {
                    format!(
                        "{}: best {} ({} {:.4})",
                        b.model, b.candidate, b.metric, b.score
                    )
                })
                .collect();
            lines.extend(
                outcome
                    .best
                    .warnings
                    .iter()
                    .map(|w| format!("warning: {w}")),
            );
            Ok(lines.join("\n"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(summary) => {
            if !summary.is_empty() {
                let _ = writeln!(std::io::stdout(), "{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code())
        }
    }
}
