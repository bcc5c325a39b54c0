use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use tutor_harness::{compare, run_scenario, stats_from_jsonl, write_artifacts, Scenario};

#[derive(Parser, Debug)]
#[command(
    name = "tutor-harness",
    about = "Run scripted tutoring sessions and compare their statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file and write events.jsonl, transcript.json and
    /// stats.json into the output directory.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print statistics for one event log.
    Stats {
        #[arg(long)]
        log: PathBuf,
    },
    /// Compare event logs of the same topic side by side.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        logs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn read(path: &PathBuf) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { scenario, out } => {
            let s = Scenario::load(&scenario)?;
            let output = run_scenario(&s)?;
            write_artifacts(&out, &output)?;
            println!(
                "{} rounds, phase {:?}, {} events written to {}",
                output.state.round,
                output.state.phase,
                output.events.len(),
                out.display()
            );
        }
        Command::Stats { log } => {
            let stats =
                stats_from_jsonl(&read(&log)?).with_context(|| log.display().to_string())?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        Command::Compare { logs, format } => {
            let runs = logs
                .iter()
                .map(|p| stats_from_jsonl(&read(p)?).with_context(|| p.display().to_string()))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let table = compare(&runs)?;
            match format {
                Format::Text => print!("{}", table.to_text()),
                Format::Csv => print!("{}", table.to_csv()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&runs)?),
            }
        }
    }
    Ok(())
}
