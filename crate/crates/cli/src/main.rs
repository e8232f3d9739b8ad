use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dehum::config::PipelineConfig;
use dehum::pipeline::Pipeline;
use dehum::Error;

#[derive(Parser)]
#[command(name = "dehum", version, about = "Dehumanization measures over a diachronic corpus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Training threads; overrides the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Read the corpus, write the paragraph cache and count tables.
    Ingest,
    /// Train full-corpus and per-year embeddings for every run.
    Train,
    /// Compute the enabled measures.
    Measure,
    /// Rank the most and least dehumanizing paragraphs.
    Extremes,
    /// Draw figures and run the trend and pairwise tests.
    Report,
}

fn load(cli: &Cli) -> dehum::Result<Pipeline> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut config = PipelineConfig::load(path)?;
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.train.workers = workers;
    }
    Pipeline::new(config)
}

fn run(cli: &Cli) -> dehum::Result<()> {
    let pipeline = load(cli)?;
    match cli.command {
        Command::Ingest => {
            let s = pipeline.ingest()?;
            println!("corpus: {}", s.total.summary());
            println!("retained: {}", s.retained.summary());
            if s.skipped_empty > 0 {
                println!("skipped {} empty paragraphs", s.skipped_empty);
            }
        }
        Command::Train => {
            let n = pipeline.train()?;
            println!("wrote {n} models");
        }
        Command::Measure => {
            let written = pipeline.measure()?;
            println!("wrote {} measure files: {}", written.len(), written.join(", "));
        }
        Command::Extremes => {
            let r = pipeline.extremes()?;
            for (mode, list) in &r.modes {
                println!(
                    "{mode}: {} qualifying, {} highest, {} lowest",
                    list.qualifying,
                    list.highest.len(),
                    list.lowest.len()
                );
            }
        }
        Command::Report => {
            let rows = pipeline.report()?;
            println!("wrote {} test results", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DEHUM_LOG", "warn")).init();
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if e.is_user_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
        Err(_) => ExitCode::from(1),
    }
}
