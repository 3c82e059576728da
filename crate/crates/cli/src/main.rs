use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use factrank_cli::config::RunConfig;
use factrank_cli::pipeline::{self, RankerKind, SplitName};

/// Explanation ranking pipeline: ingest a fact tablestore and QA splits,
/// extract features, train linear rankers, and evaluate full-store rankings.
#[derive(Parser)]
#[command(name = "factrank", version, about)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, short, global = true, default_value = "factrank.json")]
    config: PathBuf,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the corpus, write the binary bundle, print stats.
    Ingest,
    /// Build the feature space and train the configured model.
    Train,
    /// Rank the full tablestore for every instance of a split.
    Predict {
        #[arg(long, value_enum, default_value = "dev")]
        split: SplitName,
        #[arg(long, value_enum, default_value = "model")]
        ranker: RankerKind,
    },
    /// Score a predictions dump against gold explanations.
    Evaluate {
        #[arg(long, value_enum, default_value = "dev")]
        split: SplitName,
        /// Predictions dump to score (defaults to predictions_<split>.tsv).
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Second dump for a paired t-test comparison.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Grid-search C and the negative-sample count on the dev split.
    Tune,
    /// Add each feature group to the lexical baseline for both learners.
    Ablate,
    /// Emit corpus and curve CSVs for plotting.
    Report {
        #[arg(long, value_enum, default_value = "test")]
        split: SplitName,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FACTRANK_LOG", "warn"))
        .init();
    let cli = Cli::parse();

    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.paths.out_dir = out;
    }
    std::fs::create_dir_all(&cfg.paths.out_dir)?;

    match cli.command {
        Command::Ingest => {
            let stats = pipeline::cmd_ingest(&cfg)?;
            println!("qa pairs (train+dev gold): {}", stats.qa_pairs);
            println!("gold facts total: {}", stats.gold_facts_total);
            println!("mean facts per qa: {:.2}", stats.mean_facts_per_qa);
            for (role, (count, mean)) in &stats.per_role {
                println!("  {role}: {count} facts, {mean:.2} per qa");
            }
            println!("explanation length histogram:");
            for (len, count) in &stats.length_histogram {
                println!("  {len:>2} facts: {count}");
            }
            println!("top table types by gold usage:");
            for (table, count, pct) in stats.table_type_usage.iter().take(10) {
                println!("  {table} ({count}) {pct:.2}%");
            }
        }
        Command::Train => pipeline::cmd_train(&cfg)?,
        Command::Predict { split, ranker } => {
            pipeline::cmd_predict(&cfg, split, ranker)?;
        }
        Command::Evaluate { split, predictions, compare } => {
            pipeline::cmd_evaluate(&cfg, split, predictions, compare)?;
        }
        Command::Tune => {
            pipeline::cmd_tune(&cfg)?;
        }
        Command::Ablate => {
            pipeline::cmd_ablate(&cfg)?;
        }
        Command::Report { split } => pipeline::cmd_report(&cfg, split)?,
    }
    Ok(())
}
