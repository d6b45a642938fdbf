use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "boltzworld",
    version,
    about = "Energy-based world model over categorical profiles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic dataset described by the config.
    Synth(Common),
    /// Greedy layer-wise pretraining; writes pretrain.ckpt.
    Pretrain(Common),
    /// Joint PCD fine-tuning of a checkpoint; writes finetune.ckpt.
    Finetune(Common),
    /// Variational free energy of every record; writes scores.csv.
    Score(Common),
    /// Run an intervention grid; writes grid.csv, grid.txt and grid_detail.csv.
    Intervene {
        #[command(flatten)]
        common: Common,
        /// Grid specification (TOML).
        #[arg(long)]
        grid: PathBuf,
    },
    /// Draw profiles from the model by block Gibbs sampling; writes samples.csv.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(short = 'n', long, default_value_t = 1000)]
        count: usize,
    },
    /// Export mean-field beliefs; writes beliefs.txt or beliefs.bin.
    ExportBeliefs {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = BeliefFormat::Text)]
        format: BeliefFormat,
    },
    /// Render a grid report, optionally checked against a second grid.
    Report {
        /// grid.csv written by `intervene`.
        #[arg(long)]
        input: PathBuf,
        /// Second grid (e.g. the held-out split) to compare against.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// CSV or JSON-lines dataset; `.jsonl` and `.json` select JSON lines.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fail on the first malformed dataset row.
    #[arg(long)]
    pub strict: bool,
    /// Records to operate on when the config defines a split.
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BeliefFormat {
    Text,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    All,
    Train,
    Val,
    Test,
}
