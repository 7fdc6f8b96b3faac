use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cxr-triage", version, about = "Chest X-ray normalcy triage: report labeling, training and evaluation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for initialization, shuffling, augmentation and synthetic data.
    /// Overrides any `seed` in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Default sizes and optimizer settings.
    #[arg(long, global = true, value_enum, default_value = "desk")]
    pub profile: ProfileArg,

    /// key=value file applied on top of the profile defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Desk,
    Full,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label a JSONL report corpus as normal or abnormal.
    Label(LabelArgs),
    /// Train the pyramid classifier.
    Train(TrainArgs),
    /// Compute ROC and PR curves and the zero-miss operating point.
    Eval(EvalArgs),
    /// Write a synthetic blob dataset as 16-bit PGM images.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct LabelArgs {
    /// Report corpus, one `{"study_id", "text"}` object per line.
    #[arg(long, value_name = "FILE")]
    pub reports: PathBuf,

    /// Ontology JSON; the shipped default is used when omitted.
    #[arg(long, value_name = "FILE")]
    pub ontology: Option<PathBuf>,

    /// Output directory for labels.csv, evidence.json and the manifest.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Train on freshly generated synthetic images.
    #[arg(long, conflicts_with = "data_dir")]
    pub synthetic: bool,

    /// Directory with `train/` and `holdout/` subdirectories, each holding
    /// PGM images and a `labels.csv` of `study_id,label`.
    #[arg(long, value_name = "DIR", required_unless_present = "synthetic")]
    pub data_dir: Option<PathBuf>,

    /// Output directory for model.cxrt, training_log.csv and the manifest.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    /// Overrides the configured number of epochs.
    #[arg(long)]
    pub epochs: Option<usize>,

    /// Synthetic training images per class.
    #[arg(long, default_value_t = 500)]
    pub n_per_class: usize,

    /// Synthetic held-out images per class.
    #[arg(long, default_value_t = 200)]
    pub holdout_per_class: usize,

    /// Randomly permute labels across the training and held-out images
    /// together before training. Held-out AUC should then sit near 0.5.
    #[arg(long)]
    pub shuffle_labels: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConsensusArg {
    /// Keep only unanimous rows.
    Triple,
    /// Label every row by 2-of-3 vote.
    Majority,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Score table `study_id,score,label`.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["checkpoint", "images"])]
    pub scores: Option<PathBuf>,

    /// Model checkpoint used to score `--images`.
    #[arg(long, value_name = "FILE", requires = "images")]
    pub checkpoint: Option<PathBuf>,

    /// Directory of PGM images to score.
    #[arg(long, value_name = "DIR", requires = "checkpoint")]
    pub images: Option<PathBuf>,

    /// `study_id,label` ground truth for `--images`; defaults to
    /// `labels.csv` inside the image directory.
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,

    /// Three-reader ground truth `study_id,r1,r2,r3`.
    #[arg(long, value_name = "FILE", requires = "consensus")]
    pub consensus_file: Option<PathBuf>,

    /// How to turn the reader labels into ground truth.
    #[arg(long, value_enum, requires = "consensus_file")]
    pub consensus: Option<ConsensusArg>,

    /// Output directory for roc.csv, pr.csv, roc.svg, operating_point.json
    /// and the manifest.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Output directory; images go to `train/` and `holdout/`.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    #[arg(long, default_value_t = 500)]
    pub n_per_class: usize,

    #[arg(long, default_value_t = 200)]
    pub holdout_per_class: usize,

    /// Image side length; defaults to the profile's input size.
    #[arg(long)]
    pub size: Option<usize>,
}
