//! `ser`: synthesis, feature extraction, regime training, adaptation and
//! evaluation for cross-corpus speech emotion recognition.

mod commands;
mod repro;
mod rundir;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ser", version, about = "Cross-corpus speech emotion recognition toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic domain-shifted corpora from a synthesis spec.
    Synth {
        /// Synthesis spec file (key = value).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for WAV files and manifests.
        #[arg(long)]
        out: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Extract per-utterance features into a cache directory.
    Extract {
        /// Manifest file(s) to process.
        #[arg(long = "manifest", required = true)]
        manifests: Vec<PathBuf>,
        /// Cache directory (one subdirectory per corpus).
        #[arg(long)]
        out: PathBuf,
        /// Feature kind: lmfb or mfcc.
        #[arg(long)]
        features: Option<String>,
        /// Run config supplying feature settings (frame geometry etc.).
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train one regime (CC, MD, DAT, OOD) from a run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Run directory to create.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Continue a finished run on its held-out corpus.
    Adapt {
        /// Base run directory (trained without the adapt corpus).
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-evaluate a run directory's checkpoint.
    Eval {
        /// Run directory holding the checkpoint.
        #[arg(long)]
        run: PathBuf,
        /// Evaluate these manifests instead of the run's eval set.
        #[arg(long = "manifest")]
        manifests: Vec<PathBuf>,
        /// Also report the four-class merged view per corpus.
        #[arg(long)]
        iem4_view: bool,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full desk-scale regime grid (4 CC + MD + DAT + 4 OOD +
    /// 4 ADAPT) on synthetic corpora and emit table summaries.
    ReproduceAll {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Training epochs per run.
        #[arg(long, default_value_t = 12)]
        epochs: usize,
        /// Speakers per synthetic corpus.
        #[arg(long, default_value_t = 5)]
        speakers: usize,
        /// Segments per (speaker, emotion).
        #[arg(long, default_value_t = 2)]
        segments: usize,
        /// LSTM units per direction.
        #[arg(long, default_value_t = 12)]
        hidden: usize,
        /// Learning rate for the desk-scale grid.
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { spec, out, seed } => commands::cmd_synth(&spec, &out, seed),
        Command::Extract {
            manifests,
            out,
            features,
            config,
        } => commands::cmd_extract(&manifests, &out, features.as_deref(), config.as_deref()),
        Command::Train { config, out, seed } => commands::cmd_train(&config, &out, seed),
        Command::Adapt {
            base,
            config,
            out,
            seed,
        } => commands::cmd_adapt(&base, &config, &out, seed),
        Command::Eval {
            run,
            manifests,
            iem4_view,
            out,
        } => commands::cmd_eval(&run, &manifests, iem4_view, out.as_deref()),
        Command::ReproduceAll {
            out,
            seed,
            epochs,
            speakers,
            segments,
            hidden,
            lr,
        } => repro::reproduce_all(&out, seed, epochs, speakers, segments, hidden, lr),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
