//! Run directories: self-contained records of one training run.
//!
//! Layout:
//!
//! ```text
//! <run>/
//!   config.snapshot   canonical run configuration (seed resolved)
//!   epochs.tsv        one machine-readable line per epoch
//!   checkpoint.bin    best parameters (named-tensor binary format)
//!   checkpoint.meta   geometry, class list, feature kind, epoch, score
//!   report.tsv        final metrics report of the best checkpoint
//!   provenance.txt    toolkit version, platform, regime, optional base run
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use ser_core::corpus::CorpusId;
use ser_core::model::checkpoint::{load_params, save_params, ModelMeta};
use ser_core::model::ModelParameters;
use ser_core::training::{Checkpoint, EpochRecord, RunConfig, RunResult};

pub const CONFIG_SNAPSHOT: &str = "config.snapshot";
pub const EPOCHS_TSV: &str = "epochs.tsv";
pub const CHECKPOINT_BIN: &str = "checkpoint.bin";
pub const CHECKPOINT_META: &str = "checkpoint.meta";
pub const REPORT_TSV: &str = "report.tsv";
pub const PROVENANCE: &str = "provenance.txt";

/// Serialize the per-epoch history with a fixed column layout: epoch,
/// train loss, domain loss, learning rate, then UA/WA per eval corpus and
/// the mean UA. Absent cells print `-`.
pub fn epochs_tsv(history: &[EpochRecord], eval_corpora: &[CorpusId]) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
    let mut out = String::from("# epoch\ttrain_loss\tdomain_loss\tlr");
    for corpus in eval_corpora {
        out.push_str(&format!("\t{corpus}.ua\t{corpus}.wa"));
    }
    out.push_str("\tmean_ua\n");
    for record in history {
        out.push_str(&format!(
            "{}\t{:.6}\t{}\t{:.6}",
            record.epoch,
            record.train_loss,
            cell(record.domain_loss),
            record.learning_rate
        ));
        for corpus in eval_corpora {
            let entry = record.per_corpus.iter().find(|(c, _, _)| c == corpus);
            let (ua, wa) = match entry {
                Some((_, ua, wa)) => (*ua, *wa),
                None => (None, None),
            };
            out.push_str(&format!("\t{}\t{}", cell(ua), cell(wa)));
        }
        out.push_str(&format!("\t{}\n", cell(record.mean_ua())));
    }
    out
}

/// Write a finished run. `base` records the provenance of an adaptation's
/// base run.
pub fn write_run_dir(
    root: &Path,
    config: &RunConfig,
    result: &RunResult,
    base: Option<&Path>,
) -> Result<()> {
    std::fs::create_dir_all(root)
        .with_context(|| format!("cannot create run directory {}", root.display()))?;
    std::fs::write(root.join(CONFIG_SNAPSHOT), config.to_text())?;
    std::fs::write(
        root.join(EPOCHS_TSV),
        epochs_tsv(&result.history, &config.training.eval_corpora),
    )?;
    save_params(root.join(CHECKPOINT_BIN), &result.checkpoint.params)?;
    let meta = ModelMeta {
        config: result.checkpoint.params.config,
        classes: config
            .training
            .class_set
            .classes()
            .iter()
            .map(|c| c.name().to_string())
            .collect(),
        feature_kind: config.training.feature_kind,
        epoch: result.checkpoint.epoch,
        score: result.checkpoint.score,
    };
    meta.save(root.join(CHECKPOINT_META))?;
    std::fs::write(root.join(REPORT_TSV), result.report.to_tsv())?;

    let mut provenance = format!(
        "toolkit = ser {}\nplatform = {}-{}\nregime = {}\n",
        env!("CARGO_PKG_VERSION"),
        std::env::consts::OS,
        std::env::consts::ARCH,
        config.training.regime.name(),
    );
    if let Some(base) = base {
        provenance.push_str(&format!("base_run = {}\n", base.display()));
    }
    std::fs::write(root.join(PROVENANCE), provenance)?;
    Ok(())
}

pub struct LoadedRun {
    pub config: RunConfig,
    pub params: ModelParameters,
    pub meta: ModelMeta,
}

pub fn load_run_dir(root: &Path) -> Result<LoadedRun> {
    if !root.join(CONFIG_SNAPSHOT).exists() {
        bail!("{} is not a run directory (no config snapshot)", root.display());
    }
    let config = RunConfig::parse_file(root.join(CONFIG_SNAPSHOT))?;
    let meta = ModelMeta::load(root.join(CHECKPOINT_META))?;
    let params = load_params(root.join(CHECKPOINT_BIN), &meta.config)?;
    Ok(LoadedRun {
        config,
        params,
        meta,
    })
}

/// Reconstruct the library-level checkpoint of a stored run.
pub fn checkpoint_of(run: &LoadedRun) -> Checkpoint {
    Checkpoint {
        params: run.params.clone(),
        config: run.config.training.clone(),
        epoch: run.meta.epoch,
        score: run.meta.score,
    }
}

/// File-name-safe form of an utterance id for the feature cache.
pub fn sanitize_id(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn cache_path(cache_dir: &Path, corpus: &CorpusId, utt_id: &str) -> PathBuf {
    cache_dir
        .join(corpus.as_str())
        .join(format!("{}.feat", sanitize_id(utt_id)))
}
