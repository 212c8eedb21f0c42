//! The desk-scale regime grid: synthetic corpora in, table-shaped
//! summaries out.
//!
//! Runs 4 cross-corpus models, one multi-domain model, one DAT model, 4
//! out-of-domain models and 4 adaptations on generated domain-shifted
//! corpora, then writes three summaries: `table4.tsv` (per-corpus UA/WA of
//! CC/MD/DAT), `table5.tsv` (per-emotion UA/WA of CC/DAT), `table6.tsv`
//! (OOD and adaptation on each held-out corpus).

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use ser_core::corpus::{generate_synthetic, CorpusId, SynthSpec};
use ser_core::metrics::MetricsReport;
use ser_core::seed;
use ser_core::training::{self, ModelShape, Regime, RunConfig, RunResult, TrainingConfig};

use crate::commands::{build_dataset, write_corpora};
use crate::rundir::write_run_dir;

const GRID_SALT: u64 = 0x4752_4944;

struct Grid {
    corpora: Vec<CorpusId>,
    cc: Vec<RunResult>,
    md: RunResult,
    dat: RunResult,
    ood: Vec<RunResult>,
    adapted: Vec<RunResult>,
}

#[allow(clippy::too_many_arguments)]
pub fn reproduce_all(
    out: &Path,
    master_seed: u64,
    epochs: usize,
    speakers: usize,
    segments: usize,
    hidden: usize,
    lr: f64,
) -> Result<()> {
    std::fs::create_dir_all(out)?;

    // Synthetic corpora on disk, exactly as `ser synth` would write them.
    let mut spec = SynthSpec::desk_default(seed::derive(&[master_seed, GRID_SALT, 0]));
    spec.n_speakers = speakers;
    spec.segments_per_emotion = segments;
    let corpora_manifests = generate_synthetic(&spec)?;
    let corpus_dir = out.join("corpus");
    std::fs::create_dir_all(&corpus_dir)?;
    let manifest_entries = write_corpora(&corpora_manifests, &corpus_dir)?;
    let corpus_ids: Vec<CorpusId> = manifest_entries.iter().map(|(c, _)| c.clone()).collect();
    println!(
        "corpus: {} domains x {} utterances",
        corpus_ids.len(),
        corpora_manifests[0].utterances.len()
    );

    let base_config = |regime: Regime, run_seed: u64| -> RunConfig {
        let mut training = TrainingConfig::new(regime, run_seed);
        training.class_set = ser_core::corpus::ClassSet::big_six();
        training.epochs = epochs;
        training.learning_rate = lr;
        training.eval_corpora = corpus_ids.clone();
        training.model = ModelShape {
            hidden,
            layers: 2,
            attn_bottleneck: (hidden / 2).max(4),
        };
        RunConfig {
            training,
            features: ser_core::features::FeatureConfig::default(),
            manifests: manifest_entries.clone(),
            cache_dir: None,
        }
    };

    let runs_dir = out.join("runs");
    let run_one = |config: RunConfig, dir_name: &str| -> Result<RunResult> {
        config.training.validate()?;
        let dataset = build_dataset(&config)?;
        let result = training::run(&config.training, &dataset)?;
        write_run_dir(&runs_dir.join(dir_name), &config, &result, None)?;
        println!(
            "{dir_name}: best epoch {} mean UA {:.4}",
            result.checkpoint.epoch, result.checkpoint.score
        );
        Ok(result)
    };

    // Cross-corpus: one model per domain.
    let mut cc = Vec::new();
    for (i, corpus) in corpus_ids.iter().enumerate() {
        let mut config = base_config(
            Regime::CrossCorpus,
            seed::derive(&[master_seed, GRID_SALT, 1, i as u64]),
        );
        config.training.train_corpora = vec![corpus.clone()];
        cc.push(run_one(config, &format!("cc_{corpus}"))?);
    }

    // Multi-domain over all corpora.
    let mut md_config = base_config(Regime::MultiDomain, seed::derive(&[master_seed, GRID_SALT, 2]));
    md_config.training.train_corpora = corpus_ids.clone();
    let md = run_one(md_config, "md")?;

    // DAT over all corpora at the tuned lambda.
    let mut dat_config = base_config(Regime::Dat, seed::derive(&[master_seed, GRID_SALT, 3]));
    dat_config.training.train_corpora = corpus_ids.clone();
    let dat = run_one(dat_config, "dat")?;

    // OOD (each domain held out) and adaptation onto the held-out domain.
    let mut ood = Vec::new();
    let mut adapted = Vec::new();
    for (i, held_out) in corpus_ids.iter().enumerate() {
        let mut config = base_config(
            Regime::OutOfDomain,
            seed::derive(&[master_seed, GRID_SALT, 4, i as u64]),
        );
        config.training.train_corpora = corpus_ids
            .iter()
            .filter(|c| *c != held_out)
            .cloned()
            .collect();
        config.training.adapt_corpus = Some(held_out.clone());
        config.training.validate()?;
        let dataset = build_dataset(&config)?;
        let ood_result = training::run(&config.training, &dataset)?;
        write_run_dir(&runs_dir.join(format!("ood_{held_out}")), &config, &ood_result, None)?;
        println!(
            "ood_{held_out}: best epoch {} mean UA {:.4}",
            ood_result.checkpoint.epoch, ood_result.checkpoint.score
        );

        let mut adapt_config = base_config(
            Regime::Adapt,
            seed::derive(&[master_seed, GRID_SALT, 5, i as u64]),
        );
        adapt_config.training.train_corpora = vec![held_out.clone()];
        adapt_config.training.adapt_corpus = Some(held_out.clone());
        adapt_config.training.validate()?;
        let adapt_result =
            training::adapt(&ood_result.checkpoint, &adapt_config.training, &dataset)?;
        write_run_dir(
            &runs_dir.join(format!("adapt_{held_out}")),
            &adapt_config,
            &adapt_result,
            Some(&runs_dir.join(format!("ood_{held_out}"))),
        )?;
        println!(
            "adapt_{held_out}: best epoch {} mean UA {:.4}",
            adapt_result.checkpoint.epoch, adapt_result.checkpoint.score
        );
        ood.push(ood_result);
        adapted.push(adapt_result);
    }

    let grid = Grid {
        corpora: corpus_ids,
        cc,
        md,
        dat,
        ood,
        adapted,
    };
    write_tables(out, &grid)?;
    println!("tables: {}", out.display());
    Ok(())
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.1}", 100.0 * x))
}

fn corpus_cells(report: &MetricsReport, corpora: &[CorpusId]) -> (Vec<String>, Vec<String>) {
    let ua = corpora
        .iter()
        .map(|c| cell(report.find(c).and_then(|r| r.ua)))
        .collect();
    let wa = corpora
        .iter()
        .map(|c| cell(report.find(c).and_then(|r| r.wa)))
        .collect();
    (ua, wa)
}

/// Mean per-emotion UA/WA over the corpora where the cell is defined.
fn emotion_cells(report: &MetricsReport) -> (Vec<String>, Vec<String>) {
    let classes = ser_core::corpus::EmotionClass::BIG_SIX;
    let mut ua = Vec::new();
    let mut wa = Vec::new();
    for class in classes {
        let mut uas = Vec::new();
        let mut was = Vec::new();
        for corpus in &report.corpora {
            for per_class in &corpus.per_class {
                if per_class.class == class {
                    if let Some(v) = per_class.ua {
                        uas.push(v);
                    }
                    if let Some(v) = per_class.wa {
                        was.push(v);
                    }
                }
            }
        }
        let mean = |v: &[f64]| {
            if v.is_empty() {
                None
            } else {
                Some(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        ua.push(cell(mean(&uas)));
        wa.push(cell(mean(&was)));
    }
    (ua, wa)
}

fn write_tables(out: &Path, grid: &Grid) -> Result<()> {
    let corpora = &grid.corpora;
    let header: Vec<String> = corpora.iter().map(|c| c.to_string()).collect();

    // Table 4 shape: experiment rows, per-corpus UA then WA columns.
    let mut t4 = format!(
        "# experiment\ttrain_data\t{}\t{}\n",
        header
            .iter()
            .map(|c| format!("ua.{c}"))
            .collect::<Vec<_>>()
            .join("\t"),
        header
            .iter()
            .map(|c| format!("wa.{c}"))
            .collect::<Vec<_>>()
            .join("\t"),
    );
    for (corpus, result) in corpora.iter().zip(&grid.cc) {
        let (ua, wa) = corpus_cells(&result.report, corpora);
        t4.push_str(&format!("CC\t{corpus}\t{}\t{}\n", ua.join("\t"), wa.join("\t")));
    }
    let (ua, wa) = corpus_cells(&grid.md.report, corpora);
    t4.push_str(&format!("MD\tall\t{}\t{}\n", ua.join("\t"), wa.join("\t")));
    let (ua, wa) = corpus_cells(&grid.dat.report, corpora);
    t4.push_str(&format!("DAT\tall\t{}\t{}\n", ua.join("\t"), wa.join("\t")));
    write(out.join("table4.tsv"), &t4)?;

    // Table 5 shape: per-emotion UA then WA columns for CC and DAT models.
    let emotion_names: Vec<&str> = ser_core::corpus::EmotionClass::BIG_SIX
        .iter()
        .map(|c| c.name())
        .collect();
    let mut t5 = format!(
        "# experiment\ttrain_data\t{}\t{}\n",
        emotion_names
            .iter()
            .map(|e| format!("ua.{e}"))
            .collect::<Vec<_>>()
            .join("\t"),
        emotion_names
            .iter()
            .map(|e| format!("wa.{e}"))
            .collect::<Vec<_>>()
            .join("\t"),
    );
    for (corpus, result) in corpora.iter().zip(&grid.cc) {
        let (ua, wa) = emotion_cells(&result.report);
        t5.push_str(&format!("CC\t{corpus}\t{}\t{}\n", ua.join("\t"), wa.join("\t")));
    }
    let (ua, wa) = emotion_cells(&grid.dat.report);
    t5.push_str(&format!("DAT\tall\t{}\t{}\n", ua.join("\t"), wa.join("\t")));
    write(out.join("table5.tsv"), &t5)?;

    // Table 6 shape: each column is the held-out corpus; the OOD row shows
    // the model that excluded it, the adaptation row the adapted model.
    let mut t6 = format!(
        "# experiment\ttrain_data\t{}\t{}\n",
        header
            .iter()
            .map(|c| format!("ua.{c}"))
            .collect::<Vec<_>>()
            .join("\t"),
        header
            .iter()
            .map(|c| format!("wa.{c}"))
            .collect::<Vec<_>>()
            .join("\t"),
    );
    let held_out_cells = |results: &[RunResult]| -> (Vec<String>, Vec<String>) {
        let ua = corpora
            .iter()
            .zip(results)
            .map(|(c, r)| cell(r.report.find(c).and_then(|x| x.ua)))
            .collect();
        let wa = corpora
            .iter()
            .zip(results)
            .map(|(c, r)| cell(r.report.find(c).and_then(|x| x.wa)))
            .collect();
        (ua, wa)
    };
    let (ua, wa) = held_out_cells(&grid.ood);
    t6.push_str(&format!(
        "OOD\tthree, mismatched\t{}\t{}\n",
        ua.join("\t"),
        wa.join("\t")
    ));
    let (ua, wa) = held_out_cells(&grid.adapted);
    t6.push_str(&format!(
        "+adaptation\tmatched\t{}\t{}\n",
        ua.join("\t"),
        wa.join("\t")
    ));
    write(out.join("table6.tsv"), &t6)?;
    Ok(())
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
}
