//! Implementations of the `ser` subcommands.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use ser_core::corpus::{
    generate_synthetic, load_audio, load_manifest, parse_synth_spec, wav, write_manifest,
    CorpusId, CorpusManifest, Utterance,
};
use ser_core::features::{cache, extract_features, FeatureConfig, FeatureKind};
use ser_core::training::{self, Dataset, RunConfig, TrainingError};

use crate::rundir::{self, cache_path, checkpoint_of, load_run_dir, write_run_dir};

/// Write generated corpora under `out`: WAVs in `<out>/<corpus>/`, one
/// manifest `<out>/<corpus>.tsv` per corpus. Returns (corpus, manifest
/// path) pairs.
pub fn write_corpora(
    corpora: &[CorpusManifest],
    out: &Path,
) -> Result<Vec<(CorpusId, PathBuf)>> {
    let mut entries = Vec::new();
    for manifest in corpora {
        let corpus_dir = out.join(manifest.corpus_id.as_str());
        std::fs::create_dir_all(&corpus_dir)
            .with_context(|| format!("cannot create {}", corpus_dir.display()))?;
        for utt in &manifest.utterances {
            let (samples, sr) = load_audio(utt)?;
            wav::write_wav(
                corpus_dir.join(format!("{}.wav", rundir::sanitize_id(&utt.id))),
                &samples,
                sr,
            )?;
        }
        let manifest_path = out.join(format!("{}.tsv", manifest.corpus_id));
        write_manifest(manifest, &manifest_path, |u| {
            format!("{}/{}.wav", manifest.corpus_id, rundir::sanitize_id(&u.id))
        })?;
        entries.push((manifest.corpus_id.clone(), manifest_path));
    }
    Ok(entries)
}

pub fn cmd_synth(spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let text = std::fs::read_to_string(spec_path)
        .with_context(|| format!("cannot read spec {}", spec_path.display()))?;
    let mut spec = parse_synth_spec(&text)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let corpora = generate_synthetic(&spec)?;
    std::fs::create_dir_all(out)?;
    let entries = write_corpora(&corpora, out)?;
    for (corpus, path) in &entries {
        let n = corpora
            .iter()
            .find(|m| &m.corpus_id == corpus)
            .map_or(0, |m| m.utterances.len());
        println!("{corpus}\t{n} utterances\t{}", path.display());
    }
    Ok(())
}

fn extract_feature_config(
    features: Option<&str>,
    config: Option<&Path>,
) -> Result<FeatureConfig> {
    let mut feature_config = match config {
        Some(path) => RunConfig::parse_file(path)?.features,
        None => FeatureConfig::default(),
    };
    if let Some(kind) = features {
        feature_config.kind = FeatureKind::from_name(kind)
            .ok_or_else(|| anyhow!("unknown feature kind `{kind}` (lmfb or mfcc)"))?;
    }
    Ok(feature_config)
}

/// True when the cache entry exists, is no older than the audio file, and
/// matches the requested feature kind and dimension.
fn cache_up_to_date(cache_file: &Path, utt: &Utterance, config: &FeatureConfig) -> bool {
    let Ok((_, d, kind)) = cache::read_cache_header(cache_file) else {
        return false;
    };
    if kind != config.kind || d as usize != config.dim() {
        return false;
    }
    let ser_core::corpus::AudioRef::Path(audio) = &utt.audio else {
        return false;
    };
    let newer_than_audio = match (
        std::fs::metadata(cache_file).and_then(|m| m.modified()),
        std::fs::metadata(audio).and_then(|m| m.modified()),
    ) {
        (Ok(cache_time), Ok(audio_time)) => cache_time >= audio_time,
        _ => false,
    };
    newer_than_audio
}

pub fn cmd_extract(
    manifests: &[PathBuf],
    out: &Path,
    features: Option<&str>,
    config: Option<&Path>,
) -> Result<()> {
    let feature_config = extract_feature_config(features, config)?;
    let mut failures: Vec<String> = Vec::new();
    for manifest_path in manifests {
        let manifest = load_manifest(manifest_path)?;
        let corpus_dir = out.join(manifest.corpus_id.as_str());
        std::fs::create_dir_all(&corpus_dir)?;
        let mut names = BTreeSet::new();
        let (mut written, mut skipped) = (0usize, 0usize);
        for utt in &manifest.utterances {
            let file = cache_path(out, &manifest.corpus_id, &utt.id);
            if !names.insert(file.clone()) {
                bail!(
                    "utterance ids `{}` collide after sanitization in corpus {}",
                    utt.id,
                    manifest.corpus_id
                );
            }
            if cache_up_to_date(&file, utt, &feature_config) {
                skipped += 1;
                continue;
            }
            match extract_features(utt, &feature_config) {
                Ok(seq) => {
                    cache::write_cache(&file, &seq)?;
                    written += 1;
                }
                Err(e) => {
                    eprintln!("{}: {}: {e}", manifest.corpus_id, utt.id);
                    failures.push(format!("{}/{}", manifest.corpus_id, utt.id));
                }
            }
        }
        println!(
            "{}\twrote {written}\tskipped {skipped}\tfailed {}",
            manifest.corpus_id,
            failures.len()
        );
    }
    if !failures.is_empty() {
        bail!("{} utterance(s) failed feature extraction", failures.len());
    }
    Ok(())
}

/// Load the config's manifests and assemble the dataset, from the feature
/// cache when configured (falling back to in-memory extraction, which
/// produces identical values).
pub fn build_dataset(config: &RunConfig) -> Result<Dataset> {
    if config.manifests.is_empty() {
        bail!("run config names no manifests (manifest.<CORPUS> = path)");
    }
    let mut manifests = Vec::new();
    for (id, path) in &config.manifests {
        let manifest =
            load_manifest(path).with_context(|| format!("manifest for corpus {id}"))?;
        if &manifest.corpus_id != id {
            bail!(
                "manifest {} declares corpus `{}` but the config maps it to `{id}`",
                path.display(),
                manifest.corpus_id
            );
        }
        manifests.push(manifest);
    }

    let class_set = config.training.class_set.clone();
    let include_neutral = config.training.include_implicit_neutral;
    let dataset = match &config.cache_dir {
        Some(dir) => {
            let features = config.features.clone();
            let dir = dir.clone();
            Dataset::prepare(
                &manifests,
                &class_set,
                include_neutral,
                &mut |utt: &Utterance| {
                    let file = cache_path(&dir, &utt.corpus_id, &utt.id);
                    match cache::read_cache(&file) {
                        Ok(seq) => {
                            if seq.kind != features.kind {
                                return Err(TrainingError::Config(format!(
                                    "cache entry {} holds {} features, config wants {}",
                                    file.display(),
                                    seq.kind.name(),
                                    features.kind.name()
                                )));
                            }
                            Ok(seq.frames)
                        }
                        Err(_) => Ok(extract_features(utt, &features)?.frames),
                    }
                },
            )?
        }
        None => Dataset::extract(&manifests, &class_set, include_neutral, &config.features)?,
    };
    Ok(dataset)
}

pub fn cmd_train(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut config = RunConfig::parse_file(config_path)?;
    if let Some(seed) = seed {
        config.training.seed = seed;
    }
    // Reject bad regime/corpus combinations before touching any data.
    config.training.validate()?;
    let dataset = build_dataset(&config)?;
    let result = training::run(&config.training, &dataset)?;
    write_run_dir(out, &config, &result, None)?;
    println!(
        "{}: best epoch {} (mean UA {:.6}) -> {}",
        config.training.regime.name(),
        result.checkpoint.epoch,
        result.checkpoint.score,
        out.display()
    );
    Ok(())
}

pub fn cmd_adapt(base: &Path, config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let base_run = load_run_dir(base)?;
    let mut config = RunConfig::parse_file(config_path)?;
    if let Some(seed) = seed {
        config.training.seed = seed;
    }
    config.training.validate()?;
    let dataset = build_dataset(&config)?;
    let base_checkpoint = checkpoint_of(&base_run);
    let result = training::adapt(&base_checkpoint, &config.training, &dataset)?;
    write_run_dir(out, &config, &result, Some(base))?;
    println!(
        "ADAPT from {}: best epoch {} (mean UA {:.6}) -> {}",
        base.display(),
        result.checkpoint.epoch,
        result.checkpoint.score,
        out.display()
    );
    Ok(())
}

pub fn cmd_eval(
    run: &Path,
    manifest_overrides: &[PathBuf],
    iem4_view: bool,
    out: Option<&Path>,
) -> Result<()> {
    let loaded = load_run_dir(run)?;
    let mut config = loaded.config.clone();

    // The checkpoint's class list is authoritative; a mismatched request is
    // an error, not a silent re-interpretation.
    let config_classes: Vec<String> = config
        .training
        .class_set
        .classes()
        .iter()
        .map(|c| c.name().to_string())
        .collect();
    if config_classes != loaded.meta.classes {
        bail!(
            "class set mismatch: checkpoint was trained on [{}], the run config requests [{}]",
            loaded.meta.classes.join(","),
            config_classes.join(",")
        );
    }

    let eval_corpora: Vec<CorpusId> = if manifest_overrides.is_empty() {
        config.training.eval_corpora.clone()
    } else {
        let mut ids = Vec::new();
        let mut entries = Vec::new();
        for path in manifest_overrides {
            let manifest = load_manifest(path)?;
            ids.push(manifest.corpus_id.clone());
            entries.push((manifest.corpus_id.clone(), path.clone()));
        }
        config.manifests = entries;
        config.training.eval_corpora = ids.clone();
        ids
    };

    let dataset = build_dataset(&config)?;
    let provenance = format!(
        "regime={} epoch={} score={:.6}",
        config.training.regime.name(),
        loaded.meta.epoch,
        loaded.meta.score
    );
    let mut report = training::evaluate(&loaded.params, &dataset, &eval_corpora, provenance)?;

    if iem4_view {
        for id in &eval_corpora {
            let corpus = dataset
                .corpus(id)
                .ok_or_else(|| anyhow!("corpus {id} missing from dataset"))?;
            if corpus.eval.is_empty() {
                continue;
            }
            let mut view =
                training::evaluate_iem4_view(&loaded.params, corpus, &config.training.class_set)?;
            view.corpus = CorpusId::new(format!("{id}.iem4"));
            report.corpora.push(view);
        }
    }

    let tsv = report.to_tsv();
    print!("{tsv}");
    if let Some(path) = out {
        std::fs::write(path, &tsv)?;
    }
    Ok(())
}
