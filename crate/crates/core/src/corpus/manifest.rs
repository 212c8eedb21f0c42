//! The line-oriented manifest format.
//!
//! UTF-8, one record per line, tab-separated:
//!
//! ```text
//! id<TAB>corpus<TAB>speaker<TAB>split<TAB>audio_path<TAB>label:intensity[,label:intensity...]
//! ```
//!
//! Lines starting with `#` are comments; the optional directive
//! `#! scheme=<single_label|multi_label_binary|intensity_0_to_3>` declares
//! how intensities are to be read (default `single_label`). An empty label
//! field means no annotated emotion (implicit neutral). Audio paths are
//! resolved relative to the manifest's directory.

use std::path::{Path, PathBuf};

use super::{
    is_known_source_label, AudioRef, CorpusError, CorpusId, CorpusManifest, Label, LabelScheme,
    Split, Utterance,
};

/// Parse and validate a manifest file.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<CorpusManifest, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let fail = |line: usize, detail: String| CorpusError::Format {
        path: path.to_path_buf(),
        line,
        detail,
    };

    let mut scheme = LabelScheme::SingleLabel;
    let mut corpus_id: Option<CorpusId> = None;
    let mut utterances = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#!") {
            if let Some(value) = rest.trim().strip_prefix("scheme=") {
                scheme = LabelScheme::from_name(value.trim())
                    .ok_or_else(|| fail(line_no, format!("unknown label scheme `{value}`")))?;
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }

        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(fail(
                line_no,
                format!("expected 6 tab-separated fields, got {}", fields.len()),
            ));
        }
        let [id, corpus, speaker, split, audio_path, labels_field] =
            [fields[0], fields[1], fields[2], fields[3], fields[4], fields[5]];
        if id.is_empty() || corpus.is_empty() || speaker.is_empty() {
            return Err(fail(line_no, "empty id/corpus/speaker field".into()));
        }
        let split = Split::from_name(split)
            .ok_or_else(|| fail(line_no, format!("unknown split `{split}`")))?;
        let corpus = CorpusId::new(corpus);
        match &corpus_id {
            None => corpus_id = Some(corpus.clone()),
            Some(existing) if *existing != corpus => {
                return Err(fail(
                    line_no,
                    format!("corpus `{corpus}` differs from `{existing}`"),
                ));
            }
            Some(_) => {}
        }

        let mut labels = Vec::new();
        if !labels_field.is_empty() {
            for entry in labels_field.split(',') {
                let (name, value) = entry.split_once(':').ok_or_else(|| {
                    fail(line_no, format!("label entry `{entry}` is not name:intensity"))
                })?;
                if !is_known_source_label(name) {
                    return Err(fail(line_no, format!("unknown label `{name}`")));
                }
                let intensity: u8 = value
                    .parse()
                    .ok()
                    .filter(|v| *v <= 3)
                    .ok_or_else(|| {
                        fail(line_no, format!("intensity `{value}` outside 0..=3"))
                    })?;
                labels.push(Label::new(name, intensity));
            }
        }

        utterances.push(Utterance {
            id: id.to_string(),
            corpus_id: corpus,
            speaker_id: speaker.to_string(),
            split,
            labels,
            audio: AudioRef::Path(resolve(base, audio_path)),
            sample_rate: None,
        });
    }

    let corpus_id = corpus_id
        .ok_or_else(|| CorpusError::Validation(format!("{}: no records", path.display())))?;
    let manifest = CorpusManifest {
        corpus_id,
        utterances,
        label_scheme: scheme,
    };
    manifest.validate()?;
    Ok(manifest)
}

fn resolve(base: &Path, audio_path: &str) -> PathBuf {
    let p = Path::new(audio_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Serialize a manifest. Inline audio must have been persisted first;
/// `audio_path_of` supplies the path written for each utterance.
pub fn write_manifest(
    manifest: &CorpusManifest,
    path: impl AsRef<Path>,
    mut audio_path_of: impl FnMut(&Utterance) -> String,
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&format!("#! scheme={}\n", manifest.label_scheme.name()));
    for utt in &manifest.utterances {
        let labels = utt
            .labels
            .iter()
            .map(|l| format!("{}:{}", l.name, l.intensity))
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            utt.id,
            utt.corpus_id,
            utt.speaker_id,
            utt.split.name(),
            audio_path_of(utt),
            labels
        ));
    }
    std::fs::write(path, out).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}
