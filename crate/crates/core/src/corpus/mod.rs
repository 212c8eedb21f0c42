//! Corpus ingestion and normalization.
//!
//! Manifests list utterances with speaker, split, audio reference and raw
//! labels. Heterogeneous label schemes (single-label, multi-label 0/1,
//! intensities 0..3) are normalized onto a common class set by
//! [`binarize_labels`] and [`map_labels`]; [`split_corpus`] assigns
//! speaker-disjoint train/test splits; [`synth`] generates domain-shifted
//! synthetic corpora for desk-scale experiments.

mod manifest;
pub mod synth;
pub mod wav;

pub use manifest::{load_manifest, write_manifest};
pub use synth::{generate_synthetic, parse_synth_spec, DomainShift, EmotionPrototype, SynthSpec};

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {detail}")]
    Format {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("invalid manifest: {0}")]
    Validation(String),
    #[error("unknown source label `{label}` on utterance `{utterance}`")]
    UnknownLabel { label: String, utterance: String },
    #[error("label intensity {intensity} out of range 0..=3 on utterance `{utterance}`")]
    InvalidIntensity { intensity: u32, utterance: String },
    #[error("split rule references unknown speaker `{0}`")]
    UnknownSpeaker(String),
    #[error("audio buffer is empty")]
    EmptyBuffer,
    #[error("every frame is below the trim threshold; nothing left after trimming")]
    EmptyAfterTrim,
    #[error("bad audio file {path}: {detail}")]
    AudioFormat { path: PathBuf, detail: String },
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
}

/// The seven canonical emotion classes: Ekman's big six plus neutral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EmotionClass {
    Happy,
    Sad,
    Anger,
    Surprise,
    Disgust,
    Fear,
    Neutral,
}

impl EmotionClass {
    pub const ALL: [EmotionClass; 7] = [
        EmotionClass::Happy,
        EmotionClass::Sad,
        EmotionClass::Anger,
        EmotionClass::Surprise,
        EmotionClass::Disgust,
        EmotionClass::Fear,
        EmotionClass::Neutral,
    ];

    pub const BIG_SIX: [EmotionClass; 6] = [
        EmotionClass::Happy,
        EmotionClass::Sad,
        EmotionClass::Anger,
        EmotionClass::Surprise,
        EmotionClass::Disgust,
        EmotionClass::Fear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EmotionClass::Happy => "happy",
            EmotionClass::Sad => "sad",
            EmotionClass::Anger => "anger",
            EmotionClass::Surprise => "surprise",
            EmotionClass::Disgust => "disgust",
            EmotionClass::Fear => "fear",
            EmotionClass::Neutral => "neutral",
        }
    }

    pub fn from_name(name: &str) -> Option<EmotionClass> {
        EmotionClass::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl std::fmt::Display for EmotionClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A canonical emotion label after normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmotionLabel {
    pub class: EmotionClass,
    pub present: bool,
}

/// Source labels that only exist in raw corpora and are resolved by
/// [`map_labels`]: `excitement` merges into `happy` under the four-class
/// view, the rest are dropped.
const NON_TARGET_SOURCE_LABELS: [&str; 4] = ["frustration", "excitement", "other", "calm"];

pub(crate) fn is_known_source_label(name: &str) -> bool {
    EmotionClass::from_name(name).is_some() || NON_TARGET_SOURCE_LABELS.contains(&name)
}

/// An ordered set of target classes plus the source-label merge rule that
/// applies when mapping onto it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassSet {
    classes: Vec<EmotionClass>,
    merge_excitement_into_happy: bool,
}

impl ClassSet {
    pub fn big_six() -> Self {
        ClassSet {
            classes: EmotionClass::BIG_SIX.to_vec(),
            merge_excitement_into_happy: false,
        }
    }

    pub fn big_six_with_neutral() -> Self {
        ClassSet {
            classes: EmotionClass::ALL.to_vec(),
            merge_excitement_into_happy: false,
        }
    }

    /// The four-class evaluation view: happy (absorbing excitement), sad,
    /// anger, neutral.
    pub fn iem4() -> Self {
        ClassSet {
            classes: vec![
                EmotionClass::Happy,
                EmotionClass::Sad,
                EmotionClass::Anger,
                EmotionClass::Neutral,
            ],
            merge_excitement_into_happy: true,
        }
    }

    pub fn custom(classes: Vec<EmotionClass>) -> Self {
        ClassSet {
            classes,
            merge_excitement_into_happy: false,
        }
    }

    /// Parse `big_six`, `big_six_neutral`, `iem4`, or a comma-separated
    /// class list.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        match text.trim() {
            "big_six" => Ok(Self::big_six()),
            "big_six_neutral" => Ok(Self::big_six_with_neutral()),
            "iem4" => Ok(Self::iem4()),
            list => {
                let mut classes = Vec::new();
                for part in list.split(',') {
                    let name = part.trim();
                    let class = EmotionClass::from_name(name).ok_or_else(|| {
                        CorpusError::Validation(format!("unknown class `{name}` in class set"))
                    })?;
                    if classes.contains(&class) {
                        return Err(CorpusError::Validation(format!(
                            "duplicate class `{name}` in class set"
                        )));
                    }
                    classes.push(class);
                }
                if classes.is_empty() {
                    return Err(CorpusError::Validation("empty class set".into()));
                }
                Ok(Self::custom(classes))
            }
        }
    }

    pub fn classes(&self) -> &[EmotionClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, class: EmotionClass) -> Option<usize> {
        self.classes.iter().position(|c| *c == class)
    }

    pub fn contains(&self, class: EmotionClass) -> bool {
        self.index_of(class).is_some()
    }

    pub fn merges_excitement(&self) -> bool {
        self.merge_excitement_into_happy
    }

    /// Canonical text form (round-trips through [`ClassSet::parse`]).
    pub fn spec_string(&self) -> String {
        if *self == Self::big_six() {
            "big_six".into()
        } else if *self == Self::big_six_with_neutral() {
            "big_six_neutral".into()
        } else if *self == Self::iem4() {
            "iem4".into()
        } else {
            self.classes
                .iter()
                .map(|c| c.name())
                .collect::<Vec<_>>()
                .join(",")
        }
    }
}

/// Identifier of a corpus / domain (`ENT`, `RAV`, `IEM`, `MOS`, `SYNTH_A`, ...).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CorpusId(String);

impl CorpusId {
    pub fn new(id: impl Into<String>) -> Self {
        CorpusId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for CorpusId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<&str> for CorpusId {
    fn from(s: &str) -> Self {
        CorpusId::new(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn from_name(name: &str) -> Option<Split> {
        match name {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// A raw label entry as it appears in a manifest: a source-label name and
/// an intensity in 0..=3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Label {
    pub name: String,
    pub intensity: u8,
}

impl Label {
    pub fn new(name: impl Into<String>, intensity: u8) -> Self {
        Label {
            name: name.into(),
            intensity,
        }
    }

    pub fn is_present(&self) -> bool {
        self.intensity > 0
    }
}

/// Where an utterance's audio lives.
#[derive(Clone, Debug)]
pub enum AudioRef {
    Path(PathBuf),
    /// Samples held in memory (synthetic corpora), normalized to [-1, 1].
    Inline(Arc<Vec<f64>>),
}

#[derive(Clone, Debug)]
pub struct Utterance {
    pub id: String,
    pub corpus_id: CorpusId,
    pub speaker_id: String,
    pub split: Split,
    pub labels: Vec<Label>,
    pub audio: AudioRef,
    /// Known for inline audio; filled from the file header once loaded.
    pub sample_rate: Option<u32>,
}

impl Utterance {
    /// No label has a positive intensity: the implicit-neutral case.
    pub fn is_neutral_by_absence(&self) -> bool {
        !self.labels.iter().any(Label::is_present)
    }

    /// Canonical classes with positive intensity, in class-set order.
    /// Labels must already be mapped onto `set` (see [`map_labels`]).
    pub fn present_classes(&self, set: &ClassSet) -> Vec<EmotionClass> {
        set.classes()
            .iter()
            .copied()
            .filter(|c| {
                self.labels
                    .iter()
                    .any(|l| l.is_present() && l.name == c.name())
            })
            .collect()
    }
}

/// How the raw label intensities of a manifest are to be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelScheme {
    /// Exactly one label per utterance, intensity 1.
    SingleLabel,
    /// Per-class presence flags in {0, 1}.
    MultiLabelBinary,
    /// Per-class intensities in 0..=3 (binarize before training).
    Intensity0To3,
}

impl LabelScheme {
    pub fn name(self) -> &'static str {
        match self {
            LabelScheme::SingleLabel => "single_label",
            LabelScheme::MultiLabelBinary => "multi_label_binary",
            LabelScheme::Intensity0To3 => "intensity_0_to_3",
        }
    }

    pub fn from_name(name: &str) -> Option<LabelScheme> {
        match name {
            "single_label" => Some(LabelScheme::SingleLabel),
            "multi_label_binary" => Some(LabelScheme::MultiLabelBinary),
            "intensity_0_to_3" => Some(LabelScheme::Intensity0To3),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorpusManifest {
    pub corpus_id: CorpusId,
    pub utterances: Vec<Utterance>,
    pub label_scheme: LabelScheme,
}

impl CorpusManifest {
    /// Check the manifest invariants: unique ids, one corpus id, and
    /// speaker-disjoint train/test sets.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut ids = BTreeSet::new();
        let mut train_speakers = BTreeSet::new();
        let mut test_speakers = BTreeSet::new();
        for utt in &self.utterances {
            if !ids.insert(utt.id.as_str()) {
                return Err(CorpusError::Validation(format!(
                    "duplicate utterance id `{}`",
                    utt.id
                )));
            }
            if utt.corpus_id != self.corpus_id {
                return Err(CorpusError::Validation(format!(
                    "utterance `{}` belongs to corpus `{}`, manifest is `{}`",
                    utt.id, utt.corpus_id, self.corpus_id
                )));
            }
            match utt.split {
                Split::Train => train_speakers.insert(utt.speaker_id.as_str()),
                Split::Test => test_speakers.insert(utt.speaker_id.as_str()),
            };
        }
        if let Some(shared) = train_speakers.intersection(&test_speakers).next() {
            return Err(CorpusError::Validation(format!(
                "speaker `{shared}` appears in both train and test splits"
            )));
        }
        Ok(())
    }

    /// Distinct speakers in first-appearance order.
    pub fn speakers(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for utt in &self.utterances {
            if seen.insert(utt.speaker_id.as_str()) {
                out.push(utt.speaker_id.as_str());
            }
        }
        out
    }

    pub fn split_utterances(&self, split: Split) -> impl Iterator<Item = &Utterance> {
        self.utterances.iter().filter(move |u| u.split == split)
    }
}

/// [`map_labels`] on a bare label list; `context_id` names the utterance
/// in errors.
pub fn map_label_list(
    labels: &[Label],
    target: &ClassSet,
    context_id: &str,
) -> Result<Vec<Label>, CorpusError> {
    let mut intensity: BTreeMap<usize, u8> = BTreeMap::new();
    for label in labels {
        if !is_known_source_label(&label.name) {
            return Err(CorpusError::UnknownLabel {
                label: label.name.clone(),
                utterance: context_id.to_string(),
            });
        }
        let class = match EmotionClass::from_name(&label.name) {
            Some(c) => Some(c),
            None if label.name == "excitement" && target.merges_excitement() => {
                Some(EmotionClass::Happy)
            }
            None => None,
        };
        if let Some(idx) = class.and_then(|c| target.index_of(c)) {
            let slot = intensity.entry(idx).or_insert(0);
            *slot = (*slot).max(label.intensity);
        }
    }
    Ok(intensity
        .into_iter()
        .map(|(idx, v)| Label::new(target.classes()[idx].name(), v))
        .collect())
}

/// Restrict an utterance's labels to `target`, applying the source-label
/// rules: `excitement` becomes `happy` when the target set merges it,
/// non-target source labels (`frustration`, `other`, `calm`) are dropped,
/// and canonical classes outside the target set are dropped. Duplicate
/// classes after merging keep the maximum intensity. Idempotent.
pub fn map_labels(utterance: &Utterance, target: &ClassSet) -> Result<Utterance, CorpusError> {
    let labels = map_label_list(&utterance.labels, target, &utterance.id)?;
    Ok(Utterance {
        labels,
        ..utterance.clone()
    })
}

/// Map every utterance of a manifest onto `target`.
pub fn map_labels_manifest(
    manifest: &CorpusManifest,
    target: &ClassSet,
) -> Result<CorpusManifest, CorpusError> {
    let utterances = manifest
        .utterances
        .iter()
        .map(|u| map_labels(u, target))
        .collect::<Result<_, _>>()?;
    Ok(CorpusManifest {
        corpus_id: manifest.corpus_id.clone(),
        utterances,
        label_scheme: manifest.label_scheme,
    })
}

/// Threshold every intensity to presence: positive values become 1, zero
/// stays 0. Intensities above 3 are rejected.
pub fn binarize_labels(utterance: &Utterance) -> Result<Utterance, CorpusError> {
    let mut labels = Vec::with_capacity(utterance.labels.len());
    for label in &utterance.labels {
        if label.intensity > 3 {
            return Err(CorpusError::InvalidIntensity {
                intensity: label.intensity as u32,
                utterance: utterance.id.clone(),
            });
        }
        labels.push(Label::new(
            label.name.clone(),
            if label.intensity > 0 { 1 } else { 0 },
        ));
    }
    Ok(Utterance {
        labels,
        ..utterance.clone()
    })
}

/// Speaker-level split assignment rules. Speaker order is the order of
/// first appearance in the manifest.
#[derive(Clone, Debug)]
pub enum SplitRule {
    /// Every utterance goes to the train split.
    AllTrain,
    /// First `n` speakers train, the rest test.
    FirstNTrain(usize),
    /// The named speakers test, all others train.
    TestSpeakers(Vec<String>),
    /// First `round(fraction * n_speakers)` speakers train, the rest test.
    TrainFraction(f64),
}

/// Reassign every utterance's split according to `rule`. The result always
/// satisfies speaker disjointness because assignment is by speaker.
pub fn split_corpus(
    manifest: &CorpusManifest,
    rule: &SplitRule,
) -> Result<CorpusManifest, CorpusError> {
    let speakers: Vec<String> = manifest.speakers().iter().map(|s| s.to_string()).collect();
    let test_set: BTreeSet<&str> = match rule {
        SplitRule::AllTrain => BTreeSet::new(),
        SplitRule::FirstNTrain(n) => speakers.iter().skip(*n).map(String::as_str).collect(),
        SplitRule::TestSpeakers(named) => {
            for name in named {
                if !speakers.iter().any(|s| s == name) {
                    return Err(CorpusError::UnknownSpeaker(name.clone()));
                }
            }
            named.iter().map(String::as_str).collect()
        }
        SplitRule::TrainFraction(fraction) => {
            if !(0.0..=1.0).contains(fraction) {
                return Err(CorpusError::Validation(format!(
                    "train fraction {fraction} outside [0, 1]"
                )));
            }
            let n_train = (speakers.len() as f64 * fraction).round() as usize;
            speakers.iter().skip(n_train).map(String::as_str).collect()
        }
    };
    let utterances = manifest
        .utterances
        .iter()
        .map(|u| Utterance {
            split: if test_set.contains(u.speaker_id.as_str()) {
                Split::Test
            } else {
                Split::Train
            },
            ..u.clone()
        })
        .collect();
    let out = CorpusManifest {
        corpus_id: manifest.corpus_id.clone(),
        utterances,
        label_scheme: manifest.label_scheme,
    };
    out.validate()?;
    Ok(out)
}

/// Silence-trimming parameters: frame length and the energy floor in dB
/// relative to the loudest frame.
#[derive(Clone, Copy, Debug)]
pub struct TrimConfig {
    pub threshold_db: f64,
    pub frame_s: f64,
}

impl Default for TrimConfig {
    fn default() -> Self {
        TrimConfig {
            threshold_db: -35.0,
            frame_s: 0.025,
        }
    }
}

/// Drop leading and trailing frames whose RMS energy falls below
/// `threshold_db` relative to the peak frame; interior samples are left
/// untouched. Frame granularity, so boundaries move by at most one frame.
pub fn trim_silence(
    samples: &[f64],
    sample_rate: u32,
    config: &TrimConfig,
) -> Result<Vec<f64>, CorpusError> {
    if samples.is_empty() {
        return Err(CorpusError::EmptyBuffer);
    }
    let frame_len = ((config.frame_s * sample_rate as f64).round() as usize).max(1);
    let rms: Vec<f64> = samples
        .chunks(frame_len)
        .map(|c| (c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64).sqrt())
        .collect();
    let peak = rms.iter().cloned().fold(0.0, f64::max);
    let threshold = peak * 10f64.powf(config.threshold_db / 20.0);
    if peak <= 0.0 {
        return Err(CorpusError::EmptyAfterTrim);
    }
    let first = match rms.iter().position(|&e| e >= threshold) {
        Some(i) => i,
        None => return Err(CorpusError::EmptyAfterTrim),
    };
    let last = rms.iter().rposition(|&e| e >= threshold).unwrap();
    let start = first * frame_len;
    let end = ((last + 1) * frame_len).min(samples.len());
    Ok(samples[start..end].to_vec())
}

/// Load an utterance's audio as normalized `f64` samples plus sample rate.
pub fn load_audio(utterance: &Utterance) -> Result<(Vec<f64>, u32), CorpusError> {
    match &utterance.audio {
        AudioRef::Inline(samples) => {
            let sr = utterance.sample_rate.ok_or_else(|| {
                CorpusError::Validation(format!(
                    "inline utterance `{}` has no sample rate",
                    utterance.id
                ))
            })?;
            Ok((samples.as_ref().clone(), sr))
        }
        AudioRef::Path(path) => wav::read_wav(path),
    }
}
