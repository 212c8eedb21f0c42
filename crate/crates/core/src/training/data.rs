//! Dataset preparation: manifests plus features in, training samples and
//! evaluation items out.
//!
//! Intensity-scheme labels are binarized, all labels are mapped onto the
//! target class set, and multi-label utterances are expanded into one
//! training sample per present emotion (the softmax head sees single
//! targets); the original label set is kept on the evaluation side.
//! Implicit-neutral utterances (no present label) only become training
//! samples when the config opts in and the class set contains neutral.

use std::sync::Arc;

use crate::corpus::{
    binarize_labels, map_labels, ClassSet, CorpusId, CorpusManifest, EmotionClass, Label,
    LabelScheme, Split, Utterance,
};
use crate::features::{extract_features, FeatureConfig};
use crate::tensor::Tensor;

use super::TrainingError;

/// One training sample: a feature matrix and a single emotion target.
#[derive(Clone, Debug)]
pub struct TrainItem {
    pub utt_id: String,
    pub corpus: CorpusId,
    pub speaker: String,
    pub features: Arc<Tensor>,
    /// Index into the dataset's class set.
    pub emotion: usize,
}

/// One evaluation utterance with its full reference label set.
#[derive(Clone, Debug)]
pub struct EvalItem {
    pub utt_id: String,
    pub corpus: CorpusId,
    pub features: Arc<Tensor>,
    /// Per-class presence in class-set order.
    pub reference: Vec<bool>,
    /// Binarized labels before class-set mapping, for merged views.
    pub raw_labels: Vec<Label>,
}

#[derive(Clone, Debug)]
pub struct CorpusData {
    pub corpus_id: CorpusId,
    pub scheme: LabelScheme,
    pub train: Vec<TrainItem>,
    pub eval: Vec<EvalItem>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub corpora: Vec<CorpusData>,
    pub class_set: ClassSet,
    pub feature_dim: usize,
}

impl Dataset {
    /// Build a dataset with a caller-supplied feature loader (cache reader
    /// or extractor).
    pub fn prepare(
        manifests: &[CorpusManifest],
        class_set: &ClassSet,
        include_implicit_neutral: bool,
        loader: &mut dyn FnMut(&Utterance) -> Result<Tensor, TrainingError>,
    ) -> Result<Dataset, TrainingError> {
        let mut corpora = Vec::with_capacity(manifests.len());
        let mut feature_dim: Option<usize> = None;
        let neutral_idx = class_set.index_of(EmotionClass::Neutral);

        for manifest in manifests {
            manifest.validate()?;
            let mut train = Vec::new();
            let mut eval = Vec::new();
            for utt in &manifest.utterances {
                let binarized = match manifest.label_scheme {
                    LabelScheme::Intensity0To3 => binarize_labels(utt)?,
                    _ => utt.clone(),
                };
                let mapped = map_labels(&binarized, class_set)?;
                let mut present: Vec<usize> = mapped
                    .present_classes(class_set)
                    .into_iter()
                    .filter_map(|c| class_set.index_of(c))
                    .collect();
                if present.is_empty() && include_implicit_neutral {
                    if let Some(n) = neutral_idx {
                        present.push(n);
                    }
                }
                let mut reference = vec![false; class_set.len()];
                for &i in &present {
                    reference[i] = true;
                }

                let features = loader(utt)?;
                if features.rows() == 0 {
                    return Err(TrainingError::Config(format!(
                        "utterance `{}` produced an empty feature sequence",
                        utt.id
                    )));
                }
                match feature_dim {
                    None => feature_dim = Some(features.cols()),
                    Some(d) if d != features.cols() => {
                        return Err(TrainingError::Config(format!(
                            "utterance `{}` has feature dimension {}, dataset uses {d}",
                            utt.id,
                            features.cols()
                        )));
                    }
                    Some(_) => {}
                }
                let features = Arc::new(features);

                match utt.split {
                    Split::Train => {
                        for &emotion in &present {
                            train.push(TrainItem {
                                utt_id: utt.id.clone(),
                                corpus: manifest.corpus_id.clone(),
                                speaker: utt.speaker_id.clone(),
                                features: Arc::clone(&features),
                                emotion,
                            });
                        }
                    }
                    Split::Test => eval.push(EvalItem {
                        utt_id: utt.id.clone(),
                        corpus: manifest.corpus_id.clone(),
                        features,
                        reference,
                        raw_labels: binarized.labels.clone(),
                    }),
                }
            }
            corpora.push(CorpusData {
                corpus_id: manifest.corpus_id.clone(),
                scheme: manifest.label_scheme,
                train,
                eval,
            });
        }

        let feature_dim =
            feature_dim.ok_or_else(|| TrainingError::Config("no utterances in any manifest".into()))?;
        Ok(Dataset {
            corpora,
            class_set: class_set.clone(),
            feature_dim,
        })
    }

    /// Build a dataset by running feature extraction on every utterance.
    pub fn extract(
        manifests: &[CorpusManifest],
        class_set: &ClassSet,
        include_implicit_neutral: bool,
        feature_config: &FeatureConfig,
    ) -> Result<Dataset, TrainingError> {
        Self::prepare(
            manifests,
            class_set,
            include_implicit_neutral,
            &mut |utt| Ok(extract_features(utt, feature_config)?.frames),
        )
    }

    pub fn corpus(&self, id: &CorpusId) -> Option<&CorpusData> {
        self.corpora.iter().find(|c| &c.corpus_id == id)
    }

    pub fn corpus_ids(&self) -> Vec<CorpusId> {
        self.corpora.iter().map(|c| c.corpus_id.clone()).collect()
    }
}
