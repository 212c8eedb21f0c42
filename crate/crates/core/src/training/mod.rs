//! The five training regimes: cross-corpus (CC), multi-domain (MD),
//! domain adversarial training (DAT), out-of-domain (OOD), and adaptation.
//!
//! All regimes share one engine: batch-size-1 Adam (initial learning rate
//! 1e-4) with a reduce-on-plateau scheduler (patience 4, factor 0.8), one
//! evaluation over every eval corpus per epoch, and model selection by the
//! highest mean evaluation UA (earliest epoch on ties). DAT adds the
//! domain head behind gradient reversal with a fixed lambda (0.007 by
//! default); the recorded losses are the forward values `L_y` and `L_d` —
//! the reversal only changes gradients.
//!
//! A run is deterministic given its seed: model init, per-epoch shuffles,
//! and the synthetic corpora all use seed streams derived from it.

pub mod config;
mod data;

pub use config::RunConfig;
pub use data::{CorpusData, Dataset, EvalItem, TrainItem};

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{softmax, AdamState, AutodiffError, Graph, PlateauState};
use crate::corpus::{ClassSet, CorpusError, CorpusId, LabelScheme};
use crate::features::{FeatureError, FeatureKind};
use crate::metrics::{
    aggregate_report, confusion_from_predictions, CorpusReport, DecisionRule, MetricsError,
    MetricsReport, Prediction, Reference,
};
use crate::model::{
    self, bind, checkpoint, collect_grads, ForwardMode, ModelConfig, ModelError, ModelParameters,
};
use crate::seed;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainingError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("nothing to train: the pooled training set is empty")]
    EmptyCorpus,
    #[error("non-finite loss at sample `{sample}`: {source}")]
    NonFiniteLoss {
        sample: String,
        #[source]
        source: AutodiffError,
    },
    #[error("corpus `{0}` not present in the dataset")]
    MissingCorpus(CorpusId),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("empty epoch history")]
    EmptyHistory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    CrossCorpus,
    MultiDomain,
    Dat,
    OutOfDomain,
    Adapt,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::CrossCorpus => "CC",
            Regime::MultiDomain => "MD",
            Regime::Dat => "DAT",
            Regime::OutOfDomain => "OOD",
            Regime::Adapt => "ADAPT",
        }
    }

    pub fn from_name(name: &str) -> Option<Regime> {
        match name {
            "CC" => Some(Regime::CrossCorpus),
            "MD" => Some(Regime::MultiDomain),
            "DAT" => Some(Regime::Dat),
            "OOD" => Some(Regime::OutOfDomain),
            "ADAPT" => Some(Regime::Adapt),
            _ => None,
        }
    }
}

/// Encoder/attention geometry knobs (defaults are the reference model).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelShape {
    pub hidden: usize,
    pub layers: usize,
    pub attn_bottleneck: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            hidden: 512,
            layers: 2,
            attn_bottleneck: 128,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainingConfig {
    pub regime: Regime,
    pub train_corpora: Vec<CorpusId>,
    pub adapt_corpus: Option<CorpusId>,
    pub class_set: ClassSet,
    pub epochs: usize,
    /// Gradient-reversal scale (DAT only).
    pub lambda: f64,
    pub learning_rate: f64,
    pub patience: usize,
    pub factor: f64,
    /// Fixed at 1: each utterance is one optimizer step.
    pub batch_size: usize,
    pub seed: u64,
    pub eval_corpora: Vec<CorpusId>,
    /// Treat all-absent label sets as trainable neutral samples.
    pub include_implicit_neutral: bool,
    pub feature_kind: FeatureKind,
    pub model: ModelShape,
    /// Collect per-sample traces (losses and logits) while training.
    pub trace: bool,
}

impl TrainingConfig {
    pub fn new(regime: Regime, seed: u64) -> Self {
        TrainingConfig {
            regime,
            train_corpora: Vec::new(),
            adapt_corpus: None,
            class_set: ClassSet::big_six(),
            epochs: 200,
            lambda: 0.007,
            learning_rate: 1e-4,
            patience: 4,
            factor: 0.8,
            batch_size: 1,
            seed,
            eval_corpora: Vec::new(),
            include_implicit_neutral: false,
            feature_kind: FeatureKind::Lmfb,
            model: ModelShape::default(),
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<(), TrainingError> {
        let fail = |msg: String| Err(TrainingError::Config(msg));
        if self.batch_size != 1 {
            return fail(format!("batch size is fixed at 1, got {}", self.batch_size));
        }
        if self.class_set.is_empty() {
            return fail("empty class set".into());
        }
        if self.eval_corpora.is_empty() {
            return fail("no evaluation corpora".into());
        }
        if !(self.lambda >= 0.0) {
            return fail(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.learning_rate > 0.0) {
            return fail("learning rate must be positive".into());
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return fail(format!("factor must lie in (0, 1), got {}", self.factor));
        }
        if self.patience < 1 {
            return fail("patience must be >= 1".into());
        }
        let mut unique = BTreeSet::new();
        for c in &self.train_corpora {
            if !unique.insert(c) {
                return fail(format!("duplicate training corpus `{c}`"));
            }
        }
        match self.regime {
            Regime::CrossCorpus => {
                if self.train_corpora.len() != 1 {
                    return fail(format!(
                        "CC trains on exactly one corpus, got {}",
                        self.train_corpora.len()
                    ));
                }
            }
            Regime::MultiDomain | Regime::Dat => {
                if self.train_corpora.len() < 2 {
                    return fail(format!(
                        "{} needs at least two training corpora",
                        self.regime.name()
                    ));
                }
            }
            Regime::OutOfDomain => {
                let adapt = self
                    .adapt_corpus
                    .as_ref()
                    .ok_or_else(|| TrainingError::Config("OOD needs adapt_corpus".into()))?;
                if self.train_corpora.is_empty() {
                    return fail("OOD needs at least one training corpus".into());
                }
                if self.train_corpora.contains(adapt) {
                    return fail(format!(
                        "held-out corpus `{adapt}` must be excluded from OOD training"
                    ));
                }
            }
            Regime::Adapt => {
                let adapt = self
                    .adapt_corpus
                    .as_ref()
                    .ok_or_else(|| TrainingError::Config("ADAPT needs adapt_corpus".into()))?;
                if self.train_corpora.as_slice() != std::slice::from_ref(adapt) {
                    return fail(
                        "ADAPT trains on exactly its adapt corpus; set train_corpora accordingly"
                            .into(),
                    );
                }
            }
        }
        Ok(())
    }

    fn model_config(&self, feature_dim: usize) -> ModelConfig {
        ModelConfig {
            input_dim: feature_dim,
            hidden: self.model.hidden,
            layers: self.model.layers,
            attn_bottleneck: self.model.attn_bottleneck,
            n_classes: self.class_set.len(),
            n_domains: self.train_corpora.len().max(1),
        }
    }
}

/// Per-epoch log record.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch index.
    pub epoch: usize,
    /// Mean emotion cross-entropy over the epoch's samples.
    pub train_loss: f64,
    /// Mean domain cross-entropy (DAT only).
    pub domain_loss: Option<f64>,
    /// (corpus, UA, WA) per evaluation corpus.
    pub per_corpus: Vec<(CorpusId, Option<f64>, Option<f64>)>,
    /// Learning rate after this epoch's scheduler step.
    pub learning_rate: f64,
}

impl EpochRecord {
    /// Unweighted mean of the defined per-corpus UAs: the selection score.
    pub fn mean_ua(&self) -> Option<f64> {
        let vals: Vec<f64> = self.per_corpus.iter().filter_map(|(_, ua, _)| *ua).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

/// Epoch with the highest mean UA; ties break to the earliest epoch.
pub fn select_best(history: &[EpochRecord]) -> Result<usize, TrainingError> {
    if history.is_empty() {
        return Err(TrainingError::EmptyHistory);
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, record) in history.iter().enumerate() {
        if let Some(score) = record.mean_ua() {
            if best.map_or(true, |(_, b)| score > b) {
                best = Some((i, score));
            }
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| TrainingError::Config("no epoch has a defined selection score".into()))
}

/// Selected model state of a finished run.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub params: ModelParameters,
    pub config: TrainingConfig,
    /// 1-based best epoch; 0 for an untrained (0-epoch) run.
    pub epoch: usize,
    /// Mean evaluation UA of that epoch.
    pub score: f64,
}

/// Per-sample forward values recorded when `config.trace` is set.
#[derive(Clone, Debug)]
pub struct SampleTrace {
    pub epoch: usize,
    pub utt_id: String,
    pub emotion_logits: Vec<f64>,
    pub domain_logits: Option<Vec<f64>>,
    pub emotion_loss: f64,
    pub domain_loss: Option<f64>,
}

#[derive(Debug)]
pub struct RunResult {
    pub checkpoint: Checkpoint,
    /// Final report, computed from the checkpoint after a serialization
    /// round trip, so re-evaluating the saved checkpoint reproduces it
    /// exactly.
    pub report: MetricsReport,
    pub history: Vec<EpochRecord>,
    /// Ids of every utterance consumed as training data.
    pub accessed_ids: BTreeSet<String>,
    pub traces: Vec<SampleTrace>,
}

/// Dispatch a non-adaptation run by regime.
pub fn run(config: &TrainingConfig, dataset: &Dataset) -> Result<RunResult, TrainingError> {
    match config.regime {
        Regime::CrossCorpus => run_cross_corpus(config, dataset),
        Regime::MultiDomain => run_multidomain(config, dataset),
        Regime::Dat => run_dat(config, dataset),
        Regime::OutOfDomain => run_ood(config, dataset),
        Regime::Adapt => Err(TrainingError::Config(
            "adaptation continues a base checkpoint; call adapt()".into(),
        )),
    }
}

/// Single-corpus training, evaluated on every eval corpus (matched and
/// mismatched cells of one row).
pub fn run_cross_corpus(
    config: &TrainingConfig,
    dataset: &Dataset,
) -> Result<RunResult, TrainingError> {
    expect_regime(config, Regime::CrossCorpus)?;
    fresh_run(config, dataset, false)
}

/// Pooled training over all corpora, no domain head.
pub fn run_multidomain(
    config: &TrainingConfig,
    dataset: &Dataset,
) -> Result<RunResult, TrainingError> {
    expect_regime(config, Regime::MultiDomain)?;
    fresh_run(config, dataset, false)
}

/// Pooled training with the adversarial domain head: the domain classifier
/// minimizes its own loss while the encoder receives the reversed,
/// lambda-scaled domain gradient.
pub fn run_dat(config: &TrainingConfig, dataset: &Dataset) -> Result<RunResult, TrainingError> {
    expect_regime(config, Regime::Dat)?;
    fresh_run(config, dataset, true)
}

/// Pooled training on all corpora except the held-out one.
pub fn run_ood(config: &TrainingConfig, dataset: &Dataset) -> Result<RunResult, TrainingError> {
    expect_regime(config, Regime::OutOfDomain)?;
    fresh_run(config, dataset, false)
}

fn expect_regime(config: &TrainingConfig, regime: Regime) -> Result<(), TrainingError> {
    if config.regime != regime {
        return Err(TrainingError::Config(format!(
            "config regime is {}, called the {} runner",
            config.regime.name(),
            regime.name()
        )));
    }
    Ok(())
}

fn fresh_run(
    config: &TrainingConfig,
    dataset: &Dataset,
    domain_head: bool,
) -> Result<RunResult, TrainingError> {
    config.validate()?;
    let model_config = config.model_config(dataset.feature_dim);
    let params = model::init_params(&model_config, seed::derive(&[config.seed, MODEL_SALT]));
    train_loop(config, dataset, params, domain_head)
}

/// Continue training a base checkpoint on the held-out corpus with a fresh
/// optimizer. The base must not have trained on that corpus.
pub fn adapt(
    base: &Checkpoint,
    config: &TrainingConfig,
    dataset: &Dataset,
) -> Result<RunResult, TrainingError> {
    expect_regime(config, Regime::Adapt)?;
    config.validate()?;
    let adapt_corpus = config.adapt_corpus.as_ref().expect("validated");
    if base.config.train_corpora.contains(adapt_corpus) {
        return Err(TrainingError::Config(format!(
            "adapt corpus `{adapt_corpus}` overlaps the base run's training corpora"
        )));
    }
    if config.class_set != base.config.class_set {
        return Err(TrainingError::Config(
            "adaptation must keep the base checkpoint's class set".into(),
        ));
    }
    if base.params.config.input_dim != dataset.feature_dim {
        return Err(TrainingError::Config(format!(
            "base model expects {}-dim features, dataset provides {}",
            base.params.config.input_dim, dataset.feature_dim
        )));
    }
    train_loop(config, dataset, base.params.clone(), false)
}

const MODEL_SALT: u64 = 0x4D4F_4445;
const EPOCH_SALT: u64 = 0x4550_4F43;

fn train_loop(
    config: &TrainingConfig,
    dataset: &Dataset,
    initial_params: ModelParameters,
    domain_head: bool,
) -> Result<RunResult, TrainingError> {
    for id in config.train_corpora.iter().chain(&config.eval_corpora) {
        if dataset.corpus(id).is_none() {
            return Err(TrainingError::MissingCorpus(id.clone()));
        }
    }
    if dataset.class_set != config.class_set {
        return Err(TrainingError::Config(
            "dataset was prepared with a different class set".into(),
        ));
    }

    // Pool training items; the domain label is the corpus position in the
    // config's training list.
    let mut pooled: Vec<(&TrainItem, usize)> = Vec::new();
    for (domain, id) in config.train_corpora.iter().enumerate() {
        let corpus = dataset.corpus(id).expect("checked above");
        pooled.extend(corpus.train.iter().map(|item| (item, domain)));
    }
    if pooled.is_empty() && config.epochs > 0 {
        return Err(TrainingError::EmptyCorpus);
    }

    let mut params = initial_params;
    let mut adam = AdamState::new(config.learning_rate);
    let mut plateau = PlateauState::new(config.patience, config.factor);
    let mut history: Vec<EpochRecord> = Vec::new();
    let mut accessed_ids = BTreeSet::new();
    let mut traces = Vec::new();
    let mut best: Option<(usize, f64, ModelParameters)> = None;

    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..pooled.len()).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed::derive(&[config.seed, EPOCH_SALT, epoch as u64]));
        order.shuffle(&mut rng);

        let mut emotion_loss_sum = 0.0;
        let mut domain_loss_sum = 0.0;
        for &idx in &order {
            let (item, domain) = pooled[idx];
            accessed_ids.insert(item.utt_id.clone());
            let (l_y, l_d) = train_step(
                &mut params,
                &mut adam,
                item,
                domain,
                domain_head,
                config,
                if config.trace { Some((&mut traces, epoch)) } else { None },
            )?;
            emotion_loss_sum += l_y;
            domain_loss_sum += l_d.unwrap_or(0.0);
        }

        let per_corpus = evaluate_epoch(&params, dataset, &config.eval_corpora)?;
        let record_score = mean_ua_of(&per_corpus);
        if let Some(score) = record_score {
            plateau.step(score, &mut adam.learning_rate);
            let improved = best.as_ref().map_or(true, |(_, b, _)| score > *b);
            if improved {
                best = Some((epoch, score, params.clone()));
            }
        }
        let n = pooled.len().max(1) as f64;
        history.push(EpochRecord {
            epoch,
            train_loss: emotion_loss_sum / n,
            domain_loss: domain_head.then_some(domain_loss_sum / n),
            per_corpus,
            learning_rate: adam.learning_rate,
        });
    }

    let (best_epoch, best_score, best_params) = match best {
        Some(b) => {
            debug_assert_eq!(select_best(&history)?, b.0 - 1, "inline selection diverged");
            b
        }
        None if config.epochs == 0 => {
            let per_corpus = evaluate_epoch(&params, dataset, &config.eval_corpora)?;
            let score = mean_ua_of(&per_corpus).ok_or_else(|| {
                TrainingError::Config("no evaluation data to score the model".into())
            })?;
            (0, score, params)
        }
        None => {
            return Err(TrainingError::Config(
                "no epoch produced a defined selection score".into(),
            ))
        }
    };

    // The final report goes through the 32-bit checkpoint encoding, so a
    // saved-and-reloaded checkpoint reproduces it bit for bit.
    let model_config = best_params.config;
    let reloaded =
        checkpoint::params_from_bytes(&checkpoint::params_to_bytes(&best_params), &model_config)?;
    let report = evaluate(
        &reloaded,
        dataset,
        &config.eval_corpora,
        format!("regime={} epoch={best_epoch} score={best_score:.6}", config.regime.name()),
    )?;

    Ok(RunResult {
        checkpoint: Checkpoint {
            params: best_params,
            config: config.clone(),
            epoch: best_epoch,
            score: best_score,
        },
        report,
        history,
        accessed_ids,
        traces,
    })
}

#[allow(clippy::too_many_arguments)]
fn train_step(
    params: &mut ModelParameters,
    adam: &mut AdamState,
    item: &TrainItem,
    domain: usize,
    domain_head: bool,
    config: &TrainingConfig,
    trace: Option<(&mut Vec<SampleTrace>, usize)>,
) -> Result<(f64, Option<f64>), TrainingError> {
    let fail = |source: AutodiffError| TrainingError::NonFiniteLoss {
        sample: item.utt_id.clone(),
        source,
    };

    let mut graph = Graph::new();
    let nodes = bind(&mut graph, params, true);
    let mode = if domain_head {
        ForwardMode::Dat {
            lambda: config.lambda,
        }
    } else {
        ForwardMode::Plain
    };
    let out = model::model_forward(&mut graph, &nodes, &params.config, &item.features, mode)?;
    let l_y = graph
        .cross_entropy_loss(out.emotion_logits, item.emotion)
        .map_err(fail)?;
    let l_d = match out.domain_logits {
        Some(logits) => Some(graph.cross_entropy_loss(logits, domain).map_err(fail)?),
        None => None,
    };
    let total = match l_d {
        Some(l_d) => graph.add(l_y, l_d).map_err(fail)?,
        None => l_y,
    };

    let emotion_loss = graph.value(l_y).item();
    let domain_loss = l_d.map(|id| graph.value(id).item());
    if let Some((traces, epoch)) = trace {
        traces.push(SampleTrace {
            epoch,
            utt_id: item.utt_id.clone(),
            emotion_logits: graph.value(out.emotion_logits).data().to_vec(),
            domain_logits: out
                .domain_logits
                .map(|id| graph.value(id).data().to_vec()),
            emotion_loss,
            domain_loss,
        });
    }

    graph.backward(total).map_err(fail)?;
    let grads = collect_grads(&graph, &nodes);

    adam.begin_step();
    let mut index = 0;
    let mut step_err = None;
    params.visit_mut(|name, tensor| {
        if step_err.is_none() {
            if let Err(e) = adam.update_param(index, &name, tensor, &grads[index]) {
                step_err = Some(e);
            }
        }
        index += 1;
    });
    if let Some(e) = step_err {
        return Err(fail(e));
    }
    debug_assert_eq!(index, grads.len());

    Ok((emotion_loss, domain_loss))
}

fn mean_ua_of(per_corpus: &[(CorpusId, Option<f64>, Option<f64>)]) -> Option<f64> {
    let vals: Vec<f64> = per_corpus.iter().filter_map(|(_, ua, _)| *ua).collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

fn evaluate_epoch(
    params: &ModelParameters,
    dataset: &Dataset,
    eval_corpora: &[CorpusId],
) -> Result<Vec<(CorpusId, Option<f64>, Option<f64>)>, TrainingError> {
    let mut out = Vec::with_capacity(eval_corpora.len());
    for id in eval_corpora {
        let corpus = dataset
            .corpus(id)
            .ok_or_else(|| TrainingError::MissingCorpus(id.clone()))?;
        if corpus.eval.is_empty() {
            out.push((id.clone(), None, None));
            continue;
        }
        let report = evaluate_corpus(params, corpus, &dataset.class_set)?;
        out.push((id.clone(), report.ua, report.wa));
    }
    Ok(out)
}

/// Softmax class scores for every evaluation item of a corpus.
pub fn predictions_for(
    params: &ModelParameters,
    corpus: &CorpusData,
) -> Result<Vec<Prediction>, TrainingError> {
    corpus
        .eval
        .iter()
        .map(|item| {
            let out = model::forward_inference(params, &item.features, ForwardMode::Plain)?;
            Ok(Prediction {
                utt_id: item.utt_id.clone(),
                scores: softmax(out.emotion_logits.data()),
            })
        })
        .collect()
}

/// Decision rule for a corpus: argmax for single-label references,
/// one-vs-rest at 0.5 otherwise.
pub fn decision_rule_for(scheme: LabelScheme) -> DecisionRule {
    match scheme {
        LabelScheme::SingleLabel => DecisionRule::Argmax,
        LabelScheme::MultiLabelBinary | LabelScheme::Intensity0To3 => {
            DecisionRule::ThresholdOneVsRest(0.5)
        }
    }
}

/// Evaluate one corpus's test split into a corpus report.
pub fn evaluate_corpus(
    params: &ModelParameters,
    corpus: &CorpusData,
    class_set: &ClassSet,
) -> Result<CorpusReport, TrainingError> {
    let predictions = predictions_for(params, corpus)?;
    let references: Vec<Reference> = corpus
        .eval
        .iter()
        .map(|item| Reference {
            utt_id: item.utt_id.clone(),
            present: item.reference.clone(),
        })
        .collect();
    let counts = confusion_from_predictions(
        &predictions,
        &references,
        class_set.len(),
        decision_rule_for(corpus.scheme),
    )?;
    Ok(aggregate_report(
        &counts,
        class_set,
        corpus.corpus_id.clone(),
        None,
    )?)
}

/// Score a corpus's test split under the four-class merged view: the
/// references are remapped onto {happy, sad, anger, neutral} (excitement
/// merging into happy) and the argmax is restricted to view classes the
/// model can emit. View classes outside the model's class set are tallied
/// but reported as absent cells.
pub fn evaluate_iem4_view(
    params: &ModelParameters,
    corpus: &CorpusData,
    model_class_set: &ClassSet,
) -> Result<CorpusReport, TrainingError> {
    let view = ClassSet::iem4();
    let predictions = predictions_for(params, corpus)?;
    let references: Vec<Reference> = corpus
        .eval
        .iter()
        .map(|item| {
            let mapped = crate::corpus::map_label_list(&item.raw_labels, &view, &item.utt_id)?;
            let mut present = vec![false; view.len()];
            for label in &mapped {
                if label.is_present() {
                    if let Some(i) = view
                        .classes()
                        .iter()
                        .position(|c| c.name() == label.name)
                    {
                        present[i] = true;
                    }
                }
            }
            Ok(Reference {
                utt_id: item.utt_id.clone(),
                present,
            })
        })
        .collect::<Result<_, TrainingError>>()?;
    let (counts, scoreable) =
        crate::metrics::iem4_view(&predictions, &references, model_class_set)?;
    Ok(aggregate_report(
        &counts,
        &view,
        corpus.corpus_id.clone(),
        Some(&scoreable),
    )?)
}

/// Evaluate `params` over the test splits of `eval_corpora`.
pub fn evaluate(
    params: &ModelParameters,
    dataset: &Dataset,
    eval_corpora: &[CorpusId],
    provenance: String,
) -> Result<MetricsReport, TrainingError> {
    let mut corpora = Vec::with_capacity(eval_corpora.len());
    for id in eval_corpora {
        let corpus = dataset
            .corpus(id)
            .ok_or_else(|| TrainingError::MissingCorpus(id.clone()))?;
        if corpus.eval.is_empty() {
            corpora.push(CorpusReport {
                corpus: id.clone(),
                ua: None,
                wa: None,
                per_class: Vec::new(),
            });
            continue;
        }
        corpora.push(evaluate_corpus(params, corpus, &dataset.class_set)?);
    }
    Ok(MetricsReport {
        corpora,
        provenance,
    })
}

/// Plain argmax accuracy of the model on a corpus's test split (desk-scale
/// checks against the generating emotion).
pub fn argmax_accuracy(
    params: &ModelParameters,
    corpus: &CorpusData,
) -> Result<f64, TrainingError> {
    let predictions = predictions_for(params, corpus)?;
    if predictions.is_empty() {
        return Err(TrainingError::Config(format!(
            "corpus `{}` has no evaluation items",
            corpus.corpus_id
        )));
    }
    let mut correct = 0usize;
    for (pred, item) in predictions.iter().zip(&corpus.eval) {
        let chosen = crate::metrics::argmax_lowest(&pred.scores);
        if item.reference.get(chosen).copied().unwrap_or(false) {
            correct += 1;
        }
    }
    Ok(correct as f64 / predictions.len() as f64)
}
