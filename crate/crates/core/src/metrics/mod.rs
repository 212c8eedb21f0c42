//! UA and WA accuracies over per-class binary confusions.
//!
//! Naming follows the source convention of this line of work: UA is
//! `(TP+TN)/(P+N)` (plain accuracy of the binary decision) and WA is
//! `(TP/P + TN/N)/2` (class-balanced accuracy). Corpus-level numbers are
//! the unweighted mean over classes with defined values; undefined cells
//! are reported absent, never imputed.

use crate::corpus::{ClassSet, CorpusId, EmotionClass};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("metric undefined: {0}")]
    Undefined(String),
    #[error("prediction/reference misalignment: {0}")]
    Alignment(String),
    #[error("no class has a defined metric; empty report")]
    EmptyReport,
}

/// Binary confusion counts for one class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Positive reference instances: TP + FN.
    pub fn p(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Negative reference instances: TN + FP.
    pub fn n(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// UA = (TP + TN) / (P + N).
pub fn ua(counts: &ConfusionCounts) -> Result<f64, MetricsError> {
    let denom = counts.p() + counts.n();
    if denom == 0 {
        return Err(MetricsError::Undefined("UA with P + N = 0".into()));
    }
    Ok((counts.tp + counts.tn) as f64 / denom as f64)
}

/// WA = (TP/P + TN/N) / 2.
pub fn wa(counts: &ConfusionCounts) -> Result<f64, MetricsError> {
    if counts.p() == 0 || counts.n() == 0 {
        return Err(MetricsError::Undefined(
            "WA with an empty positive or negative class".into(),
        ));
    }
    Ok(0.5 * (counts.tp as f64 / counts.p() as f64 + counts.tn as f64 / counts.n() as f64))
}

/// Per-utterance class scores (softmax probabilities in class-set order).
#[derive(Clone, Debug)]
pub struct Prediction {
    pub utt_id: String,
    pub scores: Vec<f64>,
}

/// Per-utterance reference presence flags in class-set order.
#[derive(Clone, Debug)]
pub struct Reference {
    pub utt_id: String,
    pub present: Vec<bool>,
}

/// How predictions are turned into per-class binary decisions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecisionRule {
    /// Single-label references: the argmax class is positive, ties go to
    /// the lowest class index.
    Argmax,
    /// Multi-label references: one-vs-rest thresholding of the scores.
    ThresholdOneVsRest(f64),
}

/// Index of the maximal score; ties resolve to the lowest index.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Tally per-class binary confusions over aligned prediction/reference
/// pairs. Pairs are matched positionally and ids must agree.
pub fn confusion_from_predictions(
    predictions: &[Prediction],
    references: &[Reference],
    n_classes: usize,
    rule: DecisionRule,
) -> Result<Vec<ConfusionCounts>, MetricsError> {
    if predictions.len() != references.len() {
        return Err(MetricsError::Alignment(format!(
            "{} predictions vs {} references",
            predictions.len(),
            references.len()
        )));
    }
    let mut counts = vec![ConfusionCounts::default(); n_classes];
    for (pred, reference) in predictions.iter().zip(references) {
        if pred.utt_id != reference.utt_id {
            return Err(MetricsError::Alignment(format!(
                "utterance `{}` paired with reference `{}`",
                pred.utt_id, reference.utt_id
            )));
        }
        if pred.scores.len() != n_classes || reference.present.len() != n_classes {
            return Err(MetricsError::Alignment(format!(
                "utterance `{}` has {} scores / {} reference flags for {n_classes} classes",
                pred.utt_id,
                pred.scores.len(),
                reference.present.len()
            )));
        }
        let decided: Vec<bool> = match rule {
            DecisionRule::Argmax => {
                let chosen = argmax_lowest(&pred.scores);
                (0..n_classes).map(|c| c == chosen).collect()
            }
            DecisionRule::ThresholdOneVsRest(threshold) => {
                pred.scores.iter().map(|&s| s >= threshold).collect()
            }
        };
        for c in 0..n_classes {
            match (decided[c], reference.present[c]) {
                (true, true) => counts[c].tp += 1,
                (true, false) => counts[c].fp += 1,
                (false, true) => counts[c].fn_ += 1,
                (false, false) => counts[c].tn += 1,
            }
        }
    }
    Ok(counts)
}

/// One class's cells in a corpus report.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassReport {
    pub class: EmotionClass,
    pub counts: ConfusionCounts,
    pub ua: Option<f64>,
    pub wa: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusReport {
    pub corpus: CorpusId,
    /// Unweighted mean over classes with defined UA.
    pub ua: Option<f64>,
    /// Unweighted mean over classes with defined WA.
    pub wa: Option<f64>,
    pub per_class: Vec<ClassReport>,
}

/// Assemble a corpus report from per-class counts. `scoreable` masks
/// classes the model cannot predict (their cells stay absent); `None`
/// scores every class.
pub fn aggregate_report(
    counts: &[ConfusionCounts],
    class_set: &ClassSet,
    corpus: CorpusId,
    scoreable: Option<&[bool]>,
) -> Result<CorpusReport, MetricsError> {
    assert_eq!(counts.len(), class_set.len(), "counts/class set mismatch");
    let mut per_class = Vec::with_capacity(counts.len());
    for (i, (&c, &class)) in counts.iter().zip(class_set.classes()).enumerate() {
        let in_scope = scoreable.map_or(true, |m| m[i]);
        per_class.push(ClassReport {
            class,
            counts: c,
            ua: if in_scope { ua(&c).ok() } else { None },
            wa: if in_scope { wa(&c).ok() } else { None },
        });
    }
    let mean = |values: Vec<f64>| {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    let corpus_ua = mean(per_class.iter().filter_map(|c| c.ua).collect());
    let corpus_wa = mean(per_class.iter().filter_map(|c| c.wa).collect());
    if corpus_ua.is_none() && corpus_wa.is_none() {
        return Err(MetricsError::EmptyReport);
    }
    Ok(CorpusReport {
        corpus,
        ua: corpus_ua,
        wa: corpus_wa,
        per_class,
    })
}

/// Re-score predictions made over `model_classes` under the four-class
/// merged view (happy, sad, anger, neutral). The argmax is restricted to
/// view classes the model can actually emit; view classes outside the
/// model's class set are tallied but their cells stay absent. References
/// must already be mapped onto the view's class set.
pub fn iem4_view(
    predictions: &[Prediction],
    references: &[Reference],
    model_classes: &ClassSet,
) -> Result<(Vec<ConfusionCounts>, Vec<bool>), MetricsError> {
    let view = ClassSet::iem4();
    let scoreable: Vec<bool> = view
        .classes()
        .iter()
        .map(|&c| model_classes.contains(c))
        .collect();
    let allowed: Vec<(usize, usize)> = view
        .classes()
        .iter()
        .enumerate()
        .filter_map(|(view_idx, &c)| model_classes.index_of(c).map(|m| (view_idx, m)))
        .collect();
    if allowed.is_empty() {
        return Err(MetricsError::EmptyReport);
    }

    if predictions.len() != references.len() {
        return Err(MetricsError::Alignment(format!(
            "{} predictions vs {} references",
            predictions.len(),
            references.len()
        )));
    }
    let mut counts = vec![ConfusionCounts::default(); view.len()];
    for (pred, reference) in predictions.iter().zip(references) {
        if pred.utt_id != reference.utt_id {
            return Err(MetricsError::Alignment(format!(
                "utterance `{}` paired with reference `{}`",
                pred.utt_id, reference.utt_id
            )));
        }
        if reference.present.len() != view.len() {
            return Err(MetricsError::Alignment(format!(
                "utterance `{}`: reference not in the four-class view",
                pred.utt_id
            )));
        }
        // Restricted argmax over the view classes the model can emit,
        // ties to the lowest view index.
        let mut chosen = allowed[0].0;
        let mut best = pred.scores[allowed[0].1];
        for &(view_idx, model_idx) in &allowed[1..] {
            if pred.scores[model_idx] > best {
                best = pred.scores[model_idx];
                chosen = view_idx;
            }
        }
        for c in 0..view.len() {
            match (c == chosen, reference.present[c]) {
                (true, true) => counts[c].tp += 1,
                (true, false) => counts[c].fp += 1,
                (false, true) => counts[c].fn_ += 1,
                (false, false) => counts[c].tn += 1,
            }
        }
    }
    Ok((counts, scoreable))
}

/// Per-corpus (and per-emotion) evaluation results of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub corpora: Vec<CorpusReport>,
    /// Checkpoint provenance (best epoch, selection score).
    pub provenance: String,
}

impl MetricsReport {
    pub fn find(&self, corpus: &CorpusId) -> Option<&CorpusReport> {
        self.corpora.iter().find(|c| &c.corpus == corpus)
    }

    /// Tab-separated serialization: one line per (corpus, class) with raw
    /// counts and metrics, plus one SUMMARY line per corpus. Absent cells
    /// print `-`; ratios print with six decimals.
    pub fn to_tsv(&self) -> String {
        fn cell(v: Option<f64>) -> String {
            v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
        }
        let mut out = String::new();
        out.push_str("# corpus\tclass\ttp\tfp\ttn\tfn\tua\twa\n");
        out.push_str(&format!("# provenance: {}\n", self.provenance));
        for corpus in &self.corpora {
            for class in &corpus.per_class {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    corpus.corpus,
                    class.class,
                    class.counts.tp,
                    class.counts.fp,
                    class.counts.tn,
                    class.counts.fn_,
                    cell(class.ua),
                    cell(class.wa),
                ));
            }
            out.push_str(&format!(
                "{}\tSUMMARY\t-\t-\t-\t-\t{}\t{}\n",
                corpus.corpus,
                cell(corpus.ua),
                cell(corpus.wa),
            ));
        }
        out
    }
}
