//! The flat `key = value` run configuration, mirroring [`TrainingConfig`]
//! plus feature settings and manifest paths.
//!
//! Unknown keys are rejected. `manifest.<CORPUS> = path` maps corpus ids to
//! manifest files; relative paths resolve against the config file's
//! directory. [`RunConfig::to_text`] emits a canonical snapshot that parses
//! back to the same configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::corpus::{ClassSet, CorpusId, TrimConfig};
use crate::features::{FeatureConfig, FeatureKind};
use crate::kv;

use super::{ModelShape, Regime, TrainingConfig, TrainingError};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub training: TrainingConfig,
    pub features: FeatureConfig,
    /// Corpus id to manifest path, in file order.
    pub manifests: Vec<(CorpusId, PathBuf)>,
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse_file(path: impl AsRef<Path>) -> Result<RunConfig, TrainingError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            TrainingError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        // Absolutize so snapshots written into run directories keep
        // resolving no matter where they are parsed from later.
        let parent = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let base = if parent.is_absolute() {
            parent
        } else {
            std::env::current_dir()
                .map_err(|e| TrainingError::Config(format!("cannot resolve cwd: {e}")))?
                .join(parent)
        };
        Self::parse_text(&text, &base)
            .map_err(|e| TrainingError::Config(format!("{}: {e}", path.display())))
    }

    /// Parse config text; relative manifest/cache paths resolve against
    /// `base`.
    pub fn parse_text(text: &str, base: &Path) -> Result<RunConfig, String> {
        let pairs = kv::parse(text)?;
        let mut seen = BTreeMap::new();
        let mut manifests: Vec<(CorpusId, PathBuf)> = Vec::new();
        for (key, value, line) in &pairs {
            if let Some(corpus) = key.strip_prefix("manifest.") {
                if corpus.is_empty() {
                    return Err(format!("line {line}: empty corpus id in manifest key"));
                }
                let id = CorpusId::new(corpus);
                if manifests.iter().any(|(c, _)| *c == id) {
                    return Err(format!("line {line}: duplicate manifest for `{corpus}`"));
                }
                manifests.push((id, resolve(base, value)));
                continue;
            }
            if seen.insert(key.clone(), value.clone()).is_some() {
                return Err(format!("line {line}: duplicate key `{key}`"));
            }
        }

        let mut take = |k: &str| seen.remove(k);
        let parse_err = |k: &str, v: &str| format!("bad value `{v}` for `{k}`");

        macro_rules! scalar {
            ($key:expr, $default:expr, $ty:ty) => {
                match take($key) {
                    Some(v) => v.parse::<$ty>().map_err(|_| parse_err($key, &v))?,
                    None => $default,
                }
            };
        }

        let regime_text =
            take("regime").ok_or_else(|| "missing required key `regime`".to_string())?;
        let regime = Regime::from_name(&regime_text)
            .ok_or_else(|| format!("unknown regime `{regime_text}`"))?;
        let seed = scalar!("seed", 0u64, u64);

        let mut training = TrainingConfig::new(regime, seed);
        let corpus_list = |v: String| -> Vec<CorpusId> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(CorpusId::new)
                .collect()
        };
        if let Some(v) = take("train_corpora") {
            training.train_corpora = corpus_list(v);
        }
        if let Some(v) = take("eval_corpora") {
            training.eval_corpora = corpus_list(v);
        } else {
            training.eval_corpora = manifests.iter().map(|(c, _)| c.clone()).collect();
        }
        if let Some(v) = take("adapt_corpus") {
            training.adapt_corpus = Some(CorpusId::new(v.trim()));
        }
        if let Some(v) = take("class_set") {
            training.class_set = ClassSet::parse(&v).map_err(|e| e.to_string())?;
        }
        training.epochs = scalar!("epochs", training.epochs, usize);
        training.lambda = scalar!("lambda", training.lambda, f64);
        training.learning_rate = scalar!("lr", training.learning_rate, f64);
        training.patience = scalar!("patience", training.patience, usize);
        training.factor = scalar!("factor", training.factor, f64);
        training.batch_size = scalar!("batch_size", 1usize, usize);
        training.include_implicit_neutral =
            scalar!("include_implicit_neutral", false, bool);
        training.model = ModelShape {
            hidden: scalar!("hidden", 512usize, usize),
            layers: scalar!("layers", 2usize, usize),
            attn_bottleneck: scalar!("attn_bottleneck", 128usize, usize),
        };

        let mut features = FeatureConfig::default();
        if let Some(v) = take("features") {
            features.kind = FeatureKind::from_name(&v)
                .ok_or_else(|| format!("unknown feature kind `{v}` (lmfb or mfcc)"))?;
        }
        training.feature_kind = features.kind;
        features.n_mels = scalar!("n_mels", features.n_mels, usize);
        features.n_ceps = scalar!("n_ceps", features.n_ceps, usize);
        features.frame_length_s = scalar!("frame_length_s", features.frame_length_s, f64);
        features.frame_hop_s = scalar!("frame_hop_s", features.frame_hop_s, f64);
        features.low_freq_hz = scalar!("low_freq_hz", features.low_freq_hz, f64);
        if let Some(v) = take("high_freq_hz") {
            features.high_freq_hz = Some(v.parse().map_err(|_| parse_err("high_freq_hz", &v))?);
        }
        if let Some(v) = take("n_fft") {
            features.n_fft = Some(v.parse().map_err(|_| parse_err("n_fft", &v))?);
        }
        features.log_floor = scalar!("log_floor", features.log_floor, f64);
        if let Some(v) = take("pre_emphasis") {
            features.pre_emphasis = if v == "off" {
                None
            } else {
                Some(v.parse().map_err(|_| parse_err("pre_emphasis", &v))?)
            };
        }
        match take("trim") {
            Some(v) if v == "off" => features.trim = None,
            Some(v) if v == "on" => features.trim = Some(TrimConfig::default()),
            Some(v) => return Err(parse_err("trim", &v)),
            None => {}
        }
        if let Some(v) = take("trim_threshold_db") {
            let db: f64 = v.parse().map_err(|_| parse_err("trim_threshold_db", &v))?;
            let mut trim = features.trim.unwrap_or_default();
            trim.threshold_db = db;
            features.trim = Some(trim);
        }

        let cache_dir = take("cache_dir").map(|v| resolve(base, &v));

        if let Some((key, _)) = seen.into_iter().next() {
            return Err(format!("unknown key `{key}`"));
        }
        Ok(RunConfig {
            training,
            features,
            manifests,
            cache_dir,
        })
    }

    /// Canonical serialization; absolute paths, fixed key order.
    pub fn to_text(&self) -> String {
        let t = &self.training;
        let f = &self.features;
        let mut out = String::new();
        out.push_str(&format!("regime = {}\n", t.regime.name()));
        out.push_str(&format!("seed = {}\n", t.seed));
        out.push_str(&format!(
            "train_corpora = {}\n",
            t.train_corpora
                .iter()
                .map(CorpusId::as_str)
                .collect::<Vec<_>>()
                .join(",")
        ));
        if let Some(a) = &t.adapt_corpus {
            out.push_str(&format!("adapt_corpus = {a}\n"));
        }
        out.push_str(&format!(
            "eval_corpora = {}\n",
            t.eval_corpora
                .iter()
                .map(CorpusId::as_str)
                .collect::<Vec<_>>()
                .join(",")
        ));
        out.push_str(&format!("class_set = {}\n", t.class_set.spec_string()));
        out.push_str(&format!("epochs = {}\n", t.epochs));
        out.push_str(&format!("lambda = {}\n", t.lambda));
        out.push_str(&format!("lr = {}\n", t.learning_rate));
        out.push_str(&format!("patience = {}\n", t.patience));
        out.push_str(&format!("factor = {}\n", t.factor));
        out.push_str(&format!("batch_size = {}\n", t.batch_size));
        out.push_str(&format!(
            "include_implicit_neutral = {}\n",
            t.include_implicit_neutral
        ));
        out.push_str(&format!("hidden = {}\n", t.model.hidden));
        out.push_str(&format!("layers = {}\n", t.model.layers));
        out.push_str(&format!("attn_bottleneck = {}\n", t.model.attn_bottleneck));
        out.push_str(&format!("features = {}\n", f.kind.name()));
        out.push_str(&format!("n_mels = {}\n", f.n_mels));
        out.push_str(&format!("n_ceps = {}\n", f.n_ceps));
        out.push_str(&format!("frame_length_s = {}\n", f.frame_length_s));
        out.push_str(&format!("frame_hop_s = {}\n", f.frame_hop_s));
        out.push_str(&format!("low_freq_hz = {}\n", f.low_freq_hz));
        if let Some(h) = f.high_freq_hz {
            out.push_str(&format!("high_freq_hz = {h}\n"));
        }
        if let Some(n) = f.n_fft {
            out.push_str(&format!("n_fft = {n}\n"));
        }
        out.push_str(&format!("log_floor = {}\n", f.log_floor));
        match f.pre_emphasis {
            Some(k) => out.push_str(&format!("pre_emphasis = {k}\n")),
            None => out.push_str("pre_emphasis = off\n"),
        }
        match &f.trim {
            Some(trim) => {
                out.push_str("trim = on\n");
                out.push_str(&format!("trim_threshold_db = {}\n", trim.threshold_db));
            }
            None => out.push_str("trim = off\n"),
        }
        if let Some(dir) = &self.cache_dir {
            out.push_str(&format!("cache_dir = {}\n", dir.display()));
        }
        for (corpus, path) in &self.manifests {
            out.push_str(&format!("manifest.{corpus} = {}\n", path.display()));
        }
        out
    }
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = Path::new(value);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
