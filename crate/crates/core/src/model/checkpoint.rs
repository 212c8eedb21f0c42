//! Parameter checkpoints and model metadata.
//!
//! Parameters go into a flat binary file: 8-byte magic `SERCKPT1`, a
//! named-parameter directory (name, shape, element offset), then all
//! values as row-major little-endian `f32`. Metadata (class list, feature
//! kind, geometry, selection epoch/score) lives alongside in a small
//! key = value text file, so a checkpoint directory is self-describing.

use std::path::Path;

use crate::features::FeatureKind;


use super::{init_params, ModelConfig, ModelError, ModelParameters};

const MAGIC: &[u8; 8] = b"SERCKPT1";

fn err(detail: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(detail.into())
}

/// Serialize parameters (values round through `f32`).
pub fn params_to_bytes(params: &ModelParameters) -> Vec<u8> {
    struct Entry {
        name: String,
        shape: Vec<usize>,
        offset: u64,
    }
    let mut entries = Vec::new();
    let mut total: u64 = 0;
    params.visit(|name, t| {
        entries.push(Entry {
            name,
            shape: t.shape().to_vec(),
            offset: total,
        });
        total += t.len() as u64;
    });

    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for e in &entries {
        buf.extend_from_slice(&(e.name.len() as u16).to_le_bytes());
        buf.extend_from_slice(e.name.as_bytes());
        buf.push(e.shape.len() as u8);
        for &d in &e.shape {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        buf.extend_from_slice(&e.offset.to_le_bytes());
    }
    buf.extend_from_slice(&total.to_le_bytes());
    params.visit(|_, t| {
        for &v in t.data() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    });
    buf
}

/// Reconstruct parameters for `config` from checkpoint bytes. Every
/// parameter the model expects must be present with the right shape.
pub fn params_from_bytes(bytes: &[u8], config: &ModelConfig) -> Result<ModelParameters, ModelError> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8], ModelError> {
        let end = *pos + n;
        let slice = bytes.get(*pos..end).ok_or_else(|| err("truncated checkpoint"))?;
        *pos = end;
        Ok(slice)
    };

    if take(&mut pos, 8)? != MAGIC {
        return Err(err("bad magic; not a parameter checkpoint"));
    }
    let n_entries = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let mut directory = Vec::with_capacity(n_entries);
    for _ in 0..n_entries {
        let name_len = u16::from_le_bytes(take(&mut pos, 2)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&mut pos, name_len)?.to_vec())
            .map_err(|_| err("non-UTF8 parameter name"))?;
        let ndim = take(&mut pos, 1)?[0] as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize);
        }
        let offset = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
        directory.push((name, shape, offset));
    }
    let total = u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize;
    let data = take(&mut pos, total * 4)?;

    // Shape the output like a fresh model and fill every tensor by name.
    let mut params = init_params(config, 0);
    let mut missing = Vec::new();
    params.visit_mut(|name, t| {
        match directory.iter().find(|(n, _, _)| *n == name) {
            Some((_, shape, offset)) if shape == t.shape() => {
                let start = *offset * 4;
                for (i, v) in t.data_mut().iter_mut().enumerate() {
                    let b = &data[start + i * 4..start + i * 4 + 4];
                    *v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
                }
            }
            Some((_, shape, _)) => missing.push(format!(
                "`{name}` has shape {shape:?}, model expects {:?}",
                t.shape()
            )),
            None => missing.push(format!("`{name}` missing from checkpoint")),
        }
    });
    if !missing.is_empty() {
        return Err(err(missing.join("; ")));
    }
    if directory.len() != {
        let mut n = 0;
        params.visit(|_, _| n += 1);
        n
    } {
        return Err(err("checkpoint holds extra parameters for this geometry"));
    }
    if !params.to_flat().iter().all(|v| v.is_finite()) {
        return Err(err("non-finite parameter values"));
    }
    Ok(params)
}

pub fn save_params(path: impl AsRef<Path>, params: &ModelParameters) -> Result<(), ModelError> {
    std::fs::write(path.as_ref(), params_to_bytes(params))
        .map_err(|e| err(format!("{}: {e}", path.as_ref().display())))
}

pub fn load_params(path: impl AsRef<Path>, config: &ModelConfig) -> Result<ModelParameters, ModelError> {
    let bytes = std::fs::read(path.as_ref())
        .map_err(|e| err(format!("{}: {e}", path.as_ref().display())))?;
    params_from_bytes(&bytes, config)
}

/// Text metadata stored beside the parameter file.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelMeta {
    pub config: ModelConfig,
    /// Class names in model output order.
    pub classes: Vec<String>,
    pub feature_kind: FeatureKind,
    /// Best epoch (1-based; 0 means untrained).
    pub epoch: usize,
    /// Selection score of that epoch (mean eval UA).
    pub score: f64,
}

impl ModelMeta {
    pub fn to_text(&self) -> String {
        let c = &self.config;
        format!(
            "format = ser-model-meta-v1\n\
             input_dim = {}\nhidden = {}\nlayers = {}\nattn_bottleneck = {}\n\
             n_classes = {}\nn_domains = {}\nclasses = {}\nfeature_kind = {}\n\
             epoch = {}\nscore = {}\n",
            c.input_dim,
            c.hidden,
            c.layers,
            c.attn_bottleneck,
            c.n_classes,
            c.n_domains,
            self.classes.join(","),
            self.feature_kind.name(),
            self.epoch,
            self.score,
        )
    }

    pub fn from_text(text: &str) -> Result<ModelMeta, ModelError> {
        let mut fields = std::collections::BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("bad meta line `{line}`")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .ok_or_else(|| err(format!("meta key `{k}` missing")))
        };
        let parse_usize = |k: &str| -> Result<usize, ModelError> {
            get(k)?.parse().map_err(|_| err(format!("bad meta value for `{k}`")))
        };
        if get("format")? != "ser-model-meta-v1" {
            return Err(err("unknown meta format"));
        }
        let config = ModelConfig {
            input_dim: parse_usize("input_dim")?,
            hidden: parse_usize("hidden")?,
            layers: parse_usize("layers")?,
            attn_bottleneck: parse_usize("attn_bottleneck")?,
            n_classes: parse_usize("n_classes")?,
            n_domains: parse_usize("n_domains")?,
        };
        let classes: Vec<String> = get("classes")?
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if classes.len() != config.n_classes {
            return Err(err("class list length disagrees with n_classes"));
        }
        let feature_kind = FeatureKind::from_name(get("feature_kind")?)
            .ok_or_else(|| err("unknown feature kind in meta"))?;
        let epoch = parse_usize("epoch")?;
        let score: f64 = get("score")?
            .parse()
            .map_err(|_| err("bad meta value for `score`"))?;
        Ok(ModelMeta {
            config,
            classes,
            feature_kind,
            epoch,
            score,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path.as_ref(), self.to_text())
            .map_err(|e| err(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelMeta, ModelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| err(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_text(&text)
    }
}
