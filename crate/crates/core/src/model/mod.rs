//! The SER network: a 2-layer bidirectional LSTM encoder, multiplicative
//! attention pooling, an emotion classifier head, and a domain classifier
//! head behind gradient reversal.
//!
//! Shapes are configurable; [`ModelConfig::paper_default`] gives the
//! reference geometry (23-dim input, 512 units per direction over 2
//! layers, 128-dim attention bottleneck, 1024-dim attended vector).
//!
//! Forward passes are recorded on an autodiff [`Graph`]; evaluation uses
//! the same code path with non-trainable bindings, so training and
//! inference can never disagree.

pub mod checkpoint;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{AutodiffError, Graph, NodeId};
use crate::tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("feature dimension {got} does not match model input dimension {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("empty feature sequence")]
    EmptySequence,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

/// Network geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub input_dim: usize,
    /// LSTM units per direction, per layer.
    pub hidden: usize,
    pub layers: usize,
    /// Bottleneck dimension inside attention scoring.
    pub attn_bottleneck: usize,
    pub n_classes: usize,
    pub n_domains: usize,
}

impl ModelConfig {
    /// The reference geometry: two hidden layers of 512 nodes per
    /// direction, 1024-dim encoder output, 128-dim attention context
    /// projected back to 1024.
    pub fn paper_default(n_classes: usize, n_domains: usize) -> Self {
        ModelConfig {
            input_dim: 23,
            hidden: 512,
            layers: 2,
            attn_bottleneck: 128,
            n_classes,
            n_domains,
        }
    }

    /// Dimension of the per-timestep encoder output (both directions).
    pub fn encoder_dim(&self) -> usize {
        2 * self.hidden
    }
}

/// One LSTM direction: packed gate weights in (input, forget, cell,
/// output) order, so `w_x` is `[4h, in]`, `w_h` is `[4h, h]`, `bias` `[4h]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmDirection {
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub bias: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayerParams {
    pub fwd: LstmDirection,
    pub bwd: LstmDirection,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionParams {
    /// Bottleneck map [k, 2h].
    pub w_a: Tensor,
    pub b_a: Tensor,
    /// Score vector [k].
    pub v: Tensor,
    /// Output projection [2h, 2h].
    pub w_o: Tensor,
    pub b_o: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    pub w: Tensor,
    pub b: Tensor,
}

/// All trainable weights. `visit`/`visit_mut` walk the parameters in a
/// fixed canonical order that the optimizer and checkpoints rely on.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParameters {
    pub config: ModelConfig,
    pub layers: Vec<LstmLayerParams>,
    pub attention: AttentionParams,
    pub emotion: HeadParams,
    pub domain: HeadParams,
}

impl ModelParameters {
    pub fn visit(&self, mut f: impl FnMut(String, &Tensor)) {
        for (i, layer) in self.layers.iter().enumerate() {
            for (dir_name, dir) in [("fwd", &layer.fwd), ("bwd", &layer.bwd)] {
                f(format!("blstm.l{i}.{dir_name}.w_x"), &dir.w_x);
                f(format!("blstm.l{i}.{dir_name}.w_h"), &dir.w_h);
                f(format!("blstm.l{i}.{dir_name}.bias"), &dir.bias);
            }
        }
        f("attn.w_a".into(), &self.attention.w_a);
        f("attn.b_a".into(), &self.attention.b_a);
        f("attn.v".into(), &self.attention.v);
        f("attn.w_o".into(), &self.attention.w_o);
        f("attn.b_o".into(), &self.attention.b_o);
        f("emotion.w".into(), &self.emotion.w);
        f("emotion.b".into(), &self.emotion.b);
        f("domain.w".into(), &self.domain.w);
        f("domain.b".into(), &self.domain.b);
    }

    pub fn visit_mut(&mut self, mut f: impl FnMut(String, &mut Tensor)) {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            for (dir_name, dir) in [("fwd", &mut layer.fwd), ("bwd", &mut layer.bwd)] {
                f(format!("blstm.l{i}.{dir_name}.w_x"), &mut dir.w_x);
                f(format!("blstm.l{i}.{dir_name}.w_h"), &mut dir.w_h);
                f(format!("blstm.l{i}.{dir_name}.bias"), &mut dir.bias);
            }
        }
        f("attn.w_a".into(), &mut self.attention.w_a);
        f("attn.b_a".into(), &mut self.attention.b_a);
        f("attn.v".into(), &mut self.attention.v);
        f("attn.w_o".into(), &mut self.attention.w_o);
        f("attn.b_o".into(), &mut self.attention.b_o);
        f("emotion.w".into(), &mut self.emotion.w);
        f("emotion.b".into(), &mut self.emotion.b);
        f("domain.w".into(), &mut self.domain.w);
        f("domain.b".into(), &mut self.domain.b);
    }

    /// Total scalar parameter count.
    pub fn num_scalars(&self) -> usize {
        let mut n = 0;
        self.visit(|_, t| n += t.len());
        n
    }

    /// Flatten all parameters in canonical order (gradient checking).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit(|_, t| out.extend_from_slice(t.data()));
        out
    }

    /// Inverse of [`ModelParameters::to_flat`].
    pub fn from_flat(&self, flat: &[f64]) -> ModelParameters {
        let mut out = self.clone();
        let mut cursor = 0;
        out.visit_mut(|_, t| {
            let n = t.len();
            t.data_mut().copy_from_slice(&flat[cursor..cursor + n]);
            cursor += n;
        });
        assert_eq!(cursor, flat.len(), "flat vector length mismatch");
        out
    }
}

/// Deterministic initialization: weights uniform in +-1/sqrt(fan_in),
/// biases zero except the forget-gate block, which starts at +1.
pub fn init_params(config: &ModelConfig, seed: u64) -> ModelParameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = config.hidden;

    fn weight(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize) -> Tensor {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Tensor::matrix(rows, cols, data).expect("sized")
    }

    fn direction(rng: &mut ChaCha8Rng, h: usize, in_dim: usize) -> LstmDirection {
        let w_x = weight(rng, 4 * h, in_dim, in_dim);
        let w_h = weight(rng, 4 * h, h, h);
        let mut bias = Tensor::zeros(&[4 * h]);
        // Gate order (i, f, g, o): forget block is [h, 2h).
        for v in &mut bias.data_mut()[h..2 * h] {
            *v = 1.0;
        }
        LstmDirection { w_x, w_h, bias }
    }

    let mut layers = Vec::with_capacity(config.layers);
    for l in 0..config.layers {
        let in_dim = if l == 0 {
            config.input_dim
        } else {
            config.encoder_dim()
        };
        let fwd = direction(&mut rng, h, in_dim);
        let bwd = direction(&mut rng, h, in_dim);
        layers.push(LstmLayerParams { fwd, bwd });
    }

    let enc = config.encoder_dim();
    let attention = AttentionParams {
        w_a: weight(&mut rng, config.attn_bottleneck, enc, enc),
        b_a: Tensor::zeros(&[config.attn_bottleneck]),
        v: {
            let bound = 1.0 / (config.attn_bottleneck as f64).sqrt();
            Tensor::vector(
                (0..config.attn_bottleneck)
                    .map(|_| rng.random_range(-bound..bound))
                    .collect(),
            )
        },
        w_o: weight(&mut rng, enc, enc, enc),
        b_o: Tensor::zeros(&[enc]),
    };
    let emotion = HeadParams {
        w: weight(&mut rng, config.n_classes, enc, enc),
        b: Tensor::zeros(&[config.n_classes]),
    };
    let domain = HeadParams {
        w: weight(&mut rng, config.n_domains, enc, enc),
        b: Tensor::zeros(&[config.n_domains]),
    };

    ModelParameters {
        config: *config,
        layers,
        attention,
        emotion,
        domain,
    }
}

/// Node ids of the bound parameters on one graph, mirroring
/// [`ModelParameters`]. `ordered` lists the leaves in canonical visit
/// order for gradient collection.
pub struct ModelNodes {
    pub layers: Vec<LayerNodes>,
    pub attention: AttentionNodes,
    pub emotion: HeadNodes,
    pub domain: HeadNodes,
    ordered: Vec<NodeId>,
}

pub struct DirectionNodes {
    pub w_x: NodeId,
    pub w_h: NodeId,
    pub bias: NodeId,
}

pub struct LayerNodes {
    pub fwd: DirectionNodes,
    pub bwd: DirectionNodes,
}

pub struct AttentionNodes {
    pub w_a: NodeId,
    pub b_a: NodeId,
    pub v: NodeId,
    pub w_o: NodeId,
    pub b_o: NodeId,
}

pub struct HeadNodes {
    pub w: NodeId,
    pub b: NodeId,
}

impl ModelNodes {
    pub fn ordered(&self) -> &[NodeId] {
        &self.ordered
    }
}

/// Copy the parameters onto `graph` as leaves. With `trainable` set the
/// leaves accumulate gradients during backward.
pub fn bind(graph: &mut Graph, params: &ModelParameters, trainable: bool) -> ModelNodes {
    let mut ordered = Vec::new();
    let mut leaf = |graph: &mut Graph, t: &Tensor| {
        let id = graph.leaf(t.clone(), trainable);
        ordered.push(id);
        id
    };

    let layers = params
        .layers
        .iter()
        .map(|layer| {
            let mut dir = |graph: &mut Graph, d: &LstmDirection| DirectionNodes {
                w_x: leaf(graph, &d.w_x),
                w_h: leaf(graph, &d.w_h),
                bias: leaf(graph, &d.bias),
            };
            LayerNodes {
                fwd: dir(graph, &layer.fwd),
                bwd: dir(graph, &layer.bwd),
            }
        })
        .collect();
    let attention = AttentionNodes {
        w_a: leaf(graph, &params.attention.w_a),
        b_a: leaf(graph, &params.attention.b_a),
        v: leaf(graph, &params.attention.v),
        w_o: leaf(graph, &params.attention.w_o),
        b_o: leaf(graph, &params.attention.b_o),
    };
    let emotion = HeadNodes {
        w: leaf(graph, &params.emotion.w),
        b: leaf(graph, &params.emotion.b),
    };
    let domain = HeadNodes {
        w: leaf(graph, &params.domain.w),
        b: leaf(graph, &params.domain.b),
    };

    ModelNodes {
        layers,
        attention,
        emotion,
        domain,
        ordered,
    }
}

/// Gradients of the bound parameters in canonical order; zero tensors for
/// parameters no gradient reached.
pub fn collect_grads(graph: &Graph, nodes: &ModelNodes) -> Vec<Tensor> {
    nodes
        .ordered
        .iter()
        .map(|&id| {
            graph
                .grad(id)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(graph.value(id).shape()))
        })
        .collect()
}

/// One LSTM direction over `inputs`. Standard cell: sigmoid gates, tanh
/// cell activation, no peepholes.
fn lstm_direction(
    graph: &mut Graph,
    dir: &DirectionNodes,
    inputs: &[NodeId],
    hidden: usize,
    reverse: bool,
) -> Result<Vec<NodeId>, ModelError> {
    let mut h_prev = graph.leaf(Tensor::zeros(&[hidden]), false);
    let mut c_prev = graph.leaf(Tensor::zeros(&[hidden]), false);
    let mut out = vec![h_prev; inputs.len()];

    let order: Vec<usize> = if reverse {
        (0..inputs.len()).rev().collect()
    } else {
        (0..inputs.len()).collect()
    };
    for t in order {
        let zx = graph.affine(dir.w_x, inputs[t], dir.bias)?;
        let zh = graph.matvec(dir.w_h, h_prev)?;
        let z = graph.add(zx, zh)?;
        let i_gate = {
            let s = graph.slice(z, 0, hidden)?;
            graph.sigmoid(s)?
        };
        let f_gate = {
            let s = graph.slice(z, hidden, hidden)?;
            graph.sigmoid(s)?
        };
        let g_cell = {
            let s = graph.slice(z, 2 * hidden, hidden)?;
            graph.tanh(s)?
        };
        let o_gate = {
            let s = graph.slice(z, 3 * hidden, hidden)?;
            graph.sigmoid(s)?
        };
        let fc = graph.mul(f_gate, c_prev)?;
        let ig = graph.mul(i_gate, g_cell)?;
        let c = graph.add(fc, ig)?;
        let ct = graph.tanh(c)?;
        let h = graph.mul(o_gate, ct)?;
        out[t] = h;
        h_prev = h;
        c_prev = c;
    }
    Ok(out)
}

/// Run the stacked BLSTM over `features` (a T x input_dim tensor); returns
/// the T per-timestep encoder outputs, each `[2*hidden]` (forward then
/// backward half).
pub fn blstm_forward(
    graph: &mut Graph,
    nodes: &ModelNodes,
    config: &ModelConfig,
    features: &Tensor,
) -> Result<Vec<NodeId>, ModelError> {
    let t_len = features.rows();
    if t_len == 0 {
        return Err(ModelError::EmptySequence);
    }
    if features.cols() != config.input_dim {
        return Err(ModelError::InputDim {
            expected: config.input_dim,
            got: features.cols(),
        });
    }

    let mut rows: Vec<NodeId> = (0..t_len)
        .map(|t| graph.leaf(Tensor::vector(features.row(t).to_vec()), false))
        .collect();
    for layer in &nodes.layers {
        let f = lstm_direction(graph, &layer.fwd, &rows, config.hidden, false)?;
        let b = lstm_direction(graph, &layer.bwd, &rows, config.hidden, true)?;
        rows = f
            .iter()
            .zip(&b)
            .map(|(&ft, &bt)| graph.concat(ft, bt))
            .collect::<Result<_, _>>()?;
    }
    Ok(rows)
}

/// Multiplicative soft attention over the encoder outputs: each timestep
/// is gated by the global mean, squashed through a tanh bottleneck and
/// scored by `v`; softmax scores weight the sum, which is projected back
/// to the encoder dimension through a tanh. Returns (attended, weights).
pub fn attention_forward(
    graph: &mut Graph,
    nodes: &ModelNodes,
    rows: &[NodeId],
) -> Result<(NodeId, NodeId), ModelError> {
    let global_mean = graph.mean_over_time(rows)?;
    let mut scores = Vec::with_capacity(rows.len());
    for &h_t in rows {
        let gated = graph.mul(h_t, global_mean)?;
        let bottleneck = graph.affine(nodes.attention.w_a, gated, nodes.attention.b_a)?;
        let squashed = graph.tanh(bottleneck)?;
        scores.push(graph.dot(nodes.attention.v, squashed)?);
    }
    let stacked = graph.stack_scalars(&scores)?;
    let weights = graph.softmax(stacked)?;
    let context = graph.weighted_sum(weights, rows)?;
    let projected = graph.affine(nodes.attention.w_o, context, nodes.attention.b_o)?;
    let attended = graph.tanh(projected)?;
    Ok((attended, weights))
}

/// Linear projection of the attended vector to emotion logits; softmax is
/// applied inside the loss, not here.
pub fn emotion_head(
    graph: &mut Graph,
    nodes: &ModelNodes,
    attended: NodeId,
) -> Result<NodeId, ModelError> {
    Ok(graph.affine(nodes.emotion.w, attended, nodes.emotion.b)?)
}

/// Domain logits through gradient reversal: forward equals the plain
/// affine map; backward feeds `-lambda` times the domain gradient into the
/// encoder.
pub fn domain_head(
    graph: &mut Graph,
    nodes: &ModelNodes,
    attended: NodeId,
    lambda: f64,
) -> Result<NodeId, ModelError> {
    let reversed = graph.grad_reverse(attended, lambda)?;
    Ok(graph.affine(nodes.domain.w, reversed, nodes.domain.b)?)
}

/// Whether a forward pass also produces domain logits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ForwardMode {
    Plain,
    Dat { lambda: f64 },
}

pub struct ForwardOutput {
    pub emotion_logits: NodeId,
    pub domain_logits: Option<NodeId>,
    pub attended: NodeId,
    pub attention_weights: NodeId,
    pub encoder_rows: Vec<NodeId>,
}

/// Full pipeline: BLSTM, attention, heads.
pub fn model_forward(
    graph: &mut Graph,
    nodes: &ModelNodes,
    config: &ModelConfig,
    features: &Tensor,
    mode: ForwardMode,
) -> Result<ForwardOutput, ModelError> {
    let rows = blstm_forward(graph, nodes, config, features)?;
    let (attended, attention_weights) = attention_forward(graph, nodes, &rows)?;
    let emotion_logits = emotion_head(graph, nodes, attended)?;
    let domain_logits = match mode {
        ForwardMode::Plain => None,
        ForwardMode::Dat { lambda } => Some(domain_head(graph, nodes, attended, lambda)?),
    };
    Ok(ForwardOutput {
        emotion_logits,
        domain_logits,
        attended,
        attention_weights,
        encoder_rows: rows,
    })
}

/// Encoder-side values of one inference pass.
pub struct EncoderOutput {
    /// T x 2h matrix of per-timestep bidirectional states.
    pub h: Tensor,
    pub attended: Tensor,
    pub attention_weights: Tensor,
}

pub struct InferenceOutput {
    pub emotion_logits: Tensor,
    pub domain_logits: Option<Tensor>,
    pub encoder: EncoderOutput,
}

/// Run the model without gradient tracking and return plain tensors.
pub fn forward_inference(
    params: &ModelParameters,
    features: &Tensor,
    mode: ForwardMode,
) -> Result<InferenceOutput, ModelError> {
    let mut graph = Graph::new();
    let nodes = bind(&mut graph, params, false);
    let out = model_forward(&mut graph, &nodes, &params.config, features, mode)?;

    let enc_dim = params.config.encoder_dim();
    let mut h_data = Vec::with_capacity(out.encoder_rows.len() * enc_dim);
    for &row in &out.encoder_rows {
        h_data.extend_from_slice(graph.value(row).data());
    }
    let h = Tensor::matrix(out.encoder_rows.len(), enc_dim, h_data).expect("row dims");

    Ok(InferenceOutput {
        emotion_logits: graph.value(out.emotion_logits).clone(),
        domain_logits: out.domain_logits.map(|id| graph.value(id).clone()),
        encoder: EncoderOutput {
            h,
            attended: graph.value(out.attended).clone(),
            attention_weights: graph.value(out.attention_weights).clone(),
        },
    })
}
