//! Model-level contracts: initialization, BLSTM direction wiring,
//! attention normalization, head behavior, and gradient checks.

use approx::assert_abs_diff_eq;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ser_core::autodiff::gradcheck::{finite_difference, max_relative_error};
use ser_core::autodiff::Graph;
use ser_core::model::{
    attention_forward, bind, blstm_forward, collect_grads, domain_head, emotion_head,
    forward_inference, init_params, model_forward, ForwardMode, ModelConfig, ModelParameters,
};
use ser_core::tensor::Tensor;

fn tiny_config() -> ModelConfig {
    ModelConfig {
        input_dim: 4,
        hidden: 8,
        layers: 2,
        attn_bottleneck: 4,
        n_classes: 3,
        n_domains: 2,
    }
}

fn random_features(rng: &mut ChaCha8Rng, t: usize, d: usize) -> Tensor {
    Tensor::matrix(t, d, (0..t * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn init_is_deterministic_and_seed_sensitive() {
    let config = tiny_config();
    let a = init_params(&config, 42);
    let b = init_params(&config, 42);
    assert_eq!(a, b);
    let c = init_params(&config, 43);
    assert_ne!(a, c);
}

#[test]
fn init_shapes_follow_config() {
    let config = ModelConfig {
        n_classes: 6,
        n_domains: 4,
        ..tiny_config()
    };
    let p = init_params(&config, 1);
    assert_eq!(p.emotion.w.shape(), &[6, 16]);
    assert_eq!(p.domain.w.shape(), &[4, 16]);
    assert_eq!(p.layers.len(), 2);
    assert_eq!(p.layers[0].fwd.w_x.shape(), &[32, 4]);
    assert_eq!(p.layers[1].fwd.w_x.shape(), &[32, 16]);
    // Forget-gate bias block starts at +1.
    let bias = p.layers[0].fwd.bias.data();
    assert!(bias[8..16].iter().all(|&v| v == 1.0));
    assert!(bias[..8].iter().all(|&v| v == 0.0));

    let seven = ModelConfig {
        n_classes: 7,
        ..config
    };
    assert_eq!(init_params(&seven, 1).emotion.w.shape(), &[7, 16]);
}

#[test]
fn paper_default_dimensions() {
    let config = ModelConfig::paper_default(6, 4);
    assert_eq!(config.input_dim, 23);
    assert_eq!(config.hidden, 512);
    assert_eq!(config.layers, 2);
    assert_eq!(config.attn_bottleneck, 128);
    assert_eq!(config.encoder_dim(), 1024);
}

#[test]
fn blstm_single_frame_has_both_halves() {
    let config = tiny_config();
    let params = init_params(&config, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let features = random_features(&mut rng, 1, config.input_dim);
    let out = forward_inference(&params, &features, ForwardMode::Plain).unwrap();
    assert_eq!(out.encoder.h.shape(), &[1, 16]);
    // Both halves computed from the single frame: neither half is zero.
    let row = out.encoder.h.row(0);
    assert!(row[..8].iter().any(|&v| v != 0.0));
    assert!(row[8..].iter().any(|&v| v != 0.0));
}

#[test]
fn blstm_zero_weights_zero_input_gives_zero_states() {
    let config = tiny_config();
    let mut params = init_params(&config, 3);
    params.visit_mut(|_, t| t.data_mut().fill(0.0));
    let features = Tensor::zeros(&[5, config.input_dim]);
    let mut graph = Graph::new();
    let nodes = bind(&mut graph, &params, false);
    let rows = blstm_forward(&mut graph, &nodes, &config, &features).unwrap();
    for row in rows {
        assert!(graph.value(row).data().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn lstm_hidden_states_stay_inside_unit_interval() {
    let config = tiny_config();
    let params = init_params(&config, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let t = rng.random_range(1..20);
        let features = random_features(&mut rng, t, config.input_dim);
        let out = forward_inference(&params, &features, ForwardMode::Plain).unwrap();
        for v in out.encoder.h.data() {
            assert!(v.abs() < 1.0, "hidden state {v} escaped (-1, 1)");
        }
    }
}

/// Tie the two directions (and make layer >= 1 input weights symmetric in
/// the two half-blocks) so that reversing the input sequence exactly swaps
/// the directional halves of the encoder output.
fn tied_params(config: &ModelConfig, seed: u64) -> ModelParameters {
    let mut params = init_params(config, seed);
    for (l, layer) in params.layers.iter_mut().enumerate() {
        if l > 0 {
            // w_x: [4h, 2h] -> copy the left block over the right block.
            let rows = layer.fwd.w_x.rows();
            let cols = layer.fwd.w_x.cols();
            let half = cols / 2;
            let data = layer.fwd.w_x.data_mut();
            for r in 0..rows {
                for c in 0..half {
                    data[r * cols + half + c] = data[r * cols + c];
                }
            }
        }
        layer.bwd = layer.fwd.clone();
    }
    params
}

#[test]
fn blstm_direction_swap_under_input_reversal() {
    let config = tiny_config();
    let params = tied_params(&config, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let t_len = 6;
    let features = random_features(&mut rng, t_len, config.input_dim);
    let reversed = {
        let mut data = Vec::with_capacity(features.len());
        for t in (0..t_len).rev() {
            data.extend_from_slice(features.row(t));
        }
        Tensor::matrix(t_len, config.input_dim, data).unwrap()
    };

    let fwd = forward_inference(&params, &features, ForwardMode::Plain).unwrap();
    let rev = forward_inference(&params, &reversed, ForwardMode::Plain).unwrap();
    let h = config.hidden;
    for t in 0..t_len {
        let a = rev.encoder.h.row(t);
        let b = fwd.encoder.h.row(t_len - 1 - t);
        for i in 0..h {
            assert_abs_diff_eq!(a[i], b[h + i], epsilon = 1e-10);
            assert_abs_diff_eq!(a[h + i], b[i], epsilon = 1e-10);
        }
    }
}

#[test]
fn attention_single_timestep_gets_weight_one() {
    let config = tiny_config();
    let params = init_params(&config, 31);
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let features = random_features(&mut rng, 1, config.input_dim);
    let out = forward_inference(&params, &features, ForwardMode::Plain).unwrap();
    assert_eq!(out.encoder.attention_weights.data(), &[1.0]);

    // With alpha = (1.0) the context is h_1, so the attended vector equals
    // tanh(W_o h_1 + b_o) computed by hand.
    let h1 = out.encoder.h.row(0);
    let w_o = &params.attention.w_o;
    let expected: Vec<f64> = (0..w_o.rows())
        .map(|r| {
            let dot: f64 = w_o.row(r).iter().zip(h1).map(|(w, x)| w * x).sum();
            (dot + params.attention.b_o.data()[r]).tanh()
        })
        .collect();
    for (a, e) in out.encoder.attended.data().iter().zip(&expected) {
        assert_abs_diff_eq!(*a, *e, epsilon = 1e-12);
    }
}

#[test]
fn attention_uniform_over_identical_rows() {
    let config = tiny_config();
    let params = init_params(&config, 41);
    let mut graph = Graph::new();
    let nodes = bind(&mut graph, &params, false);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let row_values: Vec<f64> = (0..config.encoder_dim())
        .map(|_| rng.random_range(-0.9..0.9))
        .collect();
    let t_len = 7;
    let rows: Vec<_> = (0..t_len)
        .map(|_| graph.leaf(Tensor::vector(row_values.clone()), false))
        .collect();
    let (_, weights) = attention_forward(&mut graph, &nodes, &rows).unwrap();
    for &w in graph.value(weights).data() {
        assert_abs_diff_eq!(w, 1.0 / t_len as f64, epsilon = 1e-12);
    }
}

#[test]
fn attention_weights_normalize_for_many_lengths() {
    let config = tiny_config();
    let params = init_params(&config, 51);
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for t_len in [1usize, 2, 17, 301] {
        let features = random_features(&mut rng, t_len, config.input_dim);
        let out = forward_inference(&params, &features, ForwardMode::Plain).unwrap();
        let weights = out.encoder.attention_weights;
        assert_eq!(weights.len(), t_len);
        assert!(weights.data().iter().all(|&w| w >= 0.0));
        let sum: f64 = weights.data().iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-6);
    }
}

#[test]
fn emotion_head_zero_weights_give_uniform_posterior() {
    let config = tiny_config();
    let mut params = init_params(&config, 61);
    params.emotion.w.data_mut().fill(0.0);
    params.emotion.b.data_mut().fill(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    let features = random_features(&mut rng, 4, config.input_dim);
    let out = forward_inference(&params, &features, ForwardMode::Plain).unwrap();
    assert!(out.emotion_logits.data().iter().all(|&v| v == 0.0));
    let posterior = ser_core::autodiff::softmax(out.emotion_logits.data());
    for p in posterior {
        assert_abs_diff_eq!(p, 1.0 / config.n_classes as f64, epsilon = 1e-12);
    }
}

#[test]
fn logits_stay_finite_under_fuzzing() {
    let config = tiny_config();
    let params = init_params(&config, 71);
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    for _ in 0..1000 {
        let t = rng.random_range(1..6);
        let mut features = random_features(&mut rng, t, config.input_dim);
        for v in features.data_mut() {
            *v *= 10.0; // exaggerate the input range
        }
        let out = forward_inference(&params, &features, ForwardMode::Plain).unwrap();
        assert!(out.emotion_logits.all_finite());
    }
}

#[test]
fn domain_head_forward_equals_plain_affine_for_any_lambda() {
    let config = tiny_config();
    let params = init_params(&config, 81);
    let mut rng = ChaCha8Rng::seed_from_u64(82);
    let features = random_features(&mut rng, 5, config.input_dim);
    let mut reference: Option<Vec<f64>> = None;
    for lambda in [0.0, 0.007, 0.5, 3.0] {
        let out =
            forward_inference(&params, &features, ForwardMode::Dat { lambda }).unwrap();
        let logits = out.domain_logits.expect("DAT mode emits domain logits");
        match &reference {
            None => reference = Some(logits.data().to_vec()),
            Some(r) => assert_eq!(logits.data(), r.as_slice(), "lambda {lambda}"),
        }
    }
}

/// Collect the gradient of the domain loss on every parameter, once
/// through the reversal layer at `lambda` and once through a plain affine
/// domain head.
fn domain_path_grads(
    params: &ModelParameters,
    features: &Tensor,
    target: usize,
    lambda: Option<f64>,
) -> Vec<Tensor> {
    let mut graph = Graph::new();
    let nodes = bind(&mut graph, params, true);
    let logits = match lambda {
        Some(lambda) => {
            let out = model_forward(
                &mut graph,
                &nodes,
                &params.config,
                features,
                ForwardMode::Dat { lambda },
            )
            .unwrap();
            out.domain_logits.unwrap()
        }
        None => {
            let out = model_forward(
                &mut graph,
                &nodes,
                &params.config,
                features,
                ForwardMode::Plain,
            )
            .unwrap();
            // Identity in place of the reversal layer.
            let affine = graph
                .affine(nodes.domain.w, out.attended, nodes.domain.b)
                .unwrap();
            affine
        }
    };
    let loss = graph.cross_entropy_loss(logits, target).unwrap();
    graph.backward(loss).unwrap();
    collect_grads(&graph, &nodes)
}

/// Number of leading parameters that belong to the shared encoder
/// (BLSTM + attention) in canonical visit order.
fn encoder_param_count(params: &ModelParameters) -> usize {
    params.layers.len() * 6 + 5
}

#[test]
fn domain_gradient_is_minus_lambda_times_identity_gradient() {
    let config = tiny_config();
    let params = init_params(&config, 91);
    let mut rng = ChaCha8Rng::seed_from_u64(92);
    let features = random_features(&mut rng, 5, config.input_dim);
    let identity = domain_path_grads(&params, &features, 1, None);
    let n_encoder = encoder_param_count(&params);

    for lambda in [0.0, 0.007, 0.014] {
        let reversed = domain_path_grads(&params, &features, 1, Some(lambda));
        for (i, (rev, idt)) in reversed.iter().zip(&identity).enumerate().take(n_encoder) {
            for (r, d) in rev.data().iter().zip(idt.data()) {
                let expected = -lambda * d;
                let tol = 1e-6 * expected.abs().max(1e-12).max(r.abs());
                assert!(
                    (r - expected).abs() <= tol,
                    "param {i} lambda {lambda}: {r} vs {expected}"
                );
            }
        }
        // The domain head itself sits above the reversal: its gradient is
        // unscaled.
        for (rev, idt) in reversed.iter().zip(&identity).skip(n_encoder + 2) {
            for (r, d) in rev.data().iter().zip(idt.data()) {
                assert_abs_diff_eq!(*r, *d, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn plain_mode_emits_no_domain_logits_and_is_deterministic() {
    let config = tiny_config();
    let params = init_params(&config, 101);
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let features = random_features(&mut rng, 5, config.input_dim);
    let a = forward_inference(&params, &features, ForwardMode::Plain).unwrap();
    assert!(a.domain_logits.is_none());
    let b = forward_inference(&params, &features, ForwardMode::Plain).unwrap();
    assert_eq!(a.emotion_logits, b.emotion_logits);
}

/// Full-model gradient check on the tiny configuration. The reversal
/// layer makes the DAT update direction differ from the gradient of the
/// forward loss by design, so the finite-difference oracle follows the
/// objective's sign structure: encoder and emotion-head parameters are
/// checked against FD of `L_y - lambda * L_d`, domain-head parameters
/// against FD of `L_d` alone.
#[test]
fn full_model_gradient_check_tiny() {
    let config = tiny_config();
    let params = init_params(&config, 111);
    let mut rng = ChaCha8Rng::seed_from_u64(112);
    let features = random_features(&mut rng, 5, config.input_dim);
    let emotion_target = 2usize;
    let domain_target = 1usize;
    let lambda = 0.007;

    // Forward losses as a pure function of the flat parameter vector.
    let losses_of = |flat: &[f64]| -> (f64, f64) {
        let p = params.from_flat(flat);
        let mut graph = Graph::new();
        let nodes = bind(&mut graph, &p, false);
        let out = model_forward(
            &mut graph,
            &nodes,
            &config,
            &features,
            ForwardMode::Dat { lambda },
        )
        .unwrap();
        let l_y = graph
            .cross_entropy_loss(out.emotion_logits, emotion_target)
            .unwrap();
        let l_d = graph
            .cross_entropy_loss(out.domain_logits.unwrap(), domain_target)
            .unwrap();
        (graph.value(l_y).item(), graph.value(l_d).item())
    };

    let flat = params.to_flat();
    let fd_objective = finite_difference(
        |p| {
            let (l_y, l_d) = losses_of(p);
            l_y - lambda * l_d
        },
        &flat,
        1e-4,
    );
    let fd_domain = finite_difference(|p| losses_of(p).1, &flat, 1e-4);

    let mut graph = Graph::new();
    let nodes = bind(&mut graph, &params, true);
    let out = model_forward(
        &mut graph,
        &nodes,
        &config,
        &features,
        ForwardMode::Dat { lambda },
    )
    .unwrap();
    let l_y = graph
        .cross_entropy_loss(out.emotion_logits, emotion_target)
        .unwrap();
    let l_d = graph
        .cross_entropy_loss(out.domain_logits.unwrap(), domain_target)
        .unwrap();
    let total = graph.add(l_y, l_d).unwrap();
    graph.backward(total).unwrap();
    let grads = collect_grads(&graph, &nodes);

    // Canonical order is encoder, attention, emotion head, domain head; the
    // domain head occupies the last two tensors.
    let n_tensors = grads.len();
    let mut offset = 0;
    let mut err: f64 = 0.0;
    for (i, g) in grads.iter().enumerate() {
        let expected = if i + 2 >= n_tensors {
            &fd_domain[offset..offset + g.len()]
        } else {
            &fd_objective[offset..offset + g.len()]
        };
        err = err.max(max_relative_error(g.data(), expected));
        offset += g.len();
    }
    assert_eq!(offset, flat.len());
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn attention_gradient_matches_finite_differences() {
    // Gradient through attention alone: rows are the differentiation
    // targets, attention parameters fixed.
    let config = tiny_config();
    let params = init_params(&config, 121);
    let mut rng = ChaCha8Rng::seed_from_u64(122);
    let t_len = 4;
    let dim = config.encoder_dim();
    let rows0: Vec<f64> = (0..t_len * dim).map(|_| rng.random_range(-0.9..0.9)).collect();
    let probe: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();

    let eval = |flat: &[f64]| -> f64 {
        let mut graph = Graph::new();
        let nodes = bind(&mut graph, &params, false);
        let rows: Vec<_> = flat
            .chunks(dim)
            .map(|c| graph.leaf(Tensor::vector(c.to_vec()), true))
            .collect();
        let (attended, _) = attention_forward(&mut graph, &nodes, &rows).unwrap();
        let pr = graph.leaf(Tensor::vector(probe.clone()), false);
        let loss = graph.dot(attended, pr).unwrap();
        graph.value(loss).item()
    };
    let numeric = finite_difference(eval, &rows0, 1e-4);

    let mut graph = Graph::new();
    let nodes = bind(&mut graph, &params, false);
    let rows: Vec<_> = rows0
        .chunks(dim)
        .map(|c| graph.leaf(Tensor::vector(c.to_vec()), true))
        .collect();
    let (attended, _) = attention_forward(&mut graph, &nodes, &rows).unwrap();
    let pr = graph.leaf(Tensor::vector(probe), false);
    let loss = graph.dot(attended, pr).unwrap();
    graph.backward(loss).unwrap();
    let analytic: Vec<f64> = rows
        .iter()
        .flat_map(|&id| graph.grad(id).unwrap().data().to_vec())
        .collect();
    assert!(max_relative_error(&analytic, &numeric) < 1e-4);
}

#[test]
fn heads_project_to_the_requested_dimensions() {
    let config = ModelConfig {
        n_classes: 7,
        n_domains: 4,
        ..tiny_config()
    };
    let params = init_params(&config, 131);
    let mut graph = Graph::new();
    let nodes = bind(&mut graph, &params, false);
    let mut rng = ChaCha8Rng::seed_from_u64(132);
    let features = random_features(&mut rng, 3, config.input_dim);
    let rows = blstm_forward(&mut graph, &nodes, &config, &features).unwrap();
    let (attended, _) = attention_forward(&mut graph, &nodes, &rows).unwrap();
    let e = emotion_head(&mut graph, &nodes, attended).unwrap();
    let d = domain_head(&mut graph, &nodes, attended, 0.007).unwrap();
    assert_eq!(graph.value(e).len(), 7);
    assert_eq!(graph.value(d).len(), 4);
}
