//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS line (run with `cargo test -p ser-cli --test acceptance --
//! --nocapture` to see them).
//!
//! Published-scale numbers are not reproducible at desk scale, so the
//! suite combines exact property checks (gradients, metrics, DSP) with
//! direction-only replications of the experimental orderings on synthetic
//! domain-shifted corpora.

use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ser_core::autodiff::gradcheck::{finite_difference, max_relative_error};
use ser_core::autodiff::{softmax, AdamState, Graph};
use ser_core::corpus::{
    generate_synthetic, map_labels, ClassSet, CorpusId, DomainShift, EmotionClass,
    EmotionPrototype, Label, SynthSpec,
};
use ser_core::features::FeatureConfig;
use ser_core::metrics::{
    aggregate_report, confusion_from_predictions, ua, wa, ConfusionCounts, DecisionRule,
    Prediction, Reference,
};
use ser_core::model::checkpoint::{params_from_bytes, params_to_bytes};
use ser_core::model::{
    bind, collect_grads, forward_inference, init_params, model_forward, ForwardMode, ModelConfig,
    ModelParameters,
};
use ser_core::tensor::Tensor;
use ser_core::training::{
    adapt, argmax_accuracy, evaluate, run_cross_corpus, run_dat, run_multidomain, run_ood,
    Dataset, ModelShape, Regime, RunResult, TrainingConfig,
};

fn pass(name: &str) {
    println!("ACCEPTANCE {name}: PASS");
}

// ---------------------------------------------------------------------
// Shared desk-scale fixtures
// ---------------------------------------------------------------------

/// Six well-separated emotion prototypes over four strongly shifted
/// domains.
fn desk_spec(seed: u64, n_speakers: usize, segments_per_emotion: usize) -> SynthSpec {
    let protos = [
        (EmotionClass::Happy, 155.0, 2.0, 1.00),
        (EmotionClass::Sad, 215.0, 3.5, 0.70),
        (EmotionClass::Anger, 300.0, 5.0, 1.25),
        (EmotionClass::Surprise, 420.0, 6.5, 1.00),
        (EmotionClass::Disgust, 590.0, 8.0, 0.85),
        (EmotionClass::Fear, 820.0, 10.0, 1.10),
    ];
    let domains = [
        ("SYNTH_A", 0.0, 0.008),
        ("SYNTH_B", 0.60, 0.040),
        ("SYNTH_C", -0.60, 0.015),
        ("SYNTH_D", 0.35, 0.080),
    ];
    SynthSpec {
        seed,
        sample_rate: 8000,
        duration_s: 0.3,
        n_speakers,
        segments_per_emotion,
        emotions: protos
            .into_iter()
            .map(|(class, f0_hz, am_rate_hz, energy)| EmotionPrototype {
                class,
                f0_hz,
                am_rate_hz,
                energy,
            })
            .collect(),
        domains: domains
            .into_iter()
            .map(|(id, spectral_tilt, noise_level)| DomainShift {
                corpus_id: CorpusId::new(id),
                spectral_tilt,
                noise_level,
            })
            .collect(),
        train_fraction: 0.8,
    }
}

fn desk_dataset(seed: u64, n_speakers: usize, segments: usize) -> Dataset {
    let manifests = generate_synthetic(&desk_spec(seed, n_speakers, segments)).unwrap();
    Dataset::extract(
        &manifests,
        &ClassSet::big_six(),
        false,
        &FeatureConfig::default(),
    )
    .unwrap()
}

fn desk_config(regime: Regime, seed: u64, dataset: &Dataset, epochs: usize) -> TrainingConfig {
    let mut config = TrainingConfig::new(regime, seed);
    config.class_set = dataset.class_set.clone();
    config.train_corpora = dataset.corpus_ids();
    config.eval_corpora = dataset.corpus_ids();
    config.epochs = epochs;
    config.learning_rate = 1e-3;
    config.model = ModelShape {
        hidden: 12,
        layers: 2,
        attn_bottleneck: 6,
    };
    config
}

fn corpus_ua(result: &RunResult, corpus: &CorpusId) -> f64 {
    result
        .report
        .find(corpus)
        .and_then(|r| r.ua)
        .unwrap_or_else(|| panic!("no UA for {corpus}"))
}

// ---------------------------------------------------------------------
// Criterion 1: gradient correctness on the tiny model
// ---------------------------------------------------------------------

#[test]
fn acceptance_gradient_correctness() {
    let start = Instant::now();
    let config = ModelConfig {
        input_dim: 4,
        hidden: 8,
        layers: 2,
        attn_bottleneck: 4,
        n_classes: 3,
        n_domains: 2,
    };
    let params = init_params(&config, 2024);
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    let features = Tensor::matrix(
        5,
        4,
        (0..20).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let (emotion_target, domain_target, lambda) = (1usize, 0usize, 0.007);

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
    // The reversal layer defines the update direction, so the oracle is the
    // objective's sign structure: FD of (L_y - lambda L_d) for the shared
    // encoder and the emotion head, FD of L_d for the domain head.
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

    let n_tensors = grads.len();
    let mut offset = 0;
    let mut worst: f64 = 0.0;
    for (i, g) in grads.iter().enumerate() {
        let expected = if i + 2 >= n_tensors {
            &fd_domain[offset..offset + g.len()]
        } else {
            &fd_objective[offset..offset + g.len()]
        };
        worst = worst.max(max_relative_error(g.data(), expected));
        offset += g.len();
    }
    assert_eq!(offset, flat.len());
    assert!(
        worst < 1e-4,
        "max relative gradient error {worst} over {} parameters",
        flat.len()
    );
    assert!(
        start.elapsed().as_secs() < 60,
        "gradient check exceeded one minute"
    );
    pass("gradient-correctness");
}

// ---------------------------------------------------------------------
// Criterion 2: gradient-reversal law by dual-graph comparison
// ---------------------------------------------------------------------

fn domain_path_grads(
    params: &ModelParameters,
    features: &Tensor,
    target: usize,
    lambda: Option<f64>,
) -> Vec<Tensor> {
    let mut graph = Graph::new();
    let nodes = bind(&mut graph, params, true);
    let logits = match lambda {
        Some(lambda) => model_forward(
            &mut graph,
            &nodes,
            &params.config,
            features,
            ForwardMode::Dat { lambda },
        )
        .unwrap()
        .domain_logits
        .unwrap(),
        None => {
            let out = model_forward(
                &mut graph,
                &nodes,
                &params.config,
                features,
                ForwardMode::Plain,
            )
            .unwrap();
            graph
                .affine(nodes.domain.w, out.attended, nodes.domain.b)
                .unwrap()
        }
    };
    let loss = graph.cross_entropy_loss(logits, target).unwrap();
    graph.backward(loss).unwrap();
    collect_grads(&graph, &nodes)
}

#[test]
fn acceptance_gradient_reversal_law() {
    let config = ModelConfig {
        input_dim: 4,
        hidden: 8,
        layers: 2,
        attn_bottleneck: 4,
        n_classes: 3,
        n_domains: 2,
    };
    let params = init_params(&config, 77);
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let features = Tensor::matrix(
        5,
        4,
        (0..20).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let identity = domain_path_grads(&params, &features, 1, None);
    // Encoder parameters are everything below the two heads.
    let n_encoder = params.layers.len() * 6 + 5;

    for lambda in [0.0, 0.007, 0.014] {
        let reversed = domain_path_grads(&params, &features, 1, Some(lambda));
        for (g_rev, g_id) in reversed.iter().zip(&identity).take(n_encoder) {
            for (r, d) in g_rev.data().iter().zip(g_id.data()) {
                let expected = -lambda * d;
                let tol = 1e-6 * expected.abs().max(r.abs()).max(1e-12);
                assert!(
                    (r - expected).abs() <= tol,
                    "lambda {lambda}: encoder gradient {r} vs -lambda * identity {expected}"
                );
            }
        }
    }
    pass("gradient-reversal-law");
}

// ---------------------------------------------------------------------
// Criterion 3: metric oracle equivalence
// ---------------------------------------------------------------------

#[test]
fn acceptance_metric_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    for trial in 0..100 {
        let n_classes = rng.random_range(1usize..=7);
        let n = rng.random_range(1usize..=50);
        let rule = if trial % 2 == 0 {
            DecisionRule::Argmax
        } else {
            DecisionRule::ThresholdOneVsRest(0.5)
        };
        let mut preds = Vec::new();
        let mut refs = Vec::new();
        for i in 0..n {
            preds.push(Prediction {
                utt_id: format!("u{i}"),
                scores: (0..n_classes).map(|_| rng.random_range(0.0..1.0)).collect(),
            });
            refs.push(Reference {
                utt_id: format!("u{i}"),
                present: (0..n_classes).map(|_| rng.random_bool(0.4)).collect(),
            });
        }
        let got = confusion_from_predictions(&preds, &refs, n_classes, rule).unwrap();

        // Exhaustive independent tally.
        let mut expected = vec![ConfusionCounts::default(); n_classes];
        for (p, r) in preds.iter().zip(&refs) {
            for c in 0..n_classes {
                let decided = match rule {
                    DecisionRule::Argmax => {
                        let mut best = 0;
                        for k in 1..n_classes {
                            if p.scores[k] > p.scores[best] {
                                best = k;
                            }
                        }
                        best == c
                    }
                    DecisionRule::ThresholdOneVsRest(t) => p.scores[c] >= t,
                };
                match (decided, r.present[c]) {
                    (true, true) => expected[c].tp += 1,
                    (true, false) => expected[c].fp += 1,
                    (false, true) => expected[c].fn_ += 1,
                    (false, false) => expected[c].tn += 1,
                }
            }
        }
        assert_eq!(got, expected, "trial {trial}");

        // ua/wa and report aggregation against the same tally, exactly.
        let classes: Vec<EmotionClass> =
            EmotionClass::ALL.into_iter().take(n_classes).collect();
        let set = ClassSet::custom(classes);
        let report = aggregate_report(&got, &set, CorpusId::new("X"), None);
        let mut uas = Vec::new();
        let mut was = Vec::new();
        for c in &expected {
            if c.p() + c.n() > 0 {
                uas.push((c.tp + c.tn) as f64 / (c.p() + c.n()) as f64);
            }
            if c.p() > 0 && c.n() > 0 {
                was.push(0.5 * (c.tp as f64 / c.p() as f64 + c.tn as f64 / c.n() as f64));
            }
        }
        match report {
            Ok(r) => {
                for (i, c) in expected.iter().enumerate() {
                    assert_eq!(r.per_class[i].ua, ua(c).ok(), "trial {trial} class {i}");
                    assert_eq!(r.per_class[i].wa, wa(c).ok(), "trial {trial} class {i}");
                }
                let mean = |v: &[f64]| {
                    if v.is_empty() {
                        None
                    } else {
                        Some(v.iter().sum::<f64>() / v.len() as f64)
                    }
                };
                assert_eq!(r.ua, mean(&uas), "trial {trial}");
                assert_eq!(r.wa, mean(&was), "trial {trial}");
            }
            Err(_) => assert!(uas.is_empty() && was.is_empty(), "trial {trial}"),
        }
    }

    // Always-positive predictor with P = N: WA is exactly one half.
    let always = ConfusionCounts {
        tp: 25,
        fp: 25,
        tn: 0,
        fn_: 0,
    };
    assert_eq!(wa(&always).unwrap(), 0.5);
    pass("metric-oracle-equivalence");
}

// ---------------------------------------------------------------------
// Criterion 4: DSP correctness
// ---------------------------------------------------------------------

#[test]
fn acceptance_dsp_correctness() {
    use ser_core::features::{frame_signal, hz_to_mel, log_mel, mel_filterbank_matrix, mfcc};

    // MFCC against the O(n^2) orthonormal DCT-II oracle.
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    for _ in 0..500 {
        let x: Vec<f64> = (0..23).map(|_| rng.random_range(-10.0..10.0)).collect();
        let got = mfcc(&x, 13).unwrap();
        for (k, g) in got.iter().enumerate() {
            let scale = if k == 0 {
                (1.0 / 23.0f64).sqrt()
            } else {
                (2.0 / 23.0f64).sqrt()
            };
            let oracle: f64 = scale
                * x.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        v * (std::f64::consts::PI * (2.0 * i as f64 + 1.0) * k as f64 / 46.0)
                            .cos()
                    })
                    .sum::<f64>();
            assert!((g - oracle).abs() < 1e-10, "{g} vs {oracle}");
        }
    }

    // Mel scale anchor points.
    assert_eq!(hz_to_mel(0.0), 0.0);
    assert!((hz_to_mel(700.0) - 781.17).abs() < 1e-2);

    // Frame-count formula exact over a randomized sweep.
    for _ in 0..300 {
        let frame = rng.random_range(2usize..400);
        let hop = rng.random_range(1usize..=frame);
        let len = rng.random_range(frame..8000);
        let frames = frame_signal(&vec![0.0; len], frame, hop).unwrap();
        assert_eq!(frames.len(), 1 + (len - frame) / hop);
    }

    // log_mel is finite for arbitrary non-negative spectra.
    let config = FeatureConfig {
        n_fft: Some(256),
        ..FeatureConfig::default()
    };
    let fbank = mel_filterbank_matrix(&config, 8000).unwrap();
    for trial in 0..200 {
        let spec: Vec<f64> = (0..fbank.cols())
            .map(|i| {
                if (i + trial) % 5 == 0 {
                    0.0
                } else {
                    rng.random_range(0.0..1e9)
                }
            })
            .collect();
        let lm = log_mel(&spec, &fbank, 1e-10).unwrap();
        assert!(lm.iter().all(|v| v.is_finite()));
    }
    pass("dsp-correctness");
}

// ---------------------------------------------------------------------
// Criterion 5: attention normalization
// ---------------------------------------------------------------------

#[test]
fn acceptance_attention_normalization() {
    let config = ModelConfig {
        input_dim: 5,
        hidden: 6,
        layers: 2,
        attn_bottleneck: 4,
        n_classes: 3,
        n_domains: 2,
    };
    let params = init_params(&config, 501);
    let mut rng = ChaCha8Rng::seed_from_u64(502);
    for t_len in [1usize, 2, 17, 301] {
        let features = Tensor::matrix(
            t_len,
            5,
            (0..t_len * 5).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let out = forward_inference(&params, &features, ForwardMode::Plain).unwrap();
        let weights = out.encoder.attention_weights;
        assert_eq!(weights.len(), t_len);
        assert!(weights.data().iter().all(|&w| w >= 0.0));
        let sum: f64 = weights.data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-6, "T={t_len}: sum {sum}");
    }

    // Identical timestep vectors (the rows attention pools over) give
    // uniform weights.
    let mut graph = Graph::new();
    let nodes = bind(&mut graph, &params, false);
    let row: Vec<f64> = (0..config.encoder_dim())
        .map(|_| rng.random_range(-0.9..0.9))
        .collect();
    let t_len = 13;
    let rows: Vec<_> = (0..t_len)
        .map(|_| graph.leaf(Tensor::vector(row.clone()), false))
        .collect();
    let (_, weights) = ser_core::model::attention_forward(&mut graph, &nodes, &rows).unwrap();
    for &w in graph.value(weights).data() {
        assert!((w - 1.0 / t_len as f64).abs() < 1e-9);
    }
    pass("attention-normalization");
}

// ---------------------------------------------------------------------
// Criterion 6: desk-scale matched learning
// ---------------------------------------------------------------------

#[test]
fn acceptance_desk_scale_matched_learning() {
    let start = Instant::now();
    // 10 speakers x 4 segments = 40 utterances per emotion per domain.
    let dataset = desk_dataset(601, 10, 4);
    let matched = CorpusId::new("SYNTH_A");
    let mut config = desk_config(Regime::CrossCorpus, 601, &dataset, 12);
    config.train_corpora = vec![matched.clone()];
    config.eval_corpora = vec![matched.clone()];
    assert!(config.epochs <= 50);

    let result = run_cross_corpus(&config, &dataset).unwrap();
    let corpus = dataset.corpus(&matched).unwrap();
    let accuracy = argmax_accuracy(&result.checkpoint.params, corpus).unwrap();
    let elapsed = start.elapsed();
    assert!(
        accuracy >= 0.90,
        "matched accuracy {accuracy:.3} on held-out speakers after {} epochs",
        config.epochs
    );
    assert!(
        elapsed.as_secs() < 900,
        "matched learning took {elapsed:?}, budget is 15 minutes"
    );
    println!(
        "  matched accuracy {accuracy:.3} in {} epochs ({elapsed:?})",
        config.epochs
    );
    pass("desk-scale-matched-learning");
}

// ---------------------------------------------------------------------
// Criterion 7: direction-only replication of the orderings
// ---------------------------------------------------------------------

struct SeedGrid {
    corpora: Vec<CorpusId>,
    cc: Vec<RunResult>,
    md: RunResult,
    ood: Vec<RunResult>,
    adapted: Vec<RunResult>,
}

fn run_seed_grid(seed: u64) -> SeedGrid {
    let dataset = desk_dataset(seed, 5, 2);
    let corpora = dataset.corpus_ids();
    let epochs = 8;

    let cc: Vec<RunResult> = corpora
        .iter()
        .map(|corpus| {
            let mut config = desk_config(Regime::CrossCorpus, seed, &dataset, epochs);
            config.train_corpora = vec![corpus.clone()];
            run_cross_corpus(&config, &dataset).unwrap()
        })
        .collect();

    let md = {
        let config = desk_config(Regime::MultiDomain, seed, &dataset, epochs);
        run_multidomain(&config, &dataset).unwrap()
    };

    let mut ood = Vec::new();
    let mut adapted = Vec::new();
    for held_out in &corpora {
        let mut config = desk_config(Regime::OutOfDomain, seed, &dataset, epochs);
        config.train_corpora = corpora.iter().filter(|c| *c != held_out).cloned().collect();
        config.adapt_corpus = Some(held_out.clone());
        let base = run_ood(&config, &dataset).unwrap();

        let mut adapt_config = desk_config(Regime::Adapt, seed, &dataset, epochs);
        adapt_config.train_corpora = vec![held_out.clone()];
        adapt_config.adapt_corpus = Some(held_out.clone());
        let adapted_run = adapt(&base.checkpoint, &adapt_config, &dataset).unwrap();
        ood.push(base);
        adapted.push(adapted_run);
    }

    SeedGrid {
        corpora,
        cc,
        md,
        ood,
        adapted,
    }
}

#[test]
fn acceptance_direction_orderings() {
    let seeds = [701u64, 702, 703, 704, 705];
    let mut matched_best = 0usize;
    let mut md_beats_best_mismatched = 0usize;
    let mut ood_above_worst_mismatched = 0usize;
    let mut adapt_improves = 0usize;

    for &seed in &seeds {
        let grid = run_seed_grid(seed);
        let n = grid.corpora.len();

        // (a) Matched condition best within each CC row.
        let a = (0..n).all(|m| {
            let matched = corpus_ua(&grid.cc[m], &grid.corpora[m]);
            (0..n)
                .filter(|&e| e != m)
                .all(|e| matched >= corpus_ua(&grid.cc[m], &grid.corpora[e]))
        });

        // (b) MD beats the best mismatched CC result on each domain.
        let b = (0..n).all(|e| {
            let best_mismatched = (0..n)
                .filter(|&m| m != e)
                .map(|m| corpus_ua(&grid.cc[m], &grid.corpora[e]))
                .fold(f64::NEG_INFINITY, f64::max);
            corpus_ua(&grid.md, &grid.corpora[e]) > best_mismatched
        });

        // (c) OOD on the held-out domain at least matches the worst
        // mismatched CC result there.
        let c = (0..n).all(|e| {
            let worst_mismatched = (0..n)
                .filter(|&m| m != e)
                .map(|m| corpus_ua(&grid.cc[m], &grid.corpora[e]))
                .fold(f64::INFINITY, f64::min);
            corpus_ua(&grid.ood[e], &grid.corpora[e]) >= worst_mismatched
        });

        // (d) Adaptation improves on its OOD base on the held-out domain.
        let d = (0..n).all(|e| {
            corpus_ua(&grid.adapted[e], &grid.corpora[e])
                > corpus_ua(&grid.ood[e], &grid.corpora[e])
        });

        println!(
            "  seed {seed}: matched-best={a} md-beats-best={b} ood-floor={c} adapt-gain={d}"
        );
        matched_best += a as usize;
        md_beats_best_mismatched += b as usize;
        ood_above_worst_mismatched += c as usize;
        adapt_improves += d as usize;
    }

    let majority = seeds.len() / 2 + 1;
    assert!(
        matched_best >= majority,
        "matched >= mismatched held in {matched_best}/{} seeds",
        seeds.len()
    );
    assert!(
        md_beats_best_mismatched >= majority,
        "MD > best mismatched held in {md_beats_best_mismatched}/{} seeds",
        seeds.len()
    );
    assert!(
        ood_above_worst_mismatched >= majority,
        "OOD >= worst mismatched held in {ood_above_worst_mismatched}/{} seeds",
        seeds.len()
    );
    assert!(
        adapt_improves >= majority,
        "ADAPT > OOD base held in {adapt_improves}/{} seeds",
        seeds.len()
    );
    pass("direction-orderings");
}

// ---------------------------------------------------------------------
// Criterion 8: DAT domain-confusion property
// ---------------------------------------------------------------------

/// Attended vectors of every utterance under frozen parameters, with
/// domain labels: (train set, held-out set).
type ProbeData = (Vec<(Vec<f64>, usize)>, Vec<(Vec<f64>, usize)>);

fn probe_data(params: &ModelParameters, dataset: &Dataset) -> ProbeData {
    let mut train = Vec::new();
    let mut held_out = Vec::new();
    for (domain, corpus) in dataset.corpora.iter().enumerate() {
        let mut seen = std::collections::BTreeSet::new();
        for item in &corpus.train {
            // Expansion can duplicate utterances; embed each once.
            if seen.insert(item.utt_id.clone()) {
                let out = forward_inference(params, &item.features, ForwardMode::Plain).unwrap();
                train.push((out.encoder.attended.data().to_vec(), domain));
            }
        }
        for item in &corpus.eval {
            let out = forward_inference(params, &item.features, ForwardMode::Plain).unwrap();
            held_out.push((out.encoder.attended.data().to_vec(), domain));
        }
    }
    (train, held_out)
}

/// Softmax-regression domain probe on frozen representations.
fn probe_accuracy(train: &[(Vec<f64>, usize)], test: &[(Vec<f64>, usize)], seed: u64) -> f64 {
    let dim = train[0].0.len();
    let n_domains = train.iter().map(|(_, d)| d + 1).max().unwrap();
    let mut w = Tensor::zeros(&[n_domains, dim]);
    let mut b = Tensor::zeros(&[n_domains]);
    let mut adam = AdamState::new(0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _epoch in 0..30 {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng);
        for idx in order {
            let (x, domain) = &train[idx];
            let mut graph = Graph::new();
            let wn = graph.leaf(w.clone(), true);
            let bn = graph.leaf(b.clone(), true);
            let xn = graph.leaf(Tensor::vector(x.clone()), false);
            let logits = graph.affine(wn, xn, bn).unwrap();
            let loss = graph.cross_entropy_loss(logits, *domain).unwrap();
            graph.backward(loss).unwrap();
            let gw = graph.grad(wn).unwrap().clone();
            let gb = graph.grad(bn).unwrap().clone();
            adam.begin_step();
            adam.update_param(0, "probe.w", &mut w, &gw).unwrap();
            adam.update_param(1, "probe.b", &mut b, &gb).unwrap();
        }
    }

    let mut correct = 0usize;
    for (x, domain) in test {
        let mut scores = b.data().to_vec();
        for (r, s) in scores.iter_mut().enumerate() {
            *s += w.row(r).iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
        }
        let probs = softmax(&scores);
        if ser_core::metrics::argmax_lowest(&probs) == *domain {
            correct += 1;
        }
    }
    correct as f64 / test.len() as f64
}

#[test]
fn acceptance_dat_domain_confusion() {
    let seeds = [801u64, 802, 803, 804, 805];
    let mut confused = 0usize;
    for &seed in &seeds {
        let dataset = desk_dataset(seed, 5, 2);
        let epochs = 10;

        let mut dat_config = desk_config(Regime::Dat, seed, &dataset, epochs);
        dat_config.lambda = 0.007;
        let adversarial = run_dat(&dat_config, &dataset).unwrap();

        let mut plain_config = desk_config(Regime::Dat, seed, &dataset, epochs);
        plain_config.lambda = 0.0;
        let baseline = run_dat(&plain_config, &dataset).unwrap();

        let (adv_train, adv_test) = probe_data(&adversarial.checkpoint.params, &dataset);
        let (base_train, base_test) = probe_data(&baseline.checkpoint.params, &dataset);
        let adv_acc = probe_accuracy(&adv_train, &adv_test, seed);
        let base_acc = probe_accuracy(&base_train, &base_test, seed);
        println!(
            "  seed {seed}: probe accuracy lambda=0.007 {adv_acc:.3} vs lambda=0 {base_acc:.3}"
        );
        if adv_acc < base_acc {
            confused += 1;
        }
    }
    assert!(
        confused >= 4,
        "domain probe was weaker under DAT in only {confused}/5 runs"
    );
    pass("dat-domain-confusion");
}

// ---------------------------------------------------------------------
// Criterion 9: reproducibility
// ---------------------------------------------------------------------

#[test]
fn acceptance_reproducibility() {
    // Byte-identical logs from the real binary run twice.
    let dir = tempfile::tempdir().unwrap();
    let spec_text = "\
seed = 11\nsample_rate = 8000\nduration_s = 0.3\nn_speakers = 3\n\
segments_per_emotion = 2\ntrain_fraction = 0.8\n\
emotion.happy = 180,3.0,1.0\nemotion.sad = 420,7.0,0.8\n\
domain.SYNTH_A = 0.0,0.01\ndomain.SYNTH_B = 0.5,0.04\n";
    std::fs::write(dir.path().join("spec.cfg"), spec_text).unwrap();
    let run_config = "\
regime = CC\nseed = 5\ntrain_corpora = SYNTH_A\neval_corpora = SYNTH_A,SYNTH_B\n\
class_set = happy,sad\nepochs = 3\nlr = 0.001\nhidden = 8\nlayers = 2\n\
attn_bottleneck = 4\nmanifest.SYNTH_A = corpus/SYNTH_A.tsv\n\
manifest.SYNTH_B = corpus/SYNTH_B.tsv\n";
    std::fs::write(dir.path().join("run.cfg"), run_config).unwrap();

    let ser = env!("CARGO_BIN_EXE_ser");
    let run = |args: &[&str]| {
        let output = Command::new(ser)
            .current_dir(dir.path())
            .args(args)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    };
    run(&["synth", "--spec", "spec.cfg", "--out", "corpus"]);
    run(&["train", "--config", "run.cfg", "--out", "r1"]);
    run(&["train", "--config", "run.cfg", "--out", "r2"]);
    for file in ["epochs.tsv", "report.tsv", "checkpoint.bin", "checkpoint.meta"] {
        let a = std::fs::read(dir.path().join("r1").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("r2").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }

    // Checkpoint save/load round trip reproduces UA/WA exactly, at the
    // library level.
    let dataset = desk_dataset(901, 3, 1);
    let mut config = desk_config(Regime::MultiDomain, 901, &dataset, 2);
    config.epochs = 2;
    let result = run_multidomain(&config, &dataset).unwrap();
    let reloaded = params_from_bytes(
        &params_to_bytes(&result.checkpoint.params),
        &result.checkpoint.params.config,
    )
    .unwrap();
    let report = evaluate(
        &reloaded,
        &dataset,
        &config.eval_corpora,
        result.report.provenance.clone(),
    )
    .unwrap();
    assert_eq!(report, result.report);
    pass("reproducibility");
}

// ---------------------------------------------------------------------
// Criterion 10: label-pipeline counts
// ---------------------------------------------------------------------

#[test]
fn acceptance_label_pipeline_counts() {
    // A manifest mirroring the published per-class segment counts.
    let counts = [
        ("happy", 595usize),
        ("sad", 1084),
        ("anger", 1103),
        ("surprise", 107),
        ("disgust", 2),
        ("fear", 40),
        ("neutral", 1708),
        ("frustration", 1849),
        ("excitement", 1041),
        ("other", 3),
    ];
    let iem4 = ClassSet::iem4();
    let mut happy = 0usize;
    let mut total = 0usize;
    for (name, n) in counts {
        for i in 0..n {
            let utt = ser_core::corpus::Utterance {
                id: format!("{name}_{i}"),
                corpus_id: CorpusId::new("IEM"),
                speaker_id: format!("s{}", i % 10),
                split: ser_core::corpus::Split::Train,
                labels: vec![Label::new(name, 1)],
                audio: ser_core::corpus::AudioRef::Inline(std::sync::Arc::new(vec![0.0; 8])),
                sample_rate: Some(16000),
            };
            let mapped = map_labels(&utt, &iem4).unwrap();
            if mapped
                .labels
                .iter()
                .any(|l| l.name == "happy" && l.is_present())
            {
                happy += 1;
            }
            total += 1;
        }
    }
    assert_eq!(total, 7532);
    assert_eq!(happy, 1636, "the four-class merge must yield 1636 happy segments");
    pass("label-pipeline-counts");
}
