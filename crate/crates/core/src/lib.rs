//! Cross-corpus speech emotion recognition toolkit.
//!
//! The crate covers the full pipeline:
//!
//! - [`corpus`]: manifest ingestion, label normalization, speaker-disjoint
//!   splits, silence trimming, and a synthetic domain-shifted corpus
//!   generator for desk-scale experiments.
//! - [`features`]: log-Mel filterbank (23-dim) and MFCC (13-dim) extraction.
//! - [`autodiff`]: a small reverse-mode tape with the gradient reversal
//!   operation used by domain adversarial training, plus Adam and a
//!   reduce-on-plateau scheduler.
//! - [`model`]: the 2-layer BLSTM encoder with multiplicative attention, an
//!   emotion classifier head, and a domain classifier head behind gradient
//!   reversal.
//! - [`training`]: the five regimes (cross-corpus, multi-domain, DAT,
//!   out-of-domain, adaptation) with epoch-level evaluation and
//!   plateau-scheduled Adam.
//! - [`metrics`]: UA/WA accuracies over per-class binary confusions, with
//!   per-emotion breakdowns and a four-class merged evaluation view.

pub mod autodiff;
pub mod corpus;
pub mod features;
pub(crate) mod kv;
pub mod metrics;
pub mod model;
pub mod seed;
pub mod tensor;
pub mod training;
