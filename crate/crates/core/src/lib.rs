//! Weakly supervised binary classification from dominant m-tuples and
//! unlabeled points.
//!
//! The supervision model: instead of labeled examples, training data
//! arrives as unordered m-tuples of feature vectors that are only known
//! to contain at least as many positives as negatives ("dominant"
//! tuples), plus a pool of plain unlabeled points. This crate provides
//! everything needed to train and audit classifiers in that setting:
//!
//! - [`coeffs`] — the tuple-position mixture coefficients `a`, `b`, the
//!   inversion denominator `d` and the truncation normalizer `z`, in
//!   closed form with exact integer binomials;
//! - [`tuplegen`] — samplers that turn a labeled pool into dominant
//!   tuples and unlabeled draws, with per-sample RNG streams;
//! - [`losses`] / [`risk`] — margin losses, their tuple and unlabeled
//!   transforms, and the unbiased risk estimator with optional
//!   non-negativity corrections and analytic gradients;
//! - [`model`] / [`optim`] / [`train`] — linear and one-hidden-layer
//!   models with hand-written backprop, SGD/momentum and Adam, and a
//!   deterministic minibatch training loop;
//! - [`datasets`] — synthetic Gaussian pools, IDX image ingestion,
//!   label-to-sign relabeling rules and a small binary matrix format;
//! - [`oracle`] — brute-force enumeration routes that certify the
//!   closed-form algebra, estimator unbiasedness, sampler fidelity and
//!   the estimator's convergence rate;
//! - [`kmeans`] — an unsupervised clustering baseline over tuples.
//!
//! All numeric code is generic over [`scalar::Real`] (implemented for
//! `f32` and `f64`); the `*64` aliases at the crate root fix the
//! default double-precision instantiation. Every random routine takes
//! an explicit seed and is bit-for-bit reproducible.

pub mod coeffs;
pub mod datasets;
pub mod error;
pub mod kmeans;
pub mod losses;
pub mod matrix;
pub mod model;
pub mod optim;
pub mod oracle;
pub mod risk;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod train;
pub mod tuplegen;

pub use error::{Error, Result};
pub use losses::LossKind;
pub use model::{ModelConfig, ModelKind};
pub use optim::{OptimAlgorithm, OptimConfig};
pub use risk::{CorrectionKind, CorrectionScope};
pub use scalar::Real;
pub use train::TrainConfig;

/// Double-precision problem specification.
pub type ProblemSpec64 = coeffs::ProblemSpec<f64>;
/// Double-precision mixture coefficients.
pub type Coefficients64 = coeffs::Coefficients<f64>;
/// Double-precision row-major matrix.
pub type Matrix64 = matrix::Matrix<f64>;
/// Double-precision labeled pool.
pub type LabeledPool64 = tuplegen::LabeledPool<f64>;
/// Double-precision dominant-tuple batch.
pub type MTupleBatch64 = tuplegen::MTupleBatch<f64>;
/// Double-precision unlabeled batch.
pub type UnlabeledBatch64 = tuplegen::UnlabeledBatch<f64>;
/// Double-precision risk report.
pub type RiskReport64 = risk::RiskReport<f64>;
/// Double-precision model parameters.
pub type ModelParams64 = model::ModelParams<f64>;
/// Double-precision optimizer state.
pub type Optimizer64 = optim::Optimizer<f64>;
/// Double-precision training report.
pub type TrainReport64 = train::TrainReport<f64>;
/// Double-precision discrete verification toy.
pub type DiscreteToy64 = oracle::DiscreteToy<f64>;
