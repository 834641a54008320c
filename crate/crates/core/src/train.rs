//! Mini-batch training of a scoring model against the corrected
//! empirical risk, plus sign-threshold evaluation.
//!
//! Each epoch shuffles both sample arms independently (ChaCha stream
//! `1 + epoch` of the training seed; parameter init uses stream 0 via
//! [`ModelParams::init`]) and walks `max(ceil(n_mdp / b_mdp),
//! ceil(n_u / b_u))` steps. The arm whose shuffled list runs out first
//! cycles modulo its length, so both arms contribute to every step; a
//! batch size larger than the arm simply revisits samples within one
//! batch. Everything is deterministic: a given `(inputs, configs, seed)`
//! reproduces the report bit for bit.
//!
//! Per epoch the report records the mean corrected mini-batch risk seen
//! during optimization, the full-batch raw and corrected risks under the
//! final parameters of the epoch, and test accuracy. Classification is
//! by score sign with `sign(0) = +1`.

use serde::Serialize;

use crate::coeffs::{compute_coefficients, ProblemSpec};
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::matrix::Matrix;
use crate::model::{ModelConfig, ModelParams};
use crate::optim::{OptimConfig, Optimizer};
use crate::risk::{
    correct, corrected_risk_grad, empirical_risk, CorrectionKind, CorrectionScope,
};
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::tuplegen::{MTupleBatch, UnlabeledBatch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub correction: CorrectionKind,
    pub scope: CorrectionScope,
    pub epochs: usize,
    pub batch_mdp: usize,
    pub batch_u: usize,
    pub seed: u64,
}

/// Metrics recorded after each epoch (`epoch` is 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord<T> {
    pub epoch: usize,
    /// Mean corrected risk over the epoch's optimization mini-batches.
    pub minibatch_corrected_mean: T,
    /// Raw (uncorrected) risk on the full training sample.
    pub train_raw: T,
    /// Corrected risk on the full training sample.
    pub train_corrected: T,
    pub test_accuracy: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<T> {
    pub records: Vec<EpochRecord<T>>,
    pub params: ModelParams<T>,
}

/// Sign-threshold accuracy of `params` on a labeled set.
pub fn evaluate<T: Real>(
    params: &ModelParams<T>,
    features: &Matrix<T>,
    labels: &[i8],
) -> Result<T> {
    if features.rows() == 0 {
        return Err(Error::Empty("evaluation set".into()));
    }
    if labels.len() != features.rows() {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} rows",
            labels.len(),
            features.rows()
        )));
    }
    let mut scratch = vec![T::zero(); params.config().scratch_len()];
    let mut correct_count = 0usize;
    for (row, &y) in features.iter_rows().zip(labels) {
        if y != 1 && y != -1 {
            return Err(Error::InvalidArgument(format!("label {y} in test set")));
        }
        let t = params.forward_into(row, &mut scratch);
        let pred: i8 = if t >= T::zero() { 1 } else { -1 };
        if pred == y {
            correct_count += 1;
        }
    }
    Ok(T::of(correct_count as f64 / labels.len() as f64))
}

fn ceil_div(n: usize, b: usize) -> usize {
    n.div_ceil(b)
}

/// Train `model` on one tuple batch plus one unlabeled batch.
///
/// Errors on inconsistent dimensions, a tuple size differing from the
/// spec, zero batch sizes, or an invalid test set. Zero epochs is legal
/// and returns the freshly initialized parameters with no records.
#[allow(clippy::too_many_arguments)]
pub fn train<T: Real>(
    model: &ModelConfig,
    optim: &OptimConfig,
    cfg: &TrainConfig,
    tuples: &MTupleBatch<T>,
    unlabeled: &UnlabeledBatch<T>,
    test_features: &Matrix<T>,
    test_labels: &[i8],
    spec: &ProblemSpec<T>,
) -> Result<TrainReport<T>> {
    let m = spec.m();
    if tuples.m() != m {
        return Err(Error::ShapeMismatch(format!(
            "tuple batch has size-{} tuples but the spec says {m}",
            tuples.m()
        )));
    }
    let dim = model.input_dim;
    if tuples.dim() != dim || unlabeled.dim() != dim || test_features.cols() != dim {
        return Err(Error::ShapeMismatch(format!(
            "model expects dimension {dim}; got tuples {}, unlabeled {}, test {}",
            tuples.dim(),
            unlabeled.dim(),
            test_features.cols()
        )));
    }
    if cfg.batch_mdp == 0 || cfg.batch_u == 0 {
        return Err(Error::InvalidArgument(
            "batch sizes must be positive".into(),
        ));
    }
    if test_labels.len() != test_features.rows() || test_features.rows() == 0 {
        return Err(Error::ShapeMismatch(
            "test labels must match a non-empty test matrix".into(),
        ));
    }

    let coeffs = compute_coefficients(spec);
    let mut params = ModelParams::init(model, cfg.seed);
    let mut optimizer = Optimizer::new(*optim, params.values().len());

    let n_t = tuples.n();
    let n_u = unlabeled.n();
    let (b_t, b_u) = (cfg.batch_mdp, cfg.batch_u);
    let steps = ceil_div(n_t, b_t).max(ceil_div(n_u, b_u));
    let sl = model.scratch_len();

    let mut idx_t: Vec<usize> = (0..n_t).collect();
    let mut idx_u: Vec<usize> = (0..n_u).collect();
    let mut scores_t = vec![T::zero(); b_t * m];
    let mut scores_u = vec![T::zero(); b_u];
    let mut scratch_t = vec![T::zero(); b_t * m * sl];
    let mut scratch_u = vec![T::zero(); b_u * sl];
    let mut batch_t = vec![0usize; b_t];
    let mut batch_u = vec![0usize; b_u];
    let mut grad = vec![T::zero(); params.values().len()];

    let mut records = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = stream_rng(cfg.seed, 1 + epoch as u64);
        {
            use rand::seq::SliceRandom;
            idx_t.shuffle(&mut rng);
            idx_u.shuffle(&mut rng);
        }

        let mut corrected_sum = T::zero();
        for step in 0..steps {
            for r in 0..b_t {
                let ti = idx_t[(step * b_t + r) % n_t];
                batch_t[r] = ti;
                for j in 0..m {
                    let slot = r * m + j;
                    scores_t[slot] = params.forward_into(
                        tuples.position(ti, j),
                        &mut scratch_t[slot * sl..(slot + 1) * sl],
                    );
                }
            }
            for r in 0..b_u {
                let ui = idx_u[(step * b_u + r) % n_u];
                batch_u[r] = ui;
                scores_u[r] = params.forward_into(
                    unlabeled.features().row(ui),
                    &mut scratch_u[r * sl..(r + 1) * sl],
                );
            }

            let g = corrected_risk_grad(
                &scores_t,
                &scores_u,
                cfg.loss,
                &coeffs,
                spec,
                cfg.correction,
                cfg.scope,
            )?;
            corrected_sum += g.report.corrected_total;

            grad.fill(T::zero());
            for r in 0..b_t {
                for j in 0..m {
                    let slot = r * m + j;
                    params.backprop(
                        tuples.position(batch_t[r], j),
                        &scratch_t[slot * sl..(slot + 1) * sl],
                        g.wrt_mdp[slot],
                        &mut grad,
                    );
                }
            }
            for r in 0..b_u {
                params.backprop(
                    unlabeled.features().row(batch_u[r]),
                    &scratch_u[r * sl..(r + 1) * sl],
                    g.wrt_u[r],
                    &mut grad,
                );
            }
            optimizer.step(params.values_mut(), &grad);
        }

        let record = EpochRecord {
            epoch: epoch + 1,
            minibatch_corrected_mean: corrected_sum / T::of(steps as f64),
            ..full_batch_record(&params, cfg, tuples, unlabeled, test_features, test_labels, &coeffs, spec)?
        };
        records.push(record);
    }

    Ok(TrainReport { records, params })
}

/// Full-batch raw/corrected risks and test accuracy under `params`
/// (epoch and mini-batch fields left for the caller).
#[allow(clippy::too_many_arguments)]
fn full_batch_record<T: Real>(
    params: &ModelParams<T>,
    cfg: &TrainConfig,
    tuples: &MTupleBatch<T>,
    unlabeled: &UnlabeledBatch<T>,
    test_features: &Matrix<T>,
    test_labels: &[i8],
    coeffs: &crate::coeffs::Coefficients<T>,
    spec: &ProblemSpec<T>,
) -> Result<EpochRecord<T>> {
    let mut scratch = vec![T::zero(); params.config().scratch_len()];
    let m = spec.m();
    let mut scores_t = Vec::with_capacity(tuples.n() * m);
    for i in 0..tuples.n() {
        for j in 0..m {
            scores_t.push(params.forward_into(tuples.position(i, j), &mut scratch));
        }
    }
    let mut scores_u = Vec::with_capacity(unlabeled.n());
    for row in unlabeled.features().iter_rows() {
        scores_u.push(params.forward_into(row, &mut scratch));
    }
    let report = empirical_risk(&scores_t, &scores_u, cfg.loss, coeffs, spec)?;
    Ok(EpochRecord {
        epoch: 0,
        minibatch_corrected_mean: T::zero(),
        train_raw: report.raw_total,
        train_corrected: correct(&report, cfg.correction, cfg.scope),
        test_accuracy: evaluate(params, test_features, test_labels)?,
    })
}
