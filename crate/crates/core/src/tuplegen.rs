//! Exact samplers for dominant-positive tuple batches and unlabeled
//! batches, drawing from a labeled pool.
//!
//! Tuple generation follows the two-stage factorization of the
//! conditioned label distribution: first the negative count `k` is drawn
//! from `p_k`, then the `k` negative positions are placed uniformly among
//! the `C(m, k)` admissible subsets, and finally each position is filled
//! with a uniform with-replacement draw from the matching class of the
//! pool (repeats inside one tuple are allowed). This reproduces the
//! target distribution exactly rather than by rejection.
//!
//! Determinism: sample `i` of a batch is drawn from the ChaCha stream
//! `(seed, stream = i)` via [`crate::rng::stream_rng`]. Chunking the
//! index range across threads therefore cannot change the output, and a
//! given `(pool, spec, n, seed)` always yields bit-identical batches.
//!
//! True labels ride along inside the batches but are private: training
//! code only sees features, while the statistics helpers in this module
//! (and sibling verification code) may aggregate them.

use rand::Rng;

use crate::coeffs::{compute_coefficients, ProblemSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::stats::pairwise_sum;

/// Labeled feature pool with both classes present.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPool<T> {
    features: Matrix<T>,
    labels: Vec<i8>,
    pos_idx: Vec<usize>,
    neg_idx: Vec<usize>,
}

impl<T: Real> LabeledPool<T> {
    /// Errors if label and feature counts disagree, a label is outside
    /// {-1, +1}, or either class is absent.
    pub fn new(features: Matrix<T>, labels: Vec<i8>) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.rows()
            )));
        }
        let mut pos_idx = Vec::new();
        let mut neg_idx = Vec::new();
        for (i, &y) in labels.iter().enumerate() {
            match y {
                1 => pos_idx.push(i),
                -1 => neg_idx.push(i),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "label at row {i} must be +1 or -1, got {other}"
                    )))
                }
            }
        }
        if pos_idx.is_empty() {
            return Err(Error::MissingClass("no positive examples".into()));
        }
        if neg_idx.is_empty() {
            return Err(Error::MissingClass("no negative examples".into()));
        }
        Ok(Self {
            features,
            labels,
            pos_idx,
            neg_idx,
        })
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn n_positive(&self) -> usize {
        self.pos_idx.len()
    }

    pub fn n_negative(&self) -> usize {
        self.neg_idx.len()
    }

    /// Fraction of positive rows.
    pub fn empirical_prior(&self) -> T {
        T::of(self.n_positive() as f64 / self.len() as f64)
    }

    pub(crate) fn class_indices(&self, label: i8) -> &[usize] {
        if label == 1 {
            &self.pos_idx
        } else {
            &self.neg_idx
        }
    }
}

/// A batch of `n` dominant-positive tuples of `m` feature vectors each.
///
/// Features are stored flat as `n x (m * dim)`, positions contiguous, so
/// a whole tuple is one contiguous slice. The true per-position labels
/// are private; see the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct MTupleBatch<T> {
    m: usize,
    dim: usize,
    features: Vec<T>,
    hidden_labels: Vec<i8>,
}

impl<T: Real> MTupleBatch<T> {
    /// Reassemble a batch from raw parts (the deserialization path).
    /// Validates shapes, label values, and dominance of every tuple.
    pub fn from_parts(
        m: usize,
        dim: usize,
        features: Vec<T>,
        hidden_labels: Vec<i8>,
    ) -> Result<Self> {
        if m == 0 || dim == 0 {
            return Err(Error::InvalidArgument(
                "tuple size and feature dimension must be positive".into(),
            ));
        }
        if hidden_labels.len() % m != 0 || features.len() != hidden_labels.len() * dim {
            return Err(Error::ShapeMismatch(format!(
                "{} feature values / {} labels do not form tuples of size {m} at dim {dim}",
                features.len(),
                hidden_labels.len()
            )));
        }
        for (i, tuple) in hidden_labels.chunks_exact(m).enumerate() {
            let mut margin = 0i64;
            for &y in tuple {
                match y {
                    1 => margin += 1,
                    -1 => margin -= 1,
                    other => {
                        return Err(Error::InvalidArgument(format!(
                            "tuple {i} contains label {other}"
                        )))
                    }
                }
            }
            if margin < 0 {
                return Err(Error::InvalidArgument(format!(
                    "tuple {i} violates positive dominance (margin {margin})"
                )));
            }
        }
        Ok(Self {
            m,
            dim,
            features,
            hidden_labels,
        })
    }

    pub fn n(&self) -> usize {
        self.hidden_labels.len() / self.m
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Feature vector of position `j` of tuple `i`.
    pub fn position(&self, i: usize, j: usize) -> &[T] {
        assert!(i < self.n() && j < self.m, "position ({i}, {j}) out of range");
        let start = (i * self.m + j) * self.dim;
        &self.features[start..start + self.dim]
    }

    /// All `m` position vectors of tuple `i`, concatenated.
    pub fn tuple(&self, i: usize) -> &[T] {
        assert!(i < self.n(), "tuple {i} out of range");
        let w = self.m * self.dim;
        &self.features[i * w..(i + 1) * w]
    }

    /// Flat `n x m x dim` feature buffer.
    pub fn features_flat(&self) -> &[T] {
        &self.features
    }

    pub(crate) fn hidden_labels(&self) -> &[i8] {
        &self.hidden_labels
    }
}

/// A batch of unlabeled points (their true labels are retained privately
/// for verification statistics only).
#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledBatch<T> {
    features: Matrix<T>,
    hidden_labels: Vec<i8>,
}

impl<T: Real> UnlabeledBatch<T> {
    pub fn from_parts(features: Matrix<T>, hidden_labels: Vec<i8>) -> Result<Self> {
        if hidden_labels.len() != features.rows() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} rows",
                hidden_labels.len(),
                features.rows()
            )));
        }
        if let Some(&bad) = hidden_labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(Error::InvalidArgument(format!("label {bad} in batch")));
        }
        Ok(Self {
            features,
            hidden_labels,
        })
    }

    pub fn features(&self) -> &Matrix<T> {
        &self.features
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Fraction of truly positive points (verification statistic).
    pub fn positive_fraction(&self) -> T {
        let n = self.n().max(1);
        let pos = self.hidden_labels.iter().filter(|&&y| y == 1).count();
        T::of(pos as f64 / n as f64)
    }

    pub(crate) fn hidden_labels(&self) -> &[i8] {
        &self.hidden_labels
    }
}

/// Draw the negative count from `p_k` by CDF inversion. Rounding in the
/// cumulative sum is absorbed by the final bucket.
fn draw_negative_count<T: Real>(p_k: &[T], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in p_k.iter().enumerate() {
        acc += p.as_f64();
        if u < acc {
            return k;
        }
    }
    p_k.len() - 1
}

/// Uniform size-`k` subset of `0..m` via a partial Fisher-Yates pass,
/// returned as a position mask.
fn draw_negative_positions(m: usize, k: usize, rng: &mut impl Rng) -> Vec<bool> {
    let mut order: Vec<usize> = (0..m).collect();
    for j in 0..k {
        let swap = rng.random_range(j..m);
        order.swap(j, swap);
    }
    let mut mask = vec![false; m];
    for &p in &order[..k] {
        mask[p] = true;
    }
    mask
}

/// Sample `n` dominant-positive tuples from `pool` under `spec`.
///
/// Errors if `n` is zero or the pool's feature dimension is zero; the
/// pool itself guarantees both classes are available. See the module
/// docs for the sampling scheme and determinism contract.
pub fn sample_mdp_tuples<T: Real>(
    pool: &LabeledPool<T>,
    spec: &ProblemSpec<T>,
    n: usize,
    seed: u64,
) -> Result<MTupleBatch<T>> {
    if n == 0 {
        return Err(Error::Empty("requested zero tuples".into()));
    }
    let m = spec.m();
    let dim = pool.dim();
    let p_k = compute_coefficients(spec).p_k;

    let mut features = Vec::with_capacity(n * m * dim);
    let mut labels = Vec::with_capacity(n * m);
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let k = draw_negative_count(&p_k, &mut rng);
        let neg_mask = draw_negative_positions(m, k, &mut rng);
        for &is_neg in &neg_mask {
            let label: i8 = if is_neg { -1 } else { 1 };
            let members = pool.class_indices(label);
            let row = members[rng.random_range(0..members.len())];
            features.extend_from_slice(pool.features().row(row));
            labels.push(label);
        }
    }
    MTupleBatch::from_parts(m, dim, features, labels)
}

/// Sample `n` unlabeled points: label from `Bernoulli(pi_plus)`, then a
/// uniform with-replacement draw from that class of the pool. Same
/// per-sample stream discipline as [`sample_mdp_tuples`].
pub fn sample_unlabeled<T: Real>(
    pool: &LabeledPool<T>,
    pi_plus: T,
    n: usize,
    seed: u64,
) -> Result<UnlabeledBatch<T>> {
    if n == 0 {
        return Err(Error::Empty("requested zero unlabeled points".into()));
    }
    let pi = pi_plus.as_f64();
    if !(0.0..=1.0).contains(&pi) || !pi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "prior must lie in [0, 1], got {pi}"
        )));
    }
    let dim = pool.dim();
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let label: i8 = if rng.random::<f64>() < pi { 1 } else { -1 };
        let members = pool.class_indices(label);
        let row = members[rng.random_range(0..members.len())];
        data.extend_from_slice(pool.features().row(row));
        labels.push(label);
    }
    UnlabeledBatch::from_parts(Matrix::new(n, dim, data)?, labels)
}

/// Label statistics of a tuple batch, aggregated from the hidden labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionStats<T> {
    /// Fraction of positives at each of the `m` positions; each should
    /// concentrate around the marginal coefficient `a`.
    pub positive_fraction: Vec<T>,
    /// `negative_count_hist[k]` = number of tuples with exactly `k`
    /// negatives, `k = 0 ..= floor(m/2)`.
    pub negative_count_hist: Vec<usize>,
    /// Minimum over tuples of `(#positives - #negatives)`; dominance
    /// means this is never below 0 (never below 1 for odd `m`).
    pub min_dominance_margin: i64,
}

/// Aggregate per-position label statistics. Errors on an empty batch.
pub fn empirical_position_stats<T: Real>(batch: &MTupleBatch<T>) -> Result<PositionStats<T>> {
    let n = batch.n();
    if n == 0 {
        return Err(Error::Empty("tuple batch".into()));
    }
    let m = batch.m();
    let mut pos_counts = vec![0usize; m];
    let mut hist = vec![0usize; m / 2 + 1];
    let mut min_margin = i64::MAX;
    for tuple in batch.hidden_labels().chunks_exact(m) {
        let mut negs = 0usize;
        for (j, &y) in tuple.iter().enumerate() {
            if y == 1 {
                pos_counts[j] += 1;
            } else {
                negs += 1;
            }
        }
        hist[negs] += 1;
        let margin = (m - negs) as i64 - negs as i64;
        min_margin = min_margin.min(margin);
    }
    let positive_fraction = pos_counts
        .iter()
        .map(|&c| T::of(c as f64 / n as f64))
        .collect();
    Ok(PositionStats {
        positive_fraction,
        negative_count_hist: hist,
        min_dominance_margin: min_margin,
    })
}

/// Chi-squared goodness-of-fit statistic of a batch's negative-count
/// histogram against the exact `p_k` of `spec`.
pub fn negative_count_chi_squared<T: Real>(
    batch: &MTupleBatch<T>,
    spec: &ProblemSpec<T>,
) -> Result<f64> {
    if batch.m() != spec.m() {
        return Err(Error::ShapeMismatch(format!(
            "batch tuple size {} vs spec {}",
            batch.m(),
            spec.m()
        )));
    }
    let stats = empirical_position_stats(batch)?;
    let p_k = compute_coefficients(spec).p_k;
    let n = batch.n() as f64;
    let mut chi2 = 0.0;
    for (k, &obs) in stats.negative_count_hist.iter().enumerate() {
        let expected = n * p_k[k].as_f64();
        // Exact zero-probability bins must stay empty; that is checked
        // by dominance already, so skip them here.
        if expected > 0.0 {
            let dev = obs as f64 - expected;
            chi2 += dev * dev / expected;
        }
    }
    Ok(chi2)
}

/// Mean positive fraction across positions (helper for coarse checks).
pub fn mean_positive_fraction<T: Real>(stats: &PositionStats<T>) -> T {
    pairwise_sum(&stats.positive_fraction) / T::of(stats.positive_fraction.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::compute_coefficients;

    /// Pool where the feature value encodes the class: +10 rows are
    /// positive, -10 rows negative. Lets tests confirm that features
    /// and hidden labels stay consistent.
    fn signed_pool(n_pos: usize, n_neg: usize) -> LabeledPool<f64> {
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n_pos {
            data.push(10.0);
            labels.push(1);
        }
        for _ in 0..n_neg {
            data.push(-10.0);
            labels.push(-1);
        }
        LabeledPool::new(Matrix::new(n_pos + n_neg, 1, data).unwrap(), labels).unwrap()
    }

    fn spec(pi: f64, m: usize) -> ProblemSpec<f64> {
        ProblemSpec::new(pi, m).unwrap()
    }

    #[test]
    fn pool_validation() {
        let m = Matrix::new(2, 1, vec![1.0_f64, 2.0]).unwrap();
        assert!(matches!(
            LabeledPool::new(m.clone(), vec![1, 1]),
            Err(Error::MissingClass(_))
        ));
        assert!(matches!(
            LabeledPool::new(m.clone(), vec![-1, -1]),
            Err(Error::MissingClass(_))
        ));
        assert!(matches!(
            LabeledPool::new(m.clone(), vec![1, 0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            LabeledPool::new(m, vec![1]),
            Err(Error::ShapeMismatch(_))
        ));
        let pool = signed_pool(3, 1);
        assert_eq!(pool.n_positive(), 3);
        assert_eq!(pool.n_negative(), 1);
        assert_eq!(pool.empirical_prior(), 0.75);
    }

    #[test]
    fn every_tuple_satisfies_dominance() {
        let pool = signed_pool(40, 40);
        for m in [1usize, 2, 3, 4, 5] {
            let batch = sample_mdp_tuples(&pool, &spec(0.4, m), 2000, 9).unwrap();
            let stats = empirical_position_stats(&batch).unwrap();
            let floor = if m % 2 == 0 { 0 } else { 1 };
            assert!(
                stats.min_dominance_margin >= floor,
                "m={m}: margin {}",
                stats.min_dominance_margin
            );
            // No tuple may carry more than floor(m/2) negatives.
            assert_eq!(stats.negative_count_hist.len(), m / 2 + 1);
            assert_eq!(stats.negative_count_hist.iter().sum::<usize>(), 2000);
        }
    }

    #[test]
    fn singleton_tuples_are_all_positive() {
        let pool = signed_pool(10, 10);
        let batch = sample_mdp_tuples(&pool, &spec(0.3, 1), 500, 4).unwrap();
        let stats = empirical_position_stats(&batch).unwrap();
        assert_eq!(stats.positive_fraction, vec![1.0]);
        assert_eq!(stats.negative_count_hist, vec![500]);
        assert!(batch.features_flat().iter().all(|&x| x == 10.0));
    }

    #[test]
    fn features_track_hidden_labels() {
        let pool = signed_pool(25, 25);
        let batch = sample_mdp_tuples(&pool, &spec(0.5, 3), 300, 21).unwrap();
        for i in 0..batch.n() {
            for j in 0..batch.m() {
                let y = batch.hidden_labels()[i * batch.m() + j];
                let x = batch.position(i, j)[0];
                assert_eq!(x.signum() as i8, y, "tuple {i} position {j}");
            }
        }
        let u = sample_unlabeled(&pool, 0.6, 200, 3).unwrap();
        for i in 0..u.n() {
            assert_eq!(u.features().row(i)[0].signum() as i8, u.hidden_labels()[i]);
        }
    }

    #[test]
    fn identical_seeds_reproduce_bit_identical_batches() {
        let pool = signed_pool(30, 20);
        let s = spec(0.45, 2);
        let a = sample_mdp_tuples(&pool, &s, 400, 77).unwrap();
        let b = sample_mdp_tuples(&pool, &s, 400, 77).unwrap();
        assert_eq!(a, b);
        let c = sample_mdp_tuples(&pool, &s, 400, 78).unwrap();
        assert_ne!(a, c);

        let ua = sample_unlabeled(&pool, 0.45, 400, 77).unwrap();
        let ub = sample_unlabeled(&pool, 0.45, 400, 77).unwrap();
        assert_eq!(ua, ub);
    }

    #[test]
    fn prefixes_agree_across_batch_sizes() {
        // Per-sample streams mean a longer batch extends a shorter one.
        let pool = signed_pool(30, 20);
        let s = spec(0.45, 2);
        let short = sample_mdp_tuples(&pool, &s, 100, 5).unwrap();
        let long = sample_mdp_tuples(&pool, &s, 250, 5).unwrap();
        assert_eq!(
            short.features_flat(),
            &long.features_flat()[..short.features_flat().len()]
        );
        assert_eq!(
            short.hidden_labels(),
            &long.hidden_labels()[..short.hidden_labels().len()]
        );
    }

    #[test]
    fn tiny_pool_samples_with_replacement() {
        let pool = signed_pool(1, 1);
        let batch = sample_mdp_tuples(&pool, &spec(0.5, 4), 50, 1).unwrap();
        assert_eq!(batch.n(), 50);
        let u = sample_unlabeled(&pool, 0.5, 50, 1).unwrap();
        assert_eq!(u.n(), 50);
    }

    #[test]
    fn empty_requests_are_rejected() {
        let pool = signed_pool(5, 5);
        assert!(matches!(
            sample_mdp_tuples(&pool, &spec(0.5, 2), 0, 1),
            Err(Error::Empty(_))
        ));
        assert!(matches!(
            sample_unlabeled(&pool, 0.5, 0, 1),
            Err(Error::Empty(_))
        ));
        let empty = MTupleBatch::<f64>::from_parts(2, 1, vec![], vec![]).unwrap();
        assert!(matches!(
            empirical_position_stats(&empty),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn from_parts_rejects_dominance_violations() {
        assert!(matches!(
            MTupleBatch::from_parts(2, 1, vec![1.0, 2.0], vec![-1, -1]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            MTupleBatch::from_parts(3, 1, vec![1.0, 2.0, 3.0], vec![1, -1, -1]),
            Err(Error::InvalidArgument(_))
        ));
        // A legal all-positive pair passes and reports fraction 1.
        let b = MTupleBatch::from_parts(2, 1, vec![1.0, 2.0], vec![1, 1]).unwrap();
        let stats = empirical_position_stats(&b).unwrap();
        assert_eq!(stats.positive_fraction, vec![1.0, 1.0]);
        assert_eq!(stats.min_dominance_margin, 2);
    }

    #[test]
    fn position_fractions_concentrate_near_marginal_coefficient() {
        let pool = signed_pool(500, 500);
        let s = spec(0.5, 2);
        let n = 20_000;
        let batch = sample_mdp_tuples(&pool, &s, n, 123).unwrap();
        let stats = empirical_position_stats(&batch).unwrap();
        let a = compute_coefficients(&s).a;
        let sigma = (a * (1.0 - a) / n as f64).sqrt();
        for (j, &frac) in stats.positive_fraction.iter().enumerate() {
            assert!(
                (frac - a).abs() <= 3.0 * sigma,
                "position {j}: fraction {frac} vs a={a} (3 sigma = {})",
                3.0 * sigma
            );
        }
        assert!((mean_positive_fraction(&stats) - a).abs() <= 3.0 * sigma);
    }

    #[test]
    fn unlabeled_fraction_tracks_prior() {
        let pool = signed_pool(500, 500);
        let n = 20_000;
        let u = sample_unlabeled(&pool, 0.6, n, 2024).unwrap();
        let sigma = (0.6_f64 * 0.4 / n as f64).sqrt();
        assert!((u.positive_fraction() - 0.6).abs() <= 3.0 * sigma);
    }

    #[test]
    fn chi_squared_statistic_is_small_for_exact_sampler() {
        let pool = signed_pool(200, 200);
        let s = spec(0.45, 3);
        let batch = sample_mdp_tuples(&pool, &s, 50_000, 31).unwrap();
        let chi2 = negative_count_chi_squared(&batch, &s).unwrap();
        // One degree of freedom (two bins); 10.83 is the 0.001 critical
        // value — a correct sampler lands far below it almost surely.
        assert!(chi2 < 10.83, "chi2 = {chi2}");
    }
}
