//! Dataset ingestion and construction: synthetic Gaussian pools, IDX
//! image/label files, binary relabeling rules, prior control by
//! resampling, and a simple binary matrix file for persisting pools and
//! batches.

mod idx;
mod matrix_file;
mod relabel;

pub use idx::{read_idx_images, read_idx_labels};
pub use matrix_file::{
    read_matrix, read_pool, read_tuple_batch, read_unlabeled, write_matrix, write_pool,
    write_tuple_batch, write_unlabeled,
};
pub use relabel::RelabelRule;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::stats::standard_normal_cdf;
use crate::tuplegen::LabeledPool;

/// Two spherical Gaussian classes: `n_per_class` positives at
/// `mean_plus` followed by `n_per_class` negatives at `mean_minus`,
/// isotropic standard deviation `sigma`.
///
/// Row `i` is drawn from ChaCha stream `(seed, i)` (coordinates in
/// order), so pools are bit-reproducible and row-wise parallelizable.
pub fn gen_gaussians<T: Real>(
    n_per_class: usize,
    mean_plus: &[T],
    mean_minus: &[T],
    sigma: T,
    seed: u64,
) -> Result<LabeledPool<T>> {
    if n_per_class == 0 {
        return Err(Error::Empty("zero samples per class".into()));
    }
    let dim = mean_plus.len();
    if dim == 0 || mean_minus.len() != dim {
        return Err(Error::ShapeMismatch(format!(
            "class means must share a positive dimension, got {dim} and {}",
            mean_minus.len()
        )));
    }
    let sg = sigma.as_f64();
    if !sg.is_finite() || sg <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sg}"
        )));
    }

    let n_total = 2 * n_per_class;
    let mut data = Vec::with_capacity(n_total * dim);
    let mut labels = Vec::with_capacity(n_total);
    for i in 0..n_total {
        let (mean, label): (&[T], i8) = if i < n_per_class {
            (mean_plus, 1)
        } else {
            (mean_minus, -1)
        };
        let mut rng = stream_rng(seed, i as u64);
        for &mu in mean {
            let z: f64 = StandardNormal.sample(&mut rng);
            data.push(mu + T::of(z * sg));
        }
        labels.push(label);
    }
    LabeledPool::new(Matrix::new(n_total, dim, data)?, labels)
}

/// Resample a pool to an exact target prior: `round(pi_plus * n_total)`
/// positives (clamped so both classes keep at least one row), drawn
/// uniformly with replacement from the matching class. Row `i` uses
/// ChaCha stream `(seed, i)`.
pub fn resample_to_prior<T: Real>(
    pool: &LabeledPool<T>,
    pi_plus: T,
    n_total: usize,
    seed: u64,
) -> Result<LabeledPool<T>> {
    let pi = pi_plus.as_f64();
    if !pi.is_finite() || pi <= 0.0 || pi >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "target prior must lie in (0, 1), got {pi}"
        )));
    }
    if n_total < 2 {
        return Err(Error::InvalidArgument(
            "need at least two rows to keep both classes".into(),
        ));
    }
    let n_pos = ((pi * n_total as f64).round() as usize).clamp(1, n_total - 1);
    let dim = pool.dim();
    let mut data = Vec::with_capacity(n_total * dim);
    let mut labels = Vec::with_capacity(n_total);
    for i in 0..n_total {
        let label: i8 = if i < n_pos { 1 } else { -1 };
        let members = pool.class_indices(label);
        let mut rng = stream_rng(seed, i as u64);
        let row = members[rng.random_range(0..members.len())];
        data.extend_from_slice(pool.features().row(row));
        labels.push(label);
    }
    LabeledPool::new(Matrix::new(n_total, dim, data)?, labels)
}

/// Bayes-optimal accuracy of the two-Gaussian problem with equal priors
/// and shared isotropic `sigma`: `Phi(||mean_plus - mean_minus|| /
/// (2 sigma))`.
pub fn bayes_accuracy<T: Real>(mean_plus: &[T], mean_minus: &[T], sigma: T) -> Result<f64> {
    if mean_plus.is_empty() || mean_plus.len() != mean_minus.len() {
        return Err(Error::ShapeMismatch(
            "class means must share a positive dimension".into(),
        ));
    }
    let sg = sigma.as_f64();
    if !sg.is_finite() || sg <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sg}"
        )));
    }
    let dist2: f64 = mean_plus
        .iter()
        .zip(mean_minus)
        .map(|(&a, &b)| {
            let d = (a - b).as_f64();
            d * d
        })
        .sum();
    Ok(standard_normal_cdf(dist2.sqrt() / (2.0 * sg)))
}
