//! Unsupervised k-means baseline over tuple feature vectors.
//!
//! Each m-tuple is one clustering row (the concatenation of its m
//! member feature vectors), clustered into K = 2 groups by Lloyd's
//! algorithm with k-means++ seeding and restarts. To score test points,
//! each tuple centroid is split back into its m per-position segments
//! and averaged into a point-space centroid; a test point takes the
//! label of its nearer centroid under whichever cluster-to-class
//! mapping scores better. This gives a label-free reference accuracy
//! that any trained model should beat.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::tuplegen::MTupleBatch;

/// Lloyd iteration cap per restart.
const MAX_ITERS: usize = 50;
/// Squared centroid movement below which a restart has converged.
const MOVEMENT_TOL: f64 = 1e-12;

/// Converged two-cluster solution in tuple space.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansBaseline<T> {
    /// Two centroids, each of length `m * dim`.
    pub centroids: [Vec<T>; 2],
    /// Sum of squared distances to assigned centroids.
    pub inertia: T,
    /// Cluster index (0 or 1) per tuple.
    pub assignments: Vec<usize>,
    /// Lloyd iterations used by the winning restart.
    pub iterations: usize,
}

/// Test-set score of the baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport<T> {
    /// Accuracy under the better cluster-to-class mapping.
    pub accuracy: T,
    /// Class assigned to cluster 0 by that mapping (+1 or -1).
    pub mapping_cluster0: i8,
    pub inertia: T,
    pub iterations: usize,
}

fn squared_distance<T: Real>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        let diff = a - b;
        acc += diff * diff;
    }
    acc
}

/// k-means++ style seeding: first centroid uniform, second drawn with
/// probability proportional to squared distance from the first. Falls
/// back to the farthest row if all mass is at the first centroid.
fn seed_centroids<T: Real>(rows: &[&[T]], rng: &mut impl Rng) -> [Vec<T>; 2] {
    let first = rows[rng.random_range(0..rows.len())].to_vec();
    let dists: Vec<f64> = rows
        .iter()
        .map(|r| squared_distance(r, &first).as_f64())
        .collect();
    let total: f64 = dists.iter().sum();
    let second = if total > 0.0 {
        let mut u = rng.random::<f64>() * total;
        let mut pick = rows.len() - 1;
        for (i, &d) in dists.iter().enumerate() {
            if u < d {
                pick = i;
                break;
            }
            u -= d;
        }
        rows[pick].to_vec()
    } else {
        // Degenerate data: every row equals the first.
        first.clone()
    };
    [first, second]
}

fn lloyd<T: Real>(rows: &[&[T]], rng: &mut impl Rng) -> KMeansBaseline<T> {
    let width = rows[0].len();
    let mut centroids = seed_centroids(rows, rng);
    let mut assignments = vec![0usize; rows.len()];
    let mut iterations = 0;
    for _ in 0..MAX_ITERS {
        iterations += 1;
        // Assignment step.
        for (i, row) in rows.iter().enumerate() {
            let d0 = squared_distance(row, &centroids[0]);
            let d1 = squared_distance(row, &centroids[1]);
            assignments[i] = usize::from(d1 < d0);
        }
        // Update step.
        let mut sums = [vec![T::zero(); width], vec![T::zero(); width]];
        let mut counts = [0usize; 2];
        for (i, row) in rows.iter().enumerate() {
            let c = assignments[i];
            counts[c] += 1;
            for (s, &x) in sums[c].iter_mut().zip(*row) {
                *s += x;
            }
        }
        // Re-seed an empty cluster with the row farthest from its
        // current centroid so both clusters stay populated.
        for c in 0..2 {
            if counts[c] == 0 {
                let far = rows
                    .iter()
                    .enumerate()
                    .max_by(|(_, x), (_, y)| {
                        squared_distance(x, &centroids[1 - c])
                            .partial_cmp(&squared_distance(y, &centroids[1 - c]))
                            .expect("finite distances")
                    })
                    .map(|(i, _)| i)
                    .expect("non-empty rows");
                sums[c] = rows[far].to_vec();
                counts[c] = 1;
            }
        }
        let mut movement = 0.0f64;
        for c in 0..2 {
            let inv = T::one() / T::of(counts[c] as f64);
            let new: Vec<T> = sums[c].iter().map(|&s| s * inv).collect();
            movement = movement.max(squared_distance(&new, &centroids[c]).as_f64());
            centroids[c] = new;
        }
        if movement < MOVEMENT_TOL {
            break;
        }
    }
    // Final assignment and inertia against the converged centroids.
    let mut inertia = T::zero();
    for (i, row) in rows.iter().enumerate() {
        let d0 = squared_distance(row, &centroids[0]);
        let d1 = squared_distance(row, &centroids[1]);
        assignments[i] = usize::from(d1 < d0);
        inertia += if assignments[i] == 0 { d0 } else { d1 };
    }
    KMeansBaseline {
        centroids,
        inertia,
        assignments,
        iterations,
    }
}

/// Cluster the tuples of a batch into two groups, keeping the best of
/// `restarts` independent runs by inertia. Restart `r` uses ChaCha
/// stream `r` of `seed`.
pub fn cluster_tuples<T: Real>(
    batch: &MTupleBatch<T>,
    restarts: usize,
    seed: u64,
) -> Result<KMeansBaseline<T>> {
    if batch.n() < 2 {
        return Err(Error::Empty(
            "k-means needs at least two tuples".into(),
        ));
    }
    assert!(restarts >= 1, "restarts must be positive, got {restarts}");
    let rows: Vec<&[T]> = (0..batch.n()).map(|i| batch.tuple(i)).collect();
    let mut best: Option<KMeansBaseline<T>> = None;
    for r in 0..restarts {
        let mut rng = stream_rng(seed, r as u64);
        let run = lloyd(&rows, &mut rng);
        let better = best
            .as_ref()
            .map_or(true, |b| run.inertia < b.inertia);
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Average the m per-position segments of each tuple centroid into a
/// point-space centroid of length `dim`.
pub fn point_centroids<T: Real>(solution: &KMeansBaseline<T>, m: usize, dim: usize) -> [Vec<T>; 2] {
    assert!(m >= 1 && dim >= 1);
    let mut out = [vec![T::zero(); dim], vec![T::zero(); dim]];
    let inv_m = T::one() / T::of(m as f64);
    for c in 0..2 {
        assert_eq!(
            solution.centroids[c].len(),
            m * dim,
            "centroid length {} != m * dim = {}",
            solution.centroids[c].len(),
            m * dim
        );
        for j in 0..m {
            let seg = &solution.centroids[c][j * dim..(j + 1) * dim];
            for (acc, &x) in out[c].iter_mut().zip(seg) {
                *acc += x * inv_m;
            }
        }
    }
    out
}

/// Cluster the training tuples, then score labeled test points by
/// nearest point-space centroid under the better of the two possible
/// cluster-to-class mappings.
pub fn evaluate_baseline<T: Real>(
    batch: &MTupleBatch<T>,
    test_features: &Matrix<T>,
    test_labels: &[i8],
    restarts: usize,
    seed: u64,
) -> Result<BaselineReport<T>> {
    if test_features.rows() == 0 {
        return Err(Error::Empty("empty test set".into()));
    }
    if test_features.rows() != test_labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} test rows vs {} labels",
            test_features.rows(),
            test_labels.len()
        )));
    }
    if test_features.cols() != batch.dim() {
        return Err(Error::ShapeMismatch(format!(
            "test dim {} vs tuple member dim {}",
            test_features.cols(),
            batch.dim()
        )));
    }
    let solution = cluster_tuples(batch, restarts, seed)?;
    let centroids = point_centroids(&solution, batch.m(), batch.dim());

    let mut correct_if_cluster0_positive = 0usize;
    for (i, &label) in test_labels.iter().enumerate() {
        let row = test_features.row(i);
        let d0 = squared_distance(row, &centroids[0]);
        let d1 = squared_distance(row, &centroids[1]);
        let cluster = usize::from(d1 < d0);
        let predicted = if cluster == 0 { 1i8 } else { -1 };
        if predicted == label {
            correct_if_cluster0_positive += 1;
        }
    }
    let n = test_labels.len();
    // The opposite mapping gets exactly the complementary count.
    let (correct, mapping_cluster0) = if correct_if_cluster0_positive * 2 >= n {
        (correct_if_cluster0_positive, 1i8)
    } else {
        (n - correct_if_cluster0_positive, -1i8)
    };
    Ok(BaselineReport {
        accuracy: T::of(correct as f64 / n as f64),
        mapping_cluster0,
        inertia: solution.inertia,
        iterations: solution.iterations,
    })
}
