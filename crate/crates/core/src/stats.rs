//! Small numeric utilities shared across modules: deterministic
//! summation, moments, a least-squares slope, and the distribution
//! quantiles used by statistical checks.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::scalar::Real;

/// Length at or below which summation falls back to a sequential fold.
const PAIRWISE_LEAF: usize = 32;

/// Sum with a fixed binary-tree reduction order.
///
/// The tree layout depends only on `xs.len()`, so the result is
/// bit-identical across runs and platforms regardless of how the caller
/// produced the slice. The pairwise order also keeps rounding error at
/// O(log n) instead of O(n) for the long, mixed-sign reductions the risk
/// estimators perform.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    if xs.len() <= PAIRWISE_LEAF {
        return xs.iter().copied().fold(T::zero(), |acc, x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean via [`pairwise_sum`]. Panics on an empty slice.
pub fn mean<T: Real>(xs: &[T]) -> T {
    assert!(!xs.is_empty(), "mean of empty slice");
    pairwise_sum(xs) / T::of(xs.len() as f64)
}

/// Unbiased sample standard deviation (n - 1 denominator); 0 for slices
/// with fewer than two elements.
pub fn sample_std<T: Real>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let mu = mean(xs);
    let sq: Vec<T> = xs.iter().map(|&x| (x - mu) * (x - mu)).collect();
    (pairwise_sum(&sq) / T::of((xs.len() - 1) as f64)).sqrt()
}

/// Ordinary least-squares slope of `y` against `x`. Panics if lengths
/// differ or fewer than two points are given; returns 0 when all `x`
/// coincide.
pub fn ols_slope<T: Real>(x: &[T], y: &[T]) -> T {
    assert_eq!(x.len(), y.len(), "ols_slope: length mismatch");
    assert!(x.len() >= 2, "ols_slope: need at least two points");
    let mx = mean(x);
    let my = mean(y);
    let num: Vec<T> = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (xi - mx) * (yi - my))
        .collect();
    let den: Vec<T> = x.iter().map(|&xi| (xi - mx) * (xi - mx)).collect();
    let den = pairwise_sum(&den);
    if den == T::zero() {
        return T::zero();
    }
    pairwise_sum(&num) / den
}

/// Upper critical value of the chi-squared distribution: the point with
/// `1 - alpha` mass below it, for `df` degrees of freedom.
pub fn chi_squared_critical(df: usize, alpha: f64) -> f64 {
    assert!(df >= 1, "chi_squared_critical: df must be >= 1");
    assert!(
        alpha > 0.0 && alpha < 1.0,
        "chi_squared_critical: alpha must lie in (0, 1)"
    );
    ChiSquared::new(df as f64)
        .expect("valid degrees of freedom")
        .inverse_cdf(1.0 - alpha)
}

/// Standard normal CDF.
pub fn standard_normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").cdf(x)
}
