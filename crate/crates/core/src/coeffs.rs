//! Exact distribution coefficients for dominant-positive M-tuples.
//!
//! A tuple of `m` labels is *dominant-positive* when at least half its
//! entries are `+1`, i.e. the negative count `k` satisfies
//! `k <= floor(m / 2)`. Conditioning i.i.d. labels with prior `pi_plus`
//! on that event yields, in closed form:
//!
//! - the normalizer `z = sum_k C(m, k) pi_plus^(m-k) pi_minus^k`,
//! - the marginal probability `a` that any fixed tuple position is
//!   positive (and `b = 1 - a` that it is negative),
//! - the denominator `d = a*pi_minus - b*pi_plus`, which telescopes to a
//!   single strictly positive term,
//! - the distribution `p_k` of the negative count.
//!
//! Binomial coefficients are computed exactly in integer arithmetic and
//! only then converted to the floating scalar, so the sums here are exact
//! up to rounding of the final products.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest supported tuple size. `C(64, 32)` still fits comfortably in
/// `u128`, and tuples anywhere near this size have no practical use.
pub const MAX_TUPLE_SIZE: usize = 64;

/// Validated problem description: class prior `pi_plus` in (0, 1) and
/// tuple size `1 <= m <= MAX_TUPLE_SIZE`. Construction is the single
/// domain gate; code holding a `ProblemSpec` may assume both invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemSpec<T> {
    pi_plus: T,
    m: usize,
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(pi_plus: T, m: usize) -> Result<Self> {
        if !pi_plus.is_finite() || pi_plus <= T::zero() || pi_plus >= T::one() {
            return Err(Error::InvalidSpec(format!(
                "class prior must lie strictly inside (0, 1), got {pi_plus}"
            )));
        }
        if m < 1 || m > MAX_TUPLE_SIZE {
            return Err(Error::InvalidSpec(format!(
                "tuple size must lie in 1..={MAX_TUPLE_SIZE}, got {m}"
            )));
        }
        Ok(Self { pi_plus, m })
    }

    pub fn pi_plus(&self) -> T {
        self.pi_plus
    }

    pub fn pi_minus(&self) -> T {
        T::one() - self.pi_plus
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Largest admissible negative count, `floor(m / 2)`.
    pub fn max_negatives(&self) -> usize {
        self.m / 2
    }
}

/// Closed-form quantities derived from a [`ProblemSpec`]; see the module
/// docs for definitions. Produced only by [`compute_coefficients`], so
/// `a + b = 1` (up to rounding), `d > 0`, and `p_k` sums to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficients<T> {
    /// Marginal probability that a tuple position carries a positive.
    pub a: T,
    /// Marginal probability that a tuple position carries a negative.
    pub b: T,
    /// Denominator `a*pi_minus - b*pi_plus`, strictly positive.
    pub d: T,
    /// Probability that `m` i.i.d. labels form a dominant-positive tuple.
    pub z: T,
    /// `p_k[k]` = probability of exactly `k` negatives, `k <= m/2`.
    pub p_k: Vec<T>,
}

/// Exact binomial coefficient `C(n, k)` in integer arithmetic.
///
/// Uses the multiplicative form with stepwise exact division (each prefix
/// product of `j` consecutive integers is divisible by `j!`), so no
/// intermediate exceeds `C(n, k) * n`. Returns 0 for `k > n`.
pub fn binomial_exact(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn binomial<T: Real>(n: u32, k: u32) -> T {
    T::of(binomial_exact(n, k) as f64)
}

/// Evaluate all closed-form coefficients for `spec`.
pub fn compute_coefficients<T: Real>(spec: &ProblemSpec<T>) -> Coefficients<T> {
    let m = spec.m();
    let kmax = spec.max_negatives();
    let (pp, pm) = (spec.pi_plus(), spec.pi_minus());

    // Unnormalized weight of the "exactly k negatives" slice.
    let slice = |k: usize| pp.powi((m - k) as i32) * pm.powi(k as i32);

    let mut z = T::zero();
    let mut a_num = T::zero();
    let mut b_num = T::zero();
    for k in 0..=kmax {
        let w = slice(k);
        z += binomial::<T>(m as u32, k as u32) * w;
        a_num += binomial::<T>(m as u32 - 1, k as u32) * w;
        if k >= 1 {
            b_num += binomial::<T>(m as u32 - 1, k as u32 - 1) * w;
        }
    }

    let a = a_num / z;
    let b = b_num / z;
    // `a*pi_minus - b*pi_plus` telescopes to one positive boundary term;
    // evaluating that product directly keeps `d` strictly positive even
    // where the difference would cancel to rounding noise (extreme
    // priors or large m can push the true value below 1e-18).
    let d = binomial::<T>(m as u32 - 1, kmax as u32) * slice(kmax) * pm / z;
    let p_k = (0..=kmax)
        .map(|k| binomial::<T>(m as u32, k as u32) * slice(k) / z)
        .collect();

    Coefficients { a, b, d, z, p_k }
}

/// The telescoped single-term form of the denominator:
/// `d = C(m-1, floor(m/2)) * pi_plus^(m - floor(m/2)) *
/// pi_minus^(floor(m/2) + 1) / z`.
///
/// All interior terms of `a*pi_minus - b*pi_plus` cancel pairwise,
/// leaving this boundary term — manifestly positive for any prior in
/// (0, 1), which is what makes the estimator's division by `d` safe.
pub fn closed_form_denominator<T: Real>(spec: &ProblemSpec<T>) -> T {
    let m = spec.m();
    let kmax = spec.max_negatives();
    let (pp, pm) = (spec.pi_plus(), spec.pi_minus());
    let numer = binomial::<T>(m as u32 - 1, kmax as u32)
        * pp.powi((m - kmax) as i32)
        * pm.powi(kmax as i32 + 1);
    numer / compute_coefficients(spec).z
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(pi: f64, m: usize) -> ProblemSpec<f64> {
        ProblemSpec::new(pi, m).unwrap()
    }

    #[test]
    fn binomial_exact_known_values() {
        assert_eq!(binomial_exact(0, 0), 1);
        assert_eq!(binomial_exact(5, 0), 1);
        assert_eq!(binomial_exact(6, 2), 15);
        assert_eq!(binomial_exact(10, 3), 120);
        assert_eq!(binomial_exact(20, 10), 184_756);
        assert_eq!(binomial_exact(64, 32), 1_832_624_140_942_590_534);
        assert_eq!(binomial_exact(3, 5), 0);
    }

    #[test]
    fn binomial_exact_row_sums_are_powers_of_two() {
        for n in 0..=30u32 {
            let total: u128 = (0..=n).map(|k| binomial_exact(n, k)).sum();
            assert_eq!(total, 1u128 << n, "row {n}");
        }
    }

    #[test]
    fn spec_rejects_out_of_domain_inputs() {
        assert!(ProblemSpec::new(0.0_f64, 2).is_err());
        assert!(ProblemSpec::new(1.0_f64, 2).is_err());
        assert!(ProblemSpec::new(-0.3_f64, 2).is_err());
        assert!(ProblemSpec::new(f64::NAN, 2).is_err());
        assert!(ProblemSpec::new(0.5_f64, 0).is_err());
        assert!(ProblemSpec::new(0.5_f64, MAX_TUPLE_SIZE + 1).is_err());
        assert!(ProblemSpec::new(0.5_f64, MAX_TUPLE_SIZE).is_ok());
    }

    #[test]
    fn pair_size_two_uniform_prior() {
        let c = compute_coefficients(&spec(0.5, 2));
        assert!((c.a - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.b - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.d - 1.0 / 6.0).abs() < 1e-15);
        assert!((c.z - 0.75).abs() < 1e-15);
        assert_eq!(c.p_k.len(), 2);
        assert!((c.p_k[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.p_k[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn triple_uniform_prior() {
        let c = compute_coefficients(&spec(0.5, 3));
        assert!((c.a - 0.75).abs() < 1e-15);
        assert!((c.b - 0.25).abs() < 1e-15);
        assert!((c.d - 0.25).abs() < 1e-15);
        assert!((c.z - 0.5).abs() < 1e-15);
        assert_eq!(c.p_k.len(), 2);
        assert!((c.p_k[0] - 0.25).abs() < 1e-15);
        assert!((c.p_k[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn pair_size_two_skewed_prior() {
        let c = compute_coefficients(&spec(0.4, 2));
        assert!((c.a - 0.625).abs() < 1e-15);
        assert!((c.b - 0.375).abs() < 1e-15);
        assert!((c.d - 0.225).abs() < 1e-15);
        assert!((c.z - 0.64).abs() < 1e-15);
    }

    #[test]
    fn singleton_tuples_are_plain_positive_data() {
        // m = 1 admits no negatives: every "tuple" is a labeled positive.
        for pi in [0.1, 0.5, 0.9] {
            let c = compute_coefficients(&spec(pi, 1));
            assert!((c.a - 1.0).abs() < 1e-15);
            assert_eq!(c.b, 0.0);
            assert!((c.d - (1.0 - pi)).abs() < 1e-15);
            assert!((c.z - pi).abs() < 1e-15);
            assert_eq!(c.p_k, vec![1.0]);
        }
    }

    #[test]
    fn explicit_small_m_formulas_agree() {
        // m = 2: a = (p^2 + p q) / (p^2 + 2 p q), b = p q / (p^2 + 2 p q).
        // m = 3: a = (p^3 + 2 p^2 q) / (p^3 + 3 p^2 q),
        //        b = p^2 q / (p^3 + 3 p^2 q).
        for pi in [0.05, 0.2, 0.4, 0.5, 0.6, 0.8, 0.95] {
            let q = 1.0 - pi;
            let c2 = compute_coefficients(&spec(pi, 2));
            let z2 = pi * pi + 2.0 * pi * q;
            assert!((c2.a - (pi * pi + pi * q) / z2).abs() < 1e-14, "pi={pi}");
            assert!((c2.b - pi * q / z2).abs() < 1e-14, "pi={pi}");

            let c3 = compute_coefficients(&spec(pi, 3));
            let z3 = pi.powi(3) + 3.0 * pi * pi * q;
            assert!(
                (c3.a - (pi.powi(3) + 2.0 * pi * pi * q) / z3).abs() < 1e-14,
                "pi={pi}"
            );
            assert!((c3.b - pi * pi * q / z3).abs() < 1e-14, "pi={pi}");
        }
    }

    #[test]
    fn closed_form_denominator_matches_difference_form() {
        // The difference form a*pi_minus - b*pi_plus carries ~1e-16 of
        // cancellation noise (a, b are O(1)), so the comparison is
        // absolute; where d is large the relative gap must also vanish.
        for m in 1..=MAX_TUPLE_SIZE {
            for pi in [0.05, 0.25, 0.5, 0.75, 0.95] {
                let s = spec(pi, m);
                let c = compute_coefficients(&s);
                let difference = c.a * s.pi_minus() - c.b * s.pi_plus();
                assert!(
                    (c.d - difference).abs() <= 1e-14,
                    "m={m} pi={pi}: closed form {} vs difference form {difference}",
                    c.d
                );
                // Relative agreement is only testable where d dwarfs the
                // ~1e-16 cancellation noise of the difference form.
                if c.d > 1e-3 {
                    assert!(
                        (c.d - difference).abs() <= 1e-12 * c.d,
                        "m={m} pi={pi}: relative gap too large ({} vs {difference})",
                        c.d
                    );
                }
                assert!(
                    (c.d - closed_form_denominator(&s)).abs() <= 1e-15 * c.d,
                    "m={m} pi={pi}: helper disagrees with coefficients"
                );
            }
        }
    }

    #[test]
    fn prior_near_one_degenerates_towards_plain_positive_labels() {
        // As the positive prior grows, negatives become rare inside
        // dominant tuples: b must shrink monotonically toward 0.
        let mut last_b = f64::INFINITY;
        for pi in [0.5, 0.7, 0.9, 0.99, 0.999, 0.999_9] {
            let c = compute_coefficients(&spec(pi, 4));
            assert!(c.b < last_b, "b not decreasing at pi={pi}");
            last_b = c.b;
        }
        assert!(last_b < 1e-3);
    }

    #[test]
    fn f32_instantiation_agrees_with_f64_at_f32_precision() {
        let c64 = compute_coefficients(&spec(0.4, 5));
        let c32 = compute_coefficients(&ProblemSpec::<f32>::new(0.4, 5).unwrap());
        assert!((c32.a as f64 - c64.a).abs() < 1e-6);
        assert!((c32.b as f64 - c64.b).abs() < 1e-6);
        assert!((c32.d as f64 - c64.d).abs() < 1e-6);
        assert!((c32.z as f64 - c64.z).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn marginals_sum_to_one_and_denominator_positive(
            pi in 0.001_f64..0.999,
            m in 1usize..=MAX_TUPLE_SIZE,
        ) {
            let c = compute_coefficients(&spec(pi, m));
            prop_assert!((c.a + c.b - 1.0).abs() < 1e-12);
            prop_assert!(c.d > 0.0, "d = {} must be strictly positive", c.d);
            prop_assert!(c.z > 0.0 && c.z <= 1.0 + 1e-12);
        }

        #[test]
        fn negative_count_distribution_sums_to_one(
            pi in 0.001_f64..0.999,
            m in 1usize..=MAX_TUPLE_SIZE,
        ) {
            let c = compute_coefficients(&spec(pi, m));
            prop_assert_eq!(c.p_k.len(), m / 2 + 1);
            let total: f64 = c.p_k.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(c.p_k.iter().all(|&p| p >= 0.0));
        }
    }
}
