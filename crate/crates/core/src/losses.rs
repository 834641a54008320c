//! Margin losses and their tuple-level / pointwise transforms.
//!
//! [`base_loss`] evaluates a primitive margin loss `l(t, z)` on score `t`
//! and label `z`. The two derived forms implement the estimator algebra:
//!
//! - [`mdp_loss`]: `(l(t, +1) - l(t, -1)) / d`, applied to every position
//!   of a dominant-positive tuple;
//! - [`u_loss`]: `((-b*pi_plus) * l(t, +1) + (a*pi_minus) * l(t, -1)) /
//!   d`, applied to every unlabeled point.
//!
//! Averaging those two forms over their samples reconstructs the ordinary
//! supervised risk in expectation; the oracle certifies that identity.
//!
//! Derivatives are with respect to the score. For the piecewise-linear
//! losses the subgradient at a kink is the left limit in the margin
//! `u = t*z` (flat-side 0 at ramp's outer kink, slope -1 at the hinge
//! kinks), so gradients are deterministic everywhere.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coeffs::Coefficients;
use crate::error::Error;
use crate::scalar::Real;

/// The four supported margin losses.
///
/// With margin `u = t*z`:
/// logistic `ln(1 + e^-u)`, ramp `min(1, max(0, 1 - u))`,
/// squared `(u - 1)^2 / 4`, hinge `max(0, 1 - u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    Logistic,
    Ramp,
    Squared,
    Hinge,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Logistic,
        LossKind::Ramp,
        LossKind::Squared,
        LossKind::Hinge,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::Ramp => "ramp",
            LossKind::Squared => "squared",
            LossKind::Hinge => "hinge",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "logistic" => Ok(LossKind::Logistic),
            "ramp" => Ok(LossKind::Ramp),
            "squared" => Ok(LossKind::Squared),
            "hinge" => Ok(LossKind::Hinge),
            other => Err(Error::Parse(format!(
                "unknown loss {other:?}; expected one of logistic|ramp|squared|hinge"
            ))),
        }
    }
}

fn margin<T: Real>(t: T, z: i8) -> T {
    assert!(t.is_finite(), "loss evaluated on non-finite score {t}");
    assert!(z == 1 || z == -1, "label must be +1 or -1, got {z}");
    if z == 1 {
        t
    } else {
        -t
    }
}

/// Evaluate the margin loss `l(t, z)`.
///
/// Finite for every finite score: the logistic branch uses
/// `ln(1 + e^-u) = max(0, -u) + ln(1 + e^-|u|)`, which never overflows.
/// Panics on a non-finite score or a label outside {-1, +1}.
pub fn base_loss<T: Real>(kind: LossKind, t: T, z: i8) -> T {
    let u = margin(t, z);
    match kind {
        LossKind::Logistic => (-u.abs()).exp().ln_1p() + (-u).max(T::zero()),
        LossKind::Ramp => T::one().min(T::zero().max(T::one() - u)),
        LossKind::Squared => {
            let e = u - T::one();
            e * e / T::of(4.0)
        }
        LossKind::Hinge => T::zero().max(T::one() - u),
    }
}

/// Derivative of [`base_loss`] with respect to the score `t`.
pub fn base_loss_grad<T: Real>(kind: LossKind, t: T, z: i8) -> T {
    let u = margin(t, z);
    let zt = if z == 1 { T::one() } else { -T::one() };
    match kind {
        // -z * sigmoid(-u), with the sigmoid evaluated on the
        // non-positive side so the exponential cannot overflow.
        LossKind::Logistic => {
            let s = if u >= T::zero() {
                let e = (-u).exp();
                e / (T::one() + e)
            } else {
                T::one() / (T::one() + u.exp())
            };
            -zt * s
        }
        LossKind::Ramp => {
            if u > T::zero() && u <= T::one() {
                -zt
            } else {
                T::zero()
            }
        }
        LossKind::Squared => zt * (u - T::one()) / T::of(2.0),
        LossKind::Hinge => {
            if u <= T::one() {
                -zt
            } else {
                T::zero()
            }
        }
    }
}

/// Tuple-position loss `(l(t, +1) - l(t, -1)) / d`.
pub fn mdp_loss<T: Real>(kind: LossKind, t: T, coeffs: &Coefficients<T>) -> T {
    debug_assert!(coeffs.d > T::zero());
    (base_loss(kind, t, 1) - base_loss(kind, t, -1)) / coeffs.d
}

/// Derivative of [`mdp_loss`] with respect to the score.
pub fn mdp_loss_grad<T: Real>(kind: LossKind, t: T, coeffs: &Coefficients<T>) -> T {
    (base_loss_grad(kind, t, 1) - base_loss_grad(kind, t, -1)) / coeffs.d
}

/// Pointwise unlabeled loss
/// `((-b*pi_plus) * l(t, +1) + (a*pi_minus) * l(t, -1)) / d`,
/// where `pi_plus` is the positive-class prior behind `coeffs`.
pub fn u_loss<T: Real>(kind: LossKind, t: T, coeffs: &Coefficients<T>, pi_plus: T) -> T {
    debug_assert!(coeffs.d > T::zero());
    let pi_minus = T::one() - pi_plus;
    (-coeffs.b * pi_plus * base_loss(kind, t, 1) + coeffs.a * pi_minus * base_loss(kind, t, -1))
        / coeffs.d
}

/// Derivative of [`u_loss`] with respect to the score.
pub fn u_loss_grad<T: Real>(kind: LossKind, t: T, coeffs: &Coefficients<T>, pi_plus: T) -> T {
    let pi_minus = T::one() - pi_plus;
    (-coeffs.b * pi_plus * base_loss_grad(kind, t, 1)
        + coeffs.a * pi_minus * base_loss_grad(kind, t, -1))
        / coeffs.d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{compute_coefficients, ProblemSpec};
    use crate::rng::stream_rng;
    use rand::Rng;

    const LN2: f64 = std::f64::consts::LN_2;

    fn coeffs(pi: f64, m: usize) -> Coefficients<f64> {
        compute_coefficients(&ProblemSpec::new(pi, m).unwrap())
    }

    #[test]
    fn base_loss_table_values() {
        // Score 0 is the symmetric point: both labels score the same.
        for z in [1i8, -1] {
            assert!((base_loss(LossKind::Logistic, 0.0, z) - LN2).abs() < 1e-15);
            assert_eq!(base_loss(LossKind::Ramp, 0.0, z), 1.0);
            assert_eq!(base_loss(LossKind::Squared, 0.0, z), 0.25);
            assert_eq!(base_loss(LossKind::Hinge, 0.0, z), 1.0);
        }
        assert_eq!(base_loss(LossKind::Hinge, 0.5, 1), 0.5);
        assert_eq!(base_loss(LossKind::Hinge, 0.5, -1), 1.5);
        assert_eq!(base_loss(LossKind::Ramp, 0.5, 1), 0.5);
        assert_eq!(base_loss(LossKind::Ramp, -3.0, 1), 1.0);
        assert_eq!(base_loss(LossKind::Ramp, 3.0, 1), 0.0);
        assert_eq!(base_loss(LossKind::Squared, 1.0, 1), 0.0);
        assert_eq!(base_loss(LossKind::Squared, 1.0, -1), 1.0);
    }

    #[test]
    fn logistic_is_finite_and_tight_at_extreme_scores() {
        for &t in &[-1000.0_f64, -50.0, 50.0, 1000.0] {
            for z in [1i8, -1] {
                let v = base_loss(LossKind::Logistic, t, z);
                assert!(v.is_finite(), "t={t} z={z} -> {v}");
            }
        }
        // Correct margin: loss vanishes. Wrong margin: loss ~ |t|.
        assert!(base_loss::<f64>(LossKind::Logistic, 1000.0, 1) < 1e-300);
        assert!((base_loss::<f64>(LossKind::Logistic, 1000.0, -1) - 1000.0).abs() < 1e-9);
        assert!((base_loss::<f64>(LossKind::Logistic, -1000.0, 1) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn logistic_label_difference_is_negated_score() {
        // ln(1+e^-t) - ln(1+e^t) = -t exactly; the tuple loss for the
        // logistic case is therefore linear in the score.
        for &t in &[-7.3f64, -1.0, 0.0, 0.4, 2.5, 30.0] {
            let diff =
                base_loss(LossKind::Logistic, t, 1) - base_loss(LossKind::Logistic, t, -1);
            assert!((diff + t).abs() < 1e-12, "t={t}: diff={diff}");
        }
    }

    #[test]
    #[should_panic(expected = "non-finite score")]
    fn base_loss_rejects_nan_scores() {
        base_loss(LossKind::Hinge, f64::NAN, 1);
    }

    #[test]
    #[should_panic(expected = "label must be")]
    fn base_loss_rejects_invalid_labels() {
        base_loss(LossKind::Hinge, 0.0, 0);
    }

    #[test]
    fn tuple_loss_worked_examples() {
        // pi = 0.5, m = 2 gives d = 1/6.
        let c = coeffs(0.5, 2);
        assert!((mdp_loss(LossKind::Hinge, 0.5, &c) - (-6.0)).abs() < 1e-12);
        // pi = 0.5, m = 3 gives d = 1/4.
        let c3 = coeffs(0.5, 3);
        assert!((mdp_loss(LossKind::Squared, 1.0, &c3) - (-4.0)).abs() < 1e-12);
    }

    #[test]
    fn unlabeled_loss_worked_examples() {
        let c = coeffs(0.5, 2);
        assert!((u_loss(LossKind::Squared, 0.4, &c, 0.5) - 0.89).abs() < 1e-12);
        assert!((u_loss(LossKind::Hinge, 10.0, &c, 0.5) - 22.0).abs() < 1e-12);
    }

    #[test]
    fn unlabeled_logistic_at_zero_score_is_ln_two() {
        // l(0, +1) = l(0, -1) = ln 2, so the combination collapses to
        // (a*pi_minus - b*pi_plus) * ln2 / d = ln 2 for every spec.
        for (pi, m) in [(0.5, 2), (0.4, 3), (0.7, 5), (0.25, 8)] {
            let c = coeffs(pi, m);
            assert!(
                (u_loss(LossKind::Logistic, 0.0, &c, pi) - LN2).abs() < 1e-12,
                "pi={pi} m={m}"
            );
        }
    }

    #[test]
    fn gradients_match_central_differences_away_from_kinks() {
        let mut rng = stream_rng(2024, 0);
        let h = 1e-6;
        let mut checked = 0;
        while checked < 1000 {
            let t: f64 = rng.random_range(-3.0..3.0);
            let z = if rng.random::<bool>() { 1i8 } else { -1 };
            let u: f64 = if z == 1 { t } else { -t };
            // Piecewise losses kink at margins 0 and 1; stay clear.
            if (u - 1.0).abs() < 1e-3 || u.abs() < 1e-3 {
                continue;
            }
            for kind in LossKind::ALL {
                let g = base_loss_grad(kind, t, z);
                let fd = (base_loss(kind, t + h, z) - base_loss(kind, t - h, z)) / (2.0 * h);
                assert!(
                    (g - fd).abs() <= 1e-6 * (1.0 + fd.abs()),
                    "{kind} t={t} z={z}: analytic {g} vs fd {fd}"
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn kink_subgradients_take_left_limits() {
        // Hinge at margin 1: left limit slope -1 in the margin.
        assert_eq!(base_loss_grad(LossKind::Hinge, 1.0, 1), -1.0);
        assert_eq!(base_loss_grad(LossKind::Hinge, -1.0, -1), 1.0);
        // Ramp at margin 1: same left limit; at margin 0 the left side
        // is the flat plateau, so the subgradient is 0.
        assert_eq!(base_loss_grad(LossKind::Ramp, 1.0, 1), -1.0);
        assert_eq!(base_loss_grad(LossKind::Ramp, 0.0, 1), 0.0);
        assert_eq!(base_loss_grad(LossKind::Ramp, 0.0, -1), 0.0);
    }

    #[test]
    fn derived_loss_gradients_match_central_differences() {
        let c = coeffs(0.45, 3);
        let h = 1e-6;
        for &t in &[-2.2, -0.6, 0.31, 1.7] {
            for kind in [LossKind::Logistic, LossKind::Squared] {
                let g = mdp_loss_grad(kind, t, &c);
                let fd = (mdp_loss(kind, t + h, &c) - mdp_loss(kind, t - h, &c)) / (2.0 * h);
                assert!((g - fd).abs() < 1e-5 * (1.0 + fd.abs()), "{kind} t={t}");

                let gu = u_loss_grad(kind, t, &c, 0.45);
                let fdu =
                    (u_loss(kind, t + h, &c, 0.45) - u_loss(kind, t - h, &c, 0.45)) / (2.0 * h);
                assert!((gu - fdu).abs() < 1e-5 * (1.0 + fdu.abs()), "{kind} t={t}");
            }
        }
    }

    #[test]
    fn loss_kind_round_trips_through_strings() {
        for kind in LossKind::ALL {
            assert_eq!(kind.as_str().parse::<LossKind>().unwrap(), kind);
        }
        assert!("xent".parse::<LossKind>().is_err());
        assert!("Logistic".parse::<LossKind>().is_err());
    }
}
