//! Empirical risk estimators: the unbiased (raw) form and its
//! non-negativity corrections, together with exact gradients with
//! respect to the scores.
//!
//! The raw estimator combines the two sample arms,
//!
//! ```text
//! r_mdp = (1 / (m * n_mdp)) * sum over tuple positions of mdp_loss
//! r_u   = (1 / n_u)         * sum over unlabeled points of u_loss
//! raw_total = pi_plus * pi_minus * r_mdp + r_u
//! ```
//!
//! and is unbiased for the supervised risk (the oracle certifies this
//! exactly on enumerable toys). Because `r_mdp` can go negative on a
//! finite sample, training supports corrections `f(x) = x` for `x >= 0`
//! and `f(x) = slope * |x|` below zero, applied either to the whole
//! estimator or to each arm separately (the prior product stays outside
//! `f` in the per-arm form). At the kink `x = 0` gradients take the
//! `x >= 0` branch.
//!
//! All reductions go through [`pairwise_sum`], so identical inputs give
//! bit-identical risks regardless of batch chunking.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::coeffs::{Coefficients, ProblemSpec};
use crate::error::{Error, Result};
use crate::losses::{mdp_loss, mdp_loss_grad, u_loss, u_loss_grad, LossKind};
use crate::scalar::Real;
use crate::stats::pairwise_sum;

/// Risk correction family. `Ure` is the identity (the raw unbiased
/// estimator); the rest replace the negative branch by `slope * |x|`:
/// `Relu` clips to zero (slope 0), `Abs` mirrors (slope 1), and
/// `Slope(k)` interpolates with an arbitrary non-negative slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CorrectionKind {
    Ure,
    Relu,
    Abs,
    Slope(f64),
}

impl CorrectionKind {
    /// Slope applied on the negative branch, or `None` for the identity.
    pub fn negative_slope(&self) -> Option<f64> {
        match self {
            CorrectionKind::Ure => None,
            CorrectionKind::Relu => Some(0.0),
            CorrectionKind::Abs => Some(1.0),
            CorrectionKind::Slope(k) => Some(*k),
        }
    }
}

impl fmt::Display for CorrectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrectionKind::Ure => f.write_str("ure"),
            CorrectionKind::Relu => f.write_str("relu"),
            CorrectionKind::Abs => f.write_str("abs"),
            CorrectionKind::Slope(k) => write!(f, "slope:{k}"),
        }
    }
}

impl FromStr for CorrectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ure" => Ok(CorrectionKind::Ure),
            "relu" => Ok(CorrectionKind::Relu),
            "abs" => Ok(CorrectionKind::Abs),
            other => {
                if let Some(v) = other.strip_prefix("slope:") {
                    let k: f64 = v.parse().map_err(|_| {
                        Error::Parse(format!("slope value {v:?} is not a number"))
                    })?;
                    if !k.is_finite() || k < 0.0 {
                        return Err(Error::Parse(format!(
                            "correction slope must be finite and >= 0, got {k}"
                        )));
                    }
                    Ok(CorrectionKind::Slope(k))
                } else {
                    Err(Error::Parse(format!(
                        "unknown correction {other:?}; expected ure|relu|abs|slope:<k>"
                    )))
                }
            }
        }
    }
}

/// Where the correction is applied: to the full combined estimator, or
/// to each arm before combining (the default in training).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CorrectionScope {
    Whole,
    PerComponent,
}

impl fmt::Display for CorrectionScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrectionScope::Whole => f.write_str("whole"),
            CorrectionScope::PerComponent => f.write_str("per-component"),
        }
    }
}

impl FromStr for CorrectionScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "whole" => Ok(CorrectionScope::Whole),
            "per-component" => Ok(CorrectionScope::PerComponent),
            other => Err(Error::Parse(format!(
                "unknown scope {other:?}; expected whole|per-component"
            ))),
        }
    }
}

/// Decomposed empirical risk. `raw_total` always equals
/// `pi_product * r_mdp + r_u`; `corrected_total` equals `raw_total`
/// as produced by [`empirical_risk`] and is replaced by
/// [`RiskReport::with_correction`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskReport<T> {
    /// Tuple-arm average of `mdp_loss` over all positions.
    pub r_mdp: T,
    /// Unlabeled-arm average of `u_loss`.
    pub r_u: T,
    /// `pi_product * r_mdp + r_u`.
    pub raw_total: T,
    /// Risk after the most recently applied correction.
    pub corrected_total: T,
    /// `pi_plus * pi_minus` of the spec the report was computed under.
    pub pi_product: T,
}

impl<T: Real> RiskReport<T> {
    /// Copy of the report with `corrected_total` set by [`correct`].
    pub fn with_correction(mut self, kind: CorrectionKind, scope: CorrectionScope) -> Self {
        self.corrected_total = correct(&self, kind, scope);
        self
    }
}

/// Compute the decomposed empirical risk.
///
/// `scores_mdp` is the flattened `n_mdp x m` score matrix (position
/// scores of each tuple, row-major); `scores_u` holds one score per
/// unlabeled point. Errors if either arm is empty or `scores_mdp` is not
/// a whole number of tuples.
pub fn empirical_risk<T: Real>(
    scores_mdp: &[T],
    scores_u: &[T],
    kind: LossKind,
    coeffs: &Coefficients<T>,
    spec: &ProblemSpec<T>,
) -> Result<RiskReport<T>> {
    let m = spec.m();
    if scores_mdp.is_empty() {
        return Err(Error::Empty("tuple-arm scores".into()));
    }
    if scores_u.is_empty() {
        return Err(Error::Empty("unlabeled-arm scores".into()));
    }
    if scores_mdp.len() % m != 0 {
        return Err(Error::ShapeMismatch(format!(
            "{} tuple scores do not divide into tuples of size {m}",
            scores_mdp.len()
        )));
    }

    let vals_mdp: Vec<T> = scores_mdp
        .iter()
        .map(|&t| mdp_loss(kind, t, coeffs))
        .collect();
    let r_mdp = pairwise_sum(&vals_mdp) / T::of(vals_mdp.len() as f64);

    let pi_plus = spec.pi_plus();
    let vals_u: Vec<T> = scores_u
        .iter()
        .map(|&t| u_loss(kind, t, coeffs, pi_plus))
        .collect();
    let r_u = pairwise_sum(&vals_u) / T::of(vals_u.len() as f64);

    let pi_product = pi_plus * spec.pi_minus();
    let raw_total = pi_product * r_mdp + r_u;
    Ok(RiskReport {
        r_mdp,
        r_u,
        raw_total,
        corrected_total: raw_total,
        pi_product,
    })
}

/// `f(x) = x` for `x >= 0`, `slope * |x|` below.
fn branch<T: Real>(x: T, slope: f64) -> T {
    if x >= T::zero() {
        x
    } else {
        T::of(slope) * x.abs()
    }
}

/// Gradient factor of [`branch`]; the kink takes the `x >= 0` side.
fn branch_factor<T: Real>(x: T, slope: f64) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        -T::of(slope)
    }
}

/// Scalar corrected risk for a computed report.
pub fn correct<T: Real>(report: &RiskReport<T>, kind: CorrectionKind, scope: CorrectionScope) -> T {
    match kind.negative_slope() {
        None => report.raw_total,
        Some(slope) => match scope {
            CorrectionScope::Whole => branch(report.raw_total, slope),
            CorrectionScope::PerComponent => {
                report.pi_product * branch(report.r_mdp, slope) + branch(report.r_u, slope)
            }
        },
    }
}

/// Corrected risk together with its exact gradient with respect to
/// every score.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskGradients<T> {
    /// Report with `corrected_total` already set for `(kind, scope)`.
    pub report: RiskReport<T>,
    /// d corrected_total / d scores_mdp\[i\], same layout as the input.
    pub wrt_mdp: Vec<T>,
    /// d corrected_total / d scores_u\[i\].
    pub wrt_u: Vec<T>,
}

/// Corrected empirical risk and its gradient with respect to each score.
///
/// The correction only rescales each arm's contribution by a constant
/// factor (1 on the non-negative branch, `-slope` on the negative one),
/// so the gradient is the raw per-score gradient times that factor.
#[allow(clippy::too_many_arguments)]
pub fn corrected_risk_grad<T: Real>(
    scores_mdp: &[T],
    scores_u: &[T],
    kind: LossKind,
    coeffs: &Coefficients<T>,
    spec: &ProblemSpec<T>,
    correction: CorrectionKind,
    scope: CorrectionScope,
) -> Result<RiskGradients<T>> {
    let report = empirical_risk(scores_mdp, scores_u, kind, coeffs, spec)?
        .with_correction(correction, scope);

    let (fac_mdp, fac_u) = match correction.negative_slope() {
        None => (T::one(), T::one()),
        Some(slope) => match scope {
            CorrectionScope::Whole => {
                let f = branch_factor(report.raw_total, slope);
                (f, f)
            }
            CorrectionScope::PerComponent => (
                branch_factor(report.r_mdp, slope),
                branch_factor(report.r_u, slope),
            ),
        },
    };

    let w_mdp = fac_mdp * report.pi_product / T::of(scores_mdp.len() as f64);
    let wrt_mdp = scores_mdp
        .iter()
        .map(|&t| w_mdp * mdp_loss_grad(kind, t, coeffs))
        .collect();

    let pi_plus = spec.pi_plus();
    let w_u = fac_u / T::of(scores_u.len() as f64);
    let wrt_u = scores_u
        .iter()
        .map(|&t| w_u * u_loss_grad(kind, t, coeffs, pi_plus))
        .collect();

    Ok(RiskGradients {
        report,
        wrt_mdp,
        wrt_u,
    })
}
