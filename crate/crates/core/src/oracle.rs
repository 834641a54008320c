//! Brute-force verification oracle.
//!
//! Everything here recomputes quantities the rest of the crate obtains
//! in closed form, using nothing but exhaustive enumeration over label
//! configurations and (for toys) feature points:
//!
//! - [`brute_force_coefficients`] re-derives the marginals `a`, `b` and
//!   normalizer `z` by summing per-configuration prior products;
//! - [`exact_estimator_expectation`] evaluates the exact expectation of
//!   the raw risk estimator on an enumerable discrete toy and, by an
//!   entirely separate route, the supervised risk it must equal;
//! - [`invert_class_conditionals`] reconstructs the class-conditional
//!   distributions from the tuple-position marginal and the unlabeled
//!   mixture;
//! - [`convergence_probe`] measures how the estimator's sampling spread
//!   shrinks with the sample count (slope ~ -1/2 on a log-log fit).
//!
//! The estimator route intentionally calls the production loss
//! transforms and coefficients — that is the code under audit — while
//! the reference route (supervised risk, enumeration weights) never
//! touches them. [`run_verification`] bundles every invariant into a
//! serializable pass/fail report for the CLI.

use rand::Rng;
use serde::Serialize;

use crate::coeffs::{binomial_exact, compute_coefficients, Coefficients, ProblemSpec};
use crate::error::{Error, Result};
use crate::losses::{base_loss, mdp_loss, u_loss, LossKind};
use crate::risk::empirical_risk;
use crate::rng::{derive_seed, stream_rng};
use crate::scalar::Real;
use crate::stats::{chi_squared_critical, ols_slope, sample_std};

/// Largest tuple size for exhaustive label-configuration enumeration.
pub const MAX_ENUM_TUPLE_SIZE: usize = 20;
/// Cap on `n_points ^ m` for exhaustive feature-tuple enumeration.
pub const MAX_ENUM_TUPLES: u128 = 2_000_000;

/// A finite discrete toy problem: two class-conditional distributions
/// over `n_points` abstract feature points plus a class prior. Small
/// enough that every expectation can be enumerated exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteToy<T> {
    pi_plus: T,
    p_plus: Vec<T>,
    p_minus: Vec<T>,
}

impl<T: Real> DiscreteToy<T> {
    /// Errors if the prior leaves (0, 1), the distributions differ in
    /// length, carry negative mass, or fail to sum to 1 (tol 1e-9).
    pub fn new(pi_plus: T, p_plus: Vec<T>, p_minus: Vec<T>) -> Result<Self> {
        let pi = pi_plus.as_f64();
        if !pi.is_finite() || pi <= 0.0 || pi >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "toy prior must lie in (0, 1), got {pi}"
            )));
        }
        if p_plus.is_empty() || p_plus.len() != p_minus.len() {
            return Err(Error::ShapeMismatch(
                "class conditionals must share a positive length".into(),
            ));
        }
        for (name, p) in [("p_plus", &p_plus), ("p_minus", &p_minus)] {
            if p.iter().any(|&x| !(x.as_f64().is_finite()) || x < T::zero()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} contains negative or non-finite mass"
                )));
            }
            let total: f64 = p.iter().map(|&x| x.as_f64()).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "{name} sums to {total}, not 1"
                )));
            }
        }
        Ok(Self {
            pi_plus,
            p_plus,
            p_minus,
        })
    }

    /// Random toy with strictly positive masses (deterministic in the
    /// seed; used by the verification sweeps).
    pub fn random(n_points: usize, seed: u64) -> Self {
        assert!(n_points >= 1);
        let mut rng = stream_rng(seed, 0);
        let mut draw_dist = || {
            let raw: Vec<f64> = (0..n_points).map(|_| rng.random::<f64>() + 0.05).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| T::of(x / total)).collect::<Vec<T>>()
        };
        let p_plus = draw_dist();
        let p_minus = draw_dist();
        let pi_plus = T::of(0.2 + 0.6 * rng.random::<f64>());
        Self::new(pi_plus, p_plus, p_minus).expect("random toy is valid")
    }

    pub fn n_points(&self) -> usize {
        self.p_plus.len()
    }

    pub fn pi_plus(&self) -> T {
        self.pi_plus
    }

    pub fn p_plus(&self) -> &[T] {
        &self.p_plus
    }

    pub fn p_minus(&self) -> &[T] {
        &self.p_minus
    }

    /// Unlabeled mixture `pi_plus * p_plus + pi_minus * p_minus`.
    pub fn unlabeled_mixture(&self) -> Vec<T> {
        let pi = self.pi_plus;
        let pm = T::one() - pi;
        self.p_plus
            .iter()
            .zip(&self.p_minus)
            .map(|(&p, &q)| pi * p + pm * q)
            .collect()
    }

    /// Tuple-position marginal `a * p_plus + b * p_minus`.
    pub fn position_marginal(&self, coeffs: &Coefficients<T>) -> Vec<T> {
        self.p_plus
            .iter()
            .zip(&self.p_minus)
            .map(|(&p, &q)| coeffs.a * p + coeffs.b * q)
            .collect()
    }
}

/// All label configurations of length `m` with at least as many `+1` as
/// `-1`, in ascending bitmask order (bit j set = position j negative).
pub fn enumerate_dominant_configs(m: usize) -> Result<Vec<Vec<i8>>> {
    if m < 1 || m > MAX_ENUM_TUPLE_SIZE {
        return Err(Error::TooLarge(format!(
            "configuration enumeration supports 1..={MAX_ENUM_TUPLE_SIZE}, got {m}"
        )));
    }
    let kmax = (m / 2) as u32;
    let mut configs = Vec::new();
    for mask in 0u32..(1 << m) {
        if mask.count_ones() <= kmax {
            configs.push(
                (0..m)
                    .map(|j| if mask >> j & 1 == 1 { -1i8 } else { 1 })
                    .collect(),
            );
        }
    }
    Ok(configs)
}

/// Per-configuration prior weight `prod_j pi_(y_j)`.
fn config_weight<T: Real>(config: &[i8], pi_plus: T) -> T {
    let pi_minus = T::one() - pi_plus;
    config
        .iter()
        .map(|&y| if y == 1 { pi_plus } else { pi_minus })
        .fold(T::one(), |acc, p| acc * p)
}

/// Re-derive `(a, b, z)` purely by enumerating label configurations.
pub fn brute_force_coefficients<T: Real>(spec: &ProblemSpec<T>) -> Result<(T, T, T)> {
    let configs = enumerate_dominant_configs(spec.m())?;
    let mut z = T::zero();
    let mut a_num = T::zero();
    let mut b_num = T::zero();
    for config in &configs {
        let w = config_weight(config, spec.pi_plus());
        z += w;
        if config[0] == 1 {
            a_num += w;
        } else {
            b_num += w;
        }
    }
    Ok((a_num / z, b_num / z, z))
}

/// Exact expectations certified equal by the unbiasedness theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorExpectation<T> {
    /// Expectation of the raw estimator under the tuple + unlabeled
    /// sampling scheme (production losses and coefficients).
    pub estimator: T,
    /// Supervised risk computed directly from the toy (reference route).
    pub supervised: T,
}

/// Enumerate every feature tuple and unlabeled point of a toy and take
/// exact expectations of both risk routes. `scores[i]` is the model
/// score of point `i`. Errors if `n_points ^ m` exceeds
/// [`MAX_ENUM_TUPLES`] or the score vector has the wrong length.
pub fn exact_estimator_expectation<T: Real>(
    toy: &DiscreteToy<T>,
    scores: &[T],
    kind: LossKind,
    spec: &ProblemSpec<T>,
) -> Result<EstimatorExpectation<T>> {
    let r = toy.n_points();
    if scores.len() != r {
        return Err(Error::ShapeMismatch(format!(
            "{} scores for {r} toy points",
            scores.len()
        )));
    }
    let m = spec.m();
    let tuple_count = (r as u128).pow(m as u32);
    if tuple_count > MAX_ENUM_TUPLES {
        return Err(Error::TooLarge(format!(
            "{r}^{m} feature tuples exceed the enumeration cap"
        )));
    }

    let configs = enumerate_dominant_configs(m)?;
    let weights: Vec<T> = configs
        .iter()
        .map(|c| config_weight(c, spec.pi_plus()))
        .collect();
    let z_enum: T = weights.iter().copied().fold(T::zero(), |a, w| a + w);

    // Production route: mdp/u losses with the production coefficients.
    let coeffs = compute_coefficients(spec);
    let position_loss: Vec<T> = scores.iter().map(|&t| mdp_loss(kind, t, &coeffs)).collect();

    // Walk all r^m feature tuples by odometer; for each, its probability
    // is sum_c P(config) * prod_j p_(y_j)(x_j).
    let mut e_mdp = T::zero();
    let mut indices = vec![0usize; m];
    let inv_m = T::one() / T::of(m as f64);
    loop {
        let mut prob = T::zero();
        for (config, &w) in configs.iter().zip(&weights) {
            let mut cond = T::one();
            for (j, &x) in indices.iter().enumerate() {
                cond = cond
                    * if config[j] == 1 {
                        toy.p_plus()[x]
                    } else {
                        toy.p_minus()[x]
                    };
            }
            prob += w / z_enum * cond;
        }
        let mut term = T::zero();
        for &x in &indices {
            term += position_loss[x];
        }
        e_mdp += prob * term * inv_m;

        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == m {
                break;
            }
            indices[pos] += 1;
            if indices[pos] < r {
                break;
            }
            indices[pos] = 0;
            pos += 1;
        }
        if pos == m {
            break;
        }
    }

    let pi = spec.pi_plus();
    let mixture = toy.unlabeled_mixture();
    let mut e_u = T::zero();
    for (i, &t) in scores.iter().enumerate() {
        e_u += mixture[i] * u_loss(kind, t, &coeffs, pi);
    }
    let estimator = pi * spec.pi_minus() * e_mdp + e_u;

    // Reference route: plain supervised risk, no estimator machinery.
    let pm = spec.pi_minus();
    let mut supervised = T::zero();
    for (i, &t) in scores.iter().enumerate() {
        supervised += pi * toy.p_plus()[i] * base_loss(kind, t, 1)
            + pm * toy.p_minus()[i] * base_loss(kind, t, -1);
    }

    Ok(EstimatorExpectation {
        estimator,
        supervised,
    })
}

/// Invert the mixture system: from the tuple-position marginal `p_hat =
/// a p_plus + b p_minus` and the unlabeled mixture `p_u = pi_plus
/// p_plus + pi_minus p_minus`, recover `(p_plus, p_minus)`:
///
/// ```text
/// p_plus  = (pi_minus * p_hat - b * p_u) / d
/// p_minus = (-pi_plus * p_hat + a * p_u) / d
/// ```
pub fn invert_class_conditionals<T: Real>(
    p_hat: &[T],
    p_u: &[T],
    coeffs: &Coefficients<T>,
    spec: &ProblemSpec<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    if p_hat.is_empty() || p_hat.len() != p_u.len() {
        return Err(Error::ShapeMismatch(
            "marginal and mixture must share a positive length".into(),
        ));
    }
    let (pp, pm) = (spec.pi_plus(), spec.pi_minus());
    let d = coeffs.d;
    let p_plus = p_hat
        .iter()
        .zip(p_u)
        .map(|(&h, &u)| (pm * h - coeffs.b * u) / d)
        .collect();
    let p_minus = p_hat
        .iter()
        .zip(p_u)
        .map(|(&h, &u)| (-pp * h + coeffs.a * u) / d)
        .collect();
    Ok((p_plus, p_minus))
}

/// Sampling spread of the raw estimator across sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport<T> {
    /// `(n, sample std of raw_total over trials)` per grid point.
    pub per_n: Vec<(usize, T)>,
    /// Log-log OLS slope of std against n; `None` if any std is 0
    /// (degenerate toy) so the fit is undefined.
    pub slope: Option<T>,
}

fn draw_index<T: Real>(dist: &[T], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        acc += p.as_f64();
        if u < acc {
            return i;
        }
    }
    dist.len() - 1
}

/// Monte-Carlo probe of estimator concentration on a toy.
///
/// For each `n` in `n_grid`, draws `trials` independent samples of `n`
/// tuples plus `n` unlabeled points (sampling label configurations by
/// their enumeration weights, never through the production sampler) and
/// records the sample standard deviation of the raw risk. Trial `t` of
/// grid point `g` uses ChaCha stream `g * trials + t`.
pub fn convergence_probe<T: Real>(
    toy: &DiscreteToy<T>,
    scores: &[T],
    kind: LossKind,
    spec: &ProblemSpec<T>,
    n_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ProbeReport<T>> {
    if scores.len() != toy.n_points() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores for {} toy points",
            scores.len(),
            toy.n_points()
        )));
    }
    if n_grid.is_empty() || n_grid.iter().any(|&n| n == 0) {
        return Err(Error::InvalidArgument(
            "n grid must be non-empty with positive entries".into(),
        ));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument(
            "need at least two trials for a standard deviation".into(),
        ));
    }
    let m = spec.m();
    let configs = enumerate_dominant_configs(m)?;
    let weights: Vec<T> = configs
        .iter()
        .map(|c| config_weight(c, spec.pi_plus()))
        .collect();
    let z: T = weights.iter().copied().fold(T::zero(), |a, w| a + w);
    let config_dist: Vec<T> = weights.iter().map(|&w| w / z).collect();
    let coeffs = compute_coefficients(spec);
    let pi = spec.pi_plus().as_f64();

    let mut per_n = Vec::with_capacity(n_grid.len());
    for (g, &n) in n_grid.iter().enumerate() {
        let mut totals = Vec::with_capacity(trials);
        for t in 0..trials {
            let mut rng = stream_rng(seed, (g * trials + t) as u64);
            let mut scores_mdp = Vec::with_capacity(n * m);
            for _ in 0..n {
                let config = &configs[draw_index(&config_dist, &mut rng)];
                for &y in config {
                    let dist = if y == 1 { toy.p_plus() } else { toy.p_minus() };
                    scores_mdp.push(scores[draw_index(dist, &mut rng)]);
                }
            }
            let mut scores_u = Vec::with_capacity(n);
            for _ in 0..n {
                let dist = if rng.random::<f64>() < pi {
                    toy.p_plus()
                } else {
                    toy.p_minus()
                };
                scores_u.push(scores[draw_index(dist, &mut rng)]);
            }
            let report = empirical_risk(&scores_mdp, &scores_u, kind, &coeffs, spec)?;
            totals.push(report.raw_total);
        }
        per_n.push((n, sample_std(&totals)));
    }

    let slope = if per_n.iter().any(|&(_, s)| s == T::zero()) {
        None
    } else {
        let xs: Vec<T> = per_n.iter().map(|&(n, _)| T::of((n as f64).ln())).collect();
        let ys: Vec<T> = per_n.iter().map(|&(_, s)| s.ln()).collect();
        Some(ols_slope(&xs, &ys))
    };
    Ok(ProbeReport { per_n, slope })
}

/// One verified invariant in a [`VerificationReport`].
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Largest observed deviation, in the units stated by `detail`.
    pub max_deviation: f64,
    /// The deviation bound the check enforces.
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn from_deviation(name: &str, max_deviation: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: max_deviation.is_finite() && max_deviation <= tolerance,
            max_deviation,
            tolerance,
            detail,
        }
    }
}

/// Outcome of [`run_verification`].
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

/// Knobs for [`run_verification`].
#[derive(Debug, Clone, Copy)]
pub struct VerificationConfig {
    /// Base seed for the randomized sweeps.
    pub seed: u64,
    /// Tuples per sampler-fidelity batch.
    pub sampler_n: usize,
    /// Offset added to the closed-form `a` before comparison. Zero in
    /// normal operation; the test suite injects a perturbation as a
    /// negative control to prove the checks can fail.
    pub coefficient_perturbation: f64,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_901,
            sampler_n: 100_000,
            coefficient_perturbation: 0.0,
        }
    }
}

const COEFF_GRID_PRIORS: [f64; 19] = [
    0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75,
    0.80, 0.85, 0.90, 0.95,
];

fn check_coefficient_identity(cfg: &VerificationConfig) -> CheckResult {
    let mut max_dev = 0.0f64;
    for m in 1..=12 {
        for &pi in &COEFF_GRID_PRIORS {
            let spec = ProblemSpec::new(pi, m).expect("grid spec");
            let c = compute_coefficients(&spec);
            let (a, b, z) = brute_force_coefficients(&spec).expect("grid enumeration");
            let closed_a = c.a + cfg.coefficient_perturbation;
            for dev in [
                (closed_a - a).abs(),
                (c.b - b).abs(),
                (c.z - z).abs(),
                (c.a + c.b - 1.0).abs(),
            ] {
                max_dev = max_dev.max(dev);
            }
        }
    }
    CheckResult::from_deviation(
        "coefficient-identity",
        max_dev,
        1e-12,
        "closed-form a/b/z vs configuration enumeration, m=1..12 x 19 priors".into(),
    )
}

fn check_denominator_closed_form() -> CheckResult {
    let mut max_dev = 0.0f64;
    let mut min_d = f64::INFINITY;
    for m in 1..=12 {
        for &pi in &COEFF_GRID_PRIORS {
            let spec = ProblemSpec::new(pi, m).expect("grid spec");
            let c = compute_coefficients(&spec);
            // Independent route: the difference form evaluated from the
            // enumerated marginals. Cancellation caps its accuracy near
            // 1e-16, hence the absolute tolerance.
            let (a, b, _) = brute_force_coefficients(&spec).expect("grid enumeration");
            let difference = a * (1.0 - pi) - b * pi;
            max_dev = max_dev.max((c.d - difference).abs());
            min_d = min_d.min(c.d);
        }
    }
    let mut check = CheckResult::from_deviation(
        "denominator-closed-form",
        max_dev,
        1e-13,
        format!("absolute gap to enumerated difference form, same grid; min d observed {min_d:.3e}"),
    );
    if min_d <= 0.0 {
        check.passed = false;
        check.detail.push_str(" (POSITIVITY VIOLATED)");
    }
    check
}

fn check_unbiasedness(cfg: &VerificationConfig) -> CheckResult {
    let mut max_dev = 0.0f64;
    let mut counter = 0u64;
    for kind in LossKind::ALL {
        for m in 1..=4usize {
            for toy_idx in 0..5usize {
                counter += 1;
                let n_points = 2 + (toy_idx % 3);
                let toy =
                    DiscreteToy::<f64>::random(n_points, derive_seed(cfg.seed, counter));
                let mut rng = stream_rng(derive_seed(cfg.seed, counter), 1);
                let scores: Vec<f64> =
                    (0..n_points).map(|_| rng.random_range(-2.0..2.0)).collect();
                let spec = ProblemSpec::new(toy.pi_plus(), m).expect("toy spec");
                let e = exact_estimator_expectation(&toy, &scores, kind, &spec)
                    .expect("toy enumeration");
                max_dev = max_dev.max((e.estimator - e.supervised).abs());
            }
        }
    }
    CheckResult::from_deviation(
        "estimator-unbiasedness",
        max_dev,
        1e-10,
        "exact estimator expectation vs supervised risk; 4 losses x m=1..4 x 5 toys".into(),
    )
}

fn check_inversion(cfg: &VerificationConfig) -> CheckResult {
    let mut max_dev = 0.0f64;
    for i in 0..100u64 {
        let toy = DiscreteToy::<f64>::random(2 + (i % 4) as usize, derive_seed(cfg.seed, 500 + i));
        let m = 1 + (i % 4) as usize;
        let spec = ProblemSpec::new(toy.pi_plus(), m).expect("toy spec");
        let coeffs = compute_coefficients(&spec);
        let p_hat = toy.position_marginal(&coeffs);
        let p_u = toy.unlabeled_mixture();
        let (p_plus, p_minus) =
            invert_class_conditionals(&p_hat, &p_u, &coeffs, &spec).expect("inversion");
        for (rec, orig) in p_plus.iter().zip(toy.p_plus()) {
            max_dev = max_dev.max((rec - orig).abs());
        }
        for (rec, orig) in p_minus.iter().zip(toy.p_minus()) {
            max_dev = max_dev.max((rec - orig).abs());
        }
    }
    CheckResult::from_deviation(
        "class-conditional-inversion",
        max_dev,
        1e-12,
        "mix-then-invert round trip on 100 random toys, m=1..4".into(),
    )
}

fn check_config_counts() -> CheckResult {
    let mut max_dev = 0.0f64;
    for m in 1..=MAX_ENUM_TUPLE_SIZE {
        let configs = enumerate_dominant_configs(m).expect("enumeration");
        let expected: u128 = (0..=(m / 2) as u32)
            .map(|k| binomial_exact(m as u32, k))
            .sum();
        max_dev = max_dev.max((configs.len() as i128 - expected as i128).unsigned_abs() as f64);
        // Every configuration must itself be dominant.
        for c in &configs {
            let negs = c.iter().filter(|&&y| y == -1).count();
            if negs > m / 2 {
                max_dev = f64::INFINITY;
            }
        }
    }
    CheckResult::from_deviation(
        "dominant-config-count",
        max_dev,
        0.0,
        "enumeration size vs sum of binomials, m=1..20".into(),
    )
}

fn check_sampler_fidelity(cfg: &VerificationConfig) -> (CheckResult, CheckResult) {
    use crate::matrix::Matrix;
    use crate::tuplegen::{
        empirical_position_stats, negative_count_chi_squared, sample_mdp_tuples, LabeledPool,
    };

    // Features are irrelevant for label statistics: a 2-row pool with a
    // signed scalar per class suffices.
    let pool = LabeledPool::new(
        Matrix::new(2, 1, vec![1.0f64, -1.0]).unwrap(),
        vec![1, -1],
    )
    .unwrap();

    let mut max_chi2_ratio = 0.0f64;
    let mut max_frac_sigmas = 0.0f64;
    let mut case = 0u64;
    for m in [2usize, 3] {
        for pi in [0.4, 0.5, 0.6] {
            case += 1;
            let spec = ProblemSpec::new(pi, m).expect("sampler spec");
            let batch =
                sample_mdp_tuples(&pool, &spec, cfg.sampler_n, derive_seed(cfg.seed, 900 + case))
                    .expect("sampler batch");
            let chi2 = negative_count_chi_squared(&batch, &spec).expect("chi2");
            let df = m / 2; // bins - 1
            let critical = chi_squared_critical(df.max(1), 0.001);
            max_chi2_ratio = max_chi2_ratio.max(chi2 / critical);

            let stats = empirical_position_stats(&batch).expect("stats");
            let a = compute_coefficients(&spec).a;
            let sigma = (a * (1.0 - a) / cfg.sampler_n as f64).sqrt();
            for &frac in &stats.positive_fraction {
                max_frac_sigmas = max_frac_sigmas.max((frac - a).abs() / sigma);
            }
        }
    }
    (
        CheckResult::from_deviation(
            "sampler-negative-counts",
            max_chi2_ratio,
            1.0,
            format!(
                "max chi-squared / critical(0.001) over m in {{2,3}} x pi in {{0.4,0.5,0.6}}, n = {}",
                cfg.sampler_n
            ),
        ),
        CheckResult::from_deviation(
            "sampler-position-marginals",
            max_frac_sigmas,
            4.0,
            "max |empirical positive fraction - a| in binomial sigmas, same batches".into(),
        ),
    )
}

fn check_convergence(cfg: &VerificationConfig) -> CheckResult {
    let toy = DiscreteToy::<f64>::new(0.5, vec![0.8, 0.2], vec![0.3, 0.7]).expect("probe toy");
    let spec = ProblemSpec::new(0.5, 2).expect("probe spec");
    let report = convergence_probe(
        &toy,
        &[0.4, -0.2],
        LossKind::Squared,
        &spec,
        &[100, 400, 1600, 6400],
        200,
        derive_seed(cfg.seed, 7000),
    )
    .expect("probe");
    let slope = report.slope.expect("non-degenerate toy has a slope");
    CheckResult::from_deviation(
        "estimator-convergence-rate",
        (slope + 0.5).abs(),
        0.15,
        format!("|log-log slope + 1/2|; fitted slope {slope:.4} over n = 100..6400, 200 trials"),
    )
}

/// Run every oracle invariant and collect a report. The CLI serializes
/// this as JSON and exits non-zero unless `all_passed`.
pub fn run_verification(cfg: &VerificationConfig) -> VerificationReport {
    let (sampler_counts, sampler_marginals) = check_sampler_fidelity(cfg);
    let checks = vec![
        check_coefficient_identity(cfg),
        check_denominator_closed_form(),
        check_unbiasedness(cfg),
        check_inversion(cfg),
        check_config_counts(),
        sampler_counts,
        sampler_marginals,
        check_convergence(cfg),
    ];
    let all_passed = checks.iter().all(|c| c.passed);
    VerificationReport {
        checks,
        all_passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_toy() -> DiscreteToy<f64> {
        DiscreteToy::new(0.5, vec![0.8, 0.2], vec![0.3, 0.7]).unwrap()
    }

    #[test]
    fn toy_validation() {
        assert!(DiscreteToy::new(0.5, vec![0.5, 0.5], vec![0.5, 0.5]).is_ok());
        assert!(DiscreteToy::new(0.0, vec![1.0], vec![1.0]).is_err());
        assert!(DiscreteToy::new(0.5, vec![0.6, 0.6], vec![0.5, 0.5]).is_err());
        assert!(DiscreteToy::new(0.5, vec![1.5, -0.5], vec![0.5, 0.5]).is_err());
        assert!(DiscreteToy::new(0.5, vec![0.5, 0.5], vec![1.0]).is_err());
        assert!(DiscreteToy::<f64>::new(0.5, vec![], vec![]).is_err());
    }

    #[test]
    fn config_enumeration_small_cases() {
        // m = 2: (++), (+-), (-+).
        let c2 = enumerate_dominant_configs(2).unwrap();
        assert_eq!(c2, vec![vec![1, 1], vec![-1, 1], vec![1, -1]]);
        // m = 3 admits at most one negative: 4 configurations.
        let c3 = enumerate_dominant_configs(3).unwrap();
        assert_eq!(c3.len(), 4);
        assert!(c3.contains(&vec![1, 1, 1]));
        assert!(c3.contains(&vec![-1, 1, 1]));
        assert!(!c3.contains(&vec![-1, -1, 1]));
        // m = 1: positives only.
        assert_eq!(enumerate_dominant_configs(1).unwrap(), vec![vec![1]]);
        assert!(enumerate_dominant_configs(0).is_err());
        assert!(enumerate_dominant_configs(21).is_err());
    }

    #[test]
    fn config_counts_match_binomial_sums() {
        for m in 1..=20 {
            let count = enumerate_dominant_configs(m).unwrap().len() as u128;
            let expected: u128 = (0..=(m / 2) as u32)
                .map(|k| binomial_exact(m as u32, k))
                .sum();
            assert_eq!(count, expected, "m = {m}");
        }
    }

    #[test]
    fn brute_force_matches_closed_form_on_a_grid() {
        for m in 1..=10 {
            for pi in [0.07f64, 0.3, 0.5, 0.77] {
                let spec = ProblemSpec::new(pi, m).unwrap();
                let c = compute_coefficients(&spec);
                let (a, b, z) = brute_force_coefficients(&spec).unwrap();
                assert!((c.a - a).abs() < 1e-12, "a: m={m} pi={pi}");
                assert!((c.b - b).abs() < 1e-12, "b: m={m} pi={pi}");
                assert!((c.z - z).abs() < 1e-12, "z: m={m} pi={pi}");
            }
        }
    }

    #[test]
    fn worked_toy_supervised_risk_is_frozen_value() {
        // Hand-computed: 0.5*0.8*0.09 + 0.5*0.3*0.49 + 0.5*0.2*0.36 +
        // 0.5*0.7*0.16 = 0.2015.
        let toy = worked_toy();
        let spec = ProblemSpec::new(0.5, 2).unwrap();
        let e =
            exact_estimator_expectation(&toy, &[0.4, -0.2], LossKind::Squared, &spec).unwrap();
        assert!((e.supervised - 0.2015).abs() < 1e-12, "supervised = {}", e.supervised);
        assert!(
            (e.estimator - e.supervised).abs() < 1e-12,
            "estimator {} vs supervised {}",
            e.estimator,
            e.supervised
        );
    }

    #[test]
    fn unbiasedness_holds_across_losses_and_tuple_sizes() {
        for kind in LossKind::ALL {
            for m in 1..=4 {
                for seed in 0..3u64 {
                    let toy = DiscreteToy::<f64>::random(3, 100 + seed);
                    let mut rng = stream_rng(200 + seed, 0);
                    let scores: Vec<f64> =
                        (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                    let spec = ProblemSpec::new(toy.pi_plus(), m).unwrap();
                    let e = exact_estimator_expectation(&toy, &scores, kind, &spec).unwrap();
                    assert!(
                        (e.estimator - e.supervised).abs() < 1e-10,
                        "{kind} m={m} seed={seed}: {} vs {}",
                        e.estimator,
                        e.supervised
                    );
                }
            }
        }
    }

    #[test]
    fn identical_class_conditionals_are_still_unbiased() {
        // Degenerate toy: both classes share one distribution, so the
        // features carry no signal but the identity must still hold.
        let toy = DiscreteToy::<f64>::new(0.35, vec![0.6, 0.4], vec![0.6, 0.4]).unwrap();
        let spec = ProblemSpec::new(0.35, 3).unwrap();
        let e = exact_estimator_expectation(&toy, &[1.0, -0.5], LossKind::Logistic, &spec)
            .unwrap();
        assert!((e.estimator - e.supervised).abs() < 1e-12);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let toy = DiscreteToy::<f64>::random(10, 1);
        let scores = vec![0.0; 10];
        let spec = ProblemSpec::new(0.5, 8).unwrap();
        // 10^8 tuples exceed the cap.
        assert!(matches!(
            exact_estimator_expectation(&toy, &scores, LossKind::Hinge, &spec),
            Err(Error::TooLarge(_))
        ));
        assert!(matches!(
            exact_estimator_expectation(&toy, &scores[..5], LossKind::Hinge,
                &ProblemSpec::new(0.5, 2).unwrap()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn inversion_recovers_worked_values() {
        let toy = worked_toy();
        let spec = ProblemSpec::new(0.5, 2).unwrap();
        let coeffs = compute_coefficients(&spec);
        let p_hat = toy.position_marginal(&coeffs);
        let p_u = toy.unlabeled_mixture();
        // a = 2/3, b = 1/3: marginal at point 1 is 0.63333..., mixture
        // is 0.55.
        assert!((p_hat[0] - 0.633_333_333_333_333_3).abs() < 1e-12);
        assert!((p_u[0] - 0.55).abs() < 1e-12);
        let (p_plus, p_minus) = invert_class_conditionals(&p_hat, &p_u, &coeffs, &spec).unwrap();
        assert!((p_plus[0] - 0.8).abs() < 1e-12);
        assert!((p_plus[1] - 0.2).abs() < 1e-12);
        assert!((p_minus[0] - 0.3).abs() < 1e-12);
        assert!((p_minus[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn probe_is_deterministic_and_spread_shrinks() {
        let toy = worked_toy();
        let spec = ProblemSpec::new(0.5, 2).unwrap();
        let grid = [50, 200, 800];
        let a = convergence_probe(&toy, &[0.4, -0.2], LossKind::Squared, &spec, &grid, 50, 9)
            .unwrap();
        let b = convergence_probe(&toy, &[0.4, -0.2], LossKind::Squared, &spec, &grid, 50, 9)
            .unwrap();
        assert_eq!(a, b);
        // Spread decreases along the grid.
        assert!(a.per_n[0].1 > a.per_n[2].1);
        assert!(a.slope.is_some());
    }

    #[test]
    fn degenerate_single_point_toy_has_zero_spread() {
        // One feature point: every sample is identical, std is 0 at
        // every n and the log-log fit is undefined.
        let toy = DiscreteToy::new(0.5, vec![1.0], vec![1.0]).unwrap();
        let spec = ProblemSpec::new(0.5, 2).unwrap();
        let report =
            convergence_probe(&toy, &[0.3], LossKind::Squared, &spec, &[10, 40], 10, 3).unwrap();
        for &(_, s) in &report.per_n {
            assert_eq!(s, 0.0);
        }
        assert!(report.slope.is_none());
    }

    #[test]
    fn probe_input_validation() {
        let toy = worked_toy();
        let spec = ProblemSpec::new(0.5, 2).unwrap();
        assert!(convergence_probe(&toy, &[0.1], LossKind::Hinge, &spec, &[10], 10, 1).is_err());
        assert!(
            convergence_probe(&toy, &[0.1, 0.2], LossKind::Hinge, &spec, &[], 10, 1).is_err()
        );
        assert!(
            convergence_probe(&toy, &[0.1, 0.2], LossKind::Hinge, &spec, &[0], 10, 1).is_err()
        );
        assert!(
            convergence_probe(&toy, &[0.1, 0.2], LossKind::Hinge, &spec, &[10], 1, 1).is_err()
        );
    }

    #[test]
    fn full_verification_passes_with_reduced_load() {
        let cfg = VerificationConfig {
            sampler_n: 20_000,
            ..VerificationConfig::default()
        };
        let report = run_verification(&cfg);
        for check in &report.checks {
            assert!(
                check.passed,
                "{}: deviation {} > tolerance {} ({})",
                check.name, check.max_deviation, check.tolerance, check.detail
            );
        }
        assert!(report.all_passed);
        assert_eq!(report.checks.len(), 8);
    }

    #[test]
    fn perturbed_coefficients_fail_the_identity_check() {
        // Negative control: a 1e-6 offset must be caught loudly.
        let cfg = VerificationConfig {
            sampler_n: 5_000,
            coefficient_perturbation: 1e-6,
            ..VerificationConfig::default()
        };
        let report = run_verification(&cfg);
        assert!(!report.all_passed);
        let coeff = report
            .checks
            .iter()
            .find(|c| c.name == "coefficient-identity")
            .unwrap();
        assert!(!coeff.passed);
        assert!(coeff.max_deviation >= 1e-6 - 1e-9);
    }

    #[test]
    fn report_serializes_to_json() {
        let report = VerificationReport {
            checks: vec![CheckResult::from_deviation("demo", 0.0, 1e-12, "demo".into())],
            all_passed: true,
        };
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"demo\""));
        assert!(json.contains("\"all_passed\":true"));
    }
}
