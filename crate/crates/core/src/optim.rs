//! First-order optimizers: SGD with momentum and Adam, both with
//! decoupled weight decay (`theta -= lr * wd * theta` applied alongside
//! the gradient step, never folded into the moment estimates).

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OptimAlgorithm {
    Sgd { momentum: f64 },
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimAlgorithm {
    /// Adam with the customary moment constants.
    pub fn adam() -> Self {
        OptimAlgorithm::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl fmt::Display for OptimAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimAlgorithm::Sgd { momentum } if *momentum == 0.0 => f.write_str("sgd"),
            OptimAlgorithm::Sgd { momentum } => write!(f, "sgd:{momentum}"),
            OptimAlgorithm::Adam { .. } => f.write_str("adam"),
        }
    }
}

impl FromStr for OptimAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "adam" {
            return Ok(OptimAlgorithm::adam());
        }
        if s == "sgd" {
            return Ok(OptimAlgorithm::Sgd { momentum: 0.0 });
        }
        if let Some(mu) = s.strip_prefix("sgd:") {
            let momentum: f64 = mu
                .parse()
                .map_err(|_| Error::Parse(format!("momentum {mu:?} is not a number")))?;
            return Ok(OptimAlgorithm::Sgd { momentum });
        }
        Err(Error::Parse(format!(
            "unknown optimizer {s:?}; expected sgd|sgd:<momentum>|adam"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimConfig {
    pub algorithm: OptimAlgorithm,
    pub learning_rate: f64,
    pub weight_decay: f64,
}

impl OptimConfig {
    pub fn new(algorithm: OptimAlgorithm, learning_rate: f64, weight_decay: f64) -> Result<Self> {
        if !learning_rate.is_finite() || learning_rate <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if !weight_decay.is_finite() || weight_decay < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "weight decay must be non-negative, got {weight_decay}"
            )));
        }
        match algorithm {
            OptimAlgorithm::Sgd { momentum } => {
                if !momentum.is_finite() || !(0.0..1.0).contains(&momentum) {
                    return Err(Error::InvalidArgument(format!(
                        "momentum must lie in [0, 1), got {momentum}"
                    )));
                }
            }
            OptimAlgorithm::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                for (name, beta) in [("beta1", beta1), ("beta2", beta2)] {
                    if !beta.is_finite() || !(0.0..1.0).contains(&beta) {
                        return Err(Error::InvalidArgument(format!(
                            "{name} must lie in [0, 1), got {beta}"
                        )));
                    }
                }
                if !epsilon.is_finite() || epsilon <= 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "epsilon must be positive, got {epsilon}"
                    )));
                }
            }
        }
        Ok(Self {
            algorithm,
            learning_rate,
            weight_decay,
        })
    }
}

/// Optimizer state for a fixed-size parameter vector.
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    config: OptimConfig,
    /// SGD velocity, or Adam first moment.
    m: Vec<T>,
    /// Adam second moment (unused by SGD).
    v: Vec<T>,
    steps: u64,
}

impl<T: Real> Optimizer<T> {
    pub fn new(config: OptimConfig, n_params: usize) -> Self {
        let v = match config.algorithm {
            OptimAlgorithm::Sgd { .. } => Vec::new(),
            OptimAlgorithm::Adam { .. } => vec![T::zero(); n_params],
        };
        Self {
            config,
            m: vec![T::zero(); n_params],
            v,
            steps: 0,
        }
    }

    pub fn config(&self) -> &OptimConfig {
        &self.config
    }

    /// Apply one update in place. Panics if `params` or `grads` do not
    /// match the size the optimizer was built for.
    pub fn step(&mut self, params: &mut [T], grads: &[T]) {
        assert_eq!(params.len(), self.m.len(), "parameter count mismatch");
        assert_eq!(grads.len(), self.m.len(), "gradient count mismatch");
        self.steps += 1;
        let lr = T::of(self.config.learning_rate);
        let wd = T::of(self.config.weight_decay);
        match self.config.algorithm {
            OptimAlgorithm::Sgd { momentum } => {
                let mu = T::of(momentum);
                for i in 0..params.len() {
                    self.m[i] = mu * self.m[i] + grads[i];
                    params[i] -= lr * self.m[i] + lr * wd * params[i];
                }
            }
            OptimAlgorithm::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let b1 = T::of(beta1);
                let b2 = T::of(beta2);
                let eps = T::of(epsilon);
                let c1 = T::one() - T::of(beta1.powi(self.steps as i32));
                let c2 = T::one() - T::of(beta2.powi(self.steps as i32));
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
                    self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= lr * m_hat / (v_hat.sqrt() + eps) + lr * wd * params[i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sgd(lr: f64, momentum: f64, wd: f64) -> OptimConfig {
        OptimConfig::new(OptimAlgorithm::Sgd { momentum }, lr, wd).unwrap()
    }

    fn adam(lr: f64, wd: f64) -> OptimConfig {
        OptimConfig::new(OptimAlgorithm::adam(), lr, wd).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(OptimConfig::new(OptimAlgorithm::adam(), 0.0, 0.0).is_err());
        assert!(OptimConfig::new(OptimAlgorithm::adam(), -1.0, 0.0).is_err());
        assert!(OptimConfig::new(OptimAlgorithm::adam(), 0.1, -0.1).is_err());
        assert!(OptimConfig::new(OptimAlgorithm::Sgd { momentum: 1.0 }, 0.1, 0.0).is_err());
        assert!(OptimConfig::new(OptimAlgorithm::Sgd { momentum: -0.1 }, 0.1, 0.0).is_err());
        assert!(sgd(0.1, 0.9, 0.0).learning_rate == 0.1);
    }

    #[test]
    fn parsing_round_trips() {
        assert_eq!(
            "sgd".parse::<OptimAlgorithm>().unwrap(),
            OptimAlgorithm::Sgd { momentum: 0.0 }
        );
        assert_eq!(
            "sgd:0.9".parse::<OptimAlgorithm>().unwrap(),
            OptimAlgorithm::Sgd { momentum: 0.9 }
        );
        assert_eq!("adam".parse::<OptimAlgorithm>().unwrap(), OptimAlgorithm::adam());
        assert!("rmsprop".parse::<OptimAlgorithm>().is_err());
        assert_eq!(OptimAlgorithm::Sgd { momentum: 0.9 }.to_string(), "sgd:0.9");
        assert_eq!(OptimAlgorithm::Sgd { momentum: 0.0 }.to_string(), "sgd");
    }

    #[test]
    fn plain_sgd_step_by_hand() {
        let mut opt = Optimizer::new(sgd(0.1, 0.0, 0.0), 1);
        let mut p = vec![1.0_f64];
        opt.step(&mut p, &[0.5]);
        assert!((p[0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn momentum_accumulates_velocity() {
        let mut opt = Optimizer::new(sgd(0.1, 0.9, 0.0), 1);
        let mut p = vec![0.0_f64];
        opt.step(&mut p, &[1.0]); // v = 1.0, p = -0.1
        assert!((p[0] + 0.1).abs() < 1e-15);
        opt.step(&mut p, &[1.0]); // v = 1.9, p = -0.1 - 0.19
        assert!((p[0] + 0.29).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        // With bias correction, the first update is close to
        // lr * sign(g) regardless of gradient magnitude.
        let mut opt = Optimizer::new(adam(0.01, 0.0), 2);
        let mut p = vec![0.0_f64, 0.0];
        opt.step(&mut p, &[3.0, -0.004]);
        assert!((p[0] + 0.01).abs() < 1e-6, "p = {}", p[0]);
        assert!((p[1] - 0.01).abs() < 1e-5, "p = {}", p[1]);
    }

    #[test]
    fn weight_decay_is_decoupled() {
        // Zero gradient: parameters shrink geometrically by lr * wd and
        // the moment estimates stay at zero for both algorithms.
        for cfg in [sgd(0.1, 0.9, 0.5), adam(0.1, 0.5)] {
            let mut opt = Optimizer::new(cfg, 1);
            let mut p = vec![2.0_f64];
            opt.step(&mut p, &[0.0]);
            assert!((p[0] - 2.0 * (1.0 - 0.05)).abs() < 1e-12, "{cfg:?}");
            opt.step(&mut p, &[0.0]);
            assert!((p[0] - 2.0 * 0.95 * 0.95).abs() < 1e-12, "{cfg:?}");
        }
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        // f(p) = (p - 3)^2, gradient 2 (p - 3).
        let mut opt = Optimizer::new(adam(0.05, 0.0), 1);
        let mut p = vec![0.0_f64];
        for _ in 0..500 {
            let g = 2.0 * (p[0] - 3.0);
            opt.step(&mut p, &[g]);
        }
        assert!((p[0] - 3.0).abs() < 1e-2, "p = {}", p[0]);
    }

    #[test]
    fn steps_are_deterministic() {
        let run = || {
            let mut opt = Optimizer::new(adam(0.01, 0.01), 3);
            let mut p = vec![0.5_f64, -0.25, 1.0];
            for k in 0..50 {
                let g: Vec<f64> = p.iter().map(|&x| (x * (k as f64 + 1.0)).sin()).collect();
                opt.step(&mut p, &g);
            }
            p
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    #[test]
    #[should_panic(expected = "count mismatch")]
    fn mismatched_sizes_panic() {
        let mut opt = Optimizer::<f64>::new(adam(0.01, 0.0), 2);
        let mut p = vec![0.0_f64];
        opt.step(&mut p, &[0.0]);
    }
}
