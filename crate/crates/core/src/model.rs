//! Trainable scoring models: a linear scorer and a one-hidden-layer
//! ReLU network, both with analytic backpropagation.
//!
//! Parameters live in one flat buffer whose layout is fixed by the
//! [`ModelConfig`]:
//!
//! - linear: `[w (dim), b]`
//! - MLP: `[W1 (hidden x dim, row-major), b1 (hidden), w2 (hidden), b2]`
//!
//! Initialization draws weights from the uniform Glorot range
//! `[-s, s]`, `s = sqrt(6 / (fan_in + fan_out))`, in layout order from a
//! single ChaCha stream; biases start at zero. Identical seeds therefore
//! give bit-identical parameters.
//!
//! Backprop treats the ReLU derivative at exactly zero pre-activation
//! as zero (the unit is off).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    Linear,
    Mlp { hidden: usize },
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Linear => f.write_str("linear"),
            ModelKind::Mlp { hidden } => write!(f, "mlp:{hidden}"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "linear" {
            return Ok(ModelKind::Linear);
        }
        if let Some(h) = s.strip_prefix("mlp:") {
            let hidden: usize = h
                .parse()
                .map_err(|_| Error::Parse(format!("hidden width {h:?} is not an integer")))?;
            if hidden == 0 {
                return Err(Error::Parse("hidden width must be positive".into()));
            }
            return Ok(ModelKind::Mlp { hidden });
        }
        Err(Error::Parse(format!(
            "unknown model {s:?}; expected linear|mlp:<hidden>"
        )))
    }
}

/// Model architecture: kind plus input dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub input_dim: usize,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, input_dim: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArgument(
                "model input dimension must be positive".into(),
            ));
        }
        if let ModelKind::Mlp { hidden } = kind {
            if hidden == 0 {
                return Err(Error::InvalidArgument(
                    "hidden width must be positive".into(),
                ));
            }
        }
        Ok(Self { kind, input_dim })
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        let d = self.input_dim;
        match self.kind {
            ModelKind::Linear => d + 1,
            ModelKind::Mlp { hidden } => hidden * d + hidden + hidden + 1,
        }
    }

    /// Per-sample scratch slots backprop needs (hidden pre-activations).
    pub fn scratch_len(&self) -> usize {
        match self.kind {
            ModelKind::Linear => 0,
            ModelKind::Mlp { hidden } => hidden,
        }
    }
}

/// A model's flat parameter vector, tied to its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    config: ModelConfig,
    values: Vec<T>,
}

impl<T: Real> ModelParams<T> {
    /// Glorot-uniform weights, zero biases; see the module docs.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0);
        let mut draw = |scale: f64| T::of(rng.random_range(-scale..scale));
        let d = config.input_dim;
        let mut values = vec![T::zero(); config.param_count()];
        match config.kind {
            ModelKind::Linear => {
                let s = (6.0 / (d + 1) as f64).sqrt();
                for v in values[..d].iter_mut() {
                    *v = draw(s);
                }
            }
            ModelKind::Mlp { hidden } => {
                let s1 = (6.0 / (d + hidden) as f64).sqrt();
                for v in values[..hidden * d].iter_mut() {
                    *v = draw(s1);
                }
                let s2 = (6.0 / (hidden + 1) as f64).sqrt();
                let w2 = hidden * d + hidden;
                for v in values[w2..w2 + hidden].iter_mut() {
                    *v = draw(s2);
                }
            }
        }
        Self {
            config: *config,
            values,
        }
    }

    /// Adopt an existing flat vector (checked against the layout).
    pub fn from_values(config: &ModelConfig, values: Vec<T>) -> Result<Self> {
        if values.len() != config.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a layout of {}",
                values.len(),
                config.param_count()
            )));
        }
        Ok(Self {
            config: *config,
            values,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Score a feature vector. Panics if `x` has the wrong dimension.
    pub fn forward(&self, x: &[T]) -> T {
        let mut scratch = vec![T::zero(); self.config.scratch_len()];
        self.forward_into(x, &mut scratch)
    }

    /// Score `x`, writing hidden pre-activations into `scratch`
    /// (`scratch_len` slots; empty for the linear model) for later use
    /// by [`ModelParams::backprop`].
    pub fn forward_into(&self, x: &[T], scratch: &mut [T]) -> T {
        let d = self.config.input_dim;
        assert_eq!(x.len(), d, "feature dimension mismatch");
        assert_eq!(
            scratch.len(),
            self.config.scratch_len(),
            "scratch size mismatch"
        );
        match self.config.kind {
            ModelKind::Linear => {
                let mut t = self.values[d];
                for (wi, xi) in self.values[..d].iter().zip(x) {
                    t += *wi * *xi;
                }
                t
            }
            ModelKind::Mlp { hidden } => {
                let (w1, rest) = self.values.split_at(hidden * d);
                let (b1, rest) = rest.split_at(hidden);
                let (w2, b2) = rest.split_at(hidden);
                let mut t = b2[0];
                for j in 0..hidden {
                    let mut z = b1[j];
                    for (wjk, xk) in w1[j * d..(j + 1) * d].iter().zip(x) {
                        z += *wjk * *xk;
                    }
                    scratch[j] = z;
                    if z > T::zero() {
                        t += w2[j] * z;
                    }
                }
                t
            }
        }
    }

    /// Accumulate `upstream * d score / d theta` into `grad`, reusing
    /// the pre-activations recorded by [`ModelParams::forward_into`].
    pub fn backprop(&self, x: &[T], scratch: &[T], upstream: T, grad: &mut [T]) {
        let d = self.config.input_dim;
        assert_eq!(x.len(), d, "feature dimension mismatch");
        assert_eq!(grad.len(), self.values.len(), "gradient buffer mismatch");
        assert_eq!(
            scratch.len(),
            self.config.scratch_len(),
            "scratch size mismatch"
        );
        match self.config.kind {
            ModelKind::Linear => {
                for (gi, xi) in grad[..d].iter_mut().zip(x) {
                    *gi += upstream * *xi;
                }
                grad[d] += upstream;
            }
            ModelKind::Mlp { hidden } => {
                let w2_off = hidden * d + hidden;
                for j in 0..hidden {
                    let z = scratch[j];
                    if z > T::zero() {
                        grad[w2_off + j] += upstream * z;
                        let gj = upstream * self.values[w2_off + j];
                        grad[hidden * d + j] += gj;
                        for (gk, xk) in grad[j * d..(j + 1) * d].iter_mut().zip(x) {
                            *gk += gj * *xk;
                        }
                    }
                }
                grad[w2_off + hidden] += upstream;
            }
        }
    }
}
