//! Experiment configuration: defaults, `key = value` config files, and
//! command-line overrides, merged in that order of precedence.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use mdpu_core::{CorrectionKind, CorrectionScope, LossKind, ModelKind, OptimAlgorithm};
use serde_json::json;

/// Synthetic two-Gaussian pool description.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussParams {
    pub mean_plus: Vec<f64>,
    pub mean_minus: Vec<f64>,
    pub sigma: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
}

impl Default for GaussParams {
    fn default() -> Self {
        Self {
            mean_plus: vec![1.5, 1.5],
            mean_minus: vec![-1.5, -1.5],
            sigma: 1.0,
            train_per_class: 5000,
            test_per_class: 2000,
        }
    }
}

/// Where the labeled pools come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Generate train/test pools from two isotropic Gaussians.
    Synthetic(GaussParams),
    /// Read train/test pools from matrix files.
    Pools { train: PathBuf, test: PathBuf },
    /// Read IDX image/label files and relabel them to a binary task.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        relabel: String,
    },
}

impl DataSource {
    fn describe(&self) -> serde_json::Value {
        match self {
            DataSource::Synthetic(g) => json!({
                "kind": "synthetic",
                "mean_plus": g.mean_plus,
                "mean_minus": g.mean_minus,
                "sigma": g.sigma,
                "train_per_class": g.train_per_class,
                "test_per_class": g.test_per_class,
            }),
            DataSource::Pools { train, test } => json!({
                "kind": "pools",
                "train": train.display().to_string(),
                "test": test.display().to_string(),
            }),
            DataSource::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                relabel,
            } => json!({
                "kind": "idx",
                "train_images": train_images.display().to_string(),
                "train_labels": train_labels.display().to_string(),
                "test_images": test_images.display().to_string(),
                "test_labels": test_labels.display().to_string(),
                "relabel": relabel,
            }),
        }
    }
}

/// Fully resolved experiment description. Every run is a function of
/// this struct alone, so serializing it into the summary makes results
/// self-describing.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub pi_plus: f64,
    pub m: usize,
    pub n_mdp: usize,
    pub n_u: usize,
    pub loss: LossKind,
    /// One training method per correction; all share data and init.
    pub corrections: Vec<CorrectionKind>,
    pub scope: CorrectionScope,
    pub model: ModelKind,
    pub optim: OptimAlgorithm,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_mdp: usize,
    pub batch_u: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic(GaussParams::default()),
            pi_plus: 0.5,
            m: 2,
            n_mdp: 2000,
            n_u: 2000,
            loss: LossKind::Logistic,
            corrections: vec![CorrectionKind::Relu],
            scope: CorrectionScope::PerComponent,
            model: ModelKind::Linear,
            optim: OptimAlgorithm::adam(),
            learning_rate: 1e-3,
            weight_decay: 0.0,
            epochs: 50,
            batch_mdp: 500,
            batch_u: 500,
            seeds: vec![1, 2, 3],
            out: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    /// JSON echo with every enum rendered through its CLI spelling.
    pub fn describe(&self) -> serde_json::Value {
        json!({
            "source": self.source.describe(),
            "pi_plus": self.pi_plus,
            "m": self.m,
            "n_mdp": self.n_mdp,
            "n_u": self.n_u,
            "loss": self.loss.to_string(),
            "corrections": self.corrections.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "scope": self.scope.to_string(),
            "model": self.model.to_string(),
            "optim": self.optim.to_string(),
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
            "epochs": self.epochs,
            "batch_mdp": self.batch_mdp,
            "batch_u": self.batch_u,
            "seeds": self.seeds,
        })
    }
}

/// Parse comma-separated values ("0.4,0.5,0.6") with a field name for
/// error messages.
pub fn parse_list<T>(text: &str, what: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    let items: Result<Vec<T>> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| anyhow!("bad {what} entry {s:?}: {e}"))
        })
        .collect();
    let items = items?;
    if items.is_empty() {
        bail!("{what} list is empty");
    }
    Ok(items)
}

/// Parse a `key = value` config file body into an ordered map. Blank
/// lines and `#` comments are skipped; duplicate keys are an error.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`, got {raw:?}", idx + 1))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() {
            bail!("line {}: empty key", idx + 1);
        }
        if map.insert(key.clone(), value).is_some() {
            bail!("line {}: duplicate key {key:?}", idx + 1);
        }
    }
    Ok(map)
}

/// Partial data-source selection accumulated from file keys and flags;
/// resolved into a [`DataSource`] at the end.
#[derive(Debug, Clone, Default)]
struct SourceBuilder {
    kind: Option<String>,
    gauss: GaussParams,
    pool_train: Option<PathBuf>,
    pool_test: Option<PathBuf>,
    idx_train_images: Option<PathBuf>,
    idx_train_labels: Option<PathBuf>,
    idx_test_images: Option<PathBuf>,
    idx_test_labels: Option<PathBuf>,
    relabel: Option<String>,
}

impl SourceBuilder {
    fn resolve(self) -> Result<DataSource> {
        // Explicit kind wins; otherwise infer from which paths appeared.
        let kind = match self.kind.as_deref() {
            Some(k) => k.to_string(),
            None if self.idx_train_images.is_some() => "idx".into(),
            None if self.pool_train.is_some() => "pools".into(),
            None => "synthetic".into(),
        };
        match kind.as_str() {
            "synthetic" => {
                let g = self.gauss;
                if g.mean_plus.len() != g.mean_minus.len() || g.mean_plus.is_empty() {
                    bail!("gaussian means must be non-empty and of equal dimension");
                }
                if !(g.sigma.is_finite() && g.sigma > 0.0) {
                    bail!("gaussian sigma must be positive, got {}", g.sigma);
                }
                if g.train_per_class == 0 || g.test_per_class == 0 {
                    bail!("per-class pool sizes must be positive");
                }
                Ok(DataSource::Synthetic(g))
            }
            "pools" => Ok(DataSource::Pools {
                train: self.pool_train.context("pools source needs a train pool path")?,
                test: self.pool_test.context("pools source needs a test pool path")?,
            }),
            "idx" => Ok(DataSource::Idx {
                train_images: self.idx_train_images.context("idx source needs train images")?,
                train_labels: self.idx_train_labels.context("idx source needs train labels")?,
                test_images: self.idx_test_images.context("idx source needs test images")?,
                test_labels: self.idx_test_labels.context("idx source needs test labels")?,
                relabel: self.relabel.unwrap_or_else(|| "mnist".into()),
            }),
            other => bail!("unknown data source {other:?} (synthetic, pools, idx)"),
        }
    }
}

/// Command-line overrides, all optional; `None` means "not given".
/// Subcommands construct this from their clap arguments.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub pi: Option<f64>,
    pub m: Option<usize>,
    pub n_mdp: Option<usize>,
    pub n_u: Option<usize>,
    pub loss: Option<LossKind>,
    pub corrections: Option<Vec<CorrectionKind>>,
    pub scope: Option<CorrectionScope>,
    pub model: Option<ModelKind>,
    pub optim: Option<OptimAlgorithm>,
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_mdp: Option<usize>,
    pub batch_u: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub pool_train: Option<PathBuf>,
    pub pool_test: Option<PathBuf>,
    pub idx_train_images: Option<PathBuf>,
    pub idx_train_labels: Option<PathBuf>,
    pub idx_test_images: Option<PathBuf>,
    pub idx_test_labels: Option<PathBuf>,
    pub relabel: Option<String>,
    pub gauss_mean_plus: Option<Vec<f64>>,
    pub gauss_mean_minus: Option<Vec<f64>>,
    pub gauss_sigma: Option<f64>,
    pub gauss_train_per_class: Option<usize>,
    pub gauss_test_per_class: Option<usize>,
}

fn parse_value<T>(key: &str, value: &str) -> Result<T>
where
    T: FromStr,
    T::Err: Display,
{
    value
        .parse::<T>()
        .map_err(|e| anyhow!("config key {key}: bad value {value:?}: {e}"))
}

/// Build the final configuration: defaults, then the config file, then
/// command-line overrides.
pub fn resolve(file: Option<&std::path::Path>, ov: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut src = SourceBuilder::default();

    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let map =
            parse_config_text(&text).with_context(|| format!("parsing {}", path.display()))?;
        for (key, value) in &map {
            apply_file_key(&mut cfg, &mut src, key, value)?;
        }
    }

    // Command-line overrides.
    macro_rules! take {
        ($field:ident, $ov:ident) => {
            if let Some(v) = ov.$ov.clone() {
                cfg.$field = v;
            }
        };
    }
    take!(pi_plus, pi);
    take!(m, m);
    take!(n_mdp, n_mdp);
    take!(n_u, n_u);
    take!(loss, loss);
    take!(corrections, corrections);
    take!(scope, scope);
    take!(model, model);
    take!(optim, optim);
    take!(learning_rate, lr);
    take!(weight_decay, weight_decay);
    take!(epochs, epochs);
    take!(batch_mdp, batch_mdp);
    take!(batch_u, batch_u);
    take!(seeds, seeds);
    take!(out, out);

    if let Some(v) = ov.pool_train.clone() {
        src.pool_train = Some(v);
        src.kind.get_or_insert_with(|| "pools".into());
    }
    if let Some(v) = ov.pool_test.clone() {
        src.pool_test = Some(v);
    }
    if let Some(v) = ov.idx_train_images.clone() {
        src.idx_train_images = Some(v);
        src.kind = Some("idx".into());
    }
    if let Some(v) = ov.idx_train_labels.clone() {
        src.idx_train_labels = Some(v);
    }
    if let Some(v) = ov.idx_test_images.clone() {
        src.idx_test_images = Some(v);
    }
    if let Some(v) = ov.idx_test_labels.clone() {
        src.idx_test_labels = Some(v);
    }
    if let Some(v) = ov.relabel.clone() {
        src.relabel = Some(v);
    }
    if let Some(v) = ov.gauss_mean_plus.clone() {
        src.gauss.mean_plus = v;
    }
    if let Some(v) = ov.gauss_mean_minus.clone() {
        src.gauss.mean_minus = v;
    }
    if let Some(v) = ov.gauss_sigma {
        src.gauss.sigma = v;
    }
    if let Some(v) = ov.gauss_train_per_class {
        src.gauss.train_per_class = v;
    }
    if let Some(v) = ov.gauss_test_per_class {
        src.gauss.test_per_class = v;
    }

    cfg.source = src.resolve()?;
    validate(&cfg)?;
    Ok(cfg)
}

fn apply_file_key(
    cfg: &mut ExperimentConfig,
    src: &mut SourceBuilder,
    key: &str,
    value: &str,
) -> Result<()> {
    match key {
        "problem.pi" => cfg.pi_plus = parse_value(key, value)?,
        "problem.m" => cfg.m = parse_value(key, value)?,
        "data.source" => src.kind = Some(value.to_string()),
        "data.n_mdp" => cfg.n_mdp = parse_value(key, value)?,
        "data.n_u" => cfg.n_u = parse_value(key, value)?,
        "gauss.mean_plus" => src.gauss.mean_plus = parse_list(value, key)?,
        "gauss.mean_minus" => src.gauss.mean_minus = parse_list(value, key)?,
        "gauss.sigma" => src.gauss.sigma = parse_value(key, value)?,
        "gauss.train_per_class" => src.gauss.train_per_class = parse_value(key, value)?,
        "gauss.test_per_class" => src.gauss.test_per_class = parse_value(key, value)?,
        "pools.train" => src.pool_train = Some(PathBuf::from(value)),
        "pools.test" => src.pool_test = Some(PathBuf::from(value)),
        "idx.train_images" => src.idx_train_images = Some(PathBuf::from(value)),
        "idx.train_labels" => src.idx_train_labels = Some(PathBuf::from(value)),
        "idx.test_images" => src.idx_test_images = Some(PathBuf::from(value)),
        "idx.test_labels" => src.idx_test_labels = Some(PathBuf::from(value)),
        "idx.relabel" => src.relabel = Some(value.to_string()),
        "model.kind" => cfg.model = parse_value(key, value)?,
        "optim.algorithm" => cfg.optim = parse_value(key, value)?,
        "optim.learning_rate" => cfg.learning_rate = parse_value(key, value)?,
        "optim.weight_decay" => cfg.weight_decay = parse_value(key, value)?,
        "train.loss" => cfg.loss = parse_value(key, value)?,
        "train.correction" => cfg.corrections = parse_list(value, key)?,
        "train.scope" => cfg.scope = parse_value(key, value)?,
        "train.epochs" => cfg.epochs = parse_value(key, value)?,
        "train.batch_mdp" => cfg.batch_mdp = parse_value(key, value)?,
        "train.batch_u" => cfg.batch_u = parse_value(key, value)?,
        "run.seeds" => cfg.seeds = parse_list(value, key)?,
        "run.out" => cfg.out = PathBuf::from(value),
        other => bail!("unknown config key {other:?}"),
    }
    Ok(())
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if !(cfg.pi_plus.is_finite() && cfg.pi_plus > 0.0 && cfg.pi_plus < 1.0) {
        bail!("pi must lie in (0, 1), got {}", cfg.pi_plus);
    }
    if cfg.m == 0 {
        bail!("m must be positive");
    }
    if cfg.n_mdp == 0 || cfg.n_u == 0 {
        bail!("n-mdp and n-u must be positive");
    }
    if cfg.corrections.is_empty() {
        bail!("at least one correction method is required");
    }
    if cfg.batch_mdp == 0 || cfg.batch_u == 0 {
        bail!("batch sizes must be positive");
    }
    if cfg.seeds.is_empty() {
        bail!("at least one seed is required");
    }
    Ok(())
}
