//! Experiment execution: load pools, draw weakly supervised samples,
//! train every (seed, method) combination, and aggregate results.
//!
//! Seed discipline: each trial seed `s` is split into independent
//! sub-seeds — tuples `derive_seed(s, 1)`, unlabeled `derive_seed(s, 2)`,
//! training `derive_seed(s, 3)`, baseline clustering `derive_seed(s, 5)`
//! — so the methods of one trial share identical data and identical
//! parameter initialization, differing only in the risk correction.
//! Synthetic pools use fixed dataset seeds independent of trial seeds.

use anyhow::{Context, Result};
use mdpu_core::datasets::{gen_gaussians, read_idx_images, read_idx_labels, read_pool, RelabelRule};
use mdpu_core::kmeans::evaluate_baseline;
use mdpu_core::model::ModelConfig;
use mdpu_core::optim::OptimConfig;
use mdpu_core::rng::derive_seed;
use mdpu_core::train::{train, TrainConfig};
use mdpu_core::tuplegen::{sample_mdp_tuples, sample_unlabeled, LabeledPool, MTupleBatch};
use mdpu_core::{LabeledPool64, Matrix64, ProblemSpec64, TrainReport64};
use serde_json::json;

use crate::config::{DataSource, ExperimentConfig};
use crate::output::{
    Aggregate, ExperimentSummary, MethodSummary, ResultRow, ROWS_SCHEMA_VERSION,
    SUMMARY_SCHEMA_VERSION,
};

/// Dataset seed for synthetic train pools (fixed so the pool is a
/// property of the config, not of the trial seeds).
const TRAIN_POOL_SEED: u64 = 101;
/// Dataset seed for synthetic test pools.
const TEST_POOL_SEED: u64 = 202;

/// A labeled train pool plus a labeled test set.
pub struct LoadedData {
    pub pool: LabeledPool64,
    pub test_features: Matrix64,
    pub test_labels: Vec<i8>,
}

impl LoadedData {
    pub fn test_empirical_prior(&self) -> f64 {
        let pos = self.test_labels.iter().filter(|&&y| y == 1).count();
        pos as f64 / self.test_labels.len().max(1) as f64
    }
}

/// Materialize the train pool and test set described by `source`.
pub fn load_data(source: &DataSource) -> Result<LoadedData> {
    match source {
        DataSource::Synthetic(g) => {
            let pool = gen_gaussians::<f64>(
                g.train_per_class,
                &g.mean_plus,
                &g.mean_minus,
                g.sigma,
                TRAIN_POOL_SEED,
            )
            .context("generating synthetic train pool")?;
            let test = gen_gaussians::<f64>(
                g.test_per_class,
                &g.mean_plus,
                &g.mean_minus,
                g.sigma,
                TEST_POOL_SEED,
            )
            .context("generating synthetic test pool")?;
            let (test_features, test_labels) = (test.features().clone(), test.labels().to_vec());
            Ok(LoadedData {
                pool,
                test_features,
                test_labels,
            })
        }
        DataSource::Pools { train, test } => {
            let pool = read_pool::<f64>(train)
                .with_context(|| format!("reading train pool {}", train.display()))?;
            let test_pool = read_pool::<f64>(test)
                .with_context(|| format!("reading test pool {}", test.display()))?;
            let (test_features, test_labels) =
                (test_pool.features().clone(), test_pool.labels().to_vec());
            Ok(LoadedData {
                pool,
                test_features,
                test_labels,
            })
        }
        DataSource::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            relabel,
        } => {
            let rule = RelabelRule::by_name(relabel)?;
            let load = |images: &std::path::Path, labels: &std::path::Path| -> Result<_> {
                let x = read_idx_images::<f64>(images)
                    .with_context(|| format!("reading {}", images.display()))?;
                let raw = read_idx_labels(labels)
                    .with_context(|| format!("reading {}", labels.display()))?;
                let y = rule.relabel(&raw)?;
                Ok((x, y))
            };
            let (train_x, train_y) = load(train_images, train_labels)?;
            let (test_features, test_labels) = load(test_images, test_labels)?;
            let pool = LabeledPool::new(train_x, train_y)?;
            Ok(LoadedData {
                pool,
                test_features,
                test_labels,
            })
        }
    }
}

/// One trained (seed, method) run; runs appear in seed-major order, so
/// a method's runs line up with `cfg.seeds`.
pub struct RunOutcome {
    pub method: String,
    pub report: TrainReport64,
}

/// Everything an experiment produces.
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub summary: ExperimentSummary,
}

/// Train every seed x correction combination of `cfg` on `data`.
pub fn run_experiment(cfg: &ExperimentConfig, data: &LoadedData) -> Result<ExperimentResult> {
    let spec = ProblemSpec64::new(cfg.pi_plus, cfg.m)?;
    let model = ModelConfig::new(cfg.model, data.pool.dim())?;
    let optim = OptimConfig::new(cfg.optim, cfg.learning_rate, cfg.weight_decay)?;

    let mut rows = Vec::new();
    let mut outcomes: Vec<RunOutcome> = Vec::new();
    for &seed in &cfg.seeds {
        let tuples = sample_mdp_tuples(&data.pool, &spec, cfg.n_mdp, derive_seed(seed, 1))?;
        let unlabeled =
            sample_unlabeled(&data.pool, cfg.pi_plus, cfg.n_u, derive_seed(seed, 2))?;
        for &correction in &cfg.corrections {
            let train_cfg = TrainConfig {
                loss: cfg.loss,
                correction,
                scope: cfg.scope,
                epochs: cfg.epochs,
                batch_mdp: cfg.batch_mdp,
                batch_u: cfg.batch_u,
                seed: derive_seed(seed, 3),
            };
            let report = train(
                &model,
                &optim,
                &train_cfg,
                &tuples,
                &unlabeled,
                &data.test_features,
                &data.test_labels,
                &spec,
            )
            .with_context(|| format!("training method {correction} with seed {seed}"))?;
            let method = correction.to_string();
            for rec in &report.records {
                rows.push(ResultRow {
                    method: method.clone(),
                    loss: cfg.loss.to_string(),
                    pi_plus: cfg.pi_plus,
                    m: cfg.m,
                    n_mdp: cfg.n_mdp,
                    n_u: cfg.n_u,
                    seed,
                    epoch: rec.epoch,
                    train_risk_raw: rec.train_raw,
                    train_risk_corrected: rec.train_corrected,
                    test_accuracy: rec.test_accuracy,
                });
            }
            outcomes.push(RunOutcome { method, report });
        }
    }

    let summary = summarize(cfg, data, &outcomes);
    Ok(ExperimentResult { rows, summary })
}

/// Aggregate per-method statistics across seeds. With no epochs there
/// is nothing to aggregate; the summary carries a note instead.
fn summarize(
    cfg: &ExperimentConfig,
    data: &LoadedData,
    outcomes: &[RunOutcome],
) -> ExperimentSummary {
    let mut methods = Vec::new();
    for correction in &cfg.corrections {
        let name = correction.to_string();
        let runs: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.method == name).collect();
        let (final_acc, avg_acc, final_raw) = if cfg.epochs == 0 {
            (None, None, None)
        } else {
            let finals: Vec<f64> = runs
                .iter()
                .map(|o| o.report.records.last().expect("epochs > 0").test_accuracy)
                .collect();
            let avgs: Vec<f64> = runs
                .iter()
                .map(|o| {
                    let accs: Vec<f64> =
                        o.report.records.iter().map(|r| r.test_accuracy).collect();
                    mdpu_core::stats::mean(&accs)
                })
                .collect();
            let raws: Vec<f64> = runs
                .iter()
                .map(|o| o.report.records.last().expect("epochs > 0").train_raw)
                .collect();
            (
                Some(Aggregate::from_values(finals)),
                Some(Aggregate::from_values(avgs)),
                Some(Aggregate::from_values(raws)),
            )
        };
        methods.push(MethodSummary {
            method: name,
            final_accuracy: final_acc,
            epoch_avg_accuracy: avg_acc,
            final_train_raw: final_raw,
        });
    }
    ExperimentSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        rows_schema_version: ROWS_SCHEMA_VERSION,
        experiment: cfg.describe(),
        test_n: data.test_labels.len(),
        test_empirical_prior: data.test_empirical_prior(),
        methods,
        note: (cfg.epochs == 0).then(|| "empty trajectory: 0 epochs, no rows recorded".into()),
    }
}

/// Per-seed k-means baseline results as a JSON document.
pub fn run_baseline(
    cfg: &ExperimentConfig,
    data: &LoadedData,
    restarts: usize,
) -> Result<serde_json::Value> {
    let spec = ProblemSpec64::new(cfg.pi_plus, cfg.m)?;
    let mut per_seed = Vec::new();
    let mut accuracies = Vec::new();
    for &seed in &cfg.seeds {
        let tuples: MTupleBatch<f64> =
            sample_mdp_tuples(&data.pool, &spec, cfg.n_mdp, derive_seed(seed, 1))?;
        let report = evaluate_baseline(
            &tuples,
            &data.test_features,
            &data.test_labels,
            restarts,
            derive_seed(seed, 5),
        )?;
        accuracies.push(report.accuracy);
        per_seed.push(json!({
            "seed": seed,
            "accuracy": report.accuracy,
            "mapping_cluster0": report.mapping_cluster0,
            "inertia": report.inertia,
            "iterations": report.iterations,
        }));
    }
    let agg = Aggregate::from_values(accuracies);
    Ok(json!({
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "method": "kmeans",
        "experiment": cfg.describe(),
        "restarts": restarts,
        "test_n": data.test_labels.len(),
        "test_empirical_prior": data.test_empirical_prior(),
        "per_seed": per_seed,
        "accuracy": serde_json::to_value(&agg).expect("aggregate serializes"),
    }))
}
