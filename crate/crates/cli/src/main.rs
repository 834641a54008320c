//! `mdpu` — train and audit binary classifiers learned from
//! dominant-positive m-tuples plus unlabeled data.
//!
//! Subcommands: `gen-data` (materialize pools), `train` (one config,
//! several correction methods), `sweep` (cross priors x losses x
//! sample sizes), `baseline-kmeans` (unsupervised reference), and
//! `verify` (brute-force oracle suite; nonzero exit on any failure).
//! All outputs are deterministic functions of the configuration and
//! seeds — no timestamps, no environment dependence.

mod config;
mod output;
mod runner;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mdpu_core::datasets::{write_pool, write_tuple_batch, write_unlabeled};
use mdpu_core::oracle::{run_verification, VerificationConfig};
use mdpu_core::rng::derive_seed;
use mdpu_core::tuplegen::{empirical_position_stats, sample_mdp_tuples, sample_unlabeled};
use mdpu_core::{CorrectionKind, CorrectionScope, LossKind, ModelKind, OptimAlgorithm, ProblemSpec64};
use serde_json::json;

use config::{parse_list, resolve, ExperimentConfig, Overrides};
use output::{atomic_write, rows_to_csv, ROWS_SCHEMA_VERSION, SUMMARY_SCHEMA_VERSION};
use runner::{load_data, run_baseline, run_experiment};

#[derive(Parser)]
#[command(
    name = "mdpu",
    version,
    about = "Learning binary classifiers from dominant m-tuples and unlabeled data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write train/test pools (and optionally tuple batches) to disk.
    GenData(GenDataArgs),
    /// Train one or more correction methods on a single configuration.
    Train(TrainArgs),
    /// Cross priors x losses x tuple counts in one combined run.
    Sweep(SweepArgs),
    /// Unsupervised k-means baseline over concatenated tuple vectors.
    BaselineKmeans(BaselineArgs),
    /// Run the brute-force verification oracle (exit 1 on any failure).
    Verify(VerifyArgs),
}

/// Data-source flags shared by the data-consuming subcommands.
#[derive(Args, Clone, Default)]
struct SourceArgs {
    /// `key = value` config file; command-line flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Train pool matrix file (requires --pool-test).
    #[arg(long)]
    pool_train: Option<PathBuf>,
    /// Test pool matrix file.
    #[arg(long)]
    pool_test: Option<PathBuf>,
    /// IDX train image file (requires the other three --idx-* flags).
    #[arg(long)]
    idx_train_images: Option<PathBuf>,
    /// IDX train label file.
    #[arg(long)]
    idx_train_labels: Option<PathBuf>,
    /// IDX test image file.
    #[arg(long)]
    idx_test_images: Option<PathBuf>,
    /// IDX test label file.
    #[arg(long)]
    idx_test_labels: Option<PathBuf>,
    /// Label-to-sign rule for IDX ids: mnist, fashion-mnist,
    /// emnist-digits, emnist-letters, emnist-balanced.
    #[arg(long)]
    relabel: Option<String>,
    /// Synthetic positive-class mean, comma-separated coordinates.
    #[arg(long)]
    gauss_mean_plus: Option<String>,
    /// Synthetic negative-class mean, comma-separated coordinates.
    #[arg(long)]
    gauss_mean_minus: Option<String>,
    /// Synthetic isotropic standard deviation.
    #[arg(long)]
    gauss_sigma: Option<f64>,
    /// Synthetic train pool size per class.
    #[arg(long)]
    gauss_train_per_class: Option<usize>,
    /// Synthetic test pool size per class.
    #[arg(long)]
    gauss_test_per_class: Option<usize>,
}

impl SourceArgs {
    fn apply(&self, ov: &mut Overrides) -> Result<()> {
        ov.pool_train = self.pool_train.clone();
        ov.pool_test = self.pool_test.clone();
        ov.idx_train_images = self.idx_train_images.clone();
        ov.idx_train_labels = self.idx_train_labels.clone();
        ov.idx_test_images = self.idx_test_images.clone();
        ov.idx_test_labels = self.idx_test_labels.clone();
        ov.relabel = self.relabel.clone();
        if let Some(s) = &self.gauss_mean_plus {
            ov.gauss_mean_plus = Some(parse_list(s, "--gauss-mean-plus")?);
        }
        if let Some(s) = &self.gauss_mean_minus {
            ov.gauss_mean_minus = Some(parse_list(s, "--gauss-mean-minus")?);
        }
        ov.gauss_sigma = self.gauss_sigma;
        ov.gauss_train_per_class = self.gauss_train_per_class;
        ov.gauss_test_per_class = self.gauss_test_per_class;
        Ok(())
    }
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Positive class prior in (0, 1).
    #[arg(long)]
    pi: Option<f64>,
    /// Tuple size.
    #[arg(long)]
    m: Option<usize>,
    /// Number of dominant tuples to draw.
    #[arg(long)]
    n_mdp: Option<usize>,
    /// Number of unlabeled points to draw.
    #[arg(long)]
    n_u: Option<usize>,
    /// Margin loss: logistic, ramp, squared, hinge.
    #[arg(long)]
    loss: Option<String>,
    /// Correction methods, comma-separated: ure, relu, abs, slope:K.
    #[arg(long)]
    correction: Option<String>,
    /// Correction scope: whole or per-component.
    #[arg(long)]
    scope: Option<String>,
    /// Model: linear or mlp:H.
    #[arg(long)]
    model: Option<String>,
    /// Optimizer: sgd, sgd:MU, adam.
    #[arg(long)]
    optim: Option<String>,
    /// Learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Decoupled weight decay.
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Tuple minibatch size.
    #[arg(long)]
    batch_mdp: Option<usize>,
    /// Unlabeled minibatch size.
    #[arg(long)]
    batch_u: Option<usize>,
    /// Comma-separated trial seeds.
    #[arg(long)]
    seeds: Option<String>,
    /// Output prefix: writes <out>.csv and <out>.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TrainArgs {
    fn overrides(&self) -> Result<Overrides> {
        let mut ov = Overrides {
            pi: self.pi,
            m: self.m,
            n_mdp: self.n_mdp,
            n_u: self.n_u,
            lr: self.lr,
            weight_decay: self.weight_decay,
            epochs: self.epochs,
            batch_mdp: self.batch_mdp,
            batch_u: self.batch_u,
            out: self.out.clone(),
            ..Overrides::default()
        };
        if let Some(s) = &self.loss {
            ov.loss = Some(s.parse::<LossKind>()?);
        }
        if let Some(s) = &self.correction {
            ov.corrections = Some(parse_list::<CorrectionKind>(s, "--correction")?);
        }
        if let Some(s) = &self.scope {
            ov.scope = Some(s.parse::<CorrectionScope>()?);
        }
        if let Some(s) = &self.model {
            ov.model = Some(s.parse::<ModelKind>()?);
        }
        if let Some(s) = &self.optim {
            ov.optim = Some(s.parse::<OptimAlgorithm>()?);
        }
        if let Some(s) = &self.seeds {
            ov.seeds = Some(parse_list::<u64>(s, "--seeds")?);
        }
        self.source.apply(&mut ov)?;
        Ok(ov)
    }
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    base: TrainArgs,
    /// Comma-separated priors to sweep (overrides --pi).
    #[arg(long)]
    pi_list: Option<String>,
    /// Comma-separated losses to sweep (overrides --loss).
    #[arg(long)]
    loss_list: Option<String>,
    /// Comma-separated tuple counts to sweep (overrides --n-mdp; --n-u
    /// follows each count unless set explicitly).
    #[arg(long)]
    n_mdp_list: Option<String>,
}

#[derive(Args, Clone)]
struct GenDataArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Positive class prior (used when emitting tuple batches).
    #[arg(long)]
    pi: Option<f64>,
    /// Tuple size (used when emitting tuple batches).
    #[arg(long)]
    m: Option<usize>,
    /// Tuples to draw when emitting batches.
    #[arg(long)]
    n_mdp: Option<usize>,
    /// Unlabeled points to draw when emitting batches.
    #[arg(long)]
    n_u: Option<usize>,
    /// Comma-separated seeds; the first seeds batch sampling.
    #[arg(long)]
    seeds: Option<String>,
    /// Also write <out>.tuples.bin and <out>.unlabeled.bin.
    #[arg(long)]
    emit_tuples: bool,
    /// Output prefix: writes <out>.train.pool and <out>.test.pool.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BaselineArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Positive class prior in (0, 1).
    #[arg(long)]
    pi: Option<f64>,
    /// Tuple size.
    #[arg(long)]
    m: Option<usize>,
    /// Number of dominant tuples to cluster.
    #[arg(long)]
    n_mdp: Option<usize>,
    /// Comma-separated trial seeds.
    #[arg(long)]
    seeds: Option<String>,
    /// Independent k-means restarts per trial.
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Output prefix: writes <out>.json (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct VerifyArgs {
    /// Base seed for the randomized sweeps.
    #[arg(long)]
    seed: Option<u64>,
    /// Tuples per sampler-fidelity batch.
    #[arg(long)]
    sampler_n: Option<usize>,
    /// Offset added to the closed-form coefficient `a` before checking.
    /// Self-test hook: a nonzero value must make verification fail.
    #[arg(long, default_value_t = 0.0)]
    perturb_a: f64,
    /// Output prefix: writes <out>.json in addition to stdout lines.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::GenData(args) => cmd_gen_data(args).map(|()| 0),
        Command::Train(args) => cmd_train(args).map(|()| 0),
        Command::Sweep(args) => cmd_sweep(args).map(|()| 0),
        Command::BaselineKmeans(args) => cmd_baseline(args).map(|()| 0),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn cmd_gen_data(args: GenDataArgs) -> Result<()> {
    let mut ov = Overrides {
        pi: args.pi,
        m: args.m,
        n_mdp: args.n_mdp,
        n_u: args.n_u,
        out: args.out.clone(),
        ..Overrides::default()
    };
    if let Some(s) = &args.seeds {
        ov.seeds = Some(parse_list::<u64>(s, "--seeds")?);
    }
    args.source.apply(&mut ov)?;
    let cfg = resolve(args.config_path(), &ov)?;

    let data = load_data(&cfg.source)?;
    let train_path = with_suffix(&cfg.out, ".train.pool");
    let test_path = with_suffix(&cfg.out, ".test.pool");
    write_pool(&train_path, &data.pool)?;
    let test_pool = mdpu_core::tuplegen::LabeledPool::new(
        data.test_features.clone(),
        data.test_labels.clone(),
    )?;
    write_pool(&test_path, &test_pool)?;
    println!(
        "wrote {} ({} x {}, prior {})",
        train_path.display(),
        data.pool.len(),
        data.pool.dim(),
        data.pool.empirical_prior()
    );
    println!(
        "wrote {} ({} x {}, prior {})",
        test_path.display(),
        test_pool.len(),
        test_pool.dim(),
        test_pool.empirical_prior()
    );

    if args.emit_tuples {
        let spec = ProblemSpec64::new(cfg.pi_plus, cfg.m)?;
        let seed = cfg.seeds[0];
        let tuples = sample_mdp_tuples(&data.pool, &spec, cfg.n_mdp, derive_seed(seed, 1))?;
        let unlabeled = sample_unlabeled(&data.pool, cfg.pi_plus, cfg.n_u, derive_seed(seed, 2))?;
        let tuples_path = with_suffix(&cfg.out, ".tuples.bin");
        let unlabeled_path = with_suffix(&cfg.out, ".unlabeled.bin");
        write_tuple_batch(&tuples_path, &tuples)?;
        write_unlabeled(&unlabeled_path, &unlabeled)?;
        let stats = empirical_position_stats(&tuples)?;
        println!(
            "wrote {} ({} tuples of {}, min dominance margin {})",
            tuples_path.display(),
            tuples.n(),
            cfg.m,
            stats.min_dominance_margin
        );
        println!(
            "wrote {} ({} points, positive fraction {})",
            unlabeled_path.display(),
            unlabeled.n(),
            unlabeled.positive_fraction()
        );
    }
    Ok(())
}

impl GenDataArgs {
    fn config_path(&self) -> Option<&Path> {
        self.source.config.as_deref()
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let ov = args.overrides()?;
    let cfg = resolve(args.source.config.as_deref(), &ov)?;
    let data = load_data(&cfg.source)?;
    let result = run_experiment(&cfg, &data)?;
    write_results(&cfg, &result.rows, &serde_json::to_value(&result.summary)?)?;
    print_method_lines(&result.summary);
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let ov = args.base.overrides()?;
    let base_cfg = resolve(args.base.source.config.as_deref(), &ov)?;

    let pis = match &args.pi_list {
        Some(s) => parse_list::<f64>(s, "--pi-list")?,
        None => vec![base_cfg.pi_plus],
    };
    let losses = match &args.loss_list {
        Some(s) => parse_list::<LossKind>(s, "--loss-list")?,
        None => vec![base_cfg.loss],
    };
    let counts = match &args.n_mdp_list {
        Some(s) => parse_list::<usize>(s, "--n-mdp-list")?,
        None => vec![base_cfg.n_mdp],
    };
    let n_u_fixed = args.base.n_u.is_some();

    let mut all_rows = Vec::new();
    let mut summaries = Vec::new();
    // Pools depend only on the source, so load once per sweep.
    let data = load_data(&base_cfg.source)?;
    for &pi in &pis {
        for &loss in &losses {
            for &n_mdp in &counts {
                let cfg = ExperimentConfig {
                    pi_plus: pi,
                    loss,
                    n_mdp,
                    n_u: if n_u_fixed { base_cfg.n_u } else { n_mdp },
                    ..base_cfg.clone()
                };
                let result = run_experiment(&cfg, &data)
                    .with_context(|| format!("sweep cell pi={pi} loss={loss} n_mdp={n_mdp}"))?;
                all_rows.extend(result.rows);
                summaries.push(serde_json::to_value(&result.summary)?);
            }
        }
    }
    let doc = json!({
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "rows_schema_version": ROWS_SCHEMA_VERSION,
        "experiments": summaries,
    });
    write_results(&base_cfg, &all_rows, &doc)?;
    println!(
        "swept {} configurations, {} rows",
        pis.len() * losses.len() * counts.len(),
        all_rows.len()
    );
    Ok(())
}

fn cmd_baseline(args: BaselineArgs) -> Result<()> {
    let mut ov = Overrides {
        pi: args.pi,
        m: args.m,
        n_mdp: args.n_mdp,
        out: args.out.clone(),
        ..Overrides::default()
    };
    if let Some(s) = &args.seeds {
        ov.seeds = Some(parse_list::<u64>(s, "--seeds")?);
    }
    args.source.apply(&mut ov)?;
    let cfg = resolve(args.source.config.as_deref(), &ov)?;
    if args.restarts == 0 {
        bail!("--restarts must be positive");
    }
    let data = load_data(&cfg.source)?;
    let doc = run_baseline(&cfg, &data, args.restarts)?;
    let text = serde_json::to_string_pretty(&doc)?;
    match &args.out {
        Some(prefix) => {
            let path = with_suffix(prefix, ".json");
            atomic_write(&path, text.as_bytes())?;
            println!(
                "kmeans accuracy mean {} over {} seeds -> {}",
                doc["accuracy"]["mean"], cfg.seeds.len(), path.display()
            );
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let defaults = VerificationConfig::default();
    let cfg = VerificationConfig {
        seed: args.seed.unwrap_or(defaults.seed),
        sampler_n: args.sampler_n.unwrap_or(defaults.sampler_n),
        coefficient_perturbation: args.perturb_a,
    };
    let report = run_verification(&cfg);
    for check in &report.checks {
        println!(
            "{} {:<32} max deviation {:.3e} (tolerance {:.3e}) — {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.max_deviation,
            check.tolerance,
            check.detail
        );
    }
    println!(
        "verification: {}",
        if report.all_passed { "all checks passed" } else { "FAILED" }
    );
    if let Some(prefix) = &args.out {
        let path = with_suffix(prefix, ".json");
        let doc = json!({
            "schema_version": SUMMARY_SCHEMA_VERSION,
            "report": report,
        });
        atomic_write(&path, serde_json::to_string_pretty(&doc)?.as_bytes())?;
        println!("wrote {}", path.display());
    }
    Ok(if report.all_passed { 0 } else { 1 })
}

fn write_results(
    cfg: &ExperimentConfig,
    rows: &[output::ResultRow],
    summary: &serde_json::Value,
) -> Result<()> {
    let csv_path = with_suffix(&cfg.out, ".csv");
    let json_path = with_suffix(&cfg.out, ".json");
    atomic_write(&csv_path, rows_to_csv(rows).as_bytes())?;
    atomic_write(&json_path, serde_json::to_string_pretty(summary)?.as_bytes())?;
    println!("wrote {} ({} rows)", csv_path.display(), rows.len());
    println!("wrote {}", json_path.display());
    Ok(())
}

fn print_method_lines(summary: &output::ExperimentSummary) {
    for m in &summary.methods {
        match &m.final_accuracy {
            Some(acc) => println!(
                "method {:<12} final accuracy {} +/- {}",
                m.method, acc.mean, acc.std
            ),
            None => println!("method {:<12} (no epochs)", m.method),
        }
    }
}
