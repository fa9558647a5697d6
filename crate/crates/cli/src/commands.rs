use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use srv_core::augment::{train as run_training, RateSupport};
use srv_core::csi::{preprocess_with_report, read_dataset, write_dataset, Dataset};
use srv_core::eval::{cross_rate_grid, emit_report, evaluate, ReportFormat};
use srv_core::model::{estimate_flops, read_checkpoint, write_checkpoint, SrvModel};
use srv_core::seed::rng_from_seed;
use srv_core::traffic::synth_dataset;
use srv_core::Error;
use tracing::{info, warn};

use crate::config::RunConfig;
use crate::{OutputFormat, SplitChoice};

fn load(path: &Path) -> Result<Dataset> {
    read_dataset(path).with_context(|| format!("csi_core::read_dataset: {}", path.display()))
}

fn split(cfg: &RunConfig, data: &Dataset) -> Result<(Dataset, Dataset, Dataset)> {
    data.split(
        cfg.train.val_fraction,
        cfg.train.test_fraction,
        &mut rng_from_seed(cfg.split_seed()),
    )
    .context("csi_core::split")
}

fn subcarriers(data: &Dataset) -> Result<usize> {
    data.subcarriers()
        .context("csi_core::dataset: dataset has no instances")
}

pub fn synth(cfg: &RunConfig, out: Option<PathBuf>) -> Result<()> {
    let out = out.unwrap_or_else(|| cfg.paths.dataset.clone());
    let data = synth_dataset(&cfg.synth_config()).context("traffic_sim::synth_dataset")?;
    write_dataset(&data, &out)
        .with_context(|| format!("csi_core::write_dataset: {}", out.display()))?;
    let first = &data.instances()[0];
    println!(
        "wrote {} instances, {} classes, N={} C={} at {} Hz to {}",
        data.len(),
        data.num_classes(),
        first.len(),
        first.subcarriers(),
        first.rate(),
        out.display()
    );
    Ok(())
}

pub fn preprocess(cfg: &RunConfig, input: &Path, out: &Path) -> Result<()> {
    let data = load(input)?;
    let pcfg = cfg.preprocess_config();
    let (mut flagged, mut repaired, mut dropped, mut discarded) = (0, 0, 0, 0);
    let mut kept = Vec::with_capacity(data.len());
    for (k, inst) in data.instances().iter().enumerate() {
        match preprocess_with_report(inst, &pcfg) {
            Ok((clean, report)) => {
                flagged += report.flagged;
                repaired += report.repaired();
                dropped += report.rows_dropped;
                kept.push(clean);
            }
            Err(Error::EmptyAfterPreprocess) => {
                warn!(instance = k, "every row dropped; instance discarded");
                discarded += 1;
            }
            Err(e) => return Err(e).with_context(|| format!("csi_core::preprocess: instance {k}")),
        }
    }
    let clean = data.with_instances(kept).context("csi_core::dataset")?;
    write_dataset(&clean, out)
        .with_context(|| format!("csi_core::write_dataset: {}", out.display()))?;
    println!(
        "{} instances: {flagged} entries flagged, {repaired} repaired, {dropped} rows dropped, {discarded} instances discarded",
        data.len()
    );
    Ok(())
}

pub fn train(
    cfg: &RunConfig,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    log: Option<PathBuf>,
    rates: Option<Vec<f64>>,
) -> Result<()> {
    let data = load(&data.unwrap_or_else(|| cfg.paths.dataset.clone()))?;
    let out = out.unwrap_or_else(|| cfg.paths.checkpoint.clone());
    let log_path = log.unwrap_or_else(|| cfg.paths.log.clone());
    let (train_set, val_set, _) = split(cfg, &data)?;
    let mut acfg = cfg.augment_config();
    if let Some(rates) = rates {
        acfg.rate_support = RateSupport::List(rates);
    }
    let model = SrvModel::new(cfg.model_config(subcarriers(&data)?, data.num_classes()))
        .context("srv_model::init")?;
    info!(train = train_set.len(), val = val_set.len(), "training");
    let outcome = run_training(
        model,
        train_set.instances(),
        val_set.instances(),
        &cfg.train_config(),
        &acfg,
    )
    .context("augment_train::train")?;
    write_checkpoint(&outcome.best, &out)
        .with_context(|| format!("srv_model::write_checkpoint: {}", out.display()))?;
    outcome
        .log
        .write_jsonl(&log_path)
        .with_context(|| format!("augment_train::write_log: {}", log_path.display()))?;
    let best = &outcome.log.records[outcome.log.best_epoch.max(1) - 1];
    println!(
        "{} epochs ({:?}); best epoch {} with mean validation loss {:.6}; checkpoint {}",
        outcome.log.records.len(),
        outcome.log.stop_reason.expect("set when training ends"),
        outcome.log.best_epoch,
        best.val_loss,
        out.display()
    );
    Ok(())
}

pub fn eval(
    cfg: &RunConfig,
    data: Option<PathBuf>,
    model: Option<PathBuf>,
    rates: Option<Vec<f64>>,
    format: OutputFormat,
    which: SplitChoice,
    out: Option<PathBuf>,
) -> Result<()> {
    let data = load(&data.unwrap_or_else(|| cfg.paths.dataset.clone()))?;
    let model_path = model.unwrap_or_else(|| cfg.paths.checkpoint.clone());
    let model = read_checkpoint(&model_path).context("srv_model::read_checkpoint")?;
    let test = match which {
        SplitChoice::Test => split(cfg, &data)?.2,
        SplitChoice::All => data,
    };
    let rates = rates.unwrap_or_else(|| cfg.eval.rates.clone());
    let report = evaluate(
        &model,
        test.instances(),
        &rates,
        &cfg.eval_options(),
        cfg.seed,
    )
    .context("eval_harness::evaluate")?;
    let (format, default_out) = match format {
        OutputFormat::Csv => (ReportFormat::Csv, cfg.paths.report.clone()),
        OutputFormat::Jsonl => (
            ReportFormat::JsonLines,
            cfg.paths.report.with_extension("jsonl"),
        ),
    };
    let out = out.unwrap_or(default_out);
    emit_report(&report, &out, format)
        .with_context(|| format!("eval_harness::emit_report: {}", out.display()))?;
    println!("avg_accuracy {:.6}", report.avg_accuracy);
    println!("variance {:.6e}", report.variance);
    Ok(())
}

pub fn sweep(
    cfg: &RunConfig,
    data: Option<PathBuf>,
    train_rates: Option<Vec<f64>>,
    rates: Option<Vec<f64>>,
    out: Option<PathBuf>,
) -> Result<()> {
    let data = load(&data.unwrap_or_else(|| cfg.paths.dataset.clone()))?;
    let out = out.unwrap_or_else(|| cfg.paths.grid.clone());
    let (train_set, val_set, test_set) = split(cfg, &data)?;
    let train_rates = train_rates.unwrap_or_else(|| cfg.sweep.train_rates.clone());
    let test_rates = rates.unwrap_or_else(|| cfg.sweep.test_rates.clone());
    let grid = cross_rate_grid(
        train_set.instances(),
        val_set.instances(),
        test_set.instances(),
        &train_rates,
        &test_rates,
        &cfg.model_config(subcarriers(&data)?, data.num_classes()),
        &cfg.train_config(),
        &cfg.eval_options(),
        cfg.seed,
    )
    .context("eval_harness::cross_rate_grid")?;
    std::fs::write(&out, grid.to_csv())
        .with_context(|| format!("eval_harness::write_grid: {}", out.display()))?;
    if let (Some(d), Some(o)) = (grid.diagonal_mean(), grid.off_diagonal_mean()) {
        println!("diagonal mean {d:.4}, off-diagonal mean {o:.4}");
    }
    println!("grid written to {}", out.display());
    Ok(())
}

pub fn flops(
    cfg: &RunConfig,
    lengths: &[usize],
    subcarriers: Option<usize>,
    classes: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    if lengths.is_empty() || lengths.contains(&0) {
        bail!("srv_model::estimate_flops: lengths must be positive");
    }
    let model_cfg = cfg.model_config(
        subcarriers.unwrap_or(cfg.synth.subcarriers),
        classes.unwrap_or(cfg.synth.num_classes),
    );
    model_cfg.validate().context("srv_model::estimate_flops")?;
    let mut table = String::from("n,projections,attention,merge,ffn,classifier,total\n");
    for &n in lengths {
        let f = estimate_flops(&model_cfg, n);
        writeln!(
            table,
            "{n},{},{},{},{},{},{}",
            f.projections,
            f.attention,
            f.merge,
            f.ffn,
            f.classifier,
            f.total()
        )
        .unwrap();
    }
    match out {
        Some(path) => std::fs::write(&path, &table)
            .with_context(|| format!("srv_model::write_flops: {}", path.display()))?,
        None => print!("{table}"),
    }
    Ok(())
}
