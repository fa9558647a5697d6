//! Sampling-rate augmentation and the training loop.
//!
//! Each batch is downsampled to a rate drawn from a discrete distribution
//! over candidate rates. After every epoch the model is validated at each
//! candidate rate, and rates with higher validation loss gain probability:
//!
//! ```text
//! dP(R_i) = P(R_i) * (L(R_i) - L_min) / (L_max - L_min) * alpha
//! P(R_i) <- (P(R_i) + dP(R_i)) / sum_j (P(R_j) + dP(R_j))
//! ```
//!
//! When all losses are equal the distribution is left as is.

use std::io::Write;
use std::path::Path;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use tracing::{debug, info};

use crate::csi::CsiInstance;
use crate::eval::Classifier;
use crate::model::{adam_step, loss_and_grad, AdamState, SrvModel};
use crate::seed::{derive_rng, derive_seed, rng_from_seed};
use crate::traffic::{resample, ResampleMode};
use crate::{rates, Error, Result};

/// Probability mass over candidate training rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
    last_losses: Option<Vec<f64>>,
}

impl RateDistribution {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::config("rate support is empty"));
        }
        if support.len() != probs.len() {
            return Err(Error::config(
                "one probability per support rate is required",
            ));
        }
        if support.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::config("support rates must be positive"));
        }
        if support.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("support rates must be strictly ascending"));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "probabilities must be nonnegative and sum to 1",
            ));
        }
        Ok(Self {
            support,
            probs,
            last_losses: None,
        })
    }

    pub fn uniform(support: Vec<f64>) -> Result<Self> {
        let k = support.len().max(1);
        Self::new(support, vec![1.0 / k as f64; k])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn last_losses(&self) -> Option<&[f64]> {
        self.last_losses.as_deref()
    }

    pub fn low(&self) -> f64 {
        self.support[0]
    }

    pub fn upper(&self) -> f64 {
        self.support[self.support.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateSupport {
    List(Vec<f64>),
    Range { low: f64, upper: f64, step: f64 },
}

impl RateSupport {
    pub fn rates(&self) -> Vec<f64> {
        match self {
            RateSupport::List(v) => {
                let mut v = v.clone();
                v.sort_by(f64::total_cmp);
                v
            }
            RateSupport::Range { low, upper, step } => rates::range(*low, *upper, *step),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    /// Step size of the distribution update.
    pub alpha: f64,
    pub rate_support: RateSupport,
    /// Random point selection; `false` keeps equally spaced points.
    pub stochastic: bool,
    /// Reweight the distribution after each epoch; `false` keeps it uniform.
    pub adapt: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            rate_support: RateSupport::List(rates::SRV_ACTIVITY.to_vec()),
            stochastic: true,
            adapt: true,
        }
    }
}

impl AugmentConfig {
    /// Conventional training at one rate with equally spaced points.
    pub fn fixed_rate(rate: f64) -> Self {
        Self {
            alpha: 0.7,
            rate_support: RateSupport::List(vec![rate]),
            stochastic: false,
            adapt: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn resample_mode(&self) -> ResampleMode {
        if self.stochastic {
            ResampleMode::StochasticIntervals
        } else {
            ResampleMode::UniformIntervals
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            lr: 1e-5,
            plateau_patience: 10,
            plateau_factor: 0.1,
            early_stop_patience: 20,
            max_epochs: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.plateau_patience == 0 {
            return Err(Error::config(
                "batch_size, max_epochs and plateau_patience must be >= 1",
            ));
        }
        if !(self.lr > 0.0 && self.plateau_factor > 0.0) {
            return Err(Error::config("lr and plateau_factor must be positive"));
        }
        if self.plateau_patience >= self.early_stop_patience {
            return Err(Error::config(format!(
                "plateau_patience ({}) must be below early_stop_patience ({})",
                self.plateau_patience, self.early_stop_patience
            )));
        }
        Ok(())
    }
}

pub fn init_distribution(cfg: &AugmentConfig) -> Result<RateDistribution> {
    RateDistribution::uniform(cfg.rate_support.rates())
}

/// Draws one support rate with the distribution's probabilities.
pub fn assign_rate<R: Rng + ?Sized>(dist: &RateDistribution, rng: &mut R) -> f64 {
    let index = WeightedIndex::new(&dist.probs).expect("distribution invariants hold");
    dist.support[index.sample(rng)]
}

/// Shifts probability towards rates with higher loss; see the module docs.
pub fn adapt_distribution(
    dist: &RateDistribution,
    losses: &[f64],
    alpha: f64,
) -> Result<RateDistribution> {
    if losses.len() != dist.support.len() {
        return Err(Error::LossCountMismatch {
            expected: dist.support.len(),
            actual: losses.len(),
        });
    }
    if let Some(i) = losses.iter().position(|l| !l.is_finite()) {
        return Err(Error::NonFiniteLoss {
            rate: dist.support[i],
        });
    }
    let lo = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs = dist.probs.clone();
    if hi > lo {
        for (p, l) in probs.iter_mut().zip(losses) {
            *p += *p * ((l - lo) / (hi - lo)) * alpha;
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
    }
    Ok(RateDistribution {
        support: dist.support.clone(),
        probs,
        last_losses: Some(losses.to_vec()),
    })
}

/// Resamples every instance of the batch to `rate`.
pub fn augment_batch<R: Rng + ?Sized>(
    batch: &[CsiInstance],
    rate: f64,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<Vec<CsiInstance>> {
    let mode = cfg.resample_mode();
    batch
        .iter()
        .map(|inst| resample(inst, rate, mode, rng))
        .collect()
}

/// Validation loss and accuracy at each candidate rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateValidation {
    pub rates: Vec<f64>,
    pub losses: Vec<f64>,
    pub accuracies: Vec<f64>,
}

impl RateValidation {
    /// Mean loss over all rates; the quantity plateau and early stopping track.
    pub fn mean_loss(&self) -> f64 {
        self.losses.iter().sum::<f64>() / self.losses.len() as f64
    }
}

/// Floor applied to the true-class probability before taking the log.
const MIN_PROB: f64 = 1e-300;

/// Downsamples the validation set to each rate with stochastic point
/// selection and records mean cross-entropy and accuracy.
pub fn validate_per_rate<C: Classifier + ?Sized, R: Rng + ?Sized>(
    model: &C,
    val: &[CsiInstance],
    support: &[f64],
    rng: &mut R,
) -> Result<RateValidation> {
    if val.is_empty() {
        return Err(Error::DegenerateInput("empty validation set".into()));
    }
    let mut losses = Vec::with_capacity(support.len());
    let mut accuracies = Vec::with_capacity(support.len());
    for &rate in support {
        let mut loss = 0.0;
        let mut correct = 0usize;
        for inst in val {
            let label = inst.label().ok_or(Error::UnlabeledInstance)?;
            let sample = resample(inst, rate, ResampleMode::StochasticIntervals, rng)?;
            let probs = model.predict_proba(&sample)?;
            loss -= probs[label].max(MIN_PROB).ln();
            if crate::model::argmax(&probs) == label {
                correct += 1;
            }
        }
        losses.push(loss / val.len() as f64);
        accuracies.push(correct as f64 / val.len() as f64);
    }
    Ok(RateValidation {
        rates: support.to_vec(),
        losses,
        accuracies,
    })
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Learning rate used during this epoch.
    pub lr: f64,
    pub train_loss: f64,
    /// Rate distribution batches were drawn from during this epoch.
    pub probs: Vec<f64>,
    pub validation: RateValidation,
    pub val_loss: f64,
    pub improved: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stop_reason: Option<StopReason>,
}

impl TrainingLog {
    /// One JSON object per epoch, one per line, in epoch order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.records {
            out.push_str(&serde_json::to_string(rec).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<EpochRecord>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| Error::format(e.to_string())))
            .collect()
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest mean validation loss.
    pub best: SrvModel,
    /// Parameters after the final epoch.
    pub last: SrvModel,
    pub log: TrainingLog,
    pub final_distribution: RateDistribution,
}

const MODULE: &str = "augment_train";

/// Seeds of the four RNG streams `train` uses.
pub fn stream_seed(seed: u64, purpose: &str) -> u64 {
    derive_seed(seed, MODULE, purpose)
}

/// Epoch loop: shuffle, per batch draw a rate, resample, step Adam; then
/// validate at every candidate rate and adapt the distribution.
///
/// The learning rate is multiplied by `plateau_factor` whenever
/// `plateau_patience` epochs pass without a strictly lower mean validation
/// loss, and training stops after `early_stop_patience` such epochs.
pub fn train(
    model: SrvModel,
    train_set: &[CsiInstance],
    val_set: &[CsiInstance],
    tcfg: &TrainConfig,
    acfg: &AugmentConfig,
) -> Result<TrainOutcome> {
    tcfg.validate()?;
    acfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::config(
            "training and validation sets must be nonempty",
        ));
    }
    let mut dist = init_distribution(acfg)?;
    let mut shuffle_rng = derive_rng(tcfg.seed, MODULE, "shuffle");
    let mut rate_rng = derive_rng(tcfg.seed, MODULE, "rate");
    let mut augment_rng = derive_rng(tcfg.seed, MODULE, "augment");
    let validate_seed = stream_seed(tcfg.seed, "validate");

    let mut model = model;
    let mut adam = AdamState::new(&model.params);
    let mut lr = tcfg.lr;
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut since_improved = 0usize;
    let mut since_lr_change = 0usize;
    let mut log = TrainingLog::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=tcfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let probs = dist.probs().to_vec();
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(tcfg.batch_size) {
            let batch: Vec<CsiInstance> = chunk.iter().map(|&i| train_set[i].clone()).collect();
            let rate = assign_rate(&dist, &mut rate_rng);
            let batch = augment_batch(&batch, rate, acfg, &mut augment_rng)?;
            let (loss, grads) = loss_and_grad(&model, &batch)?;
            adam_step(&mut model.params, &grads, &mut adam, lr);
            epoch_loss += loss;
            batches += 1;
            debug!(epoch, rate, loss, "batch");
        }

        let validation = validate_per_rate(
            &model,
            val_set,
            dist.support(),
            &mut rng_from_seed(validate_seed),
        )?;
        let val_loss = validation.mean_loss();
        let improved = val_loss < best_loss;
        if improved {
            best_loss = val_loss;
            best = model.clone();
            log.best_epoch = epoch;
            since_improved = 0;
            since_lr_change = 0;
        } else {
            since_improved += 1;
            since_lr_change += 1;
        }
        info!(
            epoch,
            lr,
            train_loss = epoch_loss / batches as f64,
            val_loss,
            "epoch done"
        );
        if acfg.adapt {
            dist = adapt_distribution(&dist, &validation.losses, acfg.alpha)?;
        }
        log.records.push(EpochRecord {
            epoch,
            lr,
            train_loss: epoch_loss / batches as f64,
            probs,
            validation,
            val_loss,
            improved,
        });

        if since_improved >= tcfg.early_stop_patience {
            log.stop_reason = Some(StopReason::EarlyStop);
            break;
        }
        if since_lr_change >= tcfg.plateau_patience {
            lr *= tcfg.plateau_factor;
            since_lr_change = 0;
        }
    }
    if log.stop_reason.is_none() {
        log.stop_reason = Some(StopReason::MaxEpochs);
    }
    Ok(TrainOutcome {
        best,
        last: model,
        log,
        final_distribution: dist,
    })
}
