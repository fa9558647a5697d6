//! Run configuration: one TOML file with a section per module.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use srv_core::augment::{AugmentConfig, RateSupport, TrainConfig};
use srv_core::csi::{OutlierThreshold, PreprocessConfig};
use srv_core::eval::EvalOptions;
use srv_core::model::{ModelConfig, PositionalEncoding};
use srv_core::rates;
use srv_core::seed::derive_seed;
use srv_core::traffic::{ResampleMode, SynthConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub synth: SynthSection,
    pub preprocess: PreprocessSection,
    pub model: ModelSection,
    pub augment: AugmentSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub sweep: SweepSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            synth: SynthSection::default(),
            preprocess: PreprocessSection::default(),
            model: ModelSection::default(),
            augment: AugmentSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
            sweep: SweepSection::default(),
            paths: PathsSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub num_classes: usize,
    pub instances_per_class: usize,
    pub subcarriers: usize,
    pub base_rate: f64,
    pub duration: f64,
    pub noise_sigma: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        Self {
            num_classes: d.num_classes,
            instances_per_class: d.instances_per_class,
            subcarriers: d.subcarriers,
            base_rate: d.base_rate,
            duration: d.duration,
            noise_sigma: d.noise_sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    MedianMultiple,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    pub threshold_kind: ThresholdKind,
    pub threshold: f64,
    pub validity_fraction: f64,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        Self {
            threshold_kind: ThresholdKind::MedianMultiple,
            threshold: 10.0,
            validity_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Index,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub heads: usize,
    pub layers: usize,
    pub ffn_hidden: usize,
    pub positional_encoding: Encoding,
    pub time_positions: f64,
    pub post_ffn_norm: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            heads: 2,
            layers: 2,
            ffn_hidden: 64,
            positional_encoding: Encoding::Index,
            time_positions: 1000.0,
            post_ffn_norm: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub alpha: f64,
    /// Candidate training rates in Hz; ignored when `range` is set.
    pub rates: Vec<f64>,
    /// `[low, upper, step]` in Hz.
    pub range: Option<[f64; 3]>,
    pub stochastic: bool,
    pub adapt: bool,
}

impl Default for AugmentSection {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            rates: rates::SRV_ACTIVITY.to_vec(),
            range: None,
            stochastic: true,
            adapt: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: usize,
    pub lr: f64,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    pub val_fraction: f64,
    pub test_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            batch_size: d.batch_size,
            lr: d.lr,
            plateau_patience: d.plateau_patience,
            plateau_factor: d.plateau_factor,
            early_stop_patience: d.early_stop_patience,
            max_epochs: d.max_epochs,
            val_fraction: 0.2,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub rates: Vec<f64>,
    pub repetitions: usize,
    pub stochastic: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            rates: vec![5.0, 10.0, 25.0, 50.0, 100.0],
            repetitions: 3,
            stochastic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub train_rates: Vec<f64>,
    pub test_rates: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            train_rates: vec![10.0, 100.0, 600.0],
            test_rates: vec![10.0, 100.0, 600.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub report: PathBuf,
    pub grid: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self {
            dataset: "synth.srvcsi".into(),
            checkpoint: "model.srvnn".into(),
            log: "train.jsonl".into(),
            report: "report.csv".into(),
            grid: "grid.csv".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cli::load_config: cannot read {}", path.display()))?;
        let cfg: Self = toml::from_str(&text)
            .with_context(|| format!("cli::load_config: invalid config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every section; module-level checks run when the section is used.
    pub fn validate(&self) -> anyhow::Result<()> {
        let paths = [
            &self.paths.dataset,
            &self.paths.checkpoint,
            &self.paths.log,
            &self.paths.report,
            &self.paths.grid,
        ];
        let distinct: HashSet<_> = paths.iter().collect();
        if distinct.len() != paths.len() {
            bail!("cli::validate_config: [paths] entries must all differ");
        }
        self.synth_config()
            .validate()
            .context("cli::validate_config: [synth]")?;
        self.preprocess_config()
            .validate()
            .context("cli::validate_config: [preprocess]")?;
        self.augment_config()
            .validate()
            .context("cli::validate_config: [augment]")?;
        self.train_config()
            .validate()
            .context("cli::validate_config: [train]")?;
        let t = &self.train;
        if !(0.0..1.0).contains(&t.val_fraction)
            || !(0.0..1.0).contains(&t.test_fraction)
            || t.val_fraction + t.test_fraction >= 1.0
        {
            bail!("cli::validate_config: [train] val_fraction + test_fraction must be below 1");
        }
        if self.eval.repetitions == 0 {
            bail!("cli::validate_config: [eval] repetitions must be at least 1");
        }
        Ok(())
    }

    pub fn synth_config(&self) -> SynthConfig {
        let s = &self.synth;
        SynthConfig {
            num_classes: s.num_classes,
            instances_per_class: s.instances_per_class,
            subcarriers: s.subcarriers,
            base_rate: s.base_rate,
            duration: s.duration,
            noise_sigma: s.noise_sigma,
            seed: derive_seed(self.seed, "traffic_sim", "synth"),
        }
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        let p = &self.preprocess;
        PreprocessConfig {
            outlier_threshold: match p.threshold_kind {
                ThresholdKind::MedianMultiple => OutlierThreshold::MedianMultiple(p.threshold),
                ThresholdKind::Absolute => OutlierThreshold::Absolute(p.threshold),
            },
            validity_fraction: p.validity_fraction,
        }
    }

    /// Model shape for data with `subcarriers` columns and `classes` labels.
    pub fn model_config(&self, subcarriers: usize, classes: usize) -> ModelConfig {
        let m = &self.model;
        let mut cfg = ModelConfig::new(subcarriers, m.heads, m.layers, m.ffn_hidden, classes);
        cfg.pos_encoding = match m.positional_encoding {
            Encoding::Index => PositionalEncoding::SinusoidalIndex,
            Encoding::Time => PositionalEncoding::SinusoidalTime,
        };
        cfg.time_positions = m.time_positions;
        cfg.post_ffn_norm = m.post_ffn_norm;
        cfg.init_seed = derive_seed(self.seed, "srv_model", "init");
        cfg
    }

    pub fn augment_config(&self) -> AugmentConfig {
        let a = &self.augment;
        AugmentConfig {
            alpha: a.alpha,
            rate_support: match a.range {
                Some([low, upper, step]) => RateSupport::Range { low, upper, step },
                None => RateSupport::List(a.rates.clone()),
            },
            stochastic: a.stochastic,
            adapt: a.adapt,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            batch_size: t.batch_size,
            lr: t.lr,
            plateau_patience: t.plateau_patience,
            plateau_factor: t.plateau_factor,
            early_stop_patience: t.early_stop_patience,
            max_epochs: t.max_epochs,
            seed: self.seed,
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            repetitions: self.eval.repetitions,
            mode: if self.eval.stochastic {
                ResampleMode::StochasticIntervals
            } else {
                ResampleMode::UniformIntervals
            },
        }
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.seed, "cli", "split")
    }
}
