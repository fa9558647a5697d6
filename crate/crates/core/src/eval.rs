//! Accuracy across sampling rates.
//!
//! A model is scored by the mean of its per-rate accuracies and by their
//! population variance (divisor `n`); a deployable model needs a high mean
//! and a low variance.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::{train, AugmentConfig, TrainConfig};
use crate::csi::CsiInstance;
use crate::model::{argmax, ModelConfig, SrvModel};
use crate::seed::{derive_seed, rng_from_seed};
use crate::traffic::{resample, ResampleMode};
use crate::{Error, Result};

/// Anything that maps an instance to class probabilities.
pub trait Classifier {
    fn classes(&self) -> usize;
    fn predict_proba(&self, instance: &CsiInstance) -> Result<Vec<f64>>;
}

impl Classifier for SrvModel {
    fn classes(&self) -> usize {
        self.config.classes
    }

    fn predict_proba(&self, instance: &CsiInstance) -> Result<Vec<f64>> {
        self.forward(instance)
    }
}

/// Population mean and variance in one pass (Welford).
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    (mean, m2 / xs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Independent downsampling draws per rate; their accuracies are averaged.
    pub repetitions: usize,
    pub mode: ResampleMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            repetitions: 3,
            mode: ResampleMode::StochasticIntervals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rates: Vec<f64>,
    pub accuracies: Vec<f64>,
    pub avg_accuracy: f64,
    pub variance: f64,
    pub std_dev: f64,
    /// Per rate, `confusion[true][predicted]` counts over all repetitions.
    pub confusion: Vec<Vec<Vec<u64>>>,
    pub seed: u64,
    pub repetitions: usize,
}

impl EvalReport {
    /// Builds the summary fields from per-rate accuracies.
    pub fn from_accuracies(
        rates: Vec<f64>,
        accuracies: Vec<f64>,
        confusion: Vec<Vec<Vec<u64>>>,
        seed: u64,
        repetitions: usize,
    ) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::config("no evaluation rates"));
        }
        if rates.len() != accuracies.len() {
            return Err(Error::config("one accuracy per rate is required"));
        }
        if accuracies.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::config("accuracies must lie in [0, 1]"));
        }
        let (avg_accuracy, variance) = mean_variance(&accuracies);
        Ok(Self {
            rates,
            accuracies,
            avg_accuracy,
            variance,
            std_dev: variance.sqrt(),
            confusion,
            seed,
            repetitions,
        })
    }

    pub fn accuracy_at(&self, rate: f64) -> Option<f64> {
        self.rates
            .iter()
            .position(|&r| r == rate)
            .map(|i| self.accuracies[i])
    }
}

/// Accuracy of `model` at each rate: every test instance is downsampled
/// (stochastic point selection by default) and classified, `repetitions`
/// times per rate. Each rate draws from its own stream derived from `seed`.
pub fn evaluate<C: Classifier + ?Sized>(
    model: &C,
    test: &[CsiInstance],
    rates: &[f64],
    opts: &EvalOptions,
    seed: u64,
) -> Result<EvalReport> {
    if rates.is_empty() {
        return Err(Error::config("no evaluation rates"));
    }
    if test.is_empty() || opts.repetitions == 0 {
        return Err(Error::config(
            "evaluation needs test instances and at least one repetition",
        ));
    }
    let m = model.classes();
    let mut accuracies = Vec::with_capacity(rates.len());
    let mut confusion = Vec::with_capacity(rates.len());
    for &rate in rates {
        let mut rng = rng_from_seed(derive_seed(seed, "eval_harness", &format!("rate/{rate}")));
        let mut counts = vec![vec![0u64; m]; m];
        let mut acc_sum = 0.0;
        for _ in 0..opts.repetitions {
            let mut correct = 0usize;
            for inst in test {
                let label = inst.label().ok_or(Error::UnlabeledInstance)?;
                let sample = resample(inst, rate, opts.mode, &mut rng)?;
                let predicted = argmax(&model.predict_proba(&sample)?);
                if label < m {
                    counts[label][predicted] += 1;
                }
                if predicted == label {
                    correct += 1;
                }
            }
            acc_sum += correct as f64 / test.len() as f64;
        }
        accuracies.push(acc_sum / opts.repetitions as f64);
        confusion.push(counts);
    }
    EvalReport::from_accuracies(
        rates.to_vec(),
        accuracies,
        confusion,
        seed,
        opts.repetitions,
    )
}

/// Accuracy of fixed-rate models: row `i` trains at `train_rates[i]`
/// (equally spaced points, no adaptation), column `j` tests at
/// `test_rates[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGrid {
    pub train_rates: Vec<f64>,
    pub test_rates: Vec<f64>,
    pub accuracy: Vec<Vec<f64>>,
}

impl RateGrid {
    pub fn diagonal_mean(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut k = 0;
        for (i, r) in self.train_rates.iter().enumerate() {
            if let Some(j) = self.test_rates.iter().position(|t| t == r) {
                sum += self.accuracy[i][j];
                k += 1;
            }
        }
        (k > 0).then(|| sum / k as f64)
    }

    pub fn off_diagonal_mean(&self) -> Option<f64> {
        let mut sum = 0.0;
        let mut k = 0;
        for (i, r) in self.train_rates.iter().enumerate() {
            for (j, t) in self.test_rates.iter().enumerate() {
                if t != r {
                    sum += self.accuracy[i][j];
                    k += 1;
                }
            }
        }
        (k > 0).then(|| sum / k as f64)
    }

    /// Header `train_rate_hz,<test rates...>`, then one row per train rate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("train_rate_hz");
        for t in &self.test_rates {
            write!(out, ",{}", fmt_f64(*t)).unwrap();
        }
        out.push('\n');
        for (r, row) in self.train_rates.iter().zip(&self.accuracy) {
            out.push_str(&fmt_f64(*r));
            for a in row {
                write!(out, ",{}", fmt_f64(*a)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cross_rate_grid(
    train_set: &[CsiInstance],
    val_set: &[CsiInstance],
    test_set: &[CsiInstance],
    train_rates: &[f64],
    test_rates: &[f64],
    model_cfg: &ModelConfig,
    tcfg: &TrainConfig,
    opts: &EvalOptions,
    seed: u64,
) -> Result<RateGrid> {
    if train_rates.is_empty() || test_rates.is_empty() {
        return Err(Error::config("cross-rate grid needs train and test rates"));
    }
    let mut accuracy = Vec::with_capacity(train_rates.len());
    for &rate in train_rates {
        let model = SrvModel::new(model_cfg.clone())?;
        let outcome = train(
            model,
            train_set,
            val_set,
            tcfg,
            &AugmentConfig::fixed_rate(rate),
        )?;
        let report = evaluate(&outcome.best, test_set, test_rates, opts, seed)?;
        accuracy.push(report.accuracies);
    }
    Ok(RateGrid {
        train_rates: train_rates.to_vec(),
        test_rates: test_rates.to_vec(),
        accuracy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    JsonLines,
}

/// 17 significant digits: enough to round-trip any `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ReportLine {
    Rate {
        rate_hz: f64,
        accuracy: f64,
        confusion: Vec<Vec<u64>>,
    },
    Summary {
        avg: f64,
        var: f64,
        std: f64,
        seed: u64,
        repetitions: usize,
    },
}

/// Renders a report.
///
/// CSV: header `rate_hz,accuracy`, one row per rate, then the summary rows
/// `avg,<value>`, `var,<value>` and `std,<value>`. Confusion counts, seed
/// and repetitions are only carried by the JSON-lines form, which has one
/// `{"kind":"rate",...}` object per rate followed by one
/// `{"kind":"summary",...}` object.
pub fn render_report(report: &EvalReport, format: ReportFormat) -> Result<String> {
    if report.rates.is_empty() {
        return Err(Error::config("refusing to emit a report without rates"));
    }
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("rate_hz,accuracy\n");
            for (r, a) in report.rates.iter().zip(&report.accuracies) {
                writeln!(out, "{},{}", fmt_f64(*r), fmt_f64(*a)).unwrap();
            }
            writeln!(out, "avg,{}", fmt_f64(report.avg_accuracy)).unwrap();
            writeln!(out, "var,{}", fmt_f64(report.variance)).unwrap();
            writeln!(out, "std,{}", fmt_f64(report.std_dev)).unwrap();
        }
        ReportFormat::JsonLines => {
            for (k, (r, a)) in report.rates.iter().zip(&report.accuracies).enumerate() {
                let line = ReportLine::Rate {
                    rate_hz: *r,
                    accuracy: *a,
                    confusion: report.confusion.get(k).cloned().unwrap_or_default(),
                };
                out.push_str(&serde_json::to_string(&line).expect("serializable"));
                out.push('\n');
            }
            let summary = ReportLine::Summary {
                avg: report.avg_accuracy,
                var: report.variance,
                std: report.std_dev,
                seed: report.seed,
                repetitions: report.repetitions,
            };
            out.push_str(&serde_json::to_string(&summary).expect("serializable"));
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn emit_report(
    report: &EvalReport,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<()> {
    let path = path.as_ref();
    let text = render_report(report, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Inverse of [`render_report`]. CSV input yields empty confusion
/// matrices, seed 0 and zero repetitions.
pub fn parse_report(text: &str, format: ReportFormat) -> Result<EvalReport> {
    let bad = |msg: &str| Error::format(msg.to_owned());
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::format(e.to_string()))
    };
    let mut report = EvalReport {
        rates: Vec::new(),
        accuracies: Vec::new(),
        avg_accuracy: f64::NAN,
        variance: f64::NAN,
        std_dev: f64::NAN,
        confusion: Vec::new(),
        seed: 0,
        repetitions: 0,
    };
    match format {
        ReportFormat::Csv => {
            let mut lines = text.lines();
            if lines.next().map(str::trim) != Some("rate_hz,accuracy") {
                return Err(bad("missing rate_hz,accuracy header"));
            }
            for line in lines.filter(|l| !l.trim().is_empty()) {
                let (key, value) = line
                    .split_once(',')
                    .ok_or_else(|| bad("expected two columns"))?;
                match key {
                    "avg" => report.avg_accuracy = num(value)?,
                    "var" => report.variance = num(value)?,
                    "std" => report.std_dev = num(value)?,
                    rate => {
                        report.rates.push(num(rate)?);
                        report.accuracies.push(num(value)?);
                    }
                }
            }
        }
        ReportFormat::JsonLines => {
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                match serde_json::from_str(line).map_err(|e| Error::format(e.to_string()))? {
                    ReportLine::Rate {
                        rate_hz,
                        accuracy,
                        confusion,
                    } => {
                        report.rates.push(rate_hz);
                        report.accuracies.push(accuracy);
                        report.confusion.push(confusion);
                    }
                    ReportLine::Summary {
                        avg,
                        var,
                        std,
                        seed,
                        repetitions,
                    } => {
                        report.avg_accuracy = avg;
                        report.variance = var;
                        report.std_dev = std;
                        report.seed = seed;
                        report.repetitions = repetitions;
                    }
                }
            }
        }
    }
    if report.rates.is_empty() || report.avg_accuracy.is_nan() || report.variance.is_nan() {
        return Err(bad("report is missing rates or summary rows"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(accs: &[f64]) -> EvalReport {
        let rates = (1..=accs.len()).map(|k| 5.0 * k as f64).collect();
        EvalReport::from_accuracies(
            rates,
            accs.to_vec(),
            vec![vec![vec![1, 2], vec![0, 3]]; accs.len()],
            7,
            3,
        )
        .unwrap()
    }

    #[test]
    fn summary_arithmetic() {
        let r = report(&[0.9, 0.9, 0.9]);
        assert!((r.avg_accuracy - 0.9).abs() < 1e-15);
        assert_eq!(r.variance, 0.0);
        let r = report(&[1.0, 0.5]);
        assert_eq!(r.avg_accuracy, 0.75);
        assert_eq!(r.variance, 0.0625);
        assert_eq!(r.std_dev, 0.25);
    }

    #[test]
    fn empty_rates_are_refused() {
        assert!(matches!(
            EvalReport::from_accuracies(vec![], vec![], vec![], 0, 1),
            Err(Error::Config(_))
        ));
        let mut r = report(&[0.5]);
        r.rates.clear();
        assert!(matches!(
            render_report(&r, ReportFormat::Csv),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn csv_schema_and_round_trip() {
        let r = report(&[0.1 + 0.2, 2.0 / 3.0, 1.0]);
        let text = render_report(&r, ReportFormat::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "rate_hz,accuracy");
        assert!(lines[4].starts_with("avg,"));
        assert!(lines[5].starts_with("var,"));
        assert!(lines[6].starts_with("std,"));
        let back = parse_report(&text, ReportFormat::Csv).unwrap();
        assert_eq!(back.rates, r.rates);
        assert_eq!(back.accuracies, r.accuracies);
        assert_eq!(back.avg_accuracy.to_bits(), r.avg_accuracy.to_bits());
        assert_eq!(back.variance.to_bits(), r.variance.to_bits());
        assert_eq!(back.std_dev.to_bits(), r.std_dev.to_bits());
    }

    #[test]
    fn jsonl_round_trip_is_exact() {
        let r = report(&[0.1 + 0.2, 2.0 / 3.0, 1.0 / 7.0]);
        let text = render_report(&r, ReportFormat::JsonLines).unwrap();
        assert_eq!(parse_report(&text, ReportFormat::JsonLines).unwrap(), r);
    }

    #[test]
    fn grid_csv_layout() {
        let grid = RateGrid {
            train_rates: vec![10.0, 100.0],
            test_rates: vec![10.0, 100.0],
            accuracy: vec![vec![0.9, 0.5], vec![0.6, 1.0]],
        };
        let csv = grid.to_csv();
        assert!(csv.starts_with("train_rate_hz,1.0000000000000000e1,1.0000000000000000e2\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!((grid.diagonal_mean().unwrap() - 0.95).abs() < 1e-15);
        assert!((grid.off_diagonal_mean().unwrap() - 0.55).abs() < 1e-15);
    }
}
