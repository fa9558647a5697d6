//! Synthetic motion datasets, packet-arrival processes and rate conversion.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::csi::{CsiInstance, Dataset};
use crate::seed::rng_from_seed;
use crate::{Error, Result};

/// Coarse traffic profiles measured on a home network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrafficPreset {
    Video,
    Web,
    Email,
    Idle,
}

impl TrafficPreset {
    /// Average packet rate of the profile in Hz.
    pub fn mean_rate(self) -> f64 {
        match self {
            TrafficPreset::Video => 67.10,
            TrafficPreset::Web => 26.8,
            TrafficPreset::Email => 22.8,
            TrafficPreset::Idle => 10.0,
        }
    }

    /// Packet count the profile would yield over `duration` seconds.
    pub fn natural_count(self, duration: f64) -> usize {
        (self.mean_rate() * duration).round().max(2.0) as usize
    }
}

/// How packet arrival times are laid out inside a capture window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalProcess {
    /// Equal spacing `T / N`.
    Uniform,
    /// Sorted uniform draws with the first and last arrival pinned.
    RandomUniformOrderStatistics,
    /// Bursty arrivals: lognormal interval multipliers (log-sd 1.0).
    TracePreset(TrafficPreset),
}

/// Log-space standard deviation of trace-preset interval multipliers.
pub const TRACE_LOG_SD: f64 = 1.0;

/// `n` strictly increasing arrival times inside `[0, duration]`.
///
/// `Uniform` places arrival `i` at `i * T / N`. The order-statistics process
/// pins the first and last arrivals to `0` and `T (N - 1) / N` (the uniform
/// grid's endpoints) and draws the rest uniformly in between, so the
/// consecutive gaps plus the `T / N` tail add up to `T`. Trace presets honour
/// the requested `n`; their mean rate only informs [`TrafficPreset::natural_count`].
pub fn gen_intervals<R: Rng + ?Sized>(
    process: IntervalProcess,
    n: usize,
    duration: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "need at least 2 arrivals, got {n}"
        )));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let nf = n as f64;
    Ok(match process {
        IntervalProcess::Uniform => (0..n).map(|i| i as f64 * duration / nf).collect(),
        IntervalProcess::RandomUniformOrderStatistics => {
            let last = duration * (nf - 1.0) / nf;
            loop {
                let mut ts = Vec::with_capacity(n);
                ts.push(0.0);
                ts.extend((0..n - 2).map(|_| rng.random_range(0.0..last)));
                ts.push(last);
                ts[1..n - 1].sort_by(f64::total_cmp);
                // ties (or a draw of exactly 0) have probability ~0; redraw
                if ts.windows(2).all(|w| w[1] > w[0]) {
                    break ts;
                }
            }
        }
        IntervalProcess::TracePreset(_) => {
            let multiplier = LogNormal::new(0.0, TRACE_LOG_SD).expect("valid lognormal");
            let gaps: Vec<f64> = (0..n).map(|_| multiplier.sample(rng)).collect();
            let total: f64 = gaps.iter().sum();
            let mut ts = Vec::with_capacity(n);
            let mut acc = 0.0;
            for gap in &gaps[..n - 1] {
                ts.push(duration * acc / total);
                acc += gap;
            }
            ts.push(duration * acc / total);
            ts
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMode {
    /// Rows nearest to an equally spaced index grid.
    UniformIntervals,
    /// Endpoints plus a uniform random subset of the interior rows.
    StochasticIntervals,
}

/// Row count after converting `n` rows at `rate` Hz to `target_rate` Hz:
/// `max(2, round(n * target / rate))`, capped at `n`.
pub fn resampled_len(n: usize, rate: f64, target_rate: f64) -> usize {
    let nb = (n as f64 * target_rate / rate).round().max(2.0) as usize;
    nb.min(n)
}

/// Row indices `resample` would keep, ascending.
pub fn resample_indices<R: Rng + ?Sized>(
    n: usize,
    nb: usize,
    mode: ResampleMode,
    rng: &mut R,
) -> Vec<usize> {
    if nb >= n {
        return (0..n).collect();
    }
    if nb < 2 {
        return (0..nb).collect();
    }
    match mode {
        ResampleMode::UniformIntervals => {
            let step = (n - 1) as f64 / (nb - 1) as f64;
            (0..nb)
                .map(|k| (k as f64 * step).round() as usize)
                .collect()
        }
        ResampleMode::StochasticIntervals => {
            let mut picked: Vec<usize> = index::sample(rng, n - 2, nb - 2)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            picked.sort_unstable();
            let mut out = Vec::with_capacity(nb);
            out.push(0);
            out.extend(picked);
            out.push(n - 1);
            out
        }
    }
}

/// Downsamples `instance` to `target_rate` by keeping `N_b` of its rows.
///
/// The first and last rows are always kept, so the covered span and the
/// window length `T` are preserved and the output rate is `N_b / T`.
pub fn resample<R: Rng + ?Sized>(
    instance: &CsiInstance,
    target_rate: f64,
    mode: ResampleMode,
    rng: &mut R,
) -> Result<CsiInstance> {
    let rate = instance.compute_rate()?;
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "target rate must be positive, got {target_rate}"
        )));
    }
    if target_rate > rate * (1.0 + 1e-12) {
        return Err(Error::RateTooHigh {
            target: target_rate,
            available: rate,
        });
    }
    let n = instance.len();
    let nb = resampled_len(n, rate, target_rate);
    if nb == n {
        return Ok(instance.clone());
    }
    let rows = resample_indices(n, nb, mode, rng);
    Ok(instance.select_rows(&rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub instances_per_class: usize,
    pub subcarriers: usize,
    pub base_rate: f64,
    pub duration: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_classes: 3,
            instances_per_class: 300,
            subcarriers: 16,
            base_rate: 600.0,
            duration: 1.0,
            noise_sigma: 0.3,
            seed: 2024,
        }
    }
}

/// DC offset keeping the clean two-tone signal (range [-2, 2]) nonnegative.
pub const SYNTH_OFFSET: f64 = 2.0;

impl SynthConfig {
    /// Rows per instance, `base_rate * duration`.
    pub fn rows(&self) -> Result<usize> {
        self.validate()?;
        Ok((self.base_rate * self.duration).round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::config(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        if self.instances_per_class < 1 || self.subcarriers < 1 {
            return Err(Error::config(
                "instances_per_class and subcarriers must be >= 1",
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config(
                "noise_sigma must be a finite nonnegative number",
            ));
        }
        if !(self.base_rate > 0.0 && self.duration > 0.0) {
            return Err(Error::config("base_rate and duration must be positive"));
        }
        let n = self.base_rate * self.duration;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 1.0 {
            return Err(Error::config(format!(
                "base_rate * duration = {n} is not a positive integer"
            )));
        }
        Ok(())
    }

    /// Tone frequencies (Hz) of class `m`.
    pub fn class_frequencies(m: usize) -> (f64, f64) {
        (2.0 + 3.0 * m as f64, 5.0 + 4.0 * m as f64)
    }

    /// Noise-free amplitude of class `m` on subcarrier `c` at time `t`.
    pub fn clean_amplitude(&self, m: usize, c: usize, t: f64) -> f64 {
        let (f1, f2) = Self::class_frequencies(m);
        let phase = 2.0 * PI * c as f64 / self.subcarriers as f64;
        SYNTH_OFFSET + (2.0 * PI * f1 * t + phase).sin() + (2.0 * PI * f2 * t + phase).sin()
    }
}

/// Two-tone motion signatures per class with additive Gaussian noise.
///
/// Instances are ordered class by class. Noisy amplitudes are clipped at
/// zero so every entry is a valid (nonnegative) amplitude.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    let n = cfg.rows()?;
    let mut rng = rng_from_seed(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::config(e.to_string()))?;
    let timestamps: Vec<f64> = (0..n).map(|i| i as f64 * cfg.duration / n as f64).collect();
    let mut instances = Vec::with_capacity(cfg.num_classes * cfg.instances_per_class);
    for m in 0..cfg.num_classes {
        let clean = Array2::from_shape_fn((n, cfg.subcarriers), |(i, c)| {
            cfg.clean_amplitude(m, c, timestamps[i])
        });
        for _ in 0..cfg.instances_per_class {
            let values = clean.mapv(|v| {
                let noisy = if cfg.noise_sigma > 0.0 {
                    v + noise.sample(&mut rng)
                } else {
                    v
                };
                noisy.max(0.0) as f32
            });
            instances.push(CsiInstance::new(
                values,
                timestamps.clone(),
                cfg.duration,
                Some(m),
            )?);
        }
    }
    let names = (0..cfg.num_classes)
        .map(|m| format!("motion_{m}"))
        .collect();
    Dataset::new(instances, names)
}
