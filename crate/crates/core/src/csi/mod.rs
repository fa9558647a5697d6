//! CSI amplitude instances and labelled datasets.

mod format;
mod preprocess;

pub use format::{read_dataset, write_dataset, FORMAT_VERSION, MAGIC};
pub use preprocess::{
    preprocess, preprocess_with_report, OutlierThreshold, PreprocessConfig, PreprocessReport,
};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::{Error, Result};

/// One capture: `N` timestamped rows of `C` subcarrier amplitudes.
///
/// The nominal sampling rate is not stored; it is always `N / duration`,
/// see [`CsiInstance::rate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsiInstance {
    values: Array2<f32>,
    timestamps: Vec<f64>,
    duration: f64,
    label: Option<usize>,
}

impl CsiInstance {
    /// Validates the structural invariants: one timestamp per row, strictly
    /// increasing, starting at or after zero and spanning no more than
    /// `duration`.
    ///
    /// Amplitudes are not checked here; raw captures may hold outliers or
    /// non-finite readings until [`preprocess`] has run.
    pub fn new(
        values: Array2<f32>,
        timestamps: Vec<f64>,
        duration: f64,
        label: Option<usize>,
    ) -> Result<Self> {
        if values.nrows() != timestamps.len() {
            return Err(Error::DimensionMismatch {
                expected: values.nrows(),
                actual: timestamps.len(),
            });
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::DegenerateInstance(format!(
                "duration must be positive, got {duration}"
            )));
        }
        if let Some(&first) = timestamps.first() {
            if !(first.is_finite() && first >= 0.0) {
                return Err(Error::DegenerateInstance(format!(
                    "first timestamp must be >= 0, got {first}"
                )));
            }
            if timestamps.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::DegenerateInstance(
                    "timestamps are not strictly increasing".into(),
                ));
            }
            let span = timestamps[timestamps.len() - 1] - first;
            if !(span <= duration) {
                return Err(Error::DegenerateInstance(format!(
                    "timestamps span {span} s, longer than the {duration} s window"
                )));
            }
        }
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().into_owned()
        };
        Ok(Self {
            values,
            timestamps,
            duration,
            label,
        })
    }

    pub fn values(&self) -> &Array2<f32> {
        &self.values
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn with_label(mut self, label: Option<usize>) -> Self {
        self.label = label;
        self
    }

    /// Number of rows (packets).
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn subcarriers(&self) -> usize {
        self.values.ncols()
    }

    /// `N / T` in Hz.
    pub fn rate(&self) -> f64 {
        self.len() as f64 / self.duration
    }

    /// `N / T` in Hz, refusing a non-positive window.
    pub fn compute_rate(&self) -> Result<f64> {
        if !(self.duration > 0.0) {
            return Err(Error::DegenerateInstance(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(self.rate())
    }

    /// Amplitudes widened to `f64`, the model's working precision.
    pub fn features(&self) -> Array2<f64> {
        self.values.mapv(f64::from)
    }

    /// Keeps the given rows (ascending indices), preserving the window length.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), rows),
            timestamps: rows.iter().map(|&i| self.timestamps[i]).collect(),
            duration: self.duration,
            label: self.label,
        }
    }
}

/// A labelled collection of instances sharing one subcarrier count.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Vec<CsiInstance>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(instances: Vec<CsiInstance>, class_names: Vec<String>) -> Result<Self> {
        if class_names.is_empty() {
            return Err(Error::config("a dataset needs at least one class"));
        }
        let ds = Self {
            instances,
            class_names,
        };
        ds.check()?;
        Ok(ds)
    }

    fn check(&self) -> Result<()> {
        let m = self.num_classes();
        if let Some(first) = self.instances.first() {
            let c = first.subcarriers();
            for inst in &self.instances {
                if inst.subcarriers() != c {
                    return Err(Error::DimensionMismatch {
                        expected: c,
                        actual: inst.subcarriers(),
                    });
                }
                if let Some(label) = inst.label() {
                    if label >= m {
                        return Err(Error::config(format!(
                            "label {label} out of range for {m} classes"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn instances(&self) -> &[CsiInstance] {
        &self.instances
    }

    pub fn into_instances(self) -> Vec<CsiInstance> {
        self.instances
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Subcarrier count shared by all instances, if any.
    pub fn subcarriers(&self) -> Option<usize> {
        self.instances.first().map(CsiInstance::subcarriers)
    }

    /// Same class list, different instances.
    pub fn with_instances(&self, instances: Vec<CsiInstance>) -> Result<Self> {
        Self::new(instances, self.class_names.clone())
    }

    /// Stratified shuffle split into `(train, val, test)`.
    ///
    /// Within each class, `round(n * val_fraction)` instances go to
    /// validation, `round(n * test_fraction)` to test and the rest to
    /// training. Unlabelled instances are ignored.
    pub fn split<R: Rng + ?Sized>(
        &self,
        val_fraction: f64,
        test_fraction: f64,
        rng: &mut R,
    ) -> Result<(Self, Self, Self)> {
        if !(0.0..1.0).contains(&val_fraction)
            || !(0.0..1.0).contains(&test_fraction)
            || val_fraction + test_fraction >= 1.0
        {
            return Err(Error::config(format!(
                "split fractions {val_fraction}/{test_fraction} leave no training data"
            )));
        }
        let mut train = Vec::new();
        let mut val = Vec::new();
        let mut test = Vec::new();
        for class in 0..self.num_classes() {
            let mut members: Vec<&CsiInstance> = self
                .instances
                .iter()
                .filter(|i| i.label() == Some(class))
                .collect();
            members.shuffle(rng);
            let n = members.len() as f64;
            let n_val = (n * val_fraction).round() as usize;
            let n_test = (n * test_fraction).round() as usize;
            for (k, inst) in members.into_iter().enumerate() {
                let bucket = if k < n_val {
                    &mut val
                } else if k < n_val + n_test {
                    &mut test
                } else {
                    &mut train
                };
                bucket.push(inst.clone());
            }
        }
        Ok((
            self.with_instances(train)?,
            self.with_instances(val)?,
            self.with_instances(test)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn instance(n: usize, c: usize, duration: f64) -> CsiInstance {
        let ts = (0..n).map(|i| i as f64 * duration / n as f64).collect();
        CsiInstance::new(Array2::ones((n, c)), ts, duration, Some(0)).unwrap()
    }

    #[test]
    fn rate_is_rows_over_window() {
        assert_eq!(instance(600, 4, 1.0).compute_rate().unwrap(), 600.0);
        assert_eq!(instance(346, 4, 2.0).compute_rate().unwrap(), 173.0);
        assert_eq!(instance(1, 4, 1.0).compute_rate().unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_timestamps() {
        let v = Array2::<f32>::ones((3, 2));
        assert!(CsiInstance::new(v.clone(), vec![0.0, 0.1], 1.0, None).is_err());
        assert!(CsiInstance::new(v.clone(), vec![0.0, 0.2, 0.2], 1.0, None).is_err());
        assert!(CsiInstance::new(v.clone(), vec![-0.1, 0.2, 0.3], 1.0, None).is_err());
        assert!(CsiInstance::new(v.clone(), vec![0.0, 0.5, 1.5], 1.0, None).is_err());
        assert!(CsiInstance::new(v, vec![0.0, 0.5, 0.9], 0.0, None).is_err());
    }

    #[test]
    fn dataset_checks_labels_and_width() {
        let bad = instance(4, 3, 1.0).with_label(Some(2));
        assert!(Dataset::new(vec![bad], vec!["a".into(), "b".into()]).is_err());
        let mixed = vec![instance(4, 3, 1.0), instance(4, 2, 1.0)];
        assert!(Dataset::new(mixed, vec!["a".into()]).is_err());
    }

    #[test]
    fn split_is_stratified() {
        let mut all = Vec::new();
        for class in 0..3 {
            for _ in 0..10 {
                all.push(instance(4, 2, 1.0).with_label(Some(class)));
            }
        }
        let ds = Dataset::new(all, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let mut rng = crate::seed::rng_from_seed(3);
        let (train, val, test) = ds.split(0.2, 0.3, &mut rng).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (15, 6, 9));
        for class in 0..3 {
            let count = val
                .instances()
                .iter()
                .filter(|i| i.label() == Some(class))
                .count();
            assert_eq!(count, 2);
        }
    }
}
