//! Amplitude-outlier repair.
//!
//! An entry is invalid when it is non-finite, negative or above the outlier
//! threshold. Repair runs in two passes:
//!
//! 1. per subcarrier column: if at least `validity_fraction` of the column is
//!    valid, invalid entries are linearly interpolated in time from the
//!    column's valid entries; otherwise they stay unresolved;
//! 2. per timestamp row holding unresolved entries: if at least
//!    `validity_fraction` of the row is resolved, the rest is interpolated
//!    across subcarriers; otherwise the whole row is dropped.
//!
//! Interpolation only reads entries that were valid when the pass started.
//! Positions outside the first/last knot take the nearest knot's value.

use ndarray::Array2;

use super::CsiInstance;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutlierThreshold {
    /// Fixed amplitude cap.
    Absolute(f64),
    /// Cap at this multiple of the instance's median finite amplitude.
    MedianMultiple(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    pub outlier_threshold: OutlierThreshold,
    pub validity_fraction: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            outlier_threshold: OutlierThreshold::MedianMultiple(10.0),
            validity_fraction: 0.8,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.validity_fraction > 0.0 && self.validity_fraction <= 1.0) {
            return Err(Error::config(format!(
                "validity_fraction must lie in (0, 1], got {}",
                self.validity_fraction
            )));
        }
        match self.outlier_threshold {
            OutlierThreshold::Absolute(t) | OutlierThreshold::MedianMultiple(t)
                if !(t.is_finite() && t > 0.0) =>
            {
                Err(Error::config(format!(
                    "outlier threshold must be positive, got {t}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// The absolute cap that applies to `instance`.
    pub fn resolve_threshold(&self, instance: &CsiInstance) -> Result<f64> {
        match self.outlier_threshold {
            OutlierThreshold::Absolute(t) => Ok(t),
            OutlierThreshold::MedianMultiple(k) => {
                let mut finite: Vec<f64> = instance
                    .values()
                    .iter()
                    .map(|&v| f64::from(v))
                    .filter(|v| v.is_finite())
                    .collect();
                if finite.is_empty() {
                    return Err(Error::DegenerateInstance("no finite amplitudes".into()));
                }
                finite.sort_by(f64::total_cmp);
                let mid = finite.len() / 2;
                let median = if finite.len().is_multiple_of(2) {
                    0.5 * (finite[mid - 1] + finite[mid])
                } else {
                    finite[mid]
                };
                let t = k * median;
                if !(t > 0.0) {
                    return Err(Error::config(
                        "median amplitude is not positive; use an absolute outlier threshold",
                    ));
                }
                Ok(t)
            }
        }
    }
}

/// Bookkeeping from one [`preprocess_with_report`] call.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PreprocessReport {
    pub threshold: f64,
    /// Invalid entries in the input.
    pub flagged: usize,
    /// Flagged entries in surviving rows repaired along time.
    pub temporal_repairs: usize,
    /// Flagged entries in surviving rows repaired across subcarriers.
    pub subcarrier_repairs: usize,
    pub rows_dropped: usize,
    /// Flagged entries that disappeared with a dropped row.
    pub flagged_in_dropped_rows: usize,
}

impl PreprocessReport {
    pub fn repaired(&self) -> usize {
        self.temporal_repairs + self.subcarrier_repairs
    }
}

pub fn preprocess(instance: &CsiInstance, cfg: &PreprocessConfig) -> Result<CsiInstance> {
    preprocess_with_report(instance, cfg).map(|(out, _)| out)
}

#[derive(Clone, Copy, PartialEq)]
enum Cell {
    Valid,
    Temporal,
    Unresolved,
    Subcarrier,
}

pub fn preprocess_with_report(
    instance: &CsiInstance,
    cfg: &PreprocessConfig,
) -> Result<(CsiInstance, PreprocessReport)> {
    cfg.validate()?;
    let (n, c) = instance.values().dim();
    if n < 2 || c < 2 {
        return Err(Error::DegenerateInstance(format!(
            "preprocessing needs at least 2 rows and 2 subcarriers, got {n}x{c}"
        )));
    }
    let threshold = cfg.resolve_threshold(instance)?;
    let enough =
        |count: usize, total: usize| count as f64 + 1e-9 >= cfg.validity_fraction * total as f64;

    let mut out: Array2<f64> = instance.values().mapv(f64::from);
    let mut cells = Array2::from_shape_fn((n, c), |(i, j)| {
        let v = out[[i, j]];
        if v.is_finite() && (0.0..=threshold).contains(&v) {
            Cell::Valid
        } else {
            Cell::Unresolved
        }
    });
    let flagged = cells.iter().filter(|&&s| s != Cell::Valid).count();

    let times = instance.timestamps();
    let mut column = vec![0.0; n];
    let mut known = vec![false; n];
    for j in 0..c {
        for i in 0..n {
            column[i] = out[[i, j]];
            known[i] = cells[[i, j]] == Cell::Valid;
        }
        let valid = known.iter().filter(|&&k| k).count();
        if valid == n || !enough(valid, n) {
            continue;
        }
        fill_linear(&mut column, &known, |i| times[i]);
        for i in 0..n {
            if !known[i] {
                out[[i, j]] = column[i];
                cells[[i, j]] = Cell::Temporal;
            }
        }
    }

    let mut keep = Vec::with_capacity(n);
    let mut row = vec![0.0; c];
    let mut row_known = vec![false; c];
    let mut report = PreprocessReport {
        threshold,
        flagged,
        ..Default::default()
    };
    for i in 0..n {
        for j in 0..c {
            row[j] = out[[i, j]];
            row_known[j] = cells[[i, j]] != Cell::Unresolved;
        }
        let resolved = row_known.iter().filter(|&&k| k).count();
        if resolved < c {
            if !enough(resolved, c) {
                report.rows_dropped += 1;
                report.flagged_in_dropped_rows +=
                    cells.row(i).iter().filter(|&&s| s != Cell::Valid).count();
                continue;
            }
            fill_linear(&mut row, &row_known, |j| j as f64);
            for j in 0..c {
                if !row_known[j] {
                    out[[i, j]] = row[j];
                    cells[[i, j]] = Cell::Subcarrier;
                }
            }
        }
        for s in cells.row(i) {
            match s {
                Cell::Temporal => report.temporal_repairs += 1,
                Cell::Subcarrier => report.subcarrier_repairs += 1,
                _ => {}
            }
        }
        keep.push(i);
    }
    if keep.is_empty() {
        return Err(Error::EmptyAfterPreprocess);
    }

    let values = out.select(ndarray::Axis(0), &keep).mapv(|v| v as f32);
    let timestamps = keep.iter().map(|&i| times[i]).collect();
    let cleaned = CsiInstance::new(values, timestamps, instance.duration(), instance.label())?;
    Ok((cleaned, report))
}

/// Overwrites every `!known[k]` slot of `ys` by linear interpolation between
/// the nearest known neighbours (abscissae from `x`), holding the edge value
/// beyond the first/last known slot. Needs at least one known slot.
fn fill_linear(ys: &mut [f64], known: &[bool], x: impl Fn(usize) -> f64) {
    let len = ys.len();
    let mut next_known = vec![usize::MAX; len];
    let mut next = usize::MAX;
    for k in (0..len).rev() {
        if known[k] {
            next = k;
        }
        next_known[k] = next;
    }
    let mut prev = usize::MAX;
    for k in 0..len {
        if known[k] {
            prev = k;
            continue;
        }
        let nxt = next_known[k];
        ys[k] = match (prev != usize::MAX, nxt != usize::MAX) {
            (true, true) => {
                let (y0, y1) = (ys[prev], ys[nxt]);
                let w = (x(k) - x(prev)) / (x(nxt) - x(prev));
                (y0 + w * (y1 - y0)).clamp(y0.min(y1), y0.max(y1))
            }
            (true, false) => ys[prev],
            (false, true) => ys[nxt],
            (false, false) => unreachable!("fill_linear needs a known slot"),
        };
    }
}
