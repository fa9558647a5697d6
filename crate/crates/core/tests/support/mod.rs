//! Independent oracles shared by the integration suites. Nothing here calls
//! into the implementation path it checks; model parameters are only read.
#![allow(dead_code, clippy::needless_range_loop)]

pub mod corrupt;
pub mod oracle_model;

use srv_core::csi::CsiInstance;

/// Population mean and variance by the textbook two-pass formula.
pub fn two_pass_mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut sum = 0.0;
    for x in xs {
        sum += x;
    }
    let mean = sum / n;
    let mut sq = 0.0;
    for x in xs {
        sq += (x - mean) * (x - mean);
    }
    (mean, sq / n)
}

/// Loss-proportional reweighting written out step by step: raw increments,
/// addition, then division by the total.
pub fn spreadsheet_adapt(probs: &[f64], losses: &[f64], alpha: f64) -> Vec<f64> {
    let mut lo = losses[0];
    let mut hi = losses[0];
    for &l in losses {
        if l < lo {
            lo = l;
        }
        if l > hi {
            hi = l;
        }
    }
    let mut raised = Vec::new();
    for i in 0..probs.len() {
        let delta = if hi == lo {
            0.0
        } else {
            probs[i] * ((losses[i] - lo) / (hi - lo)) * alpha
        };
        raised.push(probs[i] + delta);
    }
    let mut total = 0.0;
    for r in &raised {
        total += r;
    }
    raised.iter().map(|r| r / total).collect()
}

/// Nearest class centroid (Euclidean, full-resolution rows flattened).
pub fn nearest_centroid_accuracy(
    train: &[CsiInstance],
    test: &[CsiInstance],
    classes: usize,
) -> f64 {
    let dim = train[0].values().len();
    let mut centroids = vec![vec![0.0f64; dim]; classes];
    let mut counts = vec![0usize; classes];
    for inst in train {
        let m = inst.label().unwrap();
        counts[m] += 1;
        for (acc, &v) in centroids[m].iter_mut().zip(inst.values().iter()) {
            *acc += f64::from(v);
        }
    }
    for (c, n) in centroids.iter_mut().zip(&counts) {
        for v in c.iter_mut() {
            *v /= *n as f64;
        }
    }
    let mut correct = 0;
    for inst in test {
        let mut best = (f64::INFINITY, 0);
        for (m, c) in centroids.iter().enumerate() {
            let d: f64 = c
                .iter()
                .zip(inst.values().iter())
                .map(|(a, &b)| (a - f64::from(b)).powi(2))
                .sum();
            if d < best.0 {
                best = (d, m);
            }
        }
        if Some(best.1) == inst.label() {
            correct += 1;
        }
    }
    correct as f64 / test.len() as f64
}

/// Expected outcome of outlier repair, replayed from the rules alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayCounts {
    pub flagged: usize,
    pub repaired: usize,
    pub rows_dropped: usize,
}

/// Replays the two validity passes on a boolean corruption mask.
/// `bad[i][j]` marks an invalid entry; a column is repairable when at least
/// `fraction` of it is valid, a row survives when at least `fraction` of it
/// is valid after column repair.
pub fn replay_preprocess(bad: &[Vec<bool>], fraction: f64) -> ReplayCounts {
    let n = bad.len();
    let c = bad[0].len();
    let mut column_ok = vec![false; c];
    for j in 0..c {
        let valid = (0..n).filter(|&i| !bad[i][j]).count();
        column_ok[j] = valid as f64 + 1e-9 >= fraction * n as f64;
    }
    let mut flagged = 0;
    let mut repaired = 0;
    let mut dropped = 0;
    for row in bad {
        let flagged_here = row.iter().filter(|&&b| b).count();
        flagged += flagged_here;
        let unresolved = (0..c).filter(|&j| row[j] && !column_ok[j]).count();
        let resolved = c - unresolved;
        if unresolved > 0 && (resolved as f64 + 1e-9) < fraction * c as f64 {
            dropped += 1;
        } else {
            repaired += flagged_here;
        }
    }
    ReplayCounts {
        flagged,
        repaired,
        rows_dropped: dropped,
    }
}
