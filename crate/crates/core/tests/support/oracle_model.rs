//! Straight-line re-implementation of the classifier forward pass on plain
//! nested vectors, with a multiply-add counter, plus a central-difference
//! gradient checker.

use srv_core::csi::CsiInstance;
use srv_core::model::{Params, PositionalEncoding, SrvModel};

type Mat = Vec<Vec<f64>>;

fn to_mat(a: &ndarray::Array2<f64>) -> Mat {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub struct Counter {
    pub macs: u128,
}

impl Counter {
    fn matmul(&mut self, a: &Mat, b: &Mat) -> Mat {
        let n = a.len();
        let k = b.len();
        let m = b[0].len();
        let mut out = vec![vec![0.0; m]; n];
        for i in 0..n {
            for j in 0..m {
                let mut acc = 0.0;
                for t in 0..k {
                    acc += a[i][t] * b[t][j];
                    self.macs += 1;
                }
                out[i][j] = acc;
            }
        }
        out
    }
}

fn transpose(a: &Mat) -> Mat {
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).collect())
        .collect()
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

fn norm(rows: &Mat, gain: &[f64], bias: &[f64], eps: f64) -> Mat {
    rows.iter()
        .map(|r| {
            let c = r.len() as f64;
            let mean = r.iter().sum::<f64>() / c;
            let var = r.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / c;
            r.iter()
                .enumerate()
                .map(|(j, x)| (x - mean) / (var + eps).sqrt() * gain[j] + bias[j])
                .collect()
        })
        .collect()
}

/// Class probabilities and the number of multiply-adds spent on them.
pub fn oracle_forward(model: &SrvModel, inst: &CsiInstance) -> (Vec<f64>, u128) {
    let cfg = &model.config;
    let p = &model.params;
    let n = inst.len();
    let c = cfg.subcarriers;
    let mut counter = Counter { macs: 0 };

    // sinusoidal positions
    let mut x: Mat = vec![vec![0.0; c]; n];
    for i in 0..n {
        let pos = match cfg.pos_encoding {
            PositionalEncoding::SinusoidalIndex => i as f64,
            PositionalEncoding::SinusoidalTime => {
                inst.timestamps()[i] / inst.duration() * cfg.time_positions
            }
        };
        for j in 0..c {
            let pair = (j / 2) as f64;
            let angle = pos / 10000f64.powf(2.0 * pair / c as f64);
            let enc = if j % 2 == 0 { angle.sin() } else { angle.cos() };
            x[i][j] = f64::from(inst.values()[[i, j]]) + enc;
        }
    }

    for enc in &p.encoders {
        let mut concat: Mat = vec![Vec::new(); n];
        for h in 0..cfg.heads {
            let q = counter.matmul(&x, &to_mat(&enc.query[h]));
            let k = counter.matmul(&x, &to_mat(&enc.key[h]));
            let v = counter.matmul(&x, &to_mat(&enc.value[h]));
            let scores = counter.matmul(&q, &transpose(&k));
            let d = c as f64;
            let weights: Mat = scores
                .iter()
                .map(|row| softmax(&row.iter().map(|s| s / d.sqrt()).collect::<Vec<_>>()))
                .collect();
            let beta = counter.matmul(&weights, &v);
            for i in 0..n {
                concat[i].extend_from_slice(&beta[i]);
            }
        }
        let xa = counter.matmul(&concat, &to_mat(&enc.merge));
        let sum: Mat = (0..n)
            .map(|i| (0..c).map(|j| xa[i][j] + x[i][j]).collect())
            .collect();
        let normed = norm(
            &sum,
            enc.norm1_gain.as_slice().unwrap(),
            enc.norm1_bias.as_slice().unwrap(),
            cfg.norm_eps,
        );
        let mut hidden = counter.matmul(&normed, &to_mat(&enc.ffn_in));
        for row in hidden.iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v + enc.ffn_in_bias[j]).max(0.0);
            }
        }
        let mut ffn = counter.matmul(&hidden, &to_mat(&enc.ffn_out));
        for row in ffn.iter_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += enc.ffn_out_bias[j];
            }
        }
        x = if cfg.post_ffn_norm {
            let res: Mat = (0..n)
                .map(|i| (0..c).map(|j| ffn[i][j] + normed[i][j]).collect())
                .collect();
            norm(
                &res,
                enc.norm2_gain.as_slice().unwrap(),
                enc.norm2_bias.as_slice().unwrap(),
                cfg.norm_eps,
            )
        } else {
            ffn
        };
    }

    let mut pooled = vec![f64::NEG_INFINITY; c];
    for row in &x {
        for j in 0..c {
            if row[j] > pooled[j] {
                pooled[j] = row[j];
            }
        }
    }
    let logits = counter.matmul(&vec![pooled], &to_mat(&p.classifier));
    let logits: Vec<f64> = logits[0]
        .iter()
        .enumerate()
        .map(|(m, v)| v + p.classifier_bias[m])
        .collect();
    (softmax(&logits), counter.macs)
}

/// Mean cross-entropy of the batch under `params`, via the oracle forward.
pub fn oracle_loss(model: &SrvModel, batch: &[CsiInstance]) -> f64 {
    let mut total = 0.0;
    for inst in batch {
        let (p, _) = oracle_forward(model, inst);
        total -= p[inst.label().unwrap()].ln();
    }
    total / batch.len() as f64
}

/// ReLU signs and pooling rows for every batch element; finite differences
/// are only meaningful while this pattern stays fixed.
fn kink_pattern(model: &SrvModel, batch: &[CsiInstance]) -> Vec<Vec<usize>> {
    batch
        .iter()
        .map(|inst| {
            let trace = model.forward_traced(inst).unwrap();
            let mut pattern = trace.classification.argmax_rows.clone();
            for layer in &trace.layers {
                pattern.extend(layer.pre_activation.iter().map(|&u| usize::from(u > 0.0)));
            }
            pattern
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GradCheck {
    pub checked: usize,
    /// Coordinates where even the smallest step crossed a ReLU/max kink.
    pub skipped: usize,
    pub max_rel_err: f64,
}

/// Denominator floor so exactly-zero gradients compare by absolute error.
pub const REL_FLOOR: f64 = 1e-6;

/// Compares `analytic` with central differences of the oracle loss at step
/// `step`, coordinate by coordinate. A coordinate whose +-step probes land
/// on different ReLU/pooling patterns is retried with step/10 and step/100
/// before being skipped.
pub fn check_gradients(
    model: &SrvModel,
    batch: &[CsiInstance],
    analytic: &Params,
    step: f64,
) -> GradCheck {
    let base_pattern = kink_pattern(model, batch);
    let mut probe = model.clone();
    let mut result = GradCheck::default();
    let analytic: Vec<Vec<f64>> = analytic.tensors().iter().map(|t| t.to_vec()).collect();
    let shapes: Vec<usize> = analytic.iter().map(Vec::len).collect();
    for (t, &len) in shapes.iter().enumerate() {
        for i in 0..len {
            let original = probe.params.tensors()[t][i];
            let mut estimate = None;
            for h in [step, step / 10.0, step / 100.0] {
                probe.params.tensors_mut()[t][i] = original + h;
                let plus_ok = kink_pattern(&probe, batch) == base_pattern;
                let plus = oracle_loss(&probe, batch);
                probe.params.tensors_mut()[t][i] = original - h;
                let minus_ok = kink_pattern(&probe, batch) == base_pattern;
                let minus = oracle_loss(&probe, batch);
                probe.params.tensors_mut()[t][i] = original;
                if plus_ok && minus_ok {
                    estimate = Some((plus - minus) / (2.0 * h));
                    break;
                }
            }
            match estimate {
                Some(numeric) => {
                    let a = analytic[t][i];
                    let denom = a.abs().max(numeric.abs()).max(REL_FLOOR);
                    let rel = (a - numeric).abs() / denom;
                    result.max_rel_err = result.max_rel_err.max(rel);
                    result.checked += 1;
                }
                None => result.skipped += 1,
            }
        }
    }
    result
}
