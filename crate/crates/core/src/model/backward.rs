//! Reverse-mode gradients of the mean cross-entropy.

use ndarray::{Array1, Array2, Axis, Zip};

use super::forward::{merge_block, LayerTrace, NormCache};
use super::{EncoderParams, ForwardTrace, ModelConfig, Params, SrvModel};
use crate::csi::CsiInstance;
use crate::{Error, Result};

/// Mean cross-entropy `-ln P[label]` over the batch and its exact gradient
/// with respect to every parameter.
pub fn loss_and_grad(model: &SrvModel, batch: &[CsiInstance]) -> Result<(f64, Params)> {
    if batch.is_empty() {
        return Err(Error::DegenerateInput("empty batch".into()));
    }
    let mut grads = Params::zeros(&model.config);
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for inst in batch {
        let label = inst.label().ok_or(Error::UnlabeledInstance)?;
        if label >= model.config.classes {
            return Err(Error::config(format!(
                "label {label} out of range for {} classes",
                model.config.classes
            )));
        }
        let trace = model.forward_traced(inst)?;
        loss -= trace.probs()[label].ln() * scale;
        backward(model, &trace, label, scale, &mut grads);
    }
    Ok((loss, grads))
}

fn backward(model: &SrvModel, trace: &ForwardTrace, label: usize, scale: f64, grads: &mut Params) {
    let cfg = &model.config;
    let cls = &trace.classification;
    let d_logits: Array1<f64> = cls
        .probs
        .iter()
        .enumerate()
        .map(|(m, &p)| scale * (p - if m == label { 1.0 } else { 0.0 }))
        .collect();

    for (c, &lam) in cls.pooled.iter().enumerate() {
        grads.classifier.row_mut(c).scaled_add(lam, &d_logits);
    }
    grads.classifier_bias += &d_logits;
    let d_pooled = model.params.classifier.dot(&d_logits);

    let mut d_out = Array2::zeros((trace.len, cfg.subcarriers));
    for (c, &row) in cls.argmax_rows.iter().enumerate() {
        d_out[[row, c]] = d_pooled[c];
    }
    for ((layer, enc), g) in trace
        .layers
        .iter()
        .zip(&model.params.encoders)
        .zip(&mut grads.encoders)
        .rev()
    {
        d_out = layer_backward(layer, enc, g, d_out, cfg);
    }
}

fn norm_backward(
    d_out: &Array2<f64>,
    cache: &NormCache,
    gain: &Array1<f64>,
    g_gain: &mut Array1<f64>,
    g_bias: &mut Array1<f64>,
) -> Array2<f64> {
    *g_bias += &d_out.sum_axis(Axis(0));
    *g_gain += &(d_out * &cache.normalized).sum_axis(Axis(0));
    let c = d_out.ncols() as f64;
    let mut dh = d_out * gain;
    for ((mut row, y), &inv_std) in dh
        .rows_mut()
        .into_iter()
        .zip(cache.normalized.rows())
        .zip(&cache.inv_std)
    {
        let mean_dy = row.sum() / c;
        let mean_dy_y = row.dot(&y) / c;
        Zip::from(&mut row)
            .and(&y)
            .for_each(|d, &yv| *d = inv_std * (*d - mean_dy - yv * mean_dy_y));
    }
    dh
}

fn layer_backward(
    t: &LayerTrace,
    enc: &EncoderParams,
    g: &mut EncoderParams,
    d_out: Array2<f64>,
    cfg: &ModelConfig,
) -> Array2<f64> {
    let c = cfg.subcarriers;
    let (d_ffn, mut d_normed) = match &t.norm2 {
        Some(cache) => {
            let d_res = norm_backward(
                &d_out,
                cache,
                &enc.norm2_gain,
                &mut g.norm2_gain,
                &mut g.norm2_bias,
            );
            (d_res.clone(), d_res)
        }
        None => (d_out, Array2::zeros(t.normed.dim())),
    };

    g.ffn_out += &t.activation.t().dot(&d_ffn);
    g.ffn_out_bias += &d_ffn.sum_axis(Axis(0));
    let mut d_pre = d_ffn.dot(&enc.ffn_out.t());
    Zip::from(&mut d_pre)
        .and(&t.pre_activation)
        .for_each(|d, &u| {
            if u <= 0.0 {
                *d = 0.0;
            }
        });
    g.ffn_in += &t.normed.t().dot(&d_pre);
    g.ffn_in_bias += &d_pre.sum_axis(Axis(0));
    d_normed += &d_pre.dot(&enc.ffn_in.t());

    let d_res = norm_backward(
        &d_normed,
        &t.norm1,
        &enc.norm1_gain,
        &mut g.norm1_gain,
        &mut g.norm1_bias,
    );
    g.merge += &t.concat.t().dot(&d_res);

    let mut d_x = d_res.clone();
    let score_scale = 1.0 / (c as f64).sqrt();
    for (h, head) in t.heads.iter().enumerate() {
        let d_beta = d_res.dot(&merge_block(&enc.merge, h, c).t());
        let d_weights = d_beta.dot(&head.v.t());
        let d_v = head.weights.t().dot(&d_beta);

        // softmax backward: dS = W * (dW - rowsum(W * dW))
        let row_totals = (&head.weights * &d_weights).sum_axis(Axis(1));
        let mut d_scores = &head.weights * &(&d_weights - &row_totals.insert_axis(Axis(1)));
        d_scores *= score_scale;

        let d_q = d_scores.dot(&head.k);
        let d_k = d_scores.t().dot(&head.q);
        g.query[h] += &t.input.t().dot(&d_q);
        g.key[h] += &t.input.t().dot(&d_k);
        g.value[h] += &t.input.t().dot(&d_v);
        d_x += &d_q.dot(&enc.query[h].t());
        d_x += &d_k.dot(&enc.key[h].t());
        d_x += &d_v.dot(&enc.value[h].t());
    }
    d_x
}
