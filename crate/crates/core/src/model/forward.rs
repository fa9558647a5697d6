use ndarray::{concatenate, s, Array1, Array2, Axis};

use super::encoding::positional_encode;
use super::{EncoderParams, ModelConfig, SrvModel};

/// Per-row layer-norm statistics kept for the backward pass.
#[derive(Debug, Clone)]
pub struct NormCache {
    /// `(h - mean) / sqrt(var + eps)`, before gain and bias.
    pub normalized: Array2<f64>,
    pub inv_std: Array1<f64>,
}

/// Row-wise layer norm with population variance.
pub fn layer_norm(
    h: &Array2<f64>,
    gain: &Array1<f64>,
    bias: &Array1<f64>,
    eps: f64,
) -> (Array2<f64>, NormCache) {
    let c = h.ncols() as f64;
    let mut normalized = h.clone();
    let mut inv_std = Array1::zeros(h.nrows());
    for (mut row, is) in normalized.rows_mut().into_iter().zip(inv_std.iter_mut()) {
        let mean = row.sum() / c;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / c;
        *is = 1.0 / (var + eps).sqrt();
        row *= *is;
    }
    let out = &normalized * gain + bias;
    (
        out,
        NormCache {
            normalized,
            inv_std,
        },
    )
}

/// Softmax of each row, in place.
pub(crate) fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        softmax_inplace(row.as_slice_mut().expect("contiguous row"));
    }
}

pub(crate) fn softmax_inplace(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in xs.iter_mut() {
        *x /= total;
    }
}

/// Row-stochastic `softmax(Q K^T / sqrt(d))` with `d` the projection width.
pub fn attention_weights(x: &Array2<f64>, query: &Array2<f64>, key: &Array2<f64>) -> Array2<f64> {
    let q = x.dot(query);
    let k = x.dot(key);
    weights_from(&q, &k)
}

fn weights_from(q: &Array2<f64>, k: &Array2<f64>) -> Array2<f64> {
    let scale = 1.0 / (q.ncols() as f64).sqrt();
    let mut w = q.dot(&k.t());
    w *= scale;
    softmax_rows(&mut w);
    w
}

/// One attention head: `softmax(Q K^T / sqrt(d)) V` with `Q = x W_Q` etc.
pub fn attention(
    x: &Array2<f64>,
    query: &Array2<f64>,
    key: &Array2<f64>,
    value: &Array2<f64>,
) -> Array2<f64> {
    attention_weights(x, query, key).dot(&x.dot(value))
}

#[derive(Debug, Clone)]
pub struct HeadTrace {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    pub weights: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub input: Array2<f64>,
    pub heads: Vec<HeadTrace>,
    /// `[beta_1; ...; beta_Z]`, `N x ZC`.
    pub concat: Array2<f64>,
    pub norm1: NormCache,
    pub normed: Array2<f64>,
    /// FFN hidden layer before ReLU.
    pub pre_activation: Array2<f64>,
    pub activation: Array2<f64>,
    pub norm2: Option<NormCache>,
}

pub(crate) fn encoder_forward_traced(
    x: &Array2<f64>,
    enc: &EncoderParams,
    cfg: &ModelConfig,
) -> (Array2<f64>, LayerTrace) {
    let heads: Vec<HeadTrace> = (0..cfg.heads)
        .map(|h| {
            let q = x.dot(&enc.query[h]);
            let k = x.dot(&enc.key[h]);
            let v = x.dot(&enc.value[h]);
            let weights = weights_from(&q, &k);
            HeadTrace { q, k, v, weights }
        })
        .collect();
    let betas: Vec<Array2<f64>> = heads.iter().map(|h| h.weights.dot(&h.v)).collect();
    let views: Vec<_> = betas.iter().map(|b| b.view()).collect();
    let concat = concatenate(Axis(1), &views).expect("equal head shapes");
    let attended = concat.dot(&enc.merge);

    let residual = &attended + x;
    let (normed, norm1) = layer_norm(&residual, &enc.norm1_gain, &enc.norm1_bias, cfg.norm_eps);
    let pre_activation = normed.dot(&enc.ffn_in) + &enc.ffn_in_bias;
    let activation = pre_activation.mapv(|v| v.max(0.0));
    let ffn = activation.dot(&enc.ffn_out) + &enc.ffn_out_bias;

    let (output, norm2) = if cfg.post_ffn_norm {
        let (out, cache) = layer_norm(
            &(&ffn + &normed),
            &enc.norm2_gain,
            &enc.norm2_bias,
            cfg.norm_eps,
        );
        (out, Some(cache))
    } else {
        (ffn, None)
    };
    let trace = LayerTrace {
        input: x.clone(),
        heads,
        concat,
        norm1,
        normed,
        pre_activation,
        activation,
        norm2,
    };
    (output, trace)
}

/// Multi-head attention with residual + norm, then the feed-forward block.
/// Output has the input's shape.
pub fn encoder_forward(x: &Array2<f64>, enc: &EncoderParams, cfg: &ModelConfig) -> Array2<f64> {
    encoder_forward_traced(x, enc, cfg).0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    /// Column-wise maximum of the encoder output.
    pub pooled: Array1<f64>,
    /// Row that supplied each column maximum (first on ties).
    pub argmax_rows: Vec<usize>,
    pub probs: Vec<f64>,
}

/// Temporal max-pool followed by `softmax(lambda^T W_C + B_C)`.
pub fn classify(
    features: &Array2<f64>,
    weight: &Array2<f64>,
    bias: &Array1<f64>,
) -> Classification {
    let c = features.ncols();
    let mut pooled = Array1::from_elem(c, f64::NEG_INFINITY);
    let mut argmax_rows = vec![0; c];
    for (i, row) in features.rows().into_iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > pooled[j] {
                pooled[j] = v;
                argmax_rows[j] = i;
            }
        }
    }
    let mut probs = (pooled.dot(weight) + bias).to_vec();
    softmax_inplace(&mut probs);
    Classification {
        pooled,
        argmax_rows,
        probs,
    }
}

/// Everything kept from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub len: usize,
    pub layers: Vec<LayerTrace>,
    /// Final encoder output `A`, `N x C`.
    pub features: Array2<f64>,
    pub classification: Classification,
}

impl ForwardTrace {
    pub fn probs(&self) -> &[f64] {
        &self.classification.probs
    }
}

pub(crate) fn forward_traced(
    model: &SrvModel,
    x: &Array2<f64>,
    timestamps: &[f64],
    duration: f64,
) -> ForwardTrace {
    let cfg = &model.config;
    let mut h = positional_encode(x, cfg, timestamps, duration);
    let mut layers = Vec::with_capacity(cfg.layers);
    for enc in &model.params.encoders {
        let (out, trace) = encoder_forward_traced(&h, enc, cfg);
        layers.push(trace);
        h = out;
    }
    let classification = classify(&h, &model.params.classifier, &model.params.classifier_bias);
    ForwardTrace {
        len: x.nrows(),
        layers,
        features: h,
        classification,
    }
}

pub(crate) fn forward_values(
    model: &SrvModel,
    x: &Array2<f64>,
    timestamps: &[f64],
    duration: f64,
) -> Classification {
    let cfg = &model.config;
    let mut h = positional_encode(x, cfg, timestamps, duration);
    for enc in &model.params.encoders {
        h = encoder_forward(&h, enc, cfg);
    }
    classify(&h, &model.params.classifier, &model.params.classifier_bias)
}

/// Columns `[h*C, (h+1)*C)` of the merge matrix, i.e. head `h`'s block.
pub(crate) fn merge_block(
    merge: &Array2<f64>,
    head: usize,
    c: usize,
) -> ndarray::ArrayView2<'_, f64> {
    merge.slice(s![head * c..(head + 1) * c, ..])
}
