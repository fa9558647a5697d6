use ndarray::{Array1, Array2};
use rand_distr::{Distribution, Uniform};

use super::ModelConfig;
use crate::seed::rng_from_seed;

/// Weights of one encoder layer. Projections act on row vectors
/// (`Q = x' W_Q`).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    /// Per head, `C x C`.
    pub query: Vec<Array2<f64>>,
    pub key: Vec<Array2<f64>>,
    pub value: Vec<Array2<f64>>,
    /// `ZC x C`, applied to the concatenated head outputs.
    pub merge: Array2<f64>,
    pub norm1_gain: Array1<f64>,
    pub norm1_bias: Array1<f64>,
    /// `C x H`
    pub ffn_in: Array2<f64>,
    pub ffn_in_bias: Array1<f64>,
    /// `H x C`
    pub ffn_out: Array2<f64>,
    pub ffn_out_bias: Array1<f64>,
    /// Unused when `post_ffn_norm` is off, but always stored.
    pub norm2_gain: Array1<f64>,
    pub norm2_bias: Array1<f64>,
}

/// All trainable tensors. Gradients and Adam moments use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub encoders: Vec<EncoderParams>,
    /// `C x M`
    pub classifier: Array2<f64>,
    pub classifier_bias: Array1<f64>,
}

impl Params {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let c = cfg.subcarriers;
        let h = cfg.ffn_hidden;
        let z = cfg.heads;
        let square = || Array2::zeros((c, c));
        let encoders = (0..cfg.layers)
            .map(|_| EncoderParams {
                query: (0..z).map(|_| square()).collect(),
                key: (0..z).map(|_| square()).collect(),
                value: (0..z).map(|_| square()).collect(),
                merge: Array2::zeros((z * c, c)),
                norm1_gain: Array1::zeros(c),
                norm1_bias: Array1::zeros(c),
                ffn_in: Array2::zeros((c, h)),
                ffn_in_bias: Array1::zeros(h),
                ffn_out: Array2::zeros((h, c)),
                ffn_out_bias: Array1::zeros(c),
                norm2_gain: Array1::zeros(c),
                norm2_bias: Array1::zeros(c),
            })
            .collect();
        Self {
            encoders,
            classifier: Array2::zeros((c, cfg.classes)),
            classifier_bias: Array1::zeros(cfg.classes),
        }
    }

    pub(crate) fn init(cfg: &ModelConfig) -> Self {
        let mut p = Self::zeros(cfg);
        let mut rng = rng_from_seed(cfg.init_seed);
        let s = cfg.init_scale;
        let mut fill = |a: &mut [f64]| {
            if s > 0.0 {
                let dist = Uniform::new(-s, s).expect("positive init scale");
                a.iter_mut().for_each(|v| *v = dist.sample(&mut rng));
            }
        };
        for enc in &mut p.encoders {
            for w in enc
                .query
                .iter_mut()
                .chain(&mut enc.key)
                .chain(&mut enc.value)
            {
                fill(w.as_slice_mut().unwrap());
            }
            fill(enc.merge.as_slice_mut().unwrap());
            fill(enc.ffn_in.as_slice_mut().unwrap());
            fill(enc.ffn_out.as_slice_mut().unwrap());
            enc.norm1_gain.fill(1.0);
            enc.norm2_gain.fill(1.0);
        }
        fill(p.classifier.as_slice_mut().unwrap());
        p
    }

    pub(crate) fn matches(&self, cfg: &ModelConfig) -> bool {
        let reference = Self::zeros(cfg);
        let a = self.tensors();
        let b = reference.tensors();
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| x.len() == y.len())
            && self
                .encoders
                .iter()
                .zip(&reference.encoders)
                .all(|(x, y)| x.merge.dim() == y.merge.dim() && x.ffn_in.dim() == y.ffn_in.dim())
            && self.classifier.dim() == reference.classifier.dim()
    }

    /// Every tensor as a flat slice, in checkpoint order: per layer the
    /// query, key and value matrices of each head, merge, norm1 gain/bias,
    /// ffn_in, ffn_in_bias, ffn_out, ffn_out_bias, norm2 gain/bias; then the
    /// classifier weight and bias.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for enc in &self.encoders {
            for w in enc.query.iter().chain(&enc.key).chain(&enc.value) {
                out.push(w.as_slice().expect("standard layout"));
            }
            out.push(enc.merge.as_slice().unwrap());
            out.push(enc.norm1_gain.as_slice().unwrap());
            out.push(enc.norm1_bias.as_slice().unwrap());
            out.push(enc.ffn_in.as_slice().unwrap());
            out.push(enc.ffn_in_bias.as_slice().unwrap());
            out.push(enc.ffn_out.as_slice().unwrap());
            out.push(enc.ffn_out_bias.as_slice().unwrap());
            out.push(enc.norm2_gain.as_slice().unwrap());
            out.push(enc.norm2_bias.as_slice().unwrap());
        }
        out.push(self.classifier.as_slice().unwrap());
        out.push(self.classifier_bias.as_slice().unwrap());
        out
    }

    /// Mutable counterpart of [`Params::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for enc in &mut self.encoders {
            for w in enc
                .query
                .iter_mut()
                .chain(&mut enc.key)
                .chain(&mut enc.value)
            {
                out.push(w.as_slice_mut().expect("standard layout"));
            }
            out.push(enc.merge.as_slice_mut().unwrap());
            out.push(enc.norm1_gain.as_slice_mut().unwrap());
            out.push(enc.norm1_bias.as_slice_mut().unwrap());
            out.push(enc.ffn_in.as_slice_mut().unwrap());
            out.push(enc.ffn_in_bias.as_slice_mut().unwrap());
            out.push(enc.ffn_out.as_slice_mut().unwrap());
            out.push(enc.ffn_out_bias.as_slice_mut().unwrap());
            out.push(enc.norm2_gain.as_slice_mut().unwrap());
            out.push(enc.norm2_bias.as_slice_mut().unwrap());
        }
        out.push(self.classifier.as_slice_mut().unwrap());
        out.push(self.classifier_bias.as_slice_mut().unwrap());
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}
