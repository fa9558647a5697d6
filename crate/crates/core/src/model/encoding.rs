use ndarray::Array2;

use super::{ModelConfig, PositionalEncoding};

/// Additive `N x C` sinusoidal table: column `2k` holds `sin(p / 10000^(2k/C))`
/// and column `2k + 1` the matching cosine, where `p` is the row index or
/// the scaled physical time depending on the config.
pub fn positional_encoding(
    n: usize,
    cfg: &ModelConfig,
    timestamps: &[f64],
    duration: f64,
) -> Array2<f64> {
    let c = cfg.subcarriers;
    let inv_freq: Vec<f64> = (0..c)
        .map(|j| {
            let k = (j / 2) as f64;
            10000f64.powf(-2.0 * k / c as f64)
        })
        .collect();
    Array2::from_shape_fn((n, c), |(i, j)| {
        let pos = match cfg.pos_encoding {
            PositionalEncoding::SinusoidalIndex => i as f64,
            PositionalEncoding::SinusoidalTime => timestamps[i] / duration * cfg.time_positions,
        };
        let angle = pos * inv_freq[j];
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

pub fn positional_encode(
    x: &Array2<f64>,
    cfg: &ModelConfig,
    timestamps: &[f64],
    duration: f64,
) -> Array2<f64> {
    x + &positional_encoding(x.nrows(), cfg, timestamps, duration)
}
