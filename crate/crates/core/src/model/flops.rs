//! Closed-form inference cost.
//!
//! Each multiply-add counts as 2 FLOPs; softmax, normalisation, activation
//! and bias additions are not counted. Per encoder layer:
//!
//! ```text
//! Q/K/V projections   2 * N * C^2 * 3Z
//! scores Q K^T        2 * N^2 * C * Z
//! weighted sum W V    2 * N^2 * C * Z
//! merge projection    2 * N * ZC * C
//! feed-forward        2 * N * C * H * 2
//! ```
//!
//! plus `2 * C * M` for the classifier head.

use super::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FlopBreakdown {
    pub projections: u128,
    pub attention: u128,
    pub merge: u128,
    pub ffn: u128,
    pub classifier: u128,
}

impl FlopBreakdown {
    pub fn total(&self) -> u128 {
        self.projections + self.attention + self.merge + self.ffn + self.classifier
    }
}

pub fn estimate_flops(cfg: &ModelConfig, n: usize) -> FlopBreakdown {
    let n = n as u128;
    let c = cfg.subcarriers as u128;
    let z = cfg.heads as u128;
    let h = cfg.ffn_hidden as u128;
    let e = cfg.layers as u128;
    FlopBreakdown {
        projections: e * 2 * n * c * c * 3 * z,
        attention: e * 2 * 2 * n * n * c * z,
        merge: e * 2 * n * z * c * c,
        ffn: e * 2 * 2 * n * c * h,
        classifier: 2 * c * cfg.classes as u128,
    }
}
