use super::Params;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment estimates and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: Params,
    pub second: Params,
    pub step: u64,
}

impl AdamState {
    pub fn new(like: &Params) -> Self {
        let mut first = like.clone();
        first.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
        Self {
            second: first.clone(),
            first,
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut Params, grads: &Params, state: &mut AdamState, lr: f64) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let tensors = params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.first.tensors_mut())
        .zip(state.second.tensors_mut());
    for (((p, g), m), v) in tensors {
        for i in 0..p.len() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelConfig, SrvModel};

    fn model() -> SrvModel {
        SrvModel::new(ModelConfig::new(3, 1, 1, 4, 2)).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut m = model();
        let before = m.params.clone();
        let zeros = Params::zeros(&m.config);
        let mut state = AdamState::new(&m.params);
        for _ in 0..3 {
            adam_step(&mut m.params, &zeros, &mut state, 1e-3);
        }
        assert_eq!(m.params, before);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        // m_hat = g and v_hat = g^2 after one step, so the move is
        // lr * g / (|g| + eps).
        let mut m = model();
        let before = m.params.clone();
        let mut grads = Params::zeros(&m.config);
        grads.classifier_bias[0] = 0.3;
        grads.classifier_bias[1] = -2.0;
        let mut state = AdamState::new(&m.params);
        let lr = 0.01;
        adam_step(&mut m.params, &grads, &mut state, lr);
        for (k, g) in [(0, 0.3f64), (1, -2.0f64)] {
            let expected = before.classifier_bias[k] - lr * g / (g.abs() + ADAM_EPS);
            assert!((m.params.classifier_bias[k] - expected).abs() < 1e-15);
        }
        assert_eq!(m.params.classifier, before.classifier);
    }
}
