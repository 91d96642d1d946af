//! Adam with L2 regularization.
//!
//! L2 is applied as coupled weight decay: the penalty gradient is added
//! to the loss gradient before the moment updates, for every trainable
//! parameter including biases. A decoupled (AdamW-style) variant is kept
//! behind a flag for sensitivity checks.

use crate::error::{Error, Result};
use crate::model::ModelHead;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub l2: f64,
    /// When true, apply L2 as decoupled weight decay instead of adding
    /// it to the gradient.
    pub decoupled: bool,
}

impl AdamHyper {
    pub fn new(lr: f64, l2: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, l2, decoupled: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(num_params: usize, hyper: AdamHyper) -> Self {
        Self { t: 0, m: vec![0.0; num_params], v: vec![0.0; num_params], hyper }
    }
}

/// One Adam step. Returns the updated head and state; inputs are left
/// untouched so a rejected step cannot corrupt a run.
pub fn adam_step(head: &ModelHead, grads: &[f64], state: &AdamState) -> Result<(ModelHead, AdamState)> {
    if grads.len() != head.params.len() || state.m.len() != head.params.len() {
        return Err(Error::validation(format!(
            "gradient/state length {} does not match parameter count {}",
            grads.len(),
            head.params.len()
        )));
    }
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { index });
    }

    let h = state.hyper;
    let t = state.t + 1;
    let bc1 = 1.0 - h.beta1.powi(t as i32);
    let bc2 = 1.0 - h.beta2.powi(t as i32);

    let mut new_head = head.clone();
    let mut new_state = state.clone();
    new_state.t = t;
    for i in 0..grads.len() {
        let g = if h.decoupled { grads[i] } else { grads[i] + h.l2 * head.params[i] };
        let m = h.beta1 * state.m[i] + (1.0 - h.beta1) * g;
        let v = h.beta2 * state.v[i] + (1.0 - h.beta2) * g * g;
        new_state.m[i] = m;
        new_state.v[i] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        let mut theta = head.params[i] - h.lr * m_hat / (v_hat.sqrt() + h.eps);
        if h.decoupled {
            theta -= h.lr * h.l2 * head.params[i];
        }
        new_head.params[i] = theta;
    }
    Ok((new_head, new_state))
}
