use serde::{Deserialize, Serialize};

use crate::error::{GltError, Result};
use crate::masking::Mask;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty folded into the gradient. Zero by default.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn moments(&self, i: usize) -> (T, T) {
        (self.m[i], self.v[i])
    }

    /// Zeroes the moments of one entry, e.g. after it is regrown.
    pub fn reset_entry(&mut self, i: usize) {
        self.m[i] = T::zero();
        self.v[i] = T::zero();
    }

    /// One bias-corrected Adam update. With `active = Some((mask, offset))`,
    /// entry `i` moves only if `mask[offset + i]` is set; frozen entries keep
    /// their value and moments.
    pub fn step(
        &mut self,
        cfg: &AdamConfig,
        params: &mut [T],
        grads: &[T],
        active: Option<(&Mask, usize)>,
        what: &str,
    ) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(GltError::Shape(format!(
                "adam state for {} entries got {} params, {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(GltError::NonFinite(format!(
                "gradient of {what} at entry {i} (step {})",
                self.t + 1
            )));
        }
        self.t += 1;
        let b1 = T::of(cfg.beta1);
        let b2 = T::of(cfg.beta2);
        let one = T::one();
        let lr = T::of(cfg.lr);
        let eps = T::of(cfg.eps);
        let wd = T::of(cfg.weight_decay);
        let c1 = one - T::of(cfg.beta1.powi(self.t.min(i32::MAX as u64) as i32));
        let c2 = one - T::of(cfg.beta2.powi(self.t.min(i32::MAX as u64) as i32));
        for i in 0..params.len() {
            if let Some((mask, offset)) = active {
                if !mask.get(offset + i) {
                    continue;
                }
            }
            let g = grads[i] + wd * params[i];
            self.m[i] = b1 * self.m[i] + (one - b1) * g;
            self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
