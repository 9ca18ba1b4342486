//! ADAM, element-wise over flat parameter slices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            alpha: 0.001,
            beta1: 0.9,
            beta2: 0.99,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "ADAM needs alpha > 0, beta1/beta2 in [0, 1) and epsilon > 0, got {self:?}"
            )))
        }
    }
}

/// One ADAM update. `t` is the step counter before this update.
///
/// ```text
/// t ← t + 1
/// m ← β₁ m + (1 − β₁) g
/// v ← β₂ v + (1 − β₂) g²
/// m̂ ← m / (1 − β₁ᵗ)
/// v̂ ← v / (1 − β₂ᵗ)
/// w ← w − α m̂ / (√v̂ + ε)
/// ```
pub fn adam_update(w: &mut [f64], m: &mut [f64], v: &mut [f64], t: &mut u64, grad: &[f64], cfg: &AdamConfig) {
    assert!(
        w.len() == grad.len() && m.len() == grad.len() && v.len() == grad.len(),
        "parameter, moment and gradient lengths differ"
    );
    *t += 1;
    let step = i32::try_from(*t).unwrap_or(i32::MAX);
    let bias1 = 1.0 - cfg.beta1.powi(step);
    let bias2 = 1.0 - cfg.beta2.powi(step);
    for i in 0..w.len() {
        let g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * (g * g);
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        w[i] -= cfg.alpha * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}
