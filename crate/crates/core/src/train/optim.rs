use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::head::HeadParams;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr_max: f64,
    pub warmup_steps: usize,
    pub max_steps: usize,
    /// Effective batch, `micro_batch * grad_accum`.
    pub batch_size: usize,
    pub micro_batch: usize,
    pub grad_accum: usize,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub dropout_p: f64,
    pub eval_every: usize,
    /// Threshold for the validation F1 used in checkpoint selection.
    pub eval_threshold: f64,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_max: 3e-5,
            warmup_steps: 200,
            max_steps: 3000,
            batch_size: 32,
            micro_batch: 32,
            grad_accum: 1,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            dropout_p: 0.1,
            eval_every: 100,
            eval_threshold: 0.5,
            hidden_dim: crate::head::HIDDEN_DIM,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.warmup_steps >= self.max_steps {
            return bad(format!("warmup_steps {} must be below max_steps {}", self.warmup_steps, self.max_steps));
        }
        if self.micro_batch * self.grad_accum != self.batch_size || self.batch_size == 0 {
            return bad(format!(
                "micro_batch {} x grad_accum {} must equal batch_size {}",
                self.micro_batch, self.grad_accum, self.batch_size
            ));
        }
        if !(self.lr_max > 0.0 && self.epsilon > 0.0 && self.weight_decay >= 0.0) {
            return bad("learning rate and epsilon must be positive, weight decay non-negative".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad(format!("dropout_p {} outside [0, 1)", self.dropout_p));
        }
        if self.eval_every == 0 || self.hidden_dim == 0 {
            return bad("eval_every and hidden_dim must be positive".into());
        }
        if !(self.eval_threshold > 0.0 && self.eval_threshold < 1.0) {
            return bad("eval_threshold must lie in (0, 1)".into());
        }
        Ok(())
    }
}

/// Linear warmup to `lr_max`, then cosine decay to zero at `max_steps`.
pub fn lr_schedule(step: usize, cfg: &TrainConfig) -> Result<f64> {
    if step > cfg.max_steps {
        return Err(Error::OutOfRange(format!("step {step} beyond max_steps {}", cfg.max_steps)));
    }
    if step < cfg.warmup_steps {
        return Ok(cfg.lr_max * step as f64 / cfg.warmup_steps as f64);
    }
    let progress = (step - cfg.warmup_steps) as f64 / (cfg.max_steps - cfg.warmup_steps) as f64;
    Ok(cfg.lr_max * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()))
}

/// AdamW moments, shaped like the head.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub m: HeadParams<T>,
    pub v: HeadParams<T>,
    pub step_count: u64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(params: &HeadParams<T>) -> Self {
        Self {
            m: HeadParams::zeros(params.input_dim, params.hidden_dim),
            v: HeadParams::zeros(params.input_dim, params.hidden_dim),
            step_count: 0,
        }
    }
}

/// One AdamW update with bias correction and decoupled weight decay:
/// `theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)`.
pub fn adamw_step<T: Scalar>(
    params: &mut HeadParams<T>,
    grads: &HeadParams<T>,
    state: &mut OptimizerState<T>,
    cfg: &TrainConfig,
    lr: f64,
) {
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let bc1 = T::of(1.0 - cfg.beta1.powi(t));
    let bc2 = T::of(1.0 - cfg.beta2.powi(t));
    let (lr, eps, wd) = (T::of(lr), T::of(cfg.epsilon), T::of(cfg.weight_decay));
    let one = T::one();

    let OptimizerState { m, v, .. } = state;
    for (((theta, g), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(m.tensors_mut())
        .zip(v.tensors_mut())
    {
        for i in 0..theta.len() {
            m[i] = b1 * m[i] + (one - b1) * g[i];
            v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            theta[i] = theta[i] - lr * (m_hat / (v_hat.sqrt() + eps) + wd * theta[i]);
        }
    }
}
