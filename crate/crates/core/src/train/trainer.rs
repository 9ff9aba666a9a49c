use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::EmbeddingDataset;
use crate::error::{Error, Result};
use crate::eval::{confusion_matrix, metrics_from_cm, write_jsonl};
use crate::head::{dropout_mask, gelu, hidden_preactivation, output_logits, softmax, HeadParams, MALICIOUS};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

use super::grad::{batch_loss, GradAccumulator};
use super::loss::class_weights;
use super::optim::{adamw_step, lr_schedule, OptimizerState, TrainConfig};

/// Offset mixed into the seed for head initialisation so the init draw and the
/// shuffle/dropout stream never coincide.
const INIT_SEED_SALT: u64 = 0x5E_ED0F_4EAD;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub step: usize,
    pub lr: f64,
    /// Mean training batch loss since the previous evaluation.
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub class_weights: (f64, f64),
    pub points: Vec<EvalPoint>,
    pub best_step: usize,
    pub best_val_f1: f64,
}

impl TrainingHistory {
    pub fn write_jsonl<W: Write>(&self, w: W) -> Result<()> {
        write_jsonl(w, &self.points)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T = f32> {
    /// Parameters at the best-F1 evaluation.
    pub params: HeadParams<T>,
    pub history: TrainingHistory,
}

/// Step-level training state; [`train_head`] drives one of these to
/// `max_steps`.
pub struct Trainer<'a, T> {
    cfg: &'a TrainConfig,
    data: Vec<T>,
    labels: &'a [u8],
    dim: usize,
    weights: (f64, f64),
    params: HeadParams<T>,
    state: OptimizerState<T>,
    rng: SplitMix64,
    order: Vec<usize>,
    cursor: usize,
    step: usize,
}

impl<'a, T: Scalar> Trainer<'a, T> {
    pub fn new(train: &'a EmbeddingDataset, cfg: &'a TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let (n_safe, n_mal) = train.class_counts();
        let weights = class_weights(n_safe, n_mal)?;
        let params = HeadParams::<T>::init(train.dim, cfg.hidden_dim, cfg.seed ^ INIT_SEED_SALT);
        Ok(Self {
            cfg,
            data: train.embeddings.iter().map(|&v| T::of(v as f64)).collect(),
            labels: &train.labels,
            dim: train.dim,
            weights,
            state: OptimizerState::new(&params),
            params,
            rng: SplitMix64::new(cfg.seed),
            order: (0..train.len()).collect(),
            cursor: train.len(),
            step: 0,
        })
    }

    pub fn params(&self) -> &HeadParams<T> {
        &self.params
    }

    pub fn class_weights(&self) -> (f64, f64) {
        self.weights
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    fn next_index(&mut self) -> usize {
        if self.cursor == self.order.len() {
            self.rng.shuffle(&mut self.order);
            self.cursor = 0;
        }
        self.cursor += 1;
        self.order[self.cursor - 1]
    }

    /// One optimizer step over `batch_size` samples (as `grad_accum`
    /// micro-batches). Returns the batch loss and the learning rate used.
    pub fn step(&mut self) -> Result<(f64, f64)> {
        if self.step >= self.cfg.max_steps {
            return Err(Error::OutOfRange(format!("training already ran {} steps", self.step)));
        }
        self.step += 1;
        let lr = lr_schedule(self.step, self.cfg)?;
        let mut acc = GradAccumulator::new(&self.params, self.weights);
        for _ in 0..self.cfg.grad_accum {
            for _ in 0..self.cfg.micro_batch {
                let i = self.next_index();
                let mask = (self.cfg.dropout_p > 0.0)
                    .then(|| dropout_mask::<T>(&mut self.rng, self.params.hidden_dim, self.cfg.dropout_p));
                let h = &self.data[i * self.dim..(i + 1) * self.dim];
                acc.add(h, self.labels[i], &self.params, mask.as_deref());
            }
        }
        let (loss, grads) = acc.finish();
        let loss = loss.as_f64();
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step: self.step, detail: format!("batch loss {loss} at lr {lr:e}") });
        }
        if !grads.is_finite() {
            return Err(Error::NonFiniteLoss { step: self.step, detail: "non-finite gradient".into() });
        }
        adamw_step(&mut self.params, &grads, &mut self.state, self.cfg, lr);
        Ok((loss, lr))
    }
}

/// Malicious-class probabilities under inference mode.
pub fn predict_scores<T: Scalar>(params: &HeadParams<T>, ds: &EmbeddingDataset) -> Vec<f64> {
    let mut h = vec![T::zero(); ds.dim];
    (0..ds.len())
        .map(|i| {
            h.iter_mut().zip(ds.embedding(i)).for_each(|(d, &s)| *d = T::of(s as f64));
            let act: Vec<T> = hidden_preactivation(&h, params).into_iter().map(gelu).collect();
            softmax(output_logits(&act, params))[MALICIOUS].as_f64()
        })
        .collect()
}

fn validate<T: Scalar>(params: &HeadParams<T>, val: &EmbeddingDataset, cfg: &TrainConfig, weights: (f64, f64)) -> Result<(f64, f64)> {
    let scores = predict_scores(params, val);
    let f1 = metrics_from_cm(&confusion_matrix(&scores, &val.labels, cfg.eval_threshold)?).f1;
    let hs: Vec<Vec<T>> = (0..val.len())
        .map(|i| val.embedding(i).iter().map(|&v| T::of(v as f64)).collect())
        .collect();
    let refs: Vec<&[T]> = hs.iter().map(Vec::as_slice).collect();
    let loss = batch_loss(&refs, &val.labels, params, weights).as_f64();
    Ok((loss, f1))
}

fn train_loop<T: Scalar>(train: &EmbeddingDataset, val: &EmbeddingDataset, cfg: &TrainConfig) -> Result<TrainOutcome<T>> {
    train.require_both_classes()?;
    val.require_both_classes()?;
    if train.dim != val.dim {
        return Err(Error::ShapeMismatch {
            expected: format!("validation dim {}", train.dim),
            actual: format!("{}", val.dim),
        });
    }
    let mut trainer = Trainer::<T>::new(train, cfg)?;
    let weights = trainer.class_weights();
    let mut points = Vec::new();
    let mut best: Option<(usize, f64, HeadParams<T>)> = None;
    let (mut loss_sum, mut loss_n) = (0.0, 0usize);

    while trainer.steps_done() < cfg.max_steps {
        let (loss, lr) = trainer.step()?;
        loss_sum += loss;
        loss_n += 1;
        let step = trainer.steps_done();
        if step % cfg.eval_every == 0 || step == cfg.max_steps {
            let (val_loss, val_f1) = validate(trainer.params(), val, cfg, weights)?;
            tracing::debug!(step, lr, val_loss, val_f1, "validation");
            points.push(EvalPoint { step, lr, train_loss: loss_sum / loss_n as f64, val_loss, val_f1 });
            (loss_sum, loss_n) = (0.0, 0);
            if best.as_ref().is_none_or(|b| val_f1 > b.1) {
                best = Some((step, val_f1, trainer.params().clone()));
            }
        }
    }
    let (best_step, best_val_f1, params) = best.expect("at least one evaluation runs");
    Ok(TrainOutcome {
        params,
        history: TrainingHistory { class_weights: weights, points, best_step, best_val_f1 },
    })
}

/// Train in 32-bit arithmetic and return the best-validation-F1 checkpoint.
pub fn train_head(train: &EmbeddingDataset, val: &EmbeddingDataset, cfg: &TrainConfig) -> Result<TrainOutcome<f32>> {
    train_loop(train, val, cfg)
}

/// The same run in 64-bit verification arithmetic.
pub fn train_head_f64(train: &EmbeddingDataset, val: &EmbeddingDataset, cfg: &TrainConfig) -> Result<TrainOutcome<f64>> {
    train_loop(train, val, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::TwoGaussians;

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            lr_max: 1e-2,
            warmup_steps: 10,
            max_steps: 120,
            batch_size: 16,
            micro_batch: 16,
            eval_every: 20,
            hidden_dim: 8,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    fn data(n: usize, seed: u64) -> EmbeddingDataset {
        TwoGaussians::new(32, 0.1, 1.0, 11).sample(n, n, seed)
    }

    #[test]
    fn deterministic_history() {
        let (tr, va) = (data(60, 1), data(20, 2));
        let a = train_head(&tr, &va, &small_cfg()).unwrap();
        let b = train_head(&tr, &va, &small_cfg()).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
        let c = train_head(&tr, &va, &TrainConfig { seed: 4, ..small_cfg() }).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn history_bookkeeping() {
        let tr = TwoGaussians::new(32, 0.1, 1.0, 11).sample(50, 25, 1);
        let va = data(20, 2);
        let out = train_head(&tr, &va, &small_cfg()).unwrap();
        assert_eq!(out.history.class_weights, class_weights(50, 25).unwrap());
        let steps: Vec<usize> = out.history.points.iter().map(|p| p.step).collect();
        assert_eq!(steps, vec![20, 40, 60, 80, 100, 120]);
        let best = out.history.points.iter().map(|p| p.val_f1).fold(f64::MIN, f64::max);
        assert_eq!(out.history.best_val_f1, best);
        let first_best = out.history.points.iter().find(|p| p.val_f1 == best).unwrap().step;
        assert_eq!(out.history.best_step, first_best);
        assert!(best > 0.9);
        let mut buf = Vec::new();
        out.history.write_jsonl(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 6);
    }

    #[test]
    fn accumulation_matches_direct_batch() {
        let (tr, va) = (data(40, 1), data(10, 2));
        let direct = train_head_f64(&tr, &va, &small_cfg()).unwrap();
        let accum = TrainConfig { micro_batch: 4, grad_accum: 4, ..small_cfg() };
        let split = train_head_f64(&tr, &va, &accum).unwrap();
        assert_eq!(direct.history.points.len(), split.history.points.len());
        for (a, b) in direct.params.tensors().iter().zip(split.params.tensors()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_single_class() {
        let tr = TwoGaussians::new(8, 0.1, 1.0, 1).sample(10, 0, 1);
        let va = data(5, 2);
        assert!(matches!(train_head(&tr, &va, &small_cfg()), Err(Error::EmptyClass("malicious"))));
    }

    #[test]
    fn divergence_is_reported() {
        let mut tr = data(10, 1);
        // Bypasses the dataset constructor's finiteness check on purpose.
        tr.embeddings.iter_mut().for_each(|v| *v = f32::INFINITY);
        let va = data(5, 2);
        assert!(matches!(train_head(&tr, &va, &small_cfg()), Err(Error::NonFiniteLoss { step: 1, .. })));
    }
}
