//! Head training: class-weighted cross-entropy, analytic gradients through the
//! MLP, AdamW with warmup + cosine decay, best-F1 checkpointing and stratified
//! cross-validation. The encoder never appears here: the parameter universe
//! is exactly [`HeadParams`](crate::head::HeadParams).

mod cv;
mod grad;
mod loss;
mod optim;
mod trainer;

pub use cv::{cv_table, run_cross_validation, CvReport, FoldResult, MetricStats};
pub use grad::{batch_loss, head_backward, head_backward_with_masks, GradAccumulator, HeadGrads};
pub use loss::{class_weights, cross_entropy_term, weighted_cross_entropy};
pub use optim::{adamw_step, lr_schedule, OptimizerState, TrainConfig};
pub use trainer::{predict_scores, train_head, train_head_f64, EvalPoint, TrainOutcome, Trainer, TrainingHistory};
