//! Splitting, metrics, the training loop, experiments and checkpoints.

pub mod checkpoint;
pub mod experiment;
pub mod metrics;
pub mod splits;
pub mod train;

pub use checkpoint::Checkpoint;
pub use experiment::{run_ablation, run_experiment, splits_for, TrainReport};
pub use metrics::{compute_metrics, Metrics};
pub use splits::{fixed_split, make_splits, DatasetSplit};
pub use train::{train, RunReport};
