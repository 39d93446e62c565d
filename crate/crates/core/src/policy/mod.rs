//! LSTM active-sensing policy: network, rollout, losses and training.

mod batch;
mod checkpoint;
mod eval;
mod loss;
mod network;
mod params;
mod rollout;
mod train;

pub use batch::{EpisodeBatch, EpisodeKey};
pub(crate) use batch::{broadcast_rows, features_on_tape, pilots_on_tape, unit_modulus_blocks, BatchLeaves};
pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub(crate) use checkpoint::{Reader, Writer};
pub use eval::{evaluate, squared_errors, EvalSummary};
pub use loss::{check_alpha, loss_final, loss_weighted, LossMode};
pub(crate) use loss::sq_error_on_tape;
pub use network::HiddenState;
pub(crate) use network::{mlp_position_on_tape, rows_to_complex};
pub use params::{
    random_raw_config, FeatureMode, IoScaling, Linear, PolicyConfig, PolicyParams, SensingDims, GATE_C, GATE_F,
    GATE_I, GATE_O,
};
pub use rollout::{estimate_batch, rollout, rollout_batch, StageRecord, Trajectory};
pub use train::{batch_gradient, test_keys, train_and_test, train_model, validation_keys, LogRow, LrSchedule, TrainHyper, TrainLog, Trainable};
