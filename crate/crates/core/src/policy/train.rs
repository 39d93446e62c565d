//! Mini-batch Adam training shared by the active policy and the fixed-schedule
//! baselines.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::autodiff::{adam_step, AdamConfig, AdamState, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::Position3D;
use crate::rng::{episode_rng, Stream};
use crate::scenario::ScenarioConfig;

use super::batch::{BatchLeaves, EpisodeBatch, EpisodeKey};
use super::eval::{evaluate, EvalSummary};
use super::loss::{check_alpha, sq_error_on_tape, weighted_on_tape, LossMode};
use super::params::PolicyParams;
use super::rollout::{estimate_batch, rollout_on_tape};

/// A differentiable position estimator driven by episode batches.
pub trait Trainable: Sync {
    fn params(&self) -> Vec<&Tensor>;
    fn params_mut(&mut self) -> Vec<&mut Tensor>;
    /// Loss summed over `batch` rows and divided by `denom`, plus the tape
    /// variables of every parameter block in `params()` order.
    fn batch_loss(&self, tape: &mut Tape, batch: &EpisodeBatch, stages: usize, loss: &LossMode, denom: f64)
        -> Result<(Var, Vec<Var>)>;
    fn batch_estimates(&self, batch: &EpisodeBatch, stages: usize) -> Result<Vec<Position3D>>;
}

impl Trainable for PolicyParams {
    fn params(&self) -> Vec<&Tensor> {
        self.blocks()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.blocks_mut()
    }

    fn batch_loss(
        &self,
        tape: &mut Tape,
        batch: &EpisodeBatch,
        stages: usize,
        loss: &LossMode,
        denom: f64,
    ) -> Result<(Var, Vec<Var>)> {
        let bound = self.bind(tape);
        let leaves = BatchLeaves::bind(tape, batch);
        let weighted = matches!(loss, LossMode::Weighted(_));
        let roll = rollout_on_tape(tape, self, &bound, batch, &leaves, stages, weighted)?;
        let l = match loss {
            LossMode::Final => sq_error_on_tape(tape, roll.final_estimate, leaves.labels, denom)?,
            LossMode::Weighted(a) => weighted_on_tape(tape, &roll.estimates, leaves.labels, a, denom)?,
        };
        Ok((l, bound.vars))
    }

    fn batch_estimates(&self, batch: &EpisodeBatch, stages: usize) -> Result<Vec<Position3D>> {
        estimate_batch(self, batch, stages)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrSchedule {
    Constant,
    /// Cosine decay from the base rate down to `base · final_fraction`.
    Cosine { final_fraction: f64 },
}

impl LrSchedule {
    pub fn rate(self, base: f64, step: usize, total: usize) -> f64 {
        match self {
            LrSchedule::Constant => base,
            LrSchedule::Cosine { final_fraction } => {
                let f = step as f64 / total.max(1) as f64;
                let c = 0.5 * (1.0 + (std::f64::consts::PI * f.min(1.0)).cos());
                base * (final_fraction + (1.0 - final_fraction) * c)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHyper {
    pub train_episodes: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub stages: usize,
    pub loss: LossMode,
    pub adam: AdamConfig,
    pub lr_schedule: LrSchedule,
    /// Global L2 norm clip.
    pub grad_clip: Option<f64>,
    pub val_episodes: usize,
    /// Rows per gradient task; fixed so results do not depend on threads.
    pub chunk: usize,
    pub execution: Execution,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            train_episodes: 10_000,
            batch_size: 100,
            epochs: 20,
            stages: 6,
            loss: LossMode::Final,
            adam: AdamConfig::default(),
            lr_schedule: LrSchedule::Cosine { final_fraction: 0.05 },
            grad_clip: Some(10.0),
            val_episodes: 500,
            chunk: 25,
            execution: Execution::default(),
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if self.train_episodes == 0 || self.batch_size == 0 || self.stages == 0 || self.chunk == 0 {
            return Err(Error::InvalidArgument("episodes, batch, stages and chunk must be positive".into()));
        }
        if let LossMode::Weighted(a) = &self.loss {
            check_alpha(a, self.stages)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mse_m2: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    /// Validation MSE before the first update.
    pub initial_val_mse: f64,
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn final_val_mse(&self) -> f64 {
        self.rows.last().map_or(self.initial_val_mse, |r| r.val_mse_m2)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Loss and summed parameter gradients over `keys`, normalized by
/// `keys.len()`.
pub fn batch_gradient<M: Trainable>(
    model: &M,
    scenario: &ScenarioConfig,
    keys: &[EpisodeKey],
    stages: usize,
    loss: &LossMode,
    chunk: usize,
    execution: Execution,
) -> Result<(f64, Vec<Tensor>)> {
    let denom = keys.len() as f64;
    let parts = execution.map_chunks(keys.len(), chunk, |s, e| -> Result<(f64, Vec<Tensor>)> {
        let batch = EpisodeBatch::generate(scenario, &keys[s..e], stages)?;
        let mut tape = Tape::new();
        let (l, vars) = model.batch_loss(&mut tape, &batch, stages, loss, denom)?;
        let g = tape.backward(l)?;
        Ok((tape.value(l).item(), vars.iter().map(|v| g.get_or_zeros(&tape, *v)).collect()))
    });
    let mut total = 0.0;
    let mut grads: Option<Vec<Tensor>> = None;
    for p in parts {
        let (l, g) = p?;
        total += l;
        match &mut grads {
            None => grads = Some(g),
            Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| a.add_assign(b)),
        }
    }
    Ok((total, grads.unwrap_or_default()))
}

fn clip(grads: &mut [Tensor], max_norm: f64) {
    let n: f64 = grads.iter().flat_map(|g| &g.data).map(|x| x * x).sum::<f64>().sqrt();
    if n > max_norm {
        let s = max_norm / n;
        grads.iter_mut().for_each(|g| g.data.iter_mut().for_each(|x| *x *= s));
    }
}

pub fn validation_keys(seed: u64, n: usize) -> Vec<EpisodeKey> {
    (0..n as u64).map(|i| EpisodeKey::new(seed, Stream::Validation, i)).collect()
}

pub fn test_keys(seed: u64, n: usize) -> Vec<EpisodeKey> {
    (0..n as u64).map(|i| EpisodeKey::new(seed, Stream::Test, i)).collect()
}

/// Adam on the selected loss. Training episodes are `0..train_episodes` of
/// the training stream (noise redrawn every epoch); validation uses a
/// disjoint stream.
pub fn train_model<M: Trainable>(model: &mut M, scenario: &ScenarioConfig, hyper: &TrainHyper, seed: u64) -> Result<TrainLog> {
    hyper.validate()?;
    scenario.validate()?;
    let start = Instant::now();
    let val_keys = validation_keys(seed, hyper.val_episodes);
    let val = |m: &M| -> Result<f64> {
        if val_keys.is_empty() {
            return Ok(f64::NAN);
        }
        Ok(evaluate(m, scenario, &val_keys, hyper.stages, hyper.chunk, hyper.execution)?.mse)
    };
    let mut log = TrainLog { initial_val_mse: val(model)?, rows: Vec::with_capacity(hyper.epochs) };
    let mut state = AdamState::new(model.params());
    let steps_per_epoch = hyper.train_episodes.div_ceil(hyper.batch_size);
    let total_steps = steps_per_epoch * hyper.epochs;
    let mut order: Vec<u64> = (0..hyper.train_episodes as u64).collect();
    let mut step = 0;
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut episode_rng(seed, Stream::Misc, epoch as u64));
        let mut epoch_loss = 0.0;
        for idx in order.chunks(hyper.batch_size) {
            let keys: Vec<EpisodeKey> =
                idx.iter().map(|&i| EpisodeKey::new(seed, Stream::Train, i).with_pass(epoch as u64)).collect();
            let (l, mut grads) = batch_gradient(model, scenario, &keys, hyper.stages, &hyper.loss, hyper.chunk, hyper.execution)?;
            if !l.is_finite() || grads.iter().any(|g| g.data.iter().any(|x| !x.is_finite())) {
                return Err(Error::Diverged { epoch, detail: format!("non-finite loss {l} at step {step}") });
            }
            if let Some(c) = hyper.grad_clip {
                clip(&mut grads, c);
            }
            let lr = hyper.lr_schedule.rate(hyper.adam.lr, step, total_steps);
            adam_step(&mut model.params_mut(), &grads, &mut state, &hyper.adam, lr);
            epoch_loss += l * keys.len() as f64;
            step += 1;
        }
        let v = val(model)?;
        if v.is_nan() && !val_keys.is_empty() {
            return Err(Error::Diverged { epoch, detail: "validation MSE is NaN".into() });
        }
        let row = LogRow {
            epoch: epoch + 1,
            train_loss: epoch_loss / hyper.train_episodes as f64,
            val_mse_m2: v,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        log::info!("epoch {} train {:.4} val {:.4} ({:.1}s)", row.epoch, row.train_loss, row.val_mse_m2, row.wall_seconds);
        log.rows.push(row);
    }
    Ok(log)
}

/// Convenience wrapper returning the summary on a fresh test stream too.
pub fn train_and_test<M: Trainable>(
    model: &mut M,
    scenario: &ScenarioConfig,
    hyper: &TrainHyper,
    seed: u64,
    test_episodes: usize,
) -> Result<(TrainLog, EvalSummary)> {
    let log = train_model(model, scenario, hyper, seed)?;
    let s = evaluate(model, scenario, &test_keys(seed, test_episodes), hyper.stages, hyper.chunk, hyper.execution)?;
    Ok((log, s))
}
