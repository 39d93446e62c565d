use rand::Rng;

use crate::autodiff::{Tape, Tensor, Var};
use crate::channel::SensingConfig;
use crate::error::{Error, Result};
use crate::geometry::Position3D;
use crate::policy::{
    broadcast_rows, features_on_tape, mlp_position_on_tape, pilots_on_tape, random_raw_config, rows_to_complex,
    sq_error_on_tape, train_model, unit_modulus_blocks, BatchLeaves, EpisodeBatch, FeatureMode, IoScaling, Linear,
    LossMode, SensingDims, TrainHyper, TrainLog, Trainable,
};
use crate::rng::{episode_rng, Stream};
use crate::scenario::ScenarioConfig;

pub const FIXED_DNN_HIDDEN: [usize; 3] = [200, 200, 200];

/// `T` sensing configurations applied to every episode regardless of its
/// measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedSensingSchedule {
    pub configs: Vec<SensingConfig>,
}

impl FixedSensingSchedule {
    pub fn random(scenario: &ScenarioConfig, stages: usize, seed: u64) -> Self {
        let mut rng = episode_rng(seed, Stream::Schedule, 0);
        Self { configs: (0..stages).map(|_| SensingConfig::random(scenario, &mut rng)).collect() }
    }

    pub fn stages(&self) -> usize {
        self.configs.len()
    }

    pub fn is_unit_modulus(&self, tol: f64) -> bool {
        self.configs.iter().all(|c| c.is_unit_modulus(tol))
    }
}

/// Dense estimator on stacked T-stage features with its sensing schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedDnn {
    pub dims: SensingDims,
    pub io: IoScaling,
    pub feature_mode: FeatureMode,
    pub layers: Vec<Linear>,
    /// Per stage `1 × 2Δ` raw RIS pairs.
    pub schedule_theta: Vec<Tensor>,
    /// Per stage `1 × 2MJ` raw beamformer pairs.
    pub schedule_w: Vec<Tensor>,
    pub trainable_schedule: bool,
}

impl FixedDnn {
    pub fn new(scenario: &ScenarioConfig, stages: usize, feature_mode: FeatureMode, trainable_schedule: bool, seed: u64) -> Result<Self> {
        scenario.validate()?;
        if stages == 0 {
            return Err(Error::InvalidArgument("at least one stage is required".into()));
        }
        let dims = SensingDims::of(scenario);
        let io = IoScaling::for_scenario(scenario)?;
        let mut rng = episode_rng(seed, Stream::Init, 1);
        let mut layers = Vec::new();
        let mut width = stages * feature_mode.width() * dims.num_bs;
        for &h in &FIXED_DNN_HIDDEN {
            layers.push(Linear::init(&mut rng, width, h, true));
            width = h;
        }
        layers.push(Linear::init(&mut rng, width, 3, true));
        let mut srng = episode_rng(seed, Stream::Schedule, 0);
        let (schedule_theta, schedule_w) = (0..stages)
            .map(|_| raw_stage(&mut srng, &dims))
            .unzip();
        Ok(Self { dims, io, feature_mode, layers, schedule_theta, schedule_w, trainable_schedule })
    }

    pub fn stages(&self) -> usize {
        self.schedule_theta.len()
    }

    pub fn schedule(&self) -> FixedSensingSchedule {
        let mut tape = Tape::new();
        let configs = (0..self.stages())
            .map(|t| {
                let th = tape.leaf(self.schedule_theta[t].clone());
                let w = tape.leaf(self.schedule_w[t].clone());
                let (th, ws) = self.stage_vectors(&mut tape, th, w, 1).expect("schedule shapes");
                SensingConfig {
                    w_per_bs: ws.iter().map(|v| rows_to_complex(tape.value(*v), 0)).collect(),
                    thetas: th.iter().map(|v| rows_to_complex(tape.value(*v), 0)).collect(),
                }
            })
            .collect();
        FixedSensingSchedule { configs }
    }

    fn stage_vectors(&self, tape: &mut Tape, th: Var, w: Var, rows: usize) -> Result<(Vec<Var>, Vec<Var>)> {
        let thetas = if self.dims.ris_elements.is_empty() {
            Vec::new()
        } else {
            let b = broadcast_rows(tape, th, rows)?;
            unit_modulus_blocks(tape, b, &self.dims.ris_elements)?
        };
        let b = broadcast_rows(tape, w, rows)?;
        let ws = unit_modulus_blocks(tape, b, &vec![self.dims.bs_antennas; self.dims.num_bs])?;
        Ok((thetas, ws))
    }

    /// Estimate plus, per stage, the RIS and beamformer vectors used.
    #[allow(clippy::type_complexity)]
    fn forward(
        &self,
        tape: &mut Tape,
        batch: &EpisodeBatch,
        leaves: &BatchLeaves,
        vars: &mut Vec<Var>,
    ) -> Result<(Var, Vec<(Vec<Var>, Vec<Var>)>)> {
        if batch.dims != self.dims {
            return Err(Error::Dimension("estimator dimensions do not match the scenario".into()));
        }
        if batch.stages() < self.stages() {
            return Err(Error::Dimension(format!("batch has {} stages, schedule {}", batch.stages(), self.stages())));
        }
        let mut bound = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            bound.push(l.bind(tape, vars));
        }
        let mut sched = Vec::with_capacity(self.stages());
        for t in 0..self.stages() {
            let th = tape.leaf(self.schedule_theta[t].clone());
            let w = tape.leaf(self.schedule_w[t].clone());
            sched.push((th, w));
        }
        if self.trainable_schedule {
            sched.iter().for_each(|(th, _)| vars.push(*th));
            sched.iter().for_each(|(_, w)| vars.push(*w));
        }
        let rows = batch.rows();
        let mut feats = Vec::with_capacity(self.stages());
        let mut used = Vec::with_capacity(self.stages());
        for (t, &(th, w)) in sched.iter().enumerate() {
            let (thetas, ws) = self.stage_vectors(tape, th, w, rows)?;
            let ys = pilots_on_tape(tape, batch, leaves, &thetas, &ws, t)?;
            feats.push(features_on_tape(tape, &ys, self.feature_mode, self.io.feature_scale)?);
            used.push((thetas, ws));
        }
        let x = if feats.len() == 1 { feats[0] } else { tape.concat(&feats)? };
        Ok((mlp_position_on_tape(tape, &bound, &self.io, x)?, used))
    }

    /// Sensing configurations applied to each batch row, `[row][stage]`.
    pub fn batch_configs(&self, batch: &EpisodeBatch) -> Result<Vec<Vec<SensingConfig>>> {
        let mut tape = Tape::new();
        let leaves = BatchLeaves::bind(&mut tape, batch);
        let (_, used) = self.forward(&mut tape, batch, &leaves, &mut Vec::new())?;
        Ok((0..batch.rows())
            .map(|r| {
                used.iter()
                    .map(|(th, ws)| SensingConfig {
                        w_per_bs: ws.iter().map(|v| rows_to_complex(tape.value(*v), r)).collect(),
                        thetas: th.iter().map(|v| rows_to_complex(tape.value(*v), r)).collect(),
                    })
                    .collect()
            })
            .collect())
    }
}

fn raw_stage<R: Rng + ?Sized>(rng: &mut R, dims: &SensingDims) -> (Tensor, Tensor) {
    let th = random_raw_config(rng, &dims.ris_elements);
    let w = random_raw_config(rng, &vec![dims.bs_antennas; dims.num_bs]);
    (th, w)
}

impl Trainable for FixedDnn {
    /// Layer weights and biases, then (when trainable) the per-stage RIS raw
    /// pairs followed by the per-stage beamformer raw pairs.
    fn params(&self) -> Vec<&Tensor> {
        let mut out: Vec<&Tensor> = Vec::new();
        for l in &self.layers {
            out.push(&l.weight);
            if let Some(b) = &l.bias {
                out.push(b);
            }
        }
        if self.trainable_schedule {
            out.extend(self.schedule_theta.iter());
            out.extend(self.schedule_w.iter());
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            if let Some(b) = &mut l.bias {
                out.push(b);
            }
        }
        if self.trainable_schedule {
            out.extend(self.schedule_theta.iter_mut());
            out.extend(self.schedule_w.iter_mut());
        }
        out
    }

    fn batch_loss(&self, tape: &mut Tape, batch: &EpisodeBatch, _stages: usize, _loss: &LossMode, denom: f64) -> Result<(Var, Vec<Var>)> {
        let leaves = BatchLeaves::bind(tape, batch);
        let mut vars = Vec::new();
        let (est, _) = self.forward(tape, batch, &leaves, &mut vars)?;
        Ok((sq_error_on_tape(tape, est, leaves.labels, denom)?, vars))
    }

    fn batch_estimates(&self, batch: &EpisodeBatch, _stages: usize) -> Result<Vec<Position3D>> {
        let mut tape = Tape::new();
        let leaves = BatchLeaves::bind(&mut tape, batch);
        let (est, _) = self.forward(&mut tape, batch, &leaves, &mut Vec::new())?;
        let v = tape.value(est);
        Ok((0..batch.rows()).map(|r| { let x = v.row_slice(r); Position3D::new(x[0], x[1], x[2]) }).collect())
    }
}

/// Trains the dense estimator (and the schedule when `trainable`), always
/// on the final-position loss; `hyper.stages` sets `T`.
pub fn train_fixed_dnn(
    scenario: &ScenarioConfig,
    trainable: bool,
    feature_mode: FeatureMode,
    hyper: &TrainHyper,
    seed: u64,
) -> Result<(FixedDnn, TrainLog)> {
    let mut m = FixedDnn::new(scenario, hyper.stages, feature_mode, trainable, seed)?;
    let h = TrainHyper { loss: LossMode::Final, ..hyper.clone() };
    let log = train_model(&mut m, scenario, &h, seed)?;
    Ok((m, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::presets::preset;
    use crate::exec::Execution;
    use crate::policy::{evaluate, validation_keys, EpisodeKey, Trainable};

    fn tiny_hyper() -> TrainHyper {
        TrainHyper { train_episodes: 200, batch_size: 50, epochs: 3, stages: 3, val_episodes: 50, ..Default::default() }
    }

    #[test]
    fn frozen_schedule_is_identical_for_every_episode() {
        let s = preset("siso-1ris").unwrap();
        let (m, _) = train_fixed_dnn(&s, true, FeatureMode::Pilot, &tiny_hyper(), 5).unwrap();
        let keys: Vec<EpisodeKey> = (0..7).map(|i| EpisodeKey::new(9, Stream::Test, i)).collect();
        let batch = EpisodeBatch::generate(&s, &keys, 3).unwrap();
        let cfgs = m.batch_configs(&batch).unwrap();
        let sched = m.schedule();
        assert!(sched.is_unit_modulus(1e-9));
        for row in &cfgs {
            assert_eq!(row, &sched.configs);
        }
    }

    #[test]
    fn random_schedule_is_not_trained() {
        let s = preset("siso-1ris").unwrap();
        let before = FixedDnn::new(&s, 3, FeatureMode::Pilot, false, 5).unwrap();
        let (after, _) = train_fixed_dnn(&s, false, FeatureMode::Pilot, &tiny_hyper(), 5).unwrap();
        assert_eq!(before.schedule(), after.schedule());
        assert_ne!(before.layers, after.layers);
        assert_eq!(after.params().len(), 8);
    }

    #[test]
    fn trainable_schedule_moves() {
        let s = preset("siso-1ris").unwrap();
        let before = FixedDnn::new(&s, 3, FeatureMode::Pilot, true, 5).unwrap();
        let (after, _) = train_fixed_dnn(&s, true, FeatureMode::Pilot, &tiny_hyper(), 5).unwrap();
        assert_ne!(before.schedule(), after.schedule());
        assert_eq!(after.params().len(), 8 + 6);
    }

    #[test]
    fn multi_bs_estimator_runs() {
        let s = preset("3bs").unwrap();
        let m = FixedDnn::new(&s, 2, FeatureMode::Rss, true, 1).unwrap();
        assert_eq!(m.layers[0].weight.shape().0, 2 * 3);
        let e = evaluate(&m, &s, &validation_keys(1, 10), 2, 5, Execution::Sequential).unwrap();
        assert!(e.mse.is_finite());
        assert!(m.schedule().configs.iter().all(|c| c.thetas.is_empty() && c.w_per_bs.len() == 3));
    }
}
