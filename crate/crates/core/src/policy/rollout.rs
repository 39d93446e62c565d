//! Unrolled T-stage active sensing, batched on a tape or for a single episode.

use num_complex::Complex64;
use rand::Rng;

use crate::autodiff::{Tape, Tensor, Var};
use crate::channel::{ChannelRealization, Measurement, SensingConfig};
use crate::error::{Error, Result};
use crate::geometry::Position3D;
use crate::rng::complex_normal;
use crate::scenario::ScenarioConfig;

use super::batch::{broadcast_rows, features_on_tape, pilots_on_tape, unit_modulus_blocks, BatchLeaves, EpisodeBatch};
use super::network::{lstm_step_on_tape, mlp_position_on_tape, rows_to_complex, sensing_head_on_tape};
use super::params::{BoundPolicy, PolicyParams};

/// One sensing stage of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub feature: Vec<f64>,
    pub config: SensingConfig,
    /// One entry per BS.
    pub measurements: Vec<Measurement>,
    pub estimate: Option<Position3D>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub stages: Vec<StageRecord>,
    pub final_estimate: Position3D,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }
}

/// Handles for everything a batched rollout put on the tape.
pub(crate) struct TapeRollout {
    pub features: Vec<Var>,
    pub thetas: Vec<Vec<Var>>,
    pub ws: Vec<Vec<Var>>,
    pub pilots: Vec<Vec<Var>>,
    /// Per-stage estimates `ℓ_p(c^(t))`; empty unless requested.
    pub estimates: Vec<Var>,
    pub final_estimate: Var,
}

pub(crate) fn rollout_on_tape(
    tape: &mut Tape,
    params: &PolicyParams,
    bound: &BoundPolicy,
    batch: &EpisodeBatch,
    leaves: &BatchLeaves,
    stages: usize,
    per_stage: bool,
) -> Result<TapeRollout> {
    if stages == 0 {
        return Err(Error::InvalidArgument("rollout needs at least one stage".into()));
    }
    if batch.stages() < stages {
        return Err(Error::Dimension(format!("batch has noise for {} stages, {stages} requested", batch.stages())));
    }
    if batch.dims != params.dims {
        return Err(Error::Dimension("policy dimensions do not match the scenario".into()));
    }
    let rows = batch.rows();
    let h = params.config.hidden;
    let ris_sizes = params.ris_sizes();
    let bs_sizes = params.bs_sizes();
    let mut s = tape.leaf(Tensor::zeros(rows, h));
    let mut c = tape.leaf(Tensor::zeros(rows, h));
    let th0 = broadcast_rows(tape, bound.init_theta, rows)?;
    let w0 = broadcast_rows(tape, bound.init_w, rows)?;
    let mut thetas = if ris_sizes.is_empty() { Vec::new() } else { unit_modulus_blocks(tape, th0, &ris_sizes)? };
    let mut ws = unit_modulus_blocks(tape, w0, &bs_sizes)?;
    let mut out = TapeRollout {
        features: Vec::with_capacity(stages),
        thetas: Vec::with_capacity(stages),
        ws: Vec::with_capacity(stages),
        pilots: Vec::with_capacity(stages),
        estimates: Vec::new(),
        final_estimate: s,
    };
    for t in 0..stages {
        let ys = pilots_on_tape(tape, batch, leaves, &thetas, &ws, t)?;
        let pi = features_on_tape(tape, &ys, params.config.feature_mode, params.io.feature_scale)?;
        let (s_new, c_new) = lstm_step_on_tape(tape, bound, pi, s, c)?;
        s = s_new;
        c = c_new;
        out.features.push(pi);
        out.thetas.push(thetas.clone());
        out.ws.push(ws.clone());
        out.pilots.push(ys);
        if per_stage && t + 1 < stages {
            out.estimates.push(mlp_position_on_tape(tape, &bound.pos_head, &params.io, c)?);
        }
        if t + 1 < stages {
            let (nt, nw) = sensing_head_on_tape(tape, bound, &ris_sizes, &bs_sizes, s)?;
            thetas = nt;
            ws = nw;
        }
    }
    out.final_estimate = mlp_position_on_tape(tape, &bound.pos_head, &params.io, c)?;
    if per_stage {
        out.estimates.push(out.final_estimate);
    }
    Ok(out)
}

fn row_position(t: &Tensor, r: usize) -> Position3D {
    let v = t.row_slice(r);
    Position3D::new(v[0], v[1], v[2])
}

/// Unpacks row `r` of a taped rollout.
pub(crate) fn extract_trajectory(tape: &Tape, roll: &TapeRollout, r: usize) -> Trajectory {
    let stages = (0..roll.features.len())
        .map(|t| StageRecord {
            feature: tape.value(roll.features[t]).row_slice(r).to_vec(),
            config: SensingConfig {
                w_per_bs: roll.ws[t].iter().map(|v| rows_to_complex(tape.value(*v), r)).collect(),
                thetas: roll.thetas[t].iter().map(|v| rows_to_complex(tape.value(*v), r)).collect(),
            },
            measurements: roll.pilots[t]
                .iter()
                .map(|v| {
                    let y = tape.value(*v).row_slice(r);
                    Measurement::new(Complex64::new(y[0], y[1]), t)
                })
                .collect(),
            estimate: roll.estimates.get(t).map(|v| row_position(tape.value(*v), r)),
        })
        .collect();
    Trajectory { stages, final_estimate: row_position(tape.value(roll.final_estimate), r) }
}

/// Runs the policy on every episode of a batch (no gradients kept).
pub fn rollout_batch(params: &PolicyParams, batch: &EpisodeBatch, stages: usize) -> Result<Vec<Trajectory>> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let leaves = BatchLeaves::bind(&mut tape, batch);
    let roll = rollout_on_tape(&mut tape, params, &bound, batch, &leaves, stages, true)?;
    Ok((0..batch.rows()).map(|r| extract_trajectory(&tape, &roll, r)).collect())
}

/// Final estimates only, one per batch row.
pub fn estimate_batch(params: &PolicyParams, batch: &EpisodeBatch, stages: usize) -> Result<Vec<Position3D>> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let leaves = BatchLeaves::bind(&mut tape, batch);
    let roll = rollout_on_tape(&mut tape, params, &bound, batch, &leaves, stages, false)?;
    let v = tape.value(roll.final_estimate);
    Ok((0..batch.rows()).map(|r| row_position(v, r)).collect())
}

/// Single-episode rollout. Noise is drawn from `rng` stage by stage, one
/// sample per BS.
pub fn rollout<R: Rng + ?Sized>(
    params: &PolicyParams,
    scenario: &ScenarioConfig,
    channel: &ChannelRealization,
    stages: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let sigma2 = scenario.noise_variance_mw();
    let noise: Vec<Vec<Complex64>> = (0..stages)
        .map(|_| (0..scenario.num_bs()).map(|_| complex_normal(rng, sigma2)).collect())
        .collect();
    let batch = EpisodeBatch::from_parts(scenario, vec![(scenario.ue_area.center(), channel.clone(), noise)]);
    let mut t = rollout_batch(params, &batch, stages)?;
    Ok(t.pop().expect("one row"))
}
