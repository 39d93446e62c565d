//! Final-stage and stage-weighted squared-error losses.

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::geometry::Position3D;

use super::rollout::Trajectory;

/// Loss selector stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LossMode {
    #[default]
    Final,
    /// Per-stage weights, non-negative and summing to one.
    Weighted(Vec<f64>),
}

impl LossMode {
    pub fn code(&self) -> u32 {
        match self {
            LossMode::Final => 0,
            LossMode::Weighted(_) => 1,
        }
    }

    pub fn uniform(stages: usize) -> Self {
        LossMode::Weighted(vec![1.0 / stages as f64; stages])
    }
}

pub fn check_alpha(alpha: &[f64], stages: usize) -> Result<()> {
    if alpha.len() != stages {
        return Err(Error::InvalidArgument(format!("{} loss weights for {stages} stages", alpha.len())));
    }
    if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::InvalidArgument("loss weights must be non-negative".into()));
    }
    let s: f64 = alpha.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("loss weights sum to {s}, expected 1")));
    }
    Ok(())
}

/// `Σ_rows ‖est − labels‖² / denom`.
pub(crate) fn sq_error_on_tape(tape: &mut Tape, est: Var, labels: Var, denom: f64) -> Result<Var> {
    let d = tape.sub(est, labels)?;
    let sq = tape.square(d);
    let s = tape.sum(sq);
    Ok(tape.scale(s, 1.0 / denom))
}

pub(crate) fn weighted_on_tape(tape: &mut Tape, estimates: &[Var], labels: Var, alpha: &[f64], denom: f64) -> Result<Var> {
    check_alpha(alpha, estimates.len())?;
    let mut acc: Option<Var> = None;
    for (&e, &a) in estimates.iter().zip(alpha) {
        let l = sq_error_on_tape(tape, e, labels, denom)?;
        let l = tape.scale(l, a);
        acc = Some(match acc {
            None => l,
            Some(x) => tape.add(x, l)?,
        });
    }
    acc.ok_or_else(|| Error::InvalidArgument("no stages".into()))
}

fn check_batch(trajs: &[Trajectory], p_true: &[Position3D]) -> Result<()> {
    if trajs.is_empty() || trajs.len() != p_true.len() {
        return Err(Error::InvalidArgument(format!("{} trajectories for {} labels", trajs.len(), p_true.len())));
    }
    Ok(())
}

fn sq(a: Position3D, b: Position3D) -> f64 {
    let d = a - b;
    d.x * d.x + d.y * d.y + d.z * d.z
}

/// Batch mean of `‖p̂^(T) − p‖²`.
pub fn loss_final(trajs: &[Trajectory], p_true: &[Position3D]) -> Result<f64> {
    check_batch(trajs, p_true)?;
    Ok(trajs.iter().zip(p_true).map(|(t, p)| sq(t.final_estimate, *p)).sum::<f64>() / trajs.len() as f64)
}

/// Batch mean of `Σ_t α_t ‖p̂^(t) − p‖²`.
pub fn loss_weighted(trajs: &[Trajectory], p_true: &[Position3D], alpha: &[f64]) -> Result<f64> {
    check_batch(trajs, p_true)?;
    let mut total = 0.0;
    for (t, p) in trajs.iter().zip(p_true) {
        check_alpha(alpha, t.len())?;
        for (st, a) in t.stages.iter().zip(alpha) {
            let e = st.estimate.ok_or_else(|| Error::InvalidArgument("trajectory lacks per-stage estimates".into()))?;
            total += a * sq(e, *p);
        }
    }
    Ok(total / trajs.len() as f64)
}
