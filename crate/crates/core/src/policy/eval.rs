//! Monte Carlo localization error.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::scenario::ScenarioConfig;

use super::batch::{EpisodeBatch, EpisodeKey};
use super::train::Trainable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    /// Mean squared error in m².
    pub mse: f64,
    /// Standard error of `mse`.
    pub se: f64,
    /// `√mse`, meters.
    pub rmse: f64,
}

impl EvalSummary {
    pub fn from_errors(sq: &[f64]) -> Result<Self> {
        if sq.is_empty() {
            return Err(Error::InvalidArgument("no episodes".into()));
        }
        let n = sq.len() as f64;
        let mse = sq.iter().sum::<f64>() / n;
        let var = if sq.len() > 1 { sq.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Ok(Self { episodes: sq.len(), mse, se: (var / n).sqrt(), rmse: mse.sqrt() })
    }
}

/// Squared position error of every episode, in key order.
pub fn squared_errors<M: Trainable + ?Sized>(
    model: &M,
    scenario: &ScenarioConfig,
    keys: &[EpisodeKey],
    stages: usize,
    chunk: usize,
    execution: Execution,
) -> Result<Vec<f64>> {
    let parts = execution.map_chunks(keys.len(), chunk, |s, e| -> Result<Vec<f64>> {
        let batch = EpisodeBatch::generate(scenario, &keys[s..e], stages)?;
        let est = model.batch_estimates(&batch, stages)?;
        Ok(est.iter().zip(&batch.positions).map(|(a, b)| { let d = *a - *b; d.x * d.x + d.y * d.y + d.z * d.z }).collect())
    });
    let mut out = Vec::with_capacity(keys.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

pub fn evaluate<M: Trainable + ?Sized>(
    model: &M,
    scenario: &ScenarioConfig,
    keys: &[EpisodeKey],
    stages: usize,
    chunk: usize,
    execution: Execution,
) -> Result<EvalSummary> {
    EvalSummary::from_errors(&squared_errors(model, scenario, keys, stages, chunk, execution)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_stats() {
        let s = EvalSummary::from_errors(&[1.0, 4.0]).unwrap();
        assert_eq!(s.mse, 2.5);
        assert!((s.se - (4.5f64 / 2.0).sqrt()).abs() < 1e-12);
        assert!(EvalSummary::from_errors(&[]).is_err());
    }
}
