use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::baselines::{build_fingerprint_db, fingerprint_squared_errors, train_fixed_dnn, FixedSensingSchedule};
use crate::bcrlb::{bcrlb_squared_errors, BcrlbSettings, CellModel};
use crate::error::{Error, Result};
use crate::policy::{evaluate, test_keys, train_model, EvalSummary, FeatureMode, PolicyConfig, PolicyParams, TrainHyper};
use crate::scenario::{RisSpec, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ActiveLstm,
    Bcrlb,
    /// Dense estimator with a learned, frozen schedule.
    FixedDnn,
    /// Dense estimator with a random schedule.
    RandomDnn,
    Fingerprint,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::ActiveLstm, Method::Bcrlb, Method::FixedDnn, Method::RandomDnn, Method::Fingerprint];

    pub fn id(self) -> &'static str {
        match self {
            Method::ActiveLstm => "active-lstm",
            Method::Bcrlb => "bcrlb",
            Method::FixedDnn => "fixed-dnn",
            Method::RandomDnn => "random-dnn",
            Method::Fingerprint => "fingerprint",
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Snr,
    Stages,
    RisSize,
    None,
}

impl SweepAxis {
    pub fn id(self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr",
            SweepAxis::Stages => "T",
            SweepAxis::RisSize => "ris_size",
            SweepAxis::None => "none",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" => Ok(SweepAxis::Snr),
            "T" | "t" | "stages" => Ok(SweepAxis::Stages),
            "ris_size" | "N" | "n" => Ok(SweepAxis::RisSize),
            "none" => Ok(SweepAxis::None),
            _ => Err(Error::InvalidArgument(format!("unknown sweep axis `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub preset: String,
    /// Resolved scenario (preset plus overrides).
    pub scenario: ScenarioConfig,
    pub method: Method,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub episodes: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// `T` unless the axis sweeps it.
    pub stages: usize,
    pub hyper: TrainHyper,
    pub policy: PolicyConfig,
    pub bcrlb: BcrlbSettings,
    pub knn_k: usize,
    pub fingerprint_draws: usize,
}

impl ExperimentSpec {
    /// Spec on a named preset with default training, a single evaluation
    /// point, 1000 test episodes and no output directory.
    pub fn for_preset(preset: &str, method: Method) -> Result<Self> {
        Ok(Self {
            preset: preset.to_string(),
            scenario: super::preset(preset)?,
            method,
            axis: SweepAxis::None,
            values: Vec::new(),
            episodes: 1000,
            seed: 1,
            output_dir: None,
            stages: 6,
            hyper: TrainHyper::default(),
            policy: PolicyConfig::desk(FeatureMode::Pilot),
            bcrlb: BcrlbSettings::default(),
            knn_k: 5,
            fingerprint_draws: 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.axis != SweepAxis::None && self.values.is_empty() {
            return Err(Error::InvalidArgument("sweep values must not be empty".into()));
        }
        if self.episodes == 0 {
            return Err(Error::InvalidArgument("episode count must be positive".into()));
        }
        if self.method == Method::Bcrlb
            && (self.scenario.num_bs() != 1 || self.scenario.bs_antennas != 1 || self.scenario.ris.len() != 1)
        {
            return Err(Error::InvalidArgument(format!("method bcrlb needs a single-RIS SISO preset, not `{}`", self.preset)));
        }
        if self.axis == SweepAxis::RisSize && self.scenario.ris.is_empty() {
            return Err(Error::InvalidArgument("ris_size sweep on a scenario without RIS".into()));
        }
        for &v in &self.values {
            match self.axis {
                SweepAxis::Stages if v < 1.0 || v.fract() != 0.0 => {
                    return Err(Error::InvalidArgument(format!("stage count {v} is not a positive integer")))
                }
                SweepAxis::RisSize => {
                    let side = v.sqrt().round();
                    if side < 1.0 || side * side != v {
                        return Err(Error::InvalidArgument(format!("RIS size {v} is not a square number")));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Scenario and stage count for one sweep value.
    pub fn point(&self, value: Option<f64>) -> (ScenarioConfig, usize) {
        let mut s = self.scenario.clone();
        let mut stages = self.stages;
        if let Some(v) = value {
            match self.axis {
                SweepAxis::Snr => s = s.with_snr(v),
                SweepAxis::Stages => stages = v as usize,
                SweepAxis::RisSize => {
                    let side = v.sqrt().round() as usize;
                    s.ris = s.ris.iter().map(|r| RisSpec::square(r.position, side)).collect();
                }
                SweepAxis::None => {}
            }
        }
        (s, stages)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub axis: String,
    pub value: Option<f64>,
    pub episodes: usize,
    pub mse_m2: f64,
    pub se_m2: f64,
    pub rmse_m: f64,
}

/// Trains (where the method learns) and evaluates one method on
/// `spec.episodes` test episodes.
pub fn evaluate_method(spec: &ExperimentSpec, scenario: &ScenarioConfig, stages: usize) -> Result<EvalSummary> {
    let keys = test_keys(spec.seed, spec.episodes);
    let hyper = TrainHyper { stages, ..spec.hyper.clone() };
    let exec = hyper.execution;
    match spec.method {
        Method::ActiveLstm => {
            let mut p = PolicyParams::new(spec.policy.clone(), scenario, spec.seed)?;
            train_model(&mut p, scenario, &hyper, spec.seed)?;
            evaluate(&p, scenario, &keys, stages, hyper.chunk, exec)
        }
        Method::FixedDnn | Method::RandomDnn => {
            let (m, _) = train_fixed_dnn(scenario, spec.method == Method::FixedDnn, spec.policy.feature_mode, &hyper, spec.seed)?;
            evaluate(&m, scenario, &keys, stages, hyper.chunk, exec)
        }
        Method::Fingerprint => {
            let sched = FixedSensingSchedule::random(scenario, stages, spec.seed);
            let db = build_fingerprint_db(scenario, &sched, spec.fingerprint_draws, spec.seed, exec)?;
            EvalSummary::from_errors(&fingerprint_squared_errors(&db, scenario, &keys, spec.knn_k, exec)?)
        }
        Method::Bcrlb => {
            let model = CellModel::new(scenario, spec.bcrlb.grid_cols, spec.bcrlb.grid_rows, exec)?;
            EvalSummary::from_errors(&bcrlb_squared_errors(&model, scenario, &keys, stages, &spec.bcrlb)?)
        }
    }
}

pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let values: Vec<Option<f64>> =
        if spec.axis == SweepAxis::None { vec![None] } else { spec.values.iter().copied().map(Some).collect() };
    let mut rows = Vec::with_capacity(values.len());
    for v in values {
        let (s, stages) = spec.point(v);
        let e = evaluate_method(spec, &s, stages)?;
        log::info!("{} {}={:?}: mse {:.4} m² (se {:.4})", spec.method.id(), spec.axis.id(), v, e.mse, e.se);
        rows.push(SweepRow {
            method: spec.method.id().into(),
            axis: spec.axis.id().into(),
            value: v,
            episodes: e.episodes,
            mse_m2: e.mse,
            se_m2: e.se,
            rmse_m: e.rmse,
        });
    }
    if let Some(dir) = &spec.output_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("sweep_{}_{}_{}.csv", spec.preset, spec.method.id(), spec.axis.id()));
        write_sweep_csv(&path, &rows)?;
    }
    Ok(rows)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
