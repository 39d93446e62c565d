use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{los_channel, noiseless_pilots, SensingConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::Position3D;
use crate::policy::{rollout, PolicyParams};
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadioMapKind {
    /// All RIS reflections together.
    Combined,
    /// Reflection of one RIS only.
    Ris(usize),
}

impl RadioMapKind {
    pub fn label(self) -> String {
        match self {
            RadioMapKind::Combined => "combined".into(),
            RadioMapKind::Ris(k) => format!("ris{}", k + 1),
        }
    }
}

/// Reflected-path RSS (mW) of the LoS channel over 1 m blocks; row `r` is the
/// `r`-th block along y, column `c` along x.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioMap {
    pub rows: usize,
    pub cols: usize,
    pub rss: Vec<f64>,
    /// Zero-based sensing stage.
    pub stage: usize,
    pub kind: RadioMapKind,
    pub scenario_hash: u64,
    pub x_min: f64,
    pub y_min: f64,
}

impl RadioMap {
    /// RSS of the block containing `p`.
    pub fn at(&self, p: Position3D) -> f64 {
        let c = ((p.x - self.x_min).floor() as isize).clamp(0, self.cols as isize - 1) as usize;
        let r = ((p.y - self.y_min).floor() as isize).clamp(0, self.rows as isize - 1) as usize;
        self.rss[r * self.cols + c]
    }
}

pub fn radio_map(
    scenario: &ScenarioConfig,
    cfg: &SensingConfig,
    stage: usize,
    kind: RadioMapKind,
    execution: Execution,
) -> Result<RadioMap> {
    let cfg = match kind {
        RadioMapKind::Combined => cfg.clone(),
        RadioMapKind::Ris(k) if k < cfg.thetas.len() => cfg.only_ris(k),
        RadioMapKind::Ris(k) => return Err(Error::InvalidArgument(format!("no RIS {k}"))),
    };
    let (cols, rows) = scenario.ue_area.meter_blocks();
    let centers = scenario.ue_area.cell_centers(cols, rows);
    let p_u = scenario.tx_power_mw();
    let rss = execution.map(centers.len(), |i| -> Result<f64> {
        let mut ch = los_channel(scenario, centers[i])?;
        ch.h_d_per_bs.iter_mut().for_each(|h| h.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0)));
        Ok(noiseless_pilots(&cfg, &ch, p_u)?[0].norm_sqr())
    });
    Ok(RadioMap {
        rows,
        cols,
        rss: rss.into_iter().collect::<Result<_>>()?,
        stage,
        kind,
        scenario_hash: scenario.hash(),
        x_min: scenario.ue_area.x_min,
        y_min: scenario.ue_area.y_min,
    })
}

/// Maps of every stage of one policy episode: `[stage][kind]`, kinds being
/// the single-RIS maps followed by the combined map (combined only for one
/// RIS).
pub fn policy_radio_maps<R: Rng + ?Sized>(
    policy: &PolicyParams,
    scenario: &ScenarioConfig,
    p_ue: Position3D,
    stages: usize,
    rng: &mut R,
    execution: Execution,
) -> Result<Vec<Vec<RadioMap>>> {
    if scenario.ris.is_empty() {
        return Err(Error::InvalidScenario("radio maps need at least one RIS".into()));
    }
    let ch = crate::channel::sample_channel(scenario, p_ue, rng)?;
    let traj = rollout(policy, scenario, &ch, stages, rng)?;
    let mut kinds: Vec<RadioMapKind> = Vec::new();
    if scenario.ris.len() > 1 {
        kinds.extend((0..scenario.ris.len()).map(RadioMapKind::Ris));
    }
    kinds.push(RadioMapKind::Combined);
    traj.stages
        .iter()
        .enumerate()
        .map(|(t, st)| kinds.iter().map(|&k| radio_map(scenario, &st.config, t, k, execution)).collect())
        .collect()
}

/// Writes `radiomap_<kind>_stage<t>.txt` per map (stages numbered from 1)
/// plus a `radiomap_meta.toml` sidecar with the true UE position.
pub fn write_radio_maps(dir: &Path, maps: &[Vec<RadioMap>], p_ue: Position3D) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for m in maps.iter().flatten() {
        let path = dir.join(format!("radiomap_{}_stage{}.txt", m.kind.label(), m.stage + 1));
        let header = format!(
            "rows={} cols={} x_min={} y_min={} block_m=1 stage={} kind={} scenario_hash={:016x} unit=mW",
            m.rows,
            m.cols,
            m.x_min,
            m.y_min,
            m.stage + 1,
            m.kind.label(),
            m.scenario_hash
        );
        super::write_matrix(&path, &header, m.rows, m.cols, &m.rss)?;
        files.push(path);
    }
    let stages = maps.len();
    let hash = maps.first().and_then(|s| s.first()).map_or(0, |m| m.scenario_hash);
    let meta = format!(
        "ue_position = {{ x = {}, y = {}, z = {} }}\nstages = {stages}\nscenario_hash = \"{hash:016x}\"\n",
        p_ue.x, p_ue.y, p_ue.z
    );
    let path = dir.join("radiomap_meta.toml");
    std::fs::write(&path, meta)?;
    files.push(path);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::presets::preset;
    use crate::policy::{FeatureMode, PolicyConfig};
    use crate::rng::{episode_rng, Stream};

    #[test]
    fn map_covers_meter_lattice() {
        let s = preset("siso-1ris").unwrap();
        let cfg = SensingConfig::random(&s, &mut episode_rng(1, Stream::Misc, 0));
        let m = radio_map(&s, &cfg, 0, RadioMapKind::Combined, Execution::Sequential).unwrap();
        assert_eq!((m.rows, m.cols), (70, 30));
        assert!(m.rss.iter().all(|v| v.is_finite() && *v > 0.0));
        assert_eq!(m.at(Position3D::new(-34.9, 5.1, -20.0)), m.rss[0]);
        assert_eq!(m.at(Position3D::new(-5.1, 74.9, -20.0)), m.rss[69 * 30 + 29]);
        assert!(radio_map(&s, &cfg, 0, RadioMapKind::Ris(1), Execution::Sequential).is_err());
    }

    #[test]
    fn per_ris_maps_sum_incoherently_bounded() {
        let s = preset("miso-2ris").unwrap();
        let p = PolicyParams::new(PolicyConfig::scaled(1.0 / 32.0, FeatureMode::Pilot), &s, 3).unwrap();
        let ue = Position3D::new(-20.0, 40.0, -20.0);
        let maps = policy_radio_maps(&p, &s, ue, 2, &mut episode_rng(2, Stream::Test, 0), Execution::Sequential).unwrap();
        assert_eq!(maps.len(), 2);
        assert_eq!(maps[0].iter().map(|m| m.kind).collect::<Vec<_>>(), vec![RadioMapKind::Ris(0), RadioMapKind::Ris(1), RadioMapKind::Combined]);
        let dir = tempfile::tempdir().unwrap();
        let files = write_radio_maps(dir.path(), &maps, ue).unwrap();
        assert_eq!(files.len(), 7);
        assert!(files[6].ends_with("radiomap_meta.toml"));
        let (header, rows, cols, data) = crate::experiments::read_matrix(&files[0]).unwrap();
        assert!(header.contains("kind=ris1"));
        assert_eq!((rows, cols), (70, 30));
        assert_eq!(data, maps[0][0].rss);
        // |a + b|² ≤ 2(|a|² + |b|²)
        for m in &maps {
            for i in 0..m[2].rss.len() {
                assert!(m[2].rss[i] <= 2.0 * (m[0].rss[i] + m[1].rss[i]) * (1.0 + 1e-12));
            }
        }
    }
}
