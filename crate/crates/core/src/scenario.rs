//! Physical scenario description and its plain-text (TOML) config format.
//!
//! Keys (SI units):
//!
//! ```toml
//! name = "siso-1ris"
//! bs_positions = [{ x = 0.0, y = 0.0, z = 0.0 }]
//! bs_antennas = 1
//! ris = [{ position = { x = -40.0, y = 40.0, z = 0.0 }, elements = 64, columns = 8 }]
//! ue_area = { x_min = -35.0, x_max = -5.0, y_min = 5.0, y_max = 75.0, z = -20.0 }
//! rician_factor = 10.0
//! lambda_ris = 1.0          # 2π d_R / λ_c
//! lambda_bs = 1.0           # 2π d_A / λ_c
//! pathloss_direct = { a = 32.6, b = 36.7 }   # dB
//! pathloss_reflect = { a = 30.0, b = 22.0 }  # dB
//! noise_psd_dbm_hz = -170.0
//! bandwidth_hz = 10e6
//! snr_db = 20.0             # P_u = 10^(snr/10) mW
//! direct_los_present = true
//! ```
//!
//! A config file may name a `preset` and override any subset of keys.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{PathLoss, Position3D};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceArea {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Known UE height.
    pub z: f64,
}

impl ServiceArea {
    pub fn centered(cx: f64, hx: f64, cy: f64, hy: f64, z: f64) -> Self {
        Self { x_min: cx - hx, x_max: cx + hx, y_min: cy - hy, y_max: cy + hy, z }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> Position3D {
        Position3D::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max), self.z)
    }

    pub fn half_extent(&self) -> Position3D {
        Position3D::new(0.5 * self.width(), 0.5 * self.height(), 0.0)
    }

    pub fn contains(&self, p: &Position3D) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position3D {
        Position3D::new(
            rng.random_range(self.x_min..self.x_max),
            rng.random_range(self.y_min..self.y_max),
            self.z,
        )
    }

    /// Centers of the `cols × rows` uniform cells tiling the area, row-major
    /// with x varying fastest.
    pub fn cell_centers(&self, cols: usize, rows: usize) -> Vec<Position3D> {
        let dx = self.width() / cols as f64;
        let dy = self.height() / rows as f64;
        let mut out = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            for c in 0..cols {
                out.push(Position3D::new(
                    self.x_min + (c as f64 + 0.5) * dx,
                    self.y_min + (r as f64 + 0.5) * dy,
                    self.z,
                ));
            }
        }
        out
    }

    /// Lattice of 1 m × 1 m blocks: `(cols, rows)`.
    pub fn meter_blocks(&self) -> (usize, usize) {
        (self.width().round() as usize, self.height().round() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisSpec {
    pub position: Position3D,
    pub elements: usize,
    pub columns: usize,
}

impl RisSpec {
    pub fn square(position: Position3D, side: usize) -> Self {
        Self { position, elements: side * side, columns: side }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub bs_positions: Vec<Position3D>,
    pub bs_antennas: usize,
    #[serde(default)]
    pub ris: Vec<RisSpec>,
    pub ue_area: ServiceArea,
    pub rician_factor: f64,
    pub lambda_ris: f64,
    pub lambda_bs: f64,
    pub pathloss_direct: PathLoss,
    pub pathloss_reflect: PathLoss,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    pub snr_db: f64,
    pub direct_los_present: bool,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if self.bs_positions.is_empty() {
            return bad("at least one BS is required".into());
        }
        if self.bs_antennas == 0 {
            return bad("BS antenna count must be ≥ 1".into());
        }
        if self.bs_positions.len() > 1 && !self.ris.is_empty() {
            return bad("RIS reflections are modeled towards a single BS; multi-BS scenarios carry no RIS".into());
        }
        if !(self.rician_factor >= 0.0) {
            return bad(format!("Rician factor must be ≥ 0, got {}", self.rician_factor));
        }
        for (k, r) in self.ris.iter().enumerate() {
            if r.columns == 0 || r.elements == 0 || r.elements % r.columns != 0 {
                return bad(format!("RIS {k}: {} elements not divisible into {} columns", r.elements, r.columns));
            }
        }
        let mut anchors: Vec<Position3D> = self.bs_positions.clone();
        anchors.extend(self.ris.iter().map(|r| r.position));
        for p in &anchors {
            if !p.is_finite() {
                return bad(format!("non-finite anchor {p:?}"));
            }
        }
        for i in 0..anchors.len() {
            for j in i + 1..anchors.len() {
                if !(anchors[i].distance(&anchors[j]) > 0.0) {
                    return bad(format!("anchors {i} and {j} coincide"));
                }
            }
        }
        let a = &self.ue_area;
        if !(a.x_max > a.x_min && a.y_max > a.y_min) {
            return bad("empty UE area".into());
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad("bandwidth must be positive".into());
        }
        Ok(())
    }

    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    /// Δ = Σ_k N_k.
    pub fn total_ris_elements(&self) -> usize {
        self.ris.iter().map(|r| r.elements).sum()
    }

    /// σ_u² in mW from the noise PSD and bandwidth.
    pub fn noise_variance_mw(&self) -> f64 {
        10f64.powf((self.noise_psd_dbm_hz + 10.0 * self.bandwidth_hz.log10()) / 10.0)
    }

    /// P_u = 10^(SNR/10) mW.
    pub fn tx_power_mw(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// (LoS, NLoS) amplitude weights `√(ε/(1+ε))`, `√(1/(1+ε))`.
    pub fn rician_weights(factor: f64) -> (f64, f64) {
        if factor.is_infinite() {
            (1.0, 0.0)
        } else {
            ((factor / (1.0 + factor)).sqrt(), (1.0 / (1.0 + factor)).sqrt())
        }
    }

    pub fn with_snr(&self, snr_db: f64) -> Self {
        Self { snr_db, ..self.clone() }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies the keys of a TOML document on top of `self`. The `preset`
    /// key, if any, is ignored here (resolved by the caller).
    pub fn with_overrides(&self, overrides: &str) -> Result<Self> {
        let mut base: toml::Table = toml::from_str(&self.to_toml()).map_err(|e| Error::Config(e.to_string()))?;
        let over: toml::Table = toml::from_str(overrides).map_err(|e| Error::Config(e.to_string()))?;
        merge_tables(&mut base, over);
        base.remove("preset");
        let cfg: ScenarioConfig = base.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// First 16 hex digits of SHA-256 over the canonical TOML form.
    pub fn hash(&self) -> u64 {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        u64::from_be_bytes(digest[..8].try_into().unwrap())
    }
}

fn merge_tables(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
