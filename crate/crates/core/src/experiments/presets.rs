//! Named scenarios.

use crate::error::{Error, Result};
use crate::geometry::{PathLoss, Position3D};
use crate::scenario::{RisSpec, ScenarioConfig, ServiceArea};

pub const PRESET_NAMES: [&str; 4] = ["siso-1ris", "miso-2ris", "3bs", "miso-2ris-nlos"];

fn base(name: &str) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        bs_positions: vec![Position3D::new(0.0, 0.0, 0.0)],
        bs_antennas: 1,
        ris: Vec::new(),
        ue_area: ServiceArea::centered(-20.0, 15.0, 40.0, 35.0, -20.0),
        rician_factor: 10.0,
        lambda_ris: 1.0,
        lambda_bs: 1.0,
        pathloss_direct: PathLoss { a: 32.6, b: 36.7 },
        pathloss_reflect: PathLoss { a: 30.0, b: 22.0 },
        noise_psd_dbm_hz: -170.0,
        bandwidth_hz: 10e6,
        snr_db: 20.0,
        direct_los_present: true,
    }
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let mut s = base(name);
    match name {
        "siso-1ris" => {
            s.ris = vec![RisSpec::square(Position3D::new(-40.0, 40.0, 0.0), 8)];
        }
        "miso-2ris" | "miso-2ris-nlos" => {
            s.bs_antennas = 8;
            s.ris = vec![
                RisSpec::square(Position3D::new(-40.0, 20.0, 0.0), 8),
                RisSpec::square(Position3D::new(-40.0, 60.0, 0.0), 8),
            ];
            s.direct_los_present = name == "miso-2ris";
        }
        "3bs" => {
            s.bs_antennas = 8;
            s.bs_positions = vec![
                Position3D::new(0.0, 0.0, 0.0),
                Position3D::new(-40.0, 20.0, 0.0),
                Position3D::new(-40.0, 60.0, 0.0),
            ];
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown preset `{other}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for n in PRESET_NAMES {
            preset(n).unwrap().validate().unwrap();
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn noise_floor() {
        let s = preset("siso-1ris").unwrap();
        assert!((s.noise_variance_mw() - 1e-10).abs() < 1e-22);
        assert_eq!(s.ue_area.meter_blocks(), (30, 70));
    }
}
