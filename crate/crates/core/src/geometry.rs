//! Anchor geometry, arrival/departure angles, array steering vectors and
//! log-distance path gains.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Position3D {
    type Output = Position3D;
    fn add(self, o: Position3D) -> Position3D {
        Position3D::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Position3D {
    type Output = Position3D;
    fn sub(self, o: Position3D) -> Position3D {
        Position3D::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Position3D {
    type Output = Position3D;
    fn mul(self, s: f64) -> Position3D {
        Position3D::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Azimuth/elevation of arrival from the UE at an anchor (RIS).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalAngles {
    pub phi: f64,
    pub psi: f64,
}

/// Departure angles RIS→BS plus the elevation of arrival at the BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepartureAngles {
    pub eta: f64,
    pub theta: f64,
    pub psi_bs: f64,
}

/// Every angle attached to one UE/RIS/BS triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSet {
    pub phi_ris: f64,
    pub psi_ris: f64,
    pub eta_ris: f64,
    pub theta_ris: f64,
    pub psi_bs: f64,
    pub psi_ue: f64,
}

impl AngleSet {
    pub fn compute(p_ue: Position3D, p_ris: Position3D, p_bs: Position3D) -> Result<Self> {
        let a = angles_ue_to_anchor(p_ue, p_ris)?;
        let d = angles_ris_to_bs(p_ris, p_bs)?;
        Ok(Self {
            phi_ris: a.phi,
            psi_ris: a.psi,
            eta_ris: d.eta,
            theta_ris: d.theta,
            psi_bs: d.psi_bs,
            psi_ue: elevation_at_bs(p_ue, p_bs)?,
        })
    }
}

fn checked_distance(a: Position3D, b: Position3D, what: &str) -> Result<f64> {
    let d = a.distance(&b);
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::DegenerateGeometry(format!("{what}: {a:?} and {b:?} coincide")));
    }
    Ok(d)
}

/// Angles of arrival at the anchor:
/// `cos φ sin ψ = Δx/d`, `sin φ sin ψ = Δy/d`, `cos ψ = (z_anchor − z)/d`
/// with `Δ = p_ue − p_anchor`.
pub fn angles_ue_to_anchor(p_ue: Position3D, p_anchor: Position3D) -> Result<ArrivalAngles> {
    let d = checked_distance(p_ue, p_anchor, "UE and anchor")?;
    let dx = p_ue.x - p_anchor.x;
    let dy = p_ue.y - p_anchor.y;
    let psi = ((p_anchor.z - p_ue.z) / d).clamp(-1.0, 1.0).acos();
    let phi = dy.atan2(dx);
    Ok(ArrivalAngles { phi, psi })
}

/// Departure angles at the RIS towards the BS:
/// `sin ϑ cos η = (x_ris − x_bs)/d`, `sin ϑ sin η = (y_ris − y_bs)/d`,
/// `sin ψ_bs = (z_ris − z_bs)/d`.
pub fn angles_ris_to_bs(p_ris: Position3D, p_bs: Position3D) -> Result<DepartureAngles> {
    let d = checked_distance(p_ris, p_bs, "RIS and BS")?;
    let dx = p_ris.x - p_bs.x;
    let dy = p_ris.y - p_bs.y;
    let rho = dx.hypot(dy);
    let eta = dy.atan2(dx);
    let theta = (rho / d).clamp(-1.0, 1.0).asin();
    let psi_bs = ((p_ris.z - p_bs.z) / d).clamp(-1.0, 1.0).asin();
    Ok(DepartureAngles { eta, theta, psi_bs })
}

/// Elevation of arrival at the BS for a source (UE or RIS), same convention
/// as `psi_bs`: `sin ψ = (z_src − z_bs)/d`.
pub fn elevation_at_bs(p_src: Position3D, p_bs: Position3D) -> Result<f64> {
    let d = checked_distance(p_src, p_bs, "source and BS")?;
    Ok(((p_src.z - p_bs.z) / d).clamp(-1.0, 1.0).asin())
}

/// Column index `mod(n−1, C)` and row index `⌊(n−1)/C⌋`, zero-based `n−1`.
#[inline]
pub fn element_indices(n0: usize, columns: usize) -> (f64, f64) {
    ((n0 % columns) as f64, (n0 / columns) as f64)
}

/// Phase of RIS element `n0` (zero-based) for the given angles.
#[inline]
pub fn ris_phase(n0: usize, columns: usize, sin_phi_cos_psi: f64, sin_psi: f64, lambda: f64) -> f64 {
    let (v1, v2) = element_indices(n0, columns);
    lambda * (v1 * sin_phi_cos_psi + v2 * sin_psi)
}

/// Uniform planar array response of an `N = C × rows` RIS.
pub fn ris_steering(phi: f64, psi: f64, n: usize, columns: usize, lambda: f64) -> Result<Vec<Complex64>> {
    if columns == 0 || n == 0 || n % columns != 0 {
        return Err(Error::Dimension(format!(
            "RIS with {n} elements is not a whole number of {columns}-element rows"
        )));
    }
    let u = phi.sin() * psi.cos();
    let v = psi.sin();
    Ok((0..n)
        .map(|n0| Complex64::from_polar(1.0, ris_phase(n0, columns, u, v, lambda)))
        .collect())
}

/// Uniform linear array response of an `M`-antenna BS.
pub fn bs_steering(psi: f64, m: usize, lambda_bs: f64) -> Vec<Complex64> {
    let c = psi.cos();
    (0..m)
        .map(|i| {
            if i == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, lambda_bs * i as f64 * c)
            }
        })
        .collect()
}

/// Path-loss law `PL = a + b·log10(d)` in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub a: f64,
    pub b: f64,
}

impl PathLoss {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn db(&self, distance: f64) -> f64 {
        self.a + self.b * distance.log10()
    }
}

/// Linear amplitude gain `10^(−PL/20)`.
pub fn path_gain(distance: f64, coeffs: PathLoss) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::DegenerateGeometry(format!("path gain at distance {distance}")));
    }
    Ok(10f64.powf(-coeffs.db(distance) / 20.0))
}
