//! Rician block-fading channels and received pilots.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{angles_ris_to_bs, angles_ue_to_anchor, bs_steering, elevation_at_bs, path_gain, ris_steering, Position3D};
use crate::rng::{complex_normal, unit_phase};
use crate::scenario::ScenarioConfig;

/// Pilot symbol, fixed for every stage.
pub const PILOT: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }
}

/// One coherence block of channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Direct UE→BS channel per BS, length M.
    pub h_d_per_bs: Vec<Vec<Complex64>>,
    /// UE→RIS channel per RIS, length N_k.
    pub h_r: Vec<Vec<Complex64>>,
    /// RIS→BS channel per RIS, M × N_k.
    pub g_r: Vec<CMatrix>,
    /// Cascade `diag(h_r) G_rᵀ` per RIS, N_k × M.
    pub h_c: Vec<CMatrix>,
}

fn cascade(h_r: &[Complex64], g_r: &CMatrix) -> CMatrix {
    let mut hc = CMatrix::zeros(h_r.len(), g_r.rows);
    for (n, &h) in h_r.iter().enumerate() {
        for m in 0..g_r.rows {
            hc.set(n, m, h * g_r.get(m, n));
        }
    }
    hc
}

/// NLoS source: either random draws or the deterministic LoS-only limit.
fn build_channel<R: Rng + ?Sized>(
    scenario: &ScenarioConfig,
    p_ue: Position3D,
    mut rng: Option<&mut R>,
) -> Result<ChannelRealization> {
    let m = scenario.bs_antennas;
    let (los_r, nlos_r) = ScenarioConfig::rician_weights(scenario.rician_factor);
    let (los_d, nlos_d) = if scenario.direct_los_present {
        (los_r, nlos_r)
    } else {
        ScenarioConfig::rician_weights(0.0)
    };
    let draw = |rng: &mut Option<&mut R>| match rng {
        Some(r) => complex_normal(*r, 1.0),
        None => Complex64::new(0.0, 0.0),
    };

    let mut h_d_per_bs = Vec::with_capacity(scenario.num_bs());
    for bs in &scenario.bs_positions {
        let rho = path_gain(p_ue.distance(bs), scenario.pathloss_direct)?;
        let los = bs_steering(elevation_at_bs(p_ue, *bs)?, m, scenario.lambda_bs);
        let h: Vec<Complex64> = los.iter().map(|&a| rho * (los_d * a + nlos_d * draw(&mut rng))).collect();
        h_d_per_bs.push(h);
    }

    let bs = scenario.bs_positions[0];
    let mut h_r = Vec::with_capacity(scenario.ris.len());
    let mut g_r = Vec::with_capacity(scenario.ris.len());
    for ris in &scenario.ris {
        let n = ris.elements;
        let kappa = path_gain(p_ue.distance(&ris.position), scenario.pathloss_reflect)?;
        let xi = path_gain(ris.position.distance(&bs), scenario.pathloss_reflect)?;
        let arr = angles_ue_to_anchor(p_ue, ris.position)?;
        let a_ue = ris_steering(arr.phi, arr.psi, n, ris.columns, scenario.lambda_ris)?;
        let h: Vec<Complex64> = a_ue.iter().map(|&a| kappa * (los_r * a + nlos_r * draw(&mut rng))).collect();

        let dep = angles_ris_to_bs(ris.position, bs)?;
        let a_dep = ris_steering(dep.eta, dep.theta, n, ris.columns, scenario.lambda_ris)?;
        let a_bs = bs_steering(dep.psi_bs, m, scenario.lambda_bs);
        let mut g = CMatrix::zeros(m, n);
        for (mi, &b) in a_bs.iter().enumerate() {
            for (ni, &d) in a_dep.iter().enumerate() {
                g.set(mi, ni, xi * (los_r * b * d.conj() + nlos_r * draw(&mut rng)));
            }
        }
        h_r.push(h);
        g_r.push(g);
    }
    let h_c = h_r.iter().zip(&g_r).map(|(h, g)| cascade(h, g)).collect();
    Ok(ChannelRealization { h_d_per_bs, h_r, g_r, h_c })
}

/// Draws one Rician realization for a UE at `p_ue`.
///
/// Draw order: per BS the M direct NLoS entries; then per RIS the N_k
/// UE→RIS entries followed by the M × N_k RIS→BS entries (row-major).
pub fn sample_channel<R: Rng + ?Sized>(scenario: &ScenarioConfig, p_ue: Position3D, rng: &mut R) -> Result<ChannelRealization> {
    build_channel(scenario, p_ue, Some(rng))
}

/// Deterministic part of the channel (LoS components with Rician scaling).
pub fn los_channel(scenario: &ScenarioConfig, p_ue: Position3D) -> Result<ChannelRealization> {
    build_channel::<rand_chacha::ChaCha8Rng>(scenario, p_ue, None)
}

/// Beamformer per BS and reflection vector per RIS for one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingConfig {
    pub w_per_bs: Vec<Vec<Complex64>>,
    pub thetas: Vec<Vec<Complex64>>,
}

impl SensingConfig {
    pub fn random<R: Rng + ?Sized>(scenario: &ScenarioConfig, rng: &mut R) -> Self {
        let w_per_bs = (0..scenario.num_bs())
            .map(|_| (0..scenario.bs_antennas).map(|_| unit_phase(rng)).collect())
            .collect();
        let thetas = scenario.ris.iter().map(|r| (0..r.elements).map(|_| unit_phase(rng)).collect()).collect();
        Self { w_per_bs, thetas }
    }

    pub fn max_modulus_error(&self) -> f64 {
        self.w_per_bs
            .iter()
            .chain(self.thetas.iter())
            .flatten()
            .map(|z| (z.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_unit_modulus(&self, tol: f64) -> bool {
        self.max_modulus_error() <= tol
    }

    /// Keeps only RIS `k` (others zeroed); used for per-RIS radio maps.
    pub fn only_ris(&self, k: usize) -> Self {
        let thetas = self
            .thetas
            .iter()
            .enumerate()
            .map(|(i, t)| if i == k { t.clone() } else { vec![Complex64::new(0.0, 0.0); t.len()] })
            .collect();
        Self { w_per_bs: self.w_per_bs.clone(), thetas }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub y: Complex64,
    pub rss: f64,
    pub t: usize,
}

impl Measurement {
    pub fn new(y: Complex64, t: usize) -> Self {
        Self { y, rss: y.norm_sqr(), t }
    }
}

fn check_dims(cfg: &SensingConfig, ch: &ChannelRealization) -> Result<()> {
    if cfg.w_per_bs.len() != ch.h_d_per_bs.len() {
        return Err(Error::Dimension(format!("{} beamformers for {} BSs", cfg.w_per_bs.len(), ch.h_d_per_bs.len())));
    }
    if cfg.thetas.len() != ch.h_c.len() {
        return Err(Error::Dimension(format!("{} RIS configs for {} RISs", cfg.thetas.len(), ch.h_c.len())));
    }
    for (w, h) in cfg.w_per_bs.iter().zip(&ch.h_d_per_bs) {
        if w.len() != h.len() {
            return Err(Error::Dimension(format!("beamformer length {} vs {} antennas", w.len(), h.len())));
        }
    }
    for (t, hc) in cfg.thetas.iter().zip(&ch.h_c) {
        if t.len() != hc.rows {
            return Err(Error::Dimension(format!("RIS config length {} vs {} elements", t.len(), hc.rows)));
        }
        if hc.cols != cfg.w_per_bs[0].len() {
            return Err(Error::Dimension("cascade/beamformer antenna mismatch".into()));
        }
    }
    Ok(())
}

/// Noiseless `√P_u · w_jᵀ(h_d,j + Σ_k H_c,kᵀ θ_k) x` per BS. RIS paths
/// terminate at BS 0.
pub fn noiseless_pilots(cfg: &SensingConfig, ch: &ChannelRealization, p_u: f64) -> Result<Vec<Complex64>> {
    check_dims(cfg, ch)?;
    let amp = p_u.sqrt();
    let mut out = Vec::with_capacity(cfg.w_per_bs.len());
    for (j, (w, h_d)) in cfg.w_per_bs.iter().zip(&ch.h_d_per_bs).enumerate() {
        let mut z: Vec<Complex64> = h_d.clone();
        if j == 0 {
            for (theta, hc) in cfg.thetas.iter().zip(&ch.h_c) {
                for (n, &t) in theta.iter().enumerate() {
                    let row = &hc.data[n * hc.cols..(n + 1) * hc.cols];
                    for (zm, &h) in z.iter_mut().zip(row) {
                        *zm += h * t;
                    }
                }
            }
        }
        let s: Complex64 = w.iter().zip(&z).map(|(a, b)| a * b).sum();
        out.push(amp * s * PILOT);
    }
    Ok(out)
}

/// Received pilot per BS with independent CN(0, σ²) noise at each BS.
pub fn received_pilot<R: Rng + ?Sized>(
    cfg: &SensingConfig,
    ch: &ChannelRealization,
    p_u: f64,
    sigma2: f64,
    t: usize,
    rng: &mut R,
) -> Result<Vec<Measurement>> {
    Ok(noiseless_pilots(cfg, ch, p_u)?
        .into_iter()
        .map(|y| Measurement::new(y + complex_normal(rng, sigma2), t))
        .collect())
}
