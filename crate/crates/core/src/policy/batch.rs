//! Episode batches: UE positions, channel constants and pre-drawn noise laid
//! out as tensors for the differentiable measurement model.

use std::sync::Arc;

use num_complex::Complex64;

use crate::autodiff::{Tape, Tensor, Var};
use crate::channel::{sample_channel, ChannelRealization, PILOT};
use crate::error::Result;
use crate::geometry::Position3D;
use crate::rng::{episode_rng, stream_seed, Stream};
use crate::scenario::ScenarioConfig;

use super::params::{FeatureMode, SensingDims};

/// Identifies one episode. Position and channel come from
/// `(master, stream, index)`; noise from an independent stream keyed by
/// `pass` so training can redraw noise every epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EpisodeKey {
    pub master: u64,
    pub stream: Stream,
    pub index: u64,
    pub pass: u64,
}

impl EpisodeKey {
    pub fn new(master: u64, stream: Stream, index: u64) -> Self {
        Self { master, stream, index, pass: 0 }
    }

    pub fn with_pass(self, pass: u64) -> Self {
        Self { pass, ..self }
    }

    /// UE position (uniform over the service area) and its channel.
    pub fn draw(&self, scenario: &ScenarioConfig) -> Result<(Position3D, ChannelRealization)> {
        let mut rng = episode_rng(self.master, self.stream, self.index);
        let p = scenario.ue_area.sample(&mut rng);
        let ch = sample_channel(scenario, p, &mut rng)?;
        Ok((p, ch))
    }

    pub fn noise_rng(&self) -> crate::rng::EpisodeRng {
        episode_rng(stream_seed(self.master, self.stream, self.index), Stream::Noise, self.pass)
    }

    /// `[stage][bs]` noise samples, CN(0, σ²) each.
    pub fn draw_noise(&self, stages: usize, num_bs: usize, sigma2: f64) -> Vec<Vec<Complex64>> {
        let mut rng = self.noise_rng();
        (0..stages)
            .map(|_| (0..num_bs).map(|_| crate::rng::complex_normal(&mut rng, sigma2)).collect())
            .collect()
    }
}

/// Real `2M × 2N` form of `H_cᵀ` so that `[Re z; Im z] = R [Re θ; Im θ]`.
pub(crate) fn cascade_real_form(hc: &crate::channel::CMatrix, out: &mut Vec<f64>) {
    let (n, m) = (hc.rows, hc.cols);
    let cols = 2 * n;
    let base = out.len();
    out.resize(base + 4 * m * n, 0.0);
    let o = &mut out[base..];
    for mi in 0..m {
        for ni in 0..n {
            let a = hc.get(ni, mi) * PILOT;
            o[mi * cols + ni] = a.re;
            o[mi * cols + n + ni] = -a.im;
            o[(m + mi) * cols + ni] = a.im;
            o[(m + mi) * cols + n + ni] = a.re;
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeBatch {
    pub positions: Vec<Position3D>,
    pub dims: SensingDims,
    /// Per RIS: per-row `2M × 2N_k` matrices (towards BS 0).
    pub cascade: Vec<Arc<Vec<f64>>>,
    /// Per BS: `rows × 2M` direct channel.
    pub direct: Vec<Tensor>,
    /// `[stage][bs]`: `rows × 2` additive noise.
    pub noise: Vec<Vec<Tensor>>,
    pub p_u: f64,
    pub sigma2: f64,
}

impl EpisodeBatch {
    pub fn rows(&self) -> usize {
        self.positions.len()
    }

    pub fn stages(&self) -> usize {
        self.noise.len()
    }

    pub fn generate(scenario: &ScenarioConfig, keys: &[EpisodeKey], stages: usize) -> Result<Self> {
        let mut episodes = Vec::with_capacity(keys.len());
        for k in keys {
            let (p, ch) = k.draw(scenario)?;
            let noise = k.draw_noise(stages, scenario.num_bs(), scenario.noise_variance_mw());
            episodes.push((p, ch, noise));
        }
        Ok(Self::from_parts(scenario, episodes))
    }

    /// Builds a batch from explicit positions, channels and noise.
    pub fn from_parts(
        scenario: &ScenarioConfig,
        episodes: Vec<(Position3D, ChannelRealization, Vec<Vec<Complex64>>)>,
    ) -> Self {
        let dims = SensingDims::of(scenario);
        let rows = episodes.len();
        let stages = episodes.first().map_or(0, |e| e.2.len());
        let m = dims.bs_antennas;
        let mut cascade: Vec<Vec<f64>> = dims.ris_elements.iter().map(|n| Vec::with_capacity(rows * 4 * m * n)).collect();
        let mut direct: Vec<Tensor> = (0..dims.num_bs).map(|_| Tensor::zeros(rows, 2 * m)).collect();
        let mut noise: Vec<Vec<Tensor>> = (0..stages).map(|_| (0..dims.num_bs).map(|_| Tensor::zeros(rows, 2)).collect()).collect();
        let mut positions = Vec::with_capacity(rows);
        for (r, (p, ch, nz)) in episodes.into_iter().enumerate() {
            positions.push(p);
            for (k, hc) in ch.h_c.iter().enumerate() {
                cascade_real_form(hc, &mut cascade[k]);
            }
            for (j, h) in ch.h_d_per_bs.iter().enumerate() {
                for (mi, z) in h.iter().enumerate() {
                    let z = z * PILOT;
                    direct[j].set(r, mi, z.re);
                    direct[j].set(r, m + mi, z.im);
                }
            }
            for (t, per_bs) in nz.iter().enumerate() {
                for (j, z) in per_bs.iter().enumerate() {
                    noise[t][j].set(r, 0, z.re);
                    noise[t][j].set(r, 1, z.im);
                }
            }
        }
        Self {
            positions,
            dims,
            cascade: cascade.into_iter().map(Arc::new).collect(),
            direct,
            noise,
            p_u: scenario.tx_power_mw(),
            sigma2: scenario.noise_variance_mw(),
        }
    }

    pub fn labels(&self) -> Tensor {
        let mut t = Tensor::zeros(self.rows(), 3);
        for (r, p) in self.positions.iter().enumerate() {
            t.set(r, 0, p.x);
            t.set(r, 1, p.y);
            t.set(r, 2, p.z);
        }
        t
    }
}

/// Batch constants registered on one tape.
pub(crate) struct BatchLeaves {
    pub direct: Vec<Var>,
    pub labels: Var,
}

impl BatchLeaves {
    pub fn bind(tape: &mut Tape, batch: &EpisodeBatch) -> Self {
        let direct = batch.direct.iter().map(|d| tape.leaf(d.clone())).collect();
        let labels = tape.leaf(batch.labels());
        Self { direct, labels }
    }
}

/// Received pilots at `stage` per BS (`rows × 2`), differentiable in the
/// sensing vectors; noise enters as a constant.
pub(crate) fn pilots_on_tape(
    tape: &mut Tape,
    batch: &EpisodeBatch,
    leaves: &BatchLeaves,
    thetas: &[Var],
    ws: &[Var],
    stage: usize,
) -> Result<Vec<Var>> {
    let m = batch.dims.bs_antennas;
    let amp = batch.p_u.sqrt();
    let mut out = Vec::with_capacity(ws.len());
    for (j, &w) in ws.iter().enumerate() {
        let mut z = leaves.direct[j];
        if j == 0 {
            for (k, &theta) in thetas.iter().enumerate() {
                let refl = tape.row_linear(theta, batch.cascade[k].clone(), 2 * m)?;
                z = tape.add(z, refl)?;
            }
        }
        let y = tape.complex_dot(w, z)?;
        let y = tape.scale(y, amp);
        let n = tape.leaf(batch.noise[stage][j].clone());
        out.push(tape.add(y, n)?);
    }
    Ok(out)
}

/// Network input from per-BS pilots, concatenated across BSs.
pub(crate) fn features_on_tape(tape: &mut Tape, pilots: &[Var], mode: FeatureMode, scale: f64) -> Result<Var> {
    let mut parts = Vec::with_capacity(pilots.len());
    for &y in pilots {
        let ys = tape.scale(y, scale);
        parts.push(match mode {
            FeatureMode::Pilot => ys,
            FeatureMode::Rss => {
                let sq = tape.square(ys);
                tape.sum_cols(sq)
            }
        });
    }
    if parts.len() == 1 {
        Ok(parts[0])
    } else {
        tape.concat(&parts)
    }
}

/// Splits a `rows × 2n·k` raw output into per-vector blocks and projects
/// every entry to unit modulus.
pub(crate) fn unit_modulus_blocks(tape: &mut Tape, raw: Var, sizes: &[usize]) -> Result<Vec<Var>> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut off = 0;
    for &n in sizes {
        let part = if sizes.len() == 1 { raw } else { tape.slice(raw, off, 2 * n)? };
        out.push(tape.normalize_pairs(part, n)?);
        off += 2 * n;
    }
    Ok(out)
}

/// Broadcasts a `1 × c` row to `rows × c` (used for the trainable stage-0 config).
pub(crate) fn broadcast_rows(tape: &mut Tape, row: Var, rows: usize) -> Result<Var> {
    let cols = tape.value(row).cols;
    let zeros = tape.leaf(Tensor::zeros(rows, cols));
    tape.add_row(zeros, row)
}
