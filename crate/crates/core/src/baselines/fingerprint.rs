use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::channel::{noiseless_pilots, sample_channel, SensingConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::Position3D;
use crate::policy::{Reader, Writer};
use crate::rng::{episode_rng, Stream};
use crate::scenario::ScenarioConfig;

use super::FixedSensingSchedule;

const MAGIC: &[u8; 8] = b"RISLOCF1";
const VERSION: u32 = 1;

/// RSS fingerprints on the 1 m block lattice of the service area. Each
/// fingerprint holds `|y|²` per stage and per BS (stage-major).
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintDB {
    pub centers: Vec<Position3D>,
    pub fingerprints: Vec<Vec<f64>>,
    pub schedule: FixedSensingSchedule,
    pub draws: usize,
}

/// Noiseless RSS of one channel realization per sampled draw, averaged over
/// `draws` realizations; block `i` draws from its own stream.
pub fn build_fingerprint_db(
    scenario: &ScenarioConfig,
    schedule: &FixedSensingSchedule,
    draws: usize,
    seed: u64,
    execution: Execution,
) -> Result<FingerprintDB> {
    scenario.validate()?;
    if draws == 0 {
        return Err(Error::InvalidArgument("at least one draw per fingerprint".into()));
    }
    let (cols, rows) = scenario.ue_area.meter_blocks();
    let centers = scenario.ue_area.cell_centers(cols, rows);
    let p_u = scenario.tx_power_mw();
    let fps = execution.map(centers.len(), |i| -> Result<Vec<f64>> {
        let mut rng = episode_rng(seed, Stream::Fingerprint, i as u64);
        let mut acc = vec![0.0; schedule.stages() * scenario.num_bs()];
        for _ in 0..draws {
            let ch = sample_channel(scenario, centers[i], &mut rng)?;
            let mut k = 0;
            for cfg in &schedule.configs {
                for y in noiseless_pilots(cfg, &ch, p_u)? {
                    acc[k] += y.norm_sqr() / draws as f64;
                    k += 1;
                }
            }
        }
        Ok(acc)
    });
    Ok(FingerprintDB {
        centers,
        fingerprints: fps.into_iter().collect::<Result<_>>()?,
        schedule: schedule.clone(),
        draws,
    })
}

/// Inverse-distance-weighted mean of the `k` nearest block centers. An exact
/// fingerprint match returns its block center.
pub fn wknn_locate(db: &FingerprintDB, query: &[f64], k: usize) -> Result<Position3D> {
    if k == 0 || k > db.centers.len() {
        return Err(Error::InvalidArgument(format!("k = {k} with {} fingerprints", db.centers.len())));
    }
    let width = db.fingerprints.first().map_or(0, |f| f.len());
    if query.len() != width {
        return Err(Error::Dimension(format!("query length {} vs fingerprint length {width}", query.len())));
    }
    let mut d: Vec<(f64, usize)> = db
        .fingerprints
        .iter()
        .enumerate()
        .map(|(i, f)| (f.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
        .collect();
    d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let near = &mut d[..k];
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    if near[0].0 == 0.0 {
        return Ok(db.centers[near[0].1]);
    }
    let mut w_sum = 0.0;
    let mut p = Position3D::default();
    for &(dist, i) in near.iter() {
        let w = 1.0 / dist;
        p = p + db.centers[i] * w;
        w_sum += w;
    }
    Ok(p * (1.0 / w_sum))
}

impl FingerprintDB {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// RSS fingerprint of received pilots, same layout as the stored ones.
    pub fn query_vector(measurements: &[Vec<Complex64>]) -> Vec<f64> {
        measurements.iter().flatten().map(|y| y.norm_sqr()).collect()
    }

    /// Layout (little endian): magic `RISLOCF1`, `u32` version, `u32` draws,
    /// `u32` blocks, `u32` fingerprint length, `u32` stages, `u32` BS count,
    /// `u32` antennas, `u32` RIS count and one `u32` per RIS; then per stage
    /// the beamformers (per BS, `Re` then `Im`) and RIS vectors (per RIS,
    /// `Re` then `Im`) as `f64`; then per block `x, y, z` and the fingerprint.
    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = Writer(out);
        w.0.write_all(MAGIC)?;
        w.u32(VERSION as usize)?;
        w.u32(self.draws)?;
        w.u32(self.len())?;
        let width = self.fingerprints.first().map_or(0, |f| f.len());
        w.u32(width)?;
        w.u32(self.schedule.stages())?;
        let first = self.schedule.configs.first();
        let nb = first.map_or(0, |c| c.w_per_bs.len());
        w.u32(nb)?;
        w.u32(first.and_then(|c| c.w_per_bs.first()).map_or(0, |v| v.len()))?;
        let ris: Vec<usize> = first.map_or(Vec::new(), |c| c.thetas.iter().map(|t| t.len()).collect());
        w.u32(ris.len())?;
        for &n in &ris {
            w.u32(n)?;
        }
        let write_vec = |w: &mut Writer<W>, v: &[Complex64]| -> Result<()> {
            w.f64s(&v.iter().map(|z| z.re).collect::<Vec<_>>())?;
            w.f64s(&v.iter().map(|z| z.im).collect::<Vec<_>>())
        };
        for c in &self.schedule.configs {
            for v in c.w_per_bs.iter().chain(&c.thetas) {
                write_vec(&mut w, v)?;
            }
        }
        for (p, f) in self.centers.iter().zip(&self.fingerprints) {
            w.f64s(&p.to_array())?;
            w.f64s(f)?;
        }
        w.0.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut r = Reader(input);
        r.magic(MAGIC)?;
        let v = r.u32()?;
        if v != VERSION as usize {
            return Err(Error::Format(format!("unsupported fingerprint database version {v}")));
        }
        let draws = r.u32()?;
        let blocks = r.u32()?;
        let width = r.u32()?;
        let stages = r.u32()?;
        let nb = r.u32()?;
        let m = r.u32()?;
        let k = r.u32()?;
        let ris = (0..k).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let read_vec = |r: &mut Reader<R>, n: usize| -> Result<Vec<Complex64>> {
            let re = r.f64s(n)?;
            let im = r.f64s(n)?;
            Ok(re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect())
        };
        let mut configs = Vec::with_capacity(stages);
        for _ in 0..stages {
            let w_per_bs = (0..nb).map(|_| read_vec(&mut r, m)).collect::<Result<_>>()?;
            let thetas = ris.iter().map(|&n| read_vec(&mut r, n)).collect::<Result<_>>()?;
            configs.push(SensingConfig { w_per_bs, thetas });
        }
        let mut centers = Vec::with_capacity(blocks);
        let mut fingerprints = Vec::with_capacity(blocks);
        for _ in 0..blocks {
            let p = r.f64s(3)?;
            centers.push(Position3D::new(p[0], p[1], p[2]));
            fingerprints.push(r.f64s(width)?);
        }
        Ok(Self { centers, fingerprints, schedule: FixedSensingSchedule { configs }, draws })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Squared errors of wKNN matching for the given test episodes; measured
/// RSS includes receiver noise.
pub fn fingerprint_squared_errors(
    db: &FingerprintDB,
    scenario: &ScenarioConfig,
    keys: &[crate::policy::EpisodeKey],
    k: usize,
    execution: Execution,
) -> Result<Vec<f64>> {
    let p_u = scenario.tx_power_mw();
    let sigma2 = scenario.noise_variance_mw();
    let stages = db.schedule.stages();
    let out = execution.map(keys.len(), |i| -> Result<f64> {
        let (p, ch) = keys[i].draw(scenario)?;
        let noise = keys[i].draw_noise(stages, scenario.num_bs(), sigma2);
        let mut ys = Vec::with_capacity(stages);
        for (cfg, nz) in db.schedule.configs.iter().zip(&noise) {
            let clean = noiseless_pilots(cfg, &ch, p_u)?;
            ys.push(clean.iter().zip(nz).map(|(a, b)| a + b).collect::<Vec<_>>());
        }
        let est = wknn_locate(db, &FingerprintDB::query_vector(&ys), k)?;
        let d = est - p;
        Ok(d.x * d.x + d.y * d.y + d.z * d.z)
    });
    out.into_iter().collect()
}
