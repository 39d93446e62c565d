use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::geometry::path_gain;
use crate::rng::{episode_rng, unit_phase, Stream};
use crate::scenario::ScenarioConfig;

/// LSTM input per BS: RSS `|y|²` (width 1) or `[Re y, Im y]` (width 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureMode {
    Rss,
    #[default]
    Pilot,
}

impl FeatureMode {
    pub fn width(self) -> usize {
        match self {
            FeatureMode::Rss => 1,
            FeatureMode::Pilot => 2,
        }
    }

    pub fn code(self) -> u32 {
        match self {
            FeatureMode::Rss => 0,
            FeatureMode::Pilot => 1,
        }
    }

    pub fn from_code(c: u32) -> Result<Self> {
        match c {
            0 => Ok(FeatureMode::Rss),
            1 => Ok(FeatureMode::Pilot),
            _ => Err(Error::Format(format!("unknown feature mode {c}"))),
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rss" => Ok(FeatureMode::Rss),
            "pilot" => Ok(FeatureMode::Pilot),
            _ => Err(Error::InvalidArgument(format!("feature mode `{s}` (expected rss|pilot)"))),
        }
    }
}

/// Fully connected layer `y = x W + b` with `W: in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Option<Tensor>,
}

impl Linear {
    /// Glorot-uniform weights, zero bias.
    pub fn init<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize, bias: bool) -> Self {
        let limit = (6.0 / (fan_in + fan_out).max(1) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("valid range");
        let data = (0..fan_in * fan_out).map(|_| dist.sample(rng)).collect();
        Self {
            weight: Tensor { rows: fan_in, cols: fan_out, data },
            bias: bias.then(|| Tensor::zeros(1, fan_out)),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.rows
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols
    }

    pub(crate) fn bind(&self, tape: &mut Tape, vars: &mut Vec<Var>) -> BoundLinear {
        let w = tape.leaf(self.weight.clone());
        vars.push(w);
        let b = self.bias.as_ref().map(|b| {
            let v = tape.leaf(b.clone());
            vars.push(v);
            v
        });
        BoundLinear { w, b }
    }

    fn blocks<'a>(&'a self, out: &mut Vec<&'a Tensor>) {
        out.push(&self.weight);
        if let Some(b) = &self.bias {
            out.push(b);
        }
    }

    fn blocks_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Tensor>) {
        out.push(&mut self.weight);
        if let Some(b) = &mut self.bias {
            out.push(b);
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BoundLinear {
    pub w: Var,
    pub b: Option<Var>,
}

impl BoundLinear {
    pub fn apply(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        tape.affine(x, self.w, self.b)
    }
}

/// Network sizes. The full-scale values are LSTM width 512, head width
/// 1024, `L = 4` and position head `[200, 200]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub hidden: usize,
    pub head_width: usize,
    pub head_layers: usize,
    pub pos_hidden: Vec<usize>,
    pub feature_mode: FeatureMode,
}

impl PolicyConfig {
    pub fn scaled(multiplier: f64, feature_mode: FeatureMode) -> Self {
        let s = |v: f64| ((v * multiplier).round() as usize).max(1);
        Self {
            hidden: s(512.0),
            head_width: s(1024.0),
            head_layers: 4,
            pos_hidden: vec![s(200.0), s(200.0)],
            feature_mode,
        }
    }

    pub fn full(feature_mode: FeatureMode) -> Self {
        Self::scaled(1.0, feature_mode)
    }

    /// Width multiplier 1/8.
    pub fn desk(feature_mode: FeatureMode) -> Self {
        Self::scaled(0.125, feature_mode)
    }
}

/// Dimensions fixed by the scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensingDims {
    pub num_bs: usize,
    pub bs_antennas: usize,
    pub ris_elements: Vec<usize>,
}

impl SensingDims {
    pub fn of(scenario: &ScenarioConfig) -> Self {
        Self {
            num_bs: scenario.num_bs(),
            bs_antennas: scenario.bs_antennas,
            ris_elements: scenario.ris.iter().map(|r| r.elements).collect(),
        }
    }

    /// 2Δ.
    pub fn theta_width(&self) -> usize {
        2 * self.ris_elements.iter().sum::<usize>()
    }

    /// 2M per BS, all BSs.
    pub fn w_width(&self) -> usize {
        2 * self.bs_antennas * self.num_bs
    }
}

/// Fixed input/output normalization stored with the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IoScaling {
    /// Multiplies received pilots before they enter the network.
    pub feature_scale: f64,
    /// `p̂ = offset + scale ∘ raw` per coordinate.
    pub position_offset: [f64; 3],
    pub position_scale: [f64; 3],
}

impl IoScaling {
    /// Pilot scale `1 / (√P_u · g)` with `g` the RMS amplitude of a random
    /// sensing configuration at the service-area center; position mapped
    /// from the area center and half extent, z pinned to the known plane.
    pub fn for_scenario(scenario: &ScenarioConfig) -> Result<Self> {
        let c = scenario.ue_area.center();
        let m = scenario.bs_antennas as f64;
        let bs = scenario.bs_positions[0];
        let mut power = 0.0;
        for b in &scenario.bs_positions {
            power += path_gain(c.distance(b), scenario.pathloss_direct)?.powi(2) * m;
        }
        for r in &scenario.ris {
            let g = path_gain(c.distance(&r.position), scenario.pathloss_reflect)?
                * path_gain(r.position.distance(&bs), scenario.pathloss_reflect)?;
            power += g * g * r.elements as f64 * m;
        }
        power /= scenario.num_bs() as f64;
        let h = scenario.ue_area.half_extent();
        Ok(Self {
            feature_scale: 1.0 / (scenario.tx_power_mw().sqrt() * power.sqrt()),
            position_offset: c.to_array(),
            position_scale: [h.x, h.y, 0.0],
        })
    }
}

/// Gate order inside `u` and `r`: cell candidate, forget, input, output.
pub const GATE_C: usize = 0;
pub const GATE_F: usize = 1;
pub const GATE_I: usize = 2;
pub const GATE_O: usize = 3;

/// Every trainable tensor of the active-sensing network.
///
/// Flat block order (checkpoint layout): `u_c, u_f, u_i, u_o` (weight, bias
/// each), `r_c, r_f, r_i, r_o` (weight), head layers `A_l, b_l`, RIS output
/// (weight, bias), beamformer output (weight, bias), position head layers
/// (weight, bias), initial RIS raw configuration, initial beamformer raw
/// configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub config: PolicyConfig,
    pub dims: SensingDims,
    pub io: IoScaling,
    pub u: [Linear; 4],
    pub r: [Linear; 4],
    pub head: Vec<Linear>,
    pub theta_out: Option<Linear>,
    pub w_out: Linear,
    pub pos_head: Vec<Linear>,
    /// `1 × 2Δ` raw pairs realizing the stage-0 RIS configuration.
    pub init_theta: Tensor,
    /// `1 × 2MJ` raw pairs realizing the stage-0 beamformers.
    pub init_w: Tensor,
}

impl PolicyParams {
    pub fn new(config: PolicyConfig, scenario: &ScenarioConfig, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let dims = SensingDims::of(scenario);
        let io = IoScaling::for_scenario(scenario)?;
        Ok(Self::with_dims(config, dims, io, seed))
    }

    pub fn with_dims(config: PolicyConfig, dims: SensingDims, io: IoScaling, seed: u64) -> Self {
        let mut rng = episode_rng(seed, Stream::Init, 0);
        let input = config.feature_mode.width() * dims.num_bs;
        let h = config.hidden;
        let u = std::array::from_fn(|g| {
            let mut l = Linear::init(&mut rng, input, h, true);
            if g == GATE_F {
                l.bias.as_mut().unwrap().data.fill(1.0);
            }
            l
        });
        let r = std::array::from_fn(|_| Linear::init(&mut rng, h, h, false));
        let mut head = Vec::with_capacity(config.head_layers);
        let mut width = h;
        for _ in 0..config.head_layers {
            head.push(Linear::init(&mut rng, width, config.head_width, true));
            width = config.head_width;
        }
        let theta_out = (dims.theta_width() > 0).then(|| Linear::init(&mut rng, width, dims.theta_width(), true));
        let w_out = Linear::init(&mut rng, width, dims.w_width(), true);
        let mut pos_head = Vec::new();
        let mut width = h;
        for &k in &config.pos_hidden {
            pos_head.push(Linear::init(&mut rng, width, k, true));
            width = k;
        }
        pos_head.push(Linear::init(&mut rng, width, 3, true));
        let init_theta = random_raw_config(&mut rng, &dims.ris_elements);
        let init_w = random_raw_config(&mut rng, &vec![dims.bs_antennas; dims.num_bs]);
        Self { config, dims, io, u, r, head, theta_out, w_out, pos_head, init_theta, init_w }
    }

    pub fn input_width(&self) -> usize {
        self.config.feature_mode.width() * self.dims.num_bs
    }

    pub fn blocks(&self) -> Vec<&Tensor> {
        let mut out = Vec::new();
        self.u.iter().for_each(|l| l.blocks(&mut out));
        self.r.iter().for_each(|l| l.blocks(&mut out));
        self.head.iter().for_each(|l| l.blocks(&mut out));
        if let Some(l) = &self.theta_out {
            l.blocks(&mut out);
        }
        self.w_out.blocks(&mut out);
        self.pos_head.iter().for_each(|l| l.blocks(&mut out));
        out.push(&self.init_theta);
        out.push(&self.init_w);
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        self.u.iter_mut().for_each(|l| l.blocks_mut(&mut out));
        self.r.iter_mut().for_each(|l| l.blocks_mut(&mut out));
        self.head.iter_mut().for_each(|l| l.blocks_mut(&mut out));
        if let Some(l) = &mut self.theta_out {
            l.blocks_mut(&mut out);
        }
        self.w_out.blocks_mut(&mut out);
        self.pos_head.iter_mut().for_each(|l| l.blocks_mut(&mut out));
        out.push(&mut self.init_theta);
        out.push(&mut self.init_w);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.blocks().iter().map(|t| t.len()).sum()
    }

    /// Registers every block as a tape leaf; `vars` follows `blocks()` order.
    pub(crate) fn bind(&self, tape: &mut Tape) -> BoundPolicy {
        let mut vars = Vec::new();
        let u = std::array::from_fn(|g| self.u[g].bind(tape, &mut vars));
        let r = std::array::from_fn(|g| self.r[g].bind(tape, &mut vars));
        let head = self.head.iter().map(|l| l.bind(tape, &mut vars)).collect();
        let theta_out = self.theta_out.as_ref().map(|l| l.bind(tape, &mut vars));
        let w_out = self.w_out.bind(tape, &mut vars);
        let pos_head = self.pos_head.iter().map(|l| l.bind(tape, &mut vars)).collect();
        let init_theta = tape.leaf(self.init_theta.clone());
        vars.push(init_theta);
        let init_w = tape.leaf(self.init_w.clone());
        vars.push(init_w);
        BoundPolicy { u, r, head, theta_out, w_out, pos_head, init_theta, init_w, vars }
    }
}

/// Raw `[Re, Im]` blocks of random unit-modulus vectors, one block per size.
pub fn random_raw_config<R: Rng + ?Sized>(rng: &mut R, sizes: &[usize]) -> Tensor {
    let mut data = Vec::with_capacity(2 * sizes.iter().sum::<usize>());
    for &n in sizes {
        let z: Vec<_> = (0..n).map(|_| unit_phase(rng)).collect();
        data.extend(z.iter().map(|c| c.re));
        data.extend(z.iter().map(|c| c.im));
    }
    Tensor::row(data)
}

pub(crate) struct BoundPolicy {
    pub u: [BoundLinear; 4],
    pub r: [BoundLinear; 4],
    pub head: Vec<BoundLinear>,
    pub theta_out: Option<BoundLinear>,
    pub w_out: BoundLinear,
    pub pos_head: Vec<BoundLinear>,
    pub init_theta: Var,
    pub init_w: Var,
    pub vars: Vec<Var>,
}
