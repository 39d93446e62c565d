//! LSTM state update, sensing heads and position head.

use num_complex::Complex64;

use crate::autodiff::{Tape, Tensor, Var};
use crate::channel::SensingConfig;
use crate::error::{Error, Result};
use crate::geometry::Position3D;

use super::batch::unit_modulus_blocks;
use super::params::{BoundLinear, BoundPolicy, IoScaling, PolicyParams, GATE_C, GATE_F, GATE_I, GATE_O};

/// LSTM hidden (`s`) and cell (`c`) vectors of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    pub s: Vec<f64>,
    pub c: Vec<f64>,
}

impl HiddenState {
    pub fn zeros(hidden: usize) -> Self {
        Self { s: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

pub(crate) fn lstm_step_on_tape(tape: &mut Tape, p: &BoundPolicy, pi: Var, s: Var, c: Var) -> Result<(Var, Var)> {
    let mut pre = [pi; 4];
    for g in 0..4 {
        let a = p.u[g].apply(tape, pi)?;
        let b = p.r[g].apply(tape, s)?;
        pre[g] = tape.add(a, b)?;
    }
    let f = tape.sigmoid(pre[GATE_F]);
    let i = tape.sigmoid(pre[GATE_I]);
    let o = tape.sigmoid(pre[GATE_O]);
    let cand = tape.tanh(pre[GATE_C]);
    let keep = tape.mul(f, c)?;
    let write = tape.mul(i, cand)?;
    let c_new = tape.add(keep, write)?;
    let tc = tape.tanh(c_new);
    let s_new = tape.mul(o, tc)?;
    Ok((s_new, c_new))
}

/// `(RIS configs per RIS, beamformers per BS)`, each `rows × 2n`, unit modulus.
pub(crate) fn sensing_head_on_tape(
    tape: &mut Tape,
    p: &BoundPolicy,
    ris_sizes: &[usize],
    bs_sizes: &[usize],
    s: Var,
) -> Result<(Vec<Var>, Vec<Var>)> {
    let mut gamma = s;
    for l in &p.head {
        let a = l.apply(tape, gamma)?;
        gamma = tape.relu(a);
    }
    let thetas = match &p.theta_out {
        Some(l) => {
            let raw = l.apply(tape, gamma)?;
            unit_modulus_blocks(tape, raw, ris_sizes)?
        }
        None => Vec::new(),
    };
    let raw_w = p.w_out.apply(tape, gamma)?;
    let ws = unit_modulus_blocks(tape, raw_w, bs_sizes)?;
    Ok((thetas, ws))
}

/// Fully connected ReLU stack with a linear last layer followed by the fixed
/// output affine map to meters.
pub(crate) fn mlp_position_on_tape(tape: &mut Tape, layers: &[BoundLinear], io: &IoScaling, x: Var) -> Result<Var> {
    let mut h = x;
    for (i, l) in layers.iter().enumerate() {
        let a = l.apply(tape, h)?;
        h = if i + 1 < layers.len() { tape.relu(a) } else { a };
    }
    let rows = tape.value(h).rows;
    let mut scale = Tensor::zeros(rows, 3);
    for r in 0..rows {
        for k in 0..3 {
            scale.set(r, k, io.position_scale[k]);
        }
    }
    let scale = tape.leaf(scale);
    let scaled = tape.mul(h, scale)?;
    let offset = tape.leaf(Tensor::row(io.position_offset.to_vec()));
    tape.add_row(scaled, offset)
}

pub(crate) fn rows_to_complex(t: &Tensor, row: usize) -> Vec<Complex64> {
    let n = t.cols / 2;
    let r = t.row_slice(row);
    (0..n).map(|i| Complex64::new(r[i], r[n + i])).collect()
}

impl PolicyParams {
    pub(crate) fn ris_sizes(&self) -> Vec<usize> {
        self.dims.ris_elements.clone()
    }

    pub(crate) fn bs_sizes(&self) -> Vec<usize> {
        vec![self.dims.bs_antennas; self.dims.num_bs]
    }

    /// One LSTM update for a single episode.
    pub fn lstm_step(&self, pi: &[f64], state: &HiddenState) -> Result<HiddenState> {
        if pi.len() != self.input_width() {
            return Err(Error::Dimension(format!(
                "feature width {} but network expects {}",
                pi.len(),
                self.input_width()
            )));
        }
        let h = self.config.hidden;
        if state.s.len() != h || state.c.len() != h {
            return Err(Error::Dimension(format!("state width {} vs hidden {h}", state.s.len())));
        }
        let mut tape = Tape::new();
        let p = self.bind(&mut tape);
        let x = tape.leaf(Tensor::row(pi.to_vec()));
        let s = tape.leaf(Tensor::row(state.s.clone()));
        let c = tape.leaf(Tensor::row(state.c.clone()));
        let (s, c) = lstm_step_on_tape(&mut tape, &p, x, s, c)?;
        Ok(HiddenState { s: tape.value(s).data.clone(), c: tape.value(c).data.clone() })
    }

    /// Next-stage sensing configuration from a hidden vector.
    pub fn sensing_head(&self, s: &[f64]) -> Result<SensingConfig> {
        if s.len() != self.config.hidden {
            return Err(Error::Dimension(format!("hidden width {} vs {}", s.len(), self.config.hidden)));
        }
        let mut tape = Tape::new();
        let p = self.bind(&mut tape);
        let x = tape.leaf(Tensor::row(s.to_vec()));
        let (th, ws) = sensing_head_on_tape(&mut tape, &p, &self.ris_sizes(), &self.bs_sizes(), x)?;
        Ok(SensingConfig {
            w_per_bs: ws.iter().map(|v| rows_to_complex(tape.value(*v), 0)).collect(),
            thetas: th.iter().map(|v| rows_to_complex(tape.value(*v), 0)).collect(),
        })
    }

    /// Position estimate from a cell vector.
    pub fn position_head(&self, c: &[f64]) -> Result<Position3D> {
        if c.len() != self.config.hidden {
            return Err(Error::Dimension(format!("cell width {} vs {}", c.len(), self.config.hidden)));
        }
        let mut tape = Tape::new();
        let p = self.bind(&mut tape);
        let x = tape.leaf(Tensor::row(c.to_vec()));
        let out = mlp_position_on_tape(&mut tape, &p.pos_head, &self.io, x)?;
        let v = tape.value(out);
        Ok(Position3D::new(v.data[0], v.data[1], v.data[2]))
    }

    /// Stage-0 configuration (independent of any measurement).
    pub fn initial_config(&self) -> Result<SensingConfig> {
        let mut tape = Tape::new();
        let th = tape.leaf(self.init_theta.clone());
        let w = tape.leaf(self.init_w.clone());
        let th = unit_modulus_blocks(&mut tape, th, &self.ris_sizes())?;
        let ws = unit_modulus_blocks(&mut tape, w, &self.bs_sizes())?;
        Ok(SensingConfig {
            w_per_bs: ws.iter().map(|v| rows_to_complex(tape.value(*v), 0)).collect(),
            thetas: th.iter().map(|v| rows_to_complex(tape.value(*v), 0)).collect(),
        })
    }
}
