//! Grid-posterior localization that picks each RIS configuration by
//! minimizing the Bayesian Cramér-Rao bound (single-RIS, single-antenna BS).
//!
//! The likelihood mean at a candidate position `p` is
//! `√P_u (h_d(p) + h_c(p)ᵀ θ)` from the LoS channel; the Fisher information
//! covers the two horizontal coordinates (the UE height is known).

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{los_channel, ChannelRealization, Measurement, SensingConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::Position3D;
use crate::policy::{StageRecord, Trajectory};
use crate::rng::{complex_normal, unit_phase};
use crate::scenario::ScenarioConfig;

/// Finite-difference step for position derivatives, meters.
pub const DERIVATIVE_STEP: f64 = 1e-3;
/// Added to `J` before inversion.
pub const FISHER_REGULARIZATION: f64 = 1e-9;
/// Cells lighter than this (relative to the heaviest) are skipped in Fisher
/// expectations.
pub const NEGLIGIBLE_WEIGHT: f64 = 1e-14;

const CHUNK: usize = 256;

pub type Mat2 = [[f64; 2]; 2];

fn ensure_siso(scenario: &ScenarioConfig) -> Result<()> {
    if scenario.num_bs() != 1 || scenario.bs_antennas != 1 || scenario.ris.len() != 1 {
        return Err(Error::InvalidScenario("the BCRLB method needs one single-antenna BS and one RIS".into()));
    }
    Ok(())
}

fn los_cascade(scenario: &ScenarioConfig, p: Position3D) -> Result<(Complex64, Vec<Complex64>)> {
    let ch = los_channel(scenario, p)?;
    let hc = &ch.h_c[0];
    Ok((ch.h_d_per_bs[0][0], (0..hc.rows).map(|n| hc.get(n, 0)).collect()))
}

fn central_difference<F>(f: F, p: Position3D, step: f64) -> Result<[Vec<Complex64>; 2]>
where
    F: Fn(Position3D) -> Result<Vec<Complex64>>,
{
    let diff = |d: Position3D| -> Result<Vec<Complex64>> {
        let a = f(p + d)?;
        let b = f(p - d)?;
        Ok(a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * step)).collect())
    };
    Ok([diff(Position3D::new(step, 0.0, 0.0))?, diff(Position3D::new(0.0, step, 0.0))?])
}

/// `[∂h_c/∂x, ∂h_c/∂y]` by central differences with the given step.
pub fn cascade_derivative_with_step(p: Position3D, scenario: &ScenarioConfig, step: f64) -> Result<[Vec<Complex64>; 2]> {
    ensure_siso(scenario)?;
    central_difference(|q| Ok(los_cascade(scenario, q)?.1), p, step)
}

pub fn cascade_derivative(p: Position3D, scenario: &ScenarioConfig) -> Result<[Vec<Complex64>; 2]> {
    cascade_derivative_with_step(p, scenario, DERIVATIVE_STEP)
}

/// Per-cell likelihood means and cascade derivatives.
#[derive(Debug, Clone)]
pub struct CellModel {
    pub cells: Vec<Position3D>,
    pub cols: usize,
    pub rows: usize,
    pub elements: usize,
    pub direct: Vec<Complex64>,
    /// `cells × N`, row-major.
    pub cascade: Vec<Complex64>,
    pub d_x: Vec<Complex64>,
    pub d_y: Vec<Complex64>,
    pub p_u: f64,
    pub sigma2: f64,
}

impl CellModel {
    /// Model on the `cols × rows` cell centers of the service area.
    pub fn new(scenario: &ScenarioConfig, cols: usize, rows: usize, execution: Execution) -> Result<Self> {
        ensure_siso(scenario)?;
        let cells = scenario.ue_area.cell_centers(cols, rows);
        let n = scenario.ris[0].elements;
        let per_cell = execution.map(cells.len(), |i| -> Result<_> {
            let (d, h) = los_cascade(scenario, cells[i])?;
            let [dx, dy] = cascade_derivative(cells[i], scenario)?;
            Ok((d, h, dx, dy))
        });
        let mut m = Self {
            cols,
            rows,
            elements: n,
            direct: Vec::with_capacity(cells.len()),
            cascade: Vec::with_capacity(cells.len() * n),
            d_x: Vec::with_capacity(cells.len() * n),
            d_y: Vec::with_capacity(cells.len() * n),
            cells,
            p_u: scenario.tx_power_mw(),
            sigma2: scenario.noise_variance_mw(),
        };
        for r in per_cell {
            let (d, h, dx, dy) = r?;
            m.direct.push(d);
            m.cascade.extend(h);
            m.d_x.extend(dx);
            m.d_y.extend(dy);
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Noiseless pilot at cell `i`.
    pub fn mean(&self, i: usize, theta: &[Complex64]) -> Complex64 {
        let h = &self.cascade[i * self.elements..(i + 1) * self.elements];
        let s: Complex64 = h.iter().zip(theta).map(|(a, b)| a * b).sum();
        self.p_u.sqrt() * (self.direct[i] + s)
    }

    fn check_theta(&self, theta: &[Complex64]) -> Result<()> {
        if theta.len() != self.elements {
            return Err(Error::Dimension(format!("θ has {} entries, RIS has {}", theta.len(), self.elements)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    pub cells: Vec<Position3D>,
    pub log_weights: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl PosteriorGrid {
    pub fn uniform(model: &CellModel) -> Self {
        let w = -(model.len() as f64).ln();
        Self { cells: model.cells.clone(), log_weights: vec![w; model.len()], rows: model.rows, cols: model.cols }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.log_weights.iter().map(|l| l.exp()).sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let m = self.total_mass();
        if (m - 1.0).abs() > 1e-9 {
            return Err(Error::Unnormalized(m));
        }
        Ok(())
    }

    pub fn normalize(&mut self) {
        let max = self.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + self.log_weights.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        self.log_weights.iter_mut().for_each(|l| *l -= lse);
    }

    /// Writes the weights as a `rows × cols` matrix (y rows, x columns).
    pub fn write_matrix(&self, path: &Path, header: &str) -> Result<()> {
        crate::experiments::write_matrix(path, header, self.rows, self.cols, &self.weights())
    }
}

/// Adds the log-likelihood of `y` at every cell, then renormalizes.
pub fn posterior_update(
    grid: &mut PosteriorGrid,
    y: Complex64,
    theta: &[Complex64],
    model: &CellModel,
    execution: Execution,
) -> Result<()> {
    model.check_theta(theta)?;
    if grid.cells.len() != model.len() {
        return Err(Error::Dimension("grid and model cell counts differ".into()));
    }
    let ll = execution.map_chunks(model.len(), CHUNK, |s, e| {
        (s..e).map(|i| -(y - model.mean(i, theta)).norm_sqr() / model.sigma2).collect::<Vec<_>>()
    });
    for (l, d) in grid.log_weights.iter_mut().zip(ll.into_iter().flatten()) {
        *l += d;
    }
    grid.normalize();
    Ok(())
}

/// Center of the heaviest cell, lowest index on ties.
pub fn map_estimate(grid: &PosteriorGrid) -> Position3D {
    let mut best = 0;
    for (i, &l) in grid.log_weights.iter().enumerate() {
        if l > grid.log_weights[best] {
            best = i;
        }
    }
    grid.cells[best]
}

/// Posterior-weighted outer-product sums `Q_ij = c Σ w conj(h'_j) h'_iᵀ`,
/// so that `[J_D]_ij = Re(θᴴ Q_ij θ)`. Stored: xx, xy, yy (`Q_yx = Q_xyᴴ`).
#[derive(Debug, Clone)]
pub struct FisherQ {
    pub n: usize,
    pub q: [Vec<Complex64>; 3],
}

impl FisherQ {
    pub fn accumulate(grid: &PosteriorGrid, model: &CellModel, execution: Execution) -> Result<Self> {
        grid.check_normalized()?;
        let n = model.elements;
        let c = 2.0 * model.p_u / model.sigma2;
        let w = grid.weights();
        let wmax = w.iter().cloned().fold(0.0, f64::max);
        let parts = execution.map_chunks(model.len(), CHUNK, |s, e| {
            let mut q = [vec![Complex64::new(0.0, 0.0); n * n], vec![Complex64::new(0.0, 0.0); n * n], vec![Complex64::new(0.0, 0.0); n * n]];
            for i in s..e {
                if w[i] <= NEGLIGIBLE_WEIGHT * wmax {
                    continue;
                }
                let k = c * w[i];
                let hx = &model.d_x[i * n..(i + 1) * n];
                let hy = &model.d_y[i * n..(i + 1) * n];
                for (pair, (a, b)) in [(hx, hx), (hx, hy), (hy, hy)].iter().enumerate() {
                    let dst = &mut q[pair];
                    for m in 0..n {
                        let cb = b[m].conj() * k;
                        let row = &mut dst[m * n..(m + 1) * n];
                        for (r, av) in row.iter_mut().zip(a.iter()) {
                            *r += cb * av;
                        }
                    }
                }
            }
            q
        });
        let mut q = [vec![Complex64::new(0.0, 0.0); n * n], vec![Complex64::new(0.0, 0.0); n * n], vec![Complex64::new(0.0, 0.0); n * n]];
        for p in parts {
            for (d, s) in q.iter_mut().zip(p) {
                d.iter_mut().zip(s).for_each(|(a, b)| *a += b);
            }
        }
        Ok(Self { n, q })
    }

    fn form(&self, k: usize, theta: &[Complex64]) -> Complex64 {
        let n = self.n;
        let mut s = Complex64::new(0.0, 0.0);
        for m in 0..n {
            let row = &self.q[k][m * n..(m + 1) * n];
            let r: Complex64 = row.iter().zip(theta).map(|(a, b)| a * b).sum();
            s += theta[m].conj() * r;
        }
        s
    }

    pub fn j_d(&self, theta: &[Complex64]) -> Mat2 {
        let xx = self.form(0, theta).re;
        let xy = self.form(1, theta).re;
        let yy = self.form(2, theta).re;
        [[xx, xy], [xy, yy]]
    }

    /// `(Q + Qᴴ) θ` for pair `k`; for `xy` the partner `Q_yx = Q_xyᴴ` gives
    /// the same sum.
    fn sym_apply(&self, k: usize, theta: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for m in 0..n {
            for l in 0..n {
                out[m] += self.q[k][m * n + l] * theta[l] + self.q[k][l * n + m].conj() * theta[l];
            }
        }
        out
    }
}

/// `[J_D]` for `theta` under `grid`.
pub fn fisher_data(theta: &[Complex64], grid: &PosteriorGrid, model: &CellModel, execution: Execution) -> Result<Mat2> {
    model.check_theta(theta)?;
    Ok(FisherQ::accumulate(grid, model, execution)?.j_d(theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FisherState {
    pub j_p: Mat2,
    pub j_d: Mat2,
}

fn add(a: Mat2, b: Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

impl FisherState {
    pub fn total(&self) -> Mat2 {
        add(self.j_p, self.j_d)
    }

    pub fn trace(&self) -> f64 {
        let j = self.total();
        j[0][0] + j[1][1]
    }
}

/// Folds the current data term into the prior term.
pub fn fisher_prior_update(state: FisherState) -> FisherState {
    FisherState { j_p: add(state.j_p, state.j_d), j_d: [[0.0; 2]; 2] }
}

fn inverse(j: Mat2) -> Option<Mat2> {
    let a = j[0][0] + FISHER_REGULARIZATION;
    let d = j[1][1] + FISHER_REGULARIZATION;
    let b = j[0][1];
    let det = a * d - b * b;
    if !(det.is_finite() && det > 0.0) {
        return None;
    }
    Some([[d / det, -b / det], [-b / det, a / det]])
}

/// `tr((J_P + J_D(θ))⁻¹)`, infinite when singular.
pub fn bcrlb_objective(j_p: Mat2, q: &FisherQ, theta: &[Complex64]) -> f64 {
    match inverse(add(j_p, q.j_d(theta))) {
        Some(i) => i[0][0] + i[1][1],
        None => f64::INFINITY,
    }
}

/// Gradient of the objective w.r.t. `(Re θ, Im θ)`, packed as complex
/// `∂/∂Re + j ∂/∂Im`.
pub fn bcrlb_gradient(j_p: Mat2, q: &FisherQ, theta: &[Complex64]) -> Option<Vec<Complex64>> {
    let inv = inverse(add(j_p, q.j_d(theta)))?;
    let mut b = [[0.0; 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            b[i][k] = (0..2).map(|l| inv[i][l] * inv[l][k]).sum();
        }
    }
    let sx = q.sym_apply(0, theta);
    let sxy = q.sym_apply(1, theta);
    let sy = q.sym_apply(2, theta);
    Some(
        (0..q.n)
            .map(|m| -(b[0][0] * sx[m] + 2.0 * b[0][1] * sxy[m] + b[1][1] * sy[m]))
            .collect(),
    )
}

fn project(v: &mut [Complex64]) {
    for z in v.iter_mut() {
        let n = z.norm();
        *z = if n > 0.0 { *z / n } else { Complex64::new(1.0, 0.0) };
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaOptimum {
    pub theta: Vec<Complex64>,
    pub objective: f64,
    /// Objective after every accepted iteration, starting with the initial one.
    pub history: Vec<f64>,
}

/// Projected gradient descent on `tr((J_P + J_D(θ))⁻¹)` with backtracking.
/// `step` is relative: the first trial moves the largest entry by `step`.
pub fn optimize_theta(j_p: Mat2, q: &FisherQ, init: &[Complex64], iterations: usize, step: f64) -> ThetaOptimum {
    let mut theta = init.to_vec();
    project(&mut theta);
    let mut f = bcrlb_objective(j_p, q, &theta);
    let mut history = vec![f];
    let mut scale = step;
    for _ in 0..iterations {
        let Some(g) = bcrlb_gradient(j_p, q, &theta) else { break };
        let gmax = g.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
        if gmax == 0.0 || !gmax.is_finite() {
            break;
        }
        let mut accepted = false;
        let mut s = (2.0 * scale).min(step);
        for _ in 0..30 {
            let mut cand: Vec<Complex64> = theta.iter().zip(&g).map(|(t, gi)| t - gi * (s / gmax)).collect();
            project(&mut cand);
            let fc = bcrlb_objective(j_p, q, &cand);
            if fc <= f {
                accepted = fc < f;
                theta = cand;
                f = fc;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
        scale = s;
        history.push(f);
    }
    ThetaOptimum { theta, objective: f, history }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcrlbSettings {
    pub grid_cols: usize,
    pub grid_rows: usize,
    pub iterations: usize,
    pub step: f64,
    pub execution: Execution,
}

impl Default for BcrlbSettings {
    fn default() -> Self {
        Self { grid_cols: 60, grid_rows: 140, iterations: 50, step: 0.5, execution: Execution::default() }
    }
}

#[derive(Debug, Clone)]
pub struct BcrlbRun {
    pub trajectory: Trajectory,
    /// `tr(J^(t))` per stage.
    pub fisher_traces: Vec<f64>,
    pub objectives: Vec<f64>,
    pub grids: Vec<PosteriorGrid>,
}

/// Greedy BCRLB-driven sensing for `stages` pilots followed by a MAP
/// estimate; `keep_grids` retains the posterior after every stage.
pub fn run_bcrlb_localization<R: Rng + ?Sized>(
    model: &CellModel,
    channel: &ChannelRealization,
    stages: usize,
    settings: &BcrlbSettings,
    keep_grids: bool,
    rng: &mut R,
) -> Result<BcrlbRun> {
    if stages == 0 {
        return Err(Error::InvalidArgument("at least one stage is required".into()));
    }
    if channel.h_c.len() != 1 || channel.h_d_per_bs.len() != 1 || channel.h_c[0].cols != 1 {
        return Err(Error::Dimension("channel is not single-RIS SISO".into()));
    }
    let exec = settings.execution;
    let n = model.elements;
    let mut grid = PosteriorGrid::uniform(model);
    let mut state = FisherState::default();
    let mut theta: Vec<Complex64> = (0..n).map(|_| unit_phase(rng)).collect();
    let mut q = FisherQ::accumulate(&grid, model, exec)?;
    let mut out = BcrlbRun { trajectory: Trajectory { stages: Vec::new(), final_estimate: Position3D::default() }, fisher_traces: Vec::new(), objectives: Vec::new(), grids: Vec::new() };
    for t in 0..stages {
        if t > 0 {
            let start: Vec<Complex64> = (0..n).map(|_| unit_phase(rng)).collect();
            let opt = optimize_theta(state.j_p, &q, &start, settings.iterations, settings.step);
            if opt.objective.is_finite() {
                theta = opt.theta;
            } else {
                log::warn!("singular Fisher matrix at stage {t}; using a random configuration");
                theta = start;
            }
        }
        state.j_d = q.j_d(&theta);
        out.fisher_traces.push(state.trace());
        out.objectives.push(bcrlb_objective(state.j_p, &q, &theta));
        let cfg = SensingConfig { w_per_bs: vec![vec![Complex64::new(1.0, 0.0)]], thetas: vec![theta.clone()] };
        let clean = crate::channel::noiseless_pilots(&cfg, channel, model.p_u)?[0];
        let y = clean + complex_normal(rng, model.sigma2);
        posterior_update(&mut grid, y, &theta, model, exec)?;
        state = fisher_prior_update(state);
        let est = map_estimate(&grid);
        out.trajectory.stages.push(StageRecord {
            feature: vec![y.re, y.im],
            config: cfg,
            measurements: vec![Measurement::new(y, t)],
            estimate: Some(est),
        });
        if keep_grids {
            out.grids.push(grid.clone());
        }
        if t + 1 < stages {
            q = FisherQ::accumulate(&grid, model, exec)?;
        }
    }
    out.trajectory.final_estimate = map_estimate(&grid);
    Ok(out)
}

/// Squared MAP errors over test episodes; each episode's random initial
/// configuration and noise come from its noise stream.
pub fn bcrlb_squared_errors(
    model: &CellModel,
    scenario: &ScenarioConfig,
    keys: &[crate::policy::EpisodeKey],
    stages: usize,
    settings: &BcrlbSettings,
) -> Result<Vec<f64>> {
    let inner = BcrlbSettings { execution: Execution::Sequential, ..*settings };
    let out = settings.execution.map(keys.len(), |i| -> Result<f64> {
        let (p, ch) = keys[i].draw(scenario)?;
        let run = run_bcrlb_localization(model, &ch, stages, &inner, false, &mut keys[i].noise_rng())?;
        let d = run.trajectory.final_estimate - p;
        Ok(d.x * d.x + d.y * d.y + d.z * d.z)
    });
    out.into_iter().collect()
}
