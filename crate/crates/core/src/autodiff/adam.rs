use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment estimates, one buffer per parameter block.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor>) -> Self {
        let (m, v) = params.into_iter().map(|p| (vec![0.0; p.len()], vec![0.0; p.len()])).unzip();
        Self { m, v, t: 0 }
    }
}

/// One bias-corrected Adam update, `lr` overriding `cfg.lr`.
pub fn adam_step(params: &mut [&mut Tensor], grads: &[Tensor], state: &mut AdamState, cfg: &AdamConfig, lr: f64) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(state.v.iter_mut())) {
        for (((x, &gi), mi), vi) in p.data.iter_mut().zip(&g.data).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
            let mhat = *mi / bc1;
            let vhat = *vi / bc2;
            *x -= lr * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_from_fresh_state_is_noop() {
        let cfg = AdamConfig::default();
        let mut q = Tensor::row(vec![1.0, -2.0]);
        let mut st = AdamState::new([&q]);
        adam_step(&mut [&mut q], &[Tensor::zeros(1, 2)], &mut st, &cfg, cfg.lr);
        assert_eq!(q.data, vec![1.0, -2.0]);
    }

    #[test]
    fn zero_gradient_decays_moments() {
        let cfg = AdamConfig::default();
        let mut p = Tensor::row(vec![1.0, -2.0]);
        let mut st = AdamState::new([&p]);
        st.m[0] = vec![0.5, 0.5];
        st.v[0] = vec![0.25, 0.25];
        adam_step(&mut [&mut p], &[Tensor::zeros(1, 2)], &mut st, &cfg, cfg.lr);
        assert!((st.m[0][0] - 0.45).abs() < 1e-15);
        assert!((st.v[0][0] - 0.25 * 0.999).abs() < 1e-15);
    }

    #[test]
    fn quadratic_descends() {
        let cfg = AdamConfig { lr: 0.01, ..Default::default() };
        let mut x = Tensor::scalar(1.0);
        let mut st = AdamState::new([&x]);
        let g = Tensor::scalar(2.0 * x.item());
        adam_step(&mut [&mut x], &[g], &mut st, &cfg, cfg.lr);
        assert!(x.item() < 1.0);
    }
}
