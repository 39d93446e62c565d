//! Tape-based reverse-mode differentiation over batched 2-D tensors.
//!
//! Complex vectors are carried as rows `[Re(v)ᵀ, Im(v)ᵀ]`.

use std::sync::Arc;

use super::tensor::{gemm_acc, Tensor};
use crate::error::{Error, Result};

/// Pairs whose squared magnitude falls below this map to `1 + 0j` with zero
/// gradient.
pub const NORMALIZE_EPS: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MatMul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Square(Var),
    Sum(Var),
    SumCols(Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    NormalizePairs(Var, usize),
    /// Per-row constant matrices `out × in`, stored contiguously.
    RowLinear(Var, Arc<Vec<f64>>),
    ComplexDot(Var, Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one scalar w.r.t. every node reached by `backward`.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient, or zeros of the leaf's shape when the leaf is unreachable.
    pub fn get_or_zeros(&self, tape: &Tape, v: Var) -> Tensor {
        match self.get(v) {
            Some(g) => g.clone(),
            None => {
                let (r, c) = tape.value(v).shape();
                Tensor::zeros(r, c)
            }
        }
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

fn shape_err(op: &'static str, detail: String) -> Error {
    Error::Shape { op, detail }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(shape_err(op, format!("{sa:?} vs {sb:?}")));
        }
        Ok(())
    }

    fn zip(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, rec: Op) -> Result<Var> {
        self.same_shape(op, a, b)?;
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data.iter().zip(&vb.data).map(|(x, y)| f(*x, *y)).collect();
        let t = Tensor { rows: va.rows, cols: va.cols, data };
        Ok(self.push(t, rec))
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, rec: Op) -> Var {
        let va = self.value(a);
        let t = Tensor { rows: va.rows, cols: va.cols, data: va.data.iter().map(|x| f(*x)).collect() };
        self.push(t, rec)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// `a + 1ᵀ bias` for a `1 × cols` row.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(bias));
        if vb.rows != 1 || vb.cols != va.cols {
            return Err(shape_err("add_row", format!("{:?} + row {:?}", va.shape(), vb.shape())));
        }
        let mut t = va.clone();
        for r in 0..t.rows {
            for (x, b) in t.data[r * t.cols..(r + 1) * t.cols].iter_mut().zip(&vb.data) {
                *x += b;
            }
        }
        Ok(self.push(t, Op::AddRow(a, bias)))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols != vb.rows {
            return Err(shape_err("matmul", format!("{:?} x {:?}", va.shape(), vb.shape())));
        }
        let mut t = Tensor::zeros(va.rows, vb.cols);
        gemm_acc(va, false, vb, false, &mut t);
        Ok(self.push(t, Op::MatMul(a, b)))
    }

    /// `x W + b`.
    pub fn affine(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let y = self.matmul(x, w)?;
        match b {
            Some(b) => self.add_row(y, b),
            None => Ok(y),
        }
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.map(a, |x| c * x, Op::Scale(a, c))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, f64::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.map(a, |x| x * x, Op::Square(a))
    }

    /// Sum of all entries, `1 × 1`.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    /// Row sums, `rows × 1`.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let va = self.value(a);
        let data = (0..va.rows).map(|r| va.row_slice(r).iter().sum()).collect();
        let t = Tensor { rows: va.rows, cols: 1, data };
        self.push(t, Op::SumCols(a))
    }

    /// Column-wise concatenation.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| shape_err("concat", "no inputs".into()))?;
        let rows = self.value(*first).rows;
        let mut cols = 0;
        for p in parts {
            let v = self.value(*p);
            if v.rows != rows {
                return Err(shape_err("concat", format!("row counts {} vs {}", rows, v.rows)));
            }
            cols += v.cols;
        }
        let mut t = Tensor::zeros(rows, cols);
        for r in 0..rows {
            let mut off = 0;
            for p in parts {
                let v = self.value(*p);
                t.data[r * cols + off..r * cols + off + v.cols].copy_from_slice(v.row_slice(r));
                off += v.cols;
            }
        }
        Ok(self.push(t, Op::Concat(parts.to_vec())))
    }

    /// Columns `[start, start + len)`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let va = self.value(a);
        if start + len > va.cols {
            return Err(shape_err("slice", format!("[{start}, {}) of {} columns", start + len, va.cols)));
        }
        let mut t = Tensor::zeros(va.rows, len);
        for r in 0..va.rows {
            t.data[r * len..(r + 1) * len].copy_from_slice(&va.row_slice(r)[start..start + len]);
        }
        Ok(self.push(t, Op::Slice(a, start)))
    }

    /// Unit-modulus projection. Columns are consecutive blocks
    /// `[Re(v)ᵀ, Im(v)ᵀ]` of `2n` values; each pair `(Re v_i, Im v_i)` is
    /// divided by its modulus.
    pub fn normalize_pairs(&mut self, a: Var, n: usize) -> Result<Var> {
        let va = self.value(a);
        if n == 0 || va.cols % (2 * n) != 0 {
            return Err(shape_err("normalize_pairs", format!("{} columns into blocks of 2x{n}", va.cols)));
        }
        let mut t = va.clone();
        for r in 0..t.rows {
            for b in 0..t.cols / (2 * n) {
                let base = r * t.cols + b * 2 * n;
                for i in 0..n {
                    let (re, im) = (va.data[base + i], va.data[base + n + i]);
                    let s = re * re + im * im;
                    if s < NORMALIZE_EPS {
                        t.data[base + i] = 1.0;
                        t.data[base + n + i] = 0.0;
                    } else {
                        let inv = 1.0 / s.sqrt();
                        t.data[base + i] = re * inv;
                        t.data[base + n + i] = im * inv;
                    }
                }
            }
        }
        Ok(self.push(t, Op::NormalizePairs(a, n)))
    }

    /// `out_b = M_b a_b` with a constant `out × in` matrix per row `b`.
    pub fn row_linear(&mut self, a: Var, mats: Arc<Vec<f64>>, out: usize) -> Result<Var> {
        let va = self.value(a);
        let inp = va.cols;
        if mats.len() != va.rows * out * inp {
            return Err(shape_err(
                "row_linear",
                format!("{} matrix values for {} rows of {out}x{inp}", mats.len(), va.rows),
            ));
        }
        let mut t = Tensor::zeros(va.rows, out);
        for r in 0..va.rows {
            let x = va.row_slice(r);
            let m = &mats[r * out * inp..(r + 1) * out * inp];
            for o in 0..out {
                t.data[r * out + o] = m[o * inp..(o + 1) * inp].iter().zip(x).map(|(p, q)| p * q).sum();
            }
        }
        Ok(self.push(t, Op::RowLinear(a, mats)))
    }

    /// Row-wise unconjugated complex inner product `Σ_m w_m z_m`, giving
    /// `rows × 2` as `[Re, Im]`.
    pub fn complex_dot(&mut self, w: Var, z: Var) -> Result<Var> {
        self.same_shape("complex_dot", w, z)?;
        let (vw, vz) = (self.value(w), self.value(z));
        if vw.cols % 2 != 0 {
            return Err(shape_err("complex_dot", format!("odd column count {}", vw.cols)));
        }
        let n = vw.cols / 2;
        let mut t = Tensor::zeros(vw.rows, 2);
        for r in 0..vw.rows {
            let (a, b) = (vw.row_slice(r), vz.row_slice(r));
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..n {
                re += a[i] * b[i] - a[n + i] * b[n + i];
                im += a[i] * b[n + i] + a[n + i] * b[i];
            }
            t.data[2 * r] = re;
            t.data[2 * r + 1] = im;
        }
        Ok(self.push(t, Op::ComplexDot(w, z)))
    }

    /// Reverse sweep from a `1 × 1` output.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(shape_err("backward", format!("loss must be scalar, got {:?}", lv.shape())));
        }
        let mut grads: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        fn acc(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
            match &mut grads[v.0] {
                Some(x) => x.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        }
        let like = |t: &Tensor, data: Vec<f64>| Tensor { rows: t.rows, cols: t.cols, data };

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let out = &node.value;
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                    continue;
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::Sub(a, b) => {
                    let neg = like(&g, g.data.iter().map(|x| -x).collect());
                    acc(&mut grads, *a, g);
                    acc(&mut grads, *b, neg);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let ga = like(&g, g.data.iter().zip(&vb.data).map(|(x, y)| x * y).collect());
                    let gb = like(&g, g.data.iter().zip(&va.data).map(|(x, y)| x * y).collect());
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::AddRow(a, bias) => {
                    let mut gb = Tensor::zeros(1, g.cols);
                    for r in 0..g.rows {
                        for (s, x) in gb.data.iter_mut().zip(g.row_slice(r)) {
                            *s += x;
                        }
                    }
                    acc(&mut grads, *bias, gb);
                    acc(&mut grads, *a, g);
                }
                Op::MatMul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let mut ga = Tensor::zeros(va.rows, va.cols);
                    gemm_acc(&g, false, vb, true, &mut ga);
                    let mut gb = Tensor::zeros(vb.rows, vb.cols);
                    gemm_acc(va, true, &g, false, &mut gb);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Scale(a, c) => {
                    acc(&mut grads, *a, like(&g, g.data.iter().map(|x| c * x).collect()));
                }
                Op::Tanh(a) => {
                    let d = g.data.iter().zip(&out.data).map(|(x, y)| x * (1.0 - y * y)).collect();
                    acc(&mut grads, *a, like(&g, d));
                }
                Op::Sigmoid(a) => {
                    let d = g.data.iter().zip(&out.data).map(|(x, y)| x * y * (1.0 - y)).collect();
                    acc(&mut grads, *a, like(&g, d));
                }
                Op::Relu(a) => {
                    let va = self.value(*a);
                    let d = g.data.iter().zip(&va.data).map(|(x, y)| if *y > 0.0 { *x } else { 0.0 }).collect();
                    acc(&mut grads, *a, like(&g, d));
                }
                Op::Square(a) => {
                    let va = self.value(*a);
                    let d = g.data.iter().zip(&va.data).map(|(x, y)| 2.0 * x * y).collect();
                    acc(&mut grads, *a, like(&g, d));
                }
                Op::Sum(a) => {
                    let va = self.value(*a);
                    acc(&mut grads, *a, like(va, vec![g.item(); va.len()]));
                }
                Op::SumCols(a) => {
                    let va = self.value(*a);
                    let mut d = Vec::with_capacity(va.len());
                    for r in 0..va.rows {
                        d.extend(std::iter::repeat_n(g.data[r], va.cols));
                    }
                    acc(&mut grads, *a, like(va, d));
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let vp = self.value(*p);
                        let mut gp = Tensor::zeros(vp.rows, vp.cols);
                        for r in 0..vp.rows {
                            gp.data[r * vp.cols..(r + 1) * vp.cols]
                                .copy_from_slice(&g.row_slice(r)[off..off + vp.cols]);
                        }
                        off += vp.cols;
                        acc(&mut grads, *p, gp);
                    }
                }
                Op::Slice(a, start) => {
                    let va = self.value(*a);
                    let mut ga = Tensor::zeros(va.rows, va.cols);
                    for r in 0..va.rows {
                        ga.data[r * va.cols + start..r * va.cols + start + g.cols].copy_from_slice(g.row_slice(r));
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::NormalizePairs(a, n) => {
                    let va = self.value(*a);
                    let n = *n;
                    let mut ga = Tensor::zeros(va.rows, va.cols);
                    for r in 0..va.rows {
                        for b in 0..va.cols / (2 * n) {
                            let base = r * va.cols + b * 2 * n;
                            for i in 0..n {
                                let (x, y) = (va.data[base + i], va.data[base + n + i]);
                                let s = x * x + y * y;
                                if s < NORMALIZE_EPS {
                                    continue;
                                }
                                let inv = 1.0 / s.sqrt();
                                let inv3 = inv / s;
                                let (gx, gy) = (g.data[base + i], g.data[base + n + i]);
                                // J = I/r − v vᵀ/r³
                                ga.data[base + i] = gx * inv - x * (x * gx + y * gy) * inv3;
                                ga.data[base + n + i] = gy * inv - y * (x * gx + y * gy) * inv3;
                            }
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::RowLinear(a, mats) => {
                    let va = self.value(*a);
                    let (inp, outc) = (va.cols, g.cols);
                    let mut ga = Tensor::zeros(va.rows, inp);
                    for r in 0..va.rows {
                        let m = &mats[r * outc * inp..(r + 1) * outc * inp];
                        let gr = g.row_slice(r);
                        let dst = &mut ga.data[r * inp..(r + 1) * inp];
                        for (o, go) in gr.iter().enumerate() {
                            for (d, p) in dst.iter_mut().zip(&m[o * inp..(o + 1) * inp]) {
                                *d += go * p;
                            }
                        }
                    }
                    acc(&mut grads, *a, ga);
                }
                Op::ComplexDot(w, z) => {
                    let (vw, vz) = (self.value(*w), self.value(*z));
                    let n = vw.cols / 2;
                    let mut gw = Tensor::zeros(vw.rows, vw.cols);
                    let mut gz = Tensor::zeros(vz.rows, vz.cols);
                    for r in 0..vw.rows {
                        let (gre, gim) = (g.data[2 * r], g.data[2 * r + 1]);
                        let (a, b) = (vw.row_slice(r), vz.row_slice(r));
                        let o = r * vw.cols;
                        for i in 0..n {
                            let (ar, ai, br, bi) = (a[i], a[n + i], b[i], b[n + i]);
                            gw.data[o + i] = gre * br + gim * bi;
                            gw.data[o + n + i] = -gre * bi + gim * br;
                            gz.data[o + i] = gre * ar + gim * ai;
                            gz.data[o + n + i] = -gre * ai + gim * ar;
                        }
                    }
                    acc(&mut grads, *w, gw);
                    acc(&mut grads, *z, gz);
                }
            }
        }
        Ok(Gradients { grads })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
        Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap()
    }

    /// Max relative gap between backward and central differences of
    /// `Σ weights ∘ f(inputs)`.
    fn check(seed: u64, inputs: Vec<Tensor>, f: impl Fn(&mut Tape, &[Var]) -> Var) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let eval = |xs: &[Tensor], weights: Option<&Tensor>| -> (Tape, Var, Vec<Var>, Tensor) {
            let mut tape = Tape::new();
            let vars: Vec<Var> = xs.iter().map(|x| tape.leaf(x.clone())).collect();
            let out = f(&mut tape, &vars);
            let (r, c) = tape.value(out).shape();
            let w = weights.cloned().unwrap_or_else(|| Tensor::zeros(r, c));
            let wv = tape.leaf(w.clone());
            let prod = tape.mul(out, wv).unwrap();
            let l = tape.sum(prod);
            (tape, l, vars, w)
        };
        let (_, _, _, shape) = eval(&inputs, None);
        let weights = random(&mut rng, shape.rows, shape.cols);
        let (tape, l, vars, _) = eval(&inputs, Some(&weights));
        let g = tape.backward(l).unwrap();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for (i, x) in inputs.iter().enumerate() {
            let an = g.get_or_zeros(&tape, vars[i]);
            for k in 0..x.len() {
                let mut up = inputs.clone();
                up[i].data[k] += h;
                let mut down = inputs.clone();
                down[i].data[k] -= h;
                let (tu, lu, _, _) = eval(&up, Some(&weights));
                let (td, ld, _, _) = eval(&down, Some(&weights));
                let fd = (tu.value(lu).item() - td.value(ld).item()) / (2.0 * h);
                worst = worst.max((fd - an.data[k]).abs() / fd.abs().max(an.data[k].abs()).max(1e-3));
            }
        }
        worst
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn primitives_match_finite_differences(seed in 0u64..1_000_000, r in 1usize..4, c in 1usize..4, n in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tol = 1e-4;
            let a = random(&mut rng, r, c);
            let b = random(&mut rng, r, c);
            prop_assert!(check(seed, vec![a.clone(), b.clone()], |t, v| t.add(v[0], v[1]).unwrap()) < tol);
            prop_assert!(check(seed, vec![a.clone(), b.clone()], |t, v| t.sub(v[0], v[1]).unwrap()) < tol);
            prop_assert!(check(seed, vec![a.clone(), b.clone()], |t, v| t.mul(v[0], v[1]).unwrap()) < tol);
            prop_assert!(check(seed, vec![a.clone(), random(&mut rng, 1, c)], |t, v| t.add_row(v[0], v[1]).unwrap()) < tol);
            let w = random(&mut rng, c, n);
            prop_assert!(check(seed, vec![a.clone(), w.clone(), random(&mut rng, 1, n)], |t, v| t.affine(v[0], v[1], Some(v[2])).unwrap()) < tol);
            prop_assert!(check(seed, vec![a.clone()], |t, v| t.scale(v[0], -2.5)) < tol);
            prop_assert!(check(seed, vec![a.clone()], |t, v| t.tanh(v[0])) < tol);
            prop_assert!(check(seed, vec![a.clone()], |t, v| t.sigmoid(v[0])) < tol);
            prop_assert!(check(seed, vec![a.clone()], |t, v| t.relu(v[0])) < tol);
            prop_assert!(check(seed, vec![a.clone()], |t, v| t.square(v[0])) < tol);
            prop_assert!(check(seed, vec![a.clone()], |t, v| t.sum(v[0])) < tol);
            prop_assert!(check(seed, vec![a.clone()], |t, v| t.sum_cols(v[0])) < tol);
            prop_assert!(check(seed, vec![a.clone(), random(&mut rng, r, n)], |t, v| t.concat(&[v[0], v[1], v[0]]).unwrap()) < tol);
            let wide = random(&mut rng, r, c + n);
            prop_assert!(check(seed, vec![wide], |t, v| t.slice(v[0], n, c).unwrap()) < tol);
            let pairs = random(&mut rng, r, 4 * n);
            prop_assert!(check(seed, vec![pairs.clone()], |t, v| t.normalize_pairs(v[0], n).unwrap()) < tol);
            prop_assert!(check(seed, vec![pairs.clone(), random(&mut rng, r, 4 * n)], |t, v| t.complex_dot(v[0], v[1]).unwrap()) < tol);
            let mats: Arc<Vec<f64>> = Arc::new((0..r * n * c).map(|_| rng.random_range(-1.0..1.0)).collect());
            prop_assert!(check(seed, vec![a.clone()], |t, v| t.row_linear(v[0], mats.clone(), n).unwrap()) < tol);
        }
    }

    #[test]
    fn disjoint_subgraph_gets_no_gradient() {
        let mut t = Tape::new();
        let a = t.leaf(Tensor::row(vec![1.0, 2.0]));
        let b = t.leaf(Tensor::row(vec![3.0, -1.0]));
        let sb = t.square(b);
        let _unused = t.sum(sb);
        let sa = t.tanh(a);
        let l = t.sum(sa);
        let g = t.backward(l).unwrap();
        assert!(g.get(b).is_none());
        assert_eq!(g.get_or_zeros(&t, b).data, vec![0.0, 0.0]);
        assert!(g.get(a).unwrap().data.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn shape_errors_and_scalar_loss() {
        let mut t = Tape::new();
        let a = t.leaf(Tensor::zeros(2, 3));
        let b = t.leaf(Tensor::zeros(3, 2));
        assert!(t.add(a, b).is_err());
        assert!(t.matmul(a, a).is_err());
        assert!(t.normalize_pairs(a, 2).is_err());
        assert!(t.slice(a, 2, 2).is_err());
        assert!(t.backward(a).is_err());
        let z = t.leaf(Tensor::row(vec![0.0, 0.0]));
        let u = t.normalize_pairs(z, 1).unwrap();
        assert_eq!(t.value(u).data, vec![1.0, 0.0]);
    }
}
