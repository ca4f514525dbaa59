use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::arch::{Architecture, LayerShape, CLASSES};
use crate::error::{Error, Result};

/// Floating-point element type of a network (`f32` for training, `f64` for
/// gradient checks).
pub trait Real:
    num_traits::Float + std::iter::Sum + std::ops::AddAssign + Send + Sync + std::fmt::Debug + 'static
{
    fn of(v: f64) -> Self;
    fn f64(self) -> f64;
}

impl Real for f32 {
    fn of(v: f64) -> Self {
        v as f32
    }
    fn f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn of(v: f64) -> Self {
        v
    }
    fn f64(self) -> f64 {
        self
    }
}

/// Weights and biases of one layer. Dense weights are stored `[input][output]`;
/// convolution weights `[(ky * k + kx) * in_c + ci][out_c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub architecture: Architecture,
    pub seed: u64,
    pub layers: Vec<LayerParams<T>>,
}

/// Per-layer gradients, shaped like [`NetworkParams::layers`].
pub type Gradients<T> = Vec<LayerParams<T>>;

/// He-style uniform init `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero biases.
pub fn init_network<T: Real>(arch: &Architecture, seed: u64) -> Result<NetworkParams<T>> {
    let shapes = arch.shapes()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = shapes
        .iter()
        .map(|s| {
            let bound = (6.0 / s.fan_in() as f64).sqrt();
            LayerParams {
                weights: (0..s.weight_len())
                    .map(|_| T::of((rng.gen::<f64>() * 2.0 - 1.0) * bound))
                    .collect(),
                bias: vec![T::zero(); s.bias_len()],
            }
        })
        .collect();
    Ok(NetworkParams {
        architecture: arch.clone(),
        seed,
        layers,
    })
}

impl<T: Real> NetworkParams<T> {
    /// Checks tensor sizes against the architecture and finiteness.
    pub fn validate(&self) -> Result<()> {
        let shapes = self.architecture.shapes()?;
        if shapes.len() != self.layers.len() {
            return Err(Error::Architecture(format!(
                "{} parameter layers for {} architecture layers",
                self.layers.len(),
                shapes.len()
            )));
        }
        for (n, (s, l)) in shapes.iter().zip(&self.layers).enumerate() {
            if s.weight_len() != l.weights.len() || s.bias_len() != l.bias.len() {
                return Err(Error::Architecture(format!("layer {n}: tensor sizes do not match")));
            }
        }
        if !self.is_finite() {
            return Err(Error::Numeric("parameters contain non-finite values".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Element-type conversion (e.g. `f32` training weights to `f64`).
    pub fn cast<U: Real>(&self) -> NetworkParams<U> {
        NetworkParams {
            architecture: self.architecture.clone(),
            seed: self.seed,
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: l.weights.iter().map(|v| U::of(v.f64())).collect(),
                    bias: l.bias.iter().map(|v| U::of(v.f64())).collect(),
                })
                .collect(),
        }
    }
}

pub(crate) fn zero_grads<T: Real>(params: &NetworkParams<T>) -> Gradients<T> {
    params
        .layers
        .iter()
        .map(|l| LayerParams {
            weights: vec![T::zero(); l.weights.len()],
            bias: vec![T::zero(); l.bias.len()],
        })
        .collect()
}

// Eight-lane dot product; the independent accumulators let the compiler vectorize.
#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += *x * *y;
    }
    s
}

#[inline]
fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Forward/backward evaluator holding reusable per-sample buffers.
pub(crate) struct Evaluator<'p, T> {
    params: &'p NetworkParams<T>,
    shapes: Vec<LayerShape>,
    /// acts[0] is the input; acts[n + 1] the output of layer n (post-activation).
    acts: Vec<Vec<T>>,
    cols: Vec<Vec<T>>,
    delta: Vec<T>,
    delta_prev: Vec<T>,
    dcol: Vec<T>,
}

impl<'p, T: Real> Evaluator<'p, T> {
    pub fn new(params: &'p NetworkParams<T>) -> Result<Self> {
        params.validate()?;
        let shapes = params.architecture.shapes()?;
        let mut acts = vec![vec![T::zero(); params.architecture.input_len()]];
        let mut cols = Vec::new();
        for s in &shapes {
            acts.push(vec![T::zero(); s.output_len()]);
            cols.push(match *s {
                LayerShape::Conv { in_c, out_h, out_w, k, .. } => vec![T::zero(); out_h * out_w * k * k * in_c],
                LayerShape::Dense { .. } => Vec::new(),
            });
        }
        Ok(Self {
            params,
            shapes,
            acts,
            cols,
            delta: Vec::new(),
            delta_prev: Vec::new(),
            dcol: Vec::new(),
        })
    }

    pub fn input_len(&self) -> usize {
        self.acts[0].len()
    }

    /// Runs one sample; returns the logits.
    pub fn forward(&mut self, x: &[T]) -> &[T] {
        self.acts[0].copy_from_slice(x);
        for (n, s) in self.shapes.iter().enumerate() {
            let lp = &self.params.layers[n];
            let (before, after) = self.acts.split_at_mut(n + 1);
            let input = &before[n];
            let out = &mut after[0];
            match *s {
                LayerShape::Dense { outputs, .. } => {
                    out.copy_from_slice(&lp.bias);
                    for (i, &xi) in input.iter().enumerate() {
                        if xi != T::zero() {
                            axpy(xi, &lp.weights[i * outputs..(i + 1) * outputs], out);
                        }
                    }
                }
                LayerShape::Conv {
                    in_c,
                    in_h,
                    in_w,
                    out_c,
                    out_h,
                    out_w,
                    k,
                    stride,
                    pad,
                    ..
                } => {
                    let col = &mut self.cols[n];
                    let q_len = k * k * in_c;
                    for oy in 0..out_h {
                        for ox in 0..out_w {
                            let row = &mut col[(oy * out_w + ox) * q_len..(oy * out_w + ox + 1) * q_len];
                            for ky in 0..k {
                                let iy = (oy * stride + ky) as isize - pad as isize;
                                for kx in 0..k {
                                    let ix = (ox * stride + kx) as isize - pad as isize;
                                    let dst = &mut row[(ky * k + kx) * in_c..(ky * k + kx + 1) * in_c];
                                    if iy < 0 || ix < 0 || iy >= in_h as isize || ix >= in_w as isize {
                                        dst.iter_mut().for_each(|v| *v = T::zero());
                                    } else {
                                        let src = (iy as usize * in_w + ix as usize) * in_c;
                                        dst.copy_from_slice(&input[src..src + in_c]);
                                    }
                                }
                            }
                        }
                    }
                    for p in 0..out_h * out_w {
                        let o = &mut out[p * out_c..(p + 1) * out_c];
                        o.copy_from_slice(&lp.bias);
                        for (q, &v) in col[p * q_len..(p + 1) * q_len].iter().enumerate() {
                            if v != T::zero() {
                                axpy(v, &lp.weights[q * out_c..(q + 1) * out_c], o);
                            }
                        }
                    }
                }
            }
            if s.relu() {
                out.iter_mut().for_each(|v| {
                    if *v < T::zero() {
                        *v = T::zero()
                    }
                });
            }
        }
        self.acts.last().unwrap()
    }

    /// Backpropagates `dlogits` through the activations of the last
    /// [`forward`](Self::forward) call, accumulating into `grads`.
    pub fn backward(&mut self, dlogits: &[T], grads: &mut Gradients<T>) {
        self.delta.clear();
        self.delta.extend_from_slice(dlogits);
        for n in (0..self.shapes.len()).rev() {
            let s = self.shapes[n];
            let lp = &self.params.layers[n];
            let g = &mut grads[n];
            if s.relu() {
                for (d, a) in self.delta.iter_mut().zip(&self.acts[n + 1]) {
                    if *a <= T::zero() {
                        *d = T::zero();
                    }
                }
            }
            let need_input_grad = n > 0;
            let input = &self.acts[n];
            match s {
                LayerShape::Dense { outputs, .. } => {
                    axpy(T::one(), &self.delta, &mut g.bias);
                    self.delta_prev.clear();
                    self.delta_prev.resize(input.len(), T::zero());
                    for (i, &xi) in input.iter().enumerate() {
                        let w = &lp.weights[i * outputs..(i + 1) * outputs];
                        if xi != T::zero() {
                            axpy(xi, &self.delta, &mut g.weights[i * outputs..(i + 1) * outputs]);
                        }
                        if need_input_grad {
                            self.delta_prev[i] = dot(w, &self.delta);
                        }
                    }
                }
                LayerShape::Conv {
                    in_c,
                    in_h,
                    in_w,
                    out_c,
                    out_h,
                    out_w,
                    k,
                    stride,
                    pad,
                    ..
                } => {
                    let col = &self.cols[n];
                    let q_len = k * k * in_c;
                    for p in 0..out_h * out_w {
                        let d = &self.delta[p * out_c..(p + 1) * out_c];
                        axpy(T::one(), d, &mut g.bias);
                        for (q, &v) in col[p * q_len..(p + 1) * q_len].iter().enumerate() {
                            if v != T::zero() {
                                axpy(v, d, &mut g.weights[q * out_c..(q + 1) * out_c]);
                            }
                        }
                    }
                    self.delta_prev.clear();
                    self.delta_prev.resize(input.len(), T::zero());
                    if need_input_grad {
                        self.dcol.clear();
                        self.dcol.resize(q_len, T::zero());
                        for oy in 0..out_h {
                            for ox in 0..out_w {
                                let p = oy * out_w + ox;
                                let d = &self.delta[p * out_c..(p + 1) * out_c];
                                for q in 0..q_len {
                                    self.dcol[q] = dot(&lp.weights[q * out_c..(q + 1) * out_c], d);
                                }
                                for ky in 0..k {
                                    let iy = (oy * stride + ky) as isize - pad as isize;
                                    if iy < 0 || iy >= in_h as isize {
                                        continue;
                                    }
                                    for kx in 0..k {
                                        let ix = (ox * stride + kx) as isize - pad as isize;
                                        if ix < 0 || ix >= in_w as isize {
                                            continue;
                                        }
                                        let dst = (iy as usize * in_w + ix as usize) * in_c;
                                        let src = (ky * k + kx) * in_c;
                                        for c in 0..in_c {
                                            self.delta_prev[dst + c] += self.dcol[src + c];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            std::mem::swap(&mut self.delta, &mut self.delta_prev);
        }
    }
}

/// Numerically stable softmax of one logit row.
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn check_batch(input_len: usize, inputs_len: usize, n: usize) -> Result<()> {
    if inputs_len != n * input_len {
        return Err(Error::Shape(format!(
            "batch has {inputs_len} values, expected {n} samples of {input_len}"
        )));
    }
    Ok(())
}

/// Logits for a batch of `inputs.len() / input_len` samples, row-major `n × 10`.
pub fn forward<T: Real>(params: &NetworkParams<T>, inputs: &[T]) -> Result<Vec<T>> {
    let mut ev = Evaluator::new(params)?;
    let len = ev.input_len();
    if inputs.len() % len != 0 {
        return Err(Error::Shape(format!(
            "batch of {} values is not a multiple of the input size {len}",
            inputs.len()
        )));
    }
    let n = inputs.len() / len;
    check_batch(len, inputs.len(), n)?;
    let mut out = Vec::with_capacity(n * CLASSES);
    for x in inputs.chunks_exact(len) {
        out.extend_from_slice(ev.forward(x));
    }
    Ok(out)
}

/// Accumulates summed (not averaged) cross-entropy and gradients for the
/// samples; returns the summed loss and correct-prediction count.
pub(crate) fn accumulate<T: Real>(
    ev: &mut Evaluator<'_, T>,
    inputs: &[T],
    labels: &[u8],
    scale: T,
    grads: &mut Gradients<T>,
) -> (f64, usize) {
    let len = ev.input_len();
    let mut loss = 0.0;
    let mut correct = 0;
    let mut dlogits = vec![T::zero(); CLASSES];
    for (x, &y) in inputs.chunks_exact(len).zip(labels) {
        let logits = ev.forward(x);
        if argmax(logits) == y as usize {
            correct += 1;
        }
        let p = softmax(logits);
        loss -= p[y as usize].f64().max(f64::MIN_POSITIVE).ln();
        for (c, d) in dlogits.iter_mut().enumerate() {
            let t = if c == y as usize { T::one() } else { T::zero() };
            *d = (p[c] - t) * scale;
        }
        ev.backward(&dlogits, grads);
    }
    (loss, correct)
}

/// Mean softmax cross-entropy over the batch and its gradient.
pub fn loss_and_grad<T: Real>(
    params: &NetworkParams<T>,
    inputs: &[T],
    labels: &[u8],
) -> Result<(f64, Gradients<T>)> {
    let mut ev = Evaluator::new(params)?;
    check_batch(ev.input_len(), inputs.len(), labels.len())?;
    if labels.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    if let Some(l) = labels.iter().find(|&&l| l as usize >= CLASSES) {
        return Err(Error::Argument(format!("label {l} outside 0..=9")));
    }
    let mut grads = zero_grads(params);
    let n = labels.len();
    let (loss, _) = accumulate(&mut ev, inputs, labels, T::of(1.0 / n as f64), &mut grads);
    Ok((loss / n as f64, grads))
}

/// Index of the largest logit (first one on ties).
pub fn argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::arch::{Activation, LayerSpec};

    fn tiny_cnn() -> Architecture {
        Architecture {
            input: [1, 6, 5],
            layers: vec![
                LayerSpec::Conv { out_channels: 3, kernel: 3, stride: 2, activation: Activation::Relu },
                LayerSpec::Conv { out_channels: 2, kernel: 3, stride: 1, activation: Activation::None },
                LayerSpec::Dense { width: 7, activation: Activation::Relu },
                LayerSpec::Dense { width: 10, activation: Activation::None },
            ],
        }
    }

    fn inputs(n: usize, len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * len).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let a = init_network::<f32>(&tiny_cnn(), 5).unwrap();
        let b = init_network::<f32>(&tiny_cnn(), 5).unwrap();
        let c = init_network::<f32>(&tiny_cnn(), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&v| v == 0.0)));
        let bound = (6.0f32 / 9.0).sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn zero_input_gives_uniform_softmax() {
        let p = init_network::<f64>(&tiny_cnn(), 1).unwrap();
        let logits = forward(&p, &vec![0.0; 30]).unwrap();
        assert!(logits.iter().all(|&v| v == 0.0));
        for q in softmax(&logits) {
            assert!((q - 0.1).abs() < 1e-15);
        }
        let (loss, _) = loss_and_grad(&p, &vec![0.0; 30], &[3]).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn batch_rows_are_independent() {
        let p = init_network::<f64>(&tiny_cnn(), 2).unwrap();
        let x = inputs(4, 30, 9);
        let all = forward(&p, &x).unwrap();
        let one = forward(&p, &x[60..90]).unwrap();
        assert_eq!(&all[20..30], &one[..]);
        let mut swapped = x[30..60].to_vec();
        swapped.extend_from_slice(&x[..30]);
        let s = forward(&p, &swapped).unwrap();
        assert_eq!(&s[..10], &all[10..20]);
        assert_eq!(&s[10..20], &all[..10]);
    }

    #[test]
    fn shape_errors() {
        let p = init_network::<f64>(&tiny_cnn(), 2).unwrap();
        assert!(matches!(forward(&p, &[0.0; 31]), Err(Error::Shape(_))));
        assert!(matches!(loss_and_grad(&p, &[0.0; 30], &[1, 2]), Err(Error::Shape(_))));
    }

    #[test]
    fn single_dense_gradient_closed_form() {
        let arch = Architecture {
            input: [1, 2, 3],
            layers: vec![LayerSpec::Dense { width: 10, activation: Activation::None }],
        };
        let p = init_network::<f64>(&arch, 4).unwrap();
        let x = inputs(1, 6, 3);
        let (_, g) = loss_and_grad(&p, &x, &[7]).unwrap();
        let mut q = softmax(&forward(&p, &x).unwrap());
        q[7] -= 1.0;
        for i in 0..6 {
            for j in 0..10 {
                assert!((g[0].weights[i * 10 + j] - q[j] * x[i]).abs() < 1e-10);
            }
        }
        for j in 0..10 {
            assert!((g[0].bias[j] - q[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let z = [0.3f64, -1.0, 2.0, 0.0, 0.1, 5.0, -3.0, 1.0, 1.5, 0.2];
        let shifted: Vec<f64> = z.iter().map(|v| v + 100.0).collect();
        assert_eq!(argmax(&z), argmax(&shifted));
        let (a, b) = (softmax(&z), softmax(&shifted));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
