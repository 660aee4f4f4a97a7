//! Fully connected networks with tanh hidden layers and a linear output,
//! batched over rows, with hand-written reverse-mode gradients.

use rand::Rng;

/// `c = op(a) * op(b) + beta * c` on row-major buffers, where `op(a)` is
/// `m x k` and `op(b)` is `k x n`. `ta`/`tb` mean the buffer holds the
/// transpose.
#[allow(clippy::too_many_arguments)]
pub fn gemm(m: usize, k: usize, n: usize, a: &[f64], ta: bool, b: &[f64], tb: bool, c: &mut [f64], beta: f64) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserts above bound every index the strides can reach.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Activations of one batched forward pass; `acts[0]` is the input.
#[derive(Debug, Clone)]
pub struct Tape {
    pub n: usize,
    acts: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("tape has an input")
    }
}

impl Mlp {
    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0));
        let count = Self::count(sizes);
        let mut net = Self { sizes: sizes.to_vec(), params: vec![0.0; count] };
        for l in 0..sizes.len() - 1 {
            let (w, _, fan_in, fan_out) = net.layer(l);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut net.params[w..w + fan_in * fan_out] {
                *p = rng.random_range(-bound..bound);
            }
        }
        net
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Option<Self> {
        (sizes.len() >= 2 && Self::count(sizes) == params.len()).then(|| Self { sizes: sizes.to_vec(), params })
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// `(weight offset, bias offset, fan_in, fan_out)` of layer `l`; weights
    /// are stored `fan_in x fan_out`.
    fn layer(&self, l: usize) -> (usize, usize, usize, usize) {
        let off: usize = self.sizes[..=l].windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        (off, off + i * o, i, o)
    }

    pub fn forward(&self, x: &[f64], n: usize) -> Tape {
        assert_eq!(x.len(), n * self.input_dim());
        let layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        for l in 0..layers {
            let (w, b, i, o) = self.layer(l);
            let mut out = Vec::with_capacity(n * o);
            let bias = &self.params[b..b + o];
            for _ in 0..n {
                out.extend_from_slice(bias);
            }
            gemm(n, i, o, &acts[l], false, &self.params[w..w + i * o], false, &mut out, 1.0);
            if l + 1 < layers {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
        }
        Tape { n, acts }
    }

    pub fn predict(&self, x: &[f64], n: usize) -> Vec<f64> {
        self.forward(x, n).acts.pop().unwrap()
    }

    /// Accumulates `d(loss)/d(params)` into `grad` given `dy = d(loss)/d(output)`
    /// and returns `d(loss)/d(input)` when `want_dx`.
    pub fn backward(&self, tape: &Tape, dy: &[f64], grad: &mut [f64], want_dx: bool) -> Option<Vec<f64>> {
        let n = tape.n;
        assert_eq!(dy.len(), n * self.output_dim());
        assert_eq!(grad.len(), self.params.len());
        let layers = self.sizes.len() - 1;
        let mut delta = dy.to_vec();
        for l in (0..layers).rev() {
            let (w, b, i, o) = self.layer(l);
            if l + 1 < layers {
                for (d, a) in delta.iter_mut().zip(&tape.acts[l + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            gemm(i, n, o, &tape.acts[l], true, &delta, false, &mut grad[w..w + i * o], 1.0);
            for row in delta.chunks_exact(o) {
                for (g, d) in grad[b..b + o].iter_mut().zip(row) {
                    *g += d;
                }
            }
            if l > 0 || want_dx {
                let mut prev = vec![0.0; n * i];
                gemm(n, o, i, &delta, false, &self.params[w..w + i * o], true, &mut prev, 0.0);
                delta = prev;
            } else {
                return None;
            }
        }
        Some(delta)
    }
}

/// First-order adaptive-moment optimizer over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        self.t = self.t.saturating_add(1);
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// `target <- (1 - tau) * target + tau * online`.
pub fn polyak(target: &mut [f64], online: &[f64], tau: f64) {
    for (t, o) in target.iter_mut().zip(online) {
        *t = (1.0 - tau) * *t + tau * o;
    }
}
