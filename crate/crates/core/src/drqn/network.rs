//! LSTM followed by two ReLU layers and a linear head, batched over sequences.
//!
//! Gate blocks in the LSTM weight columns are ordered input, forget, cell
//! candidate, output. Sequences start from zero hidden and cell state.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetShape {
    pub features: usize,
    pub hidden: usize,
    pub dense: usize,
    pub actions: usize,
}

/// Network parameters. Weight matrices map row vectors: `y = x W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct DrqnParams {
    pub w_ih: Array2<f64>,
    pub w_hh: Array2<f64>,
    pub b_lstm: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
}

pub const TENSOR_NAMES: [&str; 9] = ["w_ih", "w_hh", "b_lstm", "w1", "b1", "w2", "b2", "w3", "b3"];

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
}

impl DrqnParams {
    pub fn zeros(shape: NetShape) -> Self {
        let NetShape { features, hidden, dense, actions } = shape;
        Self {
            w_ih: Array2::zeros((features, 4 * hidden)),
            w_hh: Array2::zeros((hidden, 4 * hidden)),
            b_lstm: Array1::zeros(4 * hidden),
            w1: Array2::zeros((hidden, dense)),
            b1: Array1::zeros(dense),
            w2: Array2::zeros((dense, dense)),
            b2: Array1::zeros(dense),
            w3: Array2::zeros((dense, actions)),
            b3: Array1::zeros(actions),
        }
    }

    /// Glorot-uniform weights, zero biases except a forget-gate bias of one.
    pub fn init<R: Rng + ?Sized>(shape: NetShape, rng: &mut R) -> Self {
        let NetShape { features, hidden, dense, actions } = shape;
        let mut b_lstm = Array1::zeros(4 * hidden);
        b_lstm.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        Self {
            w_ih: glorot(features, 4 * hidden, features, hidden, rng),
            w_hh: glorot(hidden, 4 * hidden, hidden, hidden, rng),
            b_lstm,
            w1: glorot(hidden, dense, hidden, dense, rng),
            b1: Array1::zeros(dense),
            w2: glorot(dense, dense, dense, dense, rng),
            b2: Array1::zeros(dense),
            w3: glorot(dense, actions, dense, actions, rng),
            b3: Array1::zeros(actions),
        }
    }

    pub fn shape(&self) -> NetShape {
        NetShape {
            features: self.w_ih.nrows(),
            hidden: self.w_hh.nrows(),
            dense: self.w1.ncols(),
            actions: self.w3.ncols(),
        }
    }

    /// Tensors in [`TENSOR_NAMES`] order, as flat slices.
    pub fn slices(&self) -> [&[f64]; 9] {
        fn f(a: Option<&[f64]>) -> &[f64] {
            a.expect("owned arrays are contiguous")
        }
        [
            f(self.w_ih.as_slice()),
            f(self.w_hh.as_slice()),
            f(self.b_lstm.as_slice()),
            f(self.w1.as_slice()),
            f(self.b1.as_slice()),
            f(self.w2.as_slice()),
            f(self.b2.as_slice()),
            f(self.w3.as_slice()),
            f(self.b3.as_slice()),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 9] {
        [
            self.w_ih.as_slice_mut().expect("contiguous"),
            self.w_hh.as_slice_mut().expect("contiguous"),
            self.b_lstm.as_slice_mut().expect("contiguous"),
            self.w1.as_slice_mut().expect("contiguous"),
            self.b1.as_slice_mut().expect("contiguous"),
            self.w2.as_slice_mut().expect("contiguous"),
            self.b2.as_slice_mut().expect("contiguous"),
            self.w3.as_slice_mut().expect("contiguous"),
            self.b3.as_slice_mut().expect("contiguous"),
        ]
    }

    /// Tensor shapes in [`TENSOR_NAMES`] order.
    pub fn tensor_shapes(&self) -> [Vec<usize>; 9] {
        [
            self.w_ih.shape().to_vec(),
            self.w_hh.shape().to_vec(),
            self.b_lstm.shape().to_vec(),
            self.w1.shape().to_vec(),
            self.b1.shape().to_vec(),
            self.w2.shape().to_vec(),
            self.b2.shape().to_vec(),
            self.w3.shape().to_vec(),
            self.b3.shape().to_vec(),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    fn check_input(&self, steps: &[Array2<f64>]) -> Result<usize> {
        let first = steps
            .first()
            .ok_or_else(|| Error::ShapeMismatch("empty input sequence".into()))?;
        let batch = first.nrows();
        for x in steps {
            if x.ncols() != self.w_ih.nrows() || x.nrows() != batch {
                return Err(Error::ShapeMismatch(format!(
                    "step input is {}x{}, expected {}x{}",
                    x.nrows(),
                    x.ncols(),
                    batch,
                    self.w_ih.nrows()
                )));
            }
        }
        Ok(batch)
    }

    /// Q-values for a batch: `steps[t]` holds row `b`'s features at time `t`.
    pub fn forward(&self, steps: &[Array2<f64>]) -> Result<Array2<f64>> {
        Ok(self.forward_cached(steps)?.q)
    }

    pub fn forward_cached(&self, steps: &[Array2<f64>]) -> Result<ForwardCache> {
        let batch = self.check_input(steps)?;
        let hidden = self.w_hh.nrows();
        let mut h = Array2::<f64>::zeros((batch, hidden));
        let mut c = Array2::<f64>::zeros((batch, hidden));
        let mut cache_steps = Vec::with_capacity(steps.len());
        for x in steps {
            let mut z = x.dot(&self.w_ih) + h.dot(&self.w_hh);
            z += &self.b_lstm;
            let mut gates = z;
            gates.slice_mut(s![.., 0..2 * hidden]).mapv_inplace(sigmoid);
            gates.slice_mut(s![.., 2 * hidden..3 * hidden]).mapv_inplace(f64::tanh);
            gates.slice_mut(s![.., 3 * hidden..]).mapv_inplace(sigmoid);
            let i = gates.slice(s![.., 0..hidden]);
            let f = gates.slice(s![.., hidden..2 * hidden]);
            let g = gates.slice(s![.., 2 * hidden..3 * hidden]);
            let o = gates.slice(s![.., 3 * hidden..]);
            let c_next = &f * &c + &i * &g;
            let tanh_c = c_next.mapv(f64::tanh);
            let h_next = &o * &tanh_c;
            cache_steps.push(StepCache {
                h_prev: std::mem::replace(&mut h, h_next),
                c_prev: std::mem::replace(&mut c, c_next),
                gates,
                tanh_c,
            });
        }
        let a1 = h.dot(&self.w1) + &self.b1;
        let r1 = a1.mapv(|v| v.max(0.0));
        let a2 = r1.dot(&self.w2) + &self.b2;
        let r2 = a2.mapv(|v| v.max(0.0));
        let q = r2.dot(&self.w3) + &self.b3;
        Ok(ForwardCache {
            inputs: steps.to_vec(),
            steps: cache_steps,
            h_last: h,
            a1,
            r1,
            a2,
            r2,
            q,
        })
    }

    /// Gradient of `sum(dq * q)` with respect to every parameter.
    pub fn backward(&self, cache: &ForwardCache, dq: ArrayView2<f64>) -> DrqnParams {
        let hidden = self.w_hh.nrows();
        let mut grad = DrqnParams::zeros(self.shape());
        grad.w3 = cache.r2.t().dot(&dq);
        grad.b3 = dq.sum_axis(Axis(0));
        let mut da2 = dq.dot(&self.w3.t());
        da2.zip_mut_with(&cache.a2, |d, &a| {
            if a <= 0.0 {
                *d = 0.0
            }
        });
        grad.w2 = cache.r1.t().dot(&da2);
        grad.b2 = da2.sum_axis(Axis(0));
        let mut da1 = da2.dot(&self.w2.t());
        da1.zip_mut_with(&cache.a1, |d, &a| {
            if a <= 0.0 {
                *d = 0.0
            }
        });
        grad.w1 = cache.h_last.t().dot(&da1);
        grad.b1 = da1.sum_axis(Axis(0));

        let mut dh = da1.dot(&self.w1.t());
        let mut dc = Array2::<f64>::zeros(dh.raw_dim());
        let batch = dh.nrows();
        let mut dz = Array2::<f64>::zeros((batch, 4 * hidden));
        for (t, step) in cache.steps.iter().enumerate().rev() {
            let gates = &step.gates;
            for b in 0..batch {
                for j in 0..hidden {
                    let i = gates[[b, j]];
                    let f = gates[[b, hidden + j]];
                    let g = gates[[b, 2 * hidden + j]];
                    let o = gates[[b, 3 * hidden + j]];
                    let tc = step.tanh_c[[b, j]];
                    let dh_bj = dh[[b, j]];
                    let dc_bj = dc[[b, j]] + dh_bj * o * (1.0 - tc * tc);
                    dz[[b, j]] = dc_bj * g * i * (1.0 - i);
                    dz[[b, hidden + j]] = dc_bj * step.c_prev[[b, j]] * f * (1.0 - f);
                    dz[[b, 2 * hidden + j]] = dc_bj * i * (1.0 - g * g);
                    dz[[b, 3 * hidden + j]] = dh_bj * tc * o * (1.0 - o);
                    dc[[b, j]] = dc_bj * f;
                }
            }
            grad.w_ih += &cache.inputs[t].t().dot(&dz);
            grad.w_hh += &step.h_prev.t().dot(&dz);
            grad.b_lstm += &dz.sum_axis(Axis(0));
            dh = dz.dot(&self.w_hh.t());
        }
        grad
    }
}

#[derive(Clone, Debug)]
struct StepCache {
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    /// Activated gates `[i, f, g, o]` side by side.
    gates: Array2<f64>,
    tanh_c: Array2<f64>,
}

/// Intermediate values kept for backpropagation through time.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    steps: Vec<StepCache>,
    h_last: Array2<f64>,
    a1: Array2<f64>,
    r1: Array2<f64>,
    a2: Array2<f64>,
    r2: Array2<f64>,
    pub q: Array2<f64>,
}
