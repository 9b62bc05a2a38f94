//! LSTM stack internals: dense matrices, layer forward/backward, BPTT.
//!
//! Cell equations per step (gate order i, f, g, o):
//!
//! ```text
//! z   = W_ih x + W_hh h_prev + b
//! i,f,o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o);  g = tanh(z_g)
//! c   = f * c_prev + i * g
//! h   = o * tanh(c)
//! ```
//!
//! A stack is one or more layers plus a per-step affine readout with no
//! output nonlinearity.

use crate::scalar::Scalar;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S: Scalar> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut ChaCha8Rng) -> Self {
        let data = (0..rows * cols).map(|_| S::from_f64(rng.gen_range(-bound..=bound))).collect();
        Mat { rows, cols, data }
    }

    /// out[r] += sum_k W[r,k] * x[k]
    pub fn matvec_acc(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = S::zero();
            for (w, v) in row.iter().zip(x.iter()) {
                acc += *w * *v;
            }
            *o += acc;
        }
    }

    /// out[k] += sum_r W[r,k] * g[r]
    pub fn matvec_t_acc(&self, g: &[S], out: &mut [S]) {
        debug_assert_eq!(g.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &gr) in g.iter().enumerate() {
            if gr == S::zero() {
                continue;
            }
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, w) in out.iter_mut().zip(row.iter()) {
                *o += gr * *w;
            }
        }
    }

    /// W[r,k] += g[r] * x[k]
    pub fn outer_acc(&mut self, g: &[S], x: &[S]) {
        debug_assert_eq!(g.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &gr) in g.iter().enumerate() {
            if gr == S::zero() {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, v) in row.iter_mut().zip(x.iter()) {
                *w += gr * *v;
            }
        }
    }

    pub fn scaled_add(&mut self, other: &Mat<S>, scale: S) {
        for (w, g) in self.data.iter_mut().zip(other.data.iter()) {
            *w += scale * *g;
        }
    }
}

fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

/// Gate weights and bias of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer<S: Scalar> {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// [4*hidden, input]
    pub w_ih: Mat<S>,
    /// [4*hidden, hidden]
    pub w_hh: Mat<S>,
    /// [4*hidden]
    pub b: Vec<S>,
}

impl<S: Scalar> LstmLayer<S> {
    fn init(input_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let gates = 4 * hidden_dim;
        // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; biases start at zero.
        let ih_bound = 1.0 / (input_dim as f64).sqrt();
        let hh_bound = 1.0 / (hidden_dim as f64).sqrt();
        LstmLayer {
            input_dim,
            hidden_dim,
            w_ih: Mat::uniform(gates, input_dim, ih_bound, rng),
            w_hh: Mat::uniform(gates, hidden_dim, hh_bound, rng),
            b: vec![S::zero(); gates],
        }
    }

    fn zeros_like(&self) -> Self {
        LstmLayer {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            w_ih: Mat::zeros(4 * self.hidden_dim, self.input_dim),
            w_hh: Mat::zeros(4 * self.hidden_dim, self.hidden_dim),
            b: vec![S::zero(); 4 * self.hidden_dim],
        }
    }
}

/// Per-step affine readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine<S: Scalar> {
    pub w: Mat<S>,
    pub b: Vec<S>,
}

impl<S: Scalar> Affine<S> {
    fn init(input_dim: usize, output_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (input_dim as f64).sqrt();
        Affine { w: Mat::uniform(output_dim, input_dim, bound, rng), b: vec![S::zero(); output_dim] }
    }

    fn zeros_like(&self) -> Self {
        Affine { w: Mat::zeros(self.w.rows, self.w.cols), b: vec![S::zero(); self.b.len()] }
    }
}

/// Saved forward state of one layer at one step.
#[derive(Debug, Clone)]
struct StepState<S: Scalar> {
    x: Vec<S>,
    h_prev: Vec<S>,
    c_prev: Vec<S>,
    i: Vec<S>,
    f: Vec<S>,
    g: Vec<S>,
    o: Vec<S>,
    tanh_c: Vec<S>,
}

/// Everything the backward pass needs, plus the per-layer hidden sequences
/// for intermediate inspection.
#[derive(Debug, Clone)]
pub struct StackRun<S: Scalar> {
    /// Readout outputs per step.
    pub outputs: Vec<Vec<S>>,
    /// hidden[layer][step] — the h sequence of each layer.
    pub hidden: Vec<Vec<Vec<S>>>,
    states: Vec<Vec<StepState<S>>>,
}

/// LSTM layers plus affine readout.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmStack<S: Scalar> {
    pub layers: Vec<LstmLayer<S>>,
    pub readout: Affine<S>,
}

/// Gradients with the same shapes as the stack parameters.
#[derive(Debug, Clone)]
pub struct StackGrads<S: Scalar> {
    pub layers: Vec<LstmLayer<S>>,
    pub readout: Affine<S>,
}

impl<S: Scalar> LstmStack<S> {
    /// `dims` = input width followed by each layer's hidden width; the
    /// readout maps the last hidden width to `output_dim`.
    pub fn init(dims: &[usize], output_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "need input dim and at least one hidden dim");
        let layers: Vec<LstmLayer<S>> =
            dims.windows(2).map(|w| LstmLayer::init(w[0], w[1], rng)).collect();
        let readout = Affine::init(*dims.last().unwrap(), output_dim, rng);
        LstmStack { layers, readout }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.readout.w.rows
    }

    pub fn zero_grads(&self) -> StackGrads<S> {
        StackGrads {
            layers: self.layers.iter().map(LstmLayer::zeros_like).collect(),
            readout: self.readout.zeros_like(),
        }
    }

    /// Runs the recurrence over the step axis, caching state for backward.
    pub fn forward(&self, inputs: &[&[S]]) -> StackRun<S> {
        let steps = inputs.len();
        let mut states: Vec<Vec<StepState<S>>> = Vec::with_capacity(self.layers.len());
        let mut hidden: Vec<Vec<Vec<S>>> = Vec::with_capacity(self.layers.len());
        let mut layer_inputs: Vec<Vec<S>> = inputs.iter().map(|x| x.to_vec()).collect();

        for layer in &self.layers {
            let hd = layer.hidden_dim;
            let mut h = vec![S::zero(); hd];
            let mut c = vec![S::zero(); hd];
            let mut layer_states = Vec::with_capacity(steps);
            let mut layer_hidden = Vec::with_capacity(steps);

            for x in &layer_inputs {
                debug_assert_eq!(x.len(), layer.input_dim);
                let mut z = layer.b.clone();
                layer.w_ih.matvec_acc(x, &mut z);
                layer.w_hh.matvec_acc(&h, &mut z);

                let mut i = vec![S::zero(); hd];
                let mut f = vec![S::zero(); hd];
                let mut g = vec![S::zero(); hd];
                let mut o = vec![S::zero(); hd];
                for k in 0..hd {
                    i[k] = sigmoid(z[k]);
                    f[k] = sigmoid(z[hd + k]);
                    g[k] = z[2 * hd + k].tanh();
                    o[k] = sigmoid(z[3 * hd + k]);
                }
                let c_prev = c.clone();
                let h_prev = h.clone();
                let mut tanh_c = vec![S::zero(); hd];
                for k in 0..hd {
                    c[k] = f[k] * c_prev[k] + i[k] * g[k];
                    tanh_c[k] = c[k].tanh();
                    h[k] = o[k] * tanh_c[k];
                }
                layer_states.push(StepState { x: x.clone(), h_prev, c_prev, i, f, g, o, tanh_c });
                layer_hidden.push(h.clone());
            }

            layer_inputs = layer_hidden.clone();
            states.push(layer_states);
            hidden.push(layer_hidden);
        }

        let outputs = layer_inputs
            .iter()
            .map(|h| {
                let mut y = self.readout.b.clone();
                self.readout.w.matvec_acc(h, &mut y);
                y
            })
            .collect();

        StackRun { outputs, hidden, states }
    }

    /// BPTT given dL/d(output) per step; accumulates into `grads`.
    pub fn backward(&self, run: &StackRun<S>, d_outputs: &[Vec<S>], grads: &mut StackGrads<S>) {
        let steps = d_outputs.len();
        let last = self.layers.len() - 1;

        // Readout: y = W h + b.
        let mut d_hidden: Vec<Vec<S>> = vec![vec![S::zero(); self.layers[last].hidden_dim]; steps];
        for t in 0..steps {
            let h = &run.hidden[last][t];
            grads.readout.w.outer_acc(&d_outputs[t], h);
            for (db, dy) in grads.readout.b.iter_mut().zip(d_outputs[t].iter()) {
                *db += *dy;
            }
            self.readout.w.matvec_t_acc(&d_outputs[t], &mut d_hidden[t]);
        }

        // Layers top-down, time reversed within each layer.
        let mut d_from_above = d_hidden;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let hd = layer.hidden_dim;
            let g_layer = &mut grads.layers[l];
            let mut dh_next = vec![S::zero(); hd];
            let mut dc_next = vec![S::zero(); hd];
            let mut d_below: Vec<Vec<S>> = vec![vec![S::zero(); layer.input_dim]; steps];

            for t in (0..steps).rev() {
                let st = &run.states[l][t];
                let mut dz = vec![S::zero(); 4 * hd];
                for k in 0..hd {
                    let dh = d_from_above[t][k] + dh_next[k];
                    let dc = dh * st.o[k] * (S::one() - st.tanh_c[k] * st.tanh_c[k]) + dc_next[k];
                    let di = dc * st.g[k];
                    let df = dc * st.c_prev[k];
                    let dg = dc * st.i[k];
                    let do_ = dh * st.tanh_c[k];
                    dz[k] = di * st.i[k] * (S::one() - st.i[k]);
                    dz[hd + k] = df * st.f[k] * (S::one() - st.f[k]);
                    dz[2 * hd + k] = dg * (S::one() - st.g[k] * st.g[k]);
                    dz[3 * hd + k] = do_ * st.o[k] * (S::one() - st.o[k]);
                    dc_next[k] = dc * st.f[k];
                }

                g_layer.w_ih.outer_acc(&dz, &st.x);
                g_layer.w_hh.outer_acc(&dz, &st.h_prev);
                for (db, d) in g_layer.b.iter_mut().zip(dz.iter()) {
                    *db += *d;
                }

                dh_next = vec![S::zero(); hd];
                layer.w_hh.matvec_t_acc(&dz, &mut dh_next);
                layer.w_ih.matvec_t_acc(&dz, &mut d_below[t]);
            }
            d_from_above = d_below;
        }
    }

    /// Gradient-descent update: params -= lr * grads.
    pub fn apply_grads(&mut self, grads: &StackGrads<S>, lr: S) {
        let neg = -lr;
        for (layer, g) in self.layers.iter_mut().zip(grads.layers.iter()) {
            layer.w_ih.scaled_add(&g.w_ih, neg);
            layer.w_hh.scaled_add(&g.w_hh, neg);
            for (b, gb) in layer.b.iter_mut().zip(g.b.iter()) {
                *b += neg * *gb;
            }
        }
        self.readout.w.scaled_add(&grads.readout.w, neg);
        for (b, gb) in self.readout.b.iter_mut().zip(grads.readout.b.iter()) {
            *b += neg * *gb;
        }
    }

    /// All parameters flattened in a fixed order (per layer: w_ih, w_hh, b;
    /// then readout w, b). Used by checkpoints and the finite-difference
    /// gradient check.
    pub fn params_flat(&self) -> Vec<S> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(&layer.w_ih.data);
            out.extend_from_slice(&layer.w_hh.data);
            out.extend_from_slice(&layer.b);
        }
        out.extend_from_slice(&self.readout.w.data);
        out.extend_from_slice(&self.readout.b);
        out
    }

    pub fn set_params_flat(&mut self, params: &[S]) {
        let mut pos = 0;
        let mut take = |dst: &mut [S]| {
            dst.copy_from_slice(&params[pos..pos + dst.len()]);
            pos += dst.len();
        };
        for layer in &mut self.layers {
            take(&mut layer.w_ih.data);
            take(&mut layer.w_hh.data);
            take(&mut layer.b);
        }
        take(&mut self.readout.w.data);
        take(&mut self.readout.b);
        assert_eq!(pos, params.len(), "parameter count mismatch");
    }
}

impl<S: Scalar> StackGrads<S> {
    pub fn flat(&self) -> Vec<S> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(&layer.w_ih.data);
            out.extend_from_slice(&layer.w_hh.data);
            out.extend_from_slice(&layer.b);
        }
        out.extend_from_slice(&self.readout.w.data);
        out.extend_from_slice(&self.readout.b);
        out
    }

    pub fn scale(&mut self, factor: S) {
        for layer in &mut self.layers {
            for v in layer
                .w_ih
                .data
                .iter_mut()
                .chain(layer.w_hh.data.iter_mut())
                .chain(layer.b.iter_mut())
            {
                *v *= factor;
            }
        }
        for v in self.readout.w.data.iter_mut().chain(self.readout.b.iter_mut()) {
            *v *= factor;
        }
    }
}
