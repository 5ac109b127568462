//! Batched jet propagation through the network with analytic
//! back-propagation into the flat parameter vector.
//!
//! Every layer holds an `n x (C * P)` row-major matrix: `P` points and `C`
//! channel blocks per neuron, in the order value, d1, d2, h11, h12, h22.
//! Because the channels of a pre-activation are linear in the previous
//! layer's channels, a whole layer is one matrix product; the activation
//! then mixes channels elementwise.

use crate::error::{Error, Result};
use crate::jet::{Activation, Jet2};
use crate::network::{layer_spans, LayerSpan};

/// How many derivative channels to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Value only.
    Value,
    /// Value and gradient.
    First,
    /// Value, gradient and Hessian.
    Second,
}

impl Order {
    pub const fn channels(self) -> usize {
        match self {
            Order::Value => 1,
            Order::First => 3,
            Order::Second => 6,
        }
    }
}

pub const CH_VALUE: usize = 0;
pub const CH_D1: usize = 1;
pub const CH_D2: usize = 2;
pub const CH_H11: usize = 3;
pub const CH_H12: usize = 4;
pub const CH_H22: usize = 5;

/// Reusable buffers for forward and backward passes over one batch.
#[derive(Debug, Clone)]
pub struct JetEngine {
    spans: Vec<LayerSpan>,
    n_params: usize,
    activation: Activation,
    order: Order,
    points: usize,
    /// `acts[l]` is the input of layer `l` (so `acts[0]` holds the seeds).
    acts: Vec<Vec<f64>>,
    /// Pre-activations per layer; the last one is the network output.
    pre: Vec<Vec<f64>>,
    /// `[s', s'', s''']` per hidden neuron and point.
    derivs: Vec<Vec<[f64; 3]>>,
    adj_a: Vec<f64>,
    adj_z: Vec<f64>,
}

impl JetEngine {
    pub fn new(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        let (spans, n_params) = layer_spans(layer_sizes)?;
        let n = spans.len();
        Ok(JetEngine {
            spans,
            n_params,
            activation,
            order: Order::Second,
            points: 0,
            acts: vec![Vec::new(); n],
            pre: vec![Vec::new(); n],
            derivs: vec![Vec::new(); n],
            adj_a: Vec::new(),
            adj_z: Vec::new(),
        })
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn order(&self) -> Order {
        self.order
    }

    /// Runs the batch forward and returns the output matrix `1 x (C * P)`.
    pub fn forward(&mut self, params: &[f64], points: &[[f64; 2]], order: Order) -> Result<&[f64]> {
        if params.len() != self.n_params {
            return Err(Error::LengthMismatch {
                expected: self.n_params,
                actual: params.len(),
            });
        }
        let p = points.len();
        let c = order.channels();
        let cols = c * p;
        self.order = order;
        self.points = p;

        let seeds = &mut self.acts[0];
        seeds.clear();
        seeds.resize(2 * cols, 0.0);
        for (k, x) in points.iter().enumerate() {
            seeds[k] = x[0];
            seeds[cols + k] = x[1];
            if c > 1 {
                seeds[CH_D1 * p + k] = 1.0;
                seeds[cols + CH_D2 * p + k] = 1.0;
            }
        }

        let last = self.spans.len() - 1;
        for (l, span) in self.spans.iter().enumerate() {
            let w = &params[span.weights..span.biases];
            let b = &params[span.biases..span.biases + span.n_out];
            let z = &mut self.pre[l];
            z.clear();
            z.resize(span.n_out * cols, 0.0);
            // SAFETY: slices have exactly the dimensions passed with the
            // stated row-major strides.
            unsafe {
                matrixmultiply::dgemm(
                    span.n_out,
                    span.n_in,
                    cols,
                    1.0,
                    w.as_ptr(),
                    span.n_in as isize,
                    1,
                    self.acts[l].as_ptr(),
                    cols as isize,
                    1,
                    0.0,
                    z.as_mut_ptr(),
                    cols as isize,
                    1,
                );
            }
            for (row, &bias) in z.chunks_exact_mut(cols).zip(b) {
                for v in &mut row[..p] {
                    *v += bias;
                }
            }
            if l == last {
                break;
            }
            let next = &mut self.acts[l + 1];
            next.clear();
            next.resize(span.n_out * cols, 0.0);
            let dv = &mut self.derivs[l];
            dv.clear();
            dv.resize(span.n_out * p, [0.0; 3]);
            for ((zr, ar), dr) in z
                .chunks_exact(cols)
                .zip(next.chunks_exact_mut(cols))
                .zip(dv.chunks_exact_mut(p))
            {
                activate_row(self.activation, order, p, zr, ar, dr);
            }
        }
        let out = &self.pre[last];
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network output"));
        }
        Ok(out)
    }

    /// Output channels of point `k` from the last forward pass.
    pub fn output_jet(&self, k: usize) -> Jet2 {
        let out = &self.pre[self.spans.len() - 1];
        let p = self.points;
        let ch = |c: usize| out[c * p + k];
        match self.order {
            Order::Value => Jet2::constant(ch(CH_VALUE)),
            Order::First => Jet2 {
                value: ch(CH_VALUE),
                grad: [ch(CH_D1), ch(CH_D2)],
                ..Jet2::default()
            },
            Order::Second => Jet2 {
                value: ch(CH_VALUE),
                grad: [ch(CH_D1), ch(CH_D2)],
                h11: ch(CH_H11),
                h12: ch(CH_H12),
                h22: ch(CH_H22),
            },
        }
    }

    /// Back-propagates output adjoints (laid out like the forward output)
    /// and adds the parameter gradient into `grad`.
    pub fn backward(&mut self, params: &[f64], out_adj: &[f64], grad: &mut [f64]) -> Result<()> {
        let p = self.points;
        let c = self.order.channels();
        let cols = c * p;
        if out_adj.len() != cols {
            return Err(Error::LengthMismatch {
                expected: cols,
                actual: out_adj.len(),
            });
        }
        if grad.len() != self.n_params {
            return Err(Error::LengthMismatch {
                expected: self.n_params,
                actual: grad.len(),
            });
        }
        self.adj_z.clear();
        self.adj_z.extend_from_slice(out_adj);

        for l in (0..self.spans.len()).rev() {
            let span = self.spans[l];
            let (gw, gb) = grad[span.weights..span.biases + span.n_out].split_at_mut(span.n_in * span.n_out);
            // dW += dZ * A^T
            // SAFETY: dimensions and strides match the buffers.
            unsafe {
                matrixmultiply::dgemm(
                    span.n_out,
                    cols,
                    span.n_in,
                    1.0,
                    self.adj_z.as_ptr(),
                    cols as isize,
                    1,
                    self.acts[l].as_ptr(),
                    1,
                    cols as isize,
                    1.0,
                    gw.as_mut_ptr(),
                    span.n_in as isize,
                    1,
                );
            }
            for (row, gbi) in self.adj_z.chunks_exact(cols).zip(gb.iter_mut()) {
                *gbi += row[..p].iter().sum::<f64>();
            }
            if l == 0 {
                break;
            }
            // dA = W^T * dZ
            let w = &params[span.weights..span.biases];
            self.adj_a.clear();
            self.adj_a.resize(span.n_in * cols, 0.0);
            // SAFETY: as above.
            unsafe {
                matrixmultiply::dgemm(
                    span.n_in,
                    span.n_out,
                    cols,
                    1.0,
                    w.as_ptr(),
                    1,
                    span.n_in as isize,
                    self.adj_z.as_ptr(),
                    cols as isize,
                    1,
                    0.0,
                    self.adj_a.as_mut_ptr(),
                    cols as isize,
                    1,
                );
            }
            let z_prev = &self.pre[l - 1];
            let d_prev = &self.derivs[l - 1];
            self.adj_z.clear();
            self.adj_z.resize(span.n_in * cols, 0.0);
            for (((zr, ar), dr), out) in z_prev
                .chunks_exact(cols)
                .zip(self.adj_a.chunks_exact(cols))
                .zip(d_prev.chunks_exact(p))
                .zip(self.adj_z.chunks_exact_mut(cols))
            {
                activate_row_backward(self.order, p, zr, dr, ar, out);
            }
        }
        Ok(())
    }
}

fn activate_row(act: Activation, order: Order, p: usize, z: &[f64], a: &mut [f64], d: &mut [[f64; 3]]) {
    for k in 0..p {
        let [s0, s1, s2, s3] = act.derivs3(z[k]);
        d[k] = [s1, s2, s3];
        a[k] = s0;
        if order == Order::Value {
            continue;
        }
        let z1 = z[CH_D1 * p + k];
        let z2 = z[CH_D2 * p + k];
        a[CH_D1 * p + k] = s1 * z1;
        a[CH_D2 * p + k] = s1 * z2;
        if order == Order::Second {
            a[CH_H11 * p + k] = s2 * z1 * z1 + s1 * z[CH_H11 * p + k];
            a[CH_H12 * p + k] = s2 * z1 * z2 + s1 * z[CH_H12 * p + k];
            a[CH_H22 * p + k] = s2 * z2 * z2 + s1 * z[CH_H22 * p + k];
        }
    }
}

fn activate_row_backward(order: Order, p: usize, z: &[f64], d: &[[f64; 3]], adj_a: &[f64], adj_z: &mut [f64]) {
    for k in 0..p {
        let [s1, s2, s3] = d[k];
        let o0 = adj_a[k];
        if order == Order::Value {
            adj_z[k] = o0 * s1;
            continue;
        }
        let z1 = z[CH_D1 * p + k];
        let z2 = z[CH_D2 * p + k];
        let o1 = adj_a[CH_D1 * p + k];
        let o2 = adj_a[CH_D2 * p + k];
        let mut zbar0 = o0 * s1 + s2 * (o1 * z1 + o2 * z2);
        let mut zbar1 = o1 * s1;
        let mut zbar2 = o2 * s1;
        if order == Order::Second {
            let o11 = adj_a[CH_H11 * p + k];
            let o12 = adj_a[CH_H12 * p + k];
            let o22 = adj_a[CH_H22 * p + k];
            zbar0 += s2 * (o11 * z[CH_H11 * p + k] + o12 * z[CH_H12 * p + k] + o22 * z[CH_H22 * p + k])
                + s3 * (o11 * z1 * z1 + o12 * z1 * z2 + o22 * z2 * z2);
            zbar1 += s2 * (2.0 * o11 * z1 + o12 * z2);
            zbar2 += s2 * (2.0 * o22 * z2 + o12 * z1);
            adj_z[CH_H11 * p + k] = o11 * s1;
            adj_z[CH_H12 * p + k] = o12 * s1;
            adj_z[CH_H22 * p + k] = o22 * s1;
        }
        adj_z[k] = zbar0;
        adj_z[CH_D1 * p + k] = zbar1;
        adj_z[CH_D2 * p + k] = zbar2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkParams;

    #[test]
    fn batched_forward_matches_pointwise_jets() {
        let sizes = [2, 7, 5, 1];
        let net = NetworkParams::init(&sizes, 4).unwrap();
        let flat = net.flatten();
        let pts = [[0.1, -0.3], [0.8, 0.2], [-0.5, -0.5], [0.0, 0.9]];
        let mut eng = JetEngine::new(&sizes, Activation::TanhSquared).unwrap();
        for order in [Order::Value, Order::First, Order::Second] {
            eng.forward(&flat, &pts, order).unwrap();
            for (k, &x) in pts.iter().enumerate() {
                let a = eng.output_jet(k);
                let b = net.forward_jet(x).unwrap();
                assert!((a.value - b.value).abs() < 1e-13);
                if order != Order::Value {
                    assert!((a.grad[0] - b.grad[0]).abs() < 1e-13);
                    assert!((a.grad[1] - b.grad[1]).abs() < 1e-13);
                }
                if order == Order::Second {
                    assert!((a.h11 - b.h11).abs() < 1e-12);
                    assert!((a.h12 - b.h12).abs() < 1e-12);
                    assert!((a.h22 - b.h22).abs() < 1e-12);
                }
            }
        }
    }

    /// A fixed random linear functional of all output channels, so every
    /// channel's adjoint path is exercised.
    fn functional(eng: &mut JetEngine, flat: &[f64], pts: &[[f64; 2]], order: Order, coef: &[f64]) -> f64 {
        let out = eng.forward(flat, pts, order).unwrap();
        out.iter().zip(coef).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let sizes = [2, 6, 4, 1];
        let net = NetworkParams::init(&sizes, 9).unwrap();
        let mut flat = net.flatten();
        for (i, v) in flat.iter_mut().enumerate() {
            *v += 0.05 * ((i as f64) * 0.37).sin();
        }
        let pts = [[0.2, 0.4], [-0.6, 0.1], [0.3, -0.7]];
        let mut eng = JetEngine::new(&sizes, Activation::TanhSquared).unwrap();
        for order in [Order::Value, Order::First, Order::Second] {
            let cols = order.channels() * pts.len();
            let coef: Vec<f64> = (0..cols).map(|i| ((i as f64) * 1.7 + 0.3).cos()).collect();
            eng.forward(&flat, &pts, order).unwrap();
            let mut grad = vec![0.0; flat.len()];
            eng.backward(&flat, &coef, &mut grad).unwrap();
            let h = 1e-6;
            for i in 0..flat.len() {
                let mut a = flat.clone();
                let mut b = flat.clone();
                a[i] += h;
                b[i] -= h;
                let fd = (functional(&mut eng, &a, &pts, order, &coef)
                    - functional(&mut eng, &b, &pts, order, &coef))
                    / (2.0 * h);
                let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-3);
                assert!(err < 1e-6, "{order:?} param {i}: analytic {} fd {fd}", grad[i]);
            }
        }
    }

    #[test]
    fn rejects_wrong_lengths() {
        let mut eng = JetEngine::new(&[2, 3, 1], Activation::TanhSquared).unwrap();
        assert!(eng.forward(&[0.0; 3], &[[0.0, 0.0]], Order::Second).is_err());
        let params = vec![0.0; eng.n_params()];
        eng.forward(&params, &[[0.0, 0.0]], Order::First).unwrap();
        let mut g = vec![0.0; params.len()];
        assert!(eng.backward(&params, &[0.0; 2], &mut g).is_err());
    }
}
