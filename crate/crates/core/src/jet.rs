//! Second-order jets over a two-dimensional input.
//!
//! A [`Jet2`] carries a scalar together with its gradient and Hessian with
//! respect to the spatial point `(x1, x2)`. Jets compose through the chain
//! rule, so any expression built from seeded coordinates yields exact first
//! and second spatial derivatives.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value, gradient and symmetric Hessian of a scalar field at one point.
///
/// The Hessian is stored as its three distinct entries so symmetry holds by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 2],
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
}

impl Jet2 {
    pub const fn constant(value: f64) -> Self {
        Jet2 {
            value,
            grad: [0.0, 0.0],
            h11: 0.0,
            h12: 0.0,
            h22: 0.0,
        }
    }

    /// Full Hessian as a 2x2 array.
    pub fn hess(&self) -> [[f64; 2]; 2] {
        [[self.h11, self.h12], [self.h12, self.h22]]
    }

    pub fn hess_det(&self) -> f64 {
        self.h11 * self.h22 - self.h12 * self.h12
    }

    pub fn hess_trace(&self) -> f64 {
        self.h11 + self.h22
    }

    /// Eigenvalues of the Hessian, smaller first.
    pub fn hess_eigenvalues(&self) -> (f64, f64) {
        let half_trace = 0.5 * self.hess_trace();
        let half_diff = 0.5 * (self.h11 - self.h22);
        let radius = half_diff.hypot(self.h12);
        (half_trace - radius, half_trace + radius)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.h11.is_finite()
            && self.h12.is_finite()
            && self.h22.is_finite()
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let [g1, g2] = self.grad;
        Jet2 {
            value: f0,
            grad: [f1 * g1, f1 * g2],
            h11: f2 * g1 * g1 + f1 * self.h11,
            h12: f2 * g1 * g2 + f1 * self.h12,
            h22: f2 * g2 * g2 + f1 * self.h22,
        }
    }

    pub fn exp(self) -> Jet2 {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn sin(self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn square(self) -> Jet2 {
        self * self
    }

    pub fn powi(self, n: i32) -> Jet2 {
        let v = self.value;
        let nf = f64::from(n);
        self.chain(
            v.powi(n),
            nf * v.powi(n - 1),
            nf * (nf - 1.0) * v.powi(n - 2),
        )
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value + rhs.value,
            grad: [self.grad[0] + rhs.grad[0], self.grad[1] + rhs.grad[1]],
            h11: self.h11 + rhs.h11,
            h12: self.h12 + rhs.h12,
            h22: self.h22 + rhs.h22,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        self + (-rhs)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self * -1.0
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let (a, b) = (self, rhs);
        Jet2 {
            value: a.value * b.value,
            grad: [
                a.value * b.grad[0] + b.value * a.grad[0],
                a.value * b.grad[1] + b.value * a.grad[1],
            ],
            h11: a.value * b.h11 + b.value * a.h11 + 2.0 * a.grad[0] * b.grad[0],
            h12: a.value * b.h12
                + b.value * a.h12
                + a.grad[0] * b.grad[1]
                + a.grad[1] * b.grad[0],
            h22: a.value * b.h22 + b.value * a.h22 + 2.0 * a.grad[1] * b.grad[1],
        }
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, k: f64) -> Jet2 {
        Jet2 {
            value: self.value * k,
            grad: [self.grad[0] * k, self.grad[1] * k],
            h11: self.h11 * k,
            h12: self.h12 * k,
            h22: self.h22 * k,
        }
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    fn mul(self, j: Jet2) -> Jet2 {
        j * self
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, k: f64) -> Jet2 {
        self.value += k;
        self
    }
}

/// Coordinate jets `(x1, x2)` at point `x`.
pub fn jet_seed(x: [f64; 2]) -> (Jet2, Jet2) {
    let mut x1 = Jet2::constant(x[0]);
    x1.grad = [1.0, 0.0];
    let mut x2 = Jet2::constant(x[1]);
    x2.grad = [0.0, 1.0];
    (x1, x2)
}

/// `bias + sum_k weights[k] * jets[k]`, applied channel by channel.
pub fn jet_affine(weights: &[f64], jets: &[Jet2], bias: f64) -> Result<Jet2> {
    if weights.len() != jets.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            actual: jets.len(),
        });
    }
    if weights.is_empty() {
        return Err(Error::InvalidArgument("affine map needs at least one input".into()));
    }
    let mut acc = Jet2::constant(bias);
    for (&w, &j) in weights.iter().zip(jets) {
        acc = acc + j * w;
    }
    Ok(acc)
}

/// Activation applied to hidden neurons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    /// `tanh(z)^2`
    #[default]
    TanhSquared,
    Identity,
}

/// `tanh` through a single `exp`; about twice as fast as the libm routine
/// and accurate to a few ulps in absolute terms.
#[inline]
fn tanh(z: f64) -> f64 {
    1.0 - 2.0 / ((2.0 * z).exp() + 1.0)
}

impl Activation {
    /// `[s(z), s'(z), s''(z)]`
    #[inline]
    pub fn derivs(self, z: f64) -> [f64; 3] {
        match self {
            Activation::TanhSquared => {
                let t = tanh(z);
                let sech2 = 1.0 - t * t;
                let t2 = t * t;
                [t2, 2.0 * t * sech2, 2.0 * sech2 * sech2 - 4.0 * t2 * sech2]
            }
            Activation::Identity => [z, 1.0, 0.0],
        }
    }

    /// `[s(z), s'(z), s''(z), s'''(z)]`; the third derivative is needed when
    /// back-propagating through the Hessian channels.
    #[inline]
    pub fn derivs3(self, z: f64) -> [f64; 4] {
        match self {
            Activation::TanhSquared => {
                let t = tanh(z);
                let s = 1.0 - t * t;
                let t2 = t * t;
                [
                    t2,
                    2.0 * t * s,
                    2.0 * s * s - 4.0 * t2 * s,
                    -16.0 * t * s * s + 8.0 * t2 * t * s,
                ]
            }
            Activation::Identity => [z, 1.0, 0.0, 0.0],
        }
    }

    pub fn eval(self, z: f64) -> f64 {
        match self {
            Activation::TanhSquared => {
                let t = tanh(z);
                t * t
            }
            Activation::Identity => z,
        }
    }
}

/// Second-order chain rule through an activation.
pub fn jet_activate(act: Activation, j: Jet2) -> Jet2 {
    let [s0, s1, s2] = act.derivs(j.value);
    j.chain(s0, s1, s2)
}

/// A scalar objective over a flat parameter vector that can report its
/// exact gradient.
pub trait ParamObjective {
    /// Writes the gradient into `grad` and returns the objective value.
    fn value_and_gradient(&mut self, params: &[f64], grad: &mut [f64]) -> Result<f64>;

    fn value(&mut self, params: &[f64]) -> Result<f64> {
        let mut scratch = vec![0.0; params.len()];
        self.value_and_gradient(params, &mut scratch)
    }
}

/// Exact gradient of `objective` at `params`, in the same flat order.
pub fn param_gradient<O: ParamObjective + ?Sized>(objective: &mut O, params: &[f64]) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; params.len()];
    let value = objective.value_and_gradient(params, &mut grad)?;
    if !value.is_finite() {
        return Err(Error::NonFinite("objective value"));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("objective gradient"));
    }
    Ok(grad)
}
