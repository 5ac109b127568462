//! The sampled training loss: determinant residual and convexity penalty on
//! interior points, transport penalty on boundary points.

use serde::{Deserialize, Serialize};

use crate::backprop::{JetEngine, Order, CH_D1, CH_D2, CH_H11, CH_H12, CH_H22};
use crate::error::{Error, Result};
use crate::jet::{Activation, Jet2, ParamObjective};
use crate::network::NetworkParams;
use crate::problems::ProblemSpec;
use crate::sampling::{Point, SamplePlan};

/// Points per batch in the forward/backward passes. Fixed so reductions are
/// reproducible.
const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

/// Weighted loss components; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub interior: f64,
    pub convexity: f64,
    pub boundary: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn from_parts(interior: f64, convexity: f64, boundary: f64) -> Self {
        LossBreakdown {
            interior,
            convexity,
            boundary,
            total: interior + convexity + boundary,
        }
    }
}

/// `(det D^2u - f / g)^2`.
pub fn interior_residual(jet: &Jet2, f_val: f64, g_at_grad: f64) -> Result<f64> {
    if g_at_grad <= 0.0 || !g_at_grad.is_finite() {
        return Err(Error::DomainViolation {
            value: g_at_grad,
            point: [f64::NAN; 2],
            mapped: jet.grad,
        });
    }
    let r = jet.hess_det() - f_val / g_at_grad;
    Ok(r * r)
}

/// `min(h11 + h22, 0)^2`.
pub fn convexity_penalty(jet: &Jet2) -> f64 {
    let t = jet.hess_trace().min(0.0);
    t * t
}

/// Loss of an arbitrary jet field `u` (for instance an exact reflector)
/// over a sample plan.
pub fn total_loss_with<F>(u: F, plan: &SamplePlan, prob: &ProblemSpec, w: &LossWeights) -> Result<LossBreakdown>
where
    F: Fn(Point) -> Result<Jet2>,
{
    check_plan(plan)?;
    let (mut li, mut lc, mut lb) = (0.0, 0.0, 0.0);
    for &x in &plan.interior {
        let j = u(x)?;
        let f = prob.f(x)?;
        li += interior_residual(&j, f, prob.g(j.grad)).map_err(|e| with_source(e, x))?;
        lc += convexity_penalty(&j);
    }
    for &b in &plan.boundary {
        lb += prob.boundary_penalty(u(b)?.grad);
    }
    let n = plan.interior.len() as f64;
    let m = plan.boundary.len() as f64;
    Ok(LossBreakdown::from_parts(w.alpha * li / n, w.beta * lc / n, w.gamma * lb / m))
}

/// Loss of a network over a sample plan.
pub fn total_loss(params: &NetworkParams, plan: &SamplePlan, prob: &ProblemSpec, w: &LossWeights) -> Result<LossBreakdown> {
    let mut eval = LossEvaluator::new(prob.clone(), plan, *w, &params.layer_sizes, params.hidden_activation)?;
    eval.loss(&params.flatten())
}

/// Loss of a network with its exact gradient in flat parameter order.
pub fn loss_and_gradient(
    params: &NetworkParams,
    plan: &SamplePlan,
    prob: &ProblemSpec,
    w: &LossWeights,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let mut eval = LossEvaluator::new(prob.clone(), plan, *w, &params.layer_sizes, params.hidden_activation)?;
    let flat = params.flatten();
    let mut grad = vec![0.0; flat.len()];
    let b = eval.loss_and_gradient(&flat, &mut grad)?;
    Ok((b, grad))
}

fn check_plan(plan: &SamplePlan) -> Result<()> {
    if plan.interior.is_empty() || plan.boundary.is_empty() {
        return Err(Error::InvalidArgument("sample plan needs interior and boundary points".into()));
    }
    Ok(())
}

fn with_source(e: Error, x: Point) -> Error {
    match e {
        Error::DomainViolation { value, mapped, .. } => Error::DomainViolation {
            value,
            point: x,
            mapped,
        },
        other => other,
    }
}

/// Loss evaluator bound to one problem, sample plan and architecture.
/// Source densities at the interior points are computed once up front.
#[derive(Debug, Clone)]
pub struct LossEvaluator {
    prob: ProblemSpec,
    interior: Vec<Point>,
    boundary: Vec<Point>,
    f_interior: Vec<f64>,
    weights: LossWeights,
    engine: JetEngine,
    adj: Vec<f64>,
    evaluations: usize,
}

impl LossEvaluator {
    pub fn new(
        prob: ProblemSpec,
        plan: &SamplePlan,
        weights: LossWeights,
        layer_sizes: &[usize],
        activation: Activation,
    ) -> Result<Self> {
        check_plan(plan)?;
        let f_interior = plan.interior.iter().map(|&x| prob.f(x)).collect::<Result<Vec<_>>>()?;
        Ok(LossEvaluator {
            prob,
            interior: plan.interior.clone(),
            boundary: plan.boundary.clone(),
            f_interior,
            weights,
            engine: JetEngine::new(layer_sizes, activation)?,
            adj: Vec::new(),
            evaluations: 0,
        })
    }

    pub fn n_params(&self) -> usize {
        self.engine.n_params()
    }

    pub fn prob(&self) -> &ProblemSpec {
        &self.prob
    }

    /// Number of loss evaluations performed so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn loss(&mut self, params: &[f64]) -> Result<LossBreakdown> {
        self.run(params, None)
    }

    /// Loss breakdown; the gradient of `total` is written into `grad`.
    pub fn loss_and_gradient(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown> {
        if grad.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                actual: grad.len(),
            });
        }
        grad.fill(0.0);
        self.run(params, Some(grad))
    }

    fn run(&mut self, params: &[f64], mut grad: Option<&mut [f64]>) -> Result<LossBreakdown> {
        self.evaluations += 1;
        let w = self.weights;
        let n = self.interior.len() as f64;
        let m = self.boundary.len() as f64;
        let (ci, cc, cb) = (w.alpha / n, w.beta / n, w.gamma / m);
        let (mut li, mut lc, mut lb) = (0.0, 0.0, 0.0);

        for (pts, fs) in self.interior.chunks(CHUNK).zip(self.f_interior.chunks(CHUNK)) {
            let p = pts.len();
            let out = self.engine.forward(params, pts, Order::Second)?;
            if grad.is_some() {
                self.adj.clear();
                self.adj.resize(out.len(), 0.0);
            }
            for k in 0..p {
                let ch = |c: usize| out[c * p + k];
                let (h11, h12, h22) = (ch(CH_H11), ch(CH_H12), ch(CH_H22));
                let y = [ch(CH_D1), ch(CH_D2)];
                let g = self.prob.g_jet(y);
                if g.value <= 0.0 || !g.value.is_finite() {
                    return Err(Error::DomainViolation {
                        value: g.value,
                        point: pts[k],
                        mapped: y,
                    });
                }
                let ratio = fs[k] / g.value;
                let r = h11 * h22 - h12 * h12 - ratio;
                li += r * r;
                let trace = h11 + h22;
                if trace < 0.0 {
                    lc += trace * trace;
                }
                if grad.is_some() {
                    let dr = 2.0 * r * ci;
                    // d(ratio)/dy = -ratio / g * dg/dy
                    let dq = ratio / g.value;
                    let adj = &mut self.adj;
                    adj[CH_D1 * p + k] = dr * dq * g.grad[0];
                    adj[CH_D2 * p + k] = dr * dq * g.grad[1];
                    let dt = if trace < 0.0 { 2.0 * trace * cc } else { 0.0 };
                    adj[CH_H11 * p + k] = dr * h22 + dt;
                    adj[CH_H22 * p + k] = dr * h11 + dt;
                    adj[CH_H12 * p + k] = -2.0 * dr * h12;
                }
            }
            if let Some(g) = grad.as_deref_mut() {
                self.engine.backward(params, &self.adj, g)?;
            }
        }

        for pts in self.boundary.chunks(CHUNK) {
            let p = pts.len();
            let out = self.engine.forward(params, pts, Order::First)?;
            if grad.is_some() {
                self.adj.clear();
                self.adj.resize(out.len(), 0.0);
            }
            for k in 0..p {
                let y = [out[CH_D1 * p + k], out[CH_D2 * p + k]];
                let (pen, pg) = self.prob.boundary_penalty_with_grad(y);
                lb += pen;
                if grad.is_some() {
                    self.adj[CH_D1 * p + k] = cb * pg[0];
                    self.adj[CH_D2 * p + k] = cb * pg[1];
                }
            }
            if let Some(g) = grad.as_deref_mut() {
                self.engine.backward(params, &self.adj, g)?;
            }
        }

        let b = LossBreakdown::from_parts(ci * li, cc * lc, cb * lb);
        if !b.total.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        Ok(b)
    }
}

impl ParamObjective for LossEvaluator {
    fn value_and_gradient(&mut self, params: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.loss_and_gradient(params, grad).map(|b| b.total)
    }
}
