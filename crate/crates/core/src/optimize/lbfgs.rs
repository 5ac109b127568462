use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::linesearch::{more_thuente, LineSearchOptions, SearchOutcome};
use super::{dot, inf_norm, norm, record_iter, Clock, Monitor, Objective, RunRecord, TerminationReason};
use crate::error::{Error, Result};
use crate::loss::LossBreakdown;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsOptions {
    /// Number of stored curvature pairs.
    pub m_mem: usize,
    pub timeout_s: f64,
    pub max_iter: usize,
    /// Stop once the gradient infinity norm falls to this value.
    pub grad_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            m_mem: 100,
            timeout_s: 15.0,
            max_iter: usize::MAX,
            grad_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Iterate, gradient and the ring of curvature pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsState {
    memory: VecDeque<Pair>,
    capacity: usize,
    pub params: Vec<f64>,
    pub grad: Vec<f64>,
    pub iter: usize,
}

impl LbfgsState {
    pub fn new(params: Vec<f64>, grad: Vec<f64>, capacity: usize) -> Self {
        LbfgsState {
            memory: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
            params,
            grad,
            iter: 0,
        }
    }

    pub fn memory_len(&self) -> usize {
        self.memory.len()
    }

    pub fn clear_memory(&mut self) {
        self.memory.clear();
    }

    /// Stores `(s, y)` unless the curvature `sᵀy` is not safely positive.
    /// Returns whether the pair was kept.
    pub fn push_pair(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if sy.is_nan() || sy <= 1e-10 * norm(&s) * norm(&y) {
            return false;
        }
        debug_assert!(sy > 0.0);
        if self.memory.len() == self.capacity {
            self.memory.pop_front();
        }
        self.memory.push_back(Pair { s, y, rho: 1.0 / sy });
        true
    }

    /// Iterates over stored `(s, y)` pairs, oldest first.
    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.memory.iter().map(|p| (p.s.as_slice(), p.y.as_slice()))
    }
}

/// Two-loop recursion: `-H grad` with `H0 = (sᵀy / yᵀy) I` from the newest
/// pair.
pub fn lbfgs_direction(state: &LbfgsState) -> Result<Vec<f64>> {
    let mut q = state.grad.clone();
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    let m = state.memory.len();
    let mut alpha = vec![0.0; m];
    for (i, p) in state.memory.iter().enumerate().rev() {
        let a = p.rho * dot(&p.s, &q);
        alpha[i] = a;
        for (qk, yk) in q.iter_mut().zip(&p.y) {
            *qk -= a * yk;
        }
    }
    if let Some(p) = state.memory.back() {
        let gamma = dot(&p.s, &p.y) / dot(&p.y, &p.y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (i, p) in state.memory.iter().enumerate() {
        let b = p.rho * dot(&p.y, &q);
        let c = alpha[i] - b;
        for (qk, sk) in q.iter_mut().zip(&p.s) {
            *qk += c * sk;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("search direction"));
    }
    Ok(q)
}

pub(crate) struct Accepted {
    pub step: f64,
    pub evals: usize,
    pub params: Vec<f64>,
    pub grad: Vec<f64>,
    pub loss: LossBreakdown,
}

/// Line search along `direction` from `x`. `Ok(Err(evals))` reports a
/// failed search.
pub(crate) fn search(
    obj: &mut dyn Objective,
    x: &[f64],
    loss0: f64,
    grad0: &[f64],
    direction: &[f64],
    initial_step: f64,
    opts: &LineSearchOptions,
) -> Result<std::result::Result<Accepted, usize>> {
    let slope0 = dot(grad0, direction);
    let mut xt = vec![0.0; x.len()];
    let mut gt = vec![0.0; x.len()];
    let mut loss_t = LossBreakdown::default();
    let outcome = more_thuente(
        |t| {
            for ((xi, x0), d) in xt.iter_mut().zip(x).zip(direction) {
                *xi = x0 + t * d;
            }
            match obj.evaluate(&xt, &mut gt) {
                Ok(l) => {
                    loss_t = l;
                    Ok((l.total, dot(&gt, direction)))
                }
                // trial left the region where the loss is defined
                Err(Error::DomainViolation { .. }) | Err(Error::NonFinite(_)) => Ok((f64::NAN, f64::NAN)),
                Err(e) => Err(e),
            }
        },
        loss0,
        slope0,
        initial_step,
        opts,
    )?;
    Ok(match outcome {
        SearchOutcome::Converged { step, evals } => Ok(Accepted {
            step,
            evals,
            params: xt,
            grad: gt,
            loss: loss_t,
        }),
        SearchOutcome::Failed { evals, .. } => Err(evals),
    })
}

/// Strong Wolfe step along `direction` from `x`; returns `(step, evals)`.
pub fn more_thuente_search(
    obj: &mut dyn Objective,
    x: &[f64],
    direction: &[f64],
    initial_step: f64,
    opts: &LineSearchOptions,
) -> Result<(f64, usize)> {
    let mut g0 = vec![0.0; x.len()];
    let l0 = obj.evaluate(x, &mut g0)?;
    match search(obj, x, l0.total, &g0, direction, initial_step, opts)? {
        Ok(a) => Ok((a.step, a.evals + 1)),
        Err(evals) => Err(Error::LinesearchFailed { evals }),
    }
}

/// Minimizes `obj` from `init` until the first stopping rule triggers.
pub fn run_lbfgs(
    obj: &mut dyn Objective,
    init: &[f64],
    opts: &LbfgsOptions,
    mut monitor: Option<Monitor<'_>>,
) -> Result<(Vec<f64>, RunRecord, TerminationReason)> {
    let mut clock = Clock::start();
    let mut record = RunRecord::new();
    let ls_opts = LineSearchOptions::default();

    let mut grad = vec![0.0; init.len()];
    let mut loss = obj.evaluate(init, &mut grad)?;
    if !loss.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("initial loss"));
    }
    let mut state = LbfgsState::new(init.to_vec(), grad, opts.m_mem);
    record_iter(&mut record, &mut clock, &mut monitor, 0, &state.params, loss);

    let reason = loop {
        if inf_norm(&state.grad) <= opts.grad_tol {
            break TerminationReason::GradTol;
        }
        if state.iter >= opts.max_iter {
            break TerminationReason::MaxIter;
        }
        if clock.elapsed() >= opts.timeout_s {
            break TerminationReason::Timeout;
        }

        let mut direction = lbfgs_direction(&state)?;
        let slope = dot(&direction, &state.grad);
        if slope.is_nan() || slope >= 0.0 {
            state.clear_memory();
            direction = lbfgs_direction(&state)?;
        }
        let step0 = if state.iter == 0 {
            1.0 / norm(&state.grad)
        } else {
            1.0
        };
        let accepted = match search(obj, &state.params, loss.total, &state.grad, &direction, step0, &ls_opts)? {
            Ok(a) => a,
            Err(_) => break TerminationReason::LinesearchFailed,
        };

        let s: Vec<f64> = direction.iter().map(|d| accepted.step * d).collect();
        let y: Vec<f64> = accepted.grad.iter().zip(&state.grad).map(|(a, b)| a - b).collect();
        state.push_pair(s, y);
        state.params = accepted.params;
        state.grad = accepted.grad;
        loss = accepted.loss;
        state.iter += 1;
        record_iter(&mut record, &mut clock, &mut monitor, state.iter, &state.params, loss);
    };
    record.termination = Some(reason);
    Ok((state.params, record, reason))
}
