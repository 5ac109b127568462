//! Optimizers and the per-iteration run record.

mod adam;
mod lbfgs;
mod linesearch;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::ParamObjective;
use crate::loss::{LossBreakdown, LossEvaluator};

pub use adam::{run_adam, AdamOptions};
pub use lbfgs::{lbfgs_direction, more_thuente_search, run_lbfgs, LbfgsOptions, LbfgsState};
pub use linesearch::{more_thuente, LineSearchOptions, SearchOutcome, Trial};

/// Objective seen by the optimizers: the full loss breakdown plus gradient.
pub trait Objective {
    fn evaluate(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown>;
}

impl Objective for LossEvaluator {
    fn evaluate(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown> {
        self.loss_and_gradient(params, grad)
    }
}

/// Adapts a scalar objective; its value is reported as the interior term.
pub struct Scalar<O>(pub O);

impl<O: ParamObjective> Objective for Scalar<O> {
    fn evaluate(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown> {
        let v = self.0.value_and_gradient(params, grad)?;
        Ok(LossBreakdown::from_parts(v, 0.0, 0.0))
    }
}

/// Closure objective `f(x, grad) -> value`.
pub struct FnObjective<F>(pub F);

impl<F> Objective for FnObjective<F>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    fn evaluate(&mut self, params: &[f64], grad: &mut [f64]) -> Result<LossBreakdown> {
        let v = (self.0)(params, grad);
        Ok(LossBreakdown::from_parts(v, 0.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    LinesearchFailed,
    Timeout,
    MaxIter,
    GradTol,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::LinesearchFailed => "linesearch_failed",
            TerminationReason::Timeout => "timeout",
            TerminationReason::MaxIter => "max_iter",
            TerminationReason::GradTol => "grad_tol",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TerminationReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linesearch_failed" => Ok(TerminationReason::LinesearchFailed),
            "timeout" => Ok(TerminationReason::Timeout),
            "max_iter" => Ok(TerminationReason::MaxIter),
            "grad_tol" => Ok(TerminationReason::GradTol),
            other => Err(Error::InvalidArgument(format!("unknown termination reason '{other}'"))),
        }
    }
}

/// Snapshot taken after each accepted iteration (iteration 0 is the
/// initial point).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    /// Optimizer wall time in seconds, excluding monitor callbacks.
    pub time_s: f64,
    pub loss: LossBreakdown,
    pub nmae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub iterations: Vec<IterRecord>,
    pub termination: Option<TerminationReason>,
}

impl RunRecord {
    pub fn new() -> Self {
        RunRecord {
            iterations: Vec::new(),
            termination: None,
        }
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.iterations.last()
    }

    /// Last record whose time does not exceed `t` seconds.
    pub fn at_time(&self, t: f64) -> Option<&IterRecord> {
        self.iterations.iter().take_while(|r| r.time_s <= t).last()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "iter,time_s,loss_total,loss_interior,loss_convexity,loss_boundary,nmae_or_blank,termination_reason"
        )?;
        let n = self.iterations.len();
        for (k, r) in self.iterations.iter().enumerate() {
            let nmae = r.nmae.map(|v| format!("{v:e}")).unwrap_or_default();
            let reason = match (k + 1 == n, self.termination) {
                (true, Some(t)) => t.as_str(),
                _ => "",
            };
            writeln!(
                w,
                "{},{:.6},{:e},{:e},{:e},{:e},{},{}",
                r.iter, r.time_s, r.loss.total, r.loss.interior, r.loss.convexity, r.loss.boundary, nmae, reason
            )?;
        }
        Ok(())
    }
}

impl Default for RunRecord {
    fn default() -> Self {
        Self::new()
    }
}

/// Callback run after every recorded iteration with `(iter, time_s, params)`.
/// Returns the NMAE to store for that iteration, if it computes one.
pub type Monitor<'a> = &'a mut dyn FnMut(usize, f64, &[f64]) -> Option<f64>;

/// Wall clock that can be paused while monitors run.
pub(crate) struct Clock {
    start: std::time::Instant,
    paused: std::time::Duration,
}

impl Clock {
    pub(crate) fn start() -> Self {
        Clock {
            start: std::time::Instant::now(),
            paused: std::time::Duration::ZERO,
        }
    }

    pub(crate) fn elapsed(&self) -> f64 {
        (self.start.elapsed() - self.paused).as_secs_f64()
    }

    pub(crate) fn excluding<T>(&mut self, f: impl FnOnce() -> T) -> T {
        let t0 = std::time::Instant::now();
        let out = f();
        self.paused += t0.elapsed();
        out
    }
}

pub(crate) fn record_iter(
    record: &mut RunRecord,
    clock: &mut Clock,
    monitor: &mut Option<Monitor<'_>>,
    iter: usize,
    params: &[f64],
    loss: LossBreakdown,
) {
    let time_s = clock.elapsed();
    let nmae = match monitor {
        Some(m) => clock.excluding(|| m(iter, time_s, params)),
        None => None,
    };
    record.iterations.push(IterRecord {
        iter,
        time_s,
        loss,
        nmae,
    });
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
