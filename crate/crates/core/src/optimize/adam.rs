use serde::{Deserialize, Serialize};

use super::{record_iter, Clock, Monitor, Objective, RunRecord, TerminationReason};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamOptions {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub timeout_s: f64,
    pub max_iter: usize,
}

impl Default for AdamOptions {
    fn default() -> Self {
        AdamOptions {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            timeout_s: 15.0,
            max_iter: usize::MAX,
        }
    }
}

/// Full-batch Adam with bias correction.
pub fn run_adam(
    obj: &mut dyn Objective,
    init: &[f64],
    opts: &AdamOptions,
    mut monitor: Option<Monitor<'_>>,
) -> Result<(Vec<f64>, RunRecord, TerminationReason)> {
    let mut clock = Clock::start();
    let mut record = RunRecord::new();
    let n = init.len();
    let mut x = init.to_vec();
    let mut grad = vec![0.0; n];
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];

    let mut loss = obj.evaluate(&x, &mut grad)?;
    if !loss.total.is_finite() {
        return Err(Error::NonFinite("initial loss"));
    }
    record_iter(&mut record, &mut clock, &mut monitor, 0, &x, loss);

    let mut t = 0usize;
    let reason = loop {
        if t >= opts.max_iter {
            break TerminationReason::MaxIter;
        }
        if clock.elapsed() >= opts.timeout_s {
            break TerminationReason::Timeout;
        }
        t += 1;
        let c1 = 1.0 - opts.beta1.powi(t as i32);
        let c2 = 1.0 - opts.beta2.powi(t as i32);
        for k in 0..n {
            m[k] = opts.beta1 * m[k] + (1.0 - opts.beta1) * grad[k];
            v[k] = opts.beta2 * v[k] + (1.0 - opts.beta2) * grad[k] * grad[k];
            x[k] -= opts.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + opts.eps);
        }
        loss = obj.evaluate(&x, &mut grad)?;
        if !loss.total.is_finite() {
            return Err(Error::NonFinite("loss during adam iteration"));
        }
        record_iter(&mut record, &mut clock, &mut monitor, t, &x, loss);
    };
    record.termination = Some(reason);
    Ok((x, record, reason))
}
