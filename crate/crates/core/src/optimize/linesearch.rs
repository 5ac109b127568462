//! Moré-Thuente line search for the strong Wolfe conditions.
//!
//! Port of the MINPACK-2 `dcsrch`/`dcstep` pair: the step is safeguarded
//! inside a bracket that is refined with cubic and quadratic interpolants.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOptions {
    /// Sufficient-decrease constant `c1`.
    pub ftol: f64,
    /// Curvature constant `c2`.
    pub gtol: f64,
    /// Relative bracket width below which the search gives up.
    pub xtol: f64,
    pub stpmin: f64,
    pub stpmax: f64,
    /// Maximum number of function/gradient evaluations.
    pub max_evals: usize,
}

impl Default for LineSearchOptions {
    fn default() -> Self {
        LineSearchOptions {
            ftol: 1e-4,
            gtol: 0.9,
            xtol: 1e-14,
            stpmin: 1e-20,
            stpmax: 1e20,
            max_evals: 16,
        }
    }
}

/// One trial along the search line: `phi(step)` and `phi'(step)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub step: f64,
    pub value: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchOutcome {
    /// Strong Wolfe conditions hold at the last evaluated step.
    Converged { step: f64, evals: usize },
    /// No acceptable step within the evaluation budget or the bracket
    /// collapsed.
    Failed { evals: usize, best: Option<Trial> },
}

/// Searches along a line given `phi(step) -> (value, slope)`. The closure is
/// also where the caller keeps the point and gradient of the last trial.
///
/// `value0`/`slope0` describe `phi(0)`; `slope0` must be negative.
pub fn more_thuente<F>(mut phi: F, value0: f64, slope0: f64, initial_step: f64, opts: &LineSearchOptions) -> Result<SearchOutcome>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if slope0.is_nan() || slope0 >= 0.0 {
        return Err(Error::NotDescent(slope0));
    }
    if initial_step.is_nan() || initial_step <= 0.0 {
        return Err(Error::InvalidArgument(format!("initial step {initial_step} must be positive")));
    }
    const XTRAPL: f64 = 1.1;
    const XTRAPU: f64 = 4.0;

    let finit = value0;
    let ginit = slope0;
    let gtest = opts.ftol * ginit;
    let mut width = opts.stpmax - opts.stpmin;
    let mut width1 = 2.0 * width;

    let mut brackt = false;
    let mut stage1 = true;
    let (mut stx, mut fx, mut gx) = (0.0_f64, finit, ginit);
    let (mut sty, mut fy, mut gy) = (0.0_f64, finit, ginit);
    let mut stmin = 0.0;
    let mut stp = initial_step.clamp(opts.stpmin, opts.stpmax);
    let mut stmax = stp + XTRAPU * stp;
    let mut best: Option<Trial> = None;

    for evals in 1..=opts.max_evals {
        let (f, g) = phi(stp)?;
        if !f.is_finite() || !g.is_finite() {
            // overshoot into a region where the loss blows up: pull back
            // toward the best point and shrink the admissible interval
            brackt = true;
            sty = stp;
            fy = f64::INFINITY;
            gy = f64::INFINITY;
            stmin = stx.min(stp);
            stmax = stx.max(stp);
            stp = stx + 0.5 * (stp - stx);
            continue;
        }
        let ftest = finit + stp * gtest;
        if f <= ftest && best.is_none_or(|b| f < b.value) {
            best = Some(Trial { step: stp, value: f, slope: g });
        }
        if stage1 && f <= ftest && g >= 0.0 {
            stage1 = false;
        }
        if f <= ftest && g.abs() <= opts.gtol * (-ginit) {
            return Ok(SearchOutcome::Converged { step: stp, evals });
        }
        let stuck = (brackt && (stp <= stmin || stp >= stmax))
            || (brackt && stmax - stmin <= opts.xtol * stmax)
            || (stp == opts.stpmax && f <= ftest && g <= gtest)
            || (stp == opts.stpmin && (f > ftest || g >= gtest));
        if stuck {
            return Ok(SearchOutcome::Failed { evals, best });
        }

        if stage1 && f <= fx && f > ftest {
            // modified function psi(stp) = phi(stp) - phi(0) - stp * gtest
            let mut fxm = fx - stx * gtest;
            let mut fym = fy - sty * gtest;
            let mut gxm = gx - gtest;
            let mut gym = gy - gtest;
            let fm = f - stp * gtest;
            let gm = g - gtest;
            dcstep(
                &mut stx, &mut fxm, &mut gxm, &mut sty, &mut fym, &mut gym, &mut stp, fm, gm, &mut brackt, stmin, stmax,
            );
            fx = fxm + stx * gtest;
            fy = fym + sty * gtest;
            gx = gxm + gtest;
            gy = gym + gtest;
        } else {
            dcstep(
                &mut stx, &mut fx, &mut gx, &mut sty, &mut fy, &mut gy, &mut stp, f, g, &mut brackt, stmin, stmax,
            );
        }

        if brackt {
            if (sty - stx).abs() >= 0.66 * width1 {
                stp = stx + 0.5 * (sty - stx);
            }
            width1 = width;
            width = (sty - stx).abs();
            stmin = stx.min(sty);
            stmax = stx.max(sty);
        } else {
            stmin = stp + XTRAPL * (stp - stx);
            stmax = stp + XTRAPU * (stp - stx);
        }
        stp = stp.clamp(opts.stpmin, opts.stpmax);
        if brackt && (stp <= stmin || stp >= stmax || stmax - stmin <= opts.xtol * stmax) {
            stp = stx;
        }
    }
    Ok(SearchOutcome::Failed {
        evals: opts.max_evals,
        best,
    })
}

/// Safeguarded step update of Moré and Thuente. `(stx, fx, dx)` is the best
/// step so far, `(sty, fy, dy)` the other bracket end, `(stp, fp, dp)` the
/// current trial. Updates the bracket and writes the next trial into `stp`.
#[allow(clippy::too_many_arguments)]
fn dcstep(
    stx: &mut f64,
    fx: &mut f64,
    dx: &mut f64,
    sty: &mut f64,
    fy: &mut f64,
    dy: &mut f64,
    stp: &mut f64,
    fp: f64,
    dp: f64,
    brackt: &mut bool,
    stpmin: f64,
    stpmax: f64,
) {
    let sgnd = dp * (*dx / dx.abs());
    let stpf;

    if fp > *fx {
        // higher function value: the minimum is bracketed
        let theta = 3.0 * (*fx - fp) / (*stp - *stx) + *dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (*dx / s) * (dp / s)).max(0.0).sqrt();
        if *stp < *stx {
            gamma = -gamma;
        }
        let p = (gamma - *dx) + theta;
        let q = ((gamma - *dx) + gamma) + dp;
        let r = p / q;
        let stpc = *stx + r * (*stp - *stx);
        let stpq = *stx + ((*dx / ((*fx - fp) / (*stp - *stx) + *dx)) / 2.0) * (*stp - *stx);
        stpf = if (stpc - *stx).abs() < (stpq - *stx).abs() {
            stpc
        } else {
            stpc + (stpq - stpc) / 2.0
        };
        *brackt = true;
    } else if sgnd < 0.0 {
        // derivatives of opposite sign: the minimum is bracketed
        let theta = 3.0 * (*fx - fp) / (*stp - *stx) + *dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (*dx / s) * (dp / s)).max(0.0).sqrt();
        if *stp > *stx {
            gamma = -gamma;
        }
        let p = (gamma - dp) + theta;
        let q = ((gamma - dp) + gamma) + *dx;
        let r = p / q;
        let stpc = *stp + r * (*stx - *stp);
        let stpq = *stp + (dp / (dp - *dx)) * (*stx - *stp);
        stpf = if (stpc - *stp).abs() > (stpq - *stp).abs() {
            stpc
        } else {
            stpq
        };
        *brackt = true;
    } else if dp.abs() < dx.abs() {
        // same sign, derivative magnitude decreases
        let theta = 3.0 * (*fx - fp) / (*stp - *stx) + *dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (*dx / s) * (dp / s)).max(0.0).sqrt();
        if *stp > *stx {
            gamma = -gamma;
        }
        let p = (gamma - dp) + theta;
        let q = (gamma + (*dx - dp)) + gamma;
        let r = p / q;
        let stpc = if r < 0.0 && gamma != 0.0 {
            *stp + r * (*stx - *stp)
        } else if *stp > *stx {
            stpmax
        } else {
            stpmin
        };
        let stpq = *stp + (dp / (dp - *dx)) * (*stx - *stp);
        if *brackt {
            let mut cand = if (stpc - *stp).abs() < (stpq - *stp).abs() {
                stpc
            } else {
                stpq
            };
            cand = if *stp > *stx {
                cand.min(*stp + 0.66 * (*sty - *stp))
            } else {
                cand.max(*stp + 0.66 * (*sty - *stp))
            };
            stpf = cand;
        } else {
            let cand = if (stpc - *stp).abs() > (stpq - *stp).abs() {
                stpc
            } else {
                stpq
            };
            stpf = cand.clamp(stpmin, stpmax);
        }
    } else {
        // same sign, derivative magnitude does not decrease
        stpf = if *brackt {
            let theta = 3.0 * (fp - *fy) / (*sty - *stp) + *dy + dp;
            let s = theta.abs().max(dy.abs()).max(dp.abs());
            let mut gamma = s * ((theta / s).powi(2) - (*dy / s) * (dp / s)).max(0.0).sqrt();
            if *stp > *sty {
                gamma = -gamma;
            }
            let p = (gamma - dp) + theta;
            let q = ((gamma - dp) + gamma) + *dy;
            let r = p / q;
            *stp + r * (*sty - *stp)
        } else if *stp > *stx {
            stpmax
        } else {
            stpmin
        };
    }

    if fp > *fx {
        *sty = *stp;
        *fy = fp;
        *dy = dp;
    } else {
        if sgnd < 0.0 {
            *sty = *stx;
            *fy = *fx;
            *dy = *dx;
        }
        *stx = *stp;
        *fx = fp;
        *dx = dp;
    }
    *stp = stpf;
}
