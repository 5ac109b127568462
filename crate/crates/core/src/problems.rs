//! The benchmark catalog: five reflector problems with their domains,
//! densities and, where known, the exact reflector.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{jet_seed, Jet2};
use crate::sampling::{DomainSpec, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemName {
    A,
    B,
    C,
    D,
    E,
}

impl ProblemName {
    pub const ALL: [ProblemName; 5] = [
        ProblemName::A,
        ProblemName::B,
        ProblemName::C,
        ProblemName::D,
        ProblemName::E,
    ];
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProblemName::A => "A",
            ProblemName::B => "B",
            ProblemName::C => "C",
            ProblemName::D => "D",
            ProblemName::E => "E",
        };
        f.write_str(s)
    }
}

impl FromStr for ProblemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(ProblemName::A),
            "B" => Ok(ProblemName::B),
            "C" => Ok(ProblemName::C),
            "D" => Ok(ProblemName::D),
            "E" => Ok(ProblemName::E),
            other => Err(Error::InvalidArgument(format!("unknown problem '{other}' (expected A..E)"))),
        }
    }
}

/// Closed-form reflectors with known solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactReflector {
    /// `exp(|x|^2) / (2e)`
    Exponential,
    /// `|x|^2/2 + (x1^2 x2 / 2 + cos(x1 x2) / 2)(cos(pi |x|^2) + 1) / (2 pi^2)`
    Asymmetric1,
    /// `|x|^2/2 + exp(-x1^2 + x2)(1 + cos(pi |x|^2)) / (5 pi^2)`
    Asymmetric2,
    /// `|x|^2 / 2`; its gradient is the identity map.
    Quadratic,
}

impl ExactReflector {
    pub fn jet(self, x: Point) -> Jet2 {
        let (x1, x2) = jet_seed(x);
        let r2 = x1 * x1 + x2 * x2;
        match self {
            ExactReflector::Exponential => r2.exp() * (1.0 / (2.0 * E)),
            ExactReflector::Asymmetric1 => {
                let lobe = x1 * x1 * x2 * 0.5 + (x1 * x2).cos() * 0.5;
                let ring = (r2 * PI).cos() + 1.0;
                r2 * 0.5 + lobe * ring * (1.0 / (2.0 * PI * PI))
            }
            ExactReflector::Asymmetric2 => {
                let bump = (x2 - x1 * x1).exp();
                let ring = (r2 * PI).cos() + 1.0;
                r2 * 0.5 + bump * ring * (1.0 / (5.0 * PI * PI))
            }
            ExactReflector::Quadratic => r2 * 0.5,
        }
    }
}

/// Target intensity `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetDensity {
    /// `sin(y1^2 + y2) cos(4 y2) + 2`
    Wave,
    /// `sin(y1^2 + 8 y2^3) cos(5 y2) sin(5 y1 + 7 y2) + 3`
    Ripple,
    Uniform(f64),
}

impl TargetDensity {
    /// `g` with its gradient (and Hessian) at `y`.
    pub fn jet(self, y: Point) -> Jet2 {
        let (y1, y2) = jet_seed(y);
        match self {
            TargetDensity::Wave => (y1 * y1 + y2).sin() * (y2 * 4.0).cos() + 2.0,
            TargetDensity::Ripple => {
                (y1 * y1 + y2.powi(3) * 8.0).sin() * (y2 * 5.0).cos() * (y1 * 5.0 + y2 * 7.0).sin() + 3.0
            }
            TargetDensity::Uniform(c) => Jet2::constant(c),
        }
    }

    pub fn value(self, y: Point) -> f64 {
        match self {
            TargetDensity::Wave => (y[0] * y[0] + y[1]).sin() * (4.0 * y[1]).cos() + 2.0,
            TargetDensity::Ripple => {
                (y[0] * y[0] + 8.0 * y[1].powi(3)).sin() * (5.0 * y[1]).cos() * (5.0 * y[0] + 7.0 * y[1]).sin() + 3.0
            }
            TargetDensity::Uniform(c) => c,
        }
    }
}

/// Source intensity `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceDensity {
    /// Derived from the exact reflector so the equation holds identically.
    Derived,
    Uniform(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: ProblemName,
    pub source: DomainSpec,
    pub target: DomainSpec,
    pub source_density: SourceDensity,
    pub target_density: TargetDensity,
    pub exact: Option<ExactReflector>,
}

pub fn make_problem(name: ProblemName) -> ProblemSpec {
    let disk = DomainSpec::unit_disk();
    let reflector = |exact, g| ProblemSpec {
        name,
        source: disk,
        target: disk,
        source_density: SourceDensity::Derived,
        target_density: g,
        exact: Some(exact),
    };
    match name {
        ProblemName::A => reflector(ExactReflector::Exponential, TargetDensity::Wave),
        ProblemName::B => reflector(ExactReflector::Asymmetric1, TargetDensity::Wave),
        ProblemName::C => reflector(ExactReflector::Asymmetric2, TargetDensity::Ripple),
        ProblemName::D => uniform_problem(name, DomainSpec::unit_square(), disk),
        ProblemName::E => uniform_problem(name, disk, DomainSpec::flower()),
    }
}

/// Uniform source and target; the target level follows from energy
/// conservation.
fn uniform_problem(name: ProblemName, source: DomainSpec, target: DomainSpec) -> ProblemSpec {
    ProblemSpec {
        name,
        source,
        target,
        source_density: SourceDensity::Uniform(1.0),
        target_density: TargetDensity::Uniform(source.area() / target.area()),
        exact: None,
    }
}

/// `f(x) = g(grad u(x)) * det(D^2 u(x))`.
pub fn derived_f(exact: ExactReflector, g: TargetDensity, x: Point) -> Result<f64> {
    let u = exact.jet(x);
    let gy = g.value(u.grad);
    if gy <= 0.0 {
        return Err(Error::DomainViolation {
            value: gy,
            point: x,
            mapped: u.grad,
        });
    }
    Ok(gy * u.hess_det())
}

impl ProblemSpec {
    pub fn exact_u(&self, x: Point) -> Option<Jet2> {
        self.exact.map(|e| e.jet(x))
    }

    pub fn f(&self, x: Point) -> Result<f64> {
        match self.source_density {
            SourceDensity::Uniform(c) => Ok(c),
            SourceDensity::Derived => {
                let exact = self
                    .exact
                    .ok_or_else(|| Error::InvalidArgument("derived density without exact reflector".into()))?;
                derived_f(exact, self.target_density, x)
            }
        }
    }

    pub fn g(&self, y: Point) -> f64 {
        self.target_density.value(y)
    }

    pub fn g_jet(&self, y: Point) -> Jet2 {
        self.target_density.jet(y)
    }

    /// Penalty for a mapped boundary point `y`; zero exactly on the target
    /// boundary.
    pub fn boundary_penalty(&self, y: Point) -> f64 {
        self.boundary_penalty_with_grad(y).0
    }

    /// Penalty value and its gradient with respect to `y`.
    pub fn boundary_penalty_with_grad(&self, y: Point) -> (f64, [f64; 2]) {
        match self.target {
            DomainSpec::Disk { center, radius } => {
                let (dx, dy) = (y[0] - center[0], y[1] - center[1]);
                let r = dx.hypot(dy);
                let gap = r - radius;
                let grad = if r > 0.0 {
                    [2.0 * gap * dx / r, 2.0 * gap * dy / r]
                } else {
                    [0.0, 0.0]
                };
                (gap * gap, grad)
            }
            DomainSpec::Flower { amplitude, lobes } => {
                // |y - rho(a) (cos a, sin a)|^2 with a = atan2(y2, y1)
                let alpha = y[1].atan2(y[0]);
                let k = f64::from(lobes);
                let rho = 1.0 + amplitude * (k * alpha).cos();
                let (sa, ca) = alpha.sin_cos();
                let (ex, ey) = (y[0] - rho * ca, y[1] - rho * sa);
                let value = ex * ex + ey * ey;
                let r = y[0].hypot(y[1]);
                let grad = if r > 0.0 {
                    let gap = r - rho;
                    let d_alpha = 2.0 * gap * amplitude * k * (k * alpha).sin() / r;
                    [2.0 * gap * ca - d_alpha * sa, 2.0 * gap * sa + d_alpha * ca]
                } else {
                    [0.0, 0.0]
                };
                (value, grad)
            }
            DomainSpec::Square { center, half_side } => {
                let d = [y[0] - center[0], y[1] - center[1]];
                let ox = d[0].abs() - half_side;
                let oy = d[1].abs() - half_side;
                if ox <= 0.0 && oy <= 0.0 {
                    // inside: nearest edge
                    if ox >= oy {
                        (ox * ox, [2.0 * ox * d[0].signum(), 0.0])
                    } else {
                        (oy * oy, [0.0, 2.0 * oy * d[1].signum()])
                    }
                } else {
                    let (px, py) = (ox.max(0.0), oy.max(0.0));
                    (px * px + py * py, [2.0 * px * d[0].signum(), 2.0 * py * d[1].signum()])
                }
            }
        }
    }
}
