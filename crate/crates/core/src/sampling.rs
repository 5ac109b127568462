//! Source/target domains and the point sets used for training and
//! evaluation: Poisson-disk interior points, evenly spaced boundary points,
//! evaluation grids and Halton sequences.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Candidates tried around each active sample.
const BRIDSON_CANDIDATES: usize = 30;
const POISSON_MAX_RETRIES: usize = 20;
/// Leading Halton terms dropped by default.
pub const HALTON_DEFAULT_SKIP: usize = 64;

/// A compact planar domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DomainSpec {
    Disk { center: Point, radius: f64 },
    Square { center: Point, half_side: f64 },
    /// Star-shaped set `r <= 1 + amplitude * cos(lobes * phi)` about the origin.
    Flower { amplitude: f64, lobes: u32 },
}

impl DomainSpec {
    pub const fn unit_disk() -> Self {
        DomainSpec::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        }
    }

    /// `[-1/2, 1/2]^2`.
    pub const fn unit_square() -> Self {
        DomainSpec::Square {
            center: [0.0, 0.0],
            half_side: 0.5,
        }
    }

    pub const fn flower() -> Self {
        DomainSpec::Flower {
            amplitude: 0.1,
            lobes: 10,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            DomainSpec::Disk { radius, .. } => PI * radius * radius,
            DomainSpec::Square { half_side, .. } => 4.0 * half_side * half_side,
            DomainSpec::Flower { amplitude, .. } => PI * (1.0 + 0.5 * amplitude * amplitude),
        }
    }

    /// Flower radius at polar angle `phi`.
    fn flower_radius(amplitude: f64, lobes: u32, phi: f64) -> f64 {
        1.0 + amplitude * (f64::from(lobes) * phi).cos()
    }

    /// Closed-set membership.
    pub fn contains(&self, x: Point) -> bool {
        match *self {
            DomainSpec::Disk { center, radius } => {
                (x[0] - center[0]).hypot(x[1] - center[1]) <= radius
            }
            DomainSpec::Square { center, half_side } => {
                (x[0] - center[0]).abs() <= half_side && (x[1] - center[1]).abs() <= half_side
            }
            DomainSpec::Flower { amplitude, lobes } => {
                x[0].hypot(x[1]) <= Self::flower_radius(amplitude, lobes, x[1].atan2(x[0]))
            }
        }
    }

    /// Open-set membership: inside and off the boundary.
    pub fn contains_strict(&self, x: Point) -> bool {
        match *self {
            DomainSpec::Disk { center, radius } => {
                (x[0] - center[0]).hypot(x[1] - center[1]) < radius
            }
            DomainSpec::Square { center, half_side } => {
                (x[0] - center[0]).abs() < half_side && (x[1] - center[1]).abs() < half_side
            }
            DomainSpec::Flower { amplitude, lobes } => {
                x[0].hypot(x[1]) < Self::flower_radius(amplitude, lobes, x[1].atan2(x[0]))
            }
        }
    }

    /// Point on the boundary at parameter `t` (periodic with period 1),
    /// traversed counter-clockwise. Disks and squares are parametrized by
    /// arc length starting from the point right of the center; the flower
    /// by polar angle `2 pi t`.
    pub fn boundary_param(&self, t: f64) -> Point {
        let t = t.rem_euclid(1.0);
        match *self {
            DomainSpec::Disk { center, radius } => {
                let (s, c) = (2.0 * PI * t).sin_cos();
                [center[0] + radius * c, center[1] + radius * s]
            }
            DomainSpec::Square { center, half_side } => {
                // Unit-speed walk over the perimeter 8h, starting at the
                // midpoint of the right edge.
                let h = half_side;
                let s = 8.0 * t;
                let (dx, dy) = if s < 1.0 {
                    (h, s * h)
                } else if s < 3.0 {
                    (h - (s - 1.0) * h, h)
                } else if s < 5.0 {
                    (-h, h - (s - 3.0) * h)
                } else if s < 7.0 {
                    (-h + (s - 5.0) * h, -h)
                } else {
                    (h, -h + (s - 7.0) * h)
                };
                [center[0] + dx, center[1] + dy]
            }
            DomainSpec::Flower { amplitude, lobes } => {
                let phi = 2.0 * PI * t;
                let r = Self::flower_radius(amplitude, lobes, phi);
                let (s, c) = phi.sin_cos();
                [r * c, r * s]
            }
        }
    }

    pub fn boundary_length(&self) -> f64 {
        match *self {
            DomainSpec::Disk { radius, .. } => 2.0 * PI * radius,
            DomainSpec::Square { half_side, .. } => 8.0 * half_side,
            DomainSpec::Flower { amplitude, lobes } => {
                // periodic trapezoid rule is spectrally accurate here
                let n = 20_000;
                let k = f64::from(lobes);
                (0..n)
                    .map(|i| {
                        let phi = 2.0 * PI * i as f64 / n as f64;
                        let r = Self::flower_radius(amplitude, lobes, phi);
                        let dr = -amplitude * k * (k * phi).sin();
                        r.hypot(dr)
                    })
                    .sum::<f64>()
                    * 2.0
                    * PI
                    / n as f64
            }
        }
    }

    /// Distance from `x` to the boundary (exact for disks and squares,
    /// radial for the flower).
    pub fn boundary_distance(&self, x: Point) -> f64 {
        match *self {
            DomainSpec::Disk { center, radius } => {
                ((x[0] - center[0]).hypot(x[1] - center[1]) - radius).abs()
            }
            DomainSpec::Square { center, half_side } => {
                let dx = (x[0] - center[0]).abs() - half_side;
                let dy = (x[1] - center[1]).abs() - half_side;
                if dx <= 0.0 && dy <= 0.0 {
                    (-dx).min(-dy)
                } else {
                    dx.max(0.0).hypot(dy.max(0.0))
                }
            }
            DomainSpec::Flower { amplitude, lobes } => {
                (x[0].hypot(x[1]) - Self::flower_radius(amplitude, lobes, x[1].atan2(x[0]))).abs()
            }
        }
    }

    /// `(min, max)` corners of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        match *self {
            DomainSpec::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            DomainSpec::Square { center, half_side } => (
                [center[0] - half_side, center[1] - half_side],
                [center[0] + half_side, center[1] + half_side],
            ),
            DomainSpec::Flower { amplitude, .. } => {
                let r = 1.0 + amplitude.abs();
                ([-r, -r], [r, r])
            }
        }
    }

    pub fn center(&self) -> Point {
        match *self {
            DomainSpec::Disk { center, .. } | DomainSpec::Square { center, .. } => center,
            DomainSpec::Flower { .. } => [0.0, 0.0],
        }
    }
}

/// Interior and boundary collocation points for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub interior: Vec<Point>,
    pub boundary: Vec<Point>,
    pub seed: u64,
    /// Minimum pairwise interior distance guaranteed by the sampler.
    pub poisson_radius: f64,
}

impl SamplePlan {
    pub fn new(domain: &DomainSpec, n_interior: usize, n_boundary: usize, seed: u64) -> Result<Self> {
        let PoissonSample { points, radius } = poisson_disk(domain, n_interior, seed)?;
        Ok(SamplePlan {
            interior: points,
            boundary: boundary_points(domain, n_boundary)?,
            seed,
            poisson_radius: radius,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSample {
    pub points: Vec<Point>,
    /// Final exclusion radius after any shrinking.
    pub radius: f64,
}

/// Exactly `n_target` blue-noise points strictly inside `domain` via
/// Bridson dart throwing.
pub fn poisson_disk(domain: &DomainSpec, n_target: usize, seed: u64) -> Result<PoissonSample> {
    if n_target == 0 {
        return Err(Error::InvalidArgument("poisson_disk needs n_target >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut radius = (2.0 * domain.area() / (3f64.sqrt() * n_target as f64)).sqrt();
    let mut best = 0;
    for _ in 0..=POISSON_MAX_RETRIES {
        let mut points = bridson(domain, radius, &mut rng);
        best = best.max(points.len());
        if points.len() >= n_target {
            // partial Fisher-Yates: uniform subset of size n_target
            for i in 0..n_target {
                let j = rng.random_range(i..points.len());
                points.swap(i, j);
            }
            points.truncate(n_target);
            return Ok(PoissonSample { points, radius });
        }
        radius *= 0.95;
    }
    Err(Error::SamplingFailed {
        retries: POISSON_MAX_RETRIES,
        best,
        target: n_target,
    })
}

fn bridson(domain: &DomainSpec, radius: f64, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let (lo, hi) = domain.bounding_box();
    let cell = radius / 2f64.sqrt();
    let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
    let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
    let mut grid: Vec<Option<usize>> = vec![None; nx * ny];
    let cell_of = |p: Point| {
        let i = (((p[0] - lo[0]) / cell) as usize).min(nx - 1);
        let j = (((p[1] - lo[1]) / cell) as usize).min(ny - 1);
        (i, j)
    };

    let mut points: Vec<Point> = Vec::new();
    let mut active: Vec<usize> = Vec::new();

    let first = loop {
        let p = [
            rng.random_range(lo[0]..hi[0]),
            rng.random_range(lo[1]..hi[1]),
        ];
        if domain.contains_strict(p) {
            break p;
        }
    };
    let (i, j) = cell_of(first);
    grid[j * nx + i] = Some(0);
    points.push(first);
    active.push(0);

    let r2 = radius * radius;
    while !active.is_empty() {
        let slot = rng.random_range(0..active.len());
        let base = points[active[slot]];
        let mut placed = false;
        for _ in 0..BRIDSON_CANDIDATES {
            // area-uniform in the annulus [r, 2r]
            let rho = (r2 + rng.random::<f64>() * 3.0 * r2).sqrt();
            let theta = rng.random::<f64>() * 2.0 * PI;
            let cand = [base[0] + rho * theta.cos(), base[1] + rho * theta.sin()];
            if !domain.contains_strict(cand) {
                continue;
            }
            let (ci, cj) = cell_of(cand);
            let mut ok = true;
            'scan: for gj in cj.saturating_sub(2)..(cj + 3).min(ny) {
                for gi in ci.saturating_sub(2)..(ci + 3).min(nx) {
                    if let Some(k) = grid[gj * nx + gi] {
                        let q = points[k];
                        let (dx, dy) = (q[0] - cand[0], q[1] - cand[1]);
                        if dx * dx + dy * dy < r2 {
                            ok = false;
                            break 'scan;
                        }
                    }
                }
            }
            if ok {
                grid[cj * nx + ci] = Some(points.len());
                active.push(points.len());
                points.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            active.swap_remove(slot);
        }
    }
    points
}

/// `m` boundary points at parameters `i / m`.
pub fn boundary_points(domain: &DomainSpec, m: usize) -> Result<Vec<Point>> {
    if m == 0 {
        return Err(Error::InvalidArgument("boundary_points needs m >= 1".into()));
    }
    Ok((0..m).map(|i| domain.boundary_param(i as f64 / m as f64)).collect())
}

/// Evaluation grid. Disks use a polar grid with radii `R * i / rows`,
/// `i = 1..=rows` (the center is excluded) and angles `2 pi j / cols`;
/// the flower uses the same grid scaled by its boundary radius; squares use
/// a tensor grid including the edges. Points are ordered radius-major
/// (row-major for squares).
pub fn eval_grid(domain: &DomainSpec, rows: usize, cols: usize) -> Result<Vec<Point>> {
    Ok(eval_grid_weighted(domain, rows, cols)?.0)
}

/// The evaluation grid together with quadrature weights, so that
/// `sum_k w_k h(x_k)` approximates the integral of `h` over the domain
/// (trapezoid rule in the radial/Cartesian direction).
pub fn eval_grid_weighted(domain: &DomainSpec, rows: usize, cols: usize) -> Result<(Vec<Point>, Vec<f64>)> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidArgument("eval grid needs rows, cols >= 2".into()));
    }
    let mut pts = Vec::with_capacity(rows * cols);
    let mut wts = Vec::with_capacity(rows * cols);
    match *domain {
        DomainSpec::Square { center, half_side } => {
            let h = half_side;
            let dx = 2.0 * h / (cols - 1) as f64;
            let dy = 2.0 * h / (rows - 1) as f64;
            let trap = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            for i in 0..rows {
                for j in 0..cols {
                    pts.push([center[0] - h + dx * j as f64, center[1] - h + dy * i as f64]);
                    wts.push(trap(i, rows) * trap(j, cols) * dx * dy);
                }
            }
        }
        DomainSpec::Disk { .. } | DomainSpec::Flower { .. } => {
            let ds = 1.0 / rows as f64;
            let dphi = 2.0 * PI / cols as f64;
            for i in 1..=rows {
                let s = i as f64 * ds;
                let trap = if i == rows { 0.5 } else { 1.0 };
                for j in 0..cols {
                    let phi = dphi * j as f64;
                    let (sn, cs) = phi.sin_cos();
                    let (c, scale) = match *domain {
                        DomainSpec::Disk { center, radius } => (center, radius),
                        DomainSpec::Flower { amplitude, lobes } => {
                            ([0.0, 0.0], DomainSpec::flower_radius(amplitude, lobes, phi))
                        }
                        DomainSpec::Square { .. } => unreachable!(),
                    };
                    let r = s * scale;
                    pts.push([c[0] + r * cs, c[1] + r * sn]);
                    wts.push(trap * s * ds * dphi * scale * scale);
                }
            }
        }
    }
    Ok((pts, wts))
}

/// Integral of `h` over the domain using a fine evaluation grid.
pub fn integrate(domain: &DomainSpec, resolution: usize, h: impl Fn(Point) -> f64) -> Result<f64> {
    let (pts, wts) = eval_grid_weighted(domain, resolution, resolution)?;
    Ok(pts.iter().zip(&wts).map(|(&p, &w)| w * h(p)).sum())
}

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut acc = 0.0;
    while index > 0 {
        acc += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    acc
}

/// Halton point with bases (2, 3); index 1 is the first point `(1/2, 1/3)`.
pub fn halton2(index: u64) -> Point {
    [radical_inverse(index, 2), radical_inverse(index, 3)]
}

/// `n` Halton points over the domain's bounding box, rejection-filtered by
/// domain membership, after discarding the first `skip` sequence terms.
pub fn halton_points(domain: &DomainSpec, n: usize, skip: usize) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::InvalidArgument("halton_points needs n >= 1".into()));
    }
    let mut out = Vec::with_capacity(n);
    let mut seq = HaltonIter::new(domain, skip);
    while out.len() < n {
        out.push(seq.next().unwrap());
    }
    Ok(out)
}

/// Endless stream of Halton points inside a domain.
#[derive(Debug, Clone)]
pub struct HaltonIter {
    domain: DomainSpec,
    lo: Point,
    size: Point,
    index: u64,
}

impl HaltonIter {
    pub fn new(domain: &DomainSpec, skip: usize) -> Self {
        let (lo, hi) = domain.bounding_box();
        HaltonIter {
            domain: *domain,
            lo,
            size: [hi[0] - lo[0], hi[1] - lo[1]],
            index: skip as u64,
        }
    }
}

impl Iterator for HaltonIter {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        loop {
            self.index += 1;
            let h = halton2(self.index);
            let p = [self.lo[0] + self.size[0] * h[0], self.lo[1] + self.size[1] * h[1]];
            if self.domain.contains(p) {
                return Some(p);
            }
        }
    }
}

/// Writes points as CSV with header `x1,x2`.
pub fn write_points_csv<W: Write>(mut out: W, points: &[Point]) -> Result<()> {
    writeln!(out, "x1,x2")?;
    for p in points {
        writeln!(out, "{},{}", p[0], p[1])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn min_pairwise(points: &[Point]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d = (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]);
                best = best.min(d);
            }
        }
        best
    }

    #[test]
    fn areas() {
        assert!((DomainSpec::unit_disk().area() - PI).abs() < 1e-15);
        assert_eq!(DomainSpec::unit_square().area(), 1.0);
        assert!((DomainSpec::flower().area() - PI * 1.005).abs() < 1e-14);
        // polar area integral of the flower
        let quad = integrate(&DomainSpec::flower(), 200, |_| 1.0).unwrap();
        assert!((quad - PI * 1.005).abs() < 1e-10);
    }

    #[test]
    fn boundary_param_lies_on_boundary() {
        for d in [DomainSpec::unit_disk(), DomainSpec::unit_square(), DomainSpec::flower()] {
            for i in 0..97 {
                let b = d.boundary_param(i as f64 / 97.0);
                assert!(d.boundary_distance(b) <= 1e-12, "{d:?} {b:?}");
                let c = d.center();
                let mid = [(b[0] + c[0]) / 2.0, (b[1] + c[1]) / 2.0];
                assert!(d.contains_strict(mid));
            }
            let a = d.boundary_param(0.25);
            let b = d.boundary_param(1.25);
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn flower_boundary_satisfies_definition() {
        let d = DomainSpec::flower();
        for p in boundary_points(&d, 500).unwrap() {
            let alpha = p[1].atan2(p[0]);
            let r = 1.0 + (10.0 * alpha).cos() / 10.0;
            assert!((p[0].hypot(p[1]) - r).abs() <= 1e-12);
        }
    }

    #[test]
    fn disk_boundary_four_points() {
        let pts = boundary_points(&DomainSpec::unit_disk(), 4).unwrap();
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (p, e) in pts.iter().zip(expect) {
            assert!((p[0] - e[0]).abs() < 1e-15 && (p[1] - e[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn square_boundary_eight_points() {
        let pts = boundary_points(&DomainSpec::unit_square(), 8).unwrap();
        let expect = [
            [0.5, 0.0],
            [0.5, 0.5],
            [0.0, 0.5],
            [-0.5, 0.5],
            [-0.5, 0.0],
            [-0.5, -0.5],
            [0.0, -0.5],
            [0.5, -0.5],
        ];
        for (p, e) in pts.iter().zip(expect) {
            assert!((p[0] - e[0]).abs() < 1e-15 && (p[1] - e[1]).abs() < 1e-15, "{p:?} vs {e:?}");
        }
        assert!(boundary_points(&DomainSpec::unit_square(), 0).is_err());
    }

    #[test]
    fn poisson_disk_unit_square() {
        let d = DomainSpec::unit_square();
        let s = poisson_disk(&d, 100, 3).unwrap();
        assert_eq!(s.points.len(), 100);
        assert!(s.points.iter().all(|&p| d.contains_strict(p)));
        assert!(min_pairwise(&s.points) >= s.radius);
    }

    #[test]
    fn poisson_disk_single_point() {
        for d in [DomainSpec::unit_disk(), DomainSpec::unit_square()] {
            let s = poisson_disk(&d, 1, 0).unwrap();
            assert_eq!(s.points.len(), 1);
            assert!(d.contains_strict(s.points[0]));
        }
        assert!(poisson_disk(&DomainSpec::unit_disk(), 0, 0).is_err());
    }

    #[test]
    fn poisson_disk_is_deterministic() {
        let d = DomainSpec::unit_disk();
        assert_eq!(poisson_disk(&d, 300, 5).unwrap(), poisson_disk(&d, 300, 5).unwrap());
        assert_ne!(
            poisson_disk(&d, 300, 5).unwrap().points,
            poisson_disk(&d, 300, 6).unwrap().points
        );
    }

    #[test]
    fn polar_grid_shape() {
        let g = eval_grid(&DomainSpec::unit_disk(), 100, 100).unwrap();
        assert_eq!(g.len(), 10_000);
        let rmax = g.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        assert!((rmax - 1.0).abs() < 1e-15);
        assert!(g.iter().all(|p| p[0].hypot(p[1]) > 0.0));
        assert!(g.iter().all(|&p| DomainSpec::unit_disk().contains(p)
            || DomainSpec::unit_disk().boundary_distance(p) < 1e-12));
    }

    #[test]
    fn square_grid_corners() {
        let g = eval_grid(&DomainSpec::unit_square(), 2, 2).unwrap();
        assert_eq!(g, vec![[-0.5, -0.5], [0.5, -0.5], [-0.5, 0.5], [0.5, 0.5]]);
        assert!(eval_grid(&DomainSpec::unit_square(), 1, 5).is_err());
    }

    #[test]
    fn grid_quadrature_of_smooth_functions() {
        let disk = DomainSpec::unit_disk();
        // integral of x^2 + y^2 over the unit disk is pi / 2
        let v = integrate(&disk, 100, |p| p[0] * p[0] + p[1] * p[1]).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-3);
        let sq = DomainSpec::unit_square();
        let v = integrate(&sq, 101, |p| (p[0] + 0.5) * (p[1] + 0.5)).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn halton_first_point() {
        assert_eq!(halton2(1), [0.5, 1.0 / 3.0]);
        let p = halton_points(&DomainSpec::unit_square(), 1, 0).unwrap();
        assert!((p[0][0] - 0.0).abs() < 1e-15);
        assert!((p[0][1] - (1.0 / 3.0 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn halton_in_disk() {
        let d = DomainSpec::unit_disk();
        let pts = halton_points(&d, 1000, HALTON_DEFAULT_SKIP).unwrap();
        assert_eq!(pts.len(), 1000);
        assert!(pts.iter().all(|&p| d.contains(p)));
        assert_eq!(pts, halton_points(&d, 1000, HALTON_DEFAULT_SKIP).unwrap());
    }

    /// Star discrepancy estimated over anchored boxes on a 64x64 lattice.
    fn star_discrepancy(points: &[Point]) -> f64 {
        let n = points.len() as f64;
        let mut worst: f64 = 0.0;
        for i in 1..=64 {
            for j in 1..=64 {
                let (a, b) = (i as f64 / 64.0, j as f64 / 64.0);
                let count = points.iter().filter(|p| p[0] < a && p[1] < b).count() as f64;
                worst = worst.max((count / n - a * b).abs());
            }
        }
        worst
    }

    #[test]
    fn halton_beats_pseudorandom_discrepancy() {
        let box01 = DomainSpec::Square {
            center: [0.5, 0.5],
            half_side: 0.5,
        };
        let halton = halton_points(&box01, 4096, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4096);
        let random: Vec<Point> = (0..4096).map(|_| [rng.random(), rng.random()]).collect();
        let (dh, dr) = (star_discrepancy(&halton), star_discrepancy(&random));
        assert!(dh < dr, "halton {dh} vs random {dr}");
    }

    #[test]
    fn points_csv() {
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &[[0.5, -1.0]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x1,x2\n0.5,-1\n");
    }
}
