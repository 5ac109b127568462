//! Error metrics against exact reflectors and ray-traced image comparison.

use std::io::Write;

use crate::backprop::{JetEngine, Order};
use crate::error::{Error, Result};
use crate::jet::{Activation, Jet2};
use crate::network::NetworkParams;
use crate::problems::ProblemSpec;
use crate::sampling::{boundary_points, eval_grid, DomainSpec, HaltonIter, Point, HALTON_DEFAULT_SKIP};

const BATCH: usize = 4096;

/// `mean |approx - exact| / mean |exact|`.
pub fn nmae(approx: &[f64], exact: &[f64]) -> Result<f64> {
    if approx.len() != exact.len() {
        return Err(Error::LengthMismatch {
            expected: exact.len(),
            actual: approx.len(),
        });
    }
    if exact.is_empty() {
        return Err(Error::InvalidArgument("nmae of empty vectors".into()));
    }
    let num: f64 = approx.iter().zip(exact).map(|(a, e)| (a - e).abs()).sum();
    let den: f64 = exact.iter().map(|e| e.abs()).sum();
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// Removes the additive constant: shifts `approx` by `-mean(approx - exact)`.
pub fn gauge_fix(approx: &[f64], exact: &[f64]) -> Vec<f64> {
    let n = approx.len().min(exact.len());
    if n == 0 {
        return approx.to_vec();
    }
    let shift = approx.iter().zip(exact).map(|(a, e)| a - e).sum::<f64>() / n as f64;
    approx.iter().map(|a| a - shift).collect()
}

/// Batched network evaluation over arbitrary point sets.
#[derive(Debug, Clone)]
pub struct BatchEval {
    engine: JetEngine,
}

impl BatchEval {
    pub fn new(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        Ok(BatchEval {
            engine: JetEngine::new(layer_sizes, activation)?,
        })
    }

    pub fn for_network(net: &NetworkParams) -> Result<Self> {
        Self::new(&net.layer_sizes, net.hidden_activation)
    }

    pub fn n_params(&self) -> usize {
        self.engine.n_params()
    }

    pub fn jets(&mut self, params: &[f64], points: &[Point], order: Order) -> Result<Vec<Jet2>> {
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(BATCH) {
            self.engine.forward(params, chunk, order)?;
            out.extend((0..chunk.len()).map(|k| self.engine.output_jet(k)));
        }
        Ok(out)
    }

    pub fn values(&mut self, params: &[f64], points: &[Point]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(BATCH) {
            let o = self.engine.forward(params, chunk, Order::Value)?;
            out.extend_from_slice(o);
        }
        Ok(out)
    }

    /// The mapping `grad u` at each point.
    pub fn gradients(&mut self, params: &[f64], points: &[Point]) -> Result<Vec<Point>> {
        Ok(self.jets(params, points, Order::First)?.into_iter().map(|j| j.grad).collect())
    }
}

/// Gauge-fixed NMAE of `u` against the exact reflector on a fixed grid,
/// cheap enough to run after every optimizer iteration.
#[derive(Debug, Clone)]
pub struct NmaeProbe {
    eval: BatchEval,
    grid: Vec<Point>,
    exact: Vec<f64>,
}

impl NmaeProbe {
    pub fn new(prob: &ProblemSpec, layer_sizes: &[usize], activation: Activation, rows: usize, cols: usize) -> Result<Self> {
        let grid = eval_grid(&prob.source, rows, cols)?;
        let exact = grid
            .iter()
            .map(|&x| prob.exact_u(x).map(|j| j.value))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::InvalidArgument(format!("problem {} has no exact reflector", prob.name)))?;
        Ok(NmaeProbe {
            eval: BatchEval::new(layer_sizes, activation)?,
            grid,
            exact,
        })
    }

    pub fn grid(&self) -> &[Point] {
        &self.grid
    }

    pub fn exact(&self) -> &[f64] {
        &self.exact
    }

    /// Gauge-fixed network values on the grid.
    pub fn fixed_values(&mut self, params: &[f64]) -> Result<Vec<f64>> {
        let u = self.eval.values(params, &self.grid)?;
        Ok(gauge_fix(&u, &self.exact))
    }

    pub fn nmae(&mut self, params: &[f64]) -> Result<f64> {
        let u = self.fixed_values(params)?;
        nmae(&u, &self.exact)
    }
}

/// Pointwise absolute error of the gauge-fixed reflector on the polar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    pub rows: usize,
    pub cols: usize,
    pub grid: Vec<Point>,
    pub abs_error: Vec<f64>,
    pub nmae: f64,
}

impl ErrorMap {
    pub fn compute(net: &NetworkParams, prob: &ProblemSpec, rows: usize, cols: usize) -> Result<Self> {
        let mut probe = NmaeProbe::new(prob, &net.layer_sizes, net.hidden_activation, rows, cols)?;
        let params = net.flatten();
        let u = probe.fixed_values(&params)?;
        let nmae = nmae(&u, &probe.exact)?;
        let abs_error = u.iter().zip(&probe.exact).map(|(a, e)| (a - e).abs()).collect();
        Ok(ErrorMap {
            rows,
            cols,
            grid: probe.grid,
            abs_error,
            nmae,
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_grid_csv(w, self.rows, self.cols, &self.abs_error)
    }

    pub fn write_pgm<W: Write>(&self, w: W) -> Result<()> {
        write_pgm16(w, self.rows, self.cols, &self.abs_error)
    }
}

/// Axis-aligned image window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Extent {
    /// `[-h, h]^2`.
    pub fn square(h: f64) -> Self {
        Extent { x: [-h, h], y: [-h, h] }
    }

    /// Window used for a problem's target images.
    pub fn for_target(target: &DomainSpec) -> Self {
        match target {
            DomainSpec::Flower { .. } => Extent::square(1.15),
            _ => Extent::square(1.05),
        }
    }

    pub fn width(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn height(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    /// `(row, col)` of the bin holding `p`; row 0 is the top edge.
    pub fn bin(&self, p: Point, rows: usize, cols: usize) -> Option<(usize, usize)> {
        if !(p[0] >= self.x[0] && p[0] <= self.x[1] && p[1] >= self.y[0] && p[1] <= self.y[1]) {
            return None;
        }
        let c = ((p[0] - self.x[0]) / self.width() * cols as f64) as usize;
        let r = ((self.y[1] - p[1]) / self.height() * rows as f64) as usize;
        Some((r.min(rows - 1), c.min(cols - 1)))
    }
}

/// Histogram over an extent, normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedImage {
    pub extent: Extent,
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `rows * cols`.
    pub mass: Vec<f64>,
    /// Integral of the intensity over the extent before normalization.
    pub raw_mass: f64,
    /// Rays that landed outside the extent.
    pub overflow: usize,
}

impl BinnedImage {
    fn from_raw(extent: Extent, rows: usize, cols: usize, mut mass: Vec<f64>, raw_mass: f64, overflow: usize) -> Self {
        let total: f64 = mass.iter().sum();
        if total > 0.0 {
            mass.iter_mut().for_each(|m| *m /= total);
        }
        BinnedImage {
            extent,
            rows,
            cols,
            mass,
            raw_mass,
            overflow,
        }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.mass[row * self.cols + col]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_grid_csv(w, self.rows, self.cols, &self.mass)
    }

    pub fn write_pgm<W: Write>(&self, w: W) -> Result<()> {
        write_pgm16(w, self.rows, self.cols, &self.mass)
    }
}

fn check_bins(rows: usize, cols: usize, extent: &Extent) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("image needs at least one bin".into()));
    }
    if !(extent.width() > 0.0 && extent.height() > 0.0) {
        return Err(Error::InvalidArgument("image extent is empty".into()));
    }
    Ok(())
}

/// Traces `n_rays` Halton rays from the source through `mapping` and bins
/// the landing points, each weighted by the source intensity.
///
/// `mapping` receives batches of source points and writes one image point
/// per source point.
pub fn ray_trace<M, F>(
    mut mapping: M,
    source: &DomainSpec,
    f: F,
    n_rays: usize,
    rows: usize,
    cols: usize,
    extent: Extent,
) -> Result<BinnedImage>
where
    M: FnMut(&[Point], &mut Vec<Point>) -> Result<()>,
    F: Fn(Point) -> Result<f64>,
{
    if n_rays == 0 {
        return Err(Error::InvalidArgument("ray_trace needs n_rays >= 1".into()));
    }
    check_bins(rows, cols, &extent)?;
    let mut mass = vec![0.0; rows * cols];
    let mut overflow = 0;
    let mut in_extent = 0.0;
    let mut seq = HaltonIter::new(source, HALTON_DEFAULT_SKIP);
    let mut src = Vec::with_capacity(BATCH);
    let mut dst = Vec::with_capacity(BATCH);
    let mut left = n_rays;
    while left > 0 {
        let n = left.min(BATCH);
        src.clear();
        src.extend(seq.by_ref().take(n));
        dst.clear();
        mapping(&src, &mut dst)?;
        if dst.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: dst.len(),
            });
        }
        for (x, y) in src.iter().zip(&dst) {
            let w = f(*x)?;
            match extent.bin(*y, rows, cols) {
                Some((r, c)) => {
                    mass[r * cols + c] += w;
                    in_extent += w;
                }
                None => overflow += 1,
            }
        }
        left -= n;
    }
    let raw = in_extent * source.area() / n_rays as f64;
    Ok(BinnedImage::from_raw(extent, rows, cols, mass, raw, overflow))
}

/// Ray traces the mapping `grad u` of a trained network.
pub fn ray_trace_network(net: &NetworkParams, prob: &ProblemSpec, n_rays: usize, rows: usize, cols: usize, extent: Extent) -> Result<BinnedImage> {
    let params = net.flatten();
    let mut eval = BatchEval::for_network(net)?;
    ray_trace(
        |xs, out| {
            out.extend(eval.gradients(&params, xs)?);
            Ok(())
        },
        &prob.source,
        |x| prob.f(x),
        n_rays,
        rows,
        cols,
        extent,
    )
}

/// Target intensity `g` restricted to the target domain, averaged over
/// `supersample^2` stratified sub-points per bin.
pub fn target_image(prob: &ProblemSpec, rows: usize, cols: usize, extent: Extent, supersample: usize) -> Result<BinnedImage> {
    if supersample == 0 {
        return Err(Error::InvalidArgument("supersample must be >= 1".into()));
    }
    check_bins(rows, cols, &extent)?;
    let bw = extent.width() / cols as f64;
    let bh = extent.height() / rows as f64;
    let s = supersample as f64;
    let mut mass = vec![0.0; rows * cols];
    for r in 0..rows {
        let top = extent.y[1] - r as f64 * bh;
        for c in 0..cols {
            let left = extent.x[0] + c as f64 * bw;
            let mut acc = 0.0;
            for i in 0..supersample {
                for j in 0..supersample {
                    let y = [left + (j as f64 + 0.5) / s * bw, top - (i as f64 + 0.5) / s * bh];
                    if prob.target.contains(y) {
                        acc += prob.g(y);
                    }
                }
            }
            mass[r * cols + c] = acc / (s * s);
        }
    }
    let raw = mass.iter().sum::<f64>() * bw * bh;
    Ok(BinnedImage::from_raw(extent, rows, cols, mass, raw, 0))
}

fn check_same_shape(a: &BinnedImage, b: &BinnedImage) -> Result<()> {
    if a.rows != b.rows || a.cols != b.cols || a.extent != b.extent {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} over {:?} vs {}x{} over {:?}",
            a.rows, a.cols, a.extent, b.rows, b.cols, b.extent
        )));
    }
    Ok(())
}

/// NMAE over all bin masses of the extent.
pub fn image_nmae(traced: &BinnedImage, target: &BinnedImage) -> Result<f64> {
    check_same_shape(traced, target)?;
    nmae(&traced.mass, &target.mass)
}

/// NMAE restricted to bins where the target has mass.
pub fn image_nmae_in_support(traced: &BinnedImage, target: &BinnedImage) -> Result<f64> {
    check_same_shape(traced, target)?;
    let (a, e): (Vec<f64>, Vec<f64>) = traced
        .mass
        .iter()
        .zip(&target.mass)
        .filter(|(_, &t)| t > 0.0)
        .map(|(&a, &t)| (a, t))
        .unzip();
    if e.is_empty() {
        return Err(Error::ZeroDenominator);
    }
    nmae(&a, &e)
}

/// Smallest Hessian trace and smallest Hessian eigenvalue over `points`.
pub fn convexity_audit(net: &NetworkParams, points: &[Point]) -> Result<(f64, f64)> {
    let mut eval = BatchEval::for_network(net)?;
    let jets = eval.jets(&net.flatten(), points, Order::Second)?;
    Ok(jets.iter().fold((f64::INFINITY, f64::INFINITY), |(t, e), j| {
        (t.min(j.hess_trace()), e.min(j.hess_eigenvalues().0))
    }))
}

/// Largest boundary penalty of the learned mapping over `m` equispaced
/// source boundary points.
pub fn transport_audit(net: &NetworkParams, prob: &ProblemSpec, m: usize) -> Result<f64> {
    let pts = boundary_points(&prob.source, m)?;
    let mut eval = BatchEval::for_network(net)?;
    let ys = eval.gradients(&net.flatten(), &pts)?;
    Ok(ys.iter().map(|&y| prob.boundary_penalty(y)).fold(0.0, f64::max))
}

/// `row,col,value` lines.
pub fn write_grid_csv<W: Write>(mut w: W, rows: usize, cols: usize, values: &[f64]) -> Result<()> {
    if values.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!("{} values for a {rows}x{cols} grid", values.len())));
    }
    writeln!(w, "row,col,value")?;
    for r in 0..rows {
        for c in 0..cols {
            writeln!(w, "{r},{c},{:e}", values[r * cols + c])?;
        }
    }
    Ok(())
}

/// Binary 16-bit greyscale PGM scaled so the largest value is white.
pub fn write_pgm16<W: Write>(mut w: W, rows: usize, cols: usize, values: &[f64]) -> Result<()> {
    if values.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!("{} values for a {rows}x{cols} grid", values.len())));
    }
    let max = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    write!(w, "P5\n{cols} {rows}\n65535\n")?;
    let mut buf = Vec::with_capacity(2 * values.len());
    for &v in values {
        let level = if max > 0.0 && v.is_finite() {
            (v.max(0.0) / max * 65535.0).round() as u16
        } else {
            0
        };
        buf.extend_from_slice(&level.to_be_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}
