//! Run configuration and the single-seed training driver shared by the
//! command line and the test suites.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{image_nmae, ray_trace_network, target_image, BinnedImage, ErrorMap, Extent, NmaeProbe};
use crate::jet::Activation;
use crate::loss::{LossBreakdown, LossEvaluator, LossWeights};
use crate::network::{layer_spans, NetworkParams, DEFAULT_LAYER_SIZES};
use crate::optimize::{run_adam, run_lbfgs, AdamOptions, LbfgsOptions, RunRecord, TerminationReason};
use crate::problems::{make_problem, ProblemName, ProblemSpec};
use crate::sampling::SamplePlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Lbfgs,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lbfgs" | "l-bfgs" => Ok(OptimizerKind::Lbfgs),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::InvalidArgument(format!("unknown optimizer '{other}' (expected lbfgs or adam)"))),
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Lbfgs => "lbfgs",
            OptimizerKind::Adam => "adam",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LbfgsSettings {
    pub m_mem: usize,
    pub grad_tol: f64,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        let d = LbfgsOptions::default();
        LbfgsSettings {
            m_mem: d.m_mem,
            grad_tol: d.grad_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamSettings {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamSettings {
    fn default() -> Self {
        let d = AdamOptions::default();
        AdamSettings {
            lr: d.lr,
            beta1: d.beta1,
            beta2: d.beta2,
            eps: d.eps,
        }
    }
}

/// Everything that determines a training run apart from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemName,
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub n_interior: usize,
    pub n_boundary: usize,
    /// Seed of the collocation points; the network seed comes from `seeds`.
    pub sample_seed: u64,
    pub weights: LossWeights,
    pub optimizer: OptimizerKind,
    pub lbfgs: LbfgsSettings,
    pub adam: AdamSettings,
    pub timeout_s: f64,
    /// Zero means unlimited.
    pub max_iter: usize,
    pub seeds: Vec<u64>,
    /// Polar evaluation grid `[rows, cols]`.
    pub eval_grid: [usize; 2],
    /// Record the NMAE every this many iterations (0 disables; only for
    /// problems with an exact reflector).
    pub nmae_every: usize,
    /// Additionally record the NMAE at the first iteration reaching each of
    /// these optimizer times.
    pub nmae_at: Vec<f64>,
    pub n_rays: usize,
    /// Image bins `[rows, cols]`.
    pub image_bins: [usize; 2],
    pub supersample: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemName::A,
            layer_sizes: DEFAULT_LAYER_SIZES.to_vec(),
            activation: Activation::TanhSquared,
            n_interior: 2500,
            n_boundary: 500,
            sample_seed: 0,
            weights: LossWeights::default(),
            optimizer: OptimizerKind::Lbfgs,
            lbfgs: LbfgsSettings::default(),
            adam: AdamSettings::default(),
            timeout_s: 15.0,
            max_iter: 0,
            seeds: vec![0],
            eval_grid: [100, 100],
            nmae_every: 1,
            nmae_at: Vec::new(),
            n_rays: 1_000_000,
            image_bins: [100, 100],
            supersample: 4,
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl RunConfig {
    pub fn for_problem(problem: ProblemName) -> Self {
        RunConfig {
            problem,
            ..RunConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        layer_spans(&self.layer_sizes)?;
        let positive = [
            ("n_interior", self.n_interior),
            ("n_boundary", self.n_boundary),
            ("eval_grid rows", self.eval_grid[0]),
            ("eval_grid cols", self.eval_grid[1]),
            ("n_rays", self.n_rays),
            ("image_bins rows", self.image_bins[0]),
            ("image_bins cols", self.image_bins[1]),
            ("supersample", self.supersample),
            ("lbfgs.m_mem", self.lbfgs.m_mem),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if self.eval_grid[0] < 2 || self.eval_grid[1] < 2 {
            return Err(Error::InvalidArgument("eval_grid needs at least 2x2 points".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("seed list is empty".into()));
        }
        if self.timeout_s.is_nan() || self.timeout_s < 0.0 {
            return Err(Error::InvalidArgument(format!("timeout {} must be non-negative", self.timeout_s)));
        }
        let w = self.weights;
        if [w.alpha, w.beta, w.gamma].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("loss weights must be finite and non-negative".into()));
        }
        let a = self.adam;
        if !(a.lr > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.eps > 0.0) {
            return Err(Error::InvalidArgument("invalid adam settings".into()));
        }
        Ok(())
    }

    pub fn prob(&self) -> ProblemSpec {
        make_problem(self.problem)
    }

    /// Hidden depth and width; the width is that of the first hidden layer.
    pub fn depth_width(&self) -> (usize, usize) {
        let hidden = self.layer_sizes.len().saturating_sub(2);
        (hidden, self.layer_sizes.get(1).copied().unwrap_or(0))
    }

    /// Layer sizes for `depth` hidden layers of `width` neurons.
    pub fn hidden_layers(depth: usize, width: usize) -> Vec<usize> {
        let mut sizes = vec![2];
        sizes.extend(std::iter::repeat_n(width, depth));
        sizes.push(1);
        sizes
    }

    fn max_iter(&self) -> usize {
        if self.max_iter == 0 {
            usize::MAX
        } else {
            self.max_iter
        }
    }

    pub fn lbfgs_options(&self) -> LbfgsOptions {
        LbfgsOptions {
            m_mem: self.lbfgs.m_mem,
            timeout_s: self.timeout_s,
            max_iter: self.max_iter(),
            grad_tol: self.lbfgs.grad_tol,
        }
    }

    pub fn adam_options(&self) -> AdamOptions {
        AdamOptions {
            lr: self.adam.lr,
            beta1: self.adam.beta1,
            beta2: self.adam.beta2,
            eps: self.adam.eps,
            timeout_s: self.timeout_s,
            max_iter: self.max_iter(),
        }
    }
}

/// NMAE recorded at a requested optimizer time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub requested_s: f64,
    pub time_s: f64,
    pub iter: usize,
    pub nmae: f64,
}

/// Outcome of training one seed.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub params: NetworkParams,
    pub record: RunRecord,
    pub termination: TerminationReason,
    /// Wall time of the optimizer loop, monitors excluded.
    pub wall_time_s: f64,
    pub final_loss: LossBreakdown,
    /// Gauge-fixed NMAE on the evaluation grid (problems with an exact
    /// reflector only).
    pub final_nmae: Option<f64>,
    pub snapshots: Vec<Snapshot>,
}

impl SeedResult {
    pub fn iterations(&self) -> usize {
        self.record.last().map_or(0, |r| r.iter)
    }
}

/// Trains one network for `seed` under `cfg`.
pub fn run_seed(cfg: &RunConfig, seed: u64) -> Result<SeedResult> {
    cfg.validate()?;
    let prob = cfg.prob();
    let plan = SamplePlan::new(&prob.source, cfg.n_interior, cfg.n_boundary, cfg.sample_seed)?;
    let mut net = NetworkParams::init(&cfg.layer_sizes, seed)?;
    net.hidden_activation = cfg.activation;
    let mut objective = LossEvaluator::new(prob.clone(), &plan, cfg.weights, &cfg.layer_sizes, cfg.activation)?;

    let mut probe = match prob.exact {
        Some(_) => Some(NmaeProbe::new(&prob, &cfg.layer_sizes, cfg.activation, cfg.eval_grid[0], cfg.eval_grid[1])?),
        None => None,
    };
    let mut pending: Vec<f64> = cfg.nmae_at.clone();
    pending.sort_by(f64::total_cmp);
    let mut snapshots = Vec::new();
    let mut monitor = |iter: usize, time_s: f64, params: &[f64]| -> Option<f64> {
        let probe = probe.as_mut()?;
        let due = pending.first().is_some_and(|&t| time_s >= t);
        let periodic = cfg.nmae_every > 0 && iter.is_multiple_of(cfg.nmae_every);
        if !due && !periodic {
            return None;
        }
        let v = probe.nmae(params).ok()?;
        while pending.first().is_some_and(|&t| time_s >= t) {
            let requested_s = pending.remove(0);
            snapshots.push(Snapshot {
                requested_s,
                time_s,
                iter,
                nmae: v,
            });
        }
        Some(v)
    };

    let init = net.flatten();
    let (params, record, termination) = match cfg.optimizer {
        OptimizerKind::Lbfgs => run_lbfgs(&mut objective, &init, &cfg.lbfgs_options(), Some(&mut monitor))?,
        OptimizerKind::Adam => run_adam(&mut objective, &init, &cfg.adam_options(), Some(&mut monitor))?,
    };
    let last = *record.last().ok_or(Error::NonFinite("empty run record"))?;
    net.assign_flat(&params)?;
    let final_nmae = match probe.as_mut() {
        Some(p) => Some(p.nmae(&params)?),
        None => None,
    };
    Ok(SeedResult {
        seed,
        params: net,
        wall_time_s: last.time_s,
        final_loss: last.loss,
        record,
        termination,
        final_nmae,
        snapshots,
    })
}

/// Ray-traced and target images for a trained network and their NMAE.
#[derive(Debug, Clone)]
pub struct ImageEvaluation {
    pub traced: BinnedImage,
    pub target: BinnedImage,
    pub nmae: f64,
}

pub fn evaluate_image(net: &NetworkParams, prob: &ProblemSpec, n_rays: usize, bins: [usize; 2], supersample: usize) -> Result<ImageEvaluation> {
    let extent = Extent::for_target(&prob.target);
    let traced = ray_trace_network(net, prob, n_rays, bins[0], bins[1], extent)?;
    let target = target_image(prob, bins[0], bins[1], extent, supersample)?;
    let nmae = image_nmae(&traced, &target)?;
    Ok(ImageEvaluation { traced, target, nmae })
}

/// Headline metric of a trained network: gauge-fixed NMAE of `u` when the
/// exact reflector is known, ray-traced image NMAE otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Nmae(f64),
    ImageNmae(f64),
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Nmae(_) => "nmae",
            Metric::ImageNmae(_) => "image_nmae",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Metric::Nmae(v) | Metric::ImageNmae(v) => v,
        }
    }
}

/// Files written for one seed of `solve`.
#[derive(Debug, Clone)]
pub struct SeedArtifacts {
    pub dir: PathBuf,
    pub metric: Metric,
}

/// Trains `seed` and writes its run CSV, checkpoint, error map or images,
/// and a copy of the configuration into `dir`.
pub fn solve_seed_to_dir(cfg: &RunConfig, seed: u64, dir: &Path) -> Result<(SeedResult, SeedArtifacts)> {
    let result = run_seed(cfg, seed)?;
    std::fs::create_dir_all(dir)?;
    let file = |name: &str| std::fs::File::create(dir.join(name)).map(std::io::BufWriter::new);
    result.record.write_csv(file("run.csv")?)?;
    result.params.save(&dir.join("checkpoint.bin"))?;
    let prob = cfg.prob();
    let metric = if prob.exact.is_some() {
        let map = ErrorMap::compute(&result.params, &prob, cfg.eval_grid[0], cfg.eval_grid[1])?;
        map.write_csv(file("error_map.csv")?)?;
        map.write_pgm(file("error_map.pgm")?)?;
        Metric::Nmae(map.nmae)
    } else {
        let img = evaluate_image(&result.params, &prob, cfg.n_rays, cfg.image_bins, cfg.supersample)?;
        img.traced.write_csv(file("traced.csv")?)?;
        img.traced.write_pgm(file("traced.pgm")?)?;
        img.target.write_csv(file("target.csv")?)?;
        img.target.write_pgm(file("target.pgm")?)?;
        Metric::ImageNmae(img.nmae)
    };
    Ok((
        result,
        SeedArtifacts {
            dir: dir.to_path_buf(),
            metric,
        },
    ))
}

/// Mean and 95% confidence half-width (1.96 standard errors).
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}
