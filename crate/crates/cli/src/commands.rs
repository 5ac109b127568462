use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mapnet::evaluate::{image_nmae_in_support, Extent};
use mapnet::experiment::{
    evaluate_image, mean_ci95, median, solve_seed_to_dir, Metric, OptimizerKind, RunConfig, SeedResult,
};
use mapnet::{NetworkParams, ProblemName};
use serde::{Deserialize, Serialize};

use crate::config::{from_toml, parse_problem, to_toml};
use crate::error::{CliError, CliResult};

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub termination_reason: String,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub final_loss: f64,
}

impl SummaryRow {
    fn new(cfg: &RunConfig, result: &SeedResult, metric: Metric) -> Self {
        SummaryRow {
            problem: cfg.problem.to_string(),
            seed: result.seed,
            metric: metric.name().to_string(),
            value: metric.value(),
            termination_reason: result.termination.to_string(),
            iterations: result.iterations(),
            wall_time_s: result.wall_time_s,
            final_loss: result.final_loss.total,
        }
    }

    fn line(&self) -> String {
        format!(
            "problem={} seed={} {}={:.4e} termination={} iterations={} wall_time_s={:.2} loss={:.4e}",
            self.problem,
            self.seed,
            self.metric,
            self.value,
            self.termination_reason,
            self.iterations,
            self.wall_time_s,
            self.final_loss
        )
    }
}

fn write_config(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), to_toml(cfg)?)?;
    Ok(())
}

fn seed_dir(base: &Path, seed: u64) -> PathBuf {
    base.join(format!("seed_{seed}"))
}

/// Trains every configured seed and writes artifacts under
/// `output_dir/<problem>/`.
pub fn solve(cfg: &RunConfig) -> CliResult<Vec<SummaryRow>> {
    let base = cfg.output_dir.join(cfg.problem.to_string());
    write_config(cfg, &base)?;
    let mut rows = Vec::new();
    let mut summary = csv::Writer::from_path(base.join("summary.csv"))?;
    for &seed in &cfg.seeds {
        let dir = seed_dir(&base, seed);
        let (result, artifacts) = solve_seed_to_dir(cfg, seed, &dir)?;
        write_config(cfg, &dir)?;
        let row = SummaryRow::new(cfg, &result, artifacts.metric);
        println!("{}", row.line());
        summary.serialize(&row)?;
        summary.flush()?;
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    NInterior,
    NBoundary,
    Depth,
    Width,
    Optimizer,
}

impl std::str::FromStr for SweepAxis {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "n_interior" => Ok(SweepAxis::NInterior),
            "n_boundary" => Ok(SweepAxis::NBoundary),
            "depth" => Ok(SweepAxis::Depth),
            "width" => Ok(SweepAxis::Width),
            "optimizer" => Ok(SweepAxis::Optimizer),
            other => Err(CliError::Usage(format!(
                "unknown sweep axis '{other}' (expected n_interior, n_boundary, depth, width or optimizer)"
            ))),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::NInterior => "n_interior",
            SweepAxis::NBoundary => "n_boundary",
            SweepAxis::Depth => "depth",
            SweepAxis::Width => "width",
            SweepAxis::Optimizer => "optimizer",
        }
    }

    /// The config with this axis set to `value`.
    pub fn apply(self, base: &RunConfig, value: &str) -> CliResult<RunConfig> {
        let mut cfg = base.clone();
        let count = || {
            value
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("sweep value '{value}' is not a count")))
        };
        let (depth, width) = base.depth_width();
        match self {
            SweepAxis::NInterior => cfg.n_interior = count()?,
            SweepAxis::NBoundary => cfg.n_boundary = count()?,
            SweepAxis::Depth => cfg.layer_sizes = RunConfig::hidden_layers(count()?, width),
            SweepAxis::Width => cfg.layer_sizes = RunConfig::hidden_layers(depth, count()?),
            SweepAxis::Optimizer => cfg.optimizer = value.parse::<OptimizerKind>()?,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: String,
    pub seed: u64,
    pub final_nmae: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryRow {
    pub axis_value: String,
    pub n_seeds: usize,
    pub mean_nmae: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub median_nmae: f64,
    pub mean_wall_time_s: f64,
}

/// Runs every value of `axis` for every seed; each cell gets its own
/// directory under `output_dir/sweep_<axis>/`.
pub fn sweep(base: &RunConfig, axis: SweepAxis, values: &[String]) -> CliResult<Vec<SweepSummaryRow>> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let cells = values
        .iter()
        .map(|v| Ok((v.trim().to_string(), axis.apply(base, v)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let root = base.output_dir.join(format!("sweep_{}", axis.name()));
    write_config(base, &root)?;
    let mut tidy = csv::Writer::from_path(root.join("sweep.csv"))?;
    let mut summaries = Vec::new();
    for (value, cfg) in &cells {
        let cell_dir = root.join(format!("{}={}", axis.name(), value)).join(cfg.problem.to_string());
        write_config(cfg, &cell_dir)?;
        let mut nmaes = Vec::new();
        let mut times = Vec::new();
        for &seed in &cfg.seeds {
            let (result, artifacts) = solve_seed_to_dir(cfg, seed, &seed_dir(&cell_dir, seed))?;
            let row = SweepRow {
                axis_value: value.clone(),
                seed,
                final_nmae: artifacts.metric.value(),
                wall_time_s: result.wall_time_s,
            };
            println!(
                "{}={} seed={} nmae={:.4e} wall_time_s={:.2}",
                axis.name(),
                value,
                seed,
                row.final_nmae,
                row.wall_time_s
            );
            tidy.serialize(&row)?;
            tidy.flush()?;
            nmaes.push(row.final_nmae);
            times.push(row.wall_time_s);
        }
        let (mean, half) = mean_ci95(&nmaes);
        summaries.push(SweepSummaryRow {
            axis_value: value.clone(),
            n_seeds: nmaes.len(),
            mean_nmae: mean,
            ci95_low: mean - half,
            ci95_high: mean + half,
            median_nmae: median(&nmaes),
            mean_wall_time_s: mean_ci95(&times).0,
        });
    }
    let mut summary = csv::Writer::from_path(root.join("sweep_summary.csv"))?;
    for s in &summaries {
        println!(
            "{}={} mean_nmae={:.4e} ci95=[{:.4e}, {:.4e}] median={:.4e} n={}",
            axis.name(),
            s.axis_value,
            s.mean_nmae,
            s.ci95_low,
            s.ci95_high,
            s.median_nmae,
            s.n_seeds
        );
        summary.serialize(s)?;
    }
    summary.flush()?;
    Ok(summaries)
}

pub struct RaytraceArgs {
    pub checkpoint: PathBuf,
    pub problem: Option<String>,
    pub n_rays: usize,
    pub bins: [usize; 2],
    pub supersample: usize,
    pub output_dir: Option<PathBuf>,
}

/// Problem recorded next to a checkpoint by `solve`, if any.
fn checkpoint_problem(checkpoint: &Path) -> CliResult<Option<ProblemName>> {
    let Some(dir) = checkpoint.parent() else {
        return Ok(None);
    };
    let path = dir.join("config.toml");
    if !path.exists() {
        return Ok(None);
    }
    let cfg = from_toml(&fs::read_to_string(&path)?)?;
    Ok(Some(cfg.problem))
}

pub fn raytrace(args: &RaytraceArgs) -> CliResult<f64> {
    let net = NetworkParams::load(&args.checkpoint)?;
    let recorded = checkpoint_problem(&args.checkpoint)?;
    let problem = match (&args.problem, recorded) {
        (Some(p), Some(r)) => {
            let p = parse_problem(p)?;
            if p != r {
                return Err(CliError::Usage(format!(
                    "checkpoint {} was trained on problem {r}, not {p}",
                    args.checkpoint.display()
                )));
            }
            p
        }
        (Some(p), None) => parse_problem(p)?,
        (None, Some(r)) => r,
        (None, None) => return Err(CliError::Usage("--problem is required for this checkpoint".into())),
    };
    let prob = mapnet::make_problem(problem);
    let img = evaluate_image(&net, &prob, args.n_rays, args.bins, args.supersample)?;
    let out = args
        .output_dir
        .clone()
        .or_else(|| args.checkpoint.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    let file = |name: &str| File::create(out.join(name)).map(BufWriter::new);
    img.traced.write_csv(file("traced.csv")?)?;
    img.traced.write_pgm(file("traced.pgm")?)?;
    img.target.write_csv(file("target.csv")?)?;
    img.target.write_pgm(file("target.pgm")?)?;
    let in_support = image_nmae_in_support(&img.traced, &img.target)?;
    let extent = Extent::for_target(&prob.target);
    let mut w = file("image_nmae.txt")?;
    writeln!(w, "image_nmae={:e}", img.nmae)?;
    writeln!(w, "image_nmae_in_support={in_support:e}")?;
    writeln!(w, "overflow_rays={}", img.traced.overflow)?;
    println!(
        "problem={problem} rays={} bins={}x{} extent=[{}, {}]^2 image_nmae={:.4e} image_nmae_in_support={:.4e} overflow={}",
        args.n_rays, args.bins[0], args.bins[1], extent.x[0], extent.x[1], img.nmae, in_support, img.traced.overflow
    );
    Ok(img.nmae)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub problem: String,
    pub metric: String,
    pub n_seeds: usize,
    pub median: f64,
    pub mean: f64,
    pub ci95_half_width: f64,
    pub best: f64,
    pub worst: f64,
    pub mean_wall_time_s: f64,
}

fn find_summaries(dir: &Path, out: &mut Vec<PathBuf>) -> CliResult<()> {
    let mut entries = fs::read_dir(dir)?.collect::<Result<Vec<_>, _>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            find_summaries(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "summary.csv") {
            out.push(path);
        }
    }
    Ok(())
}

/// Collects every `summary.csv` below `dir` into one row per problem and
/// metric.
pub fn report(dir: &Path, out: Option<&Path>) -> CliResult<Vec<ReportRow>> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("{} is not a directory", dir.display())));
    }
    let mut files = Vec::new();
    find_summaries(dir, &mut files)?;
    if files.is_empty() {
        return Err(CliError::Usage(format!("no summary.csv found under {}", dir.display())));
    }
    let mut groups: BTreeMap<(String, String), Vec<SummaryRow>> = BTreeMap::new();
    for f in &files {
        let mut rdr = csv::Reader::from_path(f)?;
        for row in rdr.deserialize::<SummaryRow>() {
            let row = row?;
            groups.entry((row.problem.clone(), row.metric.clone())).or_default().push(row);
        }
    }
    let rows: Vec<ReportRow> = groups
        .into_iter()
        .map(|((problem, metric), rs)| {
            let vals: Vec<f64> = rs.iter().map(|r| r.value).collect();
            let times: Vec<f64> = rs.iter().map(|r| r.wall_time_s).collect();
            let (mean, half) = mean_ci95(&vals);
            ReportRow {
                problem,
                metric,
                n_seeds: vals.len(),
                median: median(&vals),
                mean,
                ci95_half_width: half,
                best: vals.iter().copied().fold(f64::INFINITY, f64::min),
                worst: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_wall_time_s: mean_ci95(&times).0,
            }
        })
        .collect();

    println!(
        "{:<8} {:<11} {:>5} {:>11} {:>11} {:>11} {:>11} {:>9}",
        "problem", "metric", "seeds", "median", "mean", "best", "worst", "time_s"
    );
    for r in &rows {
        println!(
            "{:<8} {:<11} {:>5} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>9.2}",
            r.problem, r.metric, r.n_seeds, r.median, r.mean, r.best, r.worst, r.mean_wall_time_s
        );
    }
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| dir.join("report.csv"));
    let mut w = csv::Writer::from_path(&out)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}
