//! Config files and command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use mapnet::experiment::{OptimizerKind, RunConfig};
use mapnet::ProblemName;

use crate::error::{CliError, CliResult};

/// Flags shared by `solve` and `sweep`. Each mirrors a config key and wins
/// over the value from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Problem name (A to E)
    #[arg(long)]
    pub problem: Option<String>,
    /// Comma-separated network seeds
    #[arg(long, alias = "seed", value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Comma-separated layer sizes, e.g. 2,32,32,32,1
    #[arg(long, value_delimiter = ',')]
    pub layer_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub n_interior: Option<usize>,
    #[arg(long)]
    pub n_boundary: Option<usize>,
    /// Seed of the collocation points
    #[arg(long)]
    pub sample_seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// lbfgs or adam
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub m_mem: Option<usize>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Optimizer time budget in seconds
    #[arg(long, alias = "timeout")]
    pub timeout_s: Option<f64>,
    /// Iteration cap (0 for none)
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Evaluation grid as ROWSxCOLS or N
    #[arg(long)]
    pub eval_grid: Option<String>,
    /// Record the NMAE every N iterations (0 disables)
    #[arg(long)]
    pub nmae_every: Option<usize>,
    #[arg(long)]
    pub n_rays: Option<usize>,
    /// Image bins as ROWSxCOLS or N
    #[arg(long)]
    pub image_bins: Option<String>,
    #[arg(long)]
    pub supersample: Option<usize>,
    #[arg(long, alias = "out")]
    pub output_dir: Option<PathBuf>,
}

/// Parses `ROWSxCOLS` or a single `N` meaning `NxN`.
pub fn parse_shape(s: &str) -> CliResult<[usize; 2]> {
    let bad = || CliError::Usage(format!("invalid grid shape '{s}' (expected ROWSxCOLS or N)"));
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<CliResult<Vec<_>>>()?;
    match nums.as_slice() {
        [n] => Ok([*n, *n]),
        [r, c] => Ok([*r, *c]),
        _ => Err(bad()),
    }
}

pub fn parse_problem(s: &str) -> CliResult<ProblemName> {
    Ok(s.parse::<ProblemName>()?)
}

/// Reads a config file. The second value tells whether the file set `seeds`.
pub fn load_config(path: &Path) -> CliResult<(RunConfig, bool)> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |source| CliError::ConfigParse {
        path: path.to_path_buf(),
        source,
    };
    let table: toml::Table = toml::from_str(&text).map_err(parse_err)?;
    let cfg: RunConfig = toml::from_str(&text).map_err(parse_err)?;
    Ok((cfg, table.contains_key("seeds")))
}

pub fn to_toml(cfg: &RunConfig) -> CliResult<String> {
    Ok(toml::to_string(cfg)?)
}

pub fn from_toml(text: &str) -> CliResult<RunConfig> {
    toml::from_str(text).map_err(|source| CliError::ConfigParse {
        path: PathBuf::from("<string>"),
        source,
    })
}

impl RunArgs {
    /// Defaults, then the config file, then flags. `default_seeds` applies
    /// when neither the file nor the flags name any seeds.
    pub fn resolve(&self, default_seeds: &[u64]) -> CliResult<RunConfig> {
        let (mut cfg, file_has_seeds) = match &self.config {
            Some(path) => load_config(path)?,
            None => (RunConfig::default(), false),
        };
        if !file_has_seeds {
            cfg.seeds = default_seeds.to_vec();
        }
        if let Some(p) = &self.problem {
            cfg.problem = parse_problem(p)?;
        }
        if let Some(v) = &self.seeds {
            cfg.seeds = v.clone();
        }
        if let Some(v) = &self.layer_sizes {
            cfg.layer_sizes = v.clone();
        }
        set(&mut cfg.n_interior, self.n_interior);
        set(&mut cfg.n_boundary, self.n_boundary);
        set(&mut cfg.sample_seed, self.sample_seed);
        set(&mut cfg.weights.alpha, self.alpha);
        set(&mut cfg.weights.beta, self.beta);
        set(&mut cfg.weights.gamma, self.gamma);
        if let Some(o) = &self.optimizer {
            cfg.optimizer = o.parse::<OptimizerKind>()?;
        }
        set(&mut cfg.lbfgs.m_mem, self.m_mem);
        set(&mut cfg.lbfgs.grad_tol, self.grad_tol);
        set(&mut cfg.adam.lr, self.lr);
        set(&mut cfg.timeout_s, self.timeout_s);
        set(&mut cfg.max_iter, self.max_iter);
        if let Some(s) = &self.eval_grid {
            cfg.eval_grid = parse_shape(s)?;
        }
        set(&mut cfg.nmae_every, self.nmae_every);
        set(&mut cfg.n_rays, self.n_rays);
        if let Some(s) = &self.image_bins {
            cfg.image_bins = parse_shape(s)?;
        }
        set(&mut cfg.supersample, self.supersample);
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}
