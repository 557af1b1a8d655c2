//! Experiment configuration: a plain TOML file (`key = value` with sections)
//! merged with command-line flags; flags win.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use stable_heat::heat::Interval;
use stable_heat::verify::{McBudget, TGrid, Tolerances};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    /// [a, b]
    pub interval: Option<[f64; 2]>,
    pub out: Option<String>,
    pub workers: Option<usize>,
    pub t_grid: Option<GridSection>,
    pub x_grid: Option<XGridSection>,
    pub mc: Option<McSection>,
    pub tolerances: Option<TolSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start: f64,
    pub ratio: f64,
    pub count: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XGridSection {
    pub start: f64,
    pub step: f64,
    pub count: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub steps: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSection {
    pub deterministic_rel: Option<f64>,
    pub quadrature_rel: Option<f64>,
    pub quadrature_rel_log: Option<f64>,
    pub mc_rel: Option<f64>,
    pub sigma_mult: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("cannot parse config {}", path.display()))
    }
}

/// Fully resolved experiment parameters (file values overridden by flags).
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub alpha: f64,
    pub interval: [f64; 2],
    pub out: String,
    pub workers: usize,
    pub t_grid: Option<GridSection>,
    pub x_grid: Option<XGridSection>,
    pub seed: u64,
    pub paths: u64,
    pub steps: Vec<u32>,
    pub tolerances: TolValues,
}

#[derive(Debug, Clone, Serialize)]
pub struct TolValues {
    pub deterministic_rel: f64,
    pub quadrature_rel: f64,
    pub quadrature_rel_log: f64,
    pub mc_rel: f64,
    pub sigma_mult: f64,
}

impl Resolved {
    pub fn interval(&self) -> anyhow::Result<Interval> {
        Ok(Interval::new(self.interval[0], self.interval[1])?)
    }

    pub fn t_grid(&self) -> anyhow::Result<TGrid> {
        let g = self
            .t_grid
            .as_ref()
            .context("a t-grid is required (--t-grid start:ratio:count or [t_grid] section)")?;
        Ok(TGrid::new(g.start, g.ratio, g.count)?)
    }

    pub fn mc_budget(&self) -> McBudget {
        McBudget {
            seed: self.seed,
            n_paths: self.paths,
            steps: self.steps.clone(),
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            deterministic_rel: self.tolerances.deterministic_rel,
            quadrature_rel: self.tolerances.quadrature_rel,
            quadrature_rel_log: self.tolerances.quadrature_rel_log,
            mc_rel: self.tolerances.mc_rel,
            sigma_mult: self.tolerances.sigma_mult,
        }
    }
}

pub fn parse_interval_flag(s: &str) -> anyhow::Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        bail!("--interval expects 'a,b', got '{s}'");
    }
    Ok([
        parts[0].trim().parse().context("interval lower bound")?,
        parts[1].trim().parse().context("interval upper bound")?,
    ])
}

pub fn parse_t_grid_flag(s: &str) -> anyhow::Result<GridSection> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("--t-grid expects 'start:ratio:count', got '{s}'");
    }
    Ok(GridSection {
        start: parts[0].trim().parse().context("t-grid start")?,
        ratio: parts[1].trim().parse().context("t-grid ratio")?,
        count: parts[2].trim().parse().context("t-grid count")?,
    })
}

pub fn parse_x_grid_flag(s: &str) -> anyhow::Result<XGridSection> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("--x-grid expects 'start:step:count', got '{s}'");
    }
    Ok(XGridSection {
        start: parts[0].trim().parse().context("x-grid start")?,
        step: parts[1].trim().parse().context("x-grid step")?,
        count: parts[2].trim().parse().context("x-grid count")?,
    })
}

/// Step schedule flag wrapper (keeps clap from treating the Vec as a
/// multi-occurrence argument).
#[derive(Debug, Clone)]
pub struct StepSchedule(pub Vec<u32>);

pub fn parse_steps_flag(s: &str) -> anyhow::Result<StepSchedule> {
    s.split(',')
        .map(|p| p.trim().parse::<u32>().context("steps schedule entry"))
        .collect::<anyhow::Result<Vec<u32>>>()
        .map(StepSchedule)
}

/// Merge the optional config file with flags (flags override file values).
#[allow(clippy::too_many_arguments)]
pub fn resolve(
    file: Option<FileConfig>,
    alpha: Option<f64>,
    interval: Option<[f64; 2]>,
    t_grid: Option<GridSection>,
    x_grid: Option<XGridSection>,
    paths: Option<u64>,
    steps: Option<Vec<u32>>,
    seed: Option<u64>,
    out: Option<String>,
    workers: Option<usize>,
) -> anyhow::Result<Resolved> {
    let file = file.unwrap_or_default();
    let alpha = alpha
        .or(file.alpha)
        .context("alpha is required (--alpha or config)")?;
    let interval = interval.or(file.interval).unwrap_or([0.0, 1.0]);
    let out = out.or(file.out).unwrap_or_else(|| ".".into());
    let workers = workers.or(file.workers).unwrap_or(0);
    let t_grid = t_grid.or(file.t_grid.clone());
    let x_grid = x_grid.or(file.x_grid.clone());
    let mc = file.mc.clone().unwrap_or(McSection {
        seed: None,
        paths: None,
        steps: None,
    });
    let seed = seed.or(mc.seed).unwrap_or(20_240_817);
    let paths = paths.or(mc.paths).unwrap_or(100_000);
    let steps = steps
        .or(mc.steps)
        .unwrap_or_else(|| vec![250, 1000, 4000]);
    let tol = file.tolerances.clone().unwrap_or_default();
    let defaults = Tolerances::default();
    Ok(Resolved {
        alpha,
        interval,
        out,
        workers,
        t_grid,
        x_grid,
        seed,
        paths,
        steps,
        tolerances: TolValues {
            deterministic_rel: tol.deterministic_rel.unwrap_or(defaults.deterministic_rel),
            quadrature_rel: tol.quadrature_rel.unwrap_or(defaults.quadrature_rel),
            quadrature_rel_log: tol
                .quadrature_rel_log
                .unwrap_or(defaults.quadrature_rel_log),
            mc_rel: tol.mc_rel.unwrap_or(defaults.mc_rel),
            sigma_mult: tol.sigma_mult.unwrap_or(defaults.sigma_mult),
        },
    })
}
