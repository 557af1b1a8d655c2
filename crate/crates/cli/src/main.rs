//! Batch experiment runner for the stable-process heat-content numerics.
//!
//! Subcommands: `density`, `heat`, `perimeter`, `simulate`, `verify`.
//! Exit codes: 0 all checks pass, 1 check failures, 2 configuration or
//! numerical-infrastructure errors.

mod config;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use config::{FileConfig, Resolved};
use stable_heat::heat::{
    fractional_perimeter, fractional_perimeter_quadrature, heat_loss_limit, HeatLossEvaluator,
};
use stable_heat::sim::{decomposition_measures, refine_and_extrapolate, run_ensemble};
use stable_heat::stable::{cauchy_density, gaussian_density, QuadratureConfig, StableLaw};
use stable_heat::verify::{verify_theorem, VerifyConfig};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

const VERSION_STRING: &str = concat!("stable-heat ", env!("CARGO_PKG_VERSION"));

#[derive(Parser)]
#[command(name = "stable-heat", version, about = "stable-process heat content lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Stability index in (0, 2]
    #[arg(long)]
    alpha: Option<f64>,
    /// Domain interval as 'a,b'
    #[arg(long, value_parser = config::parse_interval_flag, allow_hyphen_values = true)]
    interval: Option<[f64; 2]>,
    /// Geometric time grid as 'start:ratio:count'
    #[arg(long = "t-grid", value_parser = config::parse_t_grid_flag)]
    t_grid: Option<config::GridSection>,
    /// Monte Carlo path count
    #[arg(long)]
    paths: Option<u64>,
    /// Step schedule as a comma list, e.g. '250,1000,4000'
    #[arg(long, value_parser = config::parse_steps_flag)]
    steps: Option<config::StepSchedule>,
    /// Stream seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// Config file (TOML); flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (0 = automatic)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Density table: x, machinery value, closed form (alpha in {1,2}), abs error
    Density {
        #[command(flatten)]
        common: CommonArgs,
        /// Evaluation grid as 'start:step:count'
        #[arg(long = "x-grid", value_parser = config::parse_x_grid_flag, allow_hyphen_values = true)]
        x_grid: Option<config::XGridSection>,
    },
    /// Heat-loss curve over the t-grid with its regime normalizer
    Heat {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fractional perimeter: closed form vs direct quadrature
    Perimeter {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo estimates of Q, L, r and the supremum mean over the t-grid
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Full theorem verification; writes a report and sets the exit code
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn resolve_common(common: &CommonArgs, x_grid: Option<config::XGridSection>) -> anyhow::Result<Resolved> {
    let file = match &common.config {
        Some(path) => Some(FileConfig::load(path)?),
        None => None,
    };
    let resolved = config::resolve(
        file,
        common.alpha,
        common.interval,
        common.t_grid.clone(),
        x_grid,
        common.paths,
        common.steps.clone().map(|s| s.0),
        common.seed,
        common.out.clone(),
        common.workers,
    )?;
    if resolved.workers > 0 {
        // ignore the error when a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(resolved.workers)
            .build_global();
    }
    std::fs::create_dir_all(&resolved.out)
        .with_context(|| format!("cannot create output directory {}", resolved.out))?;
    Ok(resolved)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Density { common, x_grid } => cmd_density(&resolve_common(&common, x_grid)?),
        Command::Heat { common } => cmd_heat(&resolve_common(&common, None)?),
        Command::Perimeter { common } => cmd_perimeter(&resolve_common(&common, None)?),
        Command::Simulate { common } => cmd_simulate(&resolve_common(&common, None)?),
        Command::Verify { common } => cmd_verify(&resolve_common(&common, None)?),
    }
}

/// Tight evaluation config for CLI tables.
fn cli_law(alpha: f64) -> anyhow::Result<StableLaw> {
    Ok(StableLaw::with_config(
        alpha,
        QuadratureConfig {
            tol_abs: 1e-10,
            ..QuadratureConfig::default()
        },
    )?)
}

fn write_output(resolved: &Resolved, name: &str, body: &str) -> anyhow::Result<PathBuf> {
    let path = PathBuf::from(&resolved.out).join(name);
    std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn cmd_density(resolved: &Resolved) -> anyhow::Result<bool> {
    let alpha = resolved.alpha;
    let law = cli_law(alpha)?;
    let grid = resolved
        .x_grid
        .clone()
        .unwrap_or(config::XGridSection {
            start: -20.0,
            step: 0.5,
            count: 81,
        });
    let mut csv = String::from("x,p1_alpha,closed_form_if_any,abs_err\n");
    for i in 0..grid.count {
        let x = grid.start + grid.step * i as f64;
        let p = law.density_numeric(x)?;
        let closed = if alpha == 1.0 {
            Some(cauchy_density(x))
        } else if alpha == 2.0 {
            Some(gaussian_density(x))
        } else {
            None
        };
        match closed {
            Some(c) => {
                let _ = writeln!(csv, "{x},{p},{c},{}", (p - c).abs());
            }
            None => {
                let _ = writeln!(csv, "{x},{p},,");
            }
        }
    }
    write_output(resolved, &format!("density_alpha{alpha}.csv"), &csv)?;
    Ok(true)
}

fn cmd_heat(resolved: &Resolved) -> anyhow::Result<bool> {
    let alpha = resolved.alpha;
    let interval = resolved.interval()?;
    let grid = resolved.t_grid()?;
    let law = cli_law(alpha)?;
    let evaluator = HeatLossEvaluator::new(law)?;
    let (norm, constant) = heat_loss_limit(alpha, &interval)?;
    let mut csv = String::from("t,H,H_over_normalizer,predicted_constant\n");
    for t in grid.values() {
        let h = evaluator.heat_loss(&interval, t)?;
        let _ = writeln!(csv, "{t},{h},{},{constant}", h / norm.eval(t));
    }
    write_output(resolved, &format!("heat_alpha{alpha}.csv"), &csv)?;
    Ok(true)
}

fn cmd_perimeter(resolved: &Resolved) -> anyhow::Result<bool> {
    let alpha = resolved.alpha;
    let interval = resolved.interval()?;
    let closed = fractional_perimeter(alpha, &interval)?;
    let numeric = fractional_perimeter_quadrature(alpha, &interval)?;
    let rel_err = ((numeric - closed) / closed).abs();
    let mut csv = String::from("alpha,length,closed_form,quadrature,rel_err\n");
    let _ = writeln!(
        csv,
        "{alpha},{},{closed},{numeric},{rel_err}",
        interval.length()
    );
    write_output(resolved, &format!("perimeter_alpha{alpha}.csv"), &csv)?;
    Ok(true)
}

fn cmd_simulate(resolved: &Resolved) -> anyhow::Result<bool> {
    let alpha = resolved.alpha;
    let interval = resolved.interval()?;
    let len = interval.length();
    let grid = resolved.t_grid()?;
    let ts = grid.values();
    let law = StableLaw::new(alpha)?;
    let steps = resolved.steps.clone();
    let n_levels = steps.len();
    let n_t = ts.len();

    // stats: per t and level the (q, l, r) triple, then the supremum mean on
    // the finest grid
    let n_stats = n_t * n_levels * 3 + 1;
    let ts_paths = ts.clone();
    let stats = run_ensemble(
        &law,
        resolved.paths,
        &steps,
        false,
        resolved.seed,
        n_stats,
        &[],
        move |path, out| {
            for (ti, &t) in ts_paths.iter().enumerate() {
                for (li, &(max, min)) in path.levels.iter().enumerate() {
                    let m = decomposition_measures(max, min, len, alpha, t);
                    let base = (ti * n_levels + li) * 3;
                    out[base] = m.q;
                    out[base + 1] = m.l;
                    out[base + 2] = m.r;
                }
            }
            out[n_t * n_levels * 3] = path.levels[n_levels - 1].0;
        },
    )?;

    let finest = steps[n_levels - 1];
    let sup_idx = n_t * n_levels * 3;
    let mut csv = String::from(
        "t,q_mc,q_se,q_extrapolated,l_mc,l_se,r_mc,r_se,sup_mean,sup_se,n_paths,n_steps,seed\n",
    );
    for (ti, &t) in ts.iter().enumerate() {
        let idx = |li: usize, which: usize| (ti * n_levels + li) * 3 + which;
        let q = stats.mean(idx(n_levels - 1, 0));
        let q_se = stats.std_error(idx(n_levels - 1, 0));
        let q_extrapolated = if n_levels >= 3 {
            let values: Vec<(u32, f64)> = steps
                .iter()
                .enumerate()
                .map(|(li, &s)| (s, stats.mean(idx(li, 0))))
                .collect();
            refine_and_extrapolate(&values)
                .map(|fit| fit.extrapolated)
                .unwrap_or(q)
        } else {
            q
        };
        let l = stats.mean(idx(n_levels - 1, 1));
        let l_se = stats.std_error(idx(n_levels - 1, 1));
        let r = stats.mean(idx(n_levels - 1, 2));
        let r_se = stats.std_error(idx(n_levels - 1, 2));
        let sup = stats.mean(sup_idx);
        let sup_se = stats.std_error(sup_idx);
        let _ = writeln!(
            csv,
            "{t},{q},{q_se},{q_extrapolated},{l},{l_se},{r},{r_se},{sup},{sup_se},{},{finest},{}",
            resolved.paths, resolved.seed
        );
    }
    write_output(resolved, &format!("simulate_alpha{alpha}.csv"), &csv)?;
    Ok(true)
}

fn cmd_verify(resolved: &Resolved) -> anyhow::Result<bool> {
    let alpha = resolved.alpha;
    let interval = resolved.interval()?;
    let cfg = VerifyConfig {
        alpha,
        interval,
        t_grid: resolved.t_grid()?,
        // alpha = 2 verifies through deterministic routes only
        mc: if alpha == 2.0 {
            None
        } else {
            Some(resolved.mc_budget())
        },
        tolerances: resolved.tolerances(),
    };
    let report = verify_theorem(&cfg)?;

    let mut body = String::new();
    let _ = writeln!(body, "version = {VERSION_STRING}");
    let _ = writeln!(body, "resolved config:");
    let _ = writeln!(
        body,
        "{}",
        toml::to_string(resolved).unwrap_or_else(|e| format!("<serialization error: {e}>"))
    );
    body.push_str(&report.render());
    write_output(resolved, &format!("verify_alpha{alpha}.report.txt"), &body)?;

    for check in &report.checks {
        println!(
            "check {}: {} (value {}, target {}, threshold {})",
            check.name,
            if check.passed { "PASS" } else { "FAIL" },
            check.value,
            check.target,
            check.threshold
        );
    }
    println!(
        "overall: {}",
        if report.all_passed() { "PASS" } else { "FAIL" }
    );
    Ok(report.all_passed())
}
