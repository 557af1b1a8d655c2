//! Monte Carlo engine: grid paths of the stable process with running
//! extremes, exit/survival measures for the spectral heat content, and the
//! supremum/infimum decomposition quantities.
//!
//! Reproducibility contract: each path owns a counter-based stream keyed by
//! `(seed, path index)`; paths are summed inside fixed-size blocks in path
//! order and blocks are merged in block order, so results are bit-identical
//! for any worker count.

use crate::error::{Error, Result};
use crate::heat::Interval;
use crate::stable::StableLaw;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Paths per reduction block.
const BLOCK_SIZE: u64 = 4096;

/// One simulated path on a uniform grid: terminal value, running extremes
/// over the observed points, and the grid size.
#[derive(Debug, Clone, Copy)]
pub struct PathSample {
    pub terminal: f64,
    pub running_max: f64,
    pub running_min: f64,
    pub n_steps: u32,
}

impl PathSample {
    /// Exit indicator for a path started at 0 inside `(lo, hi)`.
    pub fn exited(&self, lo: f64, hi: f64) -> bool {
        self.running_max >= hi || self.running_min <= lo
    }
}

/// Monte Carlo value with its sampling error.
#[derive(Debug, Clone, Copy)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub n_steps: u32,
}

/// Counter-based stream for one path: same seed, per-path stream index, so
/// draws are independent of scheduling and worker count.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Monte Carlo budget and stream seed.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub n_paths: u64,
    pub n_steps: u32,
    pub seed: u64,
    /// Refine per-step extremes by exact Brownian-bridge sampling
    /// (alpha = 2 only; ignored otherwise).
    pub bridge: bool,
}

impl McConfig {
    pub fn new(n_paths: u64, n_steps: u32, seed: u64) -> Self {
        Self {
            n_paths,
            n_steps,
            seed,
            bridge: false,
        }
    }

    pub fn with_bridge(mut self) -> Self {
        self.bridge = true;
        self
    }
}

/// Euler grid path: cumulative sums of i.i.d. stable increments scaled by
/// `(horizon/n_steps)^{1/alpha}`. With `bridge` set at alpha = 2, each step's
/// maximum and minimum are drawn from the exact Brownian-bridge extreme laws
/// (variance-2 scaling), which makes the marginal law of each running extreme
/// exact for any step count.
pub fn simulate_path<R: Rng + ?Sized>(
    law: &StableLaw,
    horizon: f64,
    n_steps: u32,
    bridge: bool,
    rng: &mut R,
) -> PathSample {
    debug_assert!(n_steps >= 1 && horizon > 0.0);
    let use_bridge = bridge && law.alpha() == 2.0;
    let dt = horizon / n_steps as f64;
    let scale = dt.powf(1.0 / law.alpha());
    let mut x = 0.0f64;
    let mut running_max = 0.0f64;
    let mut running_min = 0.0f64;
    for _ in 0..n_steps {
        let x_prev = x;
        x += scale * law.sample(rng);
        if use_bridge {
            // P(bridge max >= m) = exp(-(m-x0)(m-x1)/dt) for the variance-2t
            // kernel; invert with one uniform per extreme.
            let u = 1.0 - rng.random::<f64>();
            let v = 1.0 - rng.random::<f64>();
            let gap2 = (x - x_prev) * (x - x_prev);
            let step_max = 0.5 * (x_prev + x + (gap2 - 4.0 * dt * u.ln()).sqrt());
            let step_min = 0.5 * (x_prev + x - (gap2 - 4.0 * dt * v.ln()).sqrt());
            running_max = running_max.max(step_max);
            running_min = running_min.min(step_min);
        } else {
            running_max = running_max.max(x);
            running_min = running_min.min(x);
        }
    }
    debug_assert!(running_min <= 0.0 && running_max >= 0.0);
    debug_assert!(running_min <= x && x <= running_max);
    PathSample {
        terminal: x,
        running_max,
        running_min,
        n_steps,
    }
}

/// Running extremes of one path observed on several nested grids: level `k`
/// sees every `steps[last]/steps[k]`-th point of the same trajectory, which
/// is exactly a coarser Euler grid of the same path (common random numbers
/// by construction).
#[derive(Debug, Clone)]
pub struct NestedPath {
    pub terminal: f64,
    /// (running max, running min) per level, aligned with the step schedule.
    pub levels: Vec<(f64, f64)>,
}

/// Validated schedule of nested step counts (ascending, divisibility).
fn validate_schedule(steps: &[u32]) -> Result<()> {
    if steps.is_empty() {
        return Err(Error::InvalidConfig {
            message: "step schedule must be non-empty".into(),
        });
    }
    let finest = *steps.last().unwrap();
    for w in steps.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidConfig {
                message: format!("step schedule must be strictly increasing: {steps:?}"),
            });
        }
    }
    for &s in steps {
        if s == 0 || finest % s != 0 {
            return Err(Error::InvalidConfig {
                message: format!("every level must divide the finest grid: {steps:?}"),
            });
        }
    }
    Ok(())
}

fn simulate_nested<R: Rng + ?Sized>(
    law: &StableLaw,
    horizon: f64,
    steps: &[u32],
    rng: &mut R,
) -> NestedPath {
    let finest = *steps.last().unwrap();
    let dt = horizon / finest as f64;
    let scale = dt.powf(1.0 / law.alpha());
    let strides: Vec<u32> = steps.iter().map(|&s| finest / s).collect();
    let mut levels = vec![(0.0f64, 0.0f64); steps.len()];
    let mut x = 0.0f64;
    for i in 1..=finest {
        x += scale * law.sample(rng);
        for (level, &stride) in levels.iter_mut().zip(&strides) {
            if i % stride == 0 {
                level.0 = level.0.max(x);
                level.1 = level.1.min(x);
            }
        }
    }
    NestedPath {
        terminal: x,
        levels,
    }
}

/// What the engine accumulates: per-statistic sums and squared sums, plus
/// selected cross-products for covariance-aware combinations.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub n_paths: u64,
    pub n_steps: u32,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
    pub cross_pairs: Vec<(usize, usize)>,
    pub cross_sum: Vec<f64>,
}

impl EnsembleStats {
    pub fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.n_paths as f64
    }

    /// Standard error of the mean: sample standard deviation / sqrt(n).
    pub fn std_error(&self, i: usize) -> f64 {
        let n = self.n_paths as f64;
        let mean = self.mean(i);
        let var = (self.sum_sq[i] / n - mean * mean).max(0.0);
        (var / n).sqrt()
    }

    /// Sample covariance of per-path statistics for a declared pair.
    pub fn covariance(&self, pair: usize) -> f64 {
        let (i, j) = self.cross_pairs[pair];
        let n = self.n_paths as f64;
        self.cross_sum[pair] / n - self.mean(i) * self.mean(j)
    }

    pub fn estimate(&self, i: usize) -> MCEstimate {
        MCEstimate {
            value: self.mean(i),
            std_error: self.std_error(i),
            n_paths: self.n_paths,
            n_steps: self.n_steps,
        }
    }
}

#[derive(Clone)]
struct BlockPartial {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    cross: Vec<f64>,
}

/// Runs `n_paths` nested paths at horizon 1 (the standardized ensemble of
/// the scaling reduction) and folds `per_path` statistics deterministically.
///
/// `bridge` requests exact per-step extremes (alpha = 2, single level only).
pub fn run_ensemble<F>(
    law: &StableLaw,
    n_paths: u64,
    steps: &[u32],
    bridge: bool,
    seed: u64,
    n_stats: usize,
    cross_pairs: &[(usize, usize)],
    per_path: F,
) -> Result<EnsembleStats>
where
    F: Fn(&NestedPath, &mut [f64]) + Sync,
{
    validate_schedule(steps)?;
    if n_paths == 0 {
        return Err(Error::InvalidConfig {
            message: "n_paths must be positive".into(),
        });
    }
    if bridge && (steps.len() != 1 || law.alpha() != 2.0) {
        return Err(Error::InvalidConfig {
            message: "bridge refinement requires alpha = 2 and a single level".into(),
        });
    }
    let n_blocks = n_paths.div_ceil(BLOCK_SIZE);
    let partials: Vec<BlockPartial> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let mut acc = BlockPartial {
                sum: vec![0.0; n_stats],
                sum_sq: vec![0.0; n_stats],
                cross: vec![0.0; cross_pairs.len()],
            };
            let mut stats = vec![0.0f64; n_stats];
            let lo = block * BLOCK_SIZE;
            let hi = ((block + 1) * BLOCK_SIZE).min(n_paths);
            for path_index in lo..hi {
                let mut rng = path_rng(seed, path_index);
                let path = if bridge {
                    let p = simulate_path(law, 1.0, steps[0], true, &mut rng);
                    NestedPath {
                        terminal: p.terminal,
                        levels: vec![(p.running_max, p.running_min)],
                    }
                } else {
                    simulate_nested(law, 1.0, steps, &mut rng)
                };
                stats.fill(0.0);
                per_path(&path, &mut stats);
                for (i, &s) in stats.iter().enumerate() {
                    acc.sum[i] += s;
                    acc.sum_sq[i] += s * s;
                }
                for (k, &(i, j)) in cross_pairs.iter().enumerate() {
                    acc.cross[k] += stats[i] * stats[j];
                }
            }
            acc
        })
        .collect();

    let mut stats = EnsembleStats {
        n_paths,
        n_steps: *steps.last().unwrap(),
        sum: vec![0.0; n_stats],
        sum_sq: vec![0.0; n_stats],
        cross_pairs: cross_pairs.to_vec(),
        cross_sum: vec![0.0; cross_pairs.len()],
    };
    for p in partials {
        for i in 0..n_stats {
            stats.sum[i] += p.sum[i];
            stats.sum_sq[i] += p.sum_sq[i];
        }
        for k in 0..cross_pairs.len() {
            stats.cross_sum[k] += p.cross[k];
        }
    }
    Ok(stats)
}

/// Per-path measures of the supremum/infimum decomposition of the heat
/// content, all derived from one standardized path at horizon 1 and the
/// window `M = |Omega| t^{-1/alpha}`:
///
/// * `q`: Lebesgue measure of starting points x in Omega whose shifted path
///   stays inside, `(|Omega| - t^{1/alpha} range)_+`;
/// * `l`: symmetrized clipped extreme `0.5 (min(max, M) + min(-min, M))`,
///   whose mean estimates `int_0^M P(u <= sup X) du`;
/// * `r`: overlap measure `|[0,M] cap [M + min, max]|` for the two-sided
///   exit correction.
///
/// These satisfy `q = |Omega| - 2 t^{1/alpha} l + t^{1/alpha} r` identically.
#[derive(Debug, Clone, Copy)]
pub struct DecompositionMeasures {
    pub q: f64,
    pub l: f64,
    pub r: f64,
}

pub fn decomposition_measures(
    running_max: f64,
    running_min: f64,
    length: f64,
    alpha: f64,
    t: f64,
) -> DecompositionMeasures {
    let scale = t.powf(1.0 / alpha);
    let window = length / scale;
    let q = scale * (window - (running_max - running_min)).max(0.0);
    let clipped_max = running_max.min(window);
    let clipped_min = (-running_min).min(window);
    let l = 0.5 * (clipped_max + clipped_min);
    let r = (running_max.min(window) - (window + running_min).max(0.0)).max(0.0);
    DecompositionMeasures { q, l, r }
}

/// Spectral heat content `Q(t) = int_Omega P^x(tau > t) dx` by Monte Carlo:
/// one standardized ensemble at horizon 1, the x-integral evaluated exactly
/// per path as the surviving-start measure.
pub fn estimate_q(
    law: &StableLaw,
    interval: &Interval,
    t: f64,
    cfg: &McConfig,
) -> Result<MCEstimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            message: "time must be positive",
            value: t,
        });
    }
    let len = interval.length();
    let alpha = law.alpha();
    let bridge = cfg.bridge && alpha == 2.0;
    let stats = run_ensemble(
        law,
        cfg.n_paths,
        &[cfg.n_steps],
        bridge,
        cfg.seed,
        1,
        &[],
        |path, out| {
            let (max, min) = path.levels[0];
            out[0] = decomposition_measures(max, min, len, alpha, t).q;
        },
    )?;
    Ok(stats.estimate(0))
}

/// `L(t) = int_0^{|Omega| t^{-1/alpha}} P(u <= sup_{[0,1]} X) du` by the
/// per-path clipped-extreme measure (no u-quadrature).
pub fn estimate_l(
    law: &StableLaw,
    interval: &Interval,
    t: f64,
    cfg: &McConfig,
) -> Result<MCEstimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            message: "time must be positive",
            value: t,
        });
    }
    let len = interval.length();
    let alpha = law.alpha();
    let bridge = cfg.bridge && alpha == 2.0;
    let stats = run_ensemble(
        law,
        cfg.n_paths,
        &[cfg.n_steps],
        bridge,
        cfg.seed,
        1,
        &[],
        |path, out| {
            let (max, min) = path.levels[0];
            out[0] = decomposition_measures(max, min, len, alpha, t).l;
        },
    )?;
    Ok(stats.estimate(0))
}

/// `r(t) = int_0^{M} P(u <= sup X, inf X <= u - M) du`, `M = |Omega| t^{-1/alpha}`,
/// by the per-path overlap measure.
pub fn estimate_r(
    law: &StableLaw,
    interval: &Interval,
    t: f64,
    cfg: &McConfig,
) -> Result<MCEstimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            message: "time must be positive",
            value: t,
        });
    }
    let len = interval.length();
    let alpha = law.alpha();
    let bridge = cfg.bridge && alpha == 2.0;
    let stats = run_ensemble(
        law,
        cfg.n_paths,
        &[cfg.n_steps],
        bridge,
        cfg.seed,
        1,
        &[],
        |path, out| {
            let (max, min) = path.levels[0];
            out[0] = decomposition_measures(max, min, len, alpha, t).r;
        },
    )?;
    Ok(stats.estimate(0))
}

/// Empirical tail `P(u <= sup_{[0,1]} X)` of the running maximum.
pub fn estimate_sup_tail(law: &StableLaw, u: f64, cfg: &McConfig) -> Result<MCEstimate> {
    if !(u > 0.0) {
        return Err(Error::InvalidParameter {
            name: "u",
            message: "threshold must be positive",
            value: u,
        });
    }
    let bridge = cfg.bridge && law.alpha() == 2.0;
    let stats = run_ensemble(
        law,
        cfg.n_paths,
        &[cfg.n_steps],
        bridge,
        cfg.seed,
        1,
        &[],
        |path, out| {
            out[0] = if path.levels[0].0 >= u { 1.0 } else { 0.0 };
        },
    )?;
    Ok(stats.estimate(0))
}

/// Sample mean of the running maximum at horizon 1 (`E sup X`), the
/// Theorem-constant ingredient for 1 < alpha < 2.
pub fn estimate_sup_mean(law: &StableLaw, cfg: &McConfig) -> Result<MCEstimate> {
    let bridge = cfg.bridge && law.alpha() == 2.0;
    let stats = run_ensemble(
        law,
        cfg.n_paths,
        &[cfg.n_steps],
        bridge,
        cfg.seed,
        1,
        &[],
        |path, out| {
            out[0] = path.levels[0].0;
        },
    )?;
    Ok(stats.estimate(0))
}

/// Fitted grid-bias model `value(n) = limit + coefficient * n^{-rate}`.
#[derive(Debug, Clone, Copy)]
pub struct BiasFit {
    pub extrapolated: f64,
    /// Std error of the extrapolated value (when covariances are available).
    pub std_error: f64,
    pub rate: f64,
    /// Signed bias remaining at the finest grid.
    pub finest_bias: f64,
    /// Worst prediction error on schedule points outside the fitting triple.
    pub residual: f64,
}

/// Power-law Richardson extrapolation over a geometric step schedule.
/// Requires at least 3 levels with a constant integer ratio; refuses to
/// extrapolate when the level differences are not monotone of one sign.
pub fn refine_and_extrapolate(values: &[(u32, f64)]) -> Result<BiasFit> {
    if values.len() < 3 {
        return Err(Error::FitFailure {
            message: format!("need >= 3 schedule points, got {}", values.len()),
        });
    }
    let ratio = values[1].0 as f64 / values[0].0 as f64;
    for w in values.windows(2) {
        let r = w[1].0 as f64 / w[0].0 as f64;
        if (r - ratio).abs() > 1e-9 {
            return Err(Error::FitFailure {
                message: format!("schedule is not geometric: {:?}", values),
            });
        }
    }
    let k = values.len();
    let (v1, v2, v3) = (values[k - 3].1, values[k - 2].1, values[k - 1].1);
    let d12 = v2 - v1;
    let d23 = v3 - v2;
    if d12 == 0.0 || d23 == 0.0 || d12.signum() != d23.signum() || d23.abs() >= d12.abs() {
        return Err(Error::FitFailure {
            message: format!(
                "level differences not monotone contracting: d12={d12:.3e}, d23={d23:.3e}"
            ),
        });
    }
    let rate = (d12 / d23).ln() / ratio.ln();
    let extrapolated = v3 + d23 / (ratio.powf(rate) - 1.0);
    // with more than 3 points, check the model against the unused ones
    let mut residual = 0.0f64;
    let c = (v3 - extrapolated) * (values[k - 1].0 as f64).powf(rate);
    for &(n, v) in &values[..k - 3] {
        let pred = extrapolated + c * (n as f64).powf(-rate);
        residual = residual.max((pred - v).abs());
    }
    Ok(BiasFit {
        extrapolated,
        std_error: f64::NAN,
        rate,
        finest_bias: v3 - extrapolated,
        residual,
    })
}

/// Q estimate with grid-bias extrapolation over a nested schedule: the
/// coarser levels observe the same trajectories, so the level differences
/// are common-random-number paired.
pub fn estimate_q_extrapolated(
    law: &StableLaw,
    interval: &Interval,
    t: f64,
    n_paths: u64,
    steps: &[u32],
    seed: u64,
) -> Result<(MCEstimate, BiasFit)> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            message: "time must be positive",
            value: t,
        });
    }
    let len = interval.length();
    let alpha = law.alpha();
    let n_levels = steps.len();
    let cross: Vec<(usize, usize)> = if n_levels >= 2 {
        vec![(n_levels - 1, n_levels - 2)]
    } else {
        vec![]
    };
    let stats = run_ensemble(
        law,
        n_paths,
        steps,
        false,
        seed,
        n_levels,
        &cross,
        |path, out| {
            for (k, &(max, min)) in path.levels.iter().enumerate() {
                out[k] = decomposition_measures(max, min, len, alpha, t).q;
            }
        },
    )?;
    let values: Vec<(u32, f64)> = steps
        .iter()
        .zip(0..n_levels)
        .map(|(&s, i)| (s, stats.mean(i)))
        .collect();
    let mut fit = refine_and_extrapolate(&values)?;
    // delta-method SE of v3 + beta (v3 - v2) at fixed fitted rate
    let ratio = steps[n_levels - 1] as f64 / steps[n_levels - 2] as f64;
    let beta = 1.0 / (ratio.powf(fit.rate) - 1.0);
    let n = stats.n_paths as f64;
    let var3 = stats.std_error(n_levels - 1).powi(2);
    let var2 = stats.std_error(n_levels - 2).powi(2);
    let cov = stats.covariance(0) / n;
    let var = ((1.0 + beta) * (1.0 + beta)) * var3 + beta * beta * var2
        - 2.0 * beta * (1.0 + beta) * cov;
    fit.std_error = var.max(0.0).sqrt();
    Ok((
        MCEstimate {
            value: fit.extrapolated,
            std_error: fit.std_error,
            n_paths,
            n_steps: *steps.last().unwrap(),
        },
        fit,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::spectral_q_bm_auto;
    use core::f64::consts::PI;

    #[test]
    fn path_invariants_hold() {
        let law = StableLaw::new(1.5).unwrap();
        let mut rng = path_rng(7, 0);
        for _ in 0..200 {
            let p = simulate_path(&law, 1.0, 64, false, &mut rng);
            assert!(p.running_min <= 0.0 && 0.0 <= p.running_max);
            assert!(p.running_min <= p.terminal && p.terminal <= p.running_max);
            assert!(p.running_max.is_finite());
        }
    }

    #[test]
    fn exit_indicator_matches_extremes() {
        let p = PathSample {
            terminal: 0.3,
            running_max: 0.9,
            running_min: -0.2,
            n_steps: 8,
        };
        assert!(!p.exited(-1.0, 1.0));
        assert!(p.exited(-1.0, 0.9));
        assert!(p.exited(-0.2, 2.0));
    }

    #[test]
    fn streams_are_counter_based() {
        let a = path_rng(42, 5).random::<u64>();
        let b = path_rng(42, 5).random::<u64>();
        let c = path_rng(42, 6).random::<u64>();
        let d = path_rng(43, 5).random::<u64>();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn ensemble_is_worker_count_invariant() {
        let law = StableLaw::new(1.5).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                run_ensemble(&law, 10_000, &[64], false, 99, 1, &[], |p, out| {
                    out[0] = p.levels[0].0;
                })
                .unwrap()
            })
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one.sum[0].to_bits(), four.sum[0].to_bits());
        assert_eq!(one.sum_sq[0].to_bits(), four.sum_sq[0].to_bits());
    }

    #[test]
    fn decomposition_identity_exact_per_path() {
        // q = |Omega| - 2 t^{1/alpha} l + t^{1/alpha} r, path by path
        for &alpha in &[0.5, 1.0, 1.5, 2.0] {
            let law = StableLaw::new(alpha).unwrap();
            let t = 3e-3f64;
            let scale = t.powf(1.0 / alpha);
            let mut worst = 0.0f64;
            for i in 0..2_000u64 {
                let mut rng = path_rng(11, i);
                let p = simulate_path(&law, 1.0, 256, false, &mut rng);
                let m = decomposition_measures(p.running_max, p.running_min, 1.0, alpha, t);
                let rhs = 1.0 - 2.0 * scale * m.l + scale * m.r;
                worst = worst.max((m.q - rhs).abs());
            }
            assert!(worst < 1e-12, "alpha={alpha}: worst {worst:.2e}");
        }
    }

    #[test]
    fn scaling_invariance_is_exact() {
        // Q_{(0,c)}(c^alpha t) = c * Q_{(0,1)}(t) on the same ensemble
        for &c in &[2.0f64, 0.5] {
            let alpha = 1.5f64;
            let law = StableLaw::new(alpha).unwrap();
            let t = 1e-2;
            let cfg = McConfig::new(20_000, 128, 4242);
            let unit = Interval::unit();
            let scaled = Interval::new(0.0, c).unwrap();
            let q_unit = estimate_q(&law, &unit, t, &cfg).unwrap();
            let q_scaled = estimate_q(&law, &scaled, c.powf(alpha) * t, &cfg).unwrap();
            assert!(
                (q_scaled.value - c * q_unit.value).abs() < 1e-12,
                "c={c}: {} vs {}",
                q_scaled.value,
                c * q_unit.value
            );
        }
    }

    #[test]
    fn q_estimate_respects_bounds_and_t_to_zero() {
        let law = StableLaw::new(1.0).unwrap();
        let unit = Interval::unit();
        let cfg = McConfig::new(20_000, 128, 5);
        let q_small = estimate_q(&law, &unit, 1e-10, &cfg).unwrap();
        assert!(q_small.value <= 1.0 + 3.0 * q_small.std_error);
        assert!(q_small.value > 0.999, "Q(1e-10) = {}", q_small.value);
        let q_big = estimate_q(&law, &unit, 10.0, &cfg).unwrap();
        assert!(q_big.value < 0.1);
        assert!(estimate_q(&law, &unit, 0.0, &cfg).is_err());
    }

    #[test]
    fn bridge_sup_mean_matches_reflection_value() {
        // E sup over [0,1] of the variance-2 Brownian motion is 2/sqrt(pi);
        // bridge sampling makes the estimator exact in law at any step count.
        let law = StableLaw::new(2.0).unwrap();
        let cfg = McConfig::new(200_000, 16, 2024).with_bridge();
        let est = estimate_sup_mean(&law, &cfg).unwrap();
        let expect = 2.0 / PI.sqrt();
        assert!(
            (est.value - expect).abs() < 3.0 * est.std_error,
            "{} vs {expect} (3se = {})",
            est.value,
            3.0 * est.std_error
        );
    }

    #[test]
    fn uncorrected_sup_mean_is_biased_low_and_refines_upward() {
        let law = StableLaw::new(2.0).unwrap();
        let expected = 2.0 / PI.sqrt();
        let mut prev = 0.0;
        for &steps in &[16u32, 64, 256] {
            let est = estimate_sup_mean(&law, &McConfig::new(100_000, steps, 7)).unwrap();
            assert!(est.value < expected, "steps={steps}: {}", est.value);
            assert!(est.value > prev, "bias must shrink with refinement");
            prev = est.value;
        }
    }

    #[test]
    fn bridge_sup_tail_matches_reflection_tail() {
        // P(1 <= sup X) = erfc(1/2) for the variance-2 Brownian motion
        let law = StableLaw::new(2.0).unwrap();
        let cfg = McConfig::new(200_000, 16, 60).with_bridge();
        let est = estimate_sup_tail(&law, 1.0, &cfg).unwrap();
        let expect = libm::erfc(0.5);
        assert!(
            (est.value - expect).abs() < 3.0 * est.std_error,
            "{} vs {expect}",
            est.value
        );
    }

    #[test]
    fn sup_tail_monotone_and_bounded() {
        let law = StableLaw::new(1.5).unwrap();
        let cfg = McConfig::new(50_000, 128, 31);
        let mut prev = 1.0;
        for &u in &[0.5, 1.0, 2.0, 4.0] {
            let est = estimate_sup_tail(&law, u, &cfg).unwrap();
            assert!(est.value <= prev + 3.0 * est.std_error);
            assert!((0.0..=1.0).contains(&est.value));
            prev = est.value;
        }
        assert!(estimate_sup_tail(&law, 0.0, &cfg).is_err());
    }

    #[test]
    fn sup_is_finite_in_law() {
        // empirical P(sup > M) -> 0 as M grows
        let law = StableLaw::new(0.5).unwrap();
        let cfg = McConfig::new(50_000, 128, 13);
        let p_small = estimate_sup_tail(&law, 10.0, &cfg).unwrap().value;
        let p_large = estimate_sup_tail(&law, 10_000.0, &cfg).unwrap().value;
        assert!(p_large < p_small);
        assert!(p_large < 0.01, "P(sup > 1e4) = {p_large}");
    }

    #[test]
    fn extrapolation_recovers_power_law() {
        // synthetic v(n) = 3 + 5 n^{-0.5}
        let vals: Vec<(u32, f64)> = [250u32, 1000, 4000]
            .iter()
            .map(|&n| (n, 3.0 + 5.0 * (n as f64).powf(-0.5)))
            .collect();
        let fit = refine_and_extrapolate(&vals).unwrap();
        assert!((fit.extrapolated - 3.0).abs() < 1e-9);
        assert!((fit.rate - 0.5).abs() < 1e-9);
    }

    #[test]
    fn extrapolation_rejects_bad_schedules() {
        assert!(refine_and_extrapolate(&[(100, 1.0), (200, 0.9)]).is_err());
        // non-geometric
        assert!(
            refine_and_extrapolate(&[(100, 1.0), (200, 0.9), (300, 0.85)]).is_err()
        );
        // non-monotone differences: refuse to extrapolate noise
        assert!(
            refine_and_extrapolate(&[(100, 1.0), (400, 1.1), (1600, 0.9)]).is_err()
        );
    }

    #[test]
    fn extrapolated_q_agrees_with_spectral_series() {
        let law = StableLaw::new(2.0).unwrap();
        let unit = Interval::unit();
        let t = 1e-2;
        let (est, fit) =
            estimate_q_extrapolated(&law, &unit, t, 50_000, &[64, 256, 1024], 314).unwrap();
        let exact = spectral_q_bm_auto(&unit, t).unwrap();
        assert!(
            (est.value - exact).abs() < 3.0 * est.std_error + fit.residual.max(1e-4),
            "{} vs {exact} (se {})",
            est.value,
            est.std_error
        );
        // grid under-detects exits, so finite-n values overestimate Q
        assert!(fit.finest_bias > 0.0);
    }

    #[test]
    fn r_measure_is_nonnegative_and_vanishes() {
        let law = StableLaw::new(1.5).unwrap();
        let unit = Interval::unit();
        let cfg = McConfig::new(20_000, 128, 17);
        let r1 = estimate_r(&law, &unit, 1e-1, &cfg).unwrap();
        let r2 = estimate_r(&law, &unit, 1e-3, &cfg).unwrap();
        assert!(r1.value >= 0.0 && r2.value >= 0.0);
        assert!(r2.value <= r1.value + 3.0 * (r1.std_error + r2.std_error));
        let r3 = estimate_r(&law, &unit, 1e-6, &cfg).unwrap();
        assert!(r3.value < 1e-3, "r(1e-6) = {}", r3.value);
    }
}
