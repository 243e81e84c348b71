//! Monte Carlo strong-error experiments.
//!
//! One experiment fixes a problem, a mesh, a noise spectrum, and a list of
//! coarse step counts (`levels`). For every sample a fine noise path is
//! drawn, a reference trajectory is computed on `n_ref` steps, and each
//! scheme is run on every level with the block-aggregated increments of the
//! same path. The squared mass-norm distance to the reference at the shared
//! grid points, `Y_n = || X^n - X_ref(t_n) ||_H^2` for `n >= 2`, is
//! averaged over samples; the reported error at a level is
//! `max_n sqrt(mean Y_n)` with a normal-approximation confidence interval
//! evaluated at the maximizing step.
//!
//! Determinism: sample `i` draws from the stream keyed by `(seed, i)`,
//! samples are processed in fixed-size chunks whose results are folded in
//! sample order, and all per-sample arithmetic is identical regardless of
//! the rayon pool size. Repeated runs with the same config and seed are
//! bit-identical for any worker count (`SPDE_WORKERS`).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::SolverError;
use crate::fem::{Coeffs, FemSpace};
use crate::problems::SpdeProblem;
use crate::schemes::{initial_state, NewtonConfig, Scheme, Stepper, TemporalGrid};
use crate::wiener::{NodalEvaluator, NoiseSpec, WienerIncrements};

/// Which schemes an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeSelection {
    Bem,
    Bdf2,
    Both,
}

impl SchemeSelection {
    pub fn list(&self) -> Vec<Scheme> {
        match self {
            SchemeSelection::Bem => vec![Scheme::Bem],
            SchemeSelection::Bdf2 => vec![Scheme::Bdf2],
            SchemeSelection::Both => vec![Scheme::Bem, Scheme::Bdf2],
        }
    }
}

impl fmt::Display for SchemeSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeSelection::Bem => write!(f, "bem"),
            SchemeSelection::Bdf2 => write!(f, "bdf2"),
            SchemeSelection::Both => write!(f, "both"),
        }
    }
}

impl FromStr for SchemeSelection {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bem" => Ok(SchemeSelection::Bem),
            "bdf2" => Ok(SchemeSelection::Bdf2),
            "both" => Ok(SchemeSelection::Both),
            other => Err(SolverError::InvalidConfig {
                key: "scheme",
                reason: format!("unknown scheme selection `{other}`, expected bem, bdf2, or both"),
            }),
        }
    }
}

/// Full description of one convergence experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: SpdeProblem,
    pub sigma: f64,
    pub r: f64,
    pub eps: f64,
    pub n_h: usize,
    pub j_modes: usize,
    pub levels: Vec<usize>,
    pub n_ref: usize,
    pub samples: usize,
    pub seed: u64,
    pub alpha: f64,
    pub schemes: SchemeSelection,
    pub reference_scheme: Scheme,
    pub t_final: f64,
}

impl Default for ExperimentConfig {
    /// Desk-scale heat experiment: runs in seconds on a laptop while still
    /// showing the convergence behavior clearly.
    fn default() -> Self {
        Self {
            problem: SpdeProblem::Heat,
            sigma: 1.0,
            r: 1.0,
            eps: 1e-3,
            n_h: 256,
            j_modes: 256,
            levels: vec![32, 64, 128, 256, 512],
            n_ref: 4096,
            samples: 100,
            seed: 1,
            alpha: 0.05,
            schemes: SchemeSelection::Both,
            reference_scheme: Scheme::Bdf2,
            t_final: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec {
            j_modes: self.j_modes,
            r: self.r,
            eps: self.eps,
            sigma: self.sigma,
        }
    }

    /// Levels sorted ascending with duplicates removed; the row order of
    /// every report.
    pub fn normalized_levels(&self) -> Vec<usize> {
        let mut levels = self.levels.clone();
        levels.sort_unstable();
        levels.dedup();
        levels
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        FemSpace::new(self.n_h)?;
        self.noise_spec().validate()?;
        TemporalGrid::new(self.n_ref.max(2), self.t_final)?;
        if self.n_ref < 2 {
            return Err(SolverError::InvalidConfig {
                key: "nref",
                reason: format!("reference grid needs at least 2 steps, got {}", self.n_ref),
            });
        }
        let levels = self.normalized_levels();
        if levels.is_empty() {
            return Err(SolverError::InvalidConfig {
                key: "levels",
                reason: "need at least one level".into(),
            });
        }
        for &level in &levels {
            if level < 2 {
                return Err(SolverError::InvalidConfig {
                    key: "levels",
                    reason: format!("level {level} is too coarse; need at least 2 steps"),
                });
            }
            if level > self.n_ref || self.n_ref % level != 0 {
                return Err(SolverError::InvalidConfig {
                    key: "levels",
                    reason: format!(
                        "level {level} must divide the reference step count {}",
                        self.n_ref
                    ),
                });
            }
        }
        if self.samples < 2 {
            return Err(SolverError::InvalidConfig {
                key: "samples",
                reason: format!("need at least 2 samples for a variance estimate, got {}", self.samples),
            });
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SolverError::InvalidConfig {
                key: "alpha",
                reason: format!("confidence level must lie in (0, 1), got {}", self.alpha),
            });
        }
        Ok(())
    }
}

/// Result row for one `(scheme, level)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub scheme: Scheme,
    pub n_k: usize,
    /// `sqrt(max_n mean Y_n)`.
    pub error: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    /// The lower bound hit zero before taking the square root.
    pub ci_clipped: bool,
    /// Order estimate against the previous (coarser) level of the same
    /// scheme; `None` on the first level.
    pub eoc: Option<f64>,
    /// Coarse step index attaining the maximal mean squared error.
    pub argmax_step: usize,
    /// Wall-clock duration of the whole experiment; identical in every row.
    pub wall_seconds: f64,
}

/// All rows of one experiment, grouped by scheme, levels ascending.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub config: ExperimentConfig,
    pub rows: Vec<LevelResult>,
}

impl ErrorReport {
    pub fn scheme_rows(&self, scheme: Scheme) -> Vec<&LevelResult> {
        self.rows.iter().filter(|r| r.scheme == scheme).collect()
    }
}

/// Quantile of the standard normal distribution.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// Confidence bounds for the error `sqrt(mean Y)`: the normal interval for
/// the mean of `Y` is computed, clipped at zero if needed, and both ends
/// are mapped through the square root.
pub fn confidence_interval(mean_y: f64, var_y: f64, samples: usize, alpha: f64) -> (f64, f64, bool) {
    let z = normal_quantile(1.0 - alpha / 2.0);
    let half = z * (var_y / samples as f64).sqrt();
    let lo_sq = mean_y - half;
    let clipped = lo_sq < 0.0;
    let lo = if clipped { 0.0 } else { lo_sq.sqrt() };
    (lo, (mean_y + half).sqrt(), clipped)
}

/// Experimental order of convergence between two levels:
/// `ln(err / err_prev) / ln(k / k_prev)`.
pub fn eoc(err_prev: f64, k_prev: f64, err: f64, k: f64) -> f64 {
    (err / err_prev).ln() / (k / k_prev).ln()
}

/// Streams the reference trajectory of one sample and returns the states at
/// the requested fine step indices (strictly increasing). Exposed for
/// consistency tests; `run_experiment` uses the same code path.
pub fn compute_reference(
    config: &ExperimentConfig,
    sample_index: u64,
    fine_indices: &[usize],
) -> Result<Vec<Coeffs>, SolverError> {
    config.validate()?;
    if fine_indices.windows(2).any(|w| w[0] >= w[1])
        || fine_indices.last().is_some_and(|&i| i > config.n_ref)
    {
        return Err(SolverError::Shape {
            context: "compute_reference",
            detail: "fine step indices must be strictly increasing and at most n_ref".into(),
        });
    }
    let space = FemSpace::new(config.n_h)?;
    let noise = config.noise_spec();
    let evaluator = NodalEvaluator::new(&noise, &space);
    let mut slot_of = vec![usize::MAX; config.n_ref + 1];
    for (s, &fi) in fine_indices.iter().enumerate() {
        slot_of[fi] = s;
    }
    let ref_grid = TemporalGrid::new(config.n_ref, config.t_final)?;
    let w = sample_path(config, ref_grid.k(), sample_index);
    reference_snapshots(
        &space,
        config,
        &evaluator,
        ref_grid,
        w.as_ref(),
        &slot_of,
        fine_indices.len(),
    )
}

/// Convenience wrapper running a single `(scheme, level)` cell with the
/// experiment machinery.
pub fn strong_error(
    config: &ExperimentConfig,
    scheme: Scheme,
    level: usize,
) -> Result<LevelResult, SolverError> {
    let mut cfg = config.clone();
    cfg.levels = vec![level];
    cfg.schemes = match scheme {
        Scheme::Bem => SchemeSelection::Bem,
        Scheme::Bdf2 => SchemeSelection::Bdf2,
    };
    let report = run_experiment(&cfg)?;
    Ok(report.rows.into_iter().next().expect("one row"))
}

/// Samples processed per parallel dispatch; fixed so the accumulation
/// order never depends on the pool size.
const SAMPLE_CHUNK: usize = 32;

/// Worker override from the environment; unset means one worker per core.
fn worker_count() -> Result<usize, SolverError> {
    match std::env::var("SPDE_WORKERS") {
        Err(_) => Ok(0),
        Ok(raw) => match raw.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(SolverError::InvalidConfig {
                key: "SPDE_WORKERS",
                reason: format!("expected a positive integer worker count, got `{raw}`"),
            }),
        },
    }
}

/// Runs the full experiment and reports one row per `(scheme, level)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ErrorReport, SolverError> {
    config.validate()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| SolverError::InvalidConfig {
            key: "SPDE_WORKERS",
            reason: e.to_string(),
        })?;
    let mut rows = pool.install(|| run_inner(config))?;
    let wall = started.elapsed().as_secs_f64();
    for row in &mut rows {
        row.wall_seconds = wall;
    }
    Ok(ErrorReport {
        config: config.clone(),
        rows,
    })
}

struct LevelPlan {
    n_k: usize,
    factor: usize,
    grid: TemporalGrid,
}

/// Shared read-only context for one experiment.
struct ExpCtx<'a> {
    config: &'a ExperimentConfig,
    space: FemSpace,
    evaluator: NodalEvaluator,
    schemes: Vec<Scheme>,
    plans: Vec<LevelPlan>,
    ref_grid: TemporalGrid,
    slot_of: Vec<usize>,
    n_snapshots: usize,
    newton: NewtonConfig,
}

fn run_inner(config: &ExperimentConfig) -> Result<Vec<LevelResult>, SolverError> {
    let space = FemSpace::new(config.n_h)?;
    let noise = config.noise_spec();
    let evaluator = NodalEvaluator::new(&noise, &space);
    let schemes = config.schemes.list();
    let levels = config.normalized_levels();
    let plans: Vec<LevelPlan> = levels
        .iter()
        .map(|&n_k| {
            Ok(LevelPlan {
                n_k,
                factor: config.n_ref / n_k,
                grid: TemporalGrid::new(n_k, config.t_final)?,
            })
        })
        .collect::<Result<_, SolverError>>()?;
    let ref_grid = TemporalGrid::new(config.n_ref, config.t_final)?;

    // Union of the fine step indices any level compares against.
    let mut needed = vec![false; config.n_ref + 1];
    for plan in &plans {
        for n in 2..=plan.n_k {
            needed[n * plan.factor] = true;
        }
    }
    let mut slot_of = vec![usize::MAX; config.n_ref + 1];
    let mut n_snapshots = 0;
    for (idx, &flag) in needed.iter().enumerate() {
        if flag {
            slot_of[idx] = n_snapshots;
            n_snapshots += 1;
        }
    }

    let ctx = ExpCtx {
        config,
        space,
        evaluator,
        schemes,
        plans,
        ref_grid,
        slot_of,
        n_snapshots,
        newton: NewtonConfig::default(),
    };

    // Welford accumulators per (scheme, level, coarse step n >= 2).
    let mut accum: Vec<Vec<Vec<Welford>>> = ctx
        .schemes
        .iter()
        .map(|_| {
            ctx.plans
                .iter()
                .map(|p| vec![Welford::default(); p.n_k - 1])
                .collect()
        })
        .collect();

    let mut done = 0;
    while done < config.samples {
        let hi = (done + SAMPLE_CHUNK).min(config.samples);
        let chunk: Result<Vec<SampleYs>, SolverError> = (done..hi)
            .into_par_iter()
            .map(|s| sample_ys(&ctx, s as u64))
            .collect();
        for ys in chunk? {
            for (si, per_level) in ys.iter().enumerate() {
                for (li, values) in per_level.iter().enumerate() {
                    for (ni, &y) in values.iter().enumerate() {
                        accum[si][li][ni].push(y);
                    }
                }
            }
        }
        done = hi;
    }

    let mut rows = Vec::with_capacity(ctx.schemes.len() * ctx.plans.len());
    for (si, &scheme) in ctx.schemes.iter().enumerate() {
        let mut prev: Option<(f64, f64)> = None;
        for (li, plan) in ctx.plans.iter().enumerate() {
            let stats = &accum[si][li];
            let mut arg = 0;
            for (i, w) in stats.iter().enumerate() {
                if w.mean > stats[arg].mean {
                    arg = i;
                }
            }
            let mean = stats[arg].mean;
            if !mean.is_finite() {
                return Err(SolverError::NonFinite {
                    context: "mean squared error",
                });
            }
            let (ci_lower, ci_upper, ci_clipped) =
                confidence_interval(mean, stats[arg].variance(), config.samples, config.alpha);
            let error = mean.sqrt();
            let k = plan.grid.k();
            let eoc_val = prev.map(|(pe, pk)| eoc(pe, pk, error, k));
            rows.push(LevelResult {
                scheme,
                n_k: plan.n_k,
                error,
                ci_lower,
                ci_upper,
                ci_clipped,
                eoc: eoc_val,
                argmax_step: arg + 2,
                wall_seconds: 0.0,
            });
            prev = Some((error, k));
        }
    }
    Ok(rows)
}

/// `[scheme][level][n - 2] -> Y_n` for one sample.
type SampleYs = Vec<Vec<Vec<f64>>>;

fn sample_ys(ctx: &ExpCtx<'_>, sample_index: u64) -> Result<SampleYs, SolverError> {
    let w_fine = sample_path(ctx.config, ctx.ref_grid.k(), sample_index);
    let snapshots = reference_snapshots(
        &ctx.space,
        ctx.config,
        &ctx.evaluator,
        ctx.ref_grid,
        w_fine.as_ref(),
        &ctx.slot_of,
        ctx.n_snapshots,
    )?;

    let mut out: SampleYs = vec![Vec::with_capacity(ctx.plans.len()); ctx.schemes.len()];
    for plan in &ctx.plans {
        let w_level = match &w_fine {
            Some(w) => Some(w.aggregate(plan.factor)?),
            None => None,
        };
        for (si, &scheme) in ctx.schemes.iter().enumerate() {
            out[si].push(level_ys(ctx, plan, scheme, w_level.as_ref(), &snapshots)?);
        }
    }
    Ok(out)
}

/// Draws the fine-path increments, or `None` when the noise intensity is
/// zero (every scheme then sees exactly zero increments, so no Gaussians
/// are drawn at all).
fn sample_path(
    config: &ExperimentConfig,
    dt: f64,
    sample_index: u64,
) -> Option<WienerIncrements> {
    if config.sigma == 0.0 {
        None
    } else {
        Some(WienerIncrements::sample(
            config.j_modes,
            config.n_ref,
            dt,
            config.seed,
            sample_index,
        ))
    }
}

/// Streams the reference scheme over the fine grid, cloning the states
/// whose fine index has a snapshot slot.
fn reference_snapshots(
    space: &FemSpace,
    config: &ExperimentConfig,
    evaluator: &NodalEvaluator,
    ref_grid: TemporalGrid,
    w: Option<&WienerIncrements>,
    slot_of: &[usize],
    n_snapshots: usize,
) -> Result<Vec<Coeffs>, SolverError> {
    let n_h = space.n_h();
    let mut stepper = Stepper::new(
        space,
        config.problem,
        config.sigma,
        ref_grid.k(),
        NewtonConfig::default(),
    )?;
    let mut scratch = evaluator.make_scratch();
    let mut dw = vec![0.0; n_h];
    let mut dw_prev = vec![0.0; n_h];
    let mut snapshots: Vec<Coeffs> = Vec::with_capacity(n_snapshots);

    let keep = |idx: usize, state: &[f64], snaps: &mut Vec<Coeffs>| {
        if slot_of[idx] != usize::MAX {
            debug_assert_eq!(slot_of[idx], snaps.len());
            snaps.push(state.to_vec());
        }
    };

    let mut x_prev2 = initial_state(space);
    keep(0, &x_prev2, &mut snapshots);
    if let Some(w) = w {
        evaluator.increment_at_nodes(w, 0, &mut scratch, &mut dw);
    }
    let mut x_prev = stepper.bem_step(&x_prev2, &dw, 1)?;
    keep(1, &x_prev, &mut snapshots);
    for n in 2..=ref_grid.n_steps {
        if let Some(w) = w {
            std::mem::swap(&mut dw, &mut dw_prev);
            evaluator.increment_at_nodes(w, n - 1, &mut scratch, &mut dw);
        }
        let x = match config.reference_scheme {
            Scheme::Bem => stepper.bem_step(&x_prev, &dw, n)?,
            Scheme::Bdf2 => stepper.bdf2_step(&x_prev, &x_prev2, &dw, &dw_prev, n)?,
        };
        x_prev2 = std::mem::replace(&mut x_prev, x);
        keep(n, &x_prev, &mut snapshots);
    }
    debug_assert_eq!(snapshots.len(), n_snapshots);
    Ok(snapshots)
}

/// Runs one scheme on one level and returns `Y_n` for `n = 2..=n_k`.
fn level_ys(
    ctx: &ExpCtx<'_>,
    plan: &LevelPlan,
    scheme: Scheme,
    w: Option<&WienerIncrements>,
    snapshots: &[Coeffs],
) -> Result<Vec<f64>, SolverError> {
    let space = &ctx.space;
    let n_h = space.n_h();
    let mut stepper = Stepper::new(
        space,
        ctx.config.problem,
        ctx.config.sigma,
        plan.grid.k(),
        ctx.newton,
    )?;
    let mut scratch = ctx.evaluator.make_scratch();
    let mut dw = vec![0.0; n_h];
    let mut dw_prev = vec![0.0; n_h];

    let mut x_prev2 = initial_state(space);
    if let Some(w) = w {
        ctx.evaluator.increment_at_nodes(w, 0, &mut scratch, &mut dw);
    }
    let mut x_prev = stepper.bem_step(&x_prev2, &dw, 1)?;
    let mut ys = Vec::with_capacity(plan.n_k - 1);
    for n in 2..=plan.n_k {
        if let Some(w) = w {
            std::mem::swap(&mut dw, &mut dw_prev);
            ctx.evaluator.increment_at_nodes(w, n - 1, &mut scratch, &mut dw);
        }
        let x = match scheme {
            Scheme::Bem => stepper.bem_step(&x_prev, &dw, n)?,
            Scheme::Bdf2 => stepper.bdf2_step(&x_prev, &x_prev2, &dw, &dw_prev, n)?,
        };
        x_prev2 = std::mem::replace(&mut x_prev, x);
        let slot = ctx.slot_of[n * plan.factor];
        ys.push(space.h_dist_sq(&x_prev, &snapshots[slot]));
    }
    Ok(ys)
}

/// Streaming mean and variance accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}
