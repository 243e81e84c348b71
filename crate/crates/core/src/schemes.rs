//! Time stepping: semi-implicit Euler (BEM) and the two-step backward
//! differentiation formula (BDF2), both with explicit Maruyama noise.
//!
//! With mass matrix `M`, state-dependent stiffness `A(X)`, step size `k`,
//! and nodal noise `b(X) = sigma g(X) dW` the schemes solve
//!
//! * BEM:  `(M + k A(X^n)) X^n = M (X^{n-1} + b(X^{n-1}))`
//! * BDF2: `(3M + 2k A(X^n)) X^n = M (4 X^{n-1} - X^{n-2}
//!           + 3 b(X^{n-1}) - b(X^{n-2}))`
//!
//! where `b` uses the increment of the step being taken (respectively the
//! previous one). Both schemes start from the nodal interpolant of
//! `sin(pi x)` and compute the first step with BEM, so the two methods
//! share `X^0` and `X^1` on a given noise path.
//!
//! Linear drift is solved directly with a prefactorized Thomas solve. The
//! quasilinear systems run a damped-free Newton iteration: always at least
//! `min_iterations` updates, then more while the residual infinity norm
//! exceeds `tol`, up to `max_iterations`; failure to converge is an error,
//! never silently accepted.

use std::fmt;
use std::str::FromStr;

use crate::error::SolverError;
use crate::fem::{Coeffs, FemSpace};
use crate::linalg::{inf_norm, TriDiag, TriDiagFactor};
use crate::problems::SpdeProblem;
use crate::wiener::{NodalEvaluator, WienerIncrements};

/// Time stepping scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Bem,
    Bdf2,
}

impl Scheme {
    /// Leading coefficients `(alpha, beta)` of the implicit system
    /// `(alpha M + beta k A(X)) X = rhs`.
    fn weights(&self) -> (f64, f64) {
        match self {
            Scheme::Bem => (1.0, 1.0),
            Scheme::Bdf2 => (3.0, 2.0),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Bem => write!(f, "bem"),
            Scheme::Bdf2 => write!(f, "bdf2"),
        }
    }
}

impl FromStr for Scheme {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bem" => Ok(Scheme::Bem),
            "bdf2" => Ok(Scheme::Bdf2),
            other => Err(SolverError::InvalidConfig {
                key: "scheme",
                reason: format!("unknown scheme `{other}`, expected `bem` or `bdf2`"),
            }),
        }
    }
}

/// Uniform grid on `[0, t_final]` with `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalGrid {
    pub n_steps: usize,
    pub t_final: f64,
}

impl TemporalGrid {
    pub fn new(n_steps: usize, t_final: f64) -> Result<Self, SolverError> {
        if n_steps < 2 {
            return Err(SolverError::InvalidConfig {
                key: "nk",
                reason: format!("need at least 2 time steps (BDF2 startup), got {n_steps}"),
            });
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(SolverError::InvalidConfig {
                key: "t-final",
                reason: format!("final time must be finite and positive, got {t_final}"),
            });
        }
        Ok(Self { n_steps, t_final })
    }

    pub fn k(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }
}

/// Newton iteration controls for the quasilinear implicit systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub tol: f64,
    pub min_iterations: usize,
    pub max_iterations: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            min_iterations: 3,
            max_iterations: 10,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol > 0.0) || self.min_iterations < 1 || self.max_iterations < self.min_iterations
        {
            return Err(SolverError::InvalidConfig {
                key: "newton",
                reason: format!(
                    "need tol > 0 and 1 <= min_iterations <= max_iterations, got {self:?}"
                ),
            });
        }
        Ok(())
    }
}

/// Residual history of one Newton solve; `residuals[i]` is the infinity
/// norm after update `i + 1`.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

/// Performs individual time steps for one `(problem, mesh, step size)`
/// combination, owning the assembled matrices, prefactorizations, and all
/// scratch buffers.
pub struct Stepper<'a> {
    space: &'a FemSpace,
    problem: SpdeProblem,
    sigma: f64,
    k: f64,
    newton: NewtonConfig,
    mass: TriDiag,
    bem_factor: Option<TriDiagFactor>,
    bdf2_factor: Option<TriDiagFactor>,
    // Scratch buffers reused across steps.
    noise: Vec<f64>,
    noise2: Vec<f64>,
    combo: Vec<f64>,
    rhs: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
    stiff: TriDiag,
    jac: TriDiag,
    sys: TriDiag,
}

impl<'a> Stepper<'a> {
    pub fn new(
        space: &'a FemSpace,
        problem: SpdeProblem,
        sigma: f64,
        k: f64,
        newton: NewtonConfig,
    ) -> Result<Self, SolverError> {
        newton.validate()?;
        if !(k > 0.0 && k.is_finite()) {
            return Err(SolverError::InvalidConfig {
                key: "nk",
                reason: format!("step size must be finite and positive, got {k}"),
            });
        }
        let n = space.n_h();
        let mass = space.mass();
        let (bem_factor, bdf2_factor) = if problem.is_linear() {
            let a = space.stiffness();
            let bem = mass.add_scaled(k, &a).factor()?;
            let bdf2 = {
                let mut m3 = mass.clone();
                for d in &mut m3.diag {
                    *d *= 3.0;
                }
                for o in &mut m3.off {
                    *o *= 3.0;
                }
                m3.add_scaled(2.0 * k, &a).factor()?
            };
            (Some(bem), Some(bdf2))
        } else {
            (None, None)
        };
        Ok(Self {
            space,
            problem,
            sigma,
            k,
            newton,
            mass,
            bem_factor,
            bdf2_factor,
            noise: vec![0.0; n],
            noise2: vec![0.0; n],
            combo: vec![0.0; n],
            rhs: vec![0.0; n],
            t1: vec![0.0; n],
            t2: vec![0.0; n],
            stiff: TriDiag::zeros(n),
            jac: TriDiag::zeros(n),
            sys: TriDiag::zeros(n),
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// One BEM step from `x_prev` using the nodal increments `dw` of the
    /// step being taken. `step` only labels error reports.
    pub fn bem_step(
        &mut self,
        x_prev: &[f64],
        dw: &[f64],
        step: usize,
    ) -> Result<Coeffs, SolverError> {
        self.bem_rhs(x_prev, dw);
        if let Some(factor) = &self.bem_factor {
            let mut x = self.rhs.clone();
            factor.solve_in_place(&mut x);
            Ok(x)
        } else {
            let rhs = self.rhs.clone();
            Ok(self.newton_solve(Scheme::Bem, &rhs, x_prev, step)?.0)
        }
    }

    /// One BDF2 step from the pair `(x_prev, x_prev2)` using the nodal
    /// increments of the current step (`dw`) and of the previous one
    /// (`dw_prev`).
    pub fn bdf2_step(
        &mut self,
        x_prev: &[f64],
        x_prev2: &[f64],
        dw: &[f64],
        dw_prev: &[f64],
        step: usize,
    ) -> Result<Coeffs, SolverError> {
        self.bdf2_rhs(x_prev, x_prev2, dw, dw_prev);
        if let Some(factor) = &self.bdf2_factor {
            let mut x = self.rhs.clone();
            factor.solve_in_place(&mut x);
            Ok(x)
        } else {
            let rhs = self.rhs.clone();
            Ok(self.newton_solve(Scheme::Bdf2, &rhs, x_prev, step)?.0)
        }
    }

    /// Runs the Newton iteration on the implicit system of `scheme` with
    /// the given right-hand side, regardless of problem linearity. Public
    /// so tests can inspect the residual history; the linear heat system
    /// must converge on the first update.
    pub fn newton_solve(
        &mut self,
        scheme: Scheme,
        rhs: &[f64],
        start: &[f64],
        step: usize,
    ) -> Result<(Coeffs, NewtonReport), SolverError> {
        let (alpha, beta) = scheme.weights();
        let bk = beta * self.k;
        let mut x = start.to_vec();
        let mut residuals = Vec::with_capacity(self.newton.max_iterations);

        self.problem
            .drift_pair_into(self.space, &x, &mut self.stiff, &mut self.jac);
        self.residual_into(alpha, bk, &x, rhs);
        loop {
            // System matrix alpha M + beta k J(x); solve for the update.
            self.mass.combine_into(alpha, bk, &self.jac, &mut self.sys);
            let factor = self.sys.factor()?;
            for v in &mut self.t1 {
                *v = -*v;
            }
            factor.solve_in_place(&mut self.t1);
            for i in 0..x.len() {
                x[i] += self.t1[i];
            }

            self.problem
                .drift_pair_into(self.space, &x, &mut self.stiff, &mut self.jac);
            self.residual_into(alpha, bk, &x, rhs);
            let res = inf_norm(&self.t1);
            residuals.push(res);
            let iterations = residuals.len();
            if iterations >= self.newton.min_iterations
                && (res <= self.newton.tol || iterations >= self.newton.max_iterations)
            {
                if res > self.newton.tol {
                    return Err(SolverError::NewtonDidNotConverge {
                        step,
                        residual: res,
                        iterations,
                        tolerance: self.newton.tol,
                    });
                }
                return Ok((
                    x,
                    NewtonReport {
                        iterations,
                        residuals,
                    },
                ));
            }
        }
    }

    /// Writes `F(x) = alpha M x + beta k A(x) x - rhs` into `t1`, assuming
    /// `stiff` already holds `A(x)`.
    fn residual_into(&mut self, alpha: f64, bk: f64, x: &[f64], rhs: &[f64]) {
        self.mass.matvec_into(x, &mut self.t1);
        self.stiff.matvec_into(x, &mut self.t2);
        for i in 0..x.len() {
            self.t1[i] = alpha * self.t1[i] + bk * self.t2[i] - rhs[i];
        }
    }

    /// Builds the BEM right-hand side `M (x_prev + b(x_prev))` into `rhs`.
    fn bem_rhs(&mut self, x_prev: &[f64], dw: &[f64]) {
        self.problem
            .noise_nodal_into(self.sigma, x_prev, dw, &mut self.noise);
        for i in 0..x_prev.len() {
            self.combo[i] = x_prev[i] + self.noise[i];
        }
        let combo = std::mem::take(&mut self.combo);
        self.mass.matvec_into(&combo, &mut self.rhs);
        self.combo = combo;
    }

    /// Builds the BDF2 right-hand side
    /// `M (4 x_prev - x_prev2 + 3 b(x_prev) - b(x_prev2))` into `rhs`.
    fn bdf2_rhs(&mut self, x_prev: &[f64], x_prev2: &[f64], dw: &[f64], dw_prev: &[f64]) {
        self.problem
            .noise_nodal_into(self.sigma, x_prev, dw, &mut self.noise);
        self.problem
            .noise_nodal_into(self.sigma, x_prev2, dw_prev, &mut self.noise2);
        for i in 0..x_prev.len() {
            self.combo[i] =
                4.0 * x_prev[i] - x_prev2[i] + 3.0 * self.noise[i] - self.noise2[i];
        }
        let combo = std::mem::take(&mut self.combo);
        self.mass.matvec_into(&combo, &mut self.rhs);
        self.combo = combo;
    }

    /// Residual of the accepted BEM step: `|| (M + k A(x_new)) x_new -
    /// rhs(x_prev) ||_inf`, with the drift reassembled at `x_new`.
    pub fn bem_defect(&mut self, x_new: &[f64], x_prev: &[f64], dw: &[f64]) -> f64 {
        self.bem_rhs(x_prev, dw);
        let rhs = std::mem::take(&mut self.rhs);
        self.problem
            .drift_stiffness_into(self.space, x_new, &mut self.stiff);
        self.residual_into(1.0, self.k, x_new, &rhs);
        self.rhs = rhs;
        inf_norm(&self.t1)
    }

    /// Residual of the accepted BDF2 step, analogous to [`Self::bem_defect`].
    pub fn bdf2_defect(
        &mut self,
        x_new: &[f64],
        x_prev: &[f64],
        x_prev2: &[f64],
        dw: &[f64],
        dw_prev: &[f64],
    ) -> f64 {
        self.bdf2_rhs(x_prev, x_prev2, dw, dw_prev);
        let rhs = std::mem::take(&mut self.rhs);
        self.problem
            .drift_stiffness_into(self.space, x_new, &mut self.stiff);
        self.residual_into(3.0, 2.0 * self.k, x_new, &rhs);
        self.rhs = rhs;
        inf_norm(&self.t1)
    }
}

/// Common initial state of every experiment: the interpolant of
/// `sin(pi x)`.
pub fn initial_state(space: &FemSpace) -> Coeffs {
    space.interpolate(|x| (std::f64::consts::PI * x).sin())
}

/// Full trajectory `X^0, ..., X^N`. Keeps every state in memory, so use
/// only for moderate grids; the Monte Carlo harness streams instead.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<Coeffs>,
}

/// Runs `scheme` over the whole grid on one noise path. `w` must hold
/// exactly `grid.n_steps` increments at step size `grid.k()`; the first
/// step is always BEM.
pub fn run_trajectory(
    scheme: Scheme,
    space: &FemSpace,
    problem: SpdeProblem,
    sigma: f64,
    grid: TemporalGrid,
    w: &WienerIncrements,
    evaluator: &NodalEvaluator,
    newton: NewtonConfig,
) -> Result<Trajectory, SolverError> {
    if w.n_steps() != grid.n_steps {
        return Err(SolverError::Shape {
            context: "run_trajectory",
            detail: format!(
                "noise path has {} steps but the grid has {}",
                w.n_steps(),
                grid.n_steps
            ),
        });
    }
    let n_h = space.n_h();
    let mut stepper = Stepper::new(space, problem, sigma, grid.k(), newton)?;
    let mut scratch = evaluator.make_scratch();
    let mut dw = vec![0.0; n_h];
    let mut dw_prev = vec![0.0; n_h];

    let x0 = initial_state(space);
    evaluator.increment_at_nodes(w, 0, &mut scratch, &mut dw);
    let x1 = stepper.bem_step(&x0, &dw, 1)?;
    let mut states = Vec::with_capacity(grid.n_steps + 1);
    states.push(x0);
    states.push(x1);
    for n in 2..=grid.n_steps {
        std::mem::swap(&mut dw, &mut dw_prev);
        evaluator.increment_at_nodes(w, n - 1, &mut scratch, &mut dw);
        let x = match scheme {
            Scheme::Bem => stepper.bem_step(&states[n - 1], &dw, n)?,
            Scheme::Bdf2 => {
                stepper.bdf2_step(&states[n - 1], &states[n - 2], &dw, &dw_prev, n)?
            }
        };
        states.push(x);
    }
    Ok(Trajectory { states })
}
