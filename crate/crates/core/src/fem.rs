//! Piecewise linear finite elements on (0,1) with homogeneous Dirichlet
//! boundary conditions.
//!
//! The mesh is uniform with `n_h` interior nodes, mesh width `h = 1/(n_h+1)`,
//! and nodes `x_i = i*h` for `i = 1..=n_h`. Coefficient vectors store
//! interior nodal values only; the boundary values are identically zero and
//! never stored. The mass matrix has diagonal `2h/3` and off-diagonal `h/6`;
//! the stiffness matrix (Dirichlet Laplacian) has diagonal `2/h` and
//! off-diagonal `-1/h`.

use crate::error::SolverError;
use crate::linalg::TriDiag;

/// Nodal coefficient vector of length `n_h` (interior values only).
pub type Coeffs = Vec<f64>;

/// Uniform P1 mesh on (0,1), keyed by the number of interior nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FemSpace {
    n_h: usize,
    h: f64,
}

impl FemSpace {
    pub fn new(n_h: usize) -> Result<Self, SolverError> {
        if n_h < 1 {
            return Err(SolverError::InvalidConfig {
                key: "nh",
                reason: "need at least one interior node".into(),
            });
        }
        Ok(Self {
            n_h,
            h: 1.0 / (n_h as f64 + 1.0),
        })
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Coordinate of interior node `i` (0-based), i.e. `(i+1) * h`.
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_h);
        (i as f64 + 1.0) * self.h
    }

    /// Assembles the P1 mass matrix.
    pub fn mass(&self) -> TriDiag {
        let h = self.h;
        TriDiag {
            diag: vec![2.0 * h / 3.0; self.n_h],
            off: vec![h / 6.0; self.n_h - 1],
        }
    }

    /// Assembles the stiffness matrix of the Dirichlet Laplacian.
    pub fn stiffness(&self) -> TriDiag {
        let h = self.h;
        TriDiag {
            diag: vec![2.0 / h; self.n_h],
            off: vec![-1.0 / h; self.n_h - 1],
        }
    }

    /// Nodal interpolation: returns the coefficients `f(x_i)`.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> Coeffs {
        (0..self.n_h).map(|i| f(self.node(i))).collect()
    }

    /// Squared mass norm `x^T M x`, evaluated in closed form.
    pub fn h_norm_sq(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_h);
        let sum_sq: f64 = x.iter().map(|v| v * v).sum();
        let sum_adj: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
        self.h * (2.0 * sum_sq + sum_adj) / 3.0
    }

    /// Mass norm of the interpolated function, `sqrt(x^T M x)`.
    pub fn h_norm(&self, x: &[f64]) -> f64 {
        self.h_norm_sq(x).sqrt()
    }

    /// Squared mass norm of the difference `a - b` without allocating.
    pub fn h_dist_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.n_h);
        debug_assert_eq!(b.len(), self.n_h);
        let mut sum_sq = 0.0;
        for i in 0..self.n_h {
            let d = a[i] - b[i];
            sum_sq += d * d;
        }
        let mut sum_adj = 0.0;
        for i in 0..self.n_h - 1 {
            sum_adj += (a[i] - b[i]) * (a[i + 1] - b[i + 1]);
        }
        self.h * (2.0 * sum_sq + sum_adj) / 3.0
    }

    /// Squared energy seminorm `x^T A x`, accumulated element by element as
    /// `sum_e (x_e - x_{e-1})^2 / h` with zero boundary values.
    pub fn v_seminorm_sq(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_h);
        let mut s = x[0] * x[0];
        for w in x.windows(2) {
            let d = w[1] - w[0];
            s += d * d;
        }
        s += x[self.n_h - 1] * x[self.n_h - 1];
        s / self.h
    }

    /// Energy seminorm `sqrt(x^T A x)`; equals the H^1_0 seminorm of the
    /// piecewise linear interpolant.
    pub fn v_seminorm(&self, x: &[f64]) -> f64 {
        self.v_seminorm_sq(x).sqrt()
    }

    /// Smallest generalized eigenvalue of `A v = lambda M v` on this mesh,
    /// `6 (1 - cos(pi h)) / (h^2 (2 + cos(pi h)))`; tends to `pi^2` as the
    /// mesh is refined.
    pub fn first_eigenvalue(&self) -> f64 {
        let c = (std::f64::consts::PI * self.h).cos();
        6.0 * (1.0 - c) / (self.h * self.h * (2.0 + c))
    }
}
