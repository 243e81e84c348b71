//! Symmetric tridiagonal matrices and the Thomas algorithm.
//!
//! Every linear system in this crate (mass, stiffness, and their
//! scheme-specific combinations) is symmetric tridiagonal, so a dedicated
//! O(n) factor/solve pair replaces a general sparse solver. No pivoting is
//! performed; the matrices handled here are strictly diagonally dominant
//! M-matrices plus SPD mass contributions, for which plain elimination is
//! backward stable.

use crate::error::SolverError;

/// Symmetric tridiagonal matrix: `diag` holds the n diagonal entries,
/// `off` the n-1 entries of the sub/superdiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl TriDiag {
    /// Creates a matrix after checking the two bands have consistent lengths.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self, SolverError> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(SolverError::Shape {
                context: "TriDiag::new",
                detail: format!(
                    "diag has length {}, off has length {}; expected off = diag - 1 >= 0",
                    diag.len(),
                    off.len()
                ),
            });
        }
        Ok(Self { diag, off })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Zero matrix of dimension n.
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    /// `self + c * other`, entrywise on both bands.
    pub fn add_scaled(&self, c: f64, other: &TriDiag) -> TriDiag {
        debug_assert_eq!(self.n(), other.n());
        TriDiag {
            diag: self
                .diag
                .iter()
                .zip(&other.diag)
                .map(|(a, b)| a + c * b)
                .collect(),
            off: self
                .off
                .iter()
                .zip(&other.off)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    /// `alpha * self + beta * other` written into `out`, reusing its storage.
    pub fn combine_into(&self, alpha: f64, beta: f64, other: &TriDiag, out: &mut TriDiag) {
        debug_assert_eq!(self.n(), other.n());
        out.diag.resize(self.n(), 0.0);
        out.off.resize(self.n() - 1, 0.0);
        for i in 0..self.n() {
            out.diag[i] = alpha * self.diag[i] + beta * other.diag[i];
        }
        for i in 0..self.n() - 1 {
            out.off[i] = alpha * self.off[i] + beta * other.off[i];
        }
    }

    /// Matrix-vector product `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n()];
        self.matvec_into(x, &mut y);
        y
    }

    /// Matrix-vector product written into a caller-provided buffer.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        if n == 1 {
            y[0] = self.diag[0] * x[0];
            return;
        }
        y[0] = self.diag[0] * x[0] + self.off[0] * x[1];
        for i in 1..n - 1 {
            y[i] = self.off[i - 1] * x[i - 1] + self.diag[i] * x[i] + self.off[i] * x[i + 1];
        }
        y[n - 1] = self.off[n - 2] * x[n - 2] + self.diag[n - 1] * x[n - 1];
    }

    /// Quadratic form `x^T A x`, accumulated bandwise.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let n = self.n();
        debug_assert_eq!(x.len(), n);
        let mut s = 0.0;
        for i in 0..n {
            s += self.diag[i] * x[i] * x[i];
        }
        let mut t = 0.0;
        for i in 0..n - 1 {
            t += self.off[i] * x[i] * x[i + 1];
        }
        s + 2.0 * t
    }

    /// LU factorization by the Thomas algorithm. Fails on a zero pivot.
    pub fn factor(&self) -> Result<TriDiagFactor, SolverError> {
        let n = self.n();
        let mut u = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        u[0] = self.diag[0];
        for i in 1..n {
            if u[i - 1] == 0.0 {
                return Err(SolverError::SingularMatrix { pivot_index: i - 1 });
            }
            l[i - 1] = self.off[i - 1] / u[i - 1];
            u[i] = self.diag[i] - l[i - 1] * self.off[i - 1];
        }
        if u[n - 1] == 0.0 {
            return Err(SolverError::SingularMatrix { pivot_index: n - 1 });
        }
        Ok(TriDiagFactor {
            u,
            l,
            off: self.off.clone(),
        })
    }

    /// Convenience one-shot solve of `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolverError> {
        let f = self.factor()?;
        let mut x = b.to_vec();
        f.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Thomas factorization of a symmetric tridiagonal matrix: `u` are the
/// pivots, `l` the elimination multipliers, `off` the original
/// superdiagonal used in back substitution.
#[derive(Debug, Clone)]
pub struct TriDiagFactor {
    u: Vec<f64>,
    l: Vec<f64>,
    off: Vec<f64>,
}

impl TriDiagFactor {
    pub fn n(&self) -> usize {
        self.u.len()
    }

    /// Solves in place: `b` enters as the right-hand side, leaves as the
    /// solution.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n();
        debug_assert_eq!(b.len(), n);
        for i in 1..n {
            b[i] -= self.l[i - 1] * b[i - 1];
        }
        b[n - 1] /= self.u[n - 1];
        for i in (0..n - 1).rev() {
            b[i] = (b[i] - self.off[i] * b[i + 1]) / self.u[i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Infinity norm of a vector.
pub fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}
