//! Problem definitions: drift operators, diffusion coefficients, and
//! runtime verification of the structural assumptions the error analysis
//! rests on.
//!
//! Two problems are implemented on (0,1) with Dirichlet conditions:
//!
//! * `Heat`: linear drift `u''`, additive noise (`g = 1`).
//! * `Quasilinear`: drift `(psi(|u'|) u')'` with
//!   `psi(t) = erf(t - 2) + 2`, multiplicative noise with
//!   `g(u) = sqrt(8 u^2 + 1)`.
//!
//! `psi` takes values in `[m1, 3)` with `m1 = erf(-2) + 2`, and the scalar
//! flux `t -> t psi(t)` is strongly monotone with parameter `m1`; those are
//! the properties [`verify_assumptions`] samples.

use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::fem::{Coeffs, FemSpace};
use crate::linalg::TriDiag;
use crate::wiener::NoiseSpec;

/// Gauss error function. Thin wrapper so every call site in the crate uses
/// one implementation; accurate to well below 1e-13 everywhere.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Diffusivity `psi(t) = erf(t - 2) + 2` of the quasilinear drift.
pub fn psi(t: f64) -> f64 {
    erf(t - 2.0) + 2.0
}

/// Derivative `psi'(t) = (2 / sqrt(pi)) exp(-(t - 2)^2)`.
pub fn psi_prime(t: f64) -> f64 {
    2.0 / std::f64::consts::PI.sqrt() * (-(t - 2.0) * (t - 2.0)).exp()
}

/// Lower bound `m1 = psi(0) = erf(-2) + 2` of the diffusivity; also the
/// strong monotonicity parameter of the scalar flux `t psi(t)`.
pub fn psi_lower_bound() -> f64 {
    psi(0.0)
}

/// Strict upper bound of the diffusivity.
pub const PSI_UPPER_BOUND: f64 = 3.0;

/// Lipschitz constant of the diffusion coefficient `g(u) = sqrt(8 u^2 + 1)`.
pub fn diffusion_lipschitz() -> f64 {
    8.0f64.sqrt()
}

/// Smallest constant bounding the secants of the scalar flux `t psi(t)`,
/// to five digits: the flux derivative `psi(t) + t psi'(t)` is maximal at
/// `t = 1 + sqrt(2)` with value 4.7366... A test pins this number against a
/// grid maximization.
pub fn drift_secant_bound() -> f64 {
    4.7367
}

/// Which SPDE is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpdeProblem {
    Heat,
    Quasilinear,
}

impl SpdeProblem {
    /// Linear drift means the implicit systems have constant matrices.
    pub fn is_linear(&self) -> bool {
        matches!(self, SpdeProblem::Heat)
    }

    /// Diffusion coefficient `g` evaluated at a nodal value.
    pub fn diffusion(&self, u: f64) -> f64 {
        match self {
            SpdeProblem::Heat => 1.0,
            SpdeProblem::Quasilinear => (8.0 * u * u + 1.0).sqrt(),
        }
    }

    /// Nodal noise term `sigma * g(x_i) * dw_i` written into `out`.
    pub fn noise_nodal_into(&self, sigma: f64, x: &[f64], dw: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), dw.len());
        debug_assert_eq!(x.len(), out.len());
        match self {
            SpdeProblem::Heat => {
                for i in 0..x.len() {
                    out[i] = sigma * dw[i];
                }
            }
            SpdeProblem::Quasilinear => {
                for i in 0..x.len() {
                    out[i] = sigma * self.diffusion(x[i]) * dw[i];
                }
            }
        }
    }

    /// Allocating wrapper around [`Self::noise_nodal_into`].
    pub fn noise_nodal(&self, sigma: f64, x: &[f64], dw: &[f64]) -> Coeffs {
        let mut out = vec![0.0; x.len()];
        self.noise_nodal_into(sigma, x, dw, &mut out);
        out
    }

    /// Stiffness matrix of the drift linearized around nothing: for the
    /// heat problem the Dirichlet Laplacian, for the quasilinear problem
    /// the state-dependent matrix with element coefficients `psi(|s_e|)`
    /// where `s_e` is the gradient of the interpolant on element `e`.
    pub fn drift_stiffness(&self, space: &FemSpace, x: &[f64]) -> TriDiag {
        let mut out = TriDiag::zeros(space.n_h());
        self.drift_stiffness_into(space, x, &mut out);
        out
    }

    pub fn drift_stiffness_into(&self, space: &FemSpace, x: &[f64], out: &mut TriDiag) {
        match self {
            SpdeProblem::Heat => *out = space.stiffness(),
            SpdeProblem::Quasilinear => assemble_weighted(space, x, psi, out),
        }
    }

    /// Jacobian of the drift at `x`: element coefficients
    /// `psi(|s_e|) + psi'(|s_e|) |s_e|`, reducing to the plain stiffness
    /// matrix for the heat problem.
    pub fn drift_jacobian(&self, space: &FemSpace, x: &[f64]) -> TriDiag {
        let mut out = TriDiag::zeros(space.n_h());
        self.drift_jacobian_into(space, x, &mut out);
        out
    }

    pub fn drift_jacobian_into(&self, space: &FemSpace, x: &[f64], out: &mut TriDiag) {
        match self {
            SpdeProblem::Heat => *out = space.stiffness(),
            SpdeProblem::Quasilinear => {
                assemble_weighted(space, x, |s| psi(s) + psi_prime(s) * s, out)
            }
        }
    }

    /// Assembles drift stiffness and Jacobian in one sweep, evaluating the
    /// transcendental element coefficients once per element. The Newton
    /// iteration calls this every update.
    pub fn drift_pair_into(
        &self,
        space: &FemSpace,
        x: &[f64],
        stiff: &mut TriDiag,
        jac: &mut TriDiag,
    ) {
        match self {
            SpdeProblem::Heat => {
                *stiff = space.stiffness();
                *jac = space.stiffness();
            }
            SpdeProblem::Quasilinear => {
                assemble_weighted_pair(space, x, stiff, jac);
            }
        }
    }
}

/// Element slope `s_e` of the interpolant on element `e` (0-based,
/// `0..=n_h`), with zero boundary values.
#[inline]
fn element_slope(x: &[f64], e: usize, n_h: usize, h: f64) -> f64 {
    let left = if e == 0 { 0.0 } else { x[e - 1] };
    let right = if e == n_h { 0.0 } else { x[e] };
    (right - left) / h
}

/// Assembles the weighted stiffness matrix with per-element coefficient
/// `coeff(|s_e|)`: `diag[i] = (c_i + c_{i+1}) / h`, `off[i] = -c_{i+1} / h`.
fn assemble_weighted(space: &FemSpace, x: &[f64], coeff: impl Fn(f64) -> f64, out: &mut TriDiag) {
    let n_h = space.n_h();
    let h = space.h();
    debug_assert_eq!(x.len(), n_h);
    out.diag.resize(n_h, 0.0);
    out.off.resize(n_h - 1, 0.0);
    let mut c_prev = coeff(element_slope(x, 0, n_h, h).abs());
    for i in 0..n_h {
        let c_next = coeff(element_slope(x, i + 1, n_h, h).abs());
        out.diag[i] = (c_prev + c_next) / h;
        if i + 1 < n_h {
            out.off[i] = -c_next / h;
        }
        c_prev = c_next;
    }
}

/// Fused assembly of the quasilinear stiffness and Jacobian; shares the
/// erf/exp evaluations between the two coefficient functions.
fn assemble_weighted_pair(space: &FemSpace, x: &[f64], stiff: &mut TriDiag, jac: &mut TriDiag) {
    let n_h = space.n_h();
    let h = space.h();
    debug_assert_eq!(x.len(), n_h);
    stiff.diag.resize(n_h, 0.0);
    stiff.off.resize(n_h - 1, 0.0);
    jac.diag.resize(n_h, 0.0);
    jac.off.resize(n_h - 1, 0.0);
    let coeffs = |s: f64| {
        let p = psi(s);
        (p, p + psi_prime(s) * s)
    };
    let (mut cs_prev, mut cj_prev) = coeffs(element_slope(x, 0, n_h, h).abs());
    for i in 0..n_h {
        let (cs_next, cj_next) = coeffs(element_slope(x, i + 1, n_h, h).abs());
        stiff.diag[i] = (cs_prev + cs_next) / h;
        jac.diag[i] = (cj_prev + cj_next) / h;
        if i + 1 < n_h {
            stiff.off[i] = -cs_next / h;
            jac.off[i] = -cj_next / h;
        }
        cs_prev = cs_next;
        cj_prev = cj_next;
    }
}

/// One sampled structural property: how often it was tested, how often it
/// failed, and the smallest observed slack (negative slack is a failure).
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub trials: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

impl AssumptionCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(AssumptionCheck::passed)
    }
}

/// Samples the structural assumptions behind the convergence analysis.
///
/// Heat: the drift form satisfies the energy identity
/// `<A v, v> = |v|_V^2` and the diffusion coefficient is constant.
///
/// Quasilinear, on scalar pairs drawn uniformly from `[0, 10]`:
/// strong monotonicity of the flux `t psi(t)` with parameter `m1`;
/// bounds `m1 <= psi < 3`; Lipschitz continuity of `psi` with constant 3;
/// Lipschitz continuity of the flux with the frozen secant bound; Lipschitz
/// continuity of `g` with constant `sqrt(8)`. On coefficient-vector pairs:
/// monotonicity of the assembled drift form, and Lipschitz continuity of
/// the noise operator in the truncated expansion frame, where the squared
/// operator distance is the sum over modes `j <= J` of
/// `q_j * || I_h((g(u) - g(v)) sqrt(2) sin(j pi .)) ||_H^2` and is compared
/// against `8 * (sum_j 2 q_j) * || |u - v| ||_H^2`.
pub fn verify_assumptions(
    problem: SpdeProblem,
    noise: &NoiseSpec,
    trials: usize,
    seed: u64,
) -> AssumptionReport {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let checks = match problem {
        SpdeProblem::Heat => heat_checks(trials, &mut rng),
        SpdeProblem::Quasilinear => quasilinear_checks(noise, trials, &mut rng),
    };
    AssumptionReport { checks }
}

fn heat_checks(trials: usize, rng: &mut ChaCha12Rng) -> Vec<AssumptionCheck> {
    let space = FemSpace::new(31).unwrap();
    let a = space.stiffness();
    let dist = Uniform::new(-2.0, 2.0);
    let mut energy = Tally::new("drift energy identity");
    let mut constant = Tally::new("diffusion is constant");
    for _ in 0..trials {
        let v: Vec<f64> = (0..31).map(|_| rng.sample(dist)).collect();
        let form = a.quadratic_form(&v);
        let semi = space.v_seminorm_sq(&v);
        let scale = form.abs().max(1.0);
        energy.record(1e-13 * scale - (form - semi).abs());
        let u: f64 = rng.sample(Uniform::new(-10.0, 10.0));
        constant.record(-(SpdeProblem::Heat.diffusion(u) - 1.0).abs());
    }
    vec![energy.finish(), constant.finish()]
}

fn quasilinear_checks(
    noise: &NoiseSpec,
    trials: usize,
    rng: &mut ChaCha12Rng,
) -> Vec<AssumptionCheck> {
    let m1 = psi_lower_bound();
    let dist = Uniform::new(0.0, 10.0);
    let mut monotone = Tally::new("flux strong monotonicity");
    let mut bounds = Tally::new("diffusivity bounds");
    let mut psi_lip = Tally::new("diffusivity Lipschitz (constant 3)");
    let mut flux_lip = Tally::new("flux Lipschitz (secant bound)");
    let mut g_lip = Tally::new("diffusion Lipschitz (sqrt 8)");
    for _ in 0..trials {
        let (mut s, mut t): (f64, f64) = (rng.sample(dist), rng.sample(dist));
        while (t - s).abs() < 1e-6 {
            t = rng.sample(dist);
        }
        if s > t {
            std::mem::swap(&mut s, &mut t);
        }
        let (ps, pt) = (psi(s), psi(t));
        let secant = (t * pt - s * ps) / (t - s);
        monotone.record(secant - m1);
        bounds.record((pt - m1).min(PSI_UPPER_BOUND - pt));
        psi_lip.record(3.0 * (t - s) - (pt - ps).abs());
        flux_lip.record(drift_secant_bound() - secant.abs());
        let gdiff = (SpdeProblem::Quasilinear.diffusion(t) - SpdeProblem::Quasilinear.diffusion(s))
            .abs();
        g_lip.record(diffusion_lipschitz() * (t - s) - gdiff);
    }

    let space = FemSpace::new(31).unwrap();
    let vec_dist = Uniform::new(-2.0, 2.0);
    let q_sum: f64 = (1..=noise.j_modes)
        .map(|j| 2.0 * noise.mode_variance(j))
        .sum();
    let mut op_monotone = Tally::new("drift form monotonicity");
    let mut noise_lip = Tally::new("noise operator Lipschitz (truncated frame)");
    let vec_trials = trials.min(500);
    for _ in 0..vec_trials {
        let u: Vec<f64> = (0..31).map(|_| rng.sample(vec_dist)).collect();
        let v: Vec<f64> = (0..31).map(|_| rng.sample(vec_dist)).collect();
        let au = SpdeProblem::Quasilinear.drift_stiffness(&space, &u).matvec(&u);
        let av = SpdeProblem::Quasilinear.drift_stiffness(&space, &v).matvec(&v);
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let pairing: f64 = au
            .iter()
            .zip(&av)
            .zip(&w)
            .map(|((a, b), d)| (a - b) * d)
            .sum();
        let vnorm = space.v_seminorm_sq(&w);
        op_monotone.record(pairing - m1 * vnorm + 1e-12 * vnorm.max(1.0));

        let gdiff: Vec<f64> = u
            .iter()
            .zip(&v)
            .map(|(a, b)| {
                SpdeProblem::Quasilinear.diffusion(*a) - SpdeProblem::Quasilinear.diffusion(*b)
            })
            .collect();
        let mut op_dist = 0.0;
        for j in 1..=noise.j_modes {
            let mode: Vec<f64> = (0..31)
                .map(|i| {
                    gdiff[i]
                        * 2.0f64.sqrt()
                        * (j as f64 * std::f64::consts::PI * space.node(i)).sin()
                })
                .collect();
            op_dist += noise.mode_variance(j) * space.h_norm_sq(&mode);
        }
        let w_abs: Vec<f64> = w.iter().map(|d| d.abs()).collect();
        noise_lip.record(8.0 * q_sum * space.h_norm_sq(&w_abs) - op_dist);
    }

    vec![
        monotone.finish(),
        bounds.finish(),
        psi_lip.finish(),
        flux_lip.finish(),
        g_lip.finish(),
        op_monotone.finish(),
        noise_lip.finish(),
    ]
}

/// Accumulates margins for one named check.
struct Tally {
    name: &'static str,
    trials: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            trials: 0,
            violations: 0,
            worst: f64::INFINITY,
        }
    }

    fn record(&mut self, margin: f64) {
        self.trials += 1;
        if margin < 0.0 {
            self.violations += 1;
        }
        if margin < self.worst {
            self.worst = margin;
        }
    }

    fn finish(self) -> AssumptionCheck {
        AssumptionCheck {
            name: self.name,
            trials: self.trials,
            violations: self.violations,
            worst_margin: self.worst,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inf_norm;

    /// Composite Simpson quadrature of exp(-t^2) on [0, x], panels doubled
    /// until two consecutive levels agree to 1e-15. Independent oracle for
    /// the library erf.
    fn erf_oracle(x: f64) -> f64 {
        let f = |t: f64| (-t * t).exp();
        let simpson = |n: usize| {
            let h = x / n as f64;
            let mut s = f(0.0) + f(x);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * f(i as f64 * h);
            }
            s * h / 3.0
        };
        let mut n = 8;
        let mut prev = simpson(n);
        loop {
            n *= 2;
            let next = simpson(n);
            if (next - prev).abs() <= 1e-15 || n >= 1 << 20 {
                return 2.0 / std::f64::consts::PI.sqrt() * next;
            }
            prev = next;
        }
    }

    #[test]
    fn erf_matches_quadrature_oracle_and_frozen_values() {
        for x in [0.1, 0.5, 1.0, 1.5, 2.0, 1.0 + 2.0f64.sqrt(), 3.0] {
            let oracle = erf_oracle(x);
            assert!(
                (erf(x) - oracle).abs() < 1e-13,
                "erf({x}) = {} vs oracle {oracle}",
                erf(x)
            );
            assert!((erf(-x) + oracle).abs() < 1e-13);
        }
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(1.0) - 0.8427007929497149).abs() < 1e-15);
        assert!((erf(2.0) - 0.9953222650189527).abs() < 1e-15);
    }

    #[test]
    fn diffusivity_frozen_values() {
        // psi(0) = 2 - erf(2), psi(2) = 2, psi'(2) = 2 / sqrt(pi).
        assert!((psi(0.0) - 1.0046777349810473).abs() < 1e-14);
        assert!((psi(2.0) - 2.0).abs() < 1e-15);
        assert!((psi_prime(2.0) - 1.1283791670955126).abs() < 1e-14);
        assert!((psi_lower_bound() - (2.0 - erf(2.0))).abs() < 1e-16);
    }

    #[test]
    fn flux_derivative_maximum_is_pinned() {
        // The flux derivative psi(t) + t psi'(t) peaks at t = 1 + sqrt(2);
        // the frozen secant bound must cover the grid maximum tightly.
        let mut max = 0.0f64;
        let mut arg = 0.0;
        for k in 0..=100_000 {
            let t = k as f64 * 1e-4;
            let d = psi(t) + t * psi_prime(t);
            if d > max {
                max = d;
                arg = t;
            }
        }
        assert!(max <= drift_secant_bound());
        assert!(max > drift_secant_bound() - 1e-4, "max {max}");
        assert!((arg - (1.0 + 2.0f64.sqrt())).abs() < 1e-2, "argmax {arg}");
        // The bound is genuinely larger than the diffusivity cap: the flux
        // is not Lipschitz with the constant that bounds psi alone.
        assert!(max > PSI_UPPER_BOUND + 1.7);
    }

    #[test]
    fn flux_secant_infimum_is_the_monotonicity_parameter() {
        let m1 = psi_lower_bound();
        let mut min = f64::INFINITY;
        for a in 0..200 {
            for b in (a + 1)..=200 {
                let (s, t) = (a as f64 * 0.015, b as f64 * 0.015);
                min = min.min((t * psi(t) - s * psi(s)) / (t - s));
            }
        }
        assert!(min >= m1 - 1e-12);
        assert!(min < m1 + 1e-3, "infimum {min} sits at the origin");
    }

    #[test]
    fn quasilinear_stiffness_frozen_single_node() {
        // Interpolant of v(x) = x on one interior node: hat of height 1/2,
        // slopes +1 and -1, so the single entry is 2 psi(1) / h = 4 psi(1).
        let space = FemSpace::new(1).unwrap();
        let a = SpdeProblem::Quasilinear.drift_stiffness(&space, &[0.5]);
        assert!((a.diag[0] - 4.0 * psi(1.0)).abs() < 1e-13);
        assert!((a.diag[0] - 4.62919682820114).abs() < 1e-12);
    }

    #[test]
    fn quasilinear_stiffness_at_zero_is_scaled_laplacian() {
        let space = FemSpace::new(3).unwrap();
        let a = SpdeProblem::Quasilinear.drift_stiffness(&space, &[0.0; 3]);
        let lap = space.stiffness();
        let m1 = psi_lower_bound();
        for i in 0..3 {
            assert!((a.diag[i] - m1 * lap.diag[i]).abs() < 1e-12);
        }
        for i in 0..2 {
            assert!((a.off[i] - m1 * lap.off[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_drift_is_the_plain_laplacian() {
        let space = FemSpace::new(5).unwrap();
        let x = [0.4, -0.2, 0.9, 0.0, -1.1];
        assert_eq!(SpdeProblem::Heat.drift_stiffness(&space, &x), space.stiffness());
        assert_eq!(SpdeProblem::Heat.drift_jacobian(&space, &x), space.stiffness());
    }

    #[test]
    fn jacobian_dominates_stiffness_entrywise() {
        // psi' > 0, so the Jacobian coefficients exceed the stiffness
        // coefficients element by element.
        let space = FemSpace::new(9).unwrap();
        let x: Vec<f64> = (0..9).map(|i| ((i * 13 % 7) as f64 - 3.0) / 2.0).collect();
        let a = SpdeProblem::Quasilinear.drift_stiffness(&space, &x);
        let j = SpdeProblem::Quasilinear.drift_jacobian(&space, &x);
        for i in 0..9 {
            assert!(j.diag[i] >= a.diag[i]);
        }
        for i in 0..8 {
            assert!(j.off[i] <= a.off[i]);
        }
    }

    #[test]
    fn fused_assembly_matches_separate_assembly() {
        let space = FemSpace::new(17).unwrap();
        let x: Vec<f64> = (0..17).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut stiff = TriDiag::zeros(17);
        let mut jac = TriDiag::zeros(17);
        SpdeProblem::Quasilinear.drift_pair_into(&space, &x, &mut stiff, &mut jac);
        assert_eq!(stiff, SpdeProblem::Quasilinear.drift_stiffness(&space, &x));
        assert_eq!(jac, SpdeProblem::Quasilinear.drift_jacobian(&space, &x));
    }

    #[test]
    fn jacobian_is_the_derivative_of_the_drift() {
        // Finite-difference directional derivative of x -> A(x) x against
        // J(x) d; the mismatch shrinks linearly in the step.
        let space = FemSpace::new(16).unwrap();
        let x: Vec<f64> = (0..16).map(|i| (0.3 * i as f64).cos()).collect();
        let d: Vec<f64> = (0..16).map(|i| (0.7 * i as f64 + 0.2).sin()).collect();
        let jd = SpdeProblem::Quasilinear.drift_jacobian(&space, &x).matvec(&d);
        let ax = SpdeProblem::Quasilinear.drift_stiffness(&space, &x).matvec(&x);
        let resid = |delta: f64| {
            let xp: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + delta * b).collect();
            let axp = SpdeProblem::Quasilinear.drift_stiffness(&space, &xp).matvec(&xp);
            let fd: Vec<f64> = axp
                .iter()
                .zip(&ax)
                .zip(&jd)
                .map(|((p, a), j)| (p - a) / delta - j)
                .collect();
            inf_norm(&fd)
        };
        let r4 = resid(1e-4);
        let r6 = resid(1e-6);
        assert!(r6 < 1e-3 * inf_norm(&jd).max(1.0));
        let ratio = r4 / r6;
        assert!((30.0..300.0).contains(&ratio), "decay ratio {ratio}");
    }

    #[test]
    fn noise_terms_frozen_values() {
        let dw = [1.0, 1.0, 1.0];
        let heat = SpdeProblem::Heat.noise_nodal(0.5, &[0.3, -0.7, 2.0], &dw);
        assert_eq!(heat, vec![0.5, 0.5, 0.5]);
        // g(0) = 1, g(1) = g(-1) = 3.
        let quasi = SpdeProblem::Quasilinear.noise_nodal(0.5, &[0.0, 1.0, -1.0], &dw);
        assert!((quasi[0] - 0.5).abs() < 1e-15);
        assert!((quasi[1] - 1.5).abs() < 1e-15);
        assert!((quasi[2] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn assumption_reports_are_clean_for_both_problems() {
        let noise = NoiseSpec {
            j_modes: 16,
            r: 1.0,
            eps: 1e-3,
            sigma: 0.25,
        };
        for problem in [SpdeProblem::Heat, SpdeProblem::Quasilinear] {
            let report = verify_assumptions(problem, &noise, 2000, 7);
            for check in &report.checks {
                assert_eq!(
                    check.violations, 0,
                    "{:?} check '{}' worst margin {}",
                    problem, check.name, check.worst_margin
                );
                assert!(check.trials > 0);
                assert!(check.worst_margin >= 0.0);
            }
            assert!(report.all_passed());
        }
    }
}
