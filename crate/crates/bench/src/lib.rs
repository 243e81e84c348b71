//! Shared fixtures for the solver benchmarks: meshes, states with slopes of
//! order one, and sampled noise paths at reproducible seeds.

use spde_core::fem::FemSpace;
use spde_core::wiener::{NodalEvaluator, NoiseSpec, WienerIncrements};

pub fn space(n_h: usize) -> FemSpace {
    FemSpace::new(n_h).expect("valid mesh size")
}

/// Smooth zero-boundary state `sin(pi x) + 0.3 sin(3 pi x)` whose element
/// slopes stay inside the band where the quasilinear diffusivity varies.
pub fn state(space: &FemSpace) -> Vec<f64> {
    space.interpolate(|x| {
        let p = std::f64::consts::PI * x;
        p.sin() + 0.3 * (3.0 * p).sin()
    })
}

pub fn noise(space: &FemSpace, j_modes: usize) -> (NoiseSpec, NodalEvaluator) {
    let spec = NoiseSpec {
        j_modes,
        r: 1.0,
        eps: 1e-3,
        sigma: 1.0,
    };
    let evaluator = NodalEvaluator::new(&spec, space);
    (spec, evaluator)
}

pub fn path(spec: &NoiseSpec, n_steps: usize) -> WienerIncrements {
    WienerIncrements::sample(spec.j_modes, n_steps, 1.0 / n_steps as f64, 42, 0)
}
