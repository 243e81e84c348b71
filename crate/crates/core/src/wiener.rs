//! Q-Wiener process increments in the sine Karhunen-Loeve frame.
//!
//! The driving noise is `W(t,x) = sum_j sqrt(2 q_j) beta_j(t) sin(j pi x)`
//! truncated at `j <= J`, with mode variances `q_j = j^-(2r+1+eps)` and
//! independent scalar Brownian motions `beta_j`. This module samples the
//! per-mode increments `delta beta_j` on a fine uniform grid, aggregates
//! them to coarser grids by exact block summation, and evaluates increments
//! at the mesh nodes either by direct summation or, when `J` equals the
//! node count, by a discrete sine transform backed by a complex FFT.
//!
//! Reproducibility contract: a path is keyed by `(seed, sample_index)`.
//! Increments are drawn step-major (all modes of step 0, then step 1, ...)
//! from a counter-based generator, so the same key always yields the same
//! bits regardless of thread count or call site.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::SolverError;
use crate::fem::{Coeffs, FemSpace};

/// Spectral description of the driving noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Number of retained sine modes `J`.
    pub j_modes: usize,
    /// Smoothness parameter `r` in the decay exponent `2r + 1 + eps`.
    pub r: f64,
    /// Small positive shift keeping the mode variances summable against the
    /// eigenvalue growth.
    pub eps: f64,
    /// Global noise intensity multiplying the diffusion coefficient.
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.j_modes < 1 {
            return Err(SolverError::InvalidConfig {
                key: "j",
                reason: "need at least one noise mode".into(),
            });
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(SolverError::InvalidConfig {
                key: "r",
                reason: format!("smoothness parameter must be finite and >= 0, got {}", self.r),
            });
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(SolverError::InvalidConfig {
                key: "eps",
                reason: format!("decay shift must be finite and > 0, got {}", self.eps),
            });
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(SolverError::InvalidConfig {
                key: "sigma",
                reason: format!("noise intensity must be finite and >= 0, got {}", self.sigma),
            });
        }
        Ok(())
    }

    /// Variance `q_j = j^-(2r+1+eps)` of mode `j` (1-based).
    pub fn mode_variance(&self, j: usize) -> f64 {
        (j as f64).powf(-(2.0 * self.r + 1.0 + self.eps))
    }

    /// Amplitude `sqrt(2 q_j)` multiplying `delta beta_j sin(j pi x)`.
    pub fn mode_amplitude(&self, j: usize) -> f64 {
        (2.0 * self.mode_variance(j)).sqrt()
    }
}

/// Per-mode Brownian increments on a uniform time grid, stored step-major:
/// `data[step * j_modes + mode]` is `beta_{mode+1}(t_{step+1}) -
/// beta_{mode+1}(t_step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerIncrements {
    j_modes: usize,
    n_steps: usize,
    dt: f64,
    data: Vec<f64>,
}

impl WienerIncrements {
    /// Draws a full path of increments for the given `(seed, sample_index)`
    /// key. Each increment is `N(0, dt)`.
    pub fn sample(
        j_modes: usize,
        n_steps: usize,
        dt: f64,
        seed: u64,
        sample_index: u64,
    ) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(sample_index);
        let scale = dt.sqrt();
        let mut data = Vec::with_capacity(j_modes * n_steps);
        for _ in 0..n_steps {
            for _ in 0..j_modes {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(scale * z);
            }
        }
        Self {
            j_modes,
            n_steps,
            dt,
            data,
        }
    }

    /// All-zero increments; stands in for a sampled path when the noise
    /// intensity is zero, since every scheme consumes increments only
    /// through `sigma * (...)`.
    pub fn zeros(j_modes: usize, n_steps: usize, dt: f64) -> Self {
        Self {
            j_modes,
            n_steps,
            dt,
            data: vec![0.0; j_modes * n_steps],
        }
    }

    pub fn j_modes(&self) -> usize {
        self.j_modes
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Increment of mode `mode` (0-based) over step `step` (0-based).
    pub fn increment(&self, step: usize, mode: usize) -> f64 {
        self.data[step * self.j_modes + mode]
    }

    /// All mode increments of one step.
    pub fn step_slice(&self, step: usize) -> &[f64] {
        &self.data[step * self.j_modes..(step + 1) * self.j_modes]
    }

    /// Sums blocks of `factor` consecutive fine increments into one coarse
    /// increment per mode, left to right. `factor` must divide the step
    /// count. With `factor == 1` the result is bit-identical to the input.
    pub fn aggregate(&self, factor: usize) -> Result<Self, SolverError> {
        if factor == 0 || self.n_steps % factor != 0 {
            return Err(SolverError::Shape {
                context: "WienerIncrements::aggregate",
                detail: format!(
                    "aggregation factor {factor} does not divide the step count {}",
                    self.n_steps
                ),
            });
        }
        let coarse_steps = self.n_steps / factor;
        let mut data = vec![0.0; coarse_steps * self.j_modes];
        for n in 0..coarse_steps {
            let out = &mut data[n * self.j_modes..(n + 1) * self.j_modes];
            for m in 0..factor {
                let fine = (n * factor + m) * self.j_modes;
                for j in 0..self.j_modes {
                    out[j] += self.data[fine + j];
                }
            }
        }
        Ok(Self {
            j_modes: self.j_modes,
            n_steps: coarse_steps,
            dt: self.dt * factor as f64,
            data,
        })
    }
}

enum EvalPath {
    /// Odd-extension DST via a complex FFT of length `2 (n_h + 1)`;
    /// available exactly when the mode count equals the node count.
    Dst { fft: Arc<dyn Fft<f64>>, len: usize },
    /// Direct summation over modes, with a precomputed sine table when it
    /// fits comfortably in memory.
    Direct { sin_table: Option<Vec<f64>> },
}

/// Evaluates nodal noise increments `sum_j sqrt(2 q_j) delta beta_j
/// sin(j pi x_i)` for a fixed `(NoiseSpec, FemSpace)` pair. Construction
/// precomputes the amplitudes and transform plan; evaluation borrows a
/// caller-owned scratch buffer so one evaluator can be shared across
/// threads.
pub struct NodalEvaluator {
    n_h: usize,
    j_modes: usize,
    amplitudes: Vec<f64>,
    h: f64,
    path: EvalPath,
}

/// Reusable workspace for [`NodalEvaluator::increment_at_nodes`].
pub struct EvalScratch {
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

/// Largest sine table the direct path will precompute (entries).
const MAX_SIN_TABLE: usize = 1 << 22;

impl NodalEvaluator {
    /// Picks the DST path when `J == n_h`, otherwise direct summation.
    pub fn new(spec: &NoiseSpec, space: &FemSpace) -> Self {
        if spec.j_modes == space.n_h() {
            Self::build(spec, space, true)
        } else {
            Self::build(spec, space, false)
        }
    }

    /// Forces direct summation; used to cross-validate the transform path.
    pub fn direct(spec: &NoiseSpec, space: &FemSpace) -> Self {
        Self::build(spec, space, false)
    }

    fn build(spec: &NoiseSpec, space: &FemSpace, dst: bool) -> Self {
        let n_h = space.n_h();
        let j_modes = spec.j_modes;
        let amplitudes = (1..=j_modes).map(|j| spec.mode_amplitude(j)).collect();
        let path = if dst {
            assert_eq!(j_modes, n_h, "DST path requires as many modes as nodes");
            let len = 2 * (n_h + 1);
            let fft = FftPlanner::new().plan_fft_forward(len);
            EvalPath::Dst { fft, len }
        } else {
            let sin_table = if j_modes.saturating_mul(n_h) <= MAX_SIN_TABLE {
                let h = space.h();
                let mut table = Vec::with_capacity(j_modes * n_h);
                for j in 1..=j_modes {
                    for i in 0..n_h {
                        table.push((j as f64 * std::f64::consts::PI * (i as f64 + 1.0) * h).sin());
                    }
                }
                Some(table)
            } else {
                None
            };
            EvalPath::Direct { sin_table }
        };
        Self {
            n_h,
            j_modes,
            amplitudes,
            h: space.h(),
            path,
        }
    }

    pub fn uses_transform(&self) -> bool {
        matches!(self.path, EvalPath::Dst { .. })
    }

    pub fn make_scratch(&self) -> EvalScratch {
        match &self.path {
            EvalPath::Dst { fft, len } => EvalScratch {
                buf: vec![Complex::new(0.0, 0.0); *len],
                scratch: vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            },
            EvalPath::Direct { .. } => EvalScratch {
                buf: Vec::new(),
                scratch: Vec::new(),
            },
        }
    }

    /// Writes the nodal increment vector of one step into `out`
    /// (length `n_h`).
    pub fn increment_at_nodes(
        &self,
        w: &WienerIncrements,
        step: usize,
        scratch: &mut EvalScratch,
        out: &mut [f64],
    ) {
        debug_assert_eq!(w.j_modes(), self.j_modes);
        debug_assert_eq!(out.len(), self.n_h);
        let inc = w.step_slice(step);
        match &self.path {
            EvalPath::Dst { fft, len } => {
                let buf = &mut scratch.buf;
                buf[0] = Complex::new(0.0, 0.0);
                buf[self.n_h + 1] = Complex::new(0.0, 0.0);
                for j in 1..=self.j_modes {
                    let a = self.amplitudes[j - 1] * inc[j - 1];
                    buf[j] = Complex::new(a, 0.0);
                    buf[len - j] = Complex::new(-a, 0.0);
                }
                fft.process_with_scratch(buf, &mut scratch.scratch);
                for i in 0..self.n_h {
                    out[i] = -0.5 * buf[i + 1].im;
                }
            }
            EvalPath::Direct { sin_table } => {
                out.fill(0.0);
                if let Some(table) = sin_table {
                    for j in 0..self.j_modes {
                        let a = self.amplitudes[j] * inc[j];
                        let row = &table[j * self.n_h..(j + 1) * self.n_h];
                        for i in 0..self.n_h {
                            out[i] += a * row[i];
                        }
                    }
                } else {
                    for j in 0..self.j_modes {
                        let a = self.amplitudes[j] * inc[j];
                        let freq = (j + 1) as f64 * std::f64::consts::PI * self.h;
                        for i in 0..self.n_h {
                            out[i] += a * (freq * (i as f64 + 1.0)).sin();
                        }
                    }
                }
            }
        }
    }

    /// Allocating convenience wrapper around [`Self::increment_at_nodes`].
    pub fn increment_at_nodes_vec(&self, w: &WienerIncrements, step: usize) -> Coeffs {
        let mut scratch = self.make_scratch();
        let mut out = vec![0.0; self.n_h];
        self.increment_at_nodes(w, step, &mut scratch, &mut out);
        out
    }
}
