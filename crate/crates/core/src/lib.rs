//! Strong-error experiments for stochastic PDEs on the unit interval.
//!
//! The crate discretizes semilinear and quasilinear second-order SPDEs with
//! piecewise linear finite elements in space and two implicit time stepping
//! schemes, a semi-implicit Euler method and a two-step BDF method, both
//! with Maruyama treatment of the Q-Wiener noise. A Monte Carlo harness
//! estimates strong errors against a fine reference solution computed on
//! the same noise path, together with confidence intervals and observed
//! convergence orders.
//!
//! ```no_run
//! use spde_core::harness::{run_experiment, ExperimentConfig};
//!
//! let report = run_experiment(&ExperimentConfig::default()).unwrap();
//! for row in &report.rows {
//!     println!("{} N_k={} error={:.6}", row.scheme, row.n_k, row.error);
//! }
//! ```

pub mod error;
pub mod fem;
pub mod harness;
pub mod linalg;
pub mod problems;
pub mod schemes;
pub mod wiener;

pub use error::SolverError;
pub use fem::{Coeffs, FemSpace};
pub use harness::{
    compute_reference, confidence_interval, eoc, normal_quantile, run_experiment, strong_error,
    ErrorReport, ExperimentConfig, LevelResult, SchemeSelection,
};
pub use linalg::{TriDiag, TriDiagFactor};
pub use problems::{verify_assumptions, AssumptionCheck, AssumptionReport, SpdeProblem};
pub use schemes::{
    initial_state, run_trajectory, NewtonConfig, NewtonReport, Scheme, Stepper, TemporalGrid,
    Trajectory,
};
pub use wiener::{NodalEvaluator, NoiseSpec, WienerIncrements};
