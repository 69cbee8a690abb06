//! Pathwise solver for semilinear parabolic equations driven by scalar
//! alpha-Hoelder rough signals, discretized on a spectral scale of periodic
//! Sobolev-type spaces.
//!
//! Layout:
//! - [`rough_path`], [`fbm`]: driving signals, their second level, metrics.
//! - [`spectral`]: Fourier fields, the interpolation scale, the semigroup.
//! - [`controlled`]: trajectories controlled by a rough signal and their
//!   scale-indexed norms.
//! - [`coefficients`]: drift and diffusion operators with derivatives.
//! - [`calculus`]: semigroup-compensated rough integrals and convolutions.
//! - [`solver`]: windowed fixed-point solver, residuals, flow diagnostics.
//! - [`io`]: CSV/JSON serialization with reproducible formatting.
//! - [`suite`]: end-to-end verification checks shared by tests and the CLI.
//!
//! All heavy reductions go through [`par`], which dispatches to rayon when
//! the `parallel` feature (default) is on and to sequential loops otherwise;
//! both modes return identical bits.

pub mod calculus;
pub mod coefficients;
pub mod controlled;
pub mod error;
pub mod fbm;
pub mod grid;
pub mod io;
pub mod par;
pub mod rough_path;
pub mod solver;
pub mod spectral;
pub mod suite;

pub use num_complex;

pub use coefficients::Coefficients;
pub use controlled::{ControlledNormBreakdown, ControlledPath};
pub use error::{Error, Result};
pub use fbm::{fbm_lift, FbmLift};
pub use grid::TimeGrid;
pub use rough_path::{chen_defect, holder_norm, rp_distance, IncrementTable, RoughPath};
pub use solver::{SolutionRecord, SolverConfig, WindowPolicy};
pub use spectral::{SpaceScale, SpectralField};
