//! Numerical bridge between max-relative-entropy problems, polytope fiber
//! densities, and log-barrier interior-point duals.
//!
//! The library is organized around one identity chain: the log-partition
//! function of a KL max-entropy problem is the log Laplace transform of the
//! fiber density of the moment map (Federer's coarea formula), so the dual
//! value `Theta(y)` is the Cramer transform of that density, and for linear
//! maps on the orthant (resp. the PSD cone) the perspective function
//! `eps * Theta(y/eps)` equals, up to `eps ln s`, the log-barrier value of
//! the dual LP (resp. SDP) at barrier parameter `eps`.
//!
//! Every identity is checkable numerically: exact fiber quadrature,
//! exhaustive vertex enumeration, seeded Monte-Carlo estimates, and
//! finite-difference probes all live next to the solvers they verify; the
//! `verify` module bundles them into named pass/fail suites.
//!
//! ```rust
//! use cramer_bridge::{solve_dual, Backend, MaxentProblem, SolverOptions, SolveStatus};
//! use nalgebra::{DMatrix, DVector};
//!
//! // Independent exponentials with rates (1, 2) on the orthant,
//! // constrained to E[x1 + x2] = 1.
//! let problem = MaxentProblem::new(
//!     Backend::LpOrthant {
//!         a: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
//!         c: DVector::from_row_slice(&[1.0, 2.0]),
//!     },
//!     DVector::from_element(1, 1.0),
//! )?;
//! let result = solve_dual(&problem, &SolverOptions::default())?;
//! assert_eq!(result.status, SolveStatus::Converged);
//! // The optimal tilt solves lambda^2 - lambda - 1 = 0.
//! assert!((result.lambda_star[0] - (1.0 - 5.0_f64.sqrt()) / 2.0).abs() < 1e-9);
//! assert!((result.theta - 0.1324543).abs() < 1e-6);
//! # Ok::<(), cramer_bridge::Error>(())
//! ```
//!
//! See the crate examples for one runnable program per capability, or the
//! `cramer-bridge` binary (`solve`, `sweep`, `verify`) for the file-driven
//! interface.

pub mod cli;
pub mod error;
pub mod fiber;
pub mod lp;
pub mod maxent;
pub mod numeric;
pub mod oracles;
pub mod problem;
pub mod report;
pub mod sdp;
pub mod verify;

pub use error::{Error, Result};
pub use maxent::{
    log_partition, log_partition_derivatives, optimal_density_at, solve_dual,
    theta_and_perspective, Backend, BoxDensity, BoxMap, DomainPoint, DualResult, MaxentProblem,
    SolveStatus, SolverOptions,
};
pub use report::{sweep_csv, SweepRow};
