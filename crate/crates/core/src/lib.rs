//! Hospital case-mix capacity assessment.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalar`], [`solver`], [`quadratic`] and [`norms`] hold the numerical
//!   kernel. They are generic over the floating point type (`f32`/`f64`).
//! * [`domain`] holds the hospital, patient and schedule types, and
//!   [`fileio`] reads and writes the comma separated project files.
//! * [`assess`] does the static (closed form) assessments and utilisation
//!   reports, [`models`] builds and solves the optimisation models.
//! * [`tasks`] is the request/result layer shared by the CLI and the HTTP
//!   service, [`report`] renders results, [`generate`] builds synthetic
//!   instances.

pub mod assess;
pub mod domain;
pub mod fileio;
pub mod generate;
pub mod models;
pub mod norms;
pub mod quadratic;
pub mod report;
pub mod scalar;
pub mod solver;
pub mod tasks;

pub use scalar::Scalar;

/// Linear program over `f64`, the precision used by every hospital model.
pub type LpModel = solver::Model<f64>;
/// Solution of an [`LpModel`].
pub type LpSolution = solver::Solution<f64>;
/// Single precision linear program.
pub type LpModel32 = solver::Model<f32>;
/// Single precision solution.
pub type LpSolution32 = solver::Solution<f32>;
/// Expanded sum-of-squares objective over `f64`.
pub type QuadraticForm = quadratic::QuadraticForm<f64>;
/// Piecewise linear objective term over `f64`.
pub type PwlTerm = quadratic::PwlTerm<f64>;
/// Patient counts over `f64`.
pub type Cohort = norms::Cohort<f64>;
