//! Finite-volume solvers for degenerate parabolic sand-transport equations
//! `dz/dt - eps^-i div(A^eps grad z) = eps^-i div C^eps` with Robin data,
//! their `theta`-periodic cell problems and homogenized limits, and the
//! two-scale convergence and corrector studies built on them.
//!
//! Everything is generic over [`Real`]; the `*64` and `*32` aliases below
//! fix the precision.

pub mod cell_solver;
pub mod coeffs;
pub mod eps_solver;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod presets;
pub mod scalar;
pub mod schedule;
pub mod twoscale;

pub use error::{Error, Result};
pub use scalar::{Real, Vec2};

pub type Grid64 = grid::Grid<f64>;
pub type Grid32 = grid::Grid<f32>;
pub type Field64 = grid::ScalarField<f64>;
pub type Field32 = grid::ScalarField<f32>;
pub type FluxLaw64 = coeffs::FluxLaw<f64>;
pub type FluxLaw32 = coeffs::FluxLaw<f32>;
pub type TidalForcing64 = coeffs::TidalForcing<f64>;
pub type TidalForcing32 = coeffs::TidalForcing<f32>;
pub type ModelConstants64 = coeffs::ModelConstants<f64>;
pub type ModelConstants32 = coeffs::ModelConstants<f32>;
pub type EpsProblem64 = eps_solver::EpsProblem<f64>;
pub type EpsProblem32 = eps_solver::EpsProblem<f32>;
pub type SolveRun64 = eps_solver::SolveRun<f64>;
pub type SolveRun32 = eps_solver::SolveRun<f32>;
pub type CellProblem64 = cell_solver::CellProblem<f64>;
pub type CellProblem32 = cell_solver::CellProblem<f32>;
pub type PeriodicProfile64 = cell_solver::PeriodicProfile<f64>;
pub type PeriodicProfile32 = cell_solver::PeriodicProfile<f32>;
pub type TwoScaleProblem64 = twoscale::TwoScaleProblem<f64>;
pub type TwoScaleProblem32 = twoscale::TwoScaleProblem<f32>;
