//! Stochastic second-grade fluid: Galerkin discretization, pullback dynamics
//! and attractor diagnostics.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod attractor;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod io;
pub mod linearization;
pub mod noise;
pub mod operators;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision aliases (the default).
pub type Basis = discretization::SpectralBasis<f64>;
pub type Model = operators::GalerkinModel<f64>;
pub type Force = operators::ForceSpec<f64>;
pub type Path = noise::WienerPath<f64>;
pub type Noise = noise::NoiseConfig<f64>;
pub type Config = solver::SolverConfig<f64>;
pub type Traj = solver::Trajectory<f64>;
pub type Problem<'a> = solver::Problem<'a, f64>;
pub type Attractor = attractor::AttractorEstimate<f64>;

/// Single-precision aliases, for smoke-level runs.
pub type BasisF32 = discretization::SpectralBasis<f32>;
pub type ModelF32 = operators::GalerkinModel<f32>;
pub type ForceF32 = operators::ForceSpec<f32>;
pub type PathF32 = noise::WienerPath<f32>;
pub type NoiseF32 = noise::NoiseConfig<f32>;
pub type ConfigF32 = solver::SolverConfig<f32>;
pub type TrajF32 = solver::Trajectory<f32>;
pub type ProblemF32<'a> = solver::Problem<'a, f32>;
pub type AttractorF32 = attractor::AttractorEstimate<f32>;
