//! Galerkin representations of the Stokes-type operator, the transport
//! nonlinearity and the external force.

pub mod force;
pub mod grad;
pub mod model;
pub mod tensor;

pub use force::{force_coeffs, force_derivative_coeffs, lipschitz_probe, ForceKind, ForceSpec};
pub use grad::{grad_matrix, GradMatrix};
pub use model::GalerkinModel;
pub use tensor::{apply_b, galerkin_tensor, GalerkinTensor};
