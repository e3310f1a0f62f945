//! Function spaces `V`, `W` of divergence-free fields on the unit square,
//! realized through clamped stream functions, and their spectral basis.

pub mod basis;
pub mod forms;
pub mod grid;

pub use basis::{solve_eigenbasis, SpectralBasis};
pub use forms::{assemble_forms, curl_v_constant, generalized_eigen, poincare_constant, DiscreteForms, PoincareReport};
pub use grid::{DomainGrid, VelocityField};

use nalgebra::DVector;

use crate::scalar::Real;

/// Perpendicular gradient of a stream function.
pub fn velocity_from_stream<T: Real>(grid: &DomainGrid<T>, psi: &DVector<T>) -> VelocityField<T> {
    grid.velocity_from_stream(psi)
}

/// `q = curl(u - alpha Delta u) = (L + alpha Bih) psi`.
pub fn potential_vorticity<T: Real>(forms: &DiscreteForms<T>, psi: &DVector<T>, alpha: T) -> DVector<T> {
    &forms.l * psi + (&forms.bih * psi) * alpha
}
