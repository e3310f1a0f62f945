use std::path::Path;

use nalgebra::DMatrix;

use super::grad::{grad_matrix, GradMatrix};
use super::tensor::{galerkin_tensor, GalerkinTensor};
use crate::discretization::{assemble_forms, poincare_constant, solve_eigenbasis, DiscreteForms, DomainGrid, PoincareReport, SpectralBasis};
use crate::error::Result;
use crate::scalar::Real;

/// Everything the Galerkin system needs, assembled once and shared read-only.
#[derive(Debug, Clone)]
pub struct GalerkinModel<T: Real> {
    pub forms: DiscreteForms<T>,
    pub basis: SpectralBasis<T>,
    pub grad: GradMatrix<T>,
    pub tensor: GalerkinTensor<T>,
    /// `M0 Psi`: pairs a grid stream function with every mode in `L^2`.
    pub m0_psi: DMatrix<T>,
    pub poincare: PoincareReport<T>,
}

impl<T: Real> GalerkinModel<T> {
    pub fn build(grid_n: usize, alpha: T, n: usize) -> Result<Self> {
        let forms = assemble_forms(&DomainGrid::new(grid_n, alpha)?);
        let basis = solve_eigenbasis(&forms, n)?;
        let tensor = galerkin_tensor(&basis);
        Self::from_parts(forms, basis, tensor)
    }

    /// As [`GalerkinModel::build`], reusing basis and tensor caches in `dir`.
    pub fn build_cached(grid_n: usize, alpha: T, n: usize, dir: &Path) -> Result<Self> {
        let forms = assemble_forms(&DomainGrid::new(grid_n, alpha)?);
        let basis = SpectralBasis::cached(&forms, n, dir)?;
        let tensor = GalerkinTensor::cached(&basis, dir)?;
        Self::from_parts(forms, basis, tensor)
    }

    pub fn from_parts(forms: DiscreteForms<T>, basis: SpectralBasis<T>, tensor: GalerkinTensor<T>) -> Result<Self> {
        let grad = grad_matrix(&basis, &forms)?;
        let m0_psi = &forms.m0 * &basis.psis;
        let poincare = poincare_constant(&forms)?;
        Ok(Self { forms, basis, grad, tensor, m0_psi, poincare })
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn alpha(&self) -> T {
        self.forms.grid.alpha()
    }

    /// `P^2`.
    pub fn p2(&self) -> T {
        self.poincare.p2
    }
}
