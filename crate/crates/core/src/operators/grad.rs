use nalgebra::DMatrix;

use crate::discretization::{generalized_eigen, DiscreteForms, SpectralBasis};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `G[i, j] = ((e_i, e_j))`, the gradient pairing of basis modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GradMatrix<T: Real> {
    pub g: DMatrix<T>,
}

pub fn grad_matrix<T: Real>(basis: &SpectralBasis<T>, forms: &DiscreteForms<T>) -> Result<GradMatrix<T>> {
    if basis.psis.nrows() != forms.dim() {
        return Err(Error::DimensionMismatch { expected: forms.dim(), got: basis.psis.nrows() });
    }
    let mut g = basis.gram(&forms.mg);
    let n = g.nrows();
    for j in 0..n {
        for i in j + 1..n {
            g[(i, j)] = g[(j, i)];
        }
    }
    Ok(GradMatrix { g })
}

impl<T: Real> GradMatrix<T> {
    /// Spectrum of the Galerkin operator in duality coordinates, `diag(lambda) G`,
    /// obtained from the symmetric similar matrix `Lambda^{1/2} G Lambda^{1/2}`.
    pub fn galerkin_spectrum(&self, lambdas: &nalgebra::DVector<T>) -> Result<nalgebra::DVector<T>> {
        let n = self.g.nrows();
        let d = DMatrix::from_fn(n, n, |i, j| lambdas[i].sqrt() * self.g[(i, j)] * lambdas[j].sqrt());
        let (values, _) = generalized_eigen(&d, &DMatrix::identity(n, n))?;
        Ok(values)
    }
}
