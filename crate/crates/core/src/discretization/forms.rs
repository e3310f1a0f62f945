//! Assembled bilinear forms of the velocity spaces, expressed on stream
//! functions, and the discrete Poincaré constant.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::grid::DomainGrid;
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

/// Dense symmetric matrices realizing the inner products of the discrete model.
///
/// With `u = perp-grad psi`:
/// `(u, v) = h^2 psi^T L phi`, `((u, v)) = h^2 psi^T Bih phi`,
/// `(u, v)_V = (u, v) + alpha ((u, v))` and
/// `(u, v)_W = h^2 (K psi)^T (K phi)` with `K = L + alpha Bih`.
#[derive(Debug, Clone)]
pub struct DiscreteForms<T: Real> {
    pub grid: DomainGrid<T>,
    /// `-Delta` (5-point, Dirichlet).
    pub l: DMatrix<T>,
    /// Clamped `Delta^2` (13-point).
    pub bih: DMatrix<T>,
    pub m0: DMatrix<T>,
    pub mg: DMatrix<T>,
    pub mv: DMatrix<T>,
    pub mw: DMatrix<T>,
}

fn operator_matrix<T: Real, F: Fn(&DVector<T>) -> DVector<T>>(dim: usize, op: F) -> DMatrix<T> {
    let mut m = DMatrix::zeros(dim, dim);
    let mut e = DVector::zeros(dim);
    for c in 0..dim {
        e[c] = T::one();
        m.set_column(c, &op(&e));
        e[c] = T::zero();
    }
    m
}

/// Mirrors the upper triangle so the matrix is bit-symmetric.
fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            m[(i, j)] = m[(j, i)];
        }
    }
}

pub fn assemble_forms<T: Real>(grid: &DomainGrid<T>) -> DiscreteForms<T> {
    let dim = grid.dim();
    let h2 = grid.h() * grid.h();
    let alpha = grid.alpha();
    let mut l = operator_matrix(dim, |v| grid.apply_laplacian(v));
    let mut bih = operator_matrix(dim, |v| grid.apply_biharmonic(v));
    symmetrize(&mut l);
    symmetrize(&mut bih);
    let m0 = &l * h2;
    let mg = &bih * h2;
    let mv = &m0 + &mg * alpha;
    let k = &l + &bih * alpha;
    let mut mw = (&k * &k) * h2;
    symmetrize(&mut mw);
    DiscreteForms { grid: *grid, l, bih, m0, mg, mv, mw }
}

impl<T: Real> DiscreteForms<T> {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Quadratic form `x^T M y`.
    pub fn pair(m: &DMatrix<T>, x: &DVector<T>, y: &DVector<T>) -> T {
        x.dot(&(m * y))
    }

    pub fn norm_v_sq(&self, psi: &DVector<T>) -> T {
        Self::pair(&self.mv, psi, psi)
    }

    pub fn norm_w_sq(&self, psi: &DVector<T>) -> T {
        Self::pair(&self.mw, psi, psi)
    }

    /// `|curl u|^2 = h^2 |L psi|^2`.
    pub fn curl_sq(&self, psi: &DVector<T>) -> T {
        let c = &self.l * psi;
        c.dot(&c) * self.grid.h() * self.grid.h()
    }
}

/// Generalized symmetric-definite eigenproblem `A x = mu B x` with `B` SPD,
/// reduced through the Cholesky factor of `B`. Returns ascending eigenvalues
/// and `B`-orthonormal eigenvectors as columns.
pub fn generalized_eigen<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<(DVector<T>, DMatrix<T>)> {
    let chol = Cholesky::new(b.clone()).ok_or_else(|| Error::Eigen("right-hand matrix is not positive definite".into()))?;
    let lower = chol.l();
    let y = lower
        .solve_lower_triangular(a)
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let mut c = lower
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    // C = L^-1 A L^-T, symmetric up to round-off.
    let n = c.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let m = (c[(i, j)] + c[(j, i)]) * crate::scalar::lit::<T>(0.5);
            c[(i, j)] = m;
            c[(j, i)] = m;
        }
    }
    let eig = SymmetricEigen::try_new(c, T::machine_eps(), 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    let vectors = lower
        .transpose()
        .solve_upper_triangular(&vectors)
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    Ok((values, vectors))
}

/// Discrete Poincaré constant and the norm of `(I + alpha A)^{-1}` on `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareReport<T> {
    /// `P^2 = sup |v|^2 / ||v||^2`.
    pub p2: T,
    /// `sup (v, v) / ((v, v) + alpha ((v, v)))`.
    pub resolvent_norm: T,
    /// `|resolvent_norm - P^2 / (P^2 + alpha)|`.
    pub identity_residual: T,
}

pub fn poincare_constant<T: Real>(forms: &DiscreteForms<T>) -> Result<PoincareReport<T>> {
    let (mu, _) = generalized_eigen(&forms.m0, &forms.mg)?;
    let p2 = mu[mu.len() - 1];
    let (rho, _) = generalized_eigen(&forms.m0, &forms.mv)?;
    let resolvent_norm = rho[rho.len() - 1];
    let alpha = forms.grid.alpha();
    let identity_residual = (resolvent_norm - p2 / (p2 + alpha)).abs();
    Ok(PoincareReport { p2, resolvent_norm, identity_residual })
}

/// `sup |curl v|^2 / |v|_V^2` on the discrete model (bounded by `2 / alpha`).
pub fn curl_v_constant<T: Real>(forms: &DiscreteForms<T>) -> Result<T> {
    let h2 = forms.grid.h() * forms.grid.h();
    let curl = (forms.l.transpose() * &forms.l) * h2;
    let (mu, _) = generalized_eigen(&curl, &forms.mv)?;
    Ok(mu[mu.len() - 1])
}

impl<T: Real> std::fmt::Display for PoincareReport<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "P^2 = {:.6e}, resolvent norm = {:.6e}, identity residual = {:.2e}",
            to_f64(self.p2),
            to_f64(self.resolvent_norm),
            to_f64(self.identity_residual)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forms(n: usize, alpha: f64) -> DiscreteForms<f64> {
        assemble_forms(&DomainGrid::new(n, alpha).unwrap())
    }

    #[test]
    fn matrices_are_symmetric_and_consistent() {
        let f = forms(6, 0.1);
        for m in [&f.l, &f.bih, &f.m0, &f.mg, &f.mv, &f.mw] {
            assert_eq!((m - m.transpose()).amax(), 0.0);
        }
        assert_eq!((&f.mv - (&f.m0 + &f.mg * 0.1)).amax(), 0.0);
        for m in [&f.m0, &f.mg, &f.mv, &f.mw] {
            assert!(Cholesky::new(m.clone()).is_some());
        }
    }

    #[test]
    fn matrix_forms_match_stencils() {
        let f = forms(5, 0.3);
        let g = f.grid;
        let psi = g.sample(|x, y| x * y * (1.0 - x) + (4.0 * y).sin());
        assert!((&f.l * &psi - g.apply_laplacian(&psi)).amax() < 1e-9);
        assert!((&f.bih * &psi - g.apply_biharmonic(&psi)).amax() < 1e-6);
        let q = g.apply_w_operator(&psi);
        let w = g.dot(&q, &q);
        assert!((f.norm_w_sq(&psi) - w).abs() < 1e-10 * w);
    }

    #[test]
    fn poincare_identity_holds() {
        let f = forms(8, 0.1);
        let r = poincare_constant(&f).unwrap();
        assert!(r.identity_residual <= 1e-10, "{r}");
        assert!(r.p2 > 0.0);
    }

    #[test]
    fn resolvent_norm_decreases_in_alpha() {
        let norms: Vec<f64> = [0.1, 1.0, 10.0]
            .iter()
            .map(|&a| poincare_constant(&forms(6, a)).unwrap().resolvent_norm)
            .collect();
        assert!(norms[0] > norms[1] && norms[1] > norms[2]);
    }

    #[test]
    fn curl_constant_within_continuum_bound() {
        let f = forms(6, 0.1);
        let c = curl_v_constant(&f).unwrap();
        assert!(c > 0.0 && c <= 2.0 / 0.1);
    }
}
