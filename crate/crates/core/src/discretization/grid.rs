//! Uniform grid on the unit square and the finite-difference stencils that
//! define the discrete model.
//!
//! Unknowns are stream-function values on the `N x N` interior nodes, stored
//! row-major in `y` (`index = j * N + i`, `x = (i + 1) h`, `y = (j + 1) h`).
//! The boundary ring carries `psi = 0`; the clamped condition `d psi / dn = 0`
//! enters the biharmonic through ghost reflection `psi(-h) = psi(h)`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// Interior resolution, mesh width and material parameter `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainGrid<T> {
    n: usize,
    h: T,
    alpha: T,
}

impl<T: Real> DomainGrid<T> {
    pub fn new(n: usize, alpha: T) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 interior points per axis, got {n}")));
        }
        if !(alpha > T::zero()) {
            return Err(Error::InvalidGrid(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { n, h: T::one() / from_usize::<T>(n + 1), alpha })
    }

    /// Interior points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Number of interior unknowns, `N^2`.
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    /// Coordinates of interior node `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> (T, T) {
        (self.h * from_usize::<T>(i + 1), self.h * from_usize::<T>(j + 1))
    }

    /// Samples `f(x, y)` on the interior nodes.
    pub fn sample<F: Fn(T, T) -> T>(&self, f: F) -> DVector<T> {
        DVector::from_fn(self.dim(), |k, _| {
            let (x, y) = self.coords(k % self.n, k / self.n);
            f(x, y)
        })
    }

    /// Value at signed node offsets, zero outside the interior.
    #[inline]
    fn at(&self, v: &DVector<T>, i: isize, j: isize) -> T {
        let n = self.n as isize;
        if i < 0 || j < 0 || i >= n || j >= n {
            T::zero()
        } else {
            v[(j * n + i) as usize]
        }
    }

    /// 5-point `-Delta` with homogeneous Dirichlet data.
    pub fn apply_laplacian(&self, psi: &DVector<T>) -> DVector<T> {
        let n = self.n as isize;
        let inv_h2 = T::one() / (self.h * self.h);
        let four = lit::<T>(4.0);
        let mut out = DVector::zeros(self.dim());
        for j in 0..n {
            for i in 0..n {
                let c = self.at(psi, i, j);
                let s = self.at(psi, i - 1, j) + self.at(psi, i + 1, j) + self.at(psi, i, j - 1) + self.at(psi, i, j + 1);
                out[(j * n + i) as usize] = (four * c - s) * inv_h2;
            }
        }
        out
    }

    /// Clamped 13-point `Delta^2`: the Dirichlet `L^2` plus `2 / h^4` for every
    /// boundary side adjacent to the node (ghost reflection).
    pub fn apply_biharmonic(&self, psi: &DVector<T>) -> DVector<T> {
        let mut out = self.apply_laplacian(&self.apply_laplacian(psi));
        let h2 = self.h * self.h;
        let ghost = lit::<T>(2.0) / (h2 * h2);
        let last = self.n - 1;
        for j in 0..self.n {
            for i in 0..self.n {
                let sides = [i == 0, i == last, j == 0, j == last].iter().filter(|b| **b).count();
                if sides > 0 {
                    let k = self.index(i, j);
                    out[k] += ghost * from_usize::<T>(sides) * psi[k];
                }
            }
        }
        out
    }

    /// `(L + alpha Bih) psi`.
    pub fn apply_w_operator(&self, psi: &DVector<T>) -> DVector<T> {
        self.apply_laplacian(psi) + self.apply_biharmonic(psi) * self.alpha
    }

    /// Grid quadrature `h^2 sum a b`.
    pub fn dot(&self, a: &DVector<T>, b: &DVector<T>) -> T {
        a.dot(b) * self.h * self.h
    }

    /// Centered perpendicular gradient `u = (d_y psi, -d_x psi)` on interior nodes.
    pub fn velocity_from_stream(&self, psi: &DVector<T>) -> VelocityField<T> {
        let n = self.n as isize;
        let inv_2h = T::one() / (lit::<T>(2.0) * self.h);
        let mut u1 = DVector::zeros(self.dim());
        let mut u2 = DVector::zeros(self.dim());
        for j in 0..n {
            for i in 0..n {
                let k = (j * n + i) as usize;
                u1[k] = (self.at(psi, i, j + 1) - self.at(psi, i, j - 1)) * inv_2h;
                u2[k] = -(self.at(psi, i + 1, j) - self.at(psi, i - 1, j)) * inv_2h;
            }
        }
        VelocityField { u1, u2 }
    }

    /// Centered divergence of a velocity field; the boundary ring carries zero
    /// velocity (no-slip, consistent with the clamped reflection).
    pub fn divergence(&self, u: &VelocityField<T>) -> DVector<T> {
        let n = self.n as isize;
        let inv_2h = T::one() / (lit::<T>(2.0) * self.h);
        let mut out = DVector::zeros(self.dim());
        for j in 0..n {
            for i in 0..n {
                let k = (j * n + i) as usize;
                let dx = self.at(&u.u1, i + 1, j) - self.at(&u.u1, i - 1, j);
                let dy = self.at(&u.u2, i, j + 1) - self.at(&u.u2, i, j - 1);
                out[k] = (dx + dy) * inv_2h;
            }
        }
        out
    }

    /// Arakawa's energy- and enstrophy-conserving Jacobian
    /// `J(a, b) = a_x b_y - a_y b_x`, fields extended by zero outside the
    /// interior. The trilinear sum `h^2 sum c J(a, b)` is totally
    /// antisymmetric in `(a, b, c)`.
    pub fn arakawa_jacobian(&self, a: &DVector<T>, b: &DVector<T>) -> DVector<T> {
        let n = self.n as isize;
        let scale = T::one() / (lit::<T>(12.0) * self.h * self.h);
        let mut out = DVector::zeros(self.dim());
        for j in 0..n {
            for i in 0..n {
                let a_e = self.at(a, i + 1, j);
                let a_w = self.at(a, i - 1, j);
                let a_n = self.at(a, i, j + 1);
                let a_s = self.at(a, i, j - 1);
                let a_ne = self.at(a, i + 1, j + 1);
                let a_nw = self.at(a, i - 1, j + 1);
                let a_se = self.at(a, i + 1, j - 1);
                let a_sw = self.at(a, i - 1, j - 1);
                let b_e = self.at(b, i + 1, j);
                let b_w = self.at(b, i - 1, j);
                let b_n = self.at(b, i, j + 1);
                let b_s = self.at(b, i, j - 1);
                let b_ne = self.at(b, i + 1, j + 1);
                let b_nw = self.at(b, i - 1, j + 1);
                let b_se = self.at(b, i + 1, j - 1);
                let b_sw = self.at(b, i - 1, j - 1);

                let j_pp = (a_e - a_w) * (b_n - b_s) - (a_n - a_s) * (b_e - b_w);
                let j_px = a_e * (b_ne - b_se) - a_w * (b_nw - b_sw) - a_n * (b_ne - b_nw) + a_s * (b_se - b_sw);
                let j_xp = b_n * (a_ne - a_nw) - b_s * (a_se - a_sw) - b_e * (a_ne - a_se) + b_w * (a_nw - a_sw);
                out[(j * n + i) as usize] = (j_pp + j_px + j_xp) * scale;
            }
        }
        out
    }
}

/// Velocity components on the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField<T: Real> {
    pub u1: DVector<T>,
    pub u2: DVector<T>,
}

impl<T: Real> VelocityField<T> {
    /// Pointwise scalar cross product `a1 b2 - a2 b1`.
    pub fn cross(&self, other: &Self) -> DVector<T> {
        self.u1.component_mul(&other.u2) - self.u2.component_mul(&other.u1)
    }
}
