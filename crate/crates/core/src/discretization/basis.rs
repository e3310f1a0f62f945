//! W-orthonormal eigenbasis of `(u, e)_W = lambda (u, e)_V` and its on-disk cache.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use super::forms::{generalized_eigen, DiscreteForms};
use super::grid::{DomainGrid, VelocityField};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

const CACHE_MAGIC: &[u8; 8] = b"SGFBAS01";

/// First `n` generalized eigenpairs, stored as stream functions with derived
/// velocity and potential-vorticity grids.
#[derive(Debug, Clone)]
pub struct SpectralBasis<T: Real> {
    pub grid: DomainGrid<T>,
    /// Ascending eigenvalues.
    pub lambdas: DVector<T>,
    /// Stream functions, one column per mode.
    pub psis: DMatrix<T>,
    /// `q_i = curl(e_i - alpha Delta e_i) = K psi_i`, one column per mode.
    pub qs: DMatrix<T>,
    pub velocities: Vec<VelocityField<T>>,
}

pub fn solve_eigenbasis<T: Real>(forms: &DiscreteForms<T>, n: usize) -> Result<SpectralBasis<T>> {
    let dim = forms.dim();
    if n == 0 || n > dim {
        return Err(Error::InvalidConfig(format!("mode count {n} must lie in 1..={dim}")));
    }
    let (values, vectors) = generalized_eigen(&forms.mw, &forms.mv)?;
    if !(values[0] > T::zero()) {
        return Err(Error::Eigen(format!("non-positive leading eigenvalue {}", values[0])));
    }
    let mut psis = DMatrix::zeros(dim, n);
    for i in 0..n {
        let mut x = vectors.column(i).into_owned();
        let w = DiscreteForms::pair(&forms.mw, &x, &x).sqrt();
        x /= w;
        // Deterministic sign: largest-magnitude entry positive.
        let imax = x.iamax();
        if x[imax] < T::zero() {
            x = -x;
        }
        psis.set_column(i, &x);
    }
    let lambdas = DVector::from_iterator(n, values.iter().take(n).copied());
    Ok(SpectralBasis::from_parts(forms.grid, lambdas, psis))
}

impl<T: Real> SpectralBasis<T> {
    pub fn from_parts(grid: DomainGrid<T>, lambdas: DVector<T>, psis: DMatrix<T>) -> Self {
        let n = lambdas.len();
        let mut qs = DMatrix::zeros(grid.dim(), n);
        let mut velocities = Vec::with_capacity(n);
        for i in 0..n {
            let psi = psis.column(i).into_owned();
            qs.set_column(i, &grid.apply_w_operator(&psi));
            velocities.push(grid.velocity_from_stream(&psi));
        }
        Self { grid, lambdas, psis, qs, velocities }
    }

    /// Mode count.
    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn psi(&self, i: usize) -> DVector<T> {
        self.psis.column(i).into_owned()
    }

    /// Stream function of `sum c_i e_i`.
    pub fn stream(&self, c: &DVector<T>) -> DVector<T> {
        &self.psis * c
    }

    /// Potential vorticity of `sum c_i e_i`.
    pub fn vorticity(&self, c: &DVector<T>) -> DVector<T> {
        &self.qs * c
    }

    /// W-orthogonal projection of a stream-function field onto the span:
    /// `c_k = (f, e_k)_W = h^2 (K psi_f) . q_k`.
    pub fn project(&self, psi: &DVector<T>) -> DVector<T> {
        let q = self.grid.apply_w_operator(psi);
        let h2 = self.grid.h() * self.grid.h();
        self.qs.tr_mul(&q) * h2
    }

    /// `|v|_W^2 = sum c_i^2`.
    pub fn norm_w_sq(c: &DVector<T>) -> T {
        c.dot(c)
    }

    /// `|v|_V^2 = sum c_i^2 / lambda_i`.
    pub fn norm_v_sq(&self, c: &DVector<T>) -> T {
        c.iter().zip(self.lambdas.iter()).fold(T::zero(), |acc, (x, l)| acc + *x * *x / *l)
    }

    /// `(u, v)_V = sum a_i b_i / lambda_i`.
    pub fn inner_v(&self, a: &DVector<T>, b: &DVector<T>) -> T {
        a.iter()
            .zip(b.iter())
            .zip(self.lambdas.iter())
            .fold(T::zero(), |acc, ((x, y), l)| acc + *x * *y / *l)
    }

    /// Gram matrix `psi_i^T M psi_j`.
    pub fn gram(&self, m: &DMatrix<T>) -> DMatrix<T> {
        self.psis.tr_mul(&(m * &self.psis))
    }

    fn payload(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&(self.grid.n() as u64).to_le_bytes());
        buf.extend_from_slice(&to_f64(self.grid.alpha()).to_le_bytes());
        buf.extend_from_slice(&(self.n() as u64).to_le_bytes());
        for l in self.lambdas.iter() {
            buf.extend_from_slice(&to_f64(*l).to_le_bytes());
        }
        for x in self.psis.iter() {
            buf.extend_from_slice(&to_f64(*x).to_le_bytes());
        }
        buf
    }

    /// SHA-256 of the serialized basis, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.payload()))
    }

    /// Writes `(N, alpha, n, lambdas, psis)` followed by their SHA-256.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = self.payload();
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        if bytes.len() < CACHE_MAGIC.len() + 24 + 32 || &bytes[..8] != CACHE_MAGIC {
            return Err(Error::Cache(format!("{} is not a basis cache", path.display())));
        }
        let (payload, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(payload).as_slice() != digest {
            return Err(Error::Cache(format!("{}: content hash mismatch", path.display())));
        }
        let mut reader = ByteReader { bytes: payload, pos: 8 };
        let grid_n = reader.u64()? as usize;
        let alpha: T = lit(reader.f64()?);
        let n = reader.u64()? as usize;
        let grid = DomainGrid::new(grid_n, alpha)?;
        let mut lambdas = DVector::zeros(n);
        for l in lambdas.iter_mut() {
            *l = lit(reader.f64()?);
        }
        let mut psis = DMatrix::zeros(grid.dim(), n);
        for x in psis.iter_mut() {
            *x = lit(reader.f64()?);
        }
        if reader.pos != payload.len() {
            return Err(Error::Cache("trailing bytes in basis cache".into()));
        }
        Ok(Self::from_parts(grid, lambdas, psis))
    }

    /// Cache file name for a configuration.
    pub fn cache_file(dir: &Path, grid: &DomainGrid<T>, n: usize) -> PathBuf {
        dir.join(format!("basis_N{}_alpha{:e}_n{}.bin", grid.n(), to_f64(grid.alpha()), n))
    }

    /// Loads the basis from `dir` when a matching cache exists, otherwise
    /// solves and stores it.
    pub fn cached(forms: &DiscreteForms<T>, n: usize, dir: &Path) -> Result<Self> {
        let file = Self::cache_file(dir, &forms.grid, n);
        if file.exists() {
            let basis = Self::load(&file)?;
            if basis.grid.n() == forms.grid.n() && basis.grid.alpha() == forms.grid.alpha() && basis.n() == n {
                return Ok(basis);
            }
        }
        let basis = solve_eigenbasis(forms, n)?;
        fs::create_dir_all(dir)?;
        basis.save(&file)?;
        Ok(basis)
    }
}

pub(crate) struct ByteReader<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl ByteReader<'_> {
    fn take(&mut self) -> Result<[u8; 8]> {
        let end = self.pos + 8;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Cache("truncated cache".into()))?;
        self.pos = end;
        Ok(chunk.try_into().expect("8-byte chunk"))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::forms::assemble_forms;
    use nalgebra::SymmetricEigen;

    fn setup(n_grid: usize, n: usize) -> (DiscreteForms<f64>, SpectralBasis<f64>) {
        let forms = assemble_forms(&DomainGrid::new(n_grid, 0.1).unwrap());
        let basis = solve_eigenbasis(&forms, n).unwrap();
        (forms, basis)
    }

    #[test]
    fn gram_matrices() {
        let (forms, basis) = setup(8, 10);
        let gw = basis.gram(&forms.mw);
        let gv = basis.gram(&forms.mv);
        for i in 0..10 {
            for j in 0..10 {
                let dw = if i == j { 1.0 } else { 0.0 };
                let dv = if i == j { 1.0 / basis.lambdas[i] } else { 0.0 };
                assert!((gw[(i, j)] - dw).abs() <= 1e-10);
                assert!((gv[(i, j)] - dv).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn eigenvalues_match_direct_solve_of_w_operator() {
        // MW = h^2 K^2 and MV = h^2 K, so the generalized eigenvalues are the
        // eigenvalues of K itself: an independent dense route.
        let (forms, basis) = setup(8, 4);
        let k = &forms.l + &forms.bih * 0.1;
        let mut ev: Vec<f64> = SymmetricEigen::new(k).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for i in 0..4 {
            assert!((basis.lambdas[i] - ev[i]).abs() <= 1e-8 * ev[i]);
        }
    }

    #[test]
    fn lambdas_ascending_positive_and_growing() {
        let (_, basis) = setup(8, 20);
        assert!(basis.lambdas[0] > 0.0);
        for w in basis.lambdas.as_slice().windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-12));
        }
        assert!(basis.lambdas[19] > 2.0 * basis.lambdas[0]);
    }

    #[test]
    fn vorticity_norm_is_one() {
        let (_, basis) = setup(8, 6);
        for i in 0..6 {
            let q = basis.qs.column(i).into_owned();
            assert!((basis.grid.dot(&q, &q) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn modes_are_divergence_free() {
        let (_, basis) = setup(6, 5);
        for u in &basis.velocities {
            let scale = u.u1.amax().max(u.u2.amax()) / basis.grid.h();
            assert!(basis.grid.divergence(u).amax() <= 1e-13 * scale);
        }
    }

    #[test]
    fn projection_of_a_mode_is_a_unit_vector() {
        let (_, basis) = setup(6, 5);
        let c = basis.project(&basis.psi(2));
        for k in 0..5 {
            let e = if k == 2 { 1.0 } else { 0.0 };
            assert!((c[k] - e).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_mode_count() {
        let forms = assemble_forms(&DomainGrid::new(4, 0.1).unwrap());
        assert!(solve_eigenbasis(&forms, 0).is_err());
        assert!(solve_eigenbasis(&forms, 17).is_err());
    }

    #[test]
    fn cache_round_trip_and_tamper_detection() {
        let (forms, basis) = setup(6, 4);
        let dir = tempfile::tempdir().unwrap();
        let a = SpectralBasis::cached(&forms, 4, dir.path()).unwrap();
        let b = SpectralBasis::cached(&forms, 4, dir.path()).unwrap();
        assert_eq!(a.psis, basis.psis);
        assert_eq!(b.psis, basis.psis);
        assert_eq!(a.content_hash(), basis.content_hash());
        let file = SpectralBasis::cache_file(dir.path(), &forms.grid, 4);
        let mut bytes = fs::read(&file).unwrap();
        bytes[40] ^= 1;
        fs::write(&file, bytes).unwrap();
        assert!(matches!(SpectralBasis::<f64>::load(&file), Err(Error::Cache(_))));
    }

    /// Smallest eigenvalue of the SPD operator `K` by inverse iteration with a
    /// banded Cholesky factor (half-bandwidth 2N); independent of the dense
    /// generalized solver and cheap enough for N = 63.
    fn banded_lambda1(n_grid: usize, alpha: f64) -> f64 {
        let forms = assemble_forms(&DomainGrid::new(n_grid, alpha).unwrap());
        let k = &forms.l + &forms.bih * alpha;
        let dim = k.nrows();
        let bw = 2 * n_grid;
        // Lower band storage: band[i][d] = L[i, i - d].
        let mut band = vec![vec![0.0f64; bw + 1]; dim];
        for i in 0..dim {
            for j in i.saturating_sub(bw)..=i {
                let mut s = k[(i, j)];
                for p in i.saturating_sub(bw).max(j.saturating_sub(bw))..j {
                    s -= band[i][i - p] * band[j][j - p];
                }
                if i == j {
                    band[i][0] = s.sqrt();
                } else {
                    band[i][i - j] = s / band[j][0];
                }
            }
        }
        let solve = |b: &[f64]| -> Vec<f64> {
            let mut y = b.to_vec();
            for i in 0..dim {
                for p in i.saturating_sub(bw)..i {
                    y[i] -= band[i][i - p] * y[p];
                }
                y[i] /= band[i][0];
            }
            for i in (0..dim).rev() {
                for r in i + 1..(i + bw + 1).min(dim) {
                    y[i] -= band[r][r - i] * y[r];
                }
                y[i] /= band[i][0];
            }
            y
        };
        let mut x = vec![1.0; dim];
        let mut lam = 0.0;
        for _ in 0..80 {
            let y = solve(&x);
            let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let xx: f64 = x.iter().map(|a| a * a).sum();
            lam = xx / xy;
            let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
            x = y.iter().map(|a| a / norm).collect();
        }
        lam
    }

    #[test]
    fn banded_oracle_agrees_with_basis() {
        let (_, basis) = setup(8, 1);
        assert!((banded_lambda1(8, 0.1) - basis.lambdas[0]).abs() <= 1e-9 * basis.lambdas[0]);
    }

    #[test]
    fn refinement_consistency_of_leading_eigenvalue() {
        // Self-convergence over N = 15, 31, 63 (h halves each time).
        let (a, b, c) = (banded_lambda1(15, 0.1), banded_lambda1(31, 0.1), banded_lambda1(63, 0.1));
        let order = ((a - b) / (b - c)).abs().log2();
        assert!(order >= 1.8, "observed order {order}");
    }
}
