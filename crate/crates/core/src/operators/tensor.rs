use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::discretization::basis::ByteReader;
use crate::discretization::SpectralBasis;
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

const CACHE_MAGIC: &[u8; 8] = b"SGFTEN01";

/// Duality coefficients `T[i, j, k] = <B(e_i, e_j), e_k> = h^2 sum q_i (e_j x e_k)`.
///
/// The cross product of perpendicular gradients is the Jacobian of the stream
/// functions; it is evaluated with Arakawa's stencil so that the trilinear
/// sum is totally antisymmetric on the grid. Only `j < k` is computed; the
/// other half is stored as the exact negation, and the diagonal is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinTensor<T: Real> {
    n: usize,
    data: Vec<T>,
}

pub fn galerkin_tensor<T: Real>(basis: &SpectralBasis<T>) -> GalerkinTensor<T> {
    let n = basis.n();
    let grid = &basis.grid;
    let h2 = grid.h() * grid.h();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect();
    let columns: Vec<DVector<T>> = pairs
        .par_iter()
        .map(|&(j, k)| {
            let jac = grid.arakawa_jacobian(&basis.psi(j), &basis.psi(k));
            basis.qs.tr_mul(&jac) * h2
        })
        .collect();
    let mut data = vec![T::zero(); n * n * n];
    for (&(j, k), col) in pairs.iter().zip(&columns) {
        for i in 0..n {
            data[(i * n + j) * n + k] = col[i];
            data[(i * n + k) * n + j] = -col[i];
        }
    }
    GalerkinTensor { n, data }
}

impl<T: Real> GalerkinTensor<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// `max |T[i,j,k] + T[i,k,j]|`.
    pub fn antisymmetry_defect(&self) -> T {
        let n = self.n;
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) + self.get(i, k, j)).abs());
                }
            }
        }
        worst
    }

    /// `out[k] = sum_{i,j} cu[i] cv[j] T[i, j, k]`.
    pub fn apply(&self, cu: &DVector<T>, cv: &DVector<T>) -> Result<DVector<T>> {
        let n = self.n;
        for len in [cu.len(), cv.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        let mut out = DVector::zeros(n);
        for i in 0..n {
            if cu[i] == T::zero() {
                continue;
            }
            for j in 0..n {
                let w = cu[i] * cv[j];
                let row = &self.data[(i * n + j) * n..(i * n + j + 1) * n];
                for (o, t) in out.iter_mut().zip(row) {
                    *o += w * *t;
                }
            }
        }
        Ok(out)
    }

    fn payload(&self, grid_n: usize, alpha: T, basis_hash: &str) -> Vec<u8> {
        let mut buf = Vec::with_capacity(8 * (self.data.len() + 4) + 64);
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&(grid_n as u64).to_le_bytes());
        buf.extend_from_slice(&to_f64(alpha).to_le_bytes());
        buf.extend_from_slice(&(self.n as u64).to_le_bytes());
        buf.extend_from_slice(basis_hash.as_bytes());
        for x in &self.data {
            buf.extend_from_slice(&to_f64(*x).to_le_bytes());
        }
        buf
    }

    pub fn cache_file(dir: &Path, basis: &SpectralBasis<T>) -> PathBuf {
        dir.join(format!("tensor_{}.bin", &basis.content_hash()[..16]))
    }

    /// Writes the tensor keyed by `(N, alpha, n, basis hash)`.
    pub fn save(&self, path: &Path, basis: &SpectralBasis<T>) -> Result<()> {
        let mut buf = self.payload(basis.grid.n(), basis.grid.alpha(), &basis.content_hash());
        let digest = Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        fs::write(path, buf)?;
        Ok(())
    }

    /// Loads a tensor, rejecting files whose key does not match `basis`.
    pub fn load(path: &Path, basis: &SpectralBasis<T>) -> Result<Self> {
        let bytes = fs::read(path)?;
        let hash = basis.content_hash();
        let header = 8 + 24 + hash.len();
        if bytes.len() < header + 32 || &bytes[..8] != CACHE_MAGIC {
            return Err(Error::Cache(format!("{} is not a tensor cache", path.display())));
        }
        let (payload, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(payload).as_slice() != digest {
            return Err(Error::Cache(format!("{}: content hash mismatch", path.display())));
        }
        let mut reader = ByteReader { bytes: payload, pos: 8 };
        let grid_n = reader.u64()? as usize;
        let alpha = reader.f64()?;
        let n = reader.u64()? as usize;
        let key = &payload[32..header];
        if grid_n != basis.grid.n() || alpha != to_f64(basis.grid.alpha()) || n != basis.n() || key != hash.as_bytes() {
            return Err(Error::Cache(format!("{}: key does not match the basis", path.display())));
        }
        reader.pos = header;
        let mut data = Vec::with_capacity(n * n * n);
        for _ in 0..n * n * n {
            data.push(lit(reader.f64()?));
        }
        if reader.pos != payload.len() {
            return Err(Error::Cache("trailing bytes in tensor cache".into()));
        }
        Ok(Self { n, data })
    }

    pub fn cached(basis: &SpectralBasis<T>, dir: &Path) -> Result<Self> {
        let file = Self::cache_file(dir, basis);
        if file.exists() {
            if let Ok(t) = Self::load(&file, basis) {
                return Ok(t);
            }
        }
        let t = galerkin_tensor(basis);
        fs::create_dir_all(dir)?;
        t.save(&file, basis)?;
        Ok(t)
    }
}

/// `apply_B(T, cu, cv)`.
pub fn apply_b<T: Real>(tensor: &GalerkinTensor<T>, cu: &DVector<T>, cv: &DVector<T>) -> Result<DVector<T>> {
    tensor.apply(cu, cv)
}
