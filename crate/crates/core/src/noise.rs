//! Two-sided Wiener paths, the Wiener shift and the conjugation factor
//! `Q(t) = exp(eps * W(t))`.
//!
//! Paths live on a uniform grid containing `t = 0`. The positive and negative
//! halves are sampled from two independent ChaCha20 streams (stream 0 and
//! stream 1 of `ChaCha20Rng::seed_from_u64(seed)`) with standard normal
//! increments from `rand_distr::StandardNormal`, so a `(seed, grid)` pair
//! reproduces the same path bit for bit.
//!
//! A shifted path shares the sampled node values with its parent and only
//! moves the node that plays the role of time zero. Every node value is a
//! single subtraction `raw[i] - raw[origin]`, which makes the shift an exact
//! group action on node times.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

const NODE_SNAP: f64 = 1e-9;

/// Grid and intensity of the driving noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig<T> {
    pub epsilon: T,
    pub seed: u64,
    pub t_min: T,
    pub t_max: T,
    pub dt: T,
}

impl<T: Real> NoiseConfig<T> {
    pub fn validate(&self) -> Result<(usize, usize)> {
        if !(self.dt > T::zero()) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_min > T::zero() || self.t_max < T::zero() {
            return Err(Error::InvalidGrid(format!(
                "window [{}, {}] must contain 0",
                self.t_min, self.t_max
            )));
        }
        let n_neg = whole_steps(-self.t_min, self.dt).ok_or_else(|| {
            Error::InvalidGrid(format!("t_min = {} is not a multiple of dt = {}", self.t_min, self.dt))
        })?;
        let n_pos = whole_steps(self.t_max, self.dt).ok_or_else(|| {
            Error::InvalidGrid(format!("t_max = {} is not a multiple of dt = {}", self.t_max, self.dt))
        })?;
        Ok((n_neg, n_pos))
    }
}

/// Returns `x / dt` when it is (numerically) a whole number.
pub(crate) fn whole_steps<T: Real>(x: T, dt: T) -> Option<usize> {
    let r = to_f64(x) / to_f64(dt);
    let k = r.round();
    if k < 0.0 || (r - k).abs() > NODE_SNAP * k.max(1.0) {
        None
    } else {
        Some(k as usize)
    }
}

/// A sampled two-sided Brownian path `W(t) = omega(t)` on a uniform grid.
#[derive(Debug, Clone)]
pub struct WienerPath<T> {
    raw: Arc<[T]>,
    origin: usize,
    dt: T,
    seed: u64,
}

impl<T: Real> PartialEq for WienerPath<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dt == other.dt
            && self.seed == other.seed
            && self.len() == other.len()
            && self.t_min() == other.t_min()
            && (0..self.len()).all(|i| self.node_value(i) == other.node_value(i))
    }
}

/// Samples a two-sided path: two independent one-sided walks glued at `t = 0`.
pub fn sample_path<T: Real>(config: &NoiseConfig<T>) -> Result<WienerPath<T>> {
    let (n_neg, n_pos) = config.validate()?;
    let sd = to_f64(config.dt).sqrt();
    let mut raw = vec![T::zero(); n_neg + n_pos + 1];

    let mut forward = ChaCha20Rng::seed_from_u64(config.seed);
    forward.set_stream(0);
    let mut w = 0.0_f64;
    for k in 1..=n_pos {
        let z: f64 = forward.sample(StandardNormal);
        w += sd * z;
        raw[n_neg + k] = lit(w);
    }

    let mut backward = ChaCha20Rng::seed_from_u64(config.seed);
    backward.set_stream(1);
    w = 0.0;
    for k in 1..=n_neg {
        let z: f64 = backward.sample(StandardNormal);
        w += sd * z;
        raw[n_neg - k] = lit(w);
    }

    Ok(WienerPath { raw: raw.into(), origin: n_neg, dt: config.dt, seed: config.seed })
}

impl<T: Real> WienerPath<T> {
    /// Builds a path from node values; the node at `t = 0` must hold exactly 0.
    pub fn from_nodes(t_min: T, dt: T, seed: u64, values: Vec<T>) -> Result<Self> {
        let origin = whole_steps(-t_min, dt)
            .ok_or_else(|| Error::InvalidGrid(format!("t_min = {t_min} is not a multiple of dt")))?;
        if origin >= values.len() {
            return Err(Error::InvalidGrid("window does not contain t = 0".into()));
        }
        if values[origin] != T::zero() {
            return Err(Error::InvalidGrid(format!(
                "path value at t = 0 must be 0, got {}",
                values[origin]
            )));
        }
        Ok(Self { raw: values.into(), origin, dt, seed })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of grid nodes.
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn t_min(&self) -> T {
        -(self.dt * lit::<T>(self.origin as f64))
    }

    pub fn t_max(&self) -> T {
        self.dt * lit::<T>((self.raw.len() - 1 - self.origin) as f64)
    }

    /// Time of node `i` (node 0 is `t_min`).
    pub fn node_time(&self, i: usize) -> T {
        self.dt * lit::<T>(i as f64 - self.origin as f64)
    }

    /// Value at node `i` (node 0 is `t_min`).
    #[inline]
    pub fn node_value(&self, i: usize) -> T {
        self.raw[i] - self.raw[self.origin]
    }

    /// All node values in time order.
    pub fn values(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.node_value(i)).collect()
    }

    pub fn contains(&self, t: T) -> bool {
        let tol = lit::<T>(NODE_SNAP) * self.dt;
        t >= self.t_min() - tol && t <= self.t_max() + tol
    }

    fn check_window(&self, t: T) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutsideWindow {
                t: to_f64(t),
                t_min: to_f64(self.t_min()),
                t_max: to_f64(self.t_max()),
            })
        }
    }

    /// Index of the node at time `t`, if `t` is a node.
    pub fn node_index(&self, t: T) -> Option<usize> {
        let pos = to_f64(t) / to_f64(self.dt) + self.origin as f64;
        let k = pos.round();
        if (pos - k).abs() <= NODE_SNAP * k.abs().max(1.0) && k >= 0.0 && (k as usize) < self.len() {
            Some(k as usize)
        } else {
            None
        }
    }

    /// `W(t)`: exact at nodes, linear interpolation in between.
    pub fn value_at(&self, t: T) -> Result<T> {
        self.check_window(t)?;
        if let Some(i) = self.node_index(t) {
            return Ok(self.node_value(i));
        }
        let pos = (t - self.t_min()) / self.dt;
        let i = to_f64(pos).floor().max(0.0) as usize;
        let i = i.min(self.len() - 2);
        let frac = pos - lit::<T>(i as f64);
        let a = self.node_value(i);
        let b = self.node_value(i + 1);
        Ok(a + (b - a) * frac)
    }

    /// The Wiener shift `theta(s, omega)(r) = omega(s + r) - omega(s)`.
    pub fn shift(&self, s: T) -> Result<Self> {
        self.check_window(s)?;
        let i = self.node_index(s).ok_or(Error::NotANode(to_f64(s)))?;
        Ok(Self { raw: Arc::clone(&self.raw), origin: i, dt: self.dt, seed: self.seed })
    }

    /// Increments between consecutive nodes.
    pub fn increments(&self) -> Vec<T> {
        self.raw.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Writes the path as `t_min t_max dt seed` followed by one value per line.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{:.17e} {:.17e} {:.17e} {}",
            self.t_min(),
            self.t_max(),
            self.dt,
            self.seed
        )?;
        for i in 0..self.len() {
            writeln!(out, "{:.17e}", self.node_value(i))?;
        }
        Ok(())
    }

    /// Reads a path written by [`WienerPath::write_to`].
    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty path file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("bad path header: {header:?}")));
        }
        let num = |s: &str| -> Result<T> {
            s.parse::<f64>()
                .map(lit)
                .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
        };
        let t_min = num(fields[0])?;
        let t_max = num(fields[1])?;
        let dt = num(fields[2])?;
        let seed = fields[3]
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("seed {:?}: {e}", fields[3])))?;
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            values.push(num(line)?);
        }
        let path = Self::from_nodes(t_min, dt, seed, values)?;
        if (to_f64(path.t_max()) - to_f64(t_max)).abs() > NODE_SNAP * to_f64(dt).max(1.0) {
            return Err(Error::Parse("node count does not match header window".into()));
        }
        Ok(path)
    }
}

/// `Q(t, omega) = exp(eps * W(t, omega))`.
pub fn q_factor<T: Real>(path: &WienerPath<T>, epsilon: T, t: T) -> Result<T> {
    Ok((epsilon * path.value_at(t)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> NoiseConfig<f64> {
        NoiseConfig { epsilon: 0.5, seed, t_min: -2.0, t_max: 2.0, dt: 0.01 }
    }

    #[test]
    fn origin_is_zero_and_reproducible() {
        let a = sample_path(&cfg(7)).unwrap();
        let b = sample_path(&cfg(7)).unwrap();
        assert_eq!(a.value_at(0.0).unwrap(), 0.0);
        assert_eq!(a.values(), b.values());
        let c = sample_path(&cfg(8)).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn rejects_bad_grids() {
        let mut c = cfg(1);
        c.dt = 0.0;
        assert!(sample_path(&c).is_err());
        let mut c = cfg(1);
        c.t_min = 0.5;
        assert!(sample_path(&c).is_err());
        let mut c = cfg(1);
        c.t_max = 1.005_5;
        assert!(sample_path(&c).is_err());
    }

    #[test]
    fn shift_matches_definition_at_nodes() {
        let p = sample_path(&cfg(3)).unwrap();
        let s = 0.5;
        let q = p.shift(s).unwrap();
        for k in -100..=150 {
            let r = k as f64 * 0.01;
            let lhs = q.value_at(r).unwrap();
            let i = p.node_index(s + r).unwrap();
            let j = p.node_index(s).unwrap();
            let rhs = p.raw[i] - p.raw[j];
            assert_eq!(lhs, rhs);
        }
        assert!(p.shift(2.5).is_err());
        assert!(p.shift(0.005).is_err());
    }

    #[test]
    fn shift_is_a_group_action() {
        let p = sample_path(&cfg(4)).unwrap();
        assert_eq!(p.shift(0.0).unwrap(), p);
        let a = p.shift(0.3).unwrap().shift(-0.7).unwrap();
        let b = p.shift(-0.4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn q_factor_basics() {
        let p = sample_path(&cfg(5)).unwrap();
        for k in -200..=200 {
            let t = k as f64 * 0.01;
            assert_eq!(q_factor(&p, 0.0, t).unwrap(), 1.0);
            assert!(q_factor(&p, 0.7, t).unwrap() > 0.0);
        }
        assert_eq!(q_factor(&p, 0.7, 0.0).unwrap(), 1.0);
        assert!(q_factor(&p, 0.7, 3.0).is_err());
    }

    #[test]
    fn interpolation_between_nodes() {
        let p = sample_path(&cfg(6)).unwrap();
        let a = p.value_at(0.1).unwrap();
        let b = p.value_at(0.11).unwrap();
        let m = p.value_at(0.1025).unwrap();
        assert!((m - (0.75 * a + 0.25 * b)).abs() < 1e-14);
    }

    #[test]
    fn file_round_trip() {
        let p = sample_path(&cfg(9)).unwrap().shift(0.25).unwrap();
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();
        let back = WienerPath::<f64>::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.values(), p.values());
        assert_eq!(back.t_min(), p.t_min());
        assert_eq!(back.seed(), 9);
    }

    #[test]
    fn single_precision_path() {
        let c = NoiseConfig::<f32> { epsilon: 0.5, seed: 1, t_min: -1.0, t_max: 1.0, dt: 0.125 };
        let p = sample_path(&c).unwrap();
        assert_eq!(p.value_at(0.0).unwrap(), 0.0);
        assert_eq!(p.len(), 17);
    }
}
