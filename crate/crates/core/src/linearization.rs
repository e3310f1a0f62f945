//! Tangent (Frechet-derivative) equation along a base trajectory, and its
//! finite-difference verification.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::force_derivative_coeffs;
use crate::solver::{GalerkinState, Integrator, Problem};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Tangent direction `z` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentState<T: Real> {
    pub t: T,
    pub z: DVector<T>,
}

fn tangent_rhs_with_q<T: Real>(problem: &Problem<T>, q: T, c: &DVector<T>, z: &DVector<T>) -> Result<DVector<T>> {
    let m = problem.model;
    let mut bracket = (&m.grad.g * z) * (-problem.config.nu);
    if problem.config.nonlinear {
        bracket -= (m.tensor.apply(z, c)? + m.tensor.apply(c, z)?) * q;
    }
    bracket += force_derivative_coeffs(problem.force, c, z, q, m)?;
    Ok(bracket.component_mul(&m.basis.lambdas))
}

/// `z_k' = lambda_k [ -nu (G z)_k - Q (B(z, v) + B(v, z))_k + (DF(Q v) z, e_k) ]`.
pub fn tangent_rhs<T: Real>(problem: &Problem<T>, zstate: &TangentState<T>, base: &GalerkinState<T>) -> Result<DVector<T>> {
    if (zstate.t - base.t).abs() > lit::<T>(1e-12) * (T::one() + base.t.abs()) {
        return Err(Error::InvalidConfig(format!("tangent time {} differs from base time {}", zstate.t, base.t)));
    }
    tangent_rhs_with_q(problem, problem.q(base.t)?, &base.c, &zstate.z)
}

/// Integrates base and tangent together (shared stages) over
/// `[t_start, t_end]`, returning both end states.
pub fn integrate_tangent<T: Real>(problem: &Problem<T>, g: &DVector<T>, f: &DVector<T>) -> Result<(GalerkinState<T>, TangentState<T>)> {
    let cfg = problem.config;
    let n = problem.model.n();
    for len in [f.len(), g.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let steps = crate::noise::whole_steps(cfg.t_end - cfg.t_start, cfg.dt)
        .ok_or_else(|| Error::InvalidConfig("time span is not a whole number of steps".into()))?;
    let two = lit::<T>(2.0);
    let dt = cfg.dt;
    let (mut c, mut z) = (f.clone(), g.clone());
    for k in 0..steps {
        let t = cfg.t_start + from_usize::<T>(k) * dt;
        match cfg.integrator {
            Integrator::Rk4 => {
                let half = dt / two;
                let (q0, qh, q1) = (problem.q(t)?, problem.q(t + half)?, problem.q(t + dt)?);
                let k1 = problem.rhs_with_q(q0, &c)?;
                let l1 = tangent_rhs_with_q(problem, q0, &c, &z)?;
                let c2 = &c + &k1 * half;
                let z2 = &z + &l1 * half;
                let k2 = problem.rhs_with_q(qh, &c2)?;
                let l2 = tangent_rhs_with_q(problem, qh, &c2, &z2)?;
                let c3 = &c + &k2 * half;
                let z3 = &z + &l2 * half;
                let k3 = problem.rhs_with_q(qh, &c3)?;
                let l3 = tangent_rhs_with_q(problem, qh, &c3, &z3)?;
                let c4 = &c + &k3 * dt;
                let z4 = &z + &l3 * dt;
                let k4 = problem.rhs_with_q(q1, &c4)?;
                let l4 = tangent_rhs_with_q(problem, q1, &c4, &z4)?;
                let w = dt / lit::<T>(6.0);
                c += (k1 + (k2 + k3) * two + k4) * w;
                z += (l1 + (l2 + l3) * two + l4) * w;
            }
            Integrator::Heun => {
                let (q0, q1) = (problem.q(t)?, problem.q(t + dt)?);
                let k1 = problem.rhs_with_q(q0, &c)?;
                let l1 = tangent_rhs_with_q(problem, q0, &c, &z)?;
                let c2 = &c + &k1 * dt;
                let z2 = &z + &l1 * dt;
                let k2 = problem.rhs_with_q(q1, &c2)?;
                let l2 = tangent_rhs_with_q(problem, q1, &c2, &z2)?;
                c += (k1 + k2) * (dt / two);
                z += (l1 + l2) * (dt / two);
            }
        }
        let worst = c.amax().max(z.amax());
        if !worst.is_finite() || worst > lit(crate::solver::BLOW_UP) {
            return Err(Error::BlowUp { t: to_f64(t + dt), max_abs: to_f64(worst) });
        }
    }
    let t_end = cfg.t_start + from_usize::<T>(steps) * dt;
    Ok((GalerkinState { t: t_end, c }, TangentState { t: t_end, z }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdReport {
    pub h: Vec<f64>,
    /// `|(v(t, f + h g) - v(t, f)) / h - z(t, f)(g)|_V`.
    pub error: Vec<f64>,
    /// Least-squares slope of `log e` against `log h`; absent when every
    /// error sits at round-off.
    pub order: Option<f64>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Compares difference quotients of the flow with the tangent solution at `t_end`.
pub fn fd_derivative_check<T: Real>(problem: &Problem<T>, f: &DVector<T>, g: &DVector<T>, h_list: &[T]) -> Result<FdReport> {
    if h_list.is_empty() || h_list.windows(2).any(|w| !(w[1] < w[0])) || !(h_list[h_list.len() - 1] > T::zero()) {
        return Err(Error::InvalidConfig("h_list must be positive and strictly decreasing".into()));
    }
    let gn = g.norm();
    if gn == T::zero() {
        return Err(Error::Degenerate("zero direction".into()));
    }
    let guard = lit::<T>(1e-7) * f.norm() / gn;
    if let Some(h) = h_list.iter().find(|h| **h < guard) {
        return Err(Error::CancellationGuard { h: to_f64(*h), guard: to_f64(guard) });
    }
    let (base, tangent) = integrate_tangent(problem, g, f)?;
    let basis = &problem.model.basis;
    let mut error = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let moved = problem.solve_shifted(&(f + g * h), problem.config.t_start, problem.config.t_end)?;
        let quotient = (moved.c - &base.c) / h;
        error.push(to_f64(basis.norm_v_sq(&(quotient - &tangent.z)).sqrt()));
    }
    let h: Vec<f64> = h_list.iter().map(|x| to_f64(*x)).collect();
    let z_norm = to_f64(basis.norm_v_sq(&tangent.z).sqrt());
    let floor = 1e-9 * z_norm.max(f64::MIN_POSITIVE);
    let order = if error.iter().all(|e| *e > floor) { Some(loglog_slope(&h, &error)) } else { None };
    Ok(FdReport { h, error, order })
}

/// The first `m` modes followed by `extra` random directions, all of unit W-norm.
pub fn probe_directions<T: Real>(n: usize, m: usize, extra: usize, seed: u64) -> Vec<DVector<T>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out: Vec<DVector<T>> = (0..m.min(n)).map(|k| DVector::from_fn(n, |i, _| if i == k { T::one() } else { T::zero() })).collect();
    for _ in 0..extra {
        let v = DVector::from_fn(n, |_, _| lit::<T>(StandardNormal.sample(&mut rng)));
        let norm = v.norm();
        out.push(v / norm);
    }
    out
}

/// `max_g |z(t, f_n)(g) - z(t, f)(g)|_V` over unit-W directions, one entry per
/// `f_n`: a finite-probe under-approximation of the operator-norm distance.
pub fn derivative_continuity_probe<T: Real>(
    problem: &Problem<T>,
    f: &DVector<T>,
    f_seq: &[DVector<T>],
    g_set: &[DVector<T>],
) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let basis = &problem.model.basis;
    let reference: Vec<DVector<T>> = g_set.iter().map(|g| integrate_tangent(problem, g, f).map(|r| r.1.z)).collect::<Result<_>>()?;
    f_seq
        .par_iter()
        .map(|fn_| {
            let mut worst = T::zero();
            for (g, z0) in g_set.iter().zip(&reference) {
                let z = integrate_tangent(problem, g, fn_)?.1.z;
                worst = worst.max(basis.norm_v_sq(&(z - z0)).sqrt());
            }
            Ok(worst)
        })
        .collect()
}
