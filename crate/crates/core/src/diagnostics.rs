//! Energy equations, a-priori bounds and Lipschitz probes evaluated along
//! computed trajectories.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{ForceSpec, GalerkinModel};
use crate::solver::{Frame, Problem, Trajectory};
use crate::scalar::{lit, to_f64, Real};

/// `|v(t)|_W^2` against `|f|_W^2 e^{-2 nu t / alpha} + 2 int_0^t K e^{-2 nu (t - s) / alpha} ds`,
/// the integral by the trapezoid rule on the trajectory grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    pub w_norm_sq: Vec<f64>,
    pub rhs_reconstruction: Vec<f64>,
    pub residual: Vec<f64>,
    /// `max |residual| / max(|f|_W^2, max |v|_W^2)`.
    pub max_rel_residual: f64,
}

/// Stream function and W-norm of a grid datum, and its projection.
pub fn project_field<T: Real>(model: &GalerkinModel<T>, psi: &DVector<T>) -> (DVector<T>, T) {
    (model.basis.project(psi), model.forms.norm_w_sq(psi))
}

/// `K(v, Q) = ( (nu/alpha) curl v + curl(Q^{-1} F(Q v)), curl(v - alpha Delta v) )`,
/// with `curl` of a perpendicular gradient evaluated as `-Delta psi` by the
/// assembly stencil.
pub fn k_functional<T: Real>(model: &GalerkinModel<T>, force: &ForceSpec<T>, nu: T, c: &DVector<T>, q: T) -> T {
    let grid = &model.basis.grid;
    let psi = model.basis.stream(c);
    let pv = model.basis.vorticity(c);
    let mut curl = grid.apply_laplacian(&psi) * (nu / grid.alpha());
    if !force.is_zero() {
        let r2 = model.basis.norm_v_sq(c) * q * q;
        let f = force.eval(&(&psi * q), r2) / q;
        curl += grid.apply_laplacian(&f);
    }
    grid.dot(&curl, &pv)
}

fn assemble_report<T: Real>(times: &[T], w: Vec<T>, k: Vec<T>, datum: T, beta: T, scale_sq: &[T]) -> EnergyReport {
    let two = lit::<T>(2.0);
    let t0 = times[0];
    let mut integral = T::zero();
    let mut rhs = Vec::with_capacity(times.len());
    for m in 0..times.len() {
        if m > 0 {
            let dt = times[m] - times[m - 1];
            let decay = (-beta * dt).exp();
            integral = integral * decay + dt / two * (k[m - 1] * decay + k[m]);
        }
        let base = datum * (-beta * (times[m] - t0)).exp() + two * integral;
        rhs.push(base * scale_sq[m]);
    }
    let residual: Vec<T> = w.iter().zip(&rhs).map(|(a, b)| *a - *b).collect();
    let scale = w.iter().fold(datum, |m, x| m.max(*x));
    let worst = residual.iter().fold(T::zero(), |m, r| m.max(r.abs()));
    EnergyReport {
        times: times.iter().map(|t| to_f64(*t)).collect(),
        w_norm_sq: w.iter().map(|x| to_f64(*x)).collect(),
        rhs_reconstruction: rhs.iter().map(|x| to_f64(*x)).collect(),
        residual: residual.iter().map(|x| to_f64(*x)).collect(),
        max_rel_residual: if scale > T::zero() { to_f64(worst / scale) } else { 0.0 },
    }
}

fn require_frame<T: Real>(traj: &Trajectory<T>, frame: Frame) -> Result<()> {
    if traj.frame != frame || traj.is_empty() {
        return Err(Error::InvalidConfig(format!("energy report needs a non-empty {frame:?}-trajectory")));
    }
    Ok(())
}

pub fn energy_residual_v<T: Real>(traj: &Trajectory<T>, model: &GalerkinModel<T>, force: &ForceSpec<T>) -> Result<EnergyReport> {
    require_frame(traj, Frame::V)?;
    let nu = traj.config.nu;
    let beta = lit::<T>(2.0) * nu / traj.config.alpha;
    let w = traj.states.iter().map(|c| c.dot(c)).collect();
    let k = traj.states.iter().zip(&traj.q).map(|(c, &q)| k_functional(model, force, nu, c, q)).collect();
    let ones = vec![T::one(); traj.len()];
    Ok(assemble_report(&traj.times, w, k, traj.datum_w_norm_sq, beta, &ones))
}

/// The same balance for `u = Q v`: `|u|_W^2 = Q^2 [ ... ]` with `K~(u, Q) = K(u / Q, Q)`.
pub fn energy_residual_u<T: Real>(traj_u: &Trajectory<T>, model: &GalerkinModel<T>, force: &ForceSpec<T>) -> Result<EnergyReport> {
    require_frame(traj_u, Frame::U)?;
    let nu = traj_u.config.nu;
    let beta = lit::<T>(2.0) * nu / traj_u.config.alpha;
    let w = traj_u.states.iter().map(|c| c.dot(c)).collect();
    let k = traj_u
        .states
        .iter()
        .zip(&traj_u.q)
        .map(|(u, &q)| k_functional(model, force, nu, &(u / q), q))
        .collect();
    let q2: Vec<T> = traj_u.q.iter().map(|q| *q * *q).collect();
    Ok(assemble_report(&traj_u.times, w, k, traj_u.datum_w_norm_sq, beta, &q2))
}

/// Quantities of the a-priori W-bound `sup |v|_W^2 <= C(T) (|f|_W^2 + |F(0)|_V^2 int Q^{-2})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AprioriReport {
    pub sup_w_norm_sq: f64,
    pub datum_w_norm_sq: f64,
    pub forcing_term: f64,
    /// `sup |v|_W^2 / (|f|_W^2 + |F(0)|_V^2 int Q^{-2})`, the empirical `C(T)`.
    pub ratio: f64,
    pub finite: bool,
}

pub fn apriori_check<T: Real>(traj: &Trajectory<T>, force: &ForceSpec<T>) -> AprioriReport {
    let sup = traj.states.iter().fold(T::zero(), |m, c| m.max(c.dot(c)));
    let mut integral = T::zero();
    for m in 1..traj.len() {
        let dt = traj.times[m] - traj.times[m - 1];
        let a = T::one() / (traj.q[m - 1] * traj.q[m - 1]);
        let b = T::one() / (traj.q[m] * traj.q[m]);
        integral += dt * (a + b) / lit::<T>(2.0);
    }
    let forcing = force.f0_norm_v * force.f0_norm_v * integral;
    let bracket = traj.datum_w_norm_sq + forcing;
    let ratio = if bracket > T::zero() { to_f64(sup / bracket) } else { 0.0 };
    AprioriReport {
        sup_w_norm_sq: to_f64(sup),
        datum_w_norm_sq: to_f64(traj.datum_w_norm_sq),
        forcing_term: to_f64(forcing),
        ratio,
        finite: sup.is_finite() && ratio.is_finite(),
    }
}

/// `|v(t, f) - v(t, g)|_W / |f - g|_W` at every step of `[t_start, t_end]`.
pub fn lipschitz_in_w_probe<T: Real>(problem: &Problem<T>, f: &DVector<T>, g: &DVector<T>) -> Result<Vec<T>> {
    let d0 = (f - g).norm();
    if !(d0 > T::zero()) {
        return Err(Error::Degenerate("identical initial data".into()));
    }
    let a = problem.integrate(f)?;
    let b = problem.integrate(g)?;
    Ok(a.states.iter().zip(&b.states).map(|(x, y)| (x - y).norm() / d0).collect())
}

/// Skew-symmetrized W-pairing `1/2 [ (v . grad q_u, q_w) - (v . grad q_w, q_u) ]`
/// of the transport term, with `v . grad p = J(p, psi_v)` evaluated by the
/// Arakawa stencil. Vanishes at `w = u`.
pub fn w_pairing<T: Real>(model: &GalerkinModel<T>, cu: &DVector<T>, cv: &DVector<T>, cw: &DVector<T>) -> T {
    let grid = &model.basis.grid;
    let psi_v = model.basis.stream(cv);
    let qu = model.basis.vorticity(cu);
    let qw = model.basis.vorticity(cw);
    let a = grid.dot(&grid.arakawa_jacobian(&qu, &psi_v), &qw);
    let b = grid.dot(&grid.arakawa_jacobian(&qw, &psi_v), &qu);
    (a - b) / lit::<T>(2.0)
}

/// `max_t (|v(t+dt)|_V - |v(t)|_V)` along a trajectory; non-positive for a dissipative flow.
pub fn max_v_norm_increase<T: Real>(traj: &Trajectory<T>, model: &GalerkinModel<T>) -> T {
    let norms: Vec<T> = traj.states.iter().map(|c| model.basis.norm_v_sq(c).sqrt()).collect();
    norms.windows(2).fold(lit::<T>(f64::NEG_INFINITY), |m, w| m.max(w[1] - w[0]))
}
