//! Absorbing radii, pullback ensembles, attractor point clouds and the
//! small-noise limit.
//!
//! The certified radius bounds `limsup |u(0, f, theta_{-t} omega)|_W^2` for the
//! Galerkin system. With `kappa = nu - P^2 C_F`, `lambda = kappa / (P^2 + alpha)`,
//! `gamma = nu / alpha` and `C_curl = sup |curl v|^2 / |v|_V^2` measured on the
//! grid:
//!
//! * V-energy: `d|v|_V^2/dt + lambda |v|_V^2 <= (P^2 / kappa) |F(0)|_V^2 Q^{-2}`,
//!   using `(Q^{-1} F(Q v) - Q^{-1} F(0), v) <= C_F |v|^2`, which every force
//!   kind in the catalogue satisfies;
//! * W-energy: `d|v|_W^2/dt + gamma |v|_W^2 <= A1 |v|_V^2 + A2 |F(0)|_V^2 Q^{-2}`
//!   with `A1 = 2 (nu/alpha) C_curl + 4 (alpha/nu) C_curl C_F^2` and
//!   `A2 = 4 (alpha/nu) C_curl`;
//!
//! so that `r_certified = 1 + [A1 P^2 / (kappa (gamma - lambda)) + A2] |F(0)|_V^2 I`
//! with `I = int_{-inf}^0 e^{lambda s} Q(s)^{-2} ds`. The integral is exact on
//! the piecewise-linear path down to `-T_tail`; the rest is bounded by the
//! largest realized `Q^{-2}` on `[t_min, -T_tail]` times `e^{-lambda T_tail} / lambda`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::curl_v_constant;
use crate::error::{Error, Result};
use crate::noise::WienerPath;
use crate::operators::{ForceSpec, GalerkinModel};
use crate::solver::{Problem, SolverConfig};
use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusReport {
    pub lambda: f64,
    pub gamma: f64,
    pub p2: f64,
    pub c_curl: f64,
    /// `int_{-T_tail}^0 e^{lambda s} Q^{-2} ds`.
    pub integral: f64,
    pub remainder_bound: f64,
    pub tail_time: f64,
    /// Bound on `limsup |u|_W^2`; absent when `|F(0)|_V` is not finite.
    pub r_certified: Option<f64>,
    /// `1 + sup |u|_W^2` over the probe ensemble at the longest pullback time.
    pub r_empirical: f64,
}

/// `(lambda, gamma)`, failing unless `C_F < nu / P^2`.
pub fn decay_rates<T: Real>(nu: T, alpha: T, p2: T, c_f: T) -> Result<(T, T)> {
    if !(nu > T::zero()) {
        return Err(Error::InvalidConfig("absorbing estimates need nu > 0".into()));
    }
    let bound = nu / p2;
    if !(c_f < bound) {
        return Err(Error::DissipativityViolated { c_f: to_f64(c_f), bound: to_f64(bound) });
    }
    Ok(((nu - p2 * c_f) / (p2 + alpha), nu / alpha))
}

/// `int_a^b e^{lambda s} Q(s)^{-2} ds`, exact for the linearly interpolated
/// path (the integrand is an exponential of a linear function on each cell).
pub fn weighted_q_integral<T: Real>(path: &WienerPath<T>, epsilon: T, lambda: T, a: T, b: T) -> Result<T> {
    let two = lit::<T>(2.0);
    let ia = path.node_index(a).ok_or(Error::NotANode(to_f64(a)))?;
    let ib = path.node_index(b).ok_or(Error::NotANode(to_f64(b)))?;
    let mut sum = T::zero();
    for i in ia..ib {
        let (s0, s1) = (path.node_time(i), path.node_time(i + 1));
        let g0 = lambda * s0 - two * epsilon * path.node_value(i);
        let g1 = lambda * s1 - two * epsilon * path.node_value(i + 1);
        let d = g1 - g0;
        let factor = if d.abs() < lit(1e-8) { T::one() + d / two + d * d / lit(6.0) } else { (d.exp() - T::one()) / d };
        sum += (s1 - s0) * g0.exp() * factor;
    }
    Ok(sum)
}

/// `u(t, f, theta_{-t} omega)` for every `f`, in input order.
pub fn pullback_ensemble<T: Real>(problem: &Problem<T>, f_set: &[DVector<T>], t: T) -> Result<Vec<DVector<T>>> {
    f_set.par_iter().map(|f| problem.pullback_value(f, t).map(|s| s.c)).collect()
}

pub fn radius<T: Real>(problem: &Problem<T>, t_tail: T, probes: &[DVector<T>], t_long: T) -> Result<RadiusReport> {
    let model = problem.model;
    let cfg = problem.config;
    let force = problem.force;
    let path = problem.path;
    let p2 = model.p2();
    let (lambda, gamma) = decay_rates(cfg.nu, cfg.alpha, p2, force.c_f)?;
    if !(t_tail > T::zero()) || -t_tail < path.t_min() - lit::<T>(1e-9) * path.dt() {
        return Err(Error::TailWindow { needed: to_f64(-t_tail), t_min: to_f64(path.t_min()) });
    }
    let integral = weighted_q_integral(path, cfg.epsilon, lambda, -t_tail, T::zero())?;
    let tail_start = path.node_index(-t_tail).ok_or(Error::NotANode(to_f64(-t_tail)))?;
    let worst_q = (0..=tail_start)
        .map(|i| (-lit::<T>(2.0) * cfg.epsilon * path.node_value(i)).exp())
        .fold(T::zero(), |m, x| m.max(x));
    let remainder = worst_q * (-lambda * t_tail).exp() / lambda;

    let c_curl = curl_v_constant(&model.forms)?;
    let kappa = cfg.nu - p2 * force.c_f;
    let ratio = cfg.alpha / cfg.nu;
    let a1 = lit::<T>(2.0) * c_curl / ratio + lit::<T>(4.0) * ratio * c_curl * force.c_f * force.c_f;
    let a2 = lit::<T>(4.0) * ratio * c_curl;
    let coef = a1 * p2 / (kappa * (gamma - lambda)) + a2;
    let f0 = force.f0_norm_v * force.f0_norm_v;
    let r_cert = T::one() + coef * f0 * (integral + remainder);

    let states = pullback_ensemble(problem, probes, t_long)?;
    let sup = states.iter().fold(T::zero(), |m, c| m.max(c.dot(c)));
    Ok(RadiusReport {
        lambda: to_f64(lambda),
        gamma: to_f64(gamma),
        p2: to_f64(p2),
        c_curl: to_f64(c_curl),
        integral: to_f64(integral),
        remainder_bound: to_f64(remainder),
        tail_time: to_f64(t_tail),
        r_certified: r_cert.is_finite().then(|| to_f64(r_cert)),
        r_empirical: to_f64(T::one() + sup),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Norm {
    V,
    W,
}

fn distance<T: Real>(a: &DVector<T>, b: &DVector<T>, norm: Norm, lambdas: &DVector<T>) -> T {
    let d = a - b;
    match norm {
        Norm::W => d.norm(),
        Norm::V => d.iter().zip(lambdas.iter()).fold(T::zero(), |s, (x, l)| s + *x * *x / *l).sqrt(),
    }
}

/// `sup_{a in A} inf_{b in B} |a - b|` in coefficient space.
pub fn hausdorff_semidistance<T: Real>(a: &[DVector<T>], b: &[DVector<T>], norm: Norm, lambdas: &DVector<T>) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(a.iter()
        .map(|x| b.iter().map(|y| distance(x, y, norm, lambdas)).fold(lit::<T>(f64::INFINITY), |m, d| m.min(d)))
        .fold(T::zero(), |m, d| m.max(d)))
}

/// Symmetric Hausdorff distance.
pub fn hausdorff_distance<T: Real>(a: &[DVector<T>], b: &[DVector<T>], norm: Norm, lambdas: &DVector<T>) -> Result<T> {
    Ok(hausdorff_semidistance(a, b, norm, lambdas)?.max(hausdorff_semidistance(b, a, norm, lambdas)?))
}

/// Finite inner approximation of the random attractor at `omega`: pullback
/// images of a probe ensemble at the first time in `t_list` where successive
/// snapshots agree to `tol` (Hausdorff distance in W).
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorEstimate<T: Real> {
    pub points: Vec<DVector<T>>,
    pub pullback_times: Vec<T>,
    /// Gap between snapshot `j` and `j - 1`, for `j >= 1`.
    pub cauchy_gap: Vec<T>,
}

pub fn attractor_estimate<T: Real>(problem: &Problem<T>, probes: &[DVector<T>], t_list: &[T], tol: T) -> Result<AttractorEstimate<T>> {
    if t_list.len() < 2 || t_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig("t_list needs at least two increasing times".into()));
    }
    let lambdas = &problem.model.basis.lambdas;
    let mut prev = pullback_ensemble(problem, probes, t_list[0])?;
    let mut times = vec![t_list[0]];
    let mut gaps = Vec::new();
    for &t in &t_list[1..] {
        let next = pullback_ensemble(problem, probes, t)?;
        let gap = hausdorff_distance(&next, &prev, Norm::W, lambdas)?;
        times.push(t);
        gaps.push(gap);
        prev = next;
        if gap < tol {
            return Ok(AttractorEstimate { points: prev, pullback_times: times, cauchy_gap: gaps });
        }
    }
    Err(Error::NonConvergence { last_gap: to_f64(*gaps.last().expect("at least one gap")), tol: to_f64(tol) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiDistanceReport {
    pub eps_values: Vec<f64>,
    /// `d(A^eps, A^0)` in W.
    pub distances: Vec<f64>,
}

/// Attractor estimates for each `eps` on the same path, compared with the
/// `eps = 0` estimate.
pub fn epsilon_sweep<T: Real>(
    model: &GalerkinModel<T>,
    force: &ForceSpec<T>,
    path: &WienerPath<T>,
    config: &SolverConfig<T>,
    eps_list: &[T],
    probes: &[DVector<T>],
    t_list: &[T],
    tol: T,
) -> Result<SemiDistanceReport> {
    let estimate = |eps: T| -> Result<Vec<DVector<T>>> {
        let cfg = SolverConfig { epsilon: eps, ..config.clone() };
        let pr = Problem::new(model, force, path, &cfg)?;
        Ok(attractor_estimate(&pr, probes, t_list, tol)?.points)
    };
    let reference = estimate(T::zero())?;
    let distances = eps_list
        .par_iter()
        .map(|&eps| {
            let pts = estimate(eps)?;
            hausdorff_semidistance(&pts, &reference, Norm::W, &model.basis.lambdas).map(to_f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SemiDistanceReport { eps_values: eps_list.iter().map(|e| to_f64(*e)).collect(), distances })
}

/// Largest pullback W-norm of `f_set` at time `t` for every `eps`.
pub fn uniform_absorbing_probe<T: Real>(
    model: &GalerkinModel<T>,
    force: &ForceSpec<T>,
    path: &WienerPath<T>,
    config: &SolverConfig<T>,
    eps_list: &[T],
    f_set: &[DVector<T>],
    t: T,
) -> Result<Vec<T>> {
    if eps_list.iter().any(|e| !(e.abs() < T::one())) {
        return Err(Error::InvalidConfig("uniform absorption is probed for |eps| < 1".into()));
    }
    eps_list
        .par_iter()
        .map(|&eps| {
            let cfg = SolverConfig { epsilon: eps, ..config.clone() };
            let pr = Problem::new(model, force, path, &cfg)?;
            let states = pullback_ensemble(&pr, f_set, t)?;
            Ok(states.iter().fold(T::zero(), |m, c| m.max(c.norm())))
        })
        .collect()
}

/// `|u^{eps_n}(t, f_n) - u^{eps}(t, f)|_V` for each pair `(eps_n, f_n)`.
pub fn epsilon_continuity<T: Real>(
    model: &GalerkinModel<T>,
    force: &ForceSpec<T>,
    path: &WienerPath<T>,
    config: &SolverConfig<T>,
    eps: T,
    f: &DVector<T>,
    seq: &[(T, DVector<T>)],
    t: T,
) -> Result<Vec<T>> {
    let solve = |e: T, x: &DVector<T>| -> Result<DVector<T>> {
        let cfg = SolverConfig { epsilon: e, ..config.clone() };
        Problem::new(model, force, path, &cfg)?.u_at(x, t)
    };
    let target = solve(eps, f)?;
    seq.par_iter()
        .map(|(e, x)| Ok(model.basis.norm_v_sq(&(solve(*e, x)? - &target)).sqrt()))
        .collect()
}

/// Symmetric W-distance between the forward image `phi(s, A(omega), omega)` of
/// an attractor estimate and the estimate built on the shifted path.
pub fn invariance_gap<T: Real>(problem: &Problem<T>, probes: &[DVector<T>], t_pull: T, s: T) -> Result<T> {
    let here = pullback_ensemble(problem, probes, t_pull)?;
    let image: Vec<DVector<T>> = here.par_iter().map(|c| problem.u_at(c, s)).collect::<Result<_>>()?;
    let shifted = problem.path.shift(s)?;
    let there = pullback_ensemble(&problem.on_path(&shifted), probes, t_pull)?;
    hausdorff_distance(&image, &there, Norm::W, &problem.model.basis.lambdas)
}
