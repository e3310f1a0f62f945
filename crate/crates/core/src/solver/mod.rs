//! Fixed-step integration of the random-coefficient Galerkin system
//!
//! `c_k' = lambda_k [ -nu (G c)_k - Q(t) B(c, c)_k + Q(t)^{-1} (F(Q(t) v), e_k) ]`,
//!
//! the conjugated cocycle `u = Q v`, and the cocycle / pullback identities.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{q_factor, whole_steps, WienerPath};
use crate::operators::{force_coeffs, ForceSpec, GalerkinModel};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Blow-up threshold on `max |c_i|`.
pub const BLOW_UP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Rk4,
    Heun,
}

impl Integrator {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Self::Rk4),
            "heun" => Ok(Self::Heun),
            other => Err(Error::Parse(format!("unknown integrator `{other}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rk4 => "rk4",
            Self::Heun => "heun",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Viscosity. Zero is accepted for conservation checks; dissipative
    /// experiments need `nu > 0`.
    pub nu: T,
    pub alpha: T,
    pub epsilon: T,
    /// Galerkin modes.
    pub n: usize,
    /// Interior grid points per axis.
    pub grid_n: usize,
    pub dt: T,
    pub t_start: T,
    pub t_end: T,
    pub integrator: Integrator,
    /// Debug switch: `false` drops the transport term.
    pub nonlinear: bool,
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.nu >= T::zero()) {
            return bad("nu must be non-negative");
        }
        if !(self.alpha > T::zero()) {
            return bad("alpha must be positive");
        }
        if !(self.dt > T::zero()) {
            return bad("dt must be positive");
        }
        if self.t_end < self.t_start {
            return bad("t_end must not precede t_start");
        }
        if self.n == 0 || self.n > self.grid_n * self.grid_n {
            return bad("mode count must lie in 1..=N^2");
        }
        Ok(())
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "nu": to_f64(self.nu),
            "alpha": to_f64(self.alpha),
            "epsilon": to_f64(self.epsilon),
            "n": self.n,
            "N": self.grid_n,
            "dt": to_f64(self.dt),
            "t_start": to_f64(self.t_start),
            "t_end": to_f64(self.t_end),
            "integrator": self.integrator.as_str(),
            "nonlinear": self.nonlinear,
        })
    }
}

/// Coefficients of `v = sum c_i e_i` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState<T: Real> {
    pub t: T,
    pub c: DVector<T>,
}

/// Which field the stored coefficients describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Conjugated variable `v`.
    V,
    /// Physical variable `u = Q v`.
    U,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub frame: Frame,
    pub times: Vec<T>,
    pub states: Vec<DVector<T>>,
    /// `Q(t)` at each stored time.
    pub q: Vec<T>,
    /// `|f|_W^2` of the initial datum before projection onto the basis.
    pub datum_w_norm_sq: T,
    pub config: SolverConfig<T>,
    pub path_seed: u64,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> GalerkinState<T> {
        let i = self.len() - 1;
        GalerkinState { t: self.times[i], c: self.states[i].clone() }
    }

    pub fn state(&self, i: usize) -> GalerkinState<T> {
        GalerkinState { t: self.times[i], c: self.states[i].clone() }
    }
}

/// `u = Q v` state by state.
pub fn reconstruct_u<T: Real>(traj: &Trajectory<T>, path: &WienerPath<T>, epsilon: T) -> Result<Trajectory<T>> {
    if traj.frame == Frame::U {
        return Err(Error::InvalidConfig("trajectory already holds u".into()));
    }
    let q = traj.times.iter().map(|&t| q_factor(path, epsilon, t)).collect::<Result<Vec<_>>>()?;
    let states = traj.states.iter().zip(&q).map(|(c, &q)| c * q).collect();
    Ok(Trajectory { frame: Frame::U, states, q, ..traj.clone() })
}

/// A configured Galerkin system on one noise path.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a, T: Real> {
    pub model: &'a GalerkinModel<T>,
    pub force: &'a ForceSpec<T>,
    pub path: &'a WienerPath<T>,
    pub config: &'a SolverConfig<T>,
}

impl<'a, T: Real> Problem<'a, T> {
    pub fn new(
        model: &'a GalerkinModel<T>,
        force: &'a ForceSpec<T>,
        path: &'a WienerPath<T>,
        config: &'a SolverConfig<T>,
    ) -> Result<Self> {
        config.validate()?;
        if model.n() != config.n || model.basis.grid.n() != config.grid_n {
            return Err(Error::InvalidConfig("model does not match (n, N) of the configuration".into()));
        }
        if (model.alpha() - config.alpha).abs() > lit::<T>(1e-14) * config.alpha {
            return Err(Error::InvalidConfig("model alpha differs from configuration".into()));
        }
        if force.a.len() != model.forms.dim() {
            return Err(Error::DimensionMismatch { expected: model.forms.dim(), got: force.a.len() });
        }
        // RK stage times must sit on a refinement of (or coincide with) the path grid.
        let half = config.dt / lit::<T>(2.0);
        if whole_steps(half, path.dt()).is_none() && whole_steps(path.dt(), half).is_none() {
            return Err(Error::InvalidConfig(format!(
                "solver dt/2 = {} and path dt = {} are not nested",
                half,
                path.dt()
            )));
        }
        Ok(Self { model, force, path, config })
    }

    /// Same system driven by another path (e.g. a shifted one).
    pub fn on_path<'b>(&self, path: &'b WienerPath<T>) -> Problem<'b, T>
    where
        'a: 'b,
    {
        Problem { model: self.model, force: self.force, path, config: self.config }
    }

    pub fn q(&self, t: T) -> Result<T> {
        q_factor(self.path, self.config.epsilon, t)
    }

    /// Right-hand side at a known `Q`.
    pub fn rhs_with_q(&self, q: T, c: &DVector<T>) -> Result<DVector<T>> {
        let m = self.model;
        let mut bracket = (&m.grad.g * c) * (-self.config.nu);
        if self.config.nonlinear {
            bracket -= m.tensor.apply(c, c)? * q;
        }
        if !self.force.is_zero() {
            bracket += force_coeffs(self.force, c, q, m)?;
        }
        Ok(bracket.component_mul(&m.basis.lambdas))
    }

    pub fn rhs(&self, state: &GalerkinState<T>) -> Result<DVector<T>> {
        self.rhs_with_q(self.q(state.t)?, &state.c)
    }

    /// One step of the configured integrator from `t`.
    pub fn step(&self, t: T, c: &DVector<T>) -> Result<DVector<T>> {
        let dt = self.config.dt;
        let two = lit::<T>(2.0);
        match self.config.integrator {
            Integrator::Rk4 => {
                let half = dt / two;
                let q0 = self.q(t)?;
                let qh = self.q(t + half)?;
                let q1 = self.q(t + dt)?;
                let k1 = self.rhs_with_q(q0, c)?;
                let k2 = self.rhs_with_q(qh, &(c + &k1 * half))?;
                let k3 = self.rhs_with_q(qh, &(c + &k2 * half))?;
                let k4 = self.rhs_with_q(q1, &(c + &k3 * dt))?;
                Ok(c + (k1 + (k2 + k3) * two + k4) * (dt / lit::<T>(6.0)))
            }
            Integrator::Heun => {
                let k1 = self.rhs_with_q(self.q(t)?, c)?;
                let k2 = self.rhs_with_q(self.q(t + dt)?, &(c + &k1 * dt))?;
                Ok(c + (k1 + k2) * (dt / two))
            }
        }
    }

    fn steps_between(&self, s: T, t: T) -> Result<usize> {
        whole_steps(t - s, self.config.dt).filter(|_| t >= s).ok_or_else(|| {
            Error::InvalidConfig(format!("[{s}, {t}] is not a whole number of steps dt = {}", self.config.dt))
        })
    }

    fn check_span(&self, s: T, t: T) -> Result<()> {
        for x in [s, t] {
            if !self.path.contains(x) {
                return Err(Error::OutsideWindow { t: to_f64(x), t_min: to_f64(self.path.t_min()), t_max: to_f64(self.path.t_max()) });
            }
        }
        Ok(())
    }

    fn guard(t: T, c: &DVector<T>) -> Result<()> {
        let m = c.amax();
        if !m.is_finite() || m > lit(BLOW_UP) {
            return Err(Error::BlowUp { t: to_f64(t), max_abs: to_f64(m) });
        }
        Ok(())
    }

    /// Drives `visit(t, c)` over every step from `s` to `t`, returning the end state.
    fn march(&self, f: &DVector<T>, s: T, t: T, mut visit: impl FnMut(T, &DVector<T>)) -> Result<GalerkinState<T>> {
        if f.len() != self.model.n() {
            return Err(Error::DimensionMismatch { expected: self.model.n(), got: f.len() });
        }
        self.check_span(s, t)?;
        let steps = self.steps_between(s, t)?;
        let mut c = f.clone();
        Self::guard(s, &c)?;
        visit(s, &c);
        for k in 0..steps {
            let tk = s + from_usize::<T>(k) * self.config.dt;
            c = self.step(tk, &c)?;
            let tn = s + from_usize::<T>(k + 1) * self.config.dt;
            Self::guard(tn, &c)?;
            visit(tn, &c);
        }
        Ok(GalerkinState { t: s + from_usize::<T>(steps) * self.config.dt, c })
    }

    /// `v(t, s, f)`: the system started from `f` at time `s`.
    pub fn solve_shifted(&self, f: &DVector<T>, s: T, t: T) -> Result<GalerkinState<T>> {
        self.march(f, s, t, |_, _| {})
    }

    /// Full trajectory over `[t_start, t_end]`.
    pub fn integrate(&self, f: &DVector<T>) -> Result<Trajectory<T>> {
        self.integrate_with_datum(f, f.dot(f))
    }

    /// As [`Problem::integrate`], recording the W-norm of the unprojected datum.
    pub fn integrate_with_datum(&self, f: &DVector<T>, datum_w_norm_sq: T) -> Result<Trajectory<T>> {
        let mut times = Vec::new();
        let mut states = Vec::new();
        self.march(f, self.config.t_start, self.config.t_end, |t, c| {
            times.push(t);
            states.push(c.clone());
        })?;
        let q = times.iter().map(|&t| self.q(t)).collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            frame: Frame::V,
            times,
            states,
            q,
            datum_w_norm_sq,
            config: self.config.clone(),
            path_seed: self.path.seed(),
        })
    }

    /// `u(t, f, omega) = Q(t) v(t, 0, f)`.
    pub fn u_at(&self, f: &DVector<T>, t: T) -> Result<DVector<T>> {
        Ok(self.solve_shifted(f, T::zero(), t)?.c * self.q(t)?)
    }

    /// Relative V-discrepancy of `u(t + s, f, omega)` and `u(t, u(s, f, omega), theta_s omega)`.
    pub fn cocycle_check(&self, f: &DVector<T>, t: T, s: T) -> Result<T> {
        let lhs = self.u_at(f, t + s)?;
        let us = self.u_at(f, s)?;
        let shifted = self.path.shift(s)?;
        let rhs = self.on_path(&shifted).u_at(&us, t)?;
        Ok(self.relative_v(&lhs, &rhs))
    }

    /// Relative V-discrepancy of `Q(s)^{-1} v(t, f, theta_s omega)` and `v(t + s, s, Q(s)^{-1} f, omega)`.
    pub fn conjugation_check(&self, f: &DVector<T>, t: T, s: T) -> Result<T> {
        let qs = self.q(s)?;
        let shifted = self.path.shift(s)?;
        let lhs = self.on_path(&shifted).solve_shifted(f, T::zero(), t)?.c / qs;
        let rhs = self.solve_shifted(&(f / qs), s, t + s)?.c;
        Ok(self.relative_v(&lhs, &rhs))
    }

    /// `u(t, f, theta_{-t} omega) = v(0, -t, Q(-t)^{-1} f, omega)`.
    pub fn pullback_value(&self, f: &DVector<T>, t: T) -> Result<GalerkinState<T>> {
        let q = self.q(-t)?;
        self.solve_shifted(&(f / q), -t, T::zero())
    }

    /// The same pullback state by direct composition on the shifted path.
    pub fn pullback_by_composition(&self, f: &DVector<T>, t: T) -> Result<GalerkinState<T>> {
        let shifted = self.path.shift(-t)?;
        let c = self.on_path(&shifted).u_at(f, t)?;
        Ok(GalerkinState { t: T::zero(), c })
    }

    /// `sup_{[t_start, t_end]} |v(t, f) - v(t, g)|_V / |f - g|_V`.
    pub fn stability_ratio(&self, f: &DVector<T>, g: &DVector<T>) -> Result<T> {
        let a = self.integrate(f)?;
        let b = self.integrate(g)?;
        let basis = &self.model.basis;
        let d0 = basis.norm_v_sq(&(f - g)).sqrt();
        if !(d0 > T::zero()) {
            return Err(Error::Degenerate("identical initial data".into()));
        }
        let sup = a.states.iter().zip(&b.states).fold(T::zero(), |m, (x, y)| m.max(basis.norm_v_sq(&(x - y)).sqrt()));
        Ok(sup / d0)
    }

    pub fn relative_v(&self, a: &DVector<T>, b: &DVector<T>) -> T {
        let basis = &self.model.basis;
        let den = basis.norm_v_sq(a).sqrt().max(basis.norm_v_sq(b).sqrt());
        if den == T::zero() {
            T::zero()
        } else {
            basis.norm_v_sq(&(a - b)).sqrt() / den
        }
    }
}
