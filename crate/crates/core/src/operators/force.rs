use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::model::GalerkinModel;
use crate::discretization::DiscreteForms;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForceKind {
    Zero,
    Constant,
    Linear,
    Saturating,
}

impl ForceKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "constant" => Ok(Self::Constant),
            "linear" => Ok(Self::Linear),
            "saturating" => Ok(Self::Saturating),
            other => Err(Error::Parse(format!("unknown force kind `{other}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Constant => "constant",
            Self::Linear => "linear",
            Self::Saturating => "saturating",
        }
    }
}

/// External force `F(u)`, held as the stream function of its value.
///
/// * zero: `F = 0`
/// * constant: `F = a`
/// * linear: `F(u) = a + c u`
/// * saturating: `F(u) = a + c u / (1 + s |u|_V^2)`
///
/// For the saturating kind, `DF(u) g = c [g/(1 + s r^2) - 2 s (u, g)_V u / (1 + s r^2)^2]`
/// with `r = |u|_V`. Its V-operator norm is
/// `|c| max(1/(1 + s r^2), |1 - s r^2|/(1 + s r^2)^2) <= |c|`, so `C_F = |c|`
/// for every kind with a gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceSpec<T: Real> {
    pub kind: ForceKind,
    /// Stream function of the constant part `a`.
    pub a: DVector<T>,
    pub gain: T,
    pub saturation: T,
    /// Declared Lipschitz constant in V.
    pub c_f: T,
    /// `|F(0)|_V`.
    pub f0_norm_v: T,
}

impl<T: Real> ForceSpec<T> {
    pub fn zero(dim: usize) -> Self {
        Self {
            kind: ForceKind::Zero,
            a: DVector::zeros(dim),
            gain: T::zero(),
            saturation: T::zero(),
            c_f: T::zero(),
            f0_norm_v: T::zero(),
        }
    }

    pub fn constant(a: DVector<T>, forms: &DiscreteForms<T>) -> Result<Self> {
        Self::build(ForceKind::Constant, a, T::zero(), T::zero(), forms)
    }

    pub fn linear(a: DVector<T>, gain: T, forms: &DiscreteForms<T>) -> Result<Self> {
        Self::build(ForceKind::Linear, a, gain, T::zero(), forms)
    }

    pub fn saturating(a: DVector<T>, gain: T, saturation: T, forms: &DiscreteForms<T>) -> Result<Self> {
        if saturation < T::zero() {
            return Err(Error::InvalidConfig("saturation must be non-negative".into()));
        }
        Self::build(ForceKind::Saturating, a, gain, saturation, forms)
    }

    fn build(kind: ForceKind, a: DVector<T>, gain: T, saturation: T, forms: &DiscreteForms<T>) -> Result<Self> {
        if a.len() != forms.dim() {
            return Err(Error::DimensionMismatch { expected: forms.dim(), got: a.len() });
        }
        let f0_norm_v = forms.norm_v_sq(&a).max(T::zero()).sqrt();
        Ok(Self { kind, a, gain, saturation, c_f: gain.abs(), f0_norm_v })
    }

    pub fn is_zero(&self) -> bool {
        self.kind == ForceKind::Zero
    }

    /// Short identifier used to key output artifacts.
    pub fn id(&self) -> String {
        format!("{}-g{:e}-s{:e}-a{:e}", self.kind.as_str(), self.gain, self.saturation, self.f0_norm_v)
    }

    /// Scalar multiplying `u` in `F(u) - a`, given `|u|_V^2`.
    fn rho(&self, norm_v_sq: T) -> T {
        match self.kind {
            ForceKind::Zero | ForceKind::Constant => T::zero(),
            ForceKind::Linear => self.gain,
            ForceKind::Saturating => self.gain / (T::one() + self.saturation * norm_v_sq),
        }
    }

    /// Stream function of `F(u)`.
    pub fn eval(&self, psi_u: &DVector<T>, norm_v_sq: T) -> DVector<T> {
        match self.kind {
            ForceKind::Zero => DVector::zeros(psi_u.len()),
            ForceKind::Constant => self.a.clone(),
            _ => &self.a + psi_u * self.rho(norm_v_sq),
        }
    }

    /// Stream function of `DF(u) g`, given `|u|_V^2` and `(u, g)_V`.
    pub fn derivative(&self, psi_u: &DVector<T>, norm_v_sq: T, psi_g: &DVector<T>, inner_ug: T) -> DVector<T> {
        match self.kind {
            ForceKind::Zero | ForceKind::Constant => DVector::zeros(psi_g.len()),
            ForceKind::Linear => psi_g * self.gain,
            ForceKind::Saturating => {
                let d = T::one() + self.saturation * norm_v_sq;
                psi_g * (self.gain / d) - psi_u * (lit::<T>(2.0) * self.gain * self.saturation * inner_ug / (d * d))
            }
        }
    }
}

/// `out[k] = Q^{-1} (F(Q u), e_k)` with `u = sum c_i e_i`: the field is
/// rebuilt on the grid, the force applied there and paired with each mode.
pub fn force_coeffs<T: Real>(force: &ForceSpec<T>, c: &DVector<T>, q: T, model: &GalerkinModel<T>) -> Result<DVector<T>> {
    if !(q > T::zero()) {
        return Err(Error::NonPositiveFactor(crate::scalar::to_f64(q)));
    }
    let n = model.n();
    if c.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: c.len() });
    }
    if force.is_zero() {
        return Ok(DVector::zeros(n));
    }
    let psi_u = model.basis.stream(c) * q;
    let r2 = model.basis.norm_v_sq(c) * q * q;
    let f = force.eval(&psi_u, r2);
    Ok(model.m0_psi.tr_mul(&f) / q)
}

/// `out[k] = (DF(Q v) z, e_k)`, the derivative of `v -> Q^{-1} F(Q v)` applied to `z`.
pub fn force_derivative_coeffs<T: Real>(
    force: &ForceSpec<T>,
    c: &DVector<T>,
    z: &DVector<T>,
    q: T,
    model: &GalerkinModel<T>,
) -> Result<DVector<T>> {
    let n = model.n();
    if force.is_zero() || force.kind == ForceKind::Constant {
        return Ok(DVector::zeros(n));
    }
    if !(q > T::zero()) {
        return Err(Error::NonPositiveFactor(crate::scalar::to_f64(q)));
    }
    let psi_u = model.basis.stream(c) * q;
    let psi_g = model.basis.stream(z);
    let r2 = model.basis.norm_v_sq(c) * q * q;
    let inner = model.basis.inner_v(c, z) * q;
    let d = force.derivative(&psi_u, r2, &psi_g, inner);
    Ok(model.m0_psi.tr_mul(&d))
}

/// Largest observed `|F(u1) - F(u2)|_V / |u1 - u2|_V` over random pairs in
/// the basis span, with amplitudes spread over four decades around the
/// saturation scale. Norms are evaluated on the grid.
pub fn lipschitz_probe<T: Real>(force: &ForceSpec<T>, model: &GalerkinModel<T>, trials: usize, seed: u64) -> T {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n = model.n();
    let forms = &model.forms;
    let scale0 = if force.saturation > T::zero() { T::one() / force.saturation.sqrt() } else { T::one() };
    let mut worst = T::zero();
    let draw = |rng: &mut ChaCha20Rng| {
        let amp: T = scale0 * lit(10f64.powf(rng.random_range(-2.0..2.0)));
        let raw = DVector::from_fn(n, |_, _| lit::<T>(rng.sample(StandardNormal)));
        let psi = model.basis.stream(&raw);
        let norm = forms.norm_v_sq(&psi).sqrt();
        psi * (amp / norm)
    };
    for _ in 0..trials {
        let u1 = draw(&mut rng);
        let du = draw(&mut rng) * lit::<T>(10f64.powf(rng.random_range(-3.0..0.0)));
        let u2 = &u1 + &du;
        let f1 = force.eval(&u1, forms.norm_v_sq(&u1));
        let f2 = force.eval(&u2, forms.norm_v_sq(&u2));
        let num = forms.norm_v_sq(&(f1 - f2)).max(T::zero()).sqrt();
        let den = forms.norm_v_sq(&du).sqrt();
        worst = worst.max(num / den);
    }
    worst
}
