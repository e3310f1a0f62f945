use nalgebra::{DMatrix, DVector};
use sgf_core::noise::{q_factor, sample_path, NoiseConfig, WienerPath};
use sgf_core::operators::{ForceSpec, GalerkinModel};
use sgf_core::solver::*;
use sgf_core::Error;
use std::sync::OnceLock;

fn model() -> &'static GalerkinModel<f64> {
    static M: OnceLock<GalerkinModel<f64>> = OnceLock::new();
    M.get_or_init(|| GalerkinModel::build(16, 0.1, 8).unwrap())
}

fn path(seed: u64) -> WienerPath<f64> {
    sample_path(&NoiseConfig { epsilon: 0.5, seed, t_min: -4.0, t_max: 4.0, dt: 1e-3 }).unwrap()
}

fn config(nu: f64, epsilon: f64, dt: f64, t_end: f64) -> SolverConfig<f64> {
    SolverConfig {
        nu,
        alpha: 0.1,
        epsilon,
        n: 8,
        grid_n: 16,
        dt,
        t_start: 0.0,
        t_end,
        integrator: Integrator::Rk4,
        nonlinear: true,
    }
}

fn datum(amp: f64) -> DVector<f64> {
    DVector::from_fn(8, |i, _| amp / (i as f64 + 1.0))
}

fn zero_force() -> ForceSpec<f64> {
    ForceSpec::zero(model().forms.dim())
}

#[test]
fn rhs_basics() {
    let m = model();
    let (p, f) = (path(1), zero_force());
    let cfg = config(0.1, 0.5, 1e-3, 1.0);
    let pr = Problem::new(m, &f, &p, &cfg).unwrap();
    let zero = GalerkinState { t: 0.3, c: DVector::zeros(8) };
    assert_eq!(pr.rhs(&zero).unwrap(), DVector::zeros(8));

    // Small amplitude on one decoupled mode: rhs = -nu lambda_k G_kk c_k + O(c^2).
    let k = 3;
    for amp in [1e-4, 1e-6] {
        let mut c = DVector::zeros(8);
        c[k] = amp;
        let r = pr.rhs(&GalerkinState { t: 0.3, c }).unwrap();
        let lead = -0.1 * m.basis.lambdas[k] * m.grad.g[(k, k)] * amp;
        assert!((r[k] - lead).abs() <= 1e-9 * lead.abs());
    }

    // eps = 0 is the deterministic equation, whatever the path.
    let det = config(0.1, 0.0, 1e-3, 1.0);
    let (p2, p3) = (path(2), path(3));
    let a = Problem::new(m, &f, &p2, &det).unwrap();
    let b = Problem::new(m, &f, &p3, &det).unwrap();
    let s = GalerkinState { t: 0.7, c: datum(5.0) };
    assert_eq!(a.rhs(&s).unwrap(), b.rhs_with_q(1.0, &s.c).unwrap());
    assert!(a.rhs(&GalerkinState { t: 5.0, c: datum(1.0) }).is_err());
}

#[test]
fn zero_datum_stays_zero() {
    let (p, f) = (path(1), zero_force());
    let cfg = config(0.1, 0.5, 1e-3, 0.5);
    let tr = Problem::new(model(), &f, &p, &cfg).unwrap().integrate(&DVector::zeros(8)).unwrap();
    assert_eq!(tr.len(), 501);
    assert!(tr.states.iter().all(|c| c.amax() == 0.0));
}

#[test]
fn linear_regime_matches_exponential() {
    let m = model();
    let (p, f) = (path(1), zero_force());
    let mut cfg = config(0.1, 0.0, 1e-3, 1.0);
    cfg.nonlinear = false;
    let pr = Problem::new(m, &f, &p, &cfg).unwrap();

    let k = 3;
    let mut c0 = DVector::zeros(8);
    c0[k] = 0.7;
    let end = pr.integrate(&c0).unwrap().last();
    let exact = 0.7 * (-0.1 * m.basis.lambdas[k] * m.grad.g[(k, k)]).exp();
    assert!((end.c[k] - exact).abs() <= 1e-12);

    let gen = DMatrix::from_fn(8, 8, |i, j| -0.1 * m.basis.lambdas[i] * m.grad.g[(i, j)]);
    let f0 = datum(1.0);
    let exact = gen.exp() * &f0;
    let end = pr.integrate(&f0).unwrap().last();
    assert!((end.c - exact).amax() <= 1e-12);
}

#[test]
fn rk4_self_convergence() {
    let (p, f) = (path(1), zero_force());
    let finals: Vec<DVector<f64>> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&dt| {
            let cfg = config(0.1, 0.5, dt, 1.0);
            Problem::new(model(), &f, &p, &cfg).unwrap().integrate(&datum(30.0)).unwrap().last().c
        })
        .collect();
    let e1 = (&finals[0] - &finals[1]).norm();
    let e2 = (&finals[1] - &finals[2]).norm();
    assert!(e1 / e2 >= 12.0, "ratio {}", e1 / e2);
}

#[test]
fn heun_agrees_to_second_order() {
    let (p, f) = (path(1), zero_force());
    let rk = Problem::new(model(), &f, &p, &config(0.1, 0.5, 1e-3, 0.5)).unwrap().integrate(&datum(10.0)).unwrap().last().c;
    let err = |dt: f64| {
        let mut cfg = config(0.1, 0.5, dt, 0.5);
        cfg.integrator = Integrator::Heun;
        (Problem::new(model(), &f, &p, &cfg).unwrap().integrate(&datum(10.0)).unwrap().last().c - &rk).norm()
    };
    let ratio = err(1e-3) / err(5e-4);
    assert!((3.0..5.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn replay_is_bit_identical() {
    let f = zero_force();
    let cfg = config(0.1, 0.5, 1e-3, 0.5);
    let (p1, p2) = (path(9), path(9));
    let a = Problem::new(model(), &f, &p1, &cfg).unwrap().integrate(&datum(30.0)).unwrap();
    let b = Problem::new(model(), &f, &p2, &cfg).unwrap().integrate(&datum(30.0)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn shifted_solves() {
    let (p, f) = (path(1), zero_force());
    let cfg = config(0.1, 0.5, 1e-3, 0.8);
    let pr = Problem::new(model(), &f, &p, &cfg).unwrap();
    let d = datum(20.0);
    assert_eq!(pr.solve_shifted(&d, 0.0, 0.8).unwrap().c, pr.integrate(&d).unwrap().last().c);

    // Autonomy when Q = 1.
    let det = config(0.1, 0.0, 1e-3, 0.8);
    let pd = Problem::new(model(), &f, &p, &det).unwrap();
    let a = pd.solve_shifted(&d, 0.0, 0.6).unwrap().c;
    let b = pd.solve_shifted(&d, -1.2, -0.6).unwrap().c;
    assert!((a - b).amax() <= 1e-13);
    assert!(pr.solve_shifted(&d, 3.5, 4.5).is_err());
}

#[test]
fn reconstruction_scales_by_q() {
    let (p, f) = (path(1), zero_force());
    let cfg = config(0.1, 0.5, 1e-3, 0.5);
    let tr = Problem::new(model(), &f, &p, &cfg).unwrap().integrate(&datum(10.0)).unwrap();
    let u = reconstruct_u(&tr, &p, 0.5).unwrap();
    for i in (0..tr.len()).step_by(50) {
        let q = q_factor(&p, 0.5, tr.times[i]).unwrap();
        assert!((u.states[i].norm() - q * tr.states[i].norm()).abs() <= 1e-14 * u.states[i].norm());
    }
    let u0 = reconstruct_u(&tr, &p, 0.0).unwrap();
    assert_eq!(u0.states, tr.states);
    assert!(reconstruct_u(&u, &p, 0.5).is_err());
}

#[test]
fn cocycle_and_conjugation() {
    let f = zero_force();
    let p = path(1);
    for eps in [0.0, 0.5] {
        let cfg = config(0.1, eps, 1e-3, 1.0);
        let pr = Problem::new(model(), &f, &p, &cfg).unwrap();
        let d = datum(30.0);
        assert!(pr.cocycle_check(&d, 0.5, 0.0).unwrap() <= 1e-15);
        assert!(pr.cocycle_check(&d, 0.0, 0.5).unwrap() <= 1e-15);
        assert!(pr.cocycle_check(&d, 0.5, 0.5).unwrap() <= 1e-6);
        assert!(pr.conjugation_check(&d, 0.5, 0.5).unwrap() <= 1e-6);
        assert!(pr.conjugation_check(&d, 0.4, -0.7).unwrap() <= 1e-6);
    }
    let cfg = config(0.1, 0.5, 1e-3, 1.0);
    let pr = Problem::new(model(), &f, &p, &cfg).unwrap();
    assert!(matches!(pr.cocycle_check(&datum(1.0), 3.0, 2.0), Err(Error::OutsideWindow { .. })));
}

#[test]
fn pullback_formulas_agree() {
    let a = sgf_core::discretization::DomainGrid::<f64>::new(16, 0.1).unwrap();
    let force = ForceSpec::constant(a.sample(|x, y| (std::f64::consts::PI * x).sin().powi(2) * (std::f64::consts::PI * y).sin().powi(2)), &model().forms).unwrap();
    let p = path(4);
    let cfg = config(0.1, 0.5, 1e-3, 1.0);
    let pr = Problem::new(model(), &force, &p, &cfg).unwrap();
    let d = datum(5.0);
    assert_eq!(pr.pullback_value(&d, 0.0).unwrap().c, d);
    let a = pr.pullback_value(&d, 1.5).unwrap().c;
    let b = pr.pullback_by_composition(&d, 1.5).unwrap().c;
    assert!(pr.relative_v(&a, &b) <= 1e-6);

    let det = config(0.1, 0.0, 1e-3, 1.5);
    let pd = Problem::new(model(), &force, &p, &det).unwrap();
    let fwd = pd.integrate(&d).unwrap().last().c;
    assert!(pd.relative_v(&pd.pullback_value(&d, 1.5).unwrap().c, &fwd) <= 1e-13);
    assert!(pr.pullback_value(&d, 5.0).is_err());
}

#[test]
fn inviscid_unforced_v_energy_is_conserved() {
    let f = zero_force();
    let p = path(1);
    let drift = |dt: f64| {
        let cfg = config(0.0, 0.5, dt, 1.0);
        let tr = Problem::new(model(), &f, &p, &cfg).unwrap().integrate(&datum(200.0)).unwrap();
        let e0 = model().basis.norm_v_sq(&tr.states[0]);
        tr.states.iter().map(|c| ((model().basis.norm_v_sq(c) - e0) / e0).abs()).fold(0.0, f64::max)
    };
    let (d1, d2) = (drift(1e-3), drift(5e-4));
    assert!(d1 <= 1e-8, "drift {d1}");
    assert!((d1 / d2).log2() >= 3.0, "order {}", (d1 / d2).log2());
}

#[test]
fn deterministic_limit_ignores_the_path() {
    let f = zero_force();
    let cfg = config(0.1, 0.0, 1e-3, 0.5);
    let (p1, p2) = (path(11), path(12));
    let a = Problem::new(model(), &f, &p1, &cfg).unwrap().integrate(&datum(30.0)).unwrap();
    let b = Problem::new(model(), &f, &p2, &cfg).unwrap().integrate(&datum(30.0)).unwrap();
    assert_eq!(a.states, b.states);
}

#[test]
fn stability_ratio_is_bounded() {
    let f = zero_force();
    let p = path(1);
    let cfg = config(0.1, 0.5, 1e-3, 0.5);
    let pr = Problem::new(model(), &f, &p, &cfg).unwrap();
    let d = datum(30.0);
    let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&delta| {
            let mut g = d.clone();
            g[0] += delta;
            pr.stability_ratio(&d, &g).unwrap()
        })
        .collect();
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    assert!((ratios[1] - ratios[2]).abs() <= 0.02 * ratios[2]);
    assert!(pr.stability_ratio(&d, &d).is_err());
}

#[test]
fn blow_up_is_reported() {
    let f = zero_force();
    let p = path(1);
    let cfg = config(0.1, 0.0, 0.5, 4.0);
    let pr = Problem::new(model(), &f, &p, &cfg).unwrap();
    match pr.integrate(&datum(1e4)) {
        Err(Error::BlowUp { t, .. }) => assert!(t > 0.0),
        other => panic!("expected blow-up, got {other:?}"),
    }
}

#[test]
fn configuration_is_validated() {
    let f = zero_force();
    let p = path(1);
    let mut cfg = config(0.1, 0.5, 3e-3, 1.0);
    assert!(Problem::new(model(), &f, &p, &cfg).is_err(), "dt/2 not nested in the path grid");
    cfg.dt = 1e-3;
    cfg.alpha = -1.0;
    assert!(Problem::new(model(), &f, &p, &cfg).is_err());
    let mut cfg = config(0.1, 0.5, 1e-3, 1.0);
    cfg.n = 6;
    assert!(Problem::new(model(), &f, &p, &cfg).is_err());
    let cfg = config(0.1, 0.5, 1e-3, 1.0);
    let pr = Problem::new(model(), &f, &p, &cfg).unwrap();
    assert!(pr.solve_shifted(&datum(1.0), 0.0, 0.0005).is_err());
}
