//! Plain-text run configuration: one `key = value` per line, `#` starts a comment.
//!
//! Every key is optional; [`RunConfig::default`] documents the defaults and
//! [`RunConfig::to_text`] writes a file that parses back to the same value.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use sgf_core::discretization::{assemble_forms, poincare_constant, DomainGrid};
use sgf_core::noise::NoiseConfig;
use sgf_core::operators::ForceKind;
use sgf_core::solver::{Integrator, SolverConfig};
use sgf_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Simulate,
    Verify,
    Linearize,
    Pullback,
    Attractor,
    Sweep,
}

impl Kind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate" => Self::Simulate,
            "verify" => Self::Verify,
            "linearize" => Self::Linearize,
            "pullback" => Self::Pullback,
            "attractor" => Self::Attractor,
            "sweep" => Self::Sweep,
            other => return Err(Error::Parse(format!("unknown experiment kind `{other}`"))),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Verify => "verify",
            Self::Linearize => "linearize",
            Self::Pullback => "pullback",
            Self::Attractor => "attractor",
            Self::Sweep => "sweep",
        }
    }

    /// Kinds whose results rest on the dissipativity bound.
    pub fn needs_dissipation(self) -> bool {
        matches!(self, Self::Pullback | Self::Attractor | Self::Sweep)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub kind: Kind,
    /// Interior grid points per axis.
    pub grid_n: usize,
    pub n: usize,
    pub alpha: f64,
    pub nu: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    #[serde(serialize_with = "integrator_str")]
    pub integrator: Integrator,
    pub nonlinear: bool,
    pub seed: u64,
    /// Extra seeds for sweep aggregation; empty means `[seed]`.
    pub seeds: Vec<u64>,
    pub noise_dt: f64,
    pub t_min: f64,
    pub t_max: f64,
    #[serde(serialize_with = "force_str")]
    pub force: ForceKind,
    /// Amplitude of the bump stream function `sin^2(pi x) sin^2(pi y)` of the constant part.
    pub force_amp: f64,
    pub force_gain: f64,
    pub force_saturation: f64,
    /// W-norm of the initial datum.
    pub datum_amp: f64,
    pub probe_modes: usize,
    pub probe_random: usize,
    pub probe_scale: f64,
    pub pull_times: Vec<f64>,
    pub cauchy_tol: f64,
    pub t_tail: f64,
    pub eps_list: Vec<f64>,
    pub fd_h: Vec<f64>,
    pub out: PathBuf,
    pub dump_coefficients: bool,
}

fn integrator_str<S: serde::Serializer>(i: &Integrator, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(i.as_str())
}

fn force_str<S: serde::Serializer>(k: &ForceKind, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(k.as_str())
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kind: Kind::Simulate,
            grid_n: 16,
            n: 8,
            alpha: 0.1,
            nu: 0.1,
            epsilon: 0.5,
            dt: 1e-3,
            t_start: 0.0,
            t_end: 1.0,
            integrator: Integrator::Rk4,
            nonlinear: true,
            seed: 1,
            seeds: Vec::new(),
            noise_dt: 1e-3,
            t_min: -40.0,
            t_max: 5.0,
            force: ForceKind::Constant,
            force_amp: 0.05,
            force_gain: 0.0,
            force_saturation: 1.0,
            datum_amp: 20.0,
            probe_modes: 4,
            probe_random: 4,
            probe_scale: 20.0,
            pull_times: (1..=20).map(f64::from).collect(),
            cauchy_tol: 1e-4,
            t_tail: 35.0,
            eps_list: vec![0.5, 0.25, 0.1, 0.05],
            fd_h: vec![1e-2, 3e-3, 1e-3, 3e-4],
            out: PathBuf::from("out"),
            dump_coefficients: false,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("`{key}`: cannot parse `{v}`")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| num(key, x.trim())).collect()
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", lineno + 1)))?;
        let (key, v) = (key.trim(), value.trim());
        if seen.contains(&key.to_string()) {
            return Err(Error::Parse(format!("line {}: duplicate key `{key}`", lineno + 1)));
        }
        seen.push(key.to_string());
        match key {
            "kind" => cfg.kind = Kind::parse(v)?,
            "grid_n" => cfg.grid_n = num(key, v)?,
            "n" => cfg.n = num(key, v)?,
            "alpha" => cfg.alpha = num(key, v)?,
            "nu" => cfg.nu = num(key, v)?,
            "epsilon" => cfg.epsilon = num(key, v)?,
            "dt" => cfg.dt = num(key, v)?,
            "t_start" => cfg.t_start = num(key, v)?,
            "t_end" => cfg.t_end = num(key, v)?,
            "integrator" => cfg.integrator = Integrator::parse(v)?,
            "nonlinear" => cfg.nonlinear = num(key, v)?,
            "seed" => cfg.seed = num(key, v)?,
            "seeds" => cfg.seeds = list(key, v)?,
            "noise_dt" => cfg.noise_dt = num(key, v)?,
            "t_min" => cfg.t_min = num(key, v)?,
            "t_max" => cfg.t_max = num(key, v)?,
            "force" => cfg.force = ForceKind::parse(v)?,
            "force_amp" => cfg.force_amp = num(key, v)?,
            "force_gain" => cfg.force_gain = num(key, v)?,
            "force_saturation" => cfg.force_saturation = num(key, v)?,
            "datum_amp" => cfg.datum_amp = num(key, v)?,
            "probe_modes" => cfg.probe_modes = num(key, v)?,
            "probe_random" => cfg.probe_random = num(key, v)?,
            "probe_scale" => cfg.probe_scale = num(key, v)?,
            "pull_times" => cfg.pull_times = list(key, v)?,
            "cauchy_tol" => cfg.cauchy_tol = num(key, v)?,
            "t_tail" => cfg.t_tail = num(key, v)?,
            "eps_list" => cfg.eps_list = list(key, v)?,
            "fd_h" => cfg.fd_h = list(key, v)?,
            "out" => cfg.out = PathBuf::from(v),
            "dump_coefficients" => cfg.dump_coefficients = num(key, v)?,
            other => return Err(Error::Parse(format!("line {}: unknown key `{other}`", lineno + 1))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("write to string");
        kv("kind", self.kind.as_str().into());
        kv("grid_n", self.grid_n.to_string());
        kv("n", self.n.to_string());
        kv("alpha", self.alpha.to_string());
        kv("nu", self.nu.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("dt", self.dt.to_string());
        kv("t_start", self.t_start.to_string());
        kv("t_end", self.t_end.to_string());
        kv("integrator", self.integrator.as_str().into());
        kv("nonlinear", self.nonlinear.to_string());
        kv("seed", self.seed.to_string());
        kv("seeds", join(&self.seeds));
        kv("noise_dt", self.noise_dt.to_string());
        kv("t_min", self.t_min.to_string());
        kv("t_max", self.t_max.to_string());
        kv("force", self.force.as_str().into());
        kv("force_amp", self.force_amp.to_string());
        kv("force_gain", self.force_gain.to_string());
        kv("force_saturation", self.force_saturation.to_string());
        kv("datum_amp", self.datum_amp.to_string());
        kv("probe_modes", self.probe_modes.to_string());
        kv("probe_random", self.probe_random.to_string());
        kv("probe_scale", self.probe_scale.to_string());
        kv("pull_times", join(&self.pull_times));
        kv("cauchy_tol", self.cauchy_tol.to_string());
        kv("t_tail", self.t_tail.to_string());
        kv("eps_list", join(&self.eps_list));
        kv("fd_h", join(&self.fd_h));
        kv("out", self.out.display().to_string());
        kv("dump_coefficients", self.dump_coefficients.to_string());
        s
    }

    pub fn deterministic(&self) -> bool {
        self.epsilon == 0.0
    }

    pub fn solver(&self) -> SolverConfig<f64> {
        SolverConfig {
            nu: self.nu,
            alpha: self.alpha,
            epsilon: self.epsilon,
            n: self.n,
            grid_n: self.grid_n,
            dt: self.dt,
            t_start: self.t_start,
            t_end: self.t_end,
            integrator: self.integrator,
            nonlinear: self.nonlinear,
        }
    }

    pub fn noise(&self, seed: u64) -> NoiseConfig<f64> {
        NoiseConfig { epsilon: self.epsilon, seed, t_min: self.t_min, t_max: self.t_max, dt: self.noise_dt }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    /// Checks that need no heavy computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.solver().validate()?;
        self.noise(self.seed).validate()?;
        if self.t_start < self.t_min || self.t_end > self.t_max {
            return bad(format!("[t_start, t_end] = [{}, {}] leaves the noise window", self.t_start, self.t_end));
        }
        if self.probe_modes + self.probe_random == 0 || !(self.probe_scale > 0.0) {
            return bad("the probe ensemble is empty".into());
        }
        if self.probe_modes > self.n {
            return bad(format!("probe_modes = {} exceeds n = {}", self.probe_modes, self.n));
        }
        if self.pull_times.len() < 2 || self.pull_times.windows(2).any(|w| !(w[1] > w[0])) || self.pull_times[0] <= 0.0 {
            return bad("pull_times must be at least two increasing positive times".into());
        }
        if self.fd_h.iter().any(|h| !(*h > 0.0)) {
            return bad("fd_h entries must be positive".into());
        }
        if self.eps_list.iter().any(|e| !(e.abs() < 1.0)) {
            return bad("eps_list entries must satisfy |eps| < 1".into());
        }
        if !(self.cauchy_tol > 0.0) || !(self.t_tail > 0.0) {
            return bad("cauchy_tol and t_tail must be positive".into());
        }
        if self.kind.needs_dissipation() {
            let longest = self.pull_times[self.pull_times.len() - 1];
            if -longest < self.t_min || -self.t_tail < self.t_min {
                return bad(format!("pullback to t = -{} needs t_min <= -{}", longest.max(self.t_tail), longest.max(self.t_tail)));
            }
            if !(self.nu > 0.0) {
                return bad("pullback experiments need nu > 0".into());
            }
        }
        Ok(())
    }

    /// `C_F < nu / P^2`, with `P^2` of the configured grid.
    pub fn check_dissipativity(&self) -> Result<f64> {
        let forms = assemble_forms(&DomainGrid::new(self.grid_n, self.alpha)?);
        let p2 = poincare_constant(&forms)?.p2;
        let c_f = match self.force {
            ForceKind::Zero | ForceKind::Constant => 0.0,
            ForceKind::Linear | ForceKind::Saturating => self.force_gain.abs(),
        };
        let bound = self.nu / p2;
        if !(c_f < bound) {
            return Err(Error::DissipativityViolated { c_f, bound });
        }
        Ok(bound)
    }
}
