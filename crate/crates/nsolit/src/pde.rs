//! Fixed-step RK4 integration of the hierarchy flows, sine-Gordon and the −1 flow.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::hierarchy::{
    flow_rhs, hamiltonian, hamiltonian_h2, sg_e_from_w, sg_w_from_e, unit_norm_defect, CrossTerm, HierarchyConst,
    HierarchyError,
};
use crate::spectral::{FieldError, SpectralOps, VField};

/// Fields above this sup-norm are treated as blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e6;
pub const SG_TOL: f64 = 1e-12;
pub const SG_MAX_ITER: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum PdeError {
    #[error("invalid flow configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("blow-up at tau = {tau}: {reason}")]
    BlowUp { tau: f64, reason: String },
    #[error("singularity at tau = {tau}: {source}")]
    Singular { tau: f64, source: HierarchyError },
    #[error(transparent)]
    Hierarchy(HierarchyError),
    #[error("cannot read initial data {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl From<HierarchyError> for PdeError {
    fn from(e: HierarchyError) -> Self {
        match e {
            HierarchyError::Field(f) => PdeError::Field(f),
            other => PdeError::Hierarchy(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Mkdv,
    Sg,
    Minus1,
}

/// Initial data: v for mKdV flows, e⊥ for sg / minus1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    /// 2a sech(a(l − center)) in the first component.
    Soliton {
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        center: Option<f64>,
    },
    /// amplitude · sin(2π·mode·l/L + phase_c) in component c, phases spread over components.
    Sine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one_u")]
        mode: u32,
    },
    Csv {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn one_u() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub kind: FlowKind,
    #[serde(default)]
    pub k: u32,
    #[serde(default = "one_usize")]
    pub p: usize,
    pub n: usize,
    /// Period of the l-domain.
    pub domain: f64,
    pub dt: f64,
    pub tau_end: f64,
    #[serde(default)]
    pub kappa: f64,
    pub initial: InitialData,
    /// Steps between recorded snapshots.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
}

fn one_usize() -> usize {
    1
}

fn default_cadence() -> usize {
    1000
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), PdeError> {
        let bad = |m: String| Err(PdeError::Config(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.tau_end.is_finite() && self.tau_end >= 0.0) {
            return bad(format!("tau_end = {} must be non-negative", self.tau_end));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return bad(format!("n = {} must be a power of two >= 8", self.n));
        }
        if !(self.domain.is_finite() && self.domain > 0.0) {
            return bad(format!("domain = {} must be positive", self.domain));
        }
        if self.p == 0 {
            return bad("p must be at least 1".into());
        }
        if self.kind == FlowKind::Mkdv && self.k > 2 {
            return bad(format!("k = {} is not available (0, 1 or 2)", self.k));
        }
        if !self.kappa.is_finite() {
            return bad("kappa must be finite".into());
        }
        if self.cadence == 0 {
            return bad("cadence must be at least 1".into());
        }
        Ok(())
    }

    /// Step count and final step length.
    pub fn steps(&self) -> (usize, f64) {
        let ratio = self.tau_end / self.dt;
        let steps = (ratio - 1e-9).ceil().max(0.0) as usize;
        if steps == 0 {
            return (0, 0.0);
        }
        (steps, self.tau_end - (steps - 1) as f64 * self.dt)
    }

    pub fn initial_field(&self) -> Result<VField, PdeError> {
        let (n, p, period) = (self.n, self.p, self.domain);
        let field = match &self.initial {
            InitialData::Zero => VField::zeros(n, p, period)?,
            InitialData::Soliton { a, center } => {
                let c = center.unwrap_or(period / 2.0);
                VField::from_fn(n, p, period, |l| {
                    let mut x = vec![0.0; p];
                    x[0] = 2.0 * a / (a * (l - c)).cosh();
                    x
                })?
            }
            InitialData::Sine { amplitude, mode } => {
                let base = 2.0 * std::f64::consts::PI * *mode as f64 / period;
                VField::from_fn(n, p, period, |l| {
                    (0..p).map(|c| amplitude * (base * l + c as f64 * std::f64::consts::PI / p as f64).sin()).collect()
                })?
            }
            InitialData::Csv { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| PdeError::Io { path: path.clone(), message: e.to_string() })?;
                let f = crate::report::field_from_csv(&text, period)
                    .map_err(|e| PdeError::Io { path: path.clone(), message: e })?;
                if f.n != n || f.p != p {
                    return Err(PdeError::Config(format!(
                        "initial CSV has N = {}, p = {} but the config says N = {n}, p = {p}",
                        f.n, f.p
                    )));
                }
                f
            }
        };
        Ok(field)
    }
}

/// Hamiltonians and sup-norm of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub tau: f64,
    pub h0: f64,
    pub h1: f64,
    pub h2a: f64,
    pub h2b: f64,
    pub maxnorm: f64,
    /// max |(e∥)² + |e⊥|² − 1| for sg / minus1 runs.
    pub unit_defect: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub tau: f64,
    /// v for mKdV flows, v = (1−|e⊥|²)^{-1/2} ∂_l e⊥ otherwise.
    pub v: VField,
    /// e⊥ for sg / minus1 runs.
    pub e_perp: Option<VField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: FlowConfig,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has at least the initial snapshot")
    }
}

fn diagnostics(ops: &SpectralOps, tau: f64, v: &VField, e: Option<&VField>) -> Result<Diagnostics, PdeError> {
    Ok(Diagnostics {
        tau,
        h0: hamiltonian(ops, 0, v)?,
        h1: hamiltonian(ops, 1, v)?,
        h2a: hamiltonian_h2(ops, v, CrossTerm::Squared)?,
        h2b: hamiltonian_h2(ops, v, CrossTerm::Linear)?,
        maxnorm: v.max_norm(),
        unit_defect: e.map(|e| unit_norm_defect(ops, v, e)).transpose()?,
    })
}

fn check_growth(tau: f64, u: &VField) -> Result<(), PdeError> {
    if !u.is_finite() {
        return Err(PdeError::BlowUp { tau, reason: "non-finite value".into() });
    }
    let m = u.max_norm();
    if m > BLOWUP_THRESHOLD {
        return Err(PdeError::BlowUp { tau, reason: format!("sup-norm {m:.6e} exceeds {BLOWUP_THRESHOLD:e}") });
    }
    Ok(())
}

/// One classical RK4 step of u' = f(u).
pub fn rk4_step<E>(u: &VField, h: f64, mut f: impl FnMut(&VField) -> Result<VField, E>) -> Result<VField, E> {
    let k1 = f(u)?;
    let k2 = f(&u.axpy(0.5 * h, &k1))?;
    let k3 = f(&u.axpy(0.5 * h, &k2))?;
    let k4 = f(&u.axpy(h, &k3))?;
    let data = (0..u.data.len())
        .map(|i| u.data[i] + h / 6.0 * (k1.data[i] + 2.0 * k2.data[i] + 2.0 * k3.data[i] + k4.data[i]))
        .collect();
    Ok(VField { data, ..u.clone() })
}

/// Integrates `cfg` from its configured initial data.
pub fn integrate_flow(cfg: &FlowConfig) -> Result<Trajectory, PdeError> {
    cfg.validate()?;
    let u0 = cfg.initial_field()?;
    integrate_from(cfg, u0)
}

/// Integrates `cfg` from the given initial field (v, or e⊥ for sg / minus1).
pub fn integrate_from(cfg: &FlowConfig, u0: VField) -> Result<Trajectory, PdeError> {
    cfg.validate()?;
    if u0.n != cfg.n || u0.p != cfg.p {
        return Err(PdeError::Config("initial field shape differs from the configuration".into()));
    }
    let ops = SpectralOps::new(cfg.n, cfg.domain)?;
    match cfg.kind {
        FlowKind::Mkdv => integrate_mkdv(cfg, &ops, u0),
        FlowKind::Sg | FlowKind::Minus1 => integrate_sg(cfg, &ops, u0),
    }
}

fn integrate_mkdv(cfg: &FlowConfig, ops: &SpectralOps, v0: VField) -> Result<Trajectory, PdeError> {
    let c = HierarchyConst::new(cfg.kappa)?;
    check_growth(0.0, &v0)?;
    let (steps, last) = cfg.steps();
    let mut snapshots = vec![Snapshot { tau: 0.0, v: v0.clone(), e_perp: None }];
    let mut diags = vec![diagnostics(ops, 0.0, &v0, None)?];
    let mut v = v0;
    for i in 1..=steps {
        let h = if i == steps { last } else { cfg.dt };
        let tau = if i == steps { cfg.tau_end } else { i as f64 * cfg.dt };
        v = rk4_step(&v, h, |u| flow_rhs(ops, cfg.k, u, c))?;
        check_growth(tau, &v)?;
        if i % cfg.cadence == 0 || i == steps {
            diags.push(diagnostics(ops, tau, &v, None)?);
            snapshots.push(Snapshot { tau, v: v.clone(), e_perp: None });
        }
    }
    Ok(Trajectory { config: cfg.clone(), snapshots, diagnostics: diags })
}

fn integrate_sg(cfg: &FlowConfig, ops: &SpectralOps, e0: VField) -> Result<Trajectory, PdeError> {
    let rate = match cfg.kind {
        FlowKind::Minus1 => {
            if cfg.kappa <= 0.0 {
                return Err(PdeError::Config("the -1 flow needs kappa > 0".into()));
            }
            cfg.kappa
        }
        _ => 1.0,
    };
    let singular = |tau: f64| move |e: HierarchyError| match e {
        HierarchyError::Field(f) => PdeError::Field(f),
        other => PdeError::Singular { tau, source: other },
    };
    let mean = e0.mean();
    if let Some(m) = mean.iter().find(|m| m.abs() > 1e-10) {
        return Err(PdeError::Config(format!("initial e_perp must have zero mean (found {m:e})")));
    }
    let w0 = sg_w_from_e(ops, &e0).map_err(singular(0.0))?;
    let (steps, last) = cfg.steps();
    let mut snapshots = vec![Snapshot { tau: 0.0, v: w0.clone(), e_perp: Some(e0.clone()) }];
    let mut diags = vec![diagnostics(ops, 0.0, &w0, Some(&e0))?];
    let mut w = w0;
    let mut e = e0;
    for i in 1..=steps {
        let h = if i == steps { last } else { cfg.dt };
        let tau = if i == steps { cfg.tau_end } else { i as f64 * cfg.dt };
        let mut guess = e.clone();
        w = rk4_step(&w, h, |u| {
            let ei = sg_e_from_w(ops, u, Some(&guess), SG_TOL, SG_MAX_ITER).map_err(singular(tau))?;
            guess = ei.clone();
            Ok::<_, PdeError>(ei.scale(-rate))
        })?;
        check_growth(tau, &w)?;
        e = sg_e_from_w(ops, &w, Some(&guess), SG_TOL, SG_MAX_ITER).map_err(singular(tau))?;
        if i % cfg.cadence == 0 || i == steps {
            diags.push(diagnostics(ops, tau, &w, Some(&e))?);
            snapshots.push(Snapshot { tau, v: w.clone(), e_perp: Some(e.clone()) });
        }
    }
    Ok(Trajectory { config: cfg.clone(), snapshots, diagnostics: diags })
}

/// Maximum relative drift of each Hamiltonian over a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftReport {
    pub h0: f64,
    pub h1: f64,
    pub h2a: f64,
    pub h2b: f64,
    pub unit_defect: Option<f64>,
}

/// Which second-Hamiltonian candidates stay within a drift tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum H2Selection {
    Unique(CrossTerm),
    Both,
    Neither,
}

impl DriftReport {
    pub fn select_h2(&self, tol: f64) -> H2Selection {
        match (self.h2a <= tol, self.h2b <= tol) {
            (true, false) => H2Selection::Unique(CrossTerm::Squared),
            (false, true) => H2Selection::Unique(CrossTerm::Linear),
            (true, true) => H2Selection::Both,
            (false, false) => H2Selection::Neither,
        }
    }
}

fn relative_drift(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut it = values.clone();
    let first = match it.next() {
        Some(x) => x,
        None => return 0.0,
    };
    let worst = values.fold(0.0_f64, |m, x| m.max((x - first).abs()));
    if first == 0.0 {
        worst
    } else {
        worst / first.abs()
    }
}

pub fn conservation_series(t: &Trajectory) -> Result<DriftReport, PdeError> {
    if t.diagnostics.len() < 2 {
        return Err(PdeError::Config("conservation report needs at least two snapshots".into()));
    }
    let d = &t.diagnostics;
    let defect = d.iter().filter_map(|x| x.unit_defect).fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    Ok(DriftReport {
        h0: relative_drift(d.iter().map(|x| x.h0)),
        h1: relative_drift(d.iter().map(|x| x.h1)),
        h2a: relative_drift(d.iter().map(|x| x.h2a)),
        h2b: relative_drift(d.iter().map(|x| x.h2b)),
        unit_defect: defect,
    })
}

/// S_λ v(l) = λ⁻¹ v(l/λ) on the λ-scaled domain.
pub fn scale_field(v: &VField, lambda: f64) -> VField {
    VField { period: v.period * lambda, data: v.data.iter().map(|x| x / lambda).collect(), ..v.clone() }
}

/// Configuration of the λ-rescaled run: domain λL, time and step scaled by λ^{1+2k}.
pub fn scaled_config(cfg: &FlowConfig, lambda: f64) -> FlowConfig {
    let t = lambda.powi(1 + 2 * cfg.k as i32);
    FlowConfig { domain: cfg.domain * lambda, dt: cfg.dt * t, tau_end: cfg.tau_end * t, ..cfg.clone() }
}

/// Largest pointwise gap between S_λ(v(τ)) and the λ-rescaled run at λ^{1+2k}τ.
pub fn scaling_check(cfg: &FlowConfig, lambda: f64) -> Result<f64, PdeError> {
    cfg.validate()?;
    if cfg.kind != FlowKind::Mkdv {
        return Err(PdeError::Config("scaling check applies to mkdv flows".into()));
    }
    if cfg.kappa != 0.0 {
        return Err(PdeError::Config("scaling check needs kappa = 0".into()));
    }
    if !(0.5..=2.0).contains(&lambda) {
        return Err(PdeError::Config(format!("lambda = {lambda} outside [0.5, 2]")));
    }
    let v0 = cfg.initial_field()?;
    let scaled = scaled_config(cfg, lambda);
    let sv0 = scale_field(&v0, lambda);
    let (a, b) = rayon::join(|| integrate_from(cfg, v0), || integrate_from(&scaled, sv0));
    let (a, b) = (a?, b?);
    Ok(scale_field(&a.last().v, lambda).max_abs_diff(&b.last().v))
}
