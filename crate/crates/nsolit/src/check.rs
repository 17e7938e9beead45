//! Invariant suites behind `nsolit check`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dconnection::{canonical_dconnection, dcurvature, DMetric, Variant};
use crate::expr::{parse_expr, Expr};
use crate::geometry::{ncurvature, NConnection};
use crate::hierarchy::{
    flow_rhs, minus1_residual, op_h, op_j, sg_w_from_e, unit_parallel_component, HierarchyConst,
};
use crate::klein::{matrix_structure, pair_count, parallel_frame, structure_residuals, FrameFields};
use crate::metric::parse_metric;
use crate::pde::{conservation_series, integrate_flow, FlowConfig, FlowKind, InitialData};
use crate::pipeline::{compute_tables, with_connection, GeometryTables};
use crate::report::Num;
use crate::spectral::{Anchor, SpectralOps, VField};
use crate::tensor::Tensor;

pub const SPHERE2: &str = "dim 2; coords x1,x2; g[1][1]=1; g[2][2]=sin(x1)^2; box x1 = [0.3, 2.8];";
pub const POLY2: &str = "dim 2; coords x1,x2; g[1][1]=2 + x1^2; g[1][2]=x1*x2/3; g[2][2]=3 + x2^2 - x1/2;";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Geometry,
    Hierarchy,
    All,
}

impl Suite {
    fn runs_geometry(self) -> bool {
        matches!(self, Suite::Geometry | Suite::All)
    }

    fn runs_hierarchy(self) -> bool {
        matches!(self, Suite::Hierarchy | Suite::All)
    }
}

/// Deliberate corruption used to confirm that the suite notices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Adds 1e-3 to L^1_11 of every lifted metric.
    Connection,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub samples: usize,
    pub seed: u64,
    pub fault: Fault,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { samples: 100, seed: 0, fault: Fault::None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub value: Num,
    pub tolerance: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn record(suite: &'static str, name: impl Into<String>, tol: f64, value: Result<f64, String>) -> CheckResult {
    let name = name.into();
    match value {
        Ok(v) => CheckResult { suite, name, passed: v <= tol, value: Num(v), tolerance: Num(tol), error: None },
        Err(e) => CheckResult { suite, name, passed: false, value: Num(f64::NAN), tolerance: Num(tol), error: Some(e) },
    }
}

pub fn run(suite: Suite, opts: &CheckOptions) -> CheckReport {
    let mut checks = Vec::new();
    if suite.runs_geometry() {
        checks.extend(geometry_suite(opts));
    }
    if suite.runs_hierarchy() {
        checks.extend(hierarchy_suite(opts));
    }
    CheckReport { passed: checks.iter().all(|c| c.passed), seed: opts.seed, samples: opts.samples, checks }
}

/// Largest sampled entry over every table, short-circuiting symbolic zeros.
pub fn max_over(tables: &[&Tensor], vars: &[String], points: &[Vec<f64>]) -> Result<f64, String> {
    let mut worst = 0.0_f64;
    for t in tables {
        if t.is_symbolic_zero() {
            continue;
        }
        worst = worst.max(t.max_abs(vars, points).map_err(|e| e.to_string())?);
    }
    Ok(worst)
}

/// Tables of a metric, with the fault applied when requested.
pub fn lifted(src: &str, fault: Fault) -> Result<GeometryTables, String> {
    let m = parse_metric(src).map_err(|e| e.to_string())?;
    let t = compute_tables(&m).map_err(|e| e.to_string())?;
    Ok(match fault {
        Fault::None => t,
        Fault::Connection => {
            let mut dc = t.dconn.clone();
            let mut data = dc.l_h.clone();
            let bumped = data.at(&[0, 0, 0]).plus(&Expr::constant(1e-3));
            data = Tensor::from_fn(&data.shape.clone(), |ix| {
                if ix == [0, 0, 0] {
                    bumped.clone()
                } else {
                    data.at(ix).clone()
                }
            });
            dc.l_h = data;
            with_connection(&t, dc)
        }
    })
}

/// diag(s_1, ..., s_n) for every sign pattern.
pub fn flat_metrics(n: usize) -> Vec<String> {
    (0..1usize << n)
        .map(|mask| {
            let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
            let mut s = format!("dim {n}; coords {};", coords.join(","));
            for i in 0..n {
                let sign = if mask >> i & 1 == 1 { "-1" } else { "1" };
                s.push_str(&format!(" g[{0}][{0}]={sign};", i + 1));
            }
            s
        })
        .collect()
}

fn flat_zero(n: usize, opts: &CheckOptions) -> Result<f64, String> {
    let mut worst = 0.0_f64;
    for src in flat_metrics(n) {
        let t = lifted(&src, opts.fault)?;
        let pts = t.metric.sample_xy(opts.samples, opts.seed);
        let tables: Vec<&Tensor> = t.named().into_iter().map(|(_, x)| x).collect();
        worst = worst.max(max_over(&tables, &t.vars(), &pts)?);
        let scalars = Tensor::from_fn(&[2], |ix| if ix[0] == 0 { t.ricci.r_arrow.clone() } else { t.ricci.s_arrow.clone() });
        worst = worst.max(max_over(&[&scalars], &t.vars(), &pts)?);
    }
    Ok(worst)
}

fn identities(src: &str, opts: &CheckOptions) -> Result<(f64, f64), String> {
    let t = lifted(src, opts.fault)?;
    let pts = t.metric.sample_xy(opts.samples, opts.seed);
    let vars = t.vars();
    let torsion = max_over(&[&t.torsion.hh, &t.torsion.vv], &vars, &pts)?;
    let c = t.compat();
    let compat = max_over(&[&c.dh_g, &c.dh_h, &c.dv_g, &c.dv_h], &vars, &pts)?;
    Ok((torsion, compat))
}

/// Constant blocks g = h = diag(1, 2) over random smooth N(x, y).
pub fn random_nconnection(seed: u64) -> NConnection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = vec!["x1".to_string(), "x2".to_string()];
    let y = vec!["y1".to_string(), "y2".to_string()];
    let vars: Vec<String> = x.iter().chain(&y).cloned().collect();
    let mut c = || (rng.gen_range(-1.0..1.0) * 1000.0_f64).round() / 1000.0;
    let entries: Vec<Expr> = (0..4)
        .map(|_| {
            let text = format!(
                "({}) * sin(({}) * x1 + ({}) * y2) + ({}) * x2 * y1 + ({}) * cos(({}) * x2 * y2)",
                c(),
                c(),
                c(),
                c(),
                c(),
                c()
            );
            parse_expr(&text, &vars).expect("generated expression parses")
        })
        .collect();
    let coef = Tensor::from_fn(&[2, 2], |ix| entries[2 * ix[0] + ix[1]].clone());
    NConnection::new(coef, x, y).expect("shape matches")
}

pub fn constant_block_metric(nc: NConnection) -> DMetric {
    let block = Tensor::from_fn(&[2, 2], |ix| match (ix[0], ix[1]) {
        (0, 0) => Expr::one(),
        (1, 1) => Expr::constant(2.0),
        _ => Expr::zero(),
    });
    DMetric::new(block.clone(), block, nc).expect("constant blocks are regular")
}

/// (largest coefficient or curvature entry, largest Ω entry) over three random N.
fn constant_coefficient(opts: &CheckOptions) -> Result<(f64, f64), String> {
    let mut worst = 0.0_f64;
    let mut omega = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    for k in 0..3u64 {
        let dm = constant_block_metric(random_nconnection(opts.seed.wrapping_mul(31).wrapping_add(k)));
        let dc = canonical_dconnection(&dm, Variant::Tm).map_err(|e| e.to_string())?;
        let ct = dcurvature(&dc, &dm.nc);
        let pts: Vec<Vec<f64>> = (0..opts.samples).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let vars = dm.vars();
        worst = worst.max(max_over(&[&dc.l_h, &dc.l_v, &dc.c_h, &dc.c_v, &ct.r, &ct.p, &ct.s], &vars, &pts)?);
        omega = omega.max(ncurvature(&dm.nc).max_abs(&vars, &pts).map_err(|e| e.to_string())?);
    }
    Ok((worst, omega))
}

fn geometry_suite(opts: &CheckOptions) -> Vec<CheckResult> {
    let g = "geometry";
    let mut out = vec![
        record(g, "flat_zero.n2", 1e-14, flat_zero(2, opts)),
        record(g, "flat_zero.n3", 1e-14, flat_zero(3, opts)),
    ];
    for (label, src) in [("sphere2", SPHERE2), ("poly2", POLY2)] {
        match identities(src, opts) {
            Ok((t, c)) => {
                out.push(record(g, format!("torsion_hh_vv_vanish.{label}"), 1e-10, Ok(t)));
                out.push(record(g, format!("metric_compatibility.{label}"), 1e-10, Ok(c)));
            }
            Err(e) => out.push(record(g, format!("identities.{label}"), 1e-10, Err(e))),
        }
    }
    let sphere_scalar = lifted(SPHERE2, opts.fault).and_then(|t| {
        let pts = t.metric.sample_xy(opts.samples, opts.seed);
        let two = Tensor::from_fn(&[1], |_| t.ricci.r_arrow.sub(&Expr::constant(2.0)));
        max_over(&[&two], &t.vars(), &pts)
    });
    out.push(record(g, "h_scalar_curvature.sphere2", 1e-10, sphere_scalar));
    match constant_coefficient(opts) {
        Ok((z, omega)) => {
            out.push(record(g, "constant_blocks_zero_curvature", 1e-12, Ok(z)));
            out.push(CheckResult {
                suite: g,
                name: "constant_blocks_nonzero_omega".into(),
                passed: omega > 1e-6,
                value: Num(omega),
                tolerance: Num(1e-6),
                error: None,
            });
        }
        Err(e) => out.push(record(g, "constant_blocks_zero_curvature", 1e-12, Err(e))),
    }
    out
}

fn band_limited(n: usize, p: usize, period: f64, kmax: usize, amp: f64, rng: &mut ChaCha8Rng) -> VField {
    let base = 2.0 * PI / period;
    let coef: Vec<Vec<(f64, f64)>> =
        (0..p).map(|_| (0..=kmax).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()).collect();
    VField::from_fn(n, p, period, |l| {
        coef.iter()
            .map(|cs| {
                amp * cs
                    .iter()
                    .enumerate()
                    .map(|(q, (a, b))| a * (q as f64 * base * l).cos() + b * (q as f64 * base * l).sin())
                    .sum::<f64>()
            })
            .collect()
    })
    .expect("finite samples")
}

/// Band-limited field with a double zero at l = 0.
pub fn vanishing_at_origin(n: usize, p: usize, period: f64, seed: u64) -> VField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = band_limited(n, p, period, 5, 0.5, &mut rng);
    let bump: Vec<f64> = g.grid().iter().map(|l| 1.0 - (2.0 * PI * l / period).cos()).collect();
    g.mul_scalar_field(&bump)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn recursion_closed_form(opts: &CheckOptions) -> Result<f64, String> {
    let n = 256;
    let ops = SpectralOps::new(n, 2.0 * PI).map_err(err)?.with_anchor(Anchor::Point(0));
    let mut worst = 0.0_f64;
    for trial in 0..10u64 {
        let p = 1 + trial as usize % 3;
        let v = vanishing_at_origin(n, p, 2.0 * PI, opts.seed.wrapping_add(trial));
        let vl = ops.apply_d(&v).map_err(err)?;
        let lhs = op_h(&ops, &v, &op_j(&ops, &v, &vl).map_err(err)?).map_err(err)?;
        let rhs = flow_rhs(&ops, 1, &v, HierarchyConst::FLAT).map_err(err)?;
        worst = worst.max(lhs.max_abs_diff(&rhs));
    }
    Ok(worst)
}

fn h_reduces_to_d(opts: &CheckOptions) -> Result<f64, String> {
    let ops = SpectralOps::new(128, 2.0 * PI).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let v = band_limited(128, 1, 2.0 * PI, 6, 1.0, &mut rng);
    let w = band_limited(128, 1, 2.0 * PI, 6, 1.0, &mut rng);
    Ok(op_h(&ops, &v, &w).map_err(err)?.max_abs_diff(&ops.apply_d(&w).map_err(err)?))
}

/// Weight 2k+3 of flow_rhs under v ↦ λ⁻¹ v(·/λ).
fn rhs_scaling(opts: &CheckOptions) -> Result<f64, String> {
    let (n, lambda) = (256, 2.0);
    let mut worst = 0.0_f64;
    for k in 0..=2u32 {
        let v = vanishing_at_origin(n, 2, 2.0 * PI, opts.seed.wrapping_add(40 + k as u64));
        let ops = SpectralOps::new(n, 2.0 * PI).map_err(err)?.with_anchor(Anchor::Point(0));
        let ops_l = SpectralOps::new(n, 2.0 * PI * lambda).map_err(err)?.with_anchor(Anchor::Point(0));
        let sv = VField { period: v.period * lambda, data: v.data.iter().map(|x| x / lambda).collect(), ..v.clone() };
        let a = flow_rhs(&ops, k, &v, HierarchyConst::FLAT).map_err(err)?;
        let b = flow_rhs(&ops_l, k, &sv, HierarchyConst::FLAT).map_err(err)?;
        let w = lambda.powi(2 * k as i32 + 2);
        let scale = a.max_abs().max(1.0);
        worst = worst.max(b.data.iter().zip(&a.data).map(|(x, y)| (x * w - y).abs()).fold(0.0, f64::max) / scale);
    }
    Ok(worst)
}

fn minus1_checks(opts: &CheckOptions) -> Result<(f64, f64), String> {
    let n = 256;
    let ops = SpectralOps::new(n, 2.0 * PI).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(7));
    let (mut resid, mut law) = (0.0_f64, 0.0_f64);
    for p in 1..=3 {
        let e0 = band_limited(n, p, 2.0 * PI, 4, 0.15, &mut rng);
        let m = e0.mean();
        let e = e0.map_points(p, |_, x| x.iter().zip(&m).map(|(a, b)| a - b).collect());
        let v = sg_w_from_e(&ops, &e).map_err(err)?;
        let c = HierarchyConst::new(1.0).map_err(err)?;
        resid = resid.max(minus1_residual(&ops, &v, &e.scale(-1.0), c).map_err(err)?.max_abs());
        let e_par = unit_parallel_component(&ops, &v, &e).map_err(err)?;
        let q: Vec<f64> = e_par.iter().zip(e.norm2()).map(|(a, s)| a * a + s).collect();
        law = law.max(ops.d(&q).iter().fold(0.0_f64, |m, x| m.max(x.abs())));
    }
    Ok((resid, law))
}

fn structure_checks(opts: &CheckOptions) -> Result<(f64, f64), String> {
    let n = 128;
    let period = 2.0 * PI;
    let ops = SpectralOps::new(n, period).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(11));
    let (mut agree, mut recon) = (0.0_f64, 0.0_f64);
    for set in 0..10usize {
        let p = 1 + set % 3;
        let mut f = FrameFields::zeros(n, p, period).map_err(err)?;
        f.v = band_limited(n, p, period, 5, 1.0, &mut rng);
        f.varpi = band_limited(n, p, period, 5, 1.0, &mut rng);
        f.e_perp = band_limited(n, p, period, 5, 1.0, &mut rng);
        f.e_par = band_limited(n, 1, period, 5, 1.0, &mut rng).component(0);
        let th = band_limited(n, pair_count(p).max(1), period, 5, 1.0, &mut rng);
        for (k, row) in f.theta.upper.iter_mut().enumerate() {
            *row = th.component(k);
        }
        let v_tau = band_limited(n, p, period, 5, 1.0, &mut rng);
        let r = structure_residuals(&ops, &f, &v_tau).map_err(err)?;
        let mats = matrix_structure(&ops, &f, &v_tau).map_err(err)?;
        for (j, (t, c)) in mats.iter().enumerate() {
            let (t, c) = (t.matrix(), c.matrix());
            agree = agree.max((t[(0, 1)] - r.r1[j]).abs());
            for a in 0..p {
                agree = agree.max((t[(0, a + 2)] - r.r2.at(j)[a]).abs());
                agree = agree.max((c[(1, a + 2)] - r.r3.at(j)[a]).abs());
                for b in 0..p {
                    agree = agree.max((c[(a + 2, b + 2)] - r.r4.entry(j, a, b)).abs());
                }
            }
        }
        let vl = ops.apply_d(&f.v).map_err(err)?;
        let pf = parallel_frame(&ops, &f.v, &vl).map_err(err)?;
        let m = structure_residuals(&ops, &pf, &f.v).map_err(err)?.max_norms();
        recon = recon.max(m[0]).max(m[1]).max(m[3]);
    }
    Ok((agree, recon))
}

fn short_run(kind: FlowKind) -> FlowConfig {
    match kind {
        FlowKind::Sg | FlowKind::Minus1 => FlowConfig {
            kind,
            k: 0,
            p: 2,
            n: 64,
            domain: 2.0 * PI,
            dt: 1e-3,
            tau_end: 1.0,
            kappa: 1.0,
            initial: InitialData::Sine { amplitude: 0.3, mode: 1 },
            cadence: 100,
        },
        FlowKind::Mkdv => FlowConfig {
            kind,
            k: 1,
            p: 1,
            n: 512,
            domain: 40.0 * PI,
            dt: 5e-4,
            tau_end: 0.1,
            kappa: 0.0,
            initial: InitialData::Soliton { a: 1.0, center: None },
            cadence: 20,
        },
    }
}

fn hierarchy_suite(opts: &CheckOptions) -> Vec<CheckResult> {
    let h = "hierarchy";
    let mut out = vec![
        record(h, "h_equals_d_for_p1", 1e-12, h_reduces_to_d(opts)),
        record(h, "recursion_closed_form", 1e-9, recursion_closed_form(opts)),
        record(h, "flow_scaling_weight", 1e-9, rhs_scaling(opts)),
    ];
    match minus1_checks(opts) {
        Ok((r, l)) => {
            out.push(record(h, "minus1_manufactured_residual", 1e-8, Ok(r)));
            out.push(record(h, "minus1_conservation_law", 1e-9, Ok(l)));
        }
        Err(e) => out.push(record(h, "minus1", 1e-8, Err(e))),
    }
    match structure_checks(opts) {
        Ok((a, r)) => {
            out.push(record(h, "structure_matrix_agreement", 1e-10, Ok(a)));
            out.push(record(h, "parallel_frame_residuals", 1e-10, Ok(r)));
        }
        Err(e) => out.push(record(h, "structure", 1e-10, Err(e))),
    }
    let sg = integrate_flow(&short_run(FlowKind::Sg))
        .map_err(err)
        .and_then(|t| conservation_series(&t).map_err(err))
        .map(|d| d.unit_defect.unwrap_or(f64::NAN));
    out.push(record(h, "sg_unit_norm", 1e-6, sg));
    let mk = integrate_flow(&short_run(FlowKind::Mkdv))
        .map_err(err)
        .and_then(|t| conservation_series(&t).map_err(err))
        .map(|d| d.h0.max(d.h1));
    out.push(record(h, "mkdv_h0_h1_drift", 1e-6, mk));
    out
}
