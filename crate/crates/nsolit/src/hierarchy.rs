//! Hamiltonian operators, recursion operator and the mKdV / sine-Gordon hierarchy on periodic fields.
//!
//! Products follow the conventions A⊗B = A Bᵀ, A∧B = A⊗B − B⊗A and (v⌋M)_j = Σ_i v_i M_ij.

use crate::spectral::{integrate, Anchor, FieldError, SpectralOps, VField};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HierarchyError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("flow index {0} is not available in closed form (expected 0, 1 or 2)")]
    InvalidK(u32),
    #[error("square-root singularity at grid index {index}: |field| = {norm} reaches the bound {bound}")]
    Singular { index: usize, norm: f64, bound: f64 },
    #[error("fixed-point inversion did not converge after {iterations} iterations (update {update:e})")]
    NoConvergence { iterations: usize, update: f64 },
}

/// Constant scalar curvature entering the flows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyConst {
    pub kappa: f64,
}

impl HierarchyConst {
    pub const FLAT: HierarchyConst = HierarchyConst { kappa: 0.0 };

    pub fn new(kappa: f64) -> Result<HierarchyConst, HierarchyError> {
        if !kappa.is_finite() {
            return Err(FieldError::Domain(format!("kappa = {kappa} is not finite")).into());
        }
        Ok(HierarchyConst { kappa })
    }
}

/// Pointwise antisymmetric products a_i b_j − b_i a_j for i < j.
fn wedge_pairs(a: &VField, b: &VField) -> Vec<(usize, usize, Vec<f64>)> {
    let mut out = Vec::new();
    for i in 0..a.p {
        for j in i + 1..a.p {
            let f = (0..a.n)
                .map(|m| {
                    let (x, y) = (a.at(m), b.at(m));
                    x[i] * y[j] - y[i] * x[j]
                })
                .collect();
            out.push((i, j, f));
        }
    }
    out
}

/// v⌋D⁻¹(a∧b).
fn contract_dinv_wedge(ops: &SpectralOps, v: &VField, a: &VField, b: &VField) -> Result<VField, FieldError> {
    let mut comps = vec![vec![0.0; v.n]; v.p];
    for (i, j, f) in wedge_pairs(a, b) {
        let m = ops.dinv(&f).map_err(|e| match e {
            FieldError::NonzeroMean { mean, .. } => FieldError::NonzeroMean { component: i * v.p + j, mean },
            other => other,
        })?;
        for k in 0..v.n {
            let (vi, vj) = (v.at(k)[i], v.at(k)[j]);
            comps[j][k] += vi * m[k];
            comps[i][k] -= vj * m[k];
        }
    }
    Ok(v.with_components(&comps))
}

fn check_pair(ops: &SpectralOps, v: &VField, w: &VField) -> Result<(), FieldError> {
    v.same_shape(w)?;
    if v.n != ops.n {
        return Err(FieldError::Mismatch(format!("field N = {} but operator N = {}", v.n, ops.n)));
    }
    Ok(())
}

/// J w = D w + D⁻¹(v·w) v
pub fn op_j(ops: &SpectralOps, v: &VField, w: &VField) -> Result<VField, HierarchyError> {
    check_pair(ops, v, w)?;
    let a = ops.dinv(&v.dot(w))?;
    Ok(ops.apply_d(w)?.add(&v.mul_scalar_field(&a)))
}

/// H w = D w + v⌋D⁻¹(v∧w)
pub fn op_h(ops: &SpectralOps, v: &VField, w: &VField) -> Result<VField, HierarchyError> {
    check_pair(ops, v, w)?;
    Ok(ops.apply_d(w)?.add(&contract_dinv_wedge(ops, v, v, w)?))
}

/// R w = H(J w).
pub fn recursion_r(ops: &SpectralOps, v: &VField, w: &VField) -> Result<VField, HierarchyError> {
    op_h(ops, v, &op_j(ops, v, w)?)
}

/// R w = D²w + |v|²w + D⁻¹(v·w) v_l − v⌋D⁻¹(v_l∧w)
pub fn recursion_r_expanded(ops: &SpectralOps, v: &VField, w: &VField) -> Result<VField, HierarchyError> {
    check_pair(ops, v, w)?;
    let vl = ops.apply_d(v)?;
    let a = ops.dinv(&v.dot(w))?;
    let out = ops
        .apply_d_n(w, 2)?
        .add(&w.mul_scalar_field(&v.norm2()))
        .add(&vl.mul_scalar_field(&a))
        .sub(&contract_dinv_wedge(ops, v, &vl, w)?);
    Ok(out)
}

/// Largest entry of |H(J w) − expanded R w|.
pub fn recursion_forms_gap(ops: &SpectralOps, v: &VField, w: &VField) -> Result<f64, HierarchyError> {
    Ok(recursion_r(ops, v, w)?.max_abs_diff(&recursion_r_expanded(ops, v, w)?))
}

/// Closed form of R^k(v_l) without curvature correction.
fn closed_form(ops: &SpectralOps, k: u32, v: &VField) -> Result<VField, HierarchyError> {
    let vl = ops.apply_d(v)?;
    match k {
        0 => Ok(vl),
        1 => {
            let nl = vl.mul_scalar_field(&v.norm2()).scale(1.5);
            Ok(ops.apply_d_n(v, 3)?.add(&ops.apply_dealias(&nl)?))
        }
        2 => {
            let s = v.norm2();
            let v2 = ops.apply_d_n(v, 2)?;
            let a = ops.apply_d(&ops.apply_dealias(&v2.mul_scalar_field(&s))?)?;
            let s_ll = ops.d_n(&s, 2);
            let vl2 = vl.norm2();
            let coef: Vec<f64> = (0..v.n).map(|j| s_ll[j] - vl2[j] + 0.75 * s[j] * s[j]).collect();
            let nl = a.add(&vl.mul_scalar_field(&coef)).scale(2.5);
            Ok(ops.apply_d_n(v, 5)?.add(&ops.apply_dealias(&nl)?))
        }
        _ => Err(HierarchyError::InvalidK(k)),
    }
}

/// v_τ for the k-th flow: R^k(v_l) − κ R^{k−1}(v_l) for k ≥ 1, v_l for k = 0.
pub fn flow_rhs(ops: &SpectralOps, k: u32, v: &VField, c: HierarchyConst) -> Result<VField, HierarchyError> {
    let main = closed_form(ops, k, v)?;
    if k == 0 || c.kappa == 0.0 {
        return Ok(main);
    }
    Ok(main.axpy(-c.kappa, &closed_form(ops, k - 1, v)?))
}

/// Fifth-order flow with the coefficients of the historical print:
/// v_5l + 5/2(|v|²v_2l)_l + 5/2((|v|²)_ll + |v_l|² + 3/4|v|⁴)v_l − ½|v_l|² v.
pub fn flow2_printed(ops: &SpectralOps, v: &VField) -> Result<VField, HierarchyError> {
    let vl = ops.apply_d(v)?;
    let s = v.norm2();
    let v2 = ops.apply_d_n(v, 2)?;
    let a = ops.apply_d(&ops.apply_dealias(&v2.mul_scalar_field(&s))?)?;
    let s_ll = ops.d_n(&s, 2);
    let vl2 = vl.norm2();
    let coef: Vec<f64> = (0..v.n).map(|j| s_ll[j] + vl2[j] + 0.75 * s[j] * s[j]).collect();
    let nl = a.add(&vl.mul_scalar_field(&coef)).scale(2.5).axpy(-0.5, &v.mul_scalar_field(&vl2));
    Ok(ops.apply_d_n(v, 5)?.add(&ops.apply_dealias(&nl)?))
}

/// Cross term Q in the second Hamiltonian density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CrossTerm {
    /// Q = (v·v_l)²
    Squared,
    /// Q = v·v_l
    Linear,
}

/// Density of H^(k); k = 2 uses Q = (v·v_l)².
pub fn hamiltonian_density(ops: &SpectralOps, k: u32, v: &VField) -> Result<Vec<f64>, HierarchyError> {
    match k {
        0..=1 => {
            let s = v.norm2();
            if k == 0 {
                return Ok(s.iter().map(|x| 0.5 * x).collect());
            }
            let vl2 = ops.apply_d(v)?.norm2();
            Ok(s.iter().zip(&vl2).map(|(s, d)| -0.5 * d + 0.125 * s * s).collect())
        }
        2 => h2_density(ops, v, CrossTerm::Squared),
        _ => Err(HierarchyError::InvalidK(k)),
    }
}

/// ½|v_2l|² − ¾|v|²|v_l|² − ½Q + 1/16|v|⁶
pub fn h2_density(ops: &SpectralOps, v: &VField, q: CrossTerm) -> Result<Vec<f64>, HierarchyError> {
    let vl = ops.apply_d(v)?;
    let v2 = ops.apply_d_n(v, 2)?;
    let s = v.norm2();
    let vl2 = vl.norm2();
    let v22 = v2.norm2();
    let cross = v.dot(&vl);
    Ok((0..v.n)
        .map(|j| {
            let qv = match q {
                CrossTerm::Squared => cross[j] * cross[j],
                CrossTerm::Linear => cross[j],
            };
            0.5 * v22[j] - 0.75 * s[j] * vl2[j] - 0.5 * qv + s[j].powi(3) / 16.0
        })
        .collect())
}

/// Trapezoid quadrature of the H^(k) density over one period.
pub fn hamiltonian(ops: &SpectralOps, k: u32, v: &VField) -> Result<f64, HierarchyError> {
    Ok(integrate(&hamiltonian_density(ops, k, v)?, v.period))
}

pub fn hamiltonian_h2(ops: &SpectralOps, v: &VField, q: CrossTerm) -> Result<f64, HierarchyError> {
    Ok(integrate(&h2_density(ops, v, q)?, v.period))
}

fn check_below(f: &VField, bound: f64) -> Result<Vec<f64>, HierarchyError> {
    let n2 = f.norm2();
    for (index, x) in n2.iter().enumerate() {
        if x.sqrt() >= bound {
            return Err(HierarchyError::Singular { index, norm: x.sqrt(), bound });
        }
    }
    Ok(n2)
}

/// τ-derivative of w = (1−|e⊥|²)^{-1/2} ∂_l e⊥, which is −e⊥.
pub fn sg_rhs(e_perp: &VField, e_perp_l: &VField) -> Result<VField, HierarchyError> {
    e_perp.same_shape(e_perp_l)?;
    check_below(e_perp, 1.0)?;
    Ok(e_perp.scale(-1.0))
}

/// w = (1−|e⊥|²)^{-1/2} ∂_l e⊥
pub fn sg_w_from_e(ops: &SpectralOps, e: &VField) -> Result<VField, HierarchyError> {
    let n2 = check_below(e, 1.0)?;
    let inv: Vec<f64> = n2.iter().map(|x| 1.0 / (1.0 - x).sqrt()).collect();
    Ok(ops.apply_d(e)?.mul_scalar_field(&inv))
}

/// Mean-zero e⊥ with ∂_l e⊥ = √(1−|e⊥|²) w, by fixed-point iteration from `guess`.
pub fn sg_e_from_w(
    ops: &SpectralOps,
    w: &VField,
    guess: Option<&VField>,
    tol: f64,
    max_iter: usize,
) -> Result<VField, HierarchyError> {
    let ops = ops.clone().with_anchor(Anchor::Mean);
    let mut e = match guess {
        Some(g) => {
            g.same_shape(w)?;
            g.clone()
        }
        None => VField::zeros(w.n, w.p, w.period)?,
    };
    let mut update = f64::INFINITY;
    for _ in 0..max_iter {
        let n2 = check_below(&e, 1.0)?;
        let root: Vec<f64> = n2.iter().map(|x| (1.0 - x).sqrt()).collect();
        let mut rhs = w.mul_scalar_field(&root);
        let means = rhs.mean();
        rhs = rhs.map_points(rhs.p, |_, x| x.iter().zip(&means).map(|(a, m)| a - m).collect());
        let next = ops.apply_dinv(&rhs)?;
        update = next.max_abs_diff(&e);
        e = next;
        if update <= tol {
            check_below(&e, 1.0)?;
            return Ok(e);
        }
    }
    Err(HierarchyError::NoConvergence { iterations: max_iter, update })
}

/// e∥ = c − D⁻¹(v·e⊥) with c > 0 fixed by mean((e∥)² + |e⊥|²) = 1.
pub fn unit_parallel_component(ops: &SpectralOps, v: &VField, e_perp: &VField) -> Result<Vec<f64>, HierarchyError> {
    v.same_shape(e_perp)?;
    let ops = ops.clone().with_anchor(Anchor::Mean);
    let g: Vec<f64> = ops.dinv(&v.dot(e_perp))?.into_iter().map(|x| -x).collect();
    let n = g.len() as f64;
    let rest = 1.0 - g.iter().map(|x| x * x).sum::<f64>() / n - e_perp.norm2().iter().sum::<f64>() / n;
    if rest <= 0.0 {
        return Err(FieldError::Domain(format!("no unit frame: mean norm budget {rest:e} is not positive")).into());
    }
    let c = rest.sqrt();
    Ok(g.into_iter().map(|x| c + x).collect())
}

/// Largest |(e∥)² + |e⊥|² − 1| with e∥ from [`unit_parallel_component`].
pub fn unit_norm_defect(ops: &SpectralOps, v: &VField, e_perp: &VField) -> Result<f64, HierarchyError> {
    let e_par = unit_parallel_component(ops, v, e_perp)?;
    Ok(e_perp.norm2().iter().zip(&e_par).fold(0.0, |m, (s, a)| m.max((a * a + s - 1.0).abs())))
}

/// −√(κ²−|v_τ|²) v, the value D(v_τ) must take along the −1 flow.
pub fn minus1_rhs(v: &VField, v_tau: &VField, c: HierarchyConst) -> Result<VField, HierarchyError> {
    v.same_shape(v_tau)?;
    let kappa = c.kappa.abs();
    let n2 = v_tau.norm2();
    for (index, x) in n2.iter().enumerate() {
        if x.sqrt() > kappa * (1.0 + 1e-14) {
            return Err(HierarchyError::Singular { index, norm: x.sqrt(), bound: kappa });
        }
    }
    let root: Vec<f64> = n2.iter().map(|x| -(kappa * kappa - x).max(0.0).sqrt()).collect();
    Ok(v.mul_scalar_field(&root))
}

/// D(v_τ) + √(κ²−|v_τ|²) v
pub fn minus1_residual(
    ops: &SpectralOps,
    v: &VField,
    v_tau: &VField,
    c: HierarchyConst,
) -> Result<VField, HierarchyError> {
    Ok(ops.apply_d(v_tau)?.sub(&minus1_rhs(v, v_tau, c)?))
}
