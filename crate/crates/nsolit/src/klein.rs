//! so(m+1) realisation of curve-flow data and the Cartan structure equations.
//!
//! A frame with `p` normal directions lives in so(p+2): index 0 is the base slot,
//! index 1 the tangent slot and indices 2..p+2 the normal slots.

use nalgebra::DMatrix;

use crate::spectral::{FieldError, SpectralOps, VField};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KleinError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Skew-symmetric matrix built from its strict upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SoMatrix(DMatrix<f64>);

impl SoMatrix {
    pub fn zeros(size: usize) -> SoMatrix {
        SoMatrix(DMatrix::zeros(size, size))
    }

    pub fn from_upper(size: usize, f: impl Fn(usize, usize) -> f64) -> SoMatrix {
        let mut m = DMatrix::zeros(size, size);
        for i in 0..size {
            for j in i + 1..size {
                let x = f(i, j);
                m[(i, j)] = x;
                m[(j, i)] = -x;
            }
        }
        SoMatrix(m)
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn is_skew(&self) -> bool {
        self.0 == -self.0.transpose()
    }

    /// [A, B] = AB − BA
    pub fn commutator(&self, other: &SoMatrix) -> SoMatrix {
        SoMatrix(&self.0 * &other.0 - &other.0 * &self.0)
    }
}

/// Tangent generator of so(m+1): first row (0 | 1, 0, ..., 0).
pub fn embed_e_x(m: usize) -> Result<SoMatrix, KleinError> {
    if m == 0 {
        return Err(KleinError::Dimension("embed_e_x needs m >= 1".into()));
    }
    Ok(SoMatrix::from_upper(m + 1, |i, j| if i == 0 && j == 1 { 1.0 } else { 0.0 }))
}

/// First row (0 | e∥, e⊥).
pub fn embed_flow(e_par: f64, e_perp: &[f64]) -> SoMatrix {
    SoMatrix::from_upper(e_perp.len() + 2, |i, j| match (i, j) {
        (0, 1) => e_par,
        (0, j) => e_perp[j - 2],
        _ => 0.0,
    })
}

/// Zero first row and column, lower block [[0, v], [−vᵀ, Θ]].
pub fn embed_conn(v: &[f64], theta: &DMatrix<f64>) -> Result<SoMatrix, KleinError> {
    let p = v.len();
    if theta.nrows() != p || theta.ncols() != p {
        return Err(KleinError::Dimension(format!(
            "Theta is {}x{} but v has {p} components",
            theta.nrows(),
            theta.ncols()
        )));
    }
    if (theta + theta.transpose()).amax() > 0.0 {
        return Err(KleinError::Dimension("Theta is not antisymmetric".into()));
    }
    Ok(SoMatrix::from_upper(p + 2, |i, j| match (i, j) {
        (1, j) if j >= 2 => v[j - 2],
        (i, j) if i >= 2 => theta[(i - 2, j - 2)],
        _ => 0.0,
    }))
}

/// Number of strict upper-triangle entries of a p×p matrix.
pub fn pair_count(p: usize) -> usize {
    p * p.saturating_sub(1) / 2
}

fn pair_index(p: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b && b < p);
    a * p - a * (a + 1) / 2 + (b - a - 1)
}

/// Antisymmetric matrix field stored as its strict upper triangle, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewField {
    pub p: usize,
    pub n: usize,
    pub period: f64,
    pub upper: Vec<Vec<f64>>,
}

impl SkewField {
    pub fn zeros(p: usize, n: usize, period: f64) -> SkewField {
        SkewField { p, n, period, upper: vec![vec![0.0; n]; pair_count(p)] }
    }

    /// Θ_ab at grid index j.
    pub fn entry(&self, j: usize, a: usize, b: usize) -> f64 {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => self.upper[pair_index(self.p, a, b)][j],
            std::cmp::Ordering::Greater => -self.upper[pair_index(self.p, b, a)][j],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    pub fn matrix_at(&self, j: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |a, b| self.entry(j, a, b))
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Curve-flow data on a common periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFields {
    pub v: VField,
    pub varpi: VField,
    pub e_par: Vec<f64>,
    pub e_perp: VField,
    pub theta: SkewField,
}

impl FrameFields {
    pub fn zeros(n: usize, p: usize, period: f64) -> Result<FrameFields, KleinError> {
        let z = VField::zeros(n, p, period)?;
        Ok(FrameFields {
            v: z.clone(),
            varpi: z.clone(),
            e_par: vec![0.0; n],
            e_perp: z,
            theta: SkewField::zeros(p, n, period),
        })
    }

    pub fn check(&self) -> Result<(), KleinError> {
        self.v.same_shape(&self.varpi)?;
        self.v.same_shape(&self.e_perp)?;
        if self.e_par.len() != self.v.n {
            return Err(KleinError::Dimension("e_par length differs from N".into()));
        }
        if self.theta.p != self.v.p || self.theta.n != self.v.n || self.theta.upper.len() != pair_count(self.v.p) {
            return Err(KleinError::Dimension("Theta shape differs from v".into()));
        }
        Ok(())
    }
}

/// Residuals of the component structure equations.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureResiduals {
    /// D e∥ + v·e⊥
    pub r1: Vec<f64>,
    /// ϖ − e∥ v + D e⊥
    pub r2: VField,
    /// D ϖ − v_τ + v⌋Θ − e⊥
    pub r3: VField,
    /// D Θ − v⊗ϖ + ϖ⊗v
    pub r4: SkewField,
}

impl StructureResiduals {
    /// Pointwise Euclidean norms of r1..r4.
    pub fn norms(&self) -> [Vec<f64>; 4] {
        let r4 = (0..self.r1.len())
            .map(|j| self.r4.upper.iter().map(|c| c[j] * c[j]).sum::<f64>().sqrt())
            .collect();
        [
            self.r1.iter().map(|x| x.abs()).collect(),
            self.r2.norm2().iter().map(|x| x.sqrt()).collect(),
            self.r3.norm2().iter().map(|x| x.sqrt()).collect(),
            r4,
        ]
    }

    pub fn max_norms(&self) -> [f64; 4] {
        self.norms().map(|v| v.into_iter().fold(0.0, f64::max))
    }
}

/// Component residuals r1..r4; `v_tau` is the flow-time derivative of v.
pub fn structure_residuals(
    ops: &SpectralOps,
    f: &FrameFields,
    v_tau: &VField,
) -> Result<StructureResiduals, KleinError> {
    f.check()?;
    f.v.same_shape(v_tau)?;
    let (n, p) = (f.v.n, f.v.p);
    let d_epar = ops.d(&f.e_par);
    let r1: Vec<f64> = d_epar.iter().zip(f.v.dot(&f.e_perp)).map(|(a, b)| a + b).collect();
    let r2 = f.varpi.sub(&f.v.mul_scalar_field(&f.e_par)).add(&ops.apply_d(&f.e_perp)?);
    let v_theta = f.v.map_points(p, |j, v| (0..p).map(|b| (0..p).map(|a| v[a] * f.theta.entry(j, a, b)).sum()).collect());
    let r3 = ops.apply_d(&f.varpi)?.sub(v_tau).add(&v_theta).sub(&f.e_perp);
    let mut r4 = SkewField::zeros(p, n, f.v.period);
    for a in 0..p {
        for b in a + 1..p {
            let k = pair_index(p, a, b);
            let d = ops.d(&f.theta.upper[k]);
            r4.upper[k] = (0..n)
                .map(|j| {
                    let (v, w) = (f.v.at(j), f.varpi.at(j));
                    d[j] - v[a] * w[b] + w[a] * v[b]
                })
                .collect();
        }
    }
    Ok(StructureResiduals { r1, r2, r3, r4 })
}

/// Torsion and curvature matrices at each grid point:
/// T = D e_Y + [Γ_X, e_Y] − [Γ_Y, e_X],
/// F = D Γ_Y − (Γ_X)_τ + [Γ_X, Γ_Y] + [e_X, e_Y],
/// with Γ_X = embed_conn(v, 0), Γ_Y = embed_conn(ϖ, Θ), e_Y = embed_flow(e∥, e⊥).
pub fn matrix_structure(
    ops: &SpectralOps,
    f: &FrameFields,
    v_tau: &VField,
) -> Result<Vec<(SoMatrix, SoMatrix)>, KleinError> {
    f.check()?;
    f.v.same_shape(v_tau)?;
    let (n, p) = (f.v.n, f.v.p);
    let zero = DMatrix::zeros(p, p);
    let e_x = embed_e_x(p + 1)?;
    let e_y: Vec<SoMatrix> = (0..n).map(|j| embed_flow(f.e_par[j], f.e_perp.at(j))).collect();
    let g_x: Vec<SoMatrix> = (0..n).map(|j| embed_conn(f.v.at(j), &zero)).collect::<Result<_, _>>()?;
    let g_y: Vec<SoMatrix> =
        (0..n).map(|j| embed_conn(f.varpi.at(j), &f.theta.matrix_at(j))).collect::<Result<_, _>>()?;
    let g_x_tau: Vec<SoMatrix> = (0..n).map(|j| embed_conn(v_tau.at(j), &zero)).collect::<Result<_, _>>()?;
    let size = p + 2;
    let entrywise_d = |mats: &[SoMatrix]| -> Vec<DMatrix<f64>> {
        let mut out = vec![DMatrix::zeros(size, size); n];
        for r in 0..size {
            for c in 0..size {
                let col: Vec<f64> = mats.iter().map(|m| m.0[(r, c)]).collect();
                if col.iter().all(|x| *x == 0.0) {
                    continue;
                }
                for (j, x) in ops.d(&col).into_iter().enumerate() {
                    out[j][(r, c)] = x;
                }
            }
        }
        out
    };
    let d_ey = entrywise_d(&e_y);
    let d_gy = entrywise_d(&g_y);
    Ok((0..n)
        .map(|j| {
            let t = &d_ey[j] + g_x[j].commutator(&e_y[j]).0 - g_y[j].commutator(&e_x).0;
            let r = &d_gy[j] - &g_x_tau[j].0 + g_x[j].commutator(&g_y[j]).0 + e_x.commutator(&e_y[j]).0;
            (SoMatrix(t), SoMatrix(r))
        })
        .collect())
}

/// Dependent fields of a parallel frame: (e∥, Θ, ϖ) with
/// e∥ = −D⁻¹(v·e⊥), ϖ = −D e⊥ + e∥ v, Θ = D⁻¹(v⊗ϖ − ϖ⊗v).
pub fn reconstruct_parallel(
    ops: &SpectralOps,
    v: &VField,
    e_perp: &VField,
) -> Result<(Vec<f64>, SkewField, VField), KleinError> {
    v.same_shape(e_perp)?;
    let p = v.p;
    let e_par: Vec<f64> = ops.dinv(&v.dot(e_perp))?.into_iter().map(|x| -x).collect();
    let varpi = v.mul_scalar_field(&e_par).sub(&ops.apply_d(e_perp)?);
    let mut theta = SkewField::zeros(p, v.n, v.period);
    for a in 0..p {
        for b in a + 1..p {
            let integrand: Vec<f64> = (0..v.n)
                .map(|j| {
                    let (x, w) = (v.at(j), varpi.at(j));
                    x[a] * w[b] - w[a] * x[b]
                })
                .collect();
            theta.upper[pair_index(p, a, b)] = ops.dinv(&integrand)?;
        }
    }
    Ok((e_par, theta, varpi))
}

/// Assembles [`FrameFields`] from v and e⊥ via [`reconstruct_parallel`].
pub fn parallel_frame(ops: &SpectralOps, v: &VField, e_perp: &VField) -> Result<FrameFields, KleinError> {
    let (e_par, theta, varpi) = reconstruct_parallel(ops, v, e_perp)?;
    Ok(FrameFields { v: v.clone(), varpi, e_par, e_perp: e_perp.clone(), theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn tangent_generator() {
        let m = embed_e_x(1).unwrap();
        assert_eq!(m.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let m3 = embed_e_x(2).unwrap();
        assert_eq!(m3.matrix().row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
        assert_eq!(m3.matrix().trace(), 0.0);
        assert!(embed_e_x(0).is_err());
    }

    #[test]
    fn tangential_flow_is_tangent_generator() {
        assert_eq!(embed_flow(1.0, &[0.0, 0.0]), embed_e_x(3).unwrap());
        assert_eq!(embed_flow(0.0, &[0.0]).matrix().amax(), 0.0);
        let z = embed_conn(&[0.0, 0.0], &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(z.matrix().amax(), 0.0);
    }

    #[test]
    fn commutator_with_tangent_generator() {
        let gamma = embed_conn(&[1.0, 0.0], &DMatrix::zeros(2, 2)).unwrap();
        let c = gamma.commutator(&embed_e_x(3).unwrap());
        assert_eq!(c, SoMatrix(-embed_flow(0.0, &[1.0, 0.0]).0));
    }

    #[test]
    fn embeddings_are_skew() {
        let th = DMatrix::from_row_slice(3, 3, &[0.0, 0.3, -0.1, -0.3, 0.0, 0.7, 0.1, -0.7, 0.0]);
        assert!(embed_conn(&[0.2, -1.0, 0.5], &th).unwrap().is_skew());
        assert!(embed_flow(0.4, &[1.0, 2.0, 3.0]).is_skew());
        assert!(embed_conn(&[0.2, 1.0], &th).is_err());
    }

    #[test]
    fn zero_fields_have_zero_residuals() {
        let ops = SpectralOps::new(32, 2.0 * PI).unwrap();
        let f = FrameFields::zeros(32, 2, 2.0 * PI).unwrap();
        let r = structure_residuals(&ops, &f, &f.v).unwrap();
        assert_eq!(r.max_norms(), [0.0; 4]);
    }

    #[test]
    fn reconstruct_with_zero_v() {
        let ops = SpectralOps::new(64, 2.0 * PI).unwrap();
        let v = VField::zeros(64, 2, 2.0 * PI).unwrap();
        let e = VField::from_fn(64, 2, 2.0 * PI, |l| vec![l.sin(), (2.0 * l).cos()]).unwrap();
        let (e_par, theta, varpi) = reconstruct_parallel(&ops, &v, &e).unwrap();
        assert!(e_par.iter().all(|x| *x == 0.0));
        assert_eq!(theta.max_abs(), 0.0);
        assert!(varpi.max_abs_diff(&ops.apply_d(&e).unwrap().scale(-1.0)) < 1e-15);
    }

    #[test]
    fn scalar_case_has_empty_theta() {
        let ops = SpectralOps::new(64, 2.0 * PI).unwrap();
        let v = VField::from_fn(64, 1, 2.0 * PI, |l| vec![l.sin()]).unwrap();
        let vl = ops.apply_d(&v).unwrap();
        let (_, theta, _) = reconstruct_parallel(&ops, &v, &vl).unwrap();
        assert!(theta.upper.is_empty());
        assert_eq!(theta.matrix_at(3), DMatrix::zeros(1, 1));
    }
}
