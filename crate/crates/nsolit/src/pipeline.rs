//! Full geometry chain for a base metric: γ → G̃ → Ñ → Ω, W → d-metric → canonical d-connection →
//! torsion, curvature, Ricci and scalar curvatures.

use crate::dconnection::{
    canonical_dconnection, compat_residual, dcurvature, dtorsion, ricci_and_scalars, sasaki_dmetric, CompatResidual,
    CurvatureTables, DConnection, DMetric, Ricci, Torsion, Variant,
};
use crate::geometry::{
    anholonomy, christoffel, nconnection, ncurvature, semispray, vertical_metric, Anholonomy, Christoffel,
    GeometryError, NConnection, Semispray, VerticalMetric,
};
use crate::metric::MetricSpec;
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct GeometryTables {
    pub metric: MetricSpec,
    pub christoffel: Christoffel,
    pub vertical: VerticalMetric,
    pub semispray: Semispray,
    pub nc: NConnection,
    pub omega: Tensor,
    pub anholonomy: Anholonomy,
    pub dmetric: DMetric,
    pub dconn: DConnection,
    pub torsion: Torsion,
    pub curvature: CurvatureTables,
    pub ricci: Ricci,
}

/// Runs the chain with the tm identification.
pub fn compute_tables(m: &MetricSpec) -> Result<GeometryTables, GeometryError> {
    let ch = christoffel(m)?;
    let vert = vertical_metric(m, &m.vertical)?;
    let spray = semispray(m, &vert)?;
    let nc = nconnection(&spray);
    let omega = ncurvature(&nc);
    let anh = anholonomy(&nc);
    let dm = sasaki_dmetric(m, &vert, &nc)?;
    let dc = canonical_dconnection(&dm, Variant::Tm)?;
    Ok(assemble(m.clone(), ch, vert, spray, nc, omega, anh, dm, dc))
}

/// Recomputes torsion, curvature and Ricci after the connection coefficients change.
pub fn with_connection(t: &GeometryTables, dc: DConnection) -> GeometryTables {
    assemble(
        t.metric.clone(),
        t.christoffel.clone(),
        t.vertical.clone(),
        t.semispray.clone(),
        t.nc.clone(),
        t.omega.clone(),
        t.anholonomy.clone(),
        t.dmetric.clone(),
        dc,
    )
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    metric: MetricSpec,
    christoffel: Christoffel,
    vertical: VerticalMetric,
    semispray: Semispray,
    nc: NConnection,
    omega: Tensor,
    anholonomy: Anholonomy,
    dmetric: DMetric,
    dconn: DConnection,
) -> GeometryTables {
    let torsion = dtorsion(&dconn, &nc);
    let curvature = dcurvature(&dconn, &nc);
    let ricci = ricci_and_scalars(&curvature, &dmetric);
    GeometryTables { metric, christoffel, vertical, semispray, nc, omega, anholonomy, dmetric, dconn, torsion, curvature, ricci }
}

impl GeometryTables {
    /// x1..xn, y1..yn
    pub fn vars(&self) -> Vec<String> {
        self.nc.vars()
    }

    pub fn compat(&self) -> CompatResidual {
        compat_residual(&self.dconn, &self.dmetric)
    }

    /// Every table with a stable dotted name.
    pub fn named(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("gamma", &self.christoffel.gamma),
            ("G", &self.semispray.g),
            ("N", &self.nc.coef),
            ("Omega", &self.omega),
            ("W", &self.anholonomy.w),
            ("L.h", &self.dconn.l_h),
            ("L.v", &self.dconn.l_v),
            ("C.h", &self.dconn.c_h),
            ("C.v", &self.dconn.c_v),
            ("T.hh", &self.torsion.hh),
            ("T.hv", &self.torsion.hv),
            ("T.vhh", &self.torsion.vhh),
            ("T.vvh", &self.torsion.vvh),
            ("T.vv", &self.torsion.vv),
            ("R", &self.curvature.r),
            ("P", &self.curvature.p),
            ("S", &self.curvature.s),
            ("ricci.hh", &self.ricci.r_hh),
            ("ricci.hv", &self.ricci.r_hv),
            ("ricci.vh", &self.ricci.r_vh),
            ("ricci.vv", &self.ricci.s_vv),
        ]
    }
}
