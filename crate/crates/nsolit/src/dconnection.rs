//! d-metrics, the canonical d-connection, d-torsion, d-curvature, Ricci
//! d-tensor and metric compatibility.

use nalgebra::DMatrix;

use crate::expr::Expr;
use crate::geometry::{invert, GeometryError, NConnection, VerticalMetric};
use crate::metric::MetricSpec;
use crate::tensor::Tensor;

/// g = g_ij e^i⊗e^j + h_ab e^a⊗e^b with elongated e^a = dy^a + N^a_i dx^i.
#[derive(Debug, Clone)]
pub struct DMetric {
    pub g: Tensor,
    pub h: Tensor,
    pub g_inv: Tensor,
    pub h_inv: Tensor,
    pub nc: NConnection,
}

impl DMetric {
    pub fn new(g: Tensor, h: Tensor, nc: NConnection) -> Result<DMetric, GeometryError> {
        let (n, m) = (nc.n(), nc.m());
        if g.shape != [n, n] || h.shape != [m, m] {
            return Err(GeometryError::Dimension(format!(
                "blocks {:?} and {:?} do not match N of shape [{m}, {n}]",
                g.shape, h.shape
            )));
        }
        let g_inv = Tensor::from_matrix(&invert(&g.to_matrix(), "h-block")?);
        let h_inv = Tensor::from_matrix(&invert(&h.to_matrix(), "v-block")?);
        Ok(DMetric { g, h, g_inv, h_inv, nc })
    }

    pub fn n(&self) -> usize {
        self.nc.n()
    }

    pub fn m(&self) -> usize {
        self.nc.m()
    }

    pub fn vars(&self) -> Vec<String> {
        self.nc.vars()
    }

    /// Coordinate-basis matrix [[g + Nᵀ h N, Nᵀ h], [h N, h]].
    pub fn coordinate_matrix(&self) -> Tensor {
        let (n, m) = (self.n(), self.m());
        let nn = |a: usize, i: usize| self.nc.get(a, i).clone();
        let hn = |b: usize, i: usize| Expr::add((0..m).map(|e| self.h.at(&[b, e]).times(&nn(e, i))).collect());
        Tensor::from_fn(&[n + m, n + m], |ix| {
            let (r, c) = (ix[0], ix[1]);
            let e = match (r < n, c < n) {
                (true, true) => {
                    let mut t = vec![self.g.at(&[r, c]).clone()];
                    for a in 0..m {
                        t.push(nn(a, r).times(&hn(a, c)));
                    }
                    Expr::add(t)
                }
                (true, false) => hn(c - n, r),
                (false, true) => hn(r - n, c),
                (false, false) => self.h.at(&[r - n, c - n]).clone(),
            };
            e.simplify_basic()
        })
    }
}

type Block = Vec<Vec<f64>>;

/// Numeric blocks (g, h, N[a][i]) recovered from a coordinate-basis metric matrix.
pub fn split_coordinate_matrix(
    mat: &[Vec<f64>],
    n: usize,
    m: usize,
) -> Result<(Block, Block, Block), GeometryError> {
    if mat.len() != n + m || mat.iter().any(|r| r.len() != n + m) {
        return Err(GeometryError::Dimension(format!("expected a {0}x{0} matrix", n + m)));
    }
    let h = DMatrix::from_fn(m, m, |a, b| mat[n + a][n + b]);
    let hn = DMatrix::from_fn(m, n, |a, i| mat[n + a][i]);
    let lu = h.clone().lu();
    let nmat = lu.solve(&hn).ok_or_else(|| GeometryError::Singular("v-block".into()))?;
    let nhn = nmat.transpose() * &h * &nmat;
    let g = (0..n).map(|i| (0..n).map(|j| mat[i][j] - nhn[(i, j)]).collect()).collect();
    let hv = (0..m).map(|a| (0..m).map(|b| h[(a, b)]).collect()).collect();
    let nv = (0..m).map(|a| (0..n).map(|i| nmat[(a, i)]).collect()).collect();
    Ok((g, hv, nv))
}

/// Sasaki-type lift: g̃ on both blocks, frames elongated by Ñ.
pub fn sasaki_dmetric(m: &MetricSpec, v: &VerticalMetric, nc: &NConnection) -> Result<DMetric, GeometryError> {
    if nc.n() != m.n || nc.m() != m.n {
        return Err(GeometryError::Dimension(format!(
            "Sasaki lift needs n = m = {}, N has shape [{}, {}]",
            m.n,
            nc.m(),
            nc.n()
        )));
    }
    let gt = Tensor::from_matrix(&v.gt);
    DMetric::new(gt.clone(), gt, nc.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Tangent bundle, h- and v-indices identified.
    Tm,
    /// General vector bundle.
    Vb,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Tm => "tm",
            Variant::Vb => "vb",
        }
    }
}

/// Coefficients L^i_jk, L^a_bk, C^i_jc, C^a_bc, each stored with the upper index first.
#[derive(Debug, Clone)]
pub struct DConnection {
    pub variant: Variant,
    pub l_h: Tensor,
    pub l_v: Tensor,
    pub c_h: Tensor,
    pub c_v: Tensor,
    /// C^a_bc with the second term read as e_c h_cd.
    pub c_v_printed: Tensor,
}

struct Frames<'a> {
    nc: &'a NConnection,
}

impl Frames<'_> {
    fn h(&self, k: usize, e: &Expr) -> Expr {
        self.nc.frame(k, e)
    }

    fn v(&self, a: usize, e: &Expr) -> Expr {
        self.nc.frame(self.nc.n() + a, e)
    }
}

fn christoffel_like(
    inv: &Tensor,
    metric: &Tensor,
    d: impl Fn(usize, &Expr) -> Expr + Sync,
    printed_typo: bool,
) -> Tensor {
    let r = metric.shape[0];
    // de[c][b][e] = e_c metric_be
    let de: Vec<Vec<Vec<Expr>>> =
        (0..r).map(|c| (0..r).map(|b| (0..r).map(|e| d(c, metric.at(&[b, e]))).collect()).collect()).collect();
    Tensor::par_from_fn(&[r, r, r], |ix| {
        let (a, b, c) = (ix[0], ix[1], ix[2]);
        let terms = (0..r)
            .map(|e| {
                let second = if printed_typo { de[c][c][e].clone() } else { de[b][c][e].clone() };
                inv.at(&[a, e]).times(&Expr::add(vec![de[c][b][e].clone(), second, de[e][b][c].neg()]))
            })
            .collect();
        Expr::add(terms).scale(0.5).simplify_basic()
    })
}

pub fn canonical_dconnection(dm: &DMetric, variant: Variant) -> Result<DConnection, GeometryError> {
    let (n, m) = (dm.n(), dm.m());
    let fr = Frames { nc: &dm.nc };
    let l_h = christoffel_like(&dm.g_inv, &dm.g, |k, e| fr.h(k, e), false);
    let c_v = christoffel_like(&dm.h_inv, &dm.h, |c, e| fr.v(c, e), false);
    let c_v_printed = christoffel_like(&dm.h_inv, &dm.h, |c, e| fr.v(c, e), true);
    match variant {
        Variant::Tm => {
            if n != m {
                return Err(GeometryError::Dimension(format!("tm variant needs n = m, got n = {n}, m = {m}")));
            }
            Ok(DConnection { variant, l_v: l_h.clone(), l_h, c_h: c_v.clone(), c_v, c_v_printed })
        }
        Variant::Vb => {
            // e_b N^d_k
            let dn: Vec<Vec<Vec<Expr>>> = (0..m)
                .map(|b| (0..m).map(|d| (0..n).map(|k| fr.v(b, dm.nc.get(d, k))).collect()).collect())
                .collect();
            let l_v = Tensor::par_from_fn(&[m, m, n], |ix| {
                let (a, b, k) = (ix[0], ix[1], ix[2]);
                let mut inner = Vec::new();
                for c in 0..m {
                    let mut t = vec![fr.h(k, dm.h.at(&[b, c]))];
                    for d in 0..m {
                        t.push(dm.h.at(&[d, c]).times(&dn[b][d][k]).neg());
                        t.push(dm.h.at(&[d, b]).times(&dn[c][d][k]).neg());
                    }
                    inner.push(dm.h_inv.at(&[a, c]).times(&Expr::add(t)));
                }
                Expr::add(vec![dn[b][a][k].clone(), Expr::add(inner).scale(0.5)]).simplify_basic()
            });
            let c_h = Tensor::par_from_fn(&[n, n, m], |ix| {
                let (i, j, c) = (ix[0], ix[1], ix[2]);
                Expr::add((0..n).map(|k| dm.g_inv.at(&[i, k]).times(&fr.v(c, dm.g.at(&[j, k])))).collect())
                    .scale(0.5)
                    .simplify_basic()
            });
            Ok(DConnection { variant, l_h, l_v, c_h, c_v, c_v_printed })
        }
    }
}

/// d-torsion families, upper index first.
#[derive(Debug, Clone)]
pub struct Torsion {
    /// T^i_jk
    pub hh: Tensor,
    /// T^i_ja
    pub hv: Tensor,
    /// T^a_ji
    pub vhh: Tensor,
    /// T^a_bi
    pub vvh: Tensor,
    /// T^a_bc
    pub vv: Tensor,
}

pub fn dtorsion(dc: &DConnection, nc: &NConnection) -> Torsion {
    let (n, m) = (nc.n(), nc.m());
    let omega = crate::geometry::ncurvature(nc);
    let hh = Tensor::from_fn(&[n, n, n], |ix| {
        dc.l_h.at(&[ix[0], ix[1], ix[2]]).sub(dc.l_h.at(&[ix[0], ix[2], ix[1]])).simplify_basic()
    });
    let hv = dc.c_h.clone();
    let vhh = Tensor::from_fn(&[m, n, n], |ix| omega.at(&[ix[0], ix[1], ix[2]]).clone());
    let vvh = Tensor::from_fn(&[m, m, n], |ix| {
        let (a, b, i) = (ix[0], ix[1], ix[2]);
        nc.get(a, i).diff(&nc.y[b]).sub(dc.l_v.at(&[a, b, i])).simplify_basic()
    });
    let vv = Tensor::from_fn(&[m, m, m], |ix| {
        dc.c_v.at(&[ix[0], ix[1], ix[2]]).sub(dc.c_v.at(&[ix[0], ix[2], ix[1]])).simplify_basic()
    });
    Torsion { hh, hv, vhh, vvh, vv }
}

/// Curvature families, upper index first. The tm variant fills only `r`, `p`, `s`.
#[derive(Debug, Clone)]
pub struct CurvatureTables {
    pub variant: Variant,
    /// R^i_hjk
    pub r: Tensor,
    /// P^i_jka
    pub p: Tensor,
    /// S^a_bcd
    pub s: Tensor,
    /// R^a_bjk
    pub r_v: Option<Tensor>,
    /// P^c_bka
    pub p_v: Option<Tensor>,
    /// S^i_jbc
    pub s_h: Option<Tensor>,
}

pub fn dcurvature(dc: &DConnection, nc: &NConnection) -> CurvatureTables {
    let (n, m) = (nc.n(), nc.m());
    let fr = Frames { nc };
    let omega = crate::geometry::ncurvature(nc);
    let tors = dtorsion(dc, nc);
    // T^b_ka = −T^b_ak
    let t_vhv = |b: usize, k: usize, a: usize| tors.vvh.at(&[b, a, k]).neg();

    let riem = |l: &Tensor, c: &Tensor, r: usize| {
        Tensor::par_from_fn(&[r, r, n, n], |ix| {
            let (i, h, j, k) = (ix[0], ix[1], ix[2], ix[3]);
            let mut t = vec![fr.h(k, l.at(&[i, h, j])), fr.h(j, l.at(&[i, h, k])).neg()];
            for q in 0..r {
                t.push(l.at(&[q, h, j]).times(l.at(&[i, q, k])));
                t.push(l.at(&[q, h, k]).times(l.at(&[i, q, j])).neg());
            }
            for a in 0..m {
                t.push(c.at(&[i, h, a]).times(omega.at(&[a, k, j])).neg());
            }
            Expr::add(t).simplify_basic()
        })
    };
    // P for a tensor with upper/first-lower index of range r: lt = L^i_jk, ct = C^i_ja.
    let pfam = |lt: &Tensor, ct: &Tensor, r: usize| {
        Tensor::par_from_fn(&[r, r, n, m], |ix| {
            let (i, j, k, a) = (ix[0], ix[1], ix[2], ix[3]);
            let mut t = vec![fr.v(a, lt.at(&[i, j, k])), fr.h(k, ct.at(&[i, j, a])).neg()];
            for q in 0..r {
                t.push(lt.at(&[i, q, k]).times(ct.at(&[q, j, a])).neg());
                t.push(lt.at(&[q, j, k]).times(ct.at(&[i, q, a])));
            }
            for b in 0..m {
                t.push(dc.l_v.at(&[b, a, k]).times(ct.at(&[i, j, b])));
                t.push(ct.at(&[i, j, b]).times(&t_vhv(b, k, a)));
            }
            Expr::add(t).simplify_basic()
        })
    };
    let sfam = |ct: &Tensor, r: usize| {
        Tensor::par_from_fn(&[r, r, m, m], |ix| {
            let (a, b, c, d) = (ix[0], ix[1], ix[2], ix[3]);
            let mut t = vec![fr.v(d, ct.at(&[a, b, c])), fr.v(c, ct.at(&[a, b, d])).neg()];
            for e in 0..r {
                t.push(ct.at(&[e, b, c]).times(ct.at(&[a, e, d])));
                t.push(ct.at(&[e, b, d]).times(ct.at(&[a, e, c])).neg());
            }
            Expr::add(t).simplify_basic()
        })
    };

    let r = riem(&dc.l_h, &dc.c_h, n);
    let p = pfam(&dc.l_h, &dc.c_h, n);
    let s = sfam(&dc.c_v, m);
    match dc.variant {
        Variant::Tm => CurvatureTables { variant: dc.variant, r, p, s, r_v: None, p_v: None, s_h: None },
        Variant::Vb => CurvatureTables {
            variant: dc.variant,
            r,
            p,
            s,
            r_v: Some(riem(&dc.l_v, &dc.c_v, m)),
            p_v: Some(pfam(&dc.l_v, &dc.c_v, m)),
            s_h: Some(sfam(&dc.c_h, n)),
        },
    }
}

#[derive(Debug, Clone)]
pub struct Ricci {
    /// R_ij = R^k_ijk
    pub r_hh: Tensor,
    /// R_ia = −P^k_ika
    pub r_hv: Tensor,
    /// R_ai = P^b_aib
    pub r_vh: Tensor,
    /// S_ab = S^c_abc
    pub s_vv: Tensor,
    /// g^ij R_ij
    pub r_arrow: Expr,
    /// h^ab S_ab
    pub s_arrow: Expr,
}

impl Ricci {
    /// g^ij R_ij + h^ab S_ab
    pub fn total(&self) -> Expr {
        self.r_arrow.plus(&self.s_arrow).simplify_basic()
    }
}

pub fn ricci_and_scalars(ct: &CurvatureTables, dm: &DMetric) -> Ricci {
    let (n, m) = (dm.n(), dm.m());
    let r_hh =
        Tensor::from_fn(&[n, n], |ix| Expr::add((0..n).map(|k| ct.r.at(&[k, ix[0], ix[1], k]).clone()).collect()));
    let r_hv = Tensor::from_fn(&[n, m], |ix| {
        Expr::add((0..n).map(|k| ct.p.at(&[k, ix[0], k, ix[1]]).clone()).collect()).neg()
    });
    let pv = ct.p_v.as_ref().unwrap_or(&ct.p);
    let r_vh =
        Tensor::from_fn(&[m, n], |ix| Expr::add((0..m).map(|b| pv.at(&[b, ix[0], ix[1], b]).clone()).collect()));
    let s_vv =
        Tensor::from_fn(&[m, m], |ix| Expr::add((0..m).map(|c| ct.s.at(&[c, ix[0], ix[1], c]).clone()).collect()));
    let contract = |inv: &Tensor, t: &Tensor, r: usize| {
        let mut terms = Vec::new();
        for i in 0..r {
            for j in 0..r {
                terms.push(inv.at(&[i, j]).times(t.at(&[i, j])));
            }
        }
        Expr::add(terms).simplify_basic()
    };
    let r_hh = r_hh.simplify();
    let s_vv = s_vv.simplify();
    Ricci {
        r_arrow: contract(&dm.g_inv, &r_hh, n),
        s_arrow: contract(&dm.h_inv, &s_vv, m),
        r_hh,
        r_hv: r_hv.simplify(),
        r_vh: r_vh.simplify(),
        s_vv,
    }
}

/// Nonmetricity D_k g_ij, D_k h_ab, D_c g_ij, D_c h_ab (derivative index first).
#[derive(Debug, Clone)]
pub struct CompatResidual {
    pub dh_g: Tensor,
    pub dh_h: Tensor,
    pub dv_g: Tensor,
    pub dv_h: Tensor,
}

impl CompatResidual {
    pub fn tables(&self) -> [(&'static str, &Tensor); 4] {
        [("Dh_g", &self.dh_g), ("Dh_h", &self.dh_h), ("Dv_g", &self.dv_g), ("Dv_h", &self.dv_h)]
    }

    /// Largest absolute residual over the points.
    pub fn max_abs(&self, vars: &[String], points: &[Vec<f64>]) -> Result<f64, crate::expr::EvalError> {
        let mut worst = 0.0_f64;
        for (_, t) in self.tables() {
            worst = worst.max(t.max_abs(vars, points)?);
        }
        Ok(worst)
    }
}

pub fn compat_residual(dc: &DConnection, dm: &DMetric) -> CompatResidual {
    let (n, m) = (dm.n(), dm.m());
    let nc = &dm.nc;
    // D_α q_ij = e_α q_ij − Γ^r_iα q_rj − Γ^r_jα q_ir
    let resid = |q: &Tensor, gam: &Tensor, dirs: usize, offset: usize| {
        let r = q.shape[0];
        Tensor::par_from_fn(&[dirs, r, r], |ix| {
            let (k, i, j) = (ix[0], ix[1], ix[2]);
            let mut t = vec![nc.frame(offset + k, q.at(&[i, j]))];
            for s in 0..r {
                t.push(gam.at(&[s, i, k]).times(q.at(&[s, j])).neg());
                t.push(gam.at(&[s, j, k]).times(q.at(&[i, s])).neg());
            }
            Expr::add(t).simplify_basic()
        })
    };
    CompatResidual {
        dh_g: resid(&dm.g, &dc.l_h, n, 0),
        dh_h: resid(&dm.h, &dc.l_v, n, 0),
        dv_g: resid(&dm.g, &dc.c_h, m, n),
        dv_h: resid(&dm.h, &dc.c_v, m, n),
    }
}
