//! Finite-difference evaluation of the geometry tables from their defining formulas.
//! Every derivative is a central difference with step 1e-5; tables are chained numerically.

use nalgebra::DMatrix;
use nsolit::check::random_nconnection;
use nsolit::dconnection::{canonical_dconnection, dcurvature, dtorsion, ricci_and_scalars, DMetric, Variant};
use nsolit::expr::parse_expr;
use nsolit::geometry::{anholonomy, ncurvature};
use nsolit::metric::MetricSpec;
use nsolit::pipeline::compute_tables;
use nsolit::tensor::Tensor;

pub const STEP: f64 = 1e-5;

pub type Fun<'a> = &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync);

pub fn partial(f: &dyn Fn(&[f64]) -> Vec<f64>, z: &[f64], k: usize) -> Vec<f64> {
    let (mut zp, mut zm) = (z.to_vec(), z.to_vec());
    zp[k] += STEP;
    zm[k] -= STEP;
    f(&zp).iter().zip(f(&zm)).map(|(a, b)| (a - b) / (2.0 * STEP)).collect()
}

fn inverse(flat: &[f64], r: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(r, r, flat).try_inverse().expect("regular block")
}

/// Christoffel symbols and the induced semispray / N-connection of a base metric g(x).
pub struct BaseOracle<'a> {
    pub n: usize,
    pub g: Fun<'a>,
}

impl BaseOracle<'_> {
    /// γ^i_lm = ½ g^{ih}(∂_m g_lh + ∂_l g_mh − ∂_h g_lm), flat [i][l][m].
    pub fn gamma(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let gi = inverse(&(self.g)(x), n);
        let dg: Vec<Vec<f64>> = (0..n).map(|k| partial(self.g, x, k)).collect();
        let d = |h: usize, a: usize, b: usize| dg[h][a * n + b];
        let mut out = vec![0.0; n * n * n];
        for i in 0..n {
            for l in 0..n {
                for m in 0..n {
                    out[(i * n + l) * n + m] =
                        0.5 * (0..n).map(|h| gi[(i, h)] * (d(m, l, h) + d(l, m, h) - d(h, l, m))).sum::<f64>();
                }
            }
        }
        out
    }

    /// G^i = ¼ g̃^{ij} g_jk γ^k_lm y^l y^m with g̃ = g, at z = (x, y).
    pub fn semispray(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let (x, y) = z.split_at(n);
        let gam = self.gamma(x);
        (0..n)
            .map(|i| 0.25 * (0..n).flat_map(|l| (0..n).map(move |m| (l, m))).map(|(l, m)| gam[(i * n + l) * n + m] * y[l] * y[m]).sum::<f64>())
            .collect()
    }

    /// N^a_i = ∂G^a/∂y^i, flat [a][i].
    pub fn nconn(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let cols: Vec<Vec<f64>> = (0..n).map(|i| partial(&|w| self.semispray(w), z, n + i)).collect();
        let mut out = vec![0.0; n * n];
        for a in 0..n {
            for i in 0..n {
                out[a * n + i] = cols[i][a];
            }
        }
        out
    }
}

/// d-metric blocks g(z), h(z) and N(z) on a bundle with z = (x, y), tm identification (n = m).
pub struct BundleOracle<'a> {
    pub n: usize,
    pub g: Fun<'a>,
    pub h: Fun<'a>,
    pub nn: Fun<'a>,
}

pub struct TorsionFd {
    pub hh: Vec<f64>,
    pub hv: Vec<f64>,
    pub vhh: Vec<f64>,
    pub vvh: Vec<f64>,
    pub vv: Vec<f64>,
}

pub struct CurvatureFd {
    pub r: Vec<f64>,
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub ricci_hh: Vec<f64>,
    pub ricci_hv: Vec<f64>,
    pub ricci_vh: Vec<f64>,
    pub ricci_vv: Vec<f64>,
    pub r_scalar: f64,
    pub s_scalar: f64,
}

impl BundleOracle<'_> {
    /// e_α f: ∂_i f − N^a_i ∂_a f for α = i < n, ∂_a f for α = n + a.
    pub fn frame(&self, f: &dyn Fn(&[f64]) -> Vec<f64>, z: &[f64], alpha: usize) -> Vec<f64> {
        let n = self.n;
        if alpha >= n {
            return partial(f, z, alpha);
        }
        let nn = (self.nn)(z);
        let mut out = partial(f, z, alpha);
        for a in 0..n {
            let dy = partial(f, z, n + a);
            for (o, d) in out.iter_mut().zip(dy) {
                *o -= nn[a * n + alpha] * d;
            }
        }
        out
    }

    /// ½ q^{ae}(E_c q_be + E_b q_ce − E_e q_bc) with E = frames from `offset`.
    fn christoffel_like(&self, q: Fun, z: &[f64], offset: usize) -> Vec<f64> {
        let n = self.n;
        let qi = inverse(&q(z), n);
        let dq: Vec<Vec<f64>> = (0..n).map(|c| self.frame(q, z, offset + c)).collect();
        let d = |c: usize, a: usize, b: usize| dq[c][a * n + b];
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    out[(a * n + b) * n + c] =
                        0.5 * (0..n).map(|e| qi[(a, e)] * (d(c, b, e) + d(b, c, e) - d(e, b, c))).sum::<f64>();
                }
            }
        }
        out
    }

    /// L^i_jk (= L^a_bk), flat [i][j][k].
    pub fn l(&self, z: &[f64]) -> Vec<f64> {
        self.christoffel_like(self.g, z, 0)
    }

    /// C^a_bc (= C^i_jc), flat [a][b][c].
    pub fn c(&self, z: &[f64]) -> Vec<f64> {
        self.christoffel_like(self.h, z, self.n)
    }

    /// Ω^a_ij = e_j N^a_i − e_i N^a_j, flat [a][i][j].
    pub fn omega(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let en: Vec<Vec<f64>> = (0..n).map(|j| self.frame(self.nn, z, j)).collect();
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[(a * n + i) * n + j] = en[j][a * n + i] - en[i][a * n + j];
                }
            }
        }
        out
    }

    /// [e_α, e_β] u^γ evaluated on the coordinate functions, flat [γ][α][β].
    pub fn w(&self, z: &[f64]) -> Vec<f64> {
        let d = 2 * self.n;
        let coords = |w: &[f64]| w.to_vec();
        let mut out = vec![0.0; d * d * d];
        for al in 0..d {
            for be in 0..d {
                let eb = |w: &[f64]| self.frame(&coords, w, be);
                let ea = |w: &[f64]| self.frame(&coords, w, al);
                let ab = self.frame(&eb, z, al);
                let ba = self.frame(&ea, z, be);
                for g in 0..d {
                    out[(g * d + al) * d + be] = ab[g] - ba[g];
                }
            }
        }
        out
    }

    pub fn torsion(&self, z: &[f64]) -> TorsionFd {
        let n = self.n;
        let l = self.l(z);
        let c = self.c(z);
        let om = self.omega(z);
        let dn: Vec<Vec<f64>> = (0..n).map(|b| partial(self.nn, z, n + b)).collect();
        let ix = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        let mut t = TorsionFd {
            hh: vec![0.0; n * n * n],
            hv: c.clone(),
            vhh: om,
            vvh: vec![0.0; n * n * n],
            vv: vec![0.0; n * n * n],
        };
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    t.hh[ix(a, b, k)] = l[ix(a, b, k)] - l[ix(a, k, b)];
                    t.vv[ix(a, b, k)] = c[ix(a, b, k)] - c[ix(a, k, b)];
                    t.vvh[ix(a, b, k)] = dn[b][a * n + k] - l[ix(a, b, k)];
                }
            }
        }
        t
    }

    pub fn curvature(&self, z: &[f64]) -> CurvatureFd {
        let n = self.n;
        let l = self.l(z);
        let c = self.c(z);
        let om = self.omega(z);
        let tors = self.torsion(z);
        let i3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        let i4 = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
        let lf = |w: &[f64]| self.l(w);
        let cf = |w: &[f64]| self.c(w);
        let el: Vec<Vec<f64>> = (0..2 * n).map(|al| self.frame(&lf, z, al)).collect();
        let ec: Vec<Vec<f64>> = (0..2 * n).map(|al| self.frame(&cf, z, al)).collect();
        let mut r = vec![0.0; n.pow(4)];
        let mut p = vec![0.0; n.pow(4)];
        let mut s = vec![0.0; n.pow(4)];
        for i in 0..n {
            for h in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut v = el[k][i3(i, h, j)] - el[j][i3(i, h, k)];
                        for q in 0..n {
                            v += l[i3(q, h, j)] * l[i3(i, q, k)] - l[i3(q, h, k)] * l[i3(i, q, j)];
                            v -= c[i3(i, h, q)] * om[i3(q, k, j)];
                        }
                        r[i4(i, h, j, k)] = v;
                    }
                }
            }
        }
        // P^i_jka = e_a L^i_jk − D_k C^i_ja + C^i_jb T^b_ka, T^b_ka = −T^b_ak
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for a in 0..n {
                        let mut dk = ec[k][i3(i, j, a)];
                        for q in 0..n {
                            dk += l[i3(i, q, k)] * c[i3(q, j, a)];
                            dk -= l[i3(q, j, k)] * c[i3(i, q, a)];
                            dk -= l[i3(q, a, k)] * c[i3(i, j, q)];
                        }
                        let mut v = el[n + a][i3(i, j, k)] - dk;
                        for b in 0..n {
                            v += c[i3(i, j, b)] * -tors.vvh[i3(b, a, k)];
                        }
                        p[i4(i, j, k, a)] = v;
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for d in 0..n {
                        let mut v = ec[n + d][i3(a, b, cc)] - ec[n + cc][i3(a, b, d)];
                        for e in 0..n {
                            v += c[i3(e, b, cc)] * c[i3(a, e, d)] - c[i3(e, b, d)] * c[i3(a, e, cc)];
                        }
                        s[i4(a, b, cc, d)] = v;
                    }
                }
            }
        }
        let mut ricci_hh = vec![0.0; n * n];
        let mut ricci_hv = vec![0.0; n * n];
        let mut ricci_vh = vec![0.0; n * n];
        let mut ricci_vv = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                for k in 0..n {
                    ricci_hh[x * n + y] += r[i4(k, x, y, k)];
                    ricci_hv[x * n + y] -= p[i4(k, x, k, y)];
                    ricci_vh[x * n + y] += p[i4(k, x, y, k)];
                    ricci_vv[x * n + y] += s[i4(k, x, y, k)];
                }
            }
        }
        let gi = inverse(&(self.g)(z), n);
        let hi = inverse(&(self.h)(z), n);
        let mut r_scalar = 0.0;
        let mut s_scalar = 0.0;
        for x in 0..n {
            for y in 0..n {
                r_scalar += gi[(x, y)] * ricci_hh[x * n + y];
                s_scalar += hi[(x, y)] * ricci_vv[x * n + y];
            }
        }
        CurvatureFd { r, p, s, ricci_hh, ricci_hv, ricci_vh, ricci_vv, r_scalar, s_scalar }
    }
}

/// max over points and entries of |sym − fd| / max(1, |fd|)
pub fn gap(sym: &Tensor, vars: &[String], pts: &[Vec<f64>], fd: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let s = sym.sample(vars, pts).unwrap();
    let mut worst = 0.0_f64;
    for (row, z) in s.iter().zip(pts) {
        let f = fd(z);
        assert_eq!(f.len(), row.len());
        for (a, b) in row.iter().zip(&f) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    worst
}

pub const CONNECTION_TOL: f64 = 1e-6;
pub const CURVATURE_TOL: f64 = 1e-5;

/// (name, gap, tolerance) for every table of the base-metric pipeline plus both scalars.
pub fn pipeline_gaps(m: &MetricSpec, pts: &[Vec<f64>]) -> Vec<(String, f64, f64)> {
    let t = compute_tables(m).unwrap();
    let vars = t.vars();
    let n = m.n;
    let gx = |x: &[f64]| m.g_at(&x[..n]).unwrap().concat();
    let base = BaseOracle { n, g: &gx };
    let nn = |z: &[f64]| base.nconn(z);
    let b = BundleOracle { n, g: &gx, h: &gx, nn: &nn };
    let mut out = Vec::new();
    for (name, table) in t.named() {
        let oracle = |z: &[f64]| -> Vec<f64> {
            match name {
                "gamma" => base.gamma(&z[..n]),
                "G" => base.semispray(z),
                "N" => base.nconn(z),
                "Omega" => b.omega(z),
                "W" => b.w(z),
                "L.h" | "L.v" => b.l(z),
                "C.h" | "C.v" => b.c(z),
                "T.hh" => b.torsion(z).hh,
                "T.hv" => b.torsion(z).hv,
                "T.vhh" => b.torsion(z).vhh,
                "T.vvh" => b.torsion(z).vvh,
                "T.vv" => b.torsion(z).vv,
                "R" => b.curvature(z).r,
                "P" => b.curvature(z).p,
                "S" => b.curvature(z).s,
                "ricci.hh" => b.curvature(z).ricci_hh,
                "ricci.hv" => b.curvature(z).ricci_hv,
                "ricci.vh" => b.curvature(z).ricci_vh,
                "ricci.vv" => b.curvature(z).ricci_vv,
                other => panic!("no oracle for {other}"),
            }
        };
        let tol = match name {
            "Omega" | "W" | "T.vhh" | "R" | "P" | "S" | "ricci.hh" | "ricci.hv" | "ricci.vh" | "ricci.vv" => {
                CURVATURE_TOL
            }
            _ => CONNECTION_TOL,
        };
        out.push((name.to_string(), gap(table, &vars, pts, oracle), tol));
    }
    let r = Tensor::from_fn(&[1], |_| t.ricci.r_arrow.clone());
    out.push(("scalar.R".into(), gap(&r, &vars, pts, |z| vec![b.curvature(z).r_scalar]), CURVATURE_TOL));
    let s = Tensor::from_fn(&[1], |_| t.ricci.s_arrow.clone());
    out.push(("scalar.S".into(), gap(&s, &vars, pts, |z| vec![b.curvature(z).s_scalar]), CURVATURE_TOL));
    out
}

/// y-dependent blocks over a random N, which exercise C, P and S.
pub fn fibre_dependent_dmetric(seed: u64) -> DMetric {
    let vars: Vec<String> = ["x1", "x2", "y1", "y2"].iter().map(|s| s.to_string()).collect();
    let p = |s: &str| parse_expr(s, &vars).unwrap();
    let g = Tensor::from_matrix(&[
        vec![p("2 + y1^2/2"), p("x1*y2/4")],
        vec![p("x1*y2/4"), p("2 + x2^2 + y2^2/2")],
    ]);
    let h = Tensor::from_matrix(&[
        vec![p("2 + sin(x2*y1)/2"), p("y1*y2/5")],
        vec![p("y1*y2/5"), p("2 + cos(x1 + y2)/2")],
    ]);
    DMetric::new(g, h, random_nconnection(seed)).unwrap()
}

/// (name, gap, tolerance) for the canonical d-connection of a general d-metric.
pub fn dmetric_gaps(dm: &DMetric, pts: &[Vec<f64>]) -> Vec<(String, f64, f64)> {
    let vars = dm.vars();
    let dc = canonical_dconnection(dm, Variant::Tm).unwrap();
    let tor = dtorsion(&dc, &dm.nc);
    let ct = dcurvature(&dc, &dm.nc);
    let ric = ricci_and_scalars(&ct, dm);
    let compiled = |t: &Tensor| {
        let tape = t.compile(&vars).unwrap();
        move |z: &[f64]| tape.eval(z).unwrap()
    };
    let (g, h, nn) = (compiled(&dm.g), compiled(&dm.h), compiled(&dm.nc.coef));
    let b = BundleOracle { n: dm.n(), g: &g, h: &h, nn: &nn };
    let c = |z: &[f64]| b.curvature(z);
    let s = Tensor::from_fn(&[1], |_| ric.s_arrow.clone());
    let r = Tensor::from_fn(&[1], |_| ric.r_arrow.clone());
    let (conn, curv) = (CONNECTION_TOL, CURVATURE_TOL);
    vec![
        ("L.h".into(), gap(&dc.l_h, &vars, pts, |z| b.l(z)), conn),
        ("L.v".into(), gap(&dc.l_v, &vars, pts, |z| b.l(z)), conn),
        ("C.h".into(), gap(&dc.c_h, &vars, pts, |z| b.c(z)), conn),
        ("C.v".into(), gap(&dc.c_v, &vars, pts, |z| b.c(z)), conn),
        ("Omega".into(), gap(&ncurvature(&dm.nc), &vars, pts, |z| b.omega(z)), curv),
        ("W".into(), gap(&anholonomy(&dm.nc).w, &vars, pts, |z| b.w(z)), curv),
        ("T.hh".into(), gap(&tor.hh, &vars, pts, |z| b.torsion(z).hh), conn),
        ("T.hv".into(), gap(&tor.hv, &vars, pts, |z| b.torsion(z).hv), conn),
        ("T.vhh".into(), gap(&tor.vhh, &vars, pts, |z| b.torsion(z).vhh), curv),
        ("T.vvh".into(), gap(&tor.vvh, &vars, pts, |z| b.torsion(z).vvh), conn),
        ("T.vv".into(), gap(&tor.vv, &vars, pts, |z| b.torsion(z).vv), conn),
        ("R".into(), gap(&ct.r, &vars, pts, |z| c(z).r), curv),
        ("P".into(), gap(&ct.p, &vars, pts, |z| c(z).p), curv),
        ("S".into(), gap(&ct.s, &vars, pts, |z| c(z).s), curv),
        ("ricci.hh".into(), gap(&ric.r_hh, &vars, pts, |z| c(z).ricci_hh), curv),
        ("ricci.hv".into(), gap(&ric.r_hv, &vars, pts, |z| c(z).ricci_hv), curv),
        ("ricci.vh".into(), gap(&ric.r_vh, &vars, pts, |z| c(z).ricci_vh), curv),
        ("ricci.vv".into(), gap(&ric.s_vv, &vars, pts, |z| c(z).ricci_vv), curv),
        ("scalar.R".into(), gap(&r, &vars, pts, |z| vec![c(z).r_scalar]), curv),
        ("scalar.S".into(), gap(&s, &vars, pts, |z| vec![c(z).s_scalar]), curv),
    ]
}
