//! Christoffel symbols, semispray, canonical N-connection, adapted frames,
//! anholonomy and N-connection curvature on the tangent bundle.

use crate::expr::{determinant, matrix_inverse_sym, EvalError, Expr, MatrixError, Point, Tape};
use crate::metric::{MetricSpec, VielbeinMode};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("singular metric: {0}")]
    Singular(String),
    #[error("degenerate vertical metric: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("path too short: {0} samples, need at least 3")]
    PathTooShort(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn sym2(n: usize, f: impl Fn(usize, usize) -> Expr) -> Vec<Vec<Expr>> {
    let mut m = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let e = f(i, j);
            m[i][j] = e.clone();
            m[j][i] = e;
        }
    }
    m
}

/// Inverse of a symbolic matrix, rejecting singular input.
pub fn invert(m: &[Vec<Expr>], what: &str) -> Result<Vec<Vec<Expr>>, GeometryError> {
    matrix_inverse_sym(m).map_err(|e| match e {
        MatrixError::Singular => GeometryError::Singular(format!("{what}: determinant simplifies to 0")),
        MatrixError::NotSquare => GeometryError::Dimension(format!("{what} is not square")),
    })
}

/// γ^i_lm, stored as `gamma[i][l][m]`.
#[derive(Debug, Clone)]
pub struct Christoffel {
    pub gamma: Tensor,
    pub coords: Vec<String>,
}

pub fn christoffel(m: &MetricSpec) -> Result<Christoffel, GeometryError> {
    let n = m.n;
    let ginv = invert(&m.g, "base metric")?;
    // dg[h][l][m] = ∂_h g_lm
    let dg: Vec<Vec<Vec<Expr>>> =
        m.coords.iter().map(|c| sym2(n, |l, k| m.g[l][k].diff(c).simplify_basic())).collect();
    // Γ_{h,lm} = ½(∂_m g_lh + ∂_l g_mh − ∂_h g_lm)
    let lower: Vec<Vec<Vec<Expr>>> = (0..n)
        .map(|h| {
            sym2(n, |l, k| {
                Expr::add(vec![dg[k][l][h].clone(), dg[l][k][h].clone(), dg[h][l][k].neg()]).scale(0.5)
            })
        })
        .collect();
    let mut gamma = Tensor::zeros(&[n, n, n]);
    for i in 0..n {
        for l in 0..n {
            for k in l..n {
                let e = Expr::add((0..n).map(|h| ginv[i][h].times(&lower[h][l][k])).collect()).simplify_basic();
                let a = gamma.offset(&[i, l, k]);
                let b = gamma.offset(&[i, k, l]);
                gamma.data[a] = e.clone();
                gamma.data[b] = e;
            }
        }
    }
    Ok(Christoffel { gamma, coords: m.coords.clone() })
}

/// g̃_ab together with its inverse.
#[derive(Debug, Clone)]
pub struct VerticalMetric {
    pub gt: Vec<Vec<Expr>>,
    pub gt_inv: Vec<Vec<Expr>>,
    pub regular: bool,
    pub mode: VielbeinMode,
}

pub fn vertical_metric(m: &MetricSpec, mode: &VielbeinMode) -> Result<VerticalMetric, GeometryError> {
    let n = m.n;
    let gt = match mode {
        VielbeinMode::Identity => m.g.clone(),
        VielbeinMode::ConstantHessian(h) => {
            if h.len() != n || h.iter().any(|r| r.len() != n) {
                return Err(GeometryError::Dimension(format!("hessian must be {n}x{n}")));
            }
            if (0..n).any(|i| (0..i).any(|j| h[i][j] != h[j][i])) {
                return Err(GeometryError::Degenerate("hessian is not symmetric".into()));
            }
            h.iter().map(|r| r.iter().map(|&v| Expr::constant(v)).collect()).collect()
        }
    };
    let det = determinant(&gt).map_err(|_| GeometryError::Dimension("vertical metric".into()))?;
    if det.is_zero() {
        return Err(GeometryError::Degenerate("det g̃ simplifies to 0".into()));
    }
    for x in m.check_points() {
        let d = det.eval(&Point { names: &m.coords, values: &x })?;
        if d.abs() < 1e-12 {
            return Err(GeometryError::Degenerate(format!("det g̃ = {d:e} at x = {x:?}")));
        }
    }
    let gt_inv = invert(&gt, "vertical metric")?;
    Ok(VerticalMetric { gt, gt_inv, regular: true, mode: mode.clone() })
}

/// G̃^i(x, y) with a compiled evaluator.
#[derive(Debug, Clone)]
pub struct Semispray {
    pub g: Tensor,
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub prefactor: f64,
    tape: Tape,
}

impl Semispray {
    pub fn vars(&self) -> Vec<String> {
        self.x.iter().chain(&self.y).cloned().collect()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut p = x.to_vec();
        p.extend_from_slice(y);
        self.tape.eval(&p)
    }
}

/// G̃^i = ¼ g̃^{ij} g_jk γ^k_lm y^l y^m.
pub fn semispray(m: &MetricSpec, v: &VerticalMetric) -> Result<Semispray, GeometryError> {
    semispray_with(m, &christoffel(m)?, v, 0.25)
}

/// Semispray with an explicit overall prefactor (¼ is the default convention).
pub fn semispray_with(
    m: &MetricSpec,
    c: &Christoffel,
    v: &VerticalMetric,
    prefactor: f64,
) -> Result<Semispray, GeometryError> {
    let n = m.n;
    let y = m.fibre_coords();
    let yv: Vec<Expr> = y.iter().map(|s| Expr::var(s)).collect();
    let a: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| Expr::add((0..n).map(|j| v.gt_inv[i][j].times(&m.g[j][k])).collect()).simplify_basic())
                .collect()
        })
        .collect();
    let quad: Vec<Expr> = (0..n)
        .map(|k| {
            let mut terms = Vec::new();
            for l in 0..n {
                for q in 0..n {
                    terms.push(Expr::mul(vec![c.gamma.at(&[k, l, q]).clone(), yv[l].clone(), yv[q].clone()]));
                }
            }
            Expr::add(terms)
        })
        .collect();
    let g = Tensor::from_fn(&[n], |ix| {
        let i = ix[0];
        Expr::mul(vec![
            Expr::constant(prefactor),
            Expr::add((0..n).map(|k| a[i][k].times(&quad[k])).collect()),
        ])
        .simplify_basic()
    });
    let vars: Vec<String> = m.coords.iter().chain(&y).cloned().collect();
    let tape = g.compile(&vars)?;
    Ok(Semispray { g, x: m.coords.clone(), y, prefactor, tape })
}

/// First-order geodesic system: dx = y, dy = −2 G̃(x, y).
pub fn geodesic_rhs(s: &Semispray, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    let g = s.eval(x, y)?;
    Ok((y.to_vec(), g.iter().map(|v| -2.0 * v).collect()))
}

/// Classical RK4 on [`geodesic_rhs`]; returns `steps + 1` base points.
pub fn integrate_geodesic(
    s: &Semispray,
    x0: &[f64],
    y0: &[f64],
    dt: f64,
    steps: usize,
) -> Result<Vec<Vec<f64>>, EvalError> {
    let n = x0.len();
    let mut state: Vec<f64> = x0.iter().chain(y0).copied().collect();
    let rhs = |u: &[f64]| -> Result<Vec<f64>, EvalError> {
        let (dx, dy) = geodesic_rhs(s, &u[..n], &u[n..])?;
        Ok(dx.into_iter().chain(dy).collect())
    };
    let axpy = |u: &[f64], k: &[f64], h: f64| -> Vec<f64> { u.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let mut path = vec![state[..n].to_vec()];
    for _ in 0..steps {
        let k1 = rhs(&state)?;
        let k2 = rhs(&axpy(&state, &k1, 0.5 * dt))?;
        let k3 = rhs(&axpy(&state, &k2, 0.5 * dt))?;
        let k4 = rhs(&axpy(&state, &k3, dt))?;
        for i in 0..2 * n {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        path.push(state[..n].to_vec());
    }
    Ok(path)
}

/// d/dτ(∂L/∂y) − ∂L/∂x for L = g̃_ab y^a y^b along sampled x(τ), at interior samples.
pub fn euler_lagrange_residual(
    m: &MetricSpec,
    v: &VerticalMetric,
    path: &[Vec<f64>],
    dt: f64,
) -> Result<Vec<Vec<f64>>, GeometryError> {
    if path.len() < 3 {
        return Err(GeometryError::PathTooShort(path.len()));
    }
    let n = m.n;
    if path.iter().any(|p| p.len() != n) {
        return Err(GeometryError::Dimension(format!("path points must have {n} coordinates")));
    }
    let y = m.fibre_coords();
    let mut terms = Vec::new();
    for a in 0..n {
        for b in 0..n {
            terms.push(Expr::mul(vec![v.gt[a][b].clone(), Expr::var(&y[a]), Expr::var(&y[b])]));
        }
    }
    let lag = Expr::add(terms);
    let p: Vec<Expr> = y.iter().map(|ya| lag.diff(ya).simplify_basic()).collect();
    let mut exprs = Vec::new();
    for i in 0..n {
        exprs.push(lag.diff(&m.coords[i]).simplify_basic());
    }
    for pi in &p {
        for c in &m.coords {
            exprs.push(pi.diff(c).simplify_basic());
        }
    }
    for pi in &p {
        for yb in &y {
            exprs.push(pi.diff(yb).simplify_basic());
        }
    }
    let vars: Vec<String> = m.coords.iter().chain(&y).cloned().collect();
    let tape = Tape::new(&exprs, &vars)?;
    let mut out = Vec::with_capacity(path.len() - 2);
    for k in 1..path.len() - 1 {
        let xd: Vec<f64> = (0..n).map(|i| (path[k + 1][i] - path[k - 1][i]) / (2.0 * dt)).collect();
        let xdd: Vec<f64> =
            (0..n).map(|i| (path[k + 1][i] - 2.0 * path[k][i] + path[k - 1][i]) / (dt * dt)).collect();
        let mut pt = path[k].clone();
        pt.extend_from_slice(&xd);
        let vals = tape.eval(&pt)?;
        let (dl_dx, rest) = vals.split_at(n);
        let (dp_dx, dp_dy) = rest.split_at(n * n);
        out.push(
            (0..n)
                .map(|i| {
                    let mut r = -dl_dx[i];
                    for j in 0..n {
                        r += dp_dx[i * n + j] * xd[j] + dp_dy[i * n + j] * xdd[j];
                    }
                    r
                })
                .collect(),
        );
    }
    Ok(out)
}

/// N^a_i(x, y), stored as `coef[a][i]`; `m` fibre and `n` base dimensions.
#[derive(Debug, Clone)]
pub struct NConnection {
    pub coef: Tensor,
    pub x: Vec<String>,
    pub y: Vec<String>,
}

impl NConnection {
    pub fn new(coef: Tensor, x: Vec<String>, y: Vec<String>) -> Result<NConnection, GeometryError> {
        if coef.shape != [y.len(), x.len()] {
            return Err(GeometryError::Dimension(format!(
                "N has shape {:?}, expected [{}, {}]",
                coef.shape,
                y.len(),
                x.len()
            )));
        }
        Ok(NConnection { coef, x, y })
    }

    /// N = 0 on a bundle with the given coordinates.
    pub fn zero(x: Vec<String>, y: Vec<String>) -> NConnection {
        NConnection { coef: Tensor::zeros(&[y.len(), x.len()]), x, y }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    pub fn vars(&self) -> Vec<String> {
        self.x.iter().chain(&self.y).cloned().collect()
    }

    pub fn get(&self, a: usize, i: usize) -> &Expr {
        self.coef.at(&[a, i])
    }

    /// e_α e for α < n horizontal, α ≥ n vertical.
    pub fn frame(&self, alpha: usize, e: &Expr) -> Expr {
        if alpha < self.n() {
            adapted_derivative(self, e, Slot::H(alpha))
        } else {
            adapted_derivative(self, e, Slot::V(alpha - self.n()))
        }
    }
}

/// Ñ^i_j = ∂G̃^i/∂y^j.
pub fn nconnection(s: &Semispray) -> NConnection {
    let n = s.x.len();
    let coef = Tensor::from_fn(&[n, n], |ix| s.g.data[ix[0]].diff(&s.y[ix[1]]).simplify_basic());
    NConnection { coef, x: s.x.clone(), y: s.y.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    H(usize),
    V(usize),
}

/// e_i = ∂/∂x^i − N^a_i ∂/∂y^a, e_a = ∂/∂y^a.
pub fn adapted_derivative(nc: &NConnection, e: &Expr, slot: Slot) -> Expr {
    match slot {
        Slot::H(i) => {
            let mut terms = vec![e.diff(&nc.x[i])];
            for a in 0..nc.m() {
                let na = nc.get(a, i);
                if na.is_zero() {
                    continue;
                }
                let d = e.diff(&nc.y[a]);
                if !d.is_zero() {
                    terms.push(Expr::mul(vec![Expr::constant(-1.0), na.clone(), d]));
                }
            }
            Expr::add(terms).simplify_basic()
        }
        Slot::V(a) => e.diff(&nc.y[a]).simplify_basic(),
    }
}

/// Ω^a_ij, stored as `omega[a][i][j]`.
pub fn ncurvature(nc: &NConnection) -> Tensor {
    let (n, m) = (nc.n(), nc.m());
    let dx: Vec<Vec<Vec<Expr>>> = (0..m)
        .map(|a| (0..n).map(|i| (0..n).map(|j| nc.get(a, i).diff(&nc.x[j])).collect()).collect())
        .collect();
    let dy: Vec<Vec<Vec<Expr>>> = (0..m)
        .map(|a| (0..n).map(|i| (0..m).map(|b| nc.get(a, i).diff(&nc.y[b])).collect()).collect())
        .collect();
    let mut omega = Tensor::zeros(&[m, n, n]);
    for a in 0..m {
        for i in 0..n {
            for j in i + 1..n {
                let mut terms = vec![dx[a][i][j].clone(), dx[a][j][i].neg()];
                for b in 0..m {
                    terms.push(nc.get(b, i).times(&dy[a][j][b]));
                    terms.push(nc.get(b, j).times(&dy[a][i][b]).neg());
                }
                let e = Expr::add(terms).simplify_basic();
                let (p, q) = (omega.offset(&[a, i, j]), omega.offset(&[a, j, i]));
                omega.data[q] = e.neg().simplify_basic();
                omega.data[p] = e;
            }
        }
    }
    omega
}

/// Frame commutator coefficients [e_α, e_β] = W^γ_αβ e_γ, stored as `w[γ][α][β]`.
#[derive(Debug, Clone)]
pub struct Anholonomy {
    pub w: Tensor,
    pub omega: Tensor,
}

pub fn anholonomy(nc: &NConnection) -> Anholonomy {
    let (n, m) = (nc.n(), nc.m());
    let d = n + m;
    let omega = ncurvature(nc);
    let mut w = Tensor::zeros(&[d, d, d]);
    for a in 0..m {
        for i in 0..n {
            for j in 0..n {
                let k = w.offset(&[n + a, i, j]);
                w.data[k] = omega.at(&[a, i, j]).clone();
            }
        }
    }
    for b in 0..m {
        for i in 0..n {
            for a in 0..m {
                let e = nc.get(b, i).diff(&nc.y[a]).simplify_basic();
                let p = w.offset(&[n + b, i, n + a]);
                let q = w.offset(&[n + b, n + a, i]);
                w.data[q] = e.neg().simplify_basic();
                w.data[p] = e;
            }
        }
    }
    Anholonomy { w, omega }
}
