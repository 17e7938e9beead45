//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

pub mod fd;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use nsolit::klein::{matrix_structure, pair_count, structure_residuals, FrameFields};
use nsolit::spectral::{SpectralOps, VField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense N×N Fourier differentiation matrix, ½(−1)^{j−m} cot((j−m)h/2) scaled to the period.
pub fn dense_d(n: usize, period: f64) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    let scale = 2.0 * PI / period;
    DMatrix::from_fn(n, n, |j, m| {
        if j == m {
            return 0.0;
        }
        let q = j as i64 - m as i64;
        let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        scale * 0.5 * sign / (q as f64 * h / 2.0).tan()
    })
}

/// Dense antiderivative on mean-zero data with zero-mean output.
pub fn dense_dinv_mean(n: usize, period: f64) -> DMatrix<f64> {
    let h = period / n as f64;
    let base = 2.0 * PI / period;
    DMatrix::from_fn(n, n, |j, m| {
        let dx = (j as f64 - m as f64) * h;
        let mut s = 0.0;
        for q in 1..n / 2 {
            let k = q as f64 * base;
            s += 2.0 * (k * dx).sin() / k;
        }
        s / n as f64
    })
}

/// Dense antiderivative vanishing at grid index `j0`.
pub fn dense_dinv_point(n: usize, period: f64, j0: usize) -> DMatrix<f64> {
    let a = dense_dinv_mean(n, period);
    let row = a.row(j0).clone_owned();
    DMatrix::from_fn(n, n, |j, m| a[(j, m)] - row[m])
}

/// Dense realisations of J and H for fixed v acting on stacked components (component-major).
pub struct DenseOps {
    pub n: usize,
    pub p: usize,
    pub j: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

pub fn dense_j_h(v: &VField, d: &DMatrix<f64>, dinv: &DMatrix<f64>) -> DenseOps {
    let (n, p) = (v.n, v.p);
    let vc = v.components();
    let mut j = DMatrix::zeros(n * p, n * p);
    let mut h = DMatrix::zeros(n * p, n * p);
    for a in 0..p {
        for l in 0..n {
            for m in 0..n {
                j[(a * n + l, a * n + m)] += d[(l, m)];
                h[(a * n + l, a * n + m)] += d[(l, m)];
            }
        }
    }
    // J: v_a(l) Σ_m Dinv(l,m) v_b(m) w_b(m)
    for a in 0..p {
        for b in 0..p {
            for l in 0..n {
                for m in 0..n {
                    j[(a * n + l, b * n + m)] += vc[a][l] * dinv[(l, m)] * vc[b][m];
                }
            }
        }
    }
    // H: Σ_i v_i(l) Dinv(l,m) (v_i(m) w_a(m) − w_i(m) v_a(m))
    for a in 0..p {
        for l in 0..n {
            for m in 0..n {
                let s: f64 = (0..p).map(|i| vc[i][l] * vc[i][m]).sum();
                h[(a * n + l, a * n + m)] += dinv[(l, m)] * s;
                for i in 0..p {
                    h[(a * n + l, i * n + m)] -= vc[i][l] * dinv[(l, m)] * vc[a][m];
                }
            }
        }
    }
    DenseOps { n, p, j, h }
}

pub fn stack(v: &VField) -> DVector<f64> {
    DVector::from_iterator(v.n * v.p, v.components().into_iter().flatten())
}

pub fn unstack(x: &DVector<f64>, like: &VField) -> VField {
    let comps: Vec<Vec<f64>> = (0..like.p).map(|a| x.rows(a * like.n, like.n).iter().copied().collect()).collect();
    VField::from_components(like.n, like.period, &comps).unwrap()
}

/// Random trigonometric polynomial components with modes 0..=kmax (period 2π·scale).
pub fn random_band_limited(n: usize, p: usize, period: f64, kmax: usize, amp: f64, seed: u64) -> VField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = 2.0 * PI / period;
    let coef: Vec<Vec<(f64, f64)>> = (0..p)
        .map(|_| (0..=kmax).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect();
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
    .unwrap()
}

/// Random band-limited field with a double zero at l = 0.
pub fn random_vanishing_at_origin(n: usize, p: usize, period: f64, kmax: usize, amp: f64, seed: u64) -> VField {
    let g = random_band_limited(n, p, period, kmax, amp, seed);
    let base = 2.0 * PI / period;
    let bump: Vec<f64> = g.grid().iter().map(|l| 1.0 - (base * l).cos()).collect();
    g.mul_scalar_field(&bump)
}

/// Mean-zero random band-limited field.
pub fn random_mean_zero(n: usize, p: usize, period: f64, kmax: usize, amp: f64, seed: u64) -> VField {
    let v = random_band_limited(n, p, period, kmax, amp, seed);
    let m = v.mean();
    v.map_points(p, |_, x| x.iter().zip(&m).map(|(a, b)| a - b).collect())
}

pub fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// Random frame fields and flow data with p = 1 + set mod 3.
pub fn random_frame_set(n: usize, set: u64) -> (FrameFields, VField) {
    let period = 2.0 * PI;
    let p = 1 + (set as usize % 3);
    let mut f = FrameFields::zeros(n, p, period).unwrap();
    f.v = random_band_limited(n, p, period, 5, 1.0, 100 + set);
    f.varpi = random_band_limited(n, p, period, 5, 1.0, 200 + set);
    f.e_perp = random_band_limited(n, p, period, 5, 1.0, 300 + set);
    f.e_par = random_band_limited(n, 1, period, 5, 1.0, 400 + set).component(0);
    let th = random_band_limited(n, pair_count(p).max(1), period, 5, 1.0, 500 + set);
    for (k, row) in f.theta.upper.iter_mut().enumerate() {
        *row = th.component(k);
    }
    let v_tau = random_band_limited(n, p, period, 5, 1.0, 600 + set);
    (f, v_tau)
}

/// Largest gap between the component residuals and the matrix commutator form,
/// including entries the component form says must vanish.
pub fn structure_gap(ops: &SpectralOps, f: &FrameFields, v_tau: &VField) -> f64 {
    let p = f.v.p;
    let r = structure_residuals(ops, f, v_tau).unwrap();
    let mats = matrix_structure(ops, f, v_tau).unwrap();
    let mut worst: f64 = 0.0;
    for (j, (t, c)) in mats.iter().enumerate() {
        let (t, c) = (t.matrix(), c.matrix());
        worst = worst.max((t[(0, 1)] - r.r1[j]).abs());
        for a in 0..p {
            worst = worst.max((t[(0, a + 2)] - r.r2.at(j)[a]).abs());
            worst = worst.max((c[(1, a + 2)] - r.r3.at(j)[a]).abs());
            for b in 0..p {
                worst = worst.max((c[(a + 2, b + 2)] - r.r4.entry(j, a, b)).abs());
            }
        }
        let mut rest = t.clone();
        rest[(0, 1)] = 0.0;
        rest[(1, 0)] = 0.0;
        for a in 0..p {
            rest[(0, a + 2)] = 0.0;
            rest[(a + 2, 0)] = 0.0;
        }
        worst = worst.max(rest.amax());
        let mut rest = c.clone();
        for a in 0..p {
            rest[(1, a + 2)] = 0.0;
            rest[(a + 2, 1)] = 0.0;
            for b in 0..p {
                rest[(a + 2, b + 2)] = 0.0;
            }
        }
        worst = worst.max(rest.amax());
    }
    worst
}
