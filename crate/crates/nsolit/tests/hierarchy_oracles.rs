mod common;

use std::f64::consts::PI;

use common::*;
use nsolit::hierarchy::*;
use nsolit::klein::*;
use nsolit::spectral::{Anchor, SpectralOps, VField};
use proptest::prelude::*;

const TWO_PI: f64 = 2.0 * PI;

fn anchored(n: usize) -> SpectralOps {
    SpectralOps::new(n, TWO_PI).unwrap().with_anchor(Anchor::Point(0))
}

#[test]
fn dense_matrices_match_spectral_operators() {
    let n = 64;
    let ops = SpectralOps::new(n, TWO_PI).unwrap();
    let f = random_mean_zero(n, 1, TWO_PI, 6, 1.0, 3);
    let x = stack(&f);
    let d = dense_d(n, TWO_PI) * &x;
    assert!(unstack(&d, &f).max_abs_diff(&ops.apply_d(&f).unwrap()) < 1e-11);
    let di = dense_dinv_mean(n, TWO_PI) * &x;
    assert!(unstack(&di, &f).max_abs_diff(&ops.apply_dinv(&f).unwrap()) < 1e-12);
}

#[test]
fn op_h_matches_dense_assembly() {
    let n = 128;
    let ops = SpectralOps::new(n, TWO_PI).unwrap();
    let v = VField::from_fn(n, 2, TWO_PI, |l| vec![l.sin(), 0.0]).unwrap();
    let w = VField::from_fn(n, 2, TWO_PI, |l| vec![0.0, l.cos()]).unwrap();
    let dense = dense_j_h(&v, &dense_d(n, TWO_PI), &dense_dinv_mean(n, TWO_PI));
    let expected = unstack(&(&dense.h * stack(&w)), &w);
    assert!(op_h(&ops, &v, &w).unwrap().max_abs_diff(&expected) < 1e-10);
}

#[test]
fn scalar_j_of_derivative() {
    let n = 256;
    let ops = anchored(n);
    let v = random_vanishing_at_origin(n, 1, TWO_PI, 5, 0.4, 11);
    let vl = ops.apply_d(&v).unwrap();
    let expected = ops.apply_d_n(&v, 2).unwrap().add(&v.map_points(1, |_, x| vec![0.5 * x[0].powi(3)]));
    assert!(op_j(&ops, &v, &vl).unwrap().max_abs_diff(&expected) < 1e-10);
}

#[test]
fn recursion_closed_form_and_expanded_form() {
    let n = 256;
    let ops = anchored(n);
    for (p, seed) in [(1, 1), (2, 2), (3, 3)] {
        let v = random_vanishing_at_origin(n, p, TWO_PI, 6, 0.3, seed);
        let vl = ops.apply_d(&v).unwrap();
        let composed = recursion_r(&ops, &v, &vl).unwrap();
        let expanded = recursion_r_expanded(&ops, &v, &vl).unwrap();
        let closed = flow_rhs(&ops, 1, &v, HierarchyConst::FLAT).unwrap();
        assert!(composed.max_abs_diff(&expanded) < 1e-9, "p={p}");
        assert!(composed.max_abs_diff(&closed) < 1e-9, "p={p}");
        let dense = dense_j_h(&v, &dense_d(n, TWO_PI), &dense_dinv_point(n, TWO_PI, 0));
        let y = &dense.h * (&dense.j * stack(&vl));
        let gap = unstack(&y, &v).max_abs_diff(&composed);
        assert!(gap < 1e-10, "p={p}: {gap:e}");
    }
}

#[test]
fn zero_mean_primitive_shifts_closed_form_by_symmetry_generators() {
    // With a zero-mean D⁻¹, H(J v_l) = v_3l + 3/2|v|²v_l − ½⟨|v|²⟩v_l − v⌋⟨v∧v_l⟩.
    let n = 256;
    let ops = SpectralOps::new(n, TWO_PI).unwrap();
    for (p, seed) in [(1, 21), (2, 22), (3, 23)] {
        let v = random_band_limited(n, p, TWO_PI, 6, 0.3, seed);
        let vl = ops.apply_d(&v).unwrap();
        let composed = recursion_r(&ops, &v, &vl).unwrap();
        let closed = flow_rhs(&ops, 1, &v, HierarchyConst::FLAT).unwrap();
        let mean_s = v.norm2().iter().sum::<f64>() / n as f64;
        let mut m = vec![vec![0.0; p]; p];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..n).map(|k| v.at(k)[i] * vl.at(k)[j] - vl.at(k)[i] * v.at(k)[j]).sum::<f64>() / n as f64;
            }
        }
        let rot = v.map_points(p, |_, x| (0..p).map(|j| (0..p).map(|i| x[i] * m[i][j]).sum()).collect());
        let predicted = closed.axpy(-0.5 * mean_s, &vl).sub(&rot);
        assert!(composed.max_abs_diff(&predicted) < 1e-9, "p={p}");
        assert!(composed.max_abs_diff(&closed) > 1e-3, "p={p}");
    }
}

#[test]
fn second_flow_equals_squared_recursion() {
    let n = 256;
    let ops = anchored(n);
    for (p, seed) in [(1, 31), (2, 32), (3, 33)] {
        let v = random_vanishing_at_origin(n, p, TWO_PI, 5, 0.3, seed);
        let vl = ops.apply_d(&v).unwrap();
        let r2 = recursion_r(&ops, &v, &recursion_r(&ops, &v, &vl).unwrap()).unwrap();
        let closed = flow_rhs(&ops, 2, &v, HierarchyConst::FLAT).unwrap();
        let rel = r2.max_abs_diff(&closed) / closed.max_abs();
        assert!(rel < 1e-10, "p={p}: {rel:e}");
        let printed = flow2_printed(&ops, &v).unwrap();
        assert!(r2.max_abs_diff(&printed) > 1e-3, "p={p}");
    }
}

#[test]
fn travelling_soliton_residual() {
    let (n, period) = (1024, 40.0 * PI);
    let ops = SpectralOps::new(n, period).unwrap();
    let a = 1.0;
    let v = VField::from_fn(n, 1, period, |l| vec![2.0 * a * sech(a * (l - period / 2.0))]).unwrap();
    let rhs = flow_rhs(&ops, 1, &v, HierarchyConst::FLAT).unwrap();
    let expected = ops.apply_d(&v).unwrap().scale(a * a);
    assert!(rhs.max_abs_diff(&expected) < 1e-6);
}

fn rescaled(v: &VField, lambda: f64) -> VField {
    VField { period: v.period * lambda, data: v.data.iter().map(|x| x / lambda).collect(), ..v.clone() }
}

#[test]
fn scaling_weights_of_flows() {
    let n = 128;
    let v = random_band_limited(n, 2, TWO_PI, 5, 0.5, 41);
    for lambda in [0.5, 2.0] {
        let ops = SpectralOps::new(n, TWO_PI).unwrap();
        let ops_l = SpectralOps::new(n, TWO_PI * lambda).unwrap();
        let sv = rescaled(&v, lambda);
        for k in 0..3u32 {
            let lhs = flow_rhs(&ops_l, k, &sv, HierarchyConst::FLAT).unwrap();
            let rhs = flow_rhs(&ops, k, &v, HierarchyConst::FLAT).unwrap().scale(lambda.powi(-(2 * k as i32 + 2)));
            assert!(lhs.max_abs_diff(&rhs) < 1e-9, "k={k} lambda={lambda}");
        }
        let lhs = flow2_printed(&ops_l, &sv).unwrap();
        let rhs = flow2_printed(&ops, &v).unwrap().scale(lambda.powi(-6));
        assert!(lhs.max_abs_diff(&rhs) > 1e-4, "printed fifth-order form scales inhomogeneously");
    }
}

#[test]
fn minus_one_flow_manufactured_solution() {
    let n = 256;
    let ops = SpectralOps::new(n, TWO_PI).unwrap();
    for (p, seed) in [(1, 51), (2, 52), (3, 53)] {
        let e = random_mean_zero(n, p, TWO_PI, 4, 0.15, seed);
        let v = sg_w_from_e(&ops, &e).unwrap();
        for kappa in [1.0, 2.5] {
            let c = HierarchyConst::new(kappa).unwrap();
            let r = minus1_residual(&ops, &v, &e.scale(-kappa), c).unwrap();
            assert!(r.max_abs() < 1e-8, "p={p} kappa={kappa}");
        }
        let e_par = unit_parallel_component(&ops, &v, &e).unwrap();
        let q: Vec<f64> = e_par.iter().zip(e.norm2()).map(|(a, s)| a * a + s).collect();
        assert!(ops.d(&q).iter().all(|x| x.abs() < 1e-9));
        let (e_par_mean, _, varpi) = reconstruct_parallel(&ops, &v, &e).unwrap();
        let shift = e_par[0] - e_par_mean[0];
        assert!(varpi.axpy(shift, &v).max_abs() < 1e-9, "parallel frame of the -1 flow has varpi = 0");
        assert!(unit_norm_defect(&ops, &v, &e).unwrap() < 1e-9);
    }
}

#[test]
fn structure_equations_match_matrix_commutators() {
    let n = 256;
    let ops = SpectralOps::new(n, TWO_PI).unwrap();
    for set in 0..10u64 {
        let (f, v_tau) = random_frame_set(n, set);
        let worst = structure_gap(&ops, &f, &v_tau);
        assert!(worst < 1e-10, "set {set}: {worst}");
    }
}

#[test]
fn reconstruction_zeroes_residuals() {
    let n = 256;
    let ops = SpectralOps::new(n, TWO_PI).unwrap();
    for (p, seed) in [(1, 61), (2, 62), (3, 63)] {
        let v = random_band_limited(n, p, TWO_PI, 4, 0.7, seed);
        let vl = ops.apply_d(&v).unwrap();
        let f = parallel_frame(&ops, &v, &vl).unwrap();
        let r = structure_residuals(&ops, &f, &v).unwrap().max_norms();
        assert!(r[0] < 1e-10 && r[1] < 1e-10 && r[3] < 1e-10, "p={p}: {r:?}");
    }
    let ops = anchored(n);
    let v = random_vanishing_at_origin(n, 1, TWO_PI, 5, 0.5, 64);
    let (e_par, _, _) = reconstruct_parallel(&ops, &v, &ops.apply_d(&v).unwrap()).unwrap();
    let half_sq: Vec<f64> = v.norm2().iter().map(|s| -0.5 * s).collect();
    assert!(e_par.iter().zip(&half_sq).all(|(a, b)| (a - b).abs() < 1e-10));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scalar_h_is_derivative(seed in 0u64..10_000, amp in 0.1f64..2.0) {
        let ops = SpectralOps::new(64, TWO_PI).unwrap();
        let v = random_band_limited(64, 1, TWO_PI, 6, amp, seed);
        let w = random_band_limited(64, 1, TWO_PI, 6, 1.0, seed + 1);
        let h = op_h(&ops, &v, &w).unwrap();
        prop_assert_eq!(h, ops.apply_d(&w).unwrap());
    }

    #[test]
    fn d_dinv_identity(seed in 0u64..10_000, p in 1usize..4) {
        let ops = SpectralOps::new(128, TWO_PI).unwrap();
        let f = random_mean_zero(128, p, TWO_PI, 20, 1.0, seed);
        let g = ops.apply_d(&ops.apply_dinv(&f).unwrap()).unwrap();
        prop_assert!(g.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn embeddings_stay_skew(x in proptest::collection::vec(-5.0f64..5.0, 1..6)) {
        let p = x.len();
        let th = nalgebra::DMatrix::from_fn(p, p, |a, b| if a < b { x[a] * x[b] } else if a > b { -x[a] * x[b] } else { 0.0 });
        prop_assert!(embed_conn(&x, &th).unwrap().is_skew());
        prop_assert!(embed_flow(x[0], &x).is_skew());
    }
}
