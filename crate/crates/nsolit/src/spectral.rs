//! Periodic vector fields and Fourier pseudospectral operators.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlannerScalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("field mismatch: {0}")]
    Mismatch(String),
    #[error("nonlocal operator applied to a field with nonzero mean {mean:e} (component {component})")]
    NonzeroMean { component: usize, mean: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value in field")]
    NonFinite,
}

/// p-component field sampled at l_j = j·period/N, row-major (`data[j*p + c]`).
#[derive(Debug, Clone, PartialEq)]
pub struct VField {
    pub n: usize,
    pub p: usize,
    pub period: f64,
    pub data: Vec<f64>,
}

fn check_grid(n: usize, p: usize, period: f64) -> Result<(), FieldError> {
    if n < 8 || !n.is_power_of_two() {
        return Err(FieldError::Grid(format!("N = {n} must be a power of two >= 8")));
    }
    if p == 0 {
        return Err(FieldError::Grid("p must be at least 1".into()));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(FieldError::Grid(format!("period {period} must be positive")));
    }
    Ok(())
}

impl VField {
    pub fn new(n: usize, p: usize, period: f64, data: Vec<f64>) -> Result<VField, FieldError> {
        check_grid(n, p, period)?;
        if data.len() != n * p {
            return Err(FieldError::Mismatch(format!("{} values for N = {n}, p = {p}", data.len())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(FieldError::NonFinite);
        }
        Ok(VField { n, p, period, data })
    }

    pub fn zeros(n: usize, p: usize, period: f64) -> Result<VField, FieldError> {
        VField::new(n, p, period, vec![0.0; n * p])
    }

    pub fn from_fn(n: usize, p: usize, period: f64, f: impl Fn(f64) -> Vec<f64>) -> Result<VField, FieldError> {
        check_grid(n, p, period)?;
        let mut data = Vec::with_capacity(n * p);
        for l in grid(n, period) {
            let v = f(l);
            if v.len() != p {
                return Err(FieldError::Mismatch(format!("generator returned {} components, expected {p}", v.len())));
            }
            data.extend(v);
        }
        VField::new(n, p, period, data)
    }

    /// Field with the same grid and `p` components built from per-component arrays.
    pub fn from_components(n: usize, period: f64, comps: &[Vec<f64>]) -> Result<VField, FieldError> {
        let p = comps.len();
        if comps.iter().any(|c| c.len() != n) {
            return Err(FieldError::Mismatch("component length differs from N".into()));
        }
        let mut data = vec![0.0; n * p];
        for (c, comp) in comps.iter().enumerate() {
            for j in 0..n {
                data[j * p + c] = comp[j];
            }
        }
        VField::new(n, p, period, data)
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        grid(self.n, self.period)
    }

    pub fn at(&self, j: usize) -> &[f64] {
        &self.data[j * self.p..(j + 1) * self.p]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.n).map(|j| self.data[j * self.p + c]).collect()
    }

    pub fn components(&self) -> Vec<Vec<f64>> {
        (0..self.p).map(|c| self.component(c)).collect()
    }

    pub fn with_components(&self, comps: &[Vec<f64>]) -> VField {
        VField::from_components(self.n, self.period, comps).expect("component shapes checked by caller")
    }

    /// Same grid, new pointwise data from `f(j, v(l_j))`.
    pub fn map_points(&self, q: usize, f: impl Fn(usize, &[f64]) -> Vec<f64>) -> VField {
        let mut data = Vec::with_capacity(self.n * q);
        for j in 0..self.n {
            data.extend(f(j, self.at(j)));
        }
        VField { n: self.n, p: q, period: self.period, data }
    }

    pub fn same_grid(&self, other: &VField) -> Result<(), FieldError> {
        if self.n != other.n || self.period != other.period {
            return Err(FieldError::Mismatch(format!(
                "grids differ: (N = {}, L = {}) vs (N = {}, L = {})",
                self.n, self.period, other.n, other.period
            )));
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &VField) -> Result<(), FieldError> {
        self.same_grid(other)?;
        if self.p != other.p {
            return Err(FieldError::Mismatch(format!("p = {} vs p = {}", self.p, other.p)));
        }
        Ok(())
    }

    /// Pointwise v·w.
    pub fn dot(&self, other: &VField) -> Vec<f64> {
        (0..self.n).map(|j| self.at(j).iter().zip(other.at(j)).map(|(a, b)| a * b).sum()).collect()
    }

    /// Pointwise |v|².
    pub fn norm2(&self) -> Vec<f64> {
        self.dot(self)
    }

    pub fn scale(&self, s: f64) -> VField {
        VField { data: self.data.iter().map(|x| s * x).collect(), ..self.clone() }
    }

    /// self + s·other
    pub fn axpy(&self, s: f64, other: &VField) -> VField {
        VField { data: self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &VField) -> VField {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &VField) -> VField {
        self.axpy(-1.0, other)
    }

    /// Pointwise f(l)·v(l).
    pub fn mul_scalar_field(&self, f: &[f64]) -> VField {
        self.map_points(self.p, |j, v| v.iter().map(|x| f[j] * x).collect())
    }

    /// max over the grid of the Euclidean norm |v(l)|.
    pub fn max_norm(&self) -> f64 {
        self.norm2().into_iter().fold(0.0, f64::max).sqrt()
    }

    /// max over all entries of |v_c(l)|.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &VField) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Per-component mean.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.p).map(|c| self.component(c).iter().sum::<f64>() / self.n as f64).collect()
    }
}

pub fn grid(n: usize, period: f64) -> Vec<f64> {
    let h = period / n as f64;
    (0..n).map(|j| j as f64 * h).collect()
}

/// Trapezoid rule on the periodic grid.
pub fn integrate(f: &[f64], period: f64) -> f64 {
    f.iter().sum::<f64>() * period / f.len() as f64
}

/// Integration constant convention for D⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// Result has zero mean.
    Mean,
    /// Result vanishes at grid index j.
    Point(usize),
}

/// FFT plans, wavenumbers and the 2/3 dealiasing mask for one grid.
#[derive(Clone)]
pub struct SpectralOps {
    pub n: usize,
    pub period: f64,
    pub anchor: Anchor,
    k: Vec<f64>,
    mask: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralOps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOps")
            .field("n", &self.n)
            .field("period", &self.period)
            .field("anchor", &self.anchor)
            .finish()
    }
}

impl SpectralOps {
    pub fn new(n: usize, period: f64) -> Result<SpectralOps, FieldError> {
        check_grid(n, 1, period)?;
        let mut planner = FftPlannerScalar::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let base = 2.0 * PI / period;
        let k: Vec<f64> = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
                m as f64 * base
            })
            .collect();
        let cutoff = n / 3;
        let mask = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j } else { n - j };
                m <= cutoff && j != n / 2
            })
            .collect();
        Ok(SpectralOps { n, period, anchor: Anchor::Mean, k, mask, fwd, inv })
    }

    pub fn for_field(v: &VField) -> Result<SpectralOps, FieldError> {
        SpectralOps::new(v.n, v.period)
    }

    pub fn with_anchor(mut self, anchor: Anchor) -> SpectralOps {
        self.anchor = anchor;
        self
    }

    /// Signed wavenumbers 2πm/period.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.mask
    }

    fn check_len(&self, f: &[f64]) {
        assert_eq!(f.len(), self.n, "scalar field length does not match the spectral grid");
    }

    fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    fn inverse(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.into_iter().map(|z| z.re * s).collect()
    }

    /// m-th derivative of a scalar field. The Nyquist mode is dropped for m ≥ 1.
    pub fn d_n(&self, f: &[f64], m: u32) -> Vec<f64> {
        self.check_len(f);
        if m == 0 {
            return f.to_vec();
        }
        let mut hat = self.forward(f);
        let i_pow = Complex64::new(0.0, 1.0).powu(m);
        for (j, z) in hat.iter_mut().enumerate() {
            *z = if j == self.n / 2 { Complex64::new(0.0, 0.0) } else { *z * i_pow * self.k[j].powi(m as i32) };
        }
        self.inverse(hat)
    }

    pub fn d(&self, f: &[f64]) -> Vec<f64> {
        self.d_n(f, 1)
    }

    /// Antiderivative of a mean-zero scalar field, normalised per [`Anchor`].
    pub fn dinv(&self, f: &[f64]) -> Result<Vec<f64>, FieldError> {
        self.dinv_component(f, 0)
    }

    fn dinv_component(&self, f: &[f64], component: usize) -> Result<Vec<f64>, FieldError> {
        self.check_len(f);
        let mean = f.iter().sum::<f64>() / self.n as f64;
        let scale = f.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        if mean.abs() > 1e-10 * scale {
            return Err(FieldError::NonzeroMean { component, mean });
        }
        let mut hat = self.forward(f);
        for (j, z) in hat.iter_mut().enumerate() {
            *z = if j == 0 || j == self.n / 2 { Complex64::new(0.0, 0.0) } else { *z / Complex64::new(0.0, self.k[j]) };
        }
        let mut out = self.inverse(hat);
        if let Anchor::Point(j0) = self.anchor {
            let c = out[j0 % self.n];
            out.iter_mut().for_each(|x| *x -= c);
        }
        Ok(out)
    }

    /// Removes the upper third of the spectrum and the Nyquist mode.
    pub fn dealias(&self, f: &[f64]) -> Vec<f64> {
        self.check_len(f);
        let mut hat = self.forward(f);
        for (z, &keep) in hat.iter_mut().zip(&self.mask) {
            if !keep {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        self.inverse(hat)
    }

    fn check_field(&self, v: &VField) -> Result<(), FieldError> {
        if v.n != self.n || (v.period - self.period).abs() > 1e-12 * self.period {
            return Err(FieldError::Mismatch(format!(
                "field grid (N = {}, L = {}) differs from operator grid (N = {}, L = {})",
                v.n, v.period, self.n, self.period
            )));
        }
        Ok(())
    }

    pub fn apply_d_n(&self, v: &VField, m: u32) -> Result<VField, FieldError> {
        self.check_field(v)?;
        Ok(v.with_components(&v.components().iter().map(|c| self.d_n(c, m)).collect::<Vec<_>>()))
    }

    pub fn apply_d(&self, v: &VField) -> Result<VField, FieldError> {
        self.apply_d_n(v, 1)
    }

    pub fn apply_dinv(&self, v: &VField) -> Result<VField, FieldError> {
        self.check_field(v)?;
        let comps =
            v.components().iter().enumerate().map(|(c, f)| self.dinv_component(f, c)).collect::<Result<Vec<_>, _>>()?;
        Ok(v.with_components(&comps))
    }

    pub fn apply_dealias(&self, v: &VField) -> Result<VField, FieldError> {
        self.check_field(v)?;
        Ok(v.with_components(&v.components().iter().map(|c| self.dealias(c)).collect::<Vec<_>>()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops() -> SpectralOps {
        SpectralOps::new(256, 2.0 * PI).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn derivative_of_sine() {
        let o = ops();
        let l = grid(256, 2.0 * PI);
        let s: Vec<f64> = l.iter().map(|x| x.sin()).collect();
        let c: Vec<f64> = l.iter().map(|x| x.cos()).collect();
        assert!(max_diff(&o.d(&s), &c) < 1e-12);
        assert!(max_diff(&o.dinv(&c).unwrap(), &s) < 1e-12);
        assert!(o.d(&vec![3.0; 256]).iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn dinv_rejects_nonzero_mean() {
        let o = ops();
        let f: Vec<f64> = grid(256, 2.0 * PI).iter().map(|x| 1.0 + x.cos()).collect();
        assert!(matches!(o.dinv(&f), Err(FieldError::NonzeroMean { .. })));
    }

    #[test]
    fn d_dinv_is_identity_on_mean_zero() {
        let o = ops();
        let f: Vec<f64> = grid(256, 2.0 * PI).iter().map(|x| (3.0 * x).sin() + 0.5 * (7.0 * x).cos()).collect();
        assert!(max_diff(&o.d(&o.dinv(&f).unwrap()), &f) < 1e-12);
        let anchored = o.clone().with_anchor(Anchor::Point(5));
        let g = anchored.dinv(&f).unwrap();
        assert!(g[5].abs() < 1e-15);
        assert!(max_diff(&o.d(&g), &f) < 1e-12);
    }

    #[test]
    fn scaled_domain_wavenumbers() {
        let o = SpectralOps::new(64, 20.0 * PI).unwrap();
        let l = grid(64, 20.0 * PI);
        let s: Vec<f64> = l.iter().map(|x| (0.3 * x).sin()).collect();
        let c: Vec<f64> = l.iter().map(|x| 0.3 * (0.3 * x).cos()).collect();
        assert!(max_diff(&o.d(&s), &c) < 1e-12);
    }

    #[test]
    fn dealias_keeps_low_modes() {
        let o = ops();
        let f: Vec<f64> = grid(256, 2.0 * PI).iter().map(|x| (5.0 * x).sin() + (100.0 * x).cos()).collect();
        let g: Vec<f64> = grid(256, 2.0 * PI).iter().map(|x| (5.0 * x).sin()).collect();
        assert!(max_diff(&o.dealias(&f), &g) < 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert!(VField::zeros(12, 1, 1.0).is_err());
        assert!(VField::zeros(4, 1, 1.0).is_err());
        assert!(VField::zeros(16, 0, 1.0).is_err());
        assert!(VField::new(8, 1, 1.0, vec![f64::NAN; 8]).is_err());
    }
}
