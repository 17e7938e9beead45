//! Dense tables of expressions with numeric sampling.

use rayon::prelude::*;

use crate::expr::{EvalError, Expr, Tape};

/// Row-major table of expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<Expr>,
}

fn unravel(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for (k, &s) in shape.iter().enumerate().rev() {
        idx[k] = flat % s;
        flat /= s;
    }
    idx
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor { shape: shape.to_vec(), data: vec![Expr::zero(); shape.iter().product()] }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> Expr) -> Tensor {
        let len = shape.iter().product();
        let data = (0..len).map(|k| f(&unravel(shape, k))).collect();
        Tensor { shape: shape.to_vec(), data }
    }

    /// Like [`Tensor::from_fn`] with entries built in parallel.
    pub fn par_from_fn(shape: &[usize], f: impl Fn(&[usize]) -> Expr + Sync) -> Tensor {
        let len: usize = shape.iter().product();
        let data = (0..len).into_par_iter().map(|k| f(&unravel(shape, k))).collect();
        Tensor { shape: shape.to_vec(), data }
    }

    pub fn from_matrix(m: &[Vec<Expr>]) -> Tensor {
        let rows = m.len();
        let cols = m.first().map_or(0, Vec::len);
        Tensor::from_fn(&[rows, cols], |ix| m[ix[0]][ix[1]].clone())
    }

    pub fn to_matrix(&self) -> Vec<Vec<Expr>> {
        assert_eq!(self.shape.len(), 2, "to_matrix on a rank-{} table", self.shape.len());
        self.data.chunks(self.shape[1]).map(<[Expr]>::to_vec).collect()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| {
            debug_assert!(i < s);
            acc * s + i
        })
    }

    pub fn at(&self, idx: &[usize]) -> &Expr {
        &self.data[self.offset(idx)]
    }

    pub fn index_of(&self, flat: usize) -> Vec<usize> {
        unravel(&self.shape, flat)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr + Sync + Send) -> Tensor {
        Tensor { shape: self.shape.clone(), data: self.data.par_iter().map(f).collect() }
    }

    pub fn simplify(&self) -> Tensor {
        self.map(Expr::simplify_basic)
    }

    /// True when every entry is the literal constant 0.
    pub fn is_symbolic_zero(&self) -> bool {
        self.data.iter().all(Expr::is_zero)
    }

    pub fn compile(&self, vars: &[String]) -> Result<Tape, EvalError> {
        Tape::new(&self.data, vars)
    }

    /// Values at each point, in flat order.
    pub fn sample(&self, vars: &[String], points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, EvalError> {
        let tape = self.compile(vars)?;
        points.par_iter().map(|p| tape.eval(p)).collect()
    }

    /// Largest absolute entry over all points.
    pub fn max_abs(&self, vars: &[String], points: &[Vec<f64>]) -> Result<f64, EvalError> {
        Ok(self
            .sample(vars, points)?
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs())))
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.data.iter().map(ToString::to_string).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let t = Tensor::from_fn(&[2, 3, 4], |ix| Expr::constant((100 * ix[0] + 10 * ix[1] + ix[2]) as f64));
        assert_eq!(t.at(&[1, 2, 3]).as_const(), Some(123.0));
        assert_eq!(t.index_of(t.offset(&[1, 0, 2])), vec![1, 0, 2]);
    }

    #[test]
    fn parallel_build_matches_serial() {
        let f = |ix: &[usize]| Expr::constant((ix[0] * 7 + ix[1]) as f64);
        assert_eq!(Tensor::from_fn(&[5, 6], f), Tensor::par_from_fn(&[5, 6], f));
    }

    #[test]
    fn sampling() {
        let vars = vec!["a".to_string()];
        let t = Tensor::from_fn(&[2], |ix| Expr::var("a").scale(ix[0] as f64 + 1.0));
        let v = t.sample(&vars, &[vec![1.0], vec![-3.0]]).unwrap();
        assert_eq!(v, vec![vec![1.0, 2.0], vec![-3.0, -6.0]]);
        assert_eq!(t.max_abs(&vars, &[vec![1.0], vec![-3.0]]).unwrap(), 6.0);
    }
}
