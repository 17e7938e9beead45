use super::Expr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatrixError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("singular matrix: determinant simplifies to 0")]
    Singular,
}

fn minor(m: &[Vec<Expr>], row: usize, col: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, e)| e.clone()).collect())
        .collect()
}

fn det_rec(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => Expr::add(vec![m[0][0].times(&m[1][1]), m[0][1].times(&m[1][0]).neg()]),
        n => {
            let mut terms = Vec::new();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                terms.push(Expr::mul(vec![Expr::constant(sign), m[0][j].clone(), det_rec(&minor(m, 0, j))]));
            }
            Expr::add(terms)
        }
    }
}

fn check_square(m: &[Vec<Expr>]) -> Result<(), MatrixError> {
    if m.iter().any(|r| r.len() != m.len()) {
        return Err(MatrixError::NotSquare);
    }
    Ok(())
}

/// Cofactor-expansion determinant, simplified.
pub fn determinant(m: &[Vec<Expr>]) -> Result<Expr, MatrixError> {
    check_square(m)?;
    Ok(det_rec(m).simplify_basic())
}

/// Adjugate over determinant. Symmetric input gives a structurally symmetric result.
pub fn matrix_inverse_sym(m: &[Vec<Expr>]) -> Result<Vec<Vec<Expr>>, MatrixError> {
    check_square(m)?;
    let n = m.len();
    let det = det_rec(m).simplify_basic();
    if det.is_zero() {
        return Err(MatrixError::Singular);
    }
    let dinv = Expr::powi(det, -1);
    let symmetric = (0..n).all(|i| (0..i).all(|j| m[i][j] == m[j][i]));
    let mut inv = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if symmetric && j < i {
                inv[i][j] = inv[j][i].clone();
                continue;
            }
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let cof = det_rec(&minor(m, j, i));
            inv[i][j] = Expr::mul(vec![Expr::constant(sign), cof, dinv.clone()]).simplify_basic();
        }
    }
    Ok(inv)
}
