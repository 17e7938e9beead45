//! Symbolic expressions over named real coordinates.

mod diff;
mod display;
mod eval;
mod matrix;
mod parse;
mod simplify;

use std::cmp::Ordering;
use std::sync::Arc;

use num_rational::Rational64;

pub use eval::{Env, EvalError, Point, Tape};
pub use matrix::{determinant, matrix_inverse_sym, MatrixError};
pub use parse::{parse_expr, ExprError};

/// Elementary unary functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Arc<str>),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Expr, Rational64),
    Call(Func, Expr),
}

/// Immutable, cheaply clonable expression tree.
#[derive(Clone, Debug)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::from_node(Node::Const(c))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(name: &str) -> Expr {
        Expr::from_node(Node::Var(Arc::from(name)))
    }

    /// Unsimplified n-ary sum.
    pub fn sum_raw(terms: Vec<Expr>) -> Expr {
        Expr::from_node(Node::Sum(terms))
    }

    /// Unsimplified n-ary product.
    pub fn product_raw(factors: Vec<Expr>) -> Expr {
        Expr::from_node(Node::Product(factors))
    }

    pub fn pow_raw(base: Expr, exp: Rational64) -> Expr {
        Expr::from_node(Node::Pow(base, exp))
    }

    pub fn call_raw(f: Func, arg: Expr) -> Expr {
        Expr::from_node(Node::Call(f, arg))
    }

    // Simplifying constructors.

    pub fn add(terms: Vec<Expr>) -> Expr {
        simplify::make_sum(terms)
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        simplify::make_product(factors)
    }

    pub fn pow(base: Expr, exp: Rational64) -> Expr {
        simplify::make_pow(base, exp)
    }

    pub fn powi(base: Expr, exp: i64) -> Expr {
        simplify::make_pow(base, Rational64::from_integer(exp))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        simplify::make_call(f, arg)
    }

    pub fn neg(&self) -> Expr {
        Expr::mul(vec![Expr::constant(-1.0), self.clone()])
    }

    pub fn scale(&self, c: f64) -> Expr {
        Expr::mul(vec![Expr::constant(c), self.clone()])
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        Expr::add(vec![self.clone(), other.neg()])
    }

    pub fn times(&self, other: &Expr) -> Expr {
        Expr::mul(vec![self.clone(), other.clone()])
    }

    pub fn plus(&self, other: &Expr) -> Expr {
        Expr::add(vec![self.clone(), other.clone()])
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    /// Constant folding, 0/1 absorption, like-term collection and sin²+cos² contraction.
    pub fn simplify_basic(&self) -> Expr {
        simplify::simplify(self)
    }

    /// Exact symbolic derivative with respect to `var`.
    pub fn diff(&self, var: &str) -> Expr {
        diff::differentiate(self, var)
    }

    pub fn eval<E: Env + ?Sized>(&self, env: &E) -> Result<f64, EvalError> {
        eval::eval(self, env)
    }

    /// Free variable names, sorted and deduplicated.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = std::collections::HashSet::new();
        collect_vars(self, &mut out, &mut seen);
        out.sort();
        out.dedup();
        out
    }

    pub fn depends_on(&self, var: &str) -> bool {
        self.free_vars().iter().any(|v| v == var)
    }

    /// Number of nodes in the tree (shared subtrees counted once per occurrence).
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Sum(xs) | Node::Product(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Node::Pow(b, _) => 1 + b.size(),
            Node::Call(_, a) => 1 + a.size(),
        }
    }
}

fn collect_vars(e: &Expr, out: &mut Vec<String>, seen: &mut std::collections::HashSet<*const Node>) {
    if !seen.insert(e.ptr()) {
        return;
    }
    match e.node() {
        Node::Const(_) => {}
        Node::Var(v) => out.push(v.to_string()),
        Node::Sum(xs) | Node::Product(xs) => xs.iter().for_each(|x| collect_vars(x, out, seen)),
        Node::Pow(b, _) => collect_vars(b, out, seen),
        Node::Call(_, a) => collect_vars(a, out, seen),
    }
}

fn rank(n: &Node) -> u8 {
    match n {
        Node::Const(_) => 0,
        Node::Var(_) => 1,
        Node::Call(..) => 2,
        Node::Pow(..) => 3,
        Node::Product(_) => 4,
        Node::Sum(_) => 5,
    }
}

/// Total structural order used for canonical sorting.
pub fn cmp_expr(a: &Expr, b: &Expr) -> Ordering {
    if Arc::ptr_eq(&a.0, &b.0) {
        return Ordering::Equal;
    }
    let (na, nb) = (a.node(), b.node());
    match rank(na).cmp(&rank(nb)) {
        Ordering::Equal => {}
        o => return o,
    }
    match (na, nb) {
        (Node::Const(x), Node::Const(y)) => x.total_cmp(y),
        (Node::Var(x), Node::Var(y)) => x.cmp(y),
        (Node::Call(f, x), Node::Call(g, y)) => f.cmp(g).then_with(|| cmp_expr(x, y)),
        (Node::Pow(x, r), Node::Pow(y, s)) => cmp_expr(x, y).then_with(|| r.cmp(s)),
        (Node::Product(xs), Node::Product(ys)) | (Node::Sum(xs), Node::Sum(ys)) => {
            for (x, y) in xs.iter().zip(ys.iter()) {
                match cmp_expr(x, y) {
                    Ordering::Equal => {}
                    o => return o,
                }
            }
            xs.len().cmp(&ys.len())
        }
        _ => unreachable!("rank mismatch"),
    }
}

pub(crate) fn rat_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Differentiate with a check that `var` is one of `coords`.
pub fn differentiate(e: &Expr, var: &str, coords: &[String]) -> Result<Expr, ExprError> {
    if !coords.iter().any(|c| c == var) {
        return Err(ExprError::UnknownVariable { name: var.to_string(), offset: 0 });
    }
    Ok(e.diff(var))
}
