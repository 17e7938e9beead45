use std::collections::{BTreeMap, HashMap};

use num_rational::Rational64;

use super::simplify::apply_func;
use super::{rat_to_f64, Expr, Func, Node};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

/// Variable bindings for evaluation.
pub trait Env {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Env for HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Env for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Env for [(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

/// Parallel slices of names and values.
#[derive(Clone, Copy, Debug)]
pub struct Point<'a> {
    pub names: &'a [String],
    pub values: &'a [f64],
}

impl Env for Point<'_> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

fn pow_value(x: f64, r: Rational64) -> Result<f64, EvalError> {
    let (p, q) = (*r.numer(), *r.denom());
    if x == 0.0 && p < 0 {
        return Err(EvalError::DivisionByZero);
    }
    let v = if q == 1 {
        match i32::try_from(p) {
            Ok(n) => x.powi(n),
            Err(_) => x.powf(p as f64),
        }
    } else if x >= 0.0 {
        x.powf(rat_to_f64(r))
    } else if q % 2 == 1 {
        let m = (-x).powf(rat_to_f64(r));
        if p % 2 == 0 {
            m
        } else {
            -m
        }
    } else {
        return Err(EvalError::Domain(format!("{x}^({p}/{q}) is not real")));
    };
    finite(v)
}

fn call_value(f: Func, x: f64) -> Result<f64, EvalError> {
    match f {
        Func::Log if x <= 0.0 => Err(EvalError::Domain(format!("log({x})"))),
        Func::Sqrt if x < 0.0 => Err(EvalError::Domain(format!("sqrt({x})"))),
        _ => apply_func(f, x)
            .ok_or_else(|| EvalError::Domain(format!("{}({x}) is not finite", f.name()))),
    }
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain("non-finite intermediate value".into()))
    }
}

pub(super) fn eval<E: Env + ?Sized>(e: &Expr, env: &E) -> Result<f64, EvalError> {
    match e.node() {
        Node::Const(c) => Ok(*c),
        Node::Var(v) => env.lookup(v).ok_or_else(|| EvalError::Unbound(v.to_string())),
        Node::Sum(xs) => {
            let mut s = 0.0;
            for x in xs {
                s += eval(x, env)?;
            }
            finite(s)
        }
        Node::Product(xs) => {
            let mut s = 1.0;
            for x in xs {
                s *= eval(x, env)?;
            }
            finite(s)
        }
        Node::Pow(b, r) => pow_value(eval(b, env)?, *r),
        Node::Call(f, a) => call_value(*f, eval(a, env)?),
    }
}

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Sum(Vec<usize>),
    Product(Vec<usize>),
    Pow(usize, Rational64),
    Call(Func, usize),
}

/// Flattened evaluation program for a batch of expressions sharing subtrees.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<usize>,
    nvars: usize,
}

impl Tape {
    pub fn new(exprs: &[Expr], vars: &[String]) -> Result<Tape, EvalError> {
        let mut tape = Tape { ops: Vec::new(), outputs: Vec::new(), nvars: vars.len() };
        let mut seen: HashMap<*const Node, usize> = HashMap::new();
        for e in exprs {
            let slot = tape.emit(e, vars, &mut seen)?;
            tape.outputs.push(slot);
        }
        Ok(tape)
    }

    fn emit(
        &mut self,
        e: &Expr,
        vars: &[String],
        seen: &mut HashMap<*const Node, usize>,
    ) -> Result<usize, EvalError> {
        if let Some(&s) = seen.get(&e.ptr()) {
            return Ok(s);
        }
        let op = match e.node() {
            Node::Const(c) => Op::Const(*c),
            Node::Var(v) => Op::Var(
                vars.iter()
                    .position(|n| **n == **v)
                    .ok_or_else(|| EvalError::Unbound(v.to_string()))?,
            ),
            Node::Sum(xs) => {
                let ids = xs.iter().map(|x| self.emit(x, vars, seen)).collect::<Result<_, _>>()?;
                Op::Sum(ids)
            }
            Node::Product(xs) => {
                let ids = xs.iter().map(|x| self.emit(x, vars, seen)).collect::<Result<_, _>>()?;
                Op::Product(ids)
            }
            Node::Pow(b, r) => Op::Pow(self.emit(b, vars, seen)?, *r),
            Node::Call(f, a) => Op::Call(*f, self.emit(a, vars, seen)?),
        };
        self.ops.push(op);
        let slot = self.ops.len() - 1;
        seen.insert(e.ptr(), slot);
        Ok(slot)
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn eval(&self, values: &[f64]) -> Result<Vec<f64>, EvalError> {
        assert_eq!(values.len(), self.nvars, "tape evaluated with wrong arity");
        let mut reg = vec![0.0; self.ops.len()];
        for (i, op) in self.ops.iter().enumerate() {
            reg[i] = match op {
                Op::Const(c) => *c,
                Op::Var(k) => values[*k],
                Op::Sum(ids) => finite(ids.iter().map(|&k| reg[k]).sum())?,
                Op::Product(ids) => finite(ids.iter().map(|&k| reg[k]).product())?,
                Op::Pow(b, r) => pow_value(reg[*b], *r)?,
                Op::Call(f, a) => call_value(*f, reg[*a])?,
            };
        }
        Ok(self.outputs.iter().map(|&k| reg[k]).collect())
    }
}
