use std::collections::HashMap;

use num_rational::Rational64;
use num_traits::One;

use super::{rat_to_f64, Expr, Func, Node};

pub(super) fn differentiate(e: &Expr, var: &str) -> Expr {
    let mut cache = HashMap::new();
    d(e, var, &mut cache)
}

fn d(e: &Expr, var: &str, cache: &mut HashMap<*const Node, Expr>) -> Expr {
    if let Some(r) = cache.get(&e.ptr()) {
        return r.clone();
    }
    let r = match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(v) => {
            if &**v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Sum(xs) => Expr::add(xs.iter().map(|x| d(x, var, cache)).collect()),
        Node::Product(xs) => {
            let mut terms = Vec::new();
            for i in 0..xs.len() {
                let di = d(&xs[i], var, cache);
                if di.is_zero() {
                    continue;
                }
                let mut fs = xs.clone();
                fs[i] = di;
                terms.push(Expr::mul(fs));
            }
            Expr::add(terms)
        }
        Node::Pow(b, r) => {
            let db = d(b, var, cache);
            if db.is_zero() {
                Expr::zero()
            } else {
                Expr::mul(vec![
                    Expr::constant(rat_to_f64(*r)),
                    Expr::pow(b.clone(), *r - Rational64::one()),
                    db,
                ])
            }
        }
        Node::Call(f, u) => {
            let du = d(u, var, cache);
            if du.is_zero() {
                Expr::zero()
            } else {
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, u.clone()),
                    Func::Cos => Expr::call(Func::Sin, u.clone()).neg(),
                    Func::Tan => Expr::powi(Expr::call(Func::Cos, u.clone()), -2),
                    Func::Exp => e.clone(),
                    Func::Log => Expr::powi(u.clone(), -1),
                    Func::Sqrt => Expr::mul(vec![Expr::constant(0.5), Expr::powi(e.clone(), -1)]),
                    Func::Sinh => Expr::call(Func::Cosh, u.clone()),
                    Func::Cosh => Expr::call(Func::Sinh, u.clone()),
                };
                Expr::mul(vec![outer, du])
            }
        }
    };
    cache.insert(e.ptr(), r.clone());
    r
}

#[cfg(test)]
mod tests {
    use crate::expr::parse_expr;

    fn vars() -> Vec<String> {
        vec!["x1".into(), "x2".into()]
    }

    #[test]
    fn power_rule() {
        let e = parse_expr("x1^2", &vars()).unwrap();
        let de = e.diff("x1").simplify_basic();
        let expect = parse_expr("2*x1", &vars()).unwrap().simplify_basic();
        assert_eq!(de, expect);
    }

    #[test]
    fn chain_rule_value() {
        let e = parse_expr("sin(x1)^2", &vars()).unwrap();
        let v = e.diff("x1").eval(&[("x1", std::f64::consts::FRAC_PI_4)][..]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn independent_variable() {
        let e = parse_expr("sin(x1)^2", &vars()).unwrap();
        assert!(e.diff("x2").is_zero());
    }
}
