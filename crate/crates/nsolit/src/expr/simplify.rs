use std::collections::HashMap;

use num_rational::Rational64;
use num_traits::{One, Zero};

use super::{cmp_expr, rat_to_f64, Expr, Func, Node};

pub(super) fn simplify(e: &Expr) -> Expr {
    let mut cache = HashMap::new();
    simp(e, &mut cache)
}

fn simp(e: &Expr, cache: &mut HashMap<*const Node, Expr>) -> Expr {
    if let Some(r) = cache.get(&e.ptr()) {
        return r.clone();
    }
    let r = match e.node() {
        Node::Const(c) => {
            if *c == 0.0 {
                Expr::zero()
            } else {
                e.clone()
            }
        }
        Node::Var(_) => e.clone(),
        Node::Sum(xs) => make_sum(xs.iter().map(|x| simp(x, cache)).collect()),
        Node::Product(xs) => make_product(xs.iter().map(|x| simp(x, cache)).collect()),
        Node::Pow(b, r) => make_pow(simp(b, cache), *r),
        Node::Call(f, a) => make_call(*f, simp(a, cache)),
    };
    cache.insert(e.ptr(), r.clone());
    r
}

fn is_integer(r: Rational64) -> bool {
    *r.denom() == 1
}

pub(super) fn const_pow(c: f64, r: Rational64) -> Option<f64> {
    let (p, q) = (*r.numer(), *r.denom());
    let v = if q == 1 {
        if c == 0.0 && p < 0 {
            return None;
        }
        match i32::try_from(p) {
            Ok(n) => c.powi(n),
            Err(_) => c.powf(p as f64),
        }
    } else if c >= 0.0 {
        c.powf(rat_to_f64(r))
    } else if q % 2 == 1 {
        let m = (-c).powf(rat_to_f64(r));
        if p % 2 == 0 {
            m
        } else {
            -m
        }
    } else {
        return None;
    };
    v.is_finite().then_some(v)
}

pub(super) fn apply_func(f: Func, x: f64) -> Option<f64> {
    let v = match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Exp => x.exp(),
        Func::Log => {
            if x <= 0.0 {
                return None;
            }
            x.ln()
        }
        Func::Sqrt => {
            if x < 0.0 {
                return None;
            }
            x.sqrt()
        }
        Func::Sinh => x.sinh(),
        Func::Cosh => x.cosh(),
    };
    v.is_finite().then_some(v)
}

pub(super) fn make_call(f: Func, arg: Expr) -> Expr {
    if let Some(c) = arg.as_const() {
        if let Some(v) = apply_func(f, c) {
            return Expr::constant(v);
        }
    }
    Expr::call_raw(f, arg)
}

pub(super) fn make_pow(base: Expr, r: Rational64) -> Expr {
    if r.is_zero() {
        return Expr::one();
    }
    if r.is_one() {
        return base;
    }
    match base.node() {
        Node::Const(c) => match const_pow(*c, r) {
            Some(v) => Expr::constant(v),
            None => Expr::pow_raw(base, r),
        },
        Node::Pow(b, s) if is_integer(r) => make_pow(b.clone(), *s * r),
        Node::Product(xs) if is_integer(r) => {
            make_product(xs.iter().map(|x| make_pow(x.clone(), r)).collect())
        }
        Node::Call(Func::Sqrt, u) if is_integer(r) && *r.numer() % 2 == 0 => {
            make_pow(u.clone(), r / 2)
        }
        _ => Expr::pow_raw(base, r),
    }
}

fn flatten_product(factors: Vec<Expr>, coef: &mut f64, items: &mut Vec<(Expr, Rational64)>) {
    for f in factors {
        match f.node() {
            Node::Product(xs) => flatten_product(xs.clone(), coef, items),
            Node::Const(c) => *coef *= c,
            Node::Pow(b, r) => items.push((b.clone(), *r)),
            _ => items.push((f, Rational64::one())),
        }
    }
}

pub(super) fn make_product(factors: Vec<Expr>) -> Expr {
    let mut coef = 1.0;
    let mut items = Vec::new();
    flatten_product(factors, &mut coef, &mut items);
    if coef == 0.0 {
        return Expr::zero();
    }
    items.sort_by(|a, b| cmp_expr(&a.0, &b.0));
    let mut merged: Vec<(Expr, Rational64)> = Vec::with_capacity(items.len());
    for (b, r) in items {
        match merged.last_mut() {
            Some((lb, lr)) if *lb == b => *lr += r,
            _ => merged.push((b, r)),
        }
    }
    let mut out = Vec::with_capacity(merged.len());
    let mut again = false;
    for (b, r) in merged {
        if r.is_zero() {
            continue;
        }
        let p = make_pow(b, r);
        match p.node() {
            Node::Const(c) => coef *= c,
            Node::Product(_) => {
                again = true;
                out.push(p);
            }
            _ => out.push(p),
        }
    }
    if again {
        out.push(Expr::constant(coef));
        return make_product(out);
    }
    if coef == 0.0 {
        return Expr::zero();
    }
    out.sort_by(cmp_expr);
    match out.len() {
        0 => Expr::constant(coef),
        1 if coef == 1.0 => out.pop().unwrap(),
        1 if matches!(out[0].node(), Node::Sum(_)) => {
            let Node::Sum(ts) = out[0].node() else { unreachable!() };
            make_sum(
                ts.iter()
                    .map(|t| make_product(vec![Expr::constant(coef), t.clone()]))
                    .collect(),
            )
        }
        _ => {
            if coef != 1.0 {
                out.insert(0, Expr::constant(coef));
            }
            Expr::product_raw(out)
        }
    }
}

fn split_term(t: &Expr) -> (f64, Expr) {
    if let Node::Product(xs) = t.node() {
        if let Some(c) = xs[0].as_const() {
            let rest = if xs.len() == 2 {
                xs[1].clone()
            } else {
                Expr::product_raw(xs[1..].to_vec())
            };
            return (c, rest);
        }
    }
    (1.0, t.clone())
}

fn flatten_sum(terms: Vec<Expr>, constant: &mut f64, items: &mut Vec<(Expr, f64)>) {
    for t in terms {
        match t.node() {
            Node::Sum(xs) => flatten_sum(xs.clone(), constant, items),
            Node::Const(c) => *constant += c,
            _ => {
                let (c, rest) = split_term(&t);
                items.push((rest, c));
            }
        }
    }
}

fn factors_of(e: &Expr) -> Vec<Expr> {
    match e.node() {
        Node::Product(xs) => xs.clone(),
        _ => vec![e.clone()],
    }
}

fn square_of(e: &Expr, f: Func) -> Option<Expr> {
    if let Node::Pow(b, r) = e.node() {
        if *r == Rational64::from_integer(2) {
            if let Node::Call(g, u) = b.node() {
                if *g == f {
                    return Some(u.clone());
                }
            }
        }
    }
    None
}

/// Finds c*sin(u)^2*R + c*cos(u)^2*R and returns (i, j, R).
fn find_pythagorean(items: &[(Expr, f64)]) -> Option<(usize, usize, Expr)> {
    for (i, (rest, c)) in items.iter().enumerate() {
        let fs = factors_of(rest);
        for (k, f) in fs.iter().enumerate() {
            let Some(u) = square_of(f, Func::Sin) else { continue };
            let mut others = fs.clone();
            others.remove(k);
            let other = make_product(others.clone());
            others.push(make_pow(Expr::call_raw(Func::Cos, u), Rational64::from_integer(2)));
            let target = make_product(others);
            if let Some(j) = items
                .iter()
                .enumerate()
                .position(|(j, (r, cj))| j != i && *cj == *c && *r == target)
            {
                return Some((i, j, other));
            }
        }
    }
    None
}

pub(super) fn make_sum(terms: Vec<Expr>) -> Expr {
    let mut constant = 0.0;
    let mut items = Vec::new();
    flatten_sum(terms, &mut constant, &mut items);
    items.sort_by(|a, b| cmp_expr(&a.0, &b.0));
    let mut merged: Vec<(Expr, f64)> = Vec::with_capacity(items.len());
    for (r, c) in items {
        match merged.last_mut() {
            Some((lr, lc)) if *lr == r => *lc += c,
            _ => merged.push((r, c)),
        }
    }
    merged.retain(|(_, c)| *c != 0.0);

    if let Some((i, j, other)) = find_pythagorean(&merged) {
        let c = merged[i].1;
        let mut next: Vec<Expr> = merged
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i && *k != j)
            .map(|(_, (r, c))| build_term(*c, r))
            .collect();
        next.push(make_product(vec![Expr::constant(c), other]));
        next.push(Expr::constant(constant));
        return make_sum(next);
    }

    let mut out = Vec::with_capacity(merged.len() + 1);
    if constant != 0.0 {
        out.push(Expr::constant(constant));
    }
    out.extend(merged.iter().map(|(r, c)| build_term(*c, r)));
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::sum_raw(out),
    }
}

fn build_term(c: f64, rest: &Expr) -> Expr {
    if c == 1.0 {
        return rest.clone();
    }
    let mut fs = vec![Expr::constant(c)];
    fs.extend(factors_of(rest));
    Expr::product_raw(fs)
}
