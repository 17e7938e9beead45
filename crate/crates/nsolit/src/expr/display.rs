use std::fmt;

use super::{Expr, Node};

fn needs_parens_in_product(e: &Expr) -> bool {
    matches!(e.node(), Node::Sum(_) | Node::Product(_))
}

fn write_base(f: &mut fmt::Formatter<'_>, b: &Expr) -> fmt::Result {
    match b.node() {
        Node::Var(_) | Node::Call(..) => write!(f, "{b}"),
        Node::Const(c) if *c >= 0.0 && !c.is_sign_negative() => write!(f, "{b}"),
        _ => write!(f, "({b})"),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(v) => write!(f, "{v}"),
            Node::Sum(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    if matches!(x.node(), Node::Sum(_)) {
                        write!(f, "({x})")?;
                    } else {
                        write!(f, "{x}")?;
                    }
                }
                Ok(())
            }
            Node::Product(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    if needs_parens_in_product(x) {
                        write!(f, "({x})")?;
                    } else {
                        write!(f, "{x}")?;
                    }
                }
                Ok(())
            }
            Node::Pow(b, r) => {
                write_base(f, b)?;
                if *r.denom() == 1 && *r.numer() >= 0 {
                    write!(f, "^{}", r.numer())
                } else if *r.denom() == 1 {
                    write!(f, "^({})", r.numer())
                } else {
                    write!(f, "^({}/{})", r.numer(), r.denom())
                }
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
