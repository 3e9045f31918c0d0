//! Printer emitting the parser's grammar.

use std::fmt;

use num_traits::{One, Signed};

use super::{Expr, FuncApp, Node};

fn sym_text(name: &str) -> &str {
    match name {
        "v1" => "u_x",
        "v2" => "u_y",
        "v3" => "u_t",
        other => other,
    }
}

fn func_text(fa: &FuncApp) -> String {
    let mut s = fa.name.to_string();
    if fa.args.len() == 1 {
        for _ in 0..fa.derivs[0] {
            s.push('\'');
        }
    } else if fa.derivs.iter().any(|&d| d > 0) {
        let idx: Vec<String> = fa.derivs.iter().map(|d| d.to_string()).collect();
        s.push('[');
        s.push_str(&idx.join(","));
        s.push(']');
    }
    let args: Vec<String> = fa.args.iter().map(|a| a.to_string()).collect();
    s.push('(');
    s.push_str(&args.join(", "));
    s.push(')');
    s
}

fn is_atomic(e: &Expr) -> bool {
    match e.node() {
        Node::Sym(_) | Node::Func(_) => true,
        Node::Num(q) => q.is_integer() && !q.is_negative(),
        _ => false,
    }
}

fn atom(e: &Expr) -> String {
    if is_atomic(e) {
        e.to_string()
    } else {
        format!("({e})")
    }
}

/// A factor inside a product: powers of atoms stay bare.
fn factor(e: &Expr) -> String {
    match e.node() {
        Node::Pow(b, n) if *n > 0 => format!("{}^{}", atom(b), n),
        _ => atom(e),
    }
}

fn product(factors: &[Expr]) -> String {
    let mut coef: Option<&Expr> = None;
    let mut num: Vec<&Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for (i, f) in factors.iter().enumerate() {
        match f.node() {
            Node::Num(_) if i == 0 => coef = Some(f),
            Node::Pow(b, n) if *n < 0 => den.push(b.pow(-n)),
            _ => num.push(f),
        }
    }
    let mut s = String::new();
    let mut body: Vec<String> = num.iter().map(|f| factor(f)).collect();
    if let Some(c) = coef {
        let q = c.as_num().unwrap();
        let unit = q.abs().is_one() && !body.is_empty();
        if !unit {
            body.insert(0, c.to_string());
        } else if q.is_negative() {
            s.push('-');
        }
    }
    if body.is_empty() {
        body.push("1".into());
    }
    s.push_str(&body.join("*"));
    if !den.is_empty() {
        s.push('/');
        if den.len() == 1 && matches!(den[0].node(), Node::Sym(_) | Node::Func(_) | Node::Pow(..)) {
            s.push_str(&factor(&den[0]));
        } else if den.len() == 1 {
            s.push_str(&format!("({})", den[0]));
        } else {
            let parts: Vec<String> = den.iter().map(factor).collect();
            s.push_str(&format!("({})", parts.join("*")));
        }
    }
    s
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Num(q) => write!(f, "{q}"),
            Node::Sym(s) => write!(f, "{}", sym_text(s.name())),
            Node::Func(fa) => write!(f, "{}", func_text(fa)),
            Node::Pow(_, n) if *n < 0 => write!(f, "{}", product(std::slice::from_ref(self))),
            Node::Pow(b, n) => write!(f, "{}^{}", atom(b), n),
            Node::Mul(xs) => write!(f, "{}", product(xs)),
            Node::Add(xs) => {
                for (i, t) in xs.iter().enumerate() {
                    let s = t.to_string();
                    if i == 0 {
                        write!(f, "{s}")?;
                    } else if let Some(rest) = s.strip_prefix('-') {
                        write!(f, " - {rest}")?;
                    } else {
                        write!(f, " + {s}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    fn round(s: &str) -> String {
        parse(s).unwrap().to_string()
    }

    #[test]
    fn prints_grammar() {
        assert_eq!(round("u_x/(1 - eps*m'(u)*u_x)"), "u_x/(1 - eps*u_x*m'(u))");
        assert_eq!(round("-x"), "-x");
        assert_eq!(round("x^2*y/3"), "1/3*x^2*y");
        assert_eq!(round("1/x^2"), "1/x^2");
        assert_eq!(round("m[0,2](u, y)"), "m[0,2](u, y)");
    }

    #[test]
    fn round_trips() {
        for s in [
            "u_x/(1 - eps*m'(u)*u_x)",
            "(eps*m'(u)*u_t^2 + u_x)/(1 + eps*m'(u)*u_x)",
            "-3/2*x*y^2 + 7/(x*y + 1)",
            "m(u*y - 1, x)^3 - p''(u)",
            "1/(x*(1 + y))",
        ] {
            let e = parse(s).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{s}");
        }
    }
}
