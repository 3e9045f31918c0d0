//! Partial and total derivatives, substitution.

use std::collections::HashMap;

use super::{Expr, FuncApp, Node, Symbol, SymbolKind};
use crate::Error;

/// Independent axis x, y or t.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    T,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::T];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::T => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }

    pub fn coordinate(self) -> &'static str {
        ["x", "y", "t"][self.index()]
    }

    /// Jet variable for u along this axis.
    pub fn jet(self) -> &'static str {
        ["v1", "v2", "v3"][self.index()]
    }
}

/// Second jet symbol u_{ij}, symmetric in (i, j).
pub fn second_jet(i: Axis, j: Axis) -> &'static str {
    let (a, b) = if i.index() <= j.index() { (i, j) } else { (j, i) };
    match (a, b) {
        (Axis::X, Axis::X) => "w11",
        (Axis::X, Axis::Y) => "w12",
        (Axis::X, Axis::T) => "w13",
        (Axis::Y, Axis::Y) => "w22",
        (Axis::Y, Axis::T) => "w23",
        _ => "w33",
    }
}

fn partial_raw(e: &Expr, s: &str) -> Expr {
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Sym(t) => {
            if t.name() == s {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(xs) => Expr::sum(
            xs.iter()
                .map(|x| partial_raw(x, s))
                .filter(|d| !d.is_zero())
                .collect(),
        ),
        Node::Mul(xs) => {
            let mut terms = Vec::new();
            for (i, x) in xs.iter().enumerate() {
                let d = partial_raw(x, s);
                if d.is_zero() {
                    continue;
                }
                let mut factors: Vec<Expr> = xs.clone();
                factors[i] = d;
                terms.push(Expr::product(factors));
            }
            Expr::sum(terms)
        }
        Node::Pow(b, n) => {
            let d = partial_raw(b, s);
            if d.is_zero() {
                return Expr::zero();
            }
            Expr::product(vec![Expr::int(*n), b.pow(n - 1), d])
        }
        Node::Func(fa) => {
            let mut terms = Vec::new();
            for (k, a) in fa.args.iter().enumerate() {
                let d = partial_raw(a, s);
                if d.is_zero() {
                    continue;
                }
                let mut derivs = fa.derivs.clone();
                derivs[k] += 1;
                let g = Expr::from_node(Node::Func(FuncApp {
                    name: fa.name.clone(),
                    derivs,
                    args: fa.args.clone(),
                }));
                terms.push(&g * &d);
            }
            Expr::sum(terms)
        }
    }
}

impl Expr {
    /// Formal partial derivative, normalized.
    pub fn partial(&self, s: &str) -> Expr {
        partial_raw(self, s).normalize()
    }

    /// Repeated partial derivatives.
    pub fn partials(&self, vars: &[&str]) -> Expr {
        let mut e = self.clone();
        for v in vars {
            e = e.partial(v);
        }
        e
    }

    /// D_i = ∂_i + v_i ∂_u on functions of (x, y, t, u) only.
    pub fn total_derivative(&self, axis: Axis) -> Result<Expr, Error> {
        if let Some(s) = self.symbols().into_iter().find(|s| {
            matches!(
                s.kind(),
                SymbolKind::JetVariable | SymbolKind::FreeFunctionSlot
            )
        }) {
            return Err(Error::JetInBase(s.name().to_string()));
        }
        Ok(self.total_derivative_frozen(axis))
    }

    /// ∂_i + v_i ∂_u acting on explicit (x, y, t, u) dependence, every other
    /// symbol held fixed.
    pub fn total_derivative_frozen(&self, axis: Axis) -> Expr {
        let e = partial_raw(self, axis.coordinate())
            + Expr::sym(axis.jet()) * partial_raw(self, "u");
        e.normalize()
    }

    /// Full total derivative on the second-order jet space:
    /// ∂_i + v_i ∂_u + Σ_j u_{ij} ∂_{v_j}.
    pub fn total_derivative_full(&self, axis: Axis) -> Expr {
        let mut e = partial_raw(self, axis.coordinate())
            + Expr::sym(axis.jet()) * partial_raw(self, "u");
        for j in Axis::ALL {
            e = e + Expr::sym(second_jet(axis, j)) * partial_raw(self, j.jet());
        }
        e.normalize()
    }

    /// Simultaneous substitution of symbols, normalized.
    pub fn substitute(&self, map: &HashMap<Symbol, Expr>) -> Expr {
        self.substitute_raw(map).normalize()
    }

    pub fn substitute_pairs(&self, pairs: &[(&str, Expr)]) -> Expr {
        let map: HashMap<Symbol, Expr> = pairs
            .iter()
            .map(|(k, v)| (Symbol::new(k), v.clone()))
            .collect();
        self.substitute(&map)
    }

    pub(crate) fn substitute_raw(&self, map: &HashMap<Symbol, Expr>) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Sym(s) => map.get(s).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(xs) => Expr::sum(xs.iter().map(|x| x.substitute_raw(map)).collect()),
            Node::Mul(xs) => Expr::product(xs.iter().map(|x| x.substitute_raw(map)).collect()),
            Node::Pow(b, n) => b.substitute_raw(map).pow(*n),
            Node::Func(fa) => Expr::from_node(Node::Func(FuncApp {
                name: fa.name.clone(),
                derivs: fa.derivs.clone(),
                args: fa.args.iter().map(|x| x.substitute_raw(map)).collect(),
            })),
        }
    }

    /// Replace every application of `name` (any derivative order) by the
    /// correspondingly differentiated `body` with `params` bound to the
    /// arguments.
    pub fn substitute_function(&self, name: &str, params: &[&str], body: &Expr) -> Expr {
        let mut cache: HashMap<Vec<u32>, Expr> = HashMap::new();
        self.subs_fn_raw(name, params, body, &mut cache).normalize()
    }

    fn subs_fn_raw(
        &self,
        name: &str,
        params: &[&str],
        body: &Expr,
        cache: &mut HashMap<Vec<u32>, Expr>,
    ) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => self.clone(),
            Node::Add(xs) => Expr::sum(
                xs.iter()
                    .map(|x| x.subs_fn_raw(name, params, body, cache))
                    .collect(),
            ),
            Node::Mul(xs) => Expr::product(
                xs.iter()
                    .map(|x| x.subs_fn_raw(name, params, body, cache))
                    .collect(),
            ),
            Node::Pow(b, n) => b.subs_fn_raw(name, params, body, cache).pow(*n),
            Node::Func(fa) => {
                let args: Vec<Expr> = fa
                    .args
                    .iter()
                    .map(|x| x.subs_fn_raw(name, params, body, cache))
                    .collect();
                if &*fa.name != name || fa.args.len() != params.len() {
                    return Expr::from_node(Node::Func(FuncApp {
                        name: fa.name.clone(),
                        derivs: fa.derivs.clone(),
                        args,
                    }));
                }
                let d = cache
                    .entry(fa.derivs.clone())
                    .or_insert_with(|| {
                        let mut d = body.clone();
                        for (k, &n) in fa.derivs.iter().enumerate() {
                            for _ in 0..n {
                                d = d.partial(params[k]);
                            }
                        }
                        d
                    })
                    .clone();
                let map: HashMap<Symbol, Expr> = params
                    .iter()
                    .zip(args)
                    .map(|(p, a)| (Symbol::new(p), a))
                    .collect();
                d.substitute_raw(&map)
            }
        }
    }

    /// Coefficient of `s^k` once the normal form's numerator is viewed as a
    /// polynomial in `s` (denominator must be free of `s`).
    pub fn coefficient(&self, s: &str, k: u32) -> Option<Expr> {
        let (num, den) = self.numer_denom();
        if den.contains_symbol(s) {
            return None;
        }
        let mut d = num;
        let mut fact = 1i64;
        for i in 1..=k {
            d = d.partial(s);
            fact *= i as i64;
        }
        let c = d.substitute_pairs(&[(s, Expr::zero())]);
        Some((c / Expr::int(fact) / den).normalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn power_rule() {
        assert_eq!(p("u_x^2").partial("v1"), p("2*u_x"));
    }

    #[test]
    fn formal_derivative_of_function() {
        assert_eq!(p("m(u)").partial("u"), p("m'(u)"));
        assert_eq!(p("x*u_x + m(u)*u_t").partial("u"), p("m'(u)*u_t"));
    }

    #[test]
    fn multi_argument_chain_rule() {
        let e = p("m(u*y, x)");
        assert_eq!(e.partial("y"), p("u*m[1,0](u*y, x)"));
    }

    #[test]
    fn total_derivatives() {
        assert_eq!(p("u").total_derivative(Axis::X).unwrap(), p("u_x"));
        assert_eq!(p("x*u").total_derivative(Axis::T).unwrap(), p("x*u_t"));
        let eta = Expr::func("eta", vec![p("x"), p("y"), p("t"), p("u")]);
        let d = eta.total_derivative(Axis::X).unwrap();
        let expected = Expr::func_deriv("eta", vec![1, 0, 0, 0], vec![p("x"), p("y"), p("t"), p("u")])
            + Expr::func_deriv("eta", vec![0, 0, 0, 1], vec![p("x"), p("y"), p("t"), p("u")])
                * p("u_x");
        assert_eq!(d, expected.normalize());
        assert!(p("u_x").total_derivative(Axis::X).is_err());
    }

    #[test]
    fn substitution() {
        assert_eq!(p("u_x + u_y").substitute_pairs(&[("v2", Expr::zero())]), p("u_x"));
        assert_eq!(p("f").substitute_pairs(&[("f", p("u_x"))]), p("u_x"));
        let e = p("x").substitute_pairs(&[("x", p("x - eps*m(u)"))]);
        assert_eq!(e, p("x - eps*m(u)"));
    }

    #[test]
    fn function_substitution_differentiates_body() {
        let e = p("m'(u)*u_x + m(u)");
        let r = e.substitute_function("m", &["u"], &p("u^2"));
        assert_eq!(r, p("2*u*u_x + u^2"));
    }

    #[test]
    fn coefficient_extraction() {
        let e = p("3*u_x*u_t^2 + x*u_t + 1");
        assert_eq!(e.coefficient("v3", 2).unwrap(), p("3*u_x"));
        assert_eq!(e.coefficient("v3", 0).unwrap(), p("1"));
    }
}
