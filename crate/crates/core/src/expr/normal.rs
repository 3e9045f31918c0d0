//! Rational normal form. Atoms (symbols and function applications with
//! normalized arguments) become polynomial variables ordered by the total
//! order on `Expr`; the result is a reduced fraction whose denominator has
//! integer coefficients, unit content and a positive trailing coefficient.

use std::collections::{BTreeSet, HashMap};

use num_traits::One;

use super::poly::{poly_gcd, Mono, Poly, Var, Q};
use super::{Expr, FuncApp, Node};
use crate::Error;

#[derive(Clone, Debug)]
struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    fn poly(p: Poly) -> Self {
        RatFunc { num: p, den: Poly::one() }
    }

    fn reduced(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return RatFunc::poly(Poly::zero());
        }
        if let Some(c) = den.as_constant() {
            return RatFunc::poly(num.scale(&(Q::one() / c)));
        }
        let g = poly_gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.exact_div(&g).expect("gcd divides numerator"),
                den.exact_div(&g).expect("gcd divides denominator"),
            )
        };
        let lc = den.leading().map(|(_, c)| c.clone()).unwrap();
        let k = Q::one() / lc;
        RatFunc {
            num: num.scale(&k),
            den: den.scale(&k),
        }
    }

    fn add(&self, other: &RatFunc) -> RatFunc {
        if self.den.is_one() && other.den.is_one() {
            return RatFunc::poly(self.num.add(&other.num));
        }
        if self.num.is_zero() {
            return other.clone();
        }
        if other.num.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return RatFunc::reduced(self.num.add(&other.num), self.den.clone());
        }
        let g = poly_gcd(&self.den, &other.den);
        let b1 = self.den.exact_div(&g).unwrap();
        let d1 = other.den.exact_div(&g).unwrap();
        let num = self.num.mul(&d1).add(&other.num.mul(&b1));
        let den = b1.mul(&other.den);
        RatFunc::reduced(num, den)
    }

    fn mul(&self, other: &RatFunc) -> RatFunc {
        if self.num.is_zero() || other.num.is_zero() {
            return RatFunc::poly(Poly::zero());
        }
        if self.den.is_one() && other.den.is_one() {
            return RatFunc::poly(self.num.mul(&other.num));
        }
        let g1 = poly_gcd(&self.num, &other.den);
        let g2 = poly_gcd(&other.num, &self.den);
        let a = self.num.exact_div(&g1).unwrap();
        let d = other.den.exact_div(&g1).unwrap();
        let c = other.num.exact_div(&g2).unwrap();
        let b = self.den.exact_div(&g2).unwrap();
        let num = a.mul(&c);
        let den = b.mul(&d);
        let lc = den.leading().map(|(_, c)| c.clone()).unwrap();
        let k = Q::one() / lc;
        RatFunc {
            num: num.scale(&k),
            den: den.scale(&k),
        }
    }

    fn pow(&self, n: i64) -> Result<RatFunc, Error> {
        if n >= 0 {
            return Ok(RatFunc {
                num: self.num.pow(n as u32),
                den: self.den.pow(n as u32),
            });
        }
        if self.num.is_zero() {
            return Err(Error::SymbolicDivisionByZero);
        }
        let m = (-n) as u32;
        let (num, den) = (self.den.pow(m), self.num.pow(m));
        let lc = den.leading().map(|(_, c)| c.clone()).unwrap();
        let k = Q::one() / lc;
        Ok(RatFunc {
            num: num.scale(&k),
            den: den.scale(&k),
        })
    }
}

/// Normalize function arguments bottom-up so atoms compare canonically.
fn canon_atoms(e: &Expr) -> Result<Expr, Error> {
    Ok(match e.node() {
        Node::Num(_) | Node::Sym(_) => e.clone(),
        Node::Add(xs) => Expr::sum(xs.iter().map(canon_atoms).collect::<Result<_, _>>()?),
        Node::Mul(xs) => Expr::product(xs.iter().map(canon_atoms).collect::<Result<_, _>>()?),
        Node::Pow(b, n) => Expr::from_node(Node::Pow(canon_atoms(b)?, *n)),
        Node::Func(fa) => Expr::from_node(Node::Func(FuncApp {
            name: fa.name.clone(),
            derivs: fa.derivs.clone(),
            args: fa.args.iter().map(normalize).collect::<Result<_, _>>()?,
        })),
    })
}

fn collect(e: &Expr, atoms: &mut BTreeSet<Expr>) {
    match e.node() {
        Node::Num(_) => {}
        Node::Sym(_) | Node::Func(_) => {
            atoms.insert(e.clone());
        }
        Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| collect(x, atoms)),
        Node::Pow(b, _) => collect(b, atoms),
    }
}

struct Ctx {
    atoms: Vec<Expr>,
    index: HashMap<Expr, Var>,
}

impl Ctx {
    fn new(e: &Expr) -> Self {
        let mut set = BTreeSet::new();
        collect(e, &mut set);
        let atoms: Vec<Expr> = set.into_iter().collect();
        let index = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i as Var))
            .collect();
        Ctx { atoms, index }
    }

    fn to_rat(&self, e: &Expr) -> Result<RatFunc, Error> {
        Ok(match e.node() {
            Node::Num(q) => RatFunc::poly(Poly::constant(q.clone())),
            Node::Sym(_) | Node::Func(_) => RatFunc::poly(Poly::var(self.index[e])),
            Node::Add(xs) => {
                let mut acc = RatFunc::poly(Poly::zero());
                for x in xs {
                    acc = acc.add(&self.to_rat(x)?);
                }
                acc
            }
            Node::Mul(xs) => {
                let mut acc = RatFunc::poly(Poly::one());
                for x in xs {
                    acc = acc.mul(&self.to_rat(x)?);
                    if acc.num.is_zero() {
                        break;
                    }
                }
                acc
            }
            Node::Pow(b, n) => self.to_rat(b)?.pow(*n)?,
        })
    }

    fn mono_factors(&self, m: &Mono, sign: i64) -> Vec<Expr> {
        m.0.iter()
            .map(|&(v, e)| self.atoms[v as usize].pow(sign * e as i64))
            .collect()
    }

    fn term(&self, m: &Mono, c: &Q) -> Expr {
        let mut factors = Vec::new();
        if !c.is_one() {
            factors.push(Expr::num(c.clone()));
        }
        factors.extend(self.mono_factors(m, 1));
        Expr::product(factors)
    }

    fn poly_expr(&self, p: &Poly) -> Expr {
        if p.is_zero() {
            return Expr::zero();
        }
        Expr::sum(p.terms.iter().map(|(m, c)| self.term(m, c)).collect())
    }

    /// Numerator and denominator expressions in canonical scaling.
    fn split(&self, r: &RatFunc) -> (Poly, Poly) {
        if r.den.is_one() || r.num.is_zero() {
            return (r.num.clone(), Poly::one());
        }
        let (den, k) = r.den.integer_primitive();
        (r.num.scale(&k), den)
    }

    fn expr_of(&self, r: &RatFunc) -> Expr {
        let (num, den) = self.split(r);
        if den.is_one() {
            return self.poly_expr(&num);
        }
        let mut factors = Vec::new();
        if num.terms.len() == 1 {
            let (m, c) = num.terms.iter().next().unwrap();
            if !c.is_one() {
                factors.push(Expr::num(c.clone()));
            }
            factors.extend(self.mono_factors(m, 1));
        } else {
            factors.push(self.poly_expr(&num));
        }
        if den.terms.len() == 1 {
            let (m, _) = den.terms.iter().next().unwrap();
            factors.extend(self.mono_factors(m, -1));
        } else {
            factors.push(self.poly_expr(&den).pow(-1));
        }
        Expr::product(factors)
    }
}

pub(crate) fn normalize(e: &Expr) -> Result<Expr, Error> {
    let e = canon_atoms(e)?;
    let ctx = Ctx::new(&e);
    let r = ctx.to_rat(&e)?;
    Ok(ctx.expr_of(&r))
}

pub(crate) fn numer_denom(e: &Expr) -> Result<(Expr, Expr), Error> {
    let e = canon_atoms(e)?;
    let ctx = Ctx::new(&e);
    let r = ctx.to_rat(&e)?;
    let (num, den) = ctx.split(&r);
    Ok((ctx.poly_expr(&num), ctx.poly_expr(&den)))
}

