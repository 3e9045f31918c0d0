//! Expression kernel: immutable trees over jet coordinates, exact rational
//! constants and opaque arbitrary functions closed under formal
//! differentiation.

mod diff;
mod eval;
mod normal;
mod parse;
pub(crate) mod poly;
mod print;

use std::cmp::Ordering;
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub use diff::Axis;
pub use eval::{Binding, EvalError, ExprFunction, NumericFunction, UnaryFunction};
pub use parse::{parse, parse_with, ParseContext, ParseError};

/// Exact rational constant.
pub type Rational = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    IndependentCoordinate,
    DependentVariable,
    JetVariable,
    GroupParameter,
    FreeFunctionSlot,
}

/// A named coordinate. Identity is the name; the kind is derived from it.
#[derive(Clone, Debug)]
pub struct Symbol {
    name: Arc<str>,
    kind: SymbolKind,
}

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol {
            name: Arc::from(name),
            kind: kind_of(name),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}
impl Eq for Symbol {}

impl std::hash::Hash for Symbol {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.name.hash(state)
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name.cmp(&other.name)
    }
}

fn kind_of(name: &str) -> SymbolKind {
    match name {
        "x" | "y" | "t" => SymbolKind::IndependentCoordinate,
        "u" => SymbolKind::DependentVariable,
        "f" | "g" | "h" => SymbolKind::FreeFunctionSlot,
        _ if is_jet_name(name) => SymbolKind::JetVariable,
        _ => SymbolKind::GroupParameter,
    }
}

/// First and second jets of u and the jets of the f, g, h slots on the
/// extended manifold.
pub(crate) fn is_jet_name(name: &str) -> bool {
    const FIXED: &[&str] = &[
        "v1", "v2", "v3", "w11", "w12", "w13", "w22", "w23", "w33", "sigma1", "sigma2", "tau",
        "s1_1", "s1_2", "s1_3", "s2_1", "s2_2", "s2_3", "s11", "s12", "s13", "s21", "s22",
        "s23", "t_1", "t_2", "t_3", "tv1", "tv2", "tv3",
    ];
    FIXED.contains(&name)
}

/// Application of an opaque function with a formal derivative multi-index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FuncApp {
    pub name: Arc<str>,
    pub derivs: Vec<u32>,
    pub args: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Num(Rational),
    Sym(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i64),
    Func(FuncApp),
}

/// Immutable, cheaply clonable expression.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn from_node(n: Node) -> Self {
        Expr(Arc::new(n))
    }

    pub fn num(q: Rational) -> Self {
        Expr::from_node(Node::Num(q))
    }

    pub fn int(n: i64) -> Self {
        Expr::num(Rational::from_integer(BigInt::from(n)))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Expr::num(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Self {
        Expr::int(0)
    }

    pub fn one() -> Self {
        Expr::int(1)
    }

    pub fn sym(name: &str) -> Self {
        Expr::from_node(Node::Sym(Symbol::new(name)))
    }

    pub fn symbol(s: &Symbol) -> Self {
        Expr::from_node(Node::Sym(s.clone()))
    }

    pub fn func(name: &str, args: Vec<Expr>) -> Self {
        let derivs = vec![0; args.len()];
        Expr::func_deriv(name, derivs, args)
    }

    pub fn func_deriv(name: &str, derivs: Vec<u32>, args: Vec<Expr>) -> Self {
        assert_eq!(derivs.len(), args.len(), "multi-index length must match arity");
        Expr::from_node(Node::Func(FuncApp {
            name: Arc::from(name),
            derivs,
            args,
        }))
    }

    pub fn sum(terms: Vec<Expr>) -> Self {
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr::from_node(Node::Add(terms)),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Self {
        match factors.len() {
            0 => Expr::one(),
            1 => factors.into_iter().next().unwrap(),
            _ => Expr::from_node(Node::Mul(factors)),
        }
    }

    pub fn pow(&self, n: i64) -> Self {
        match n {
            0 => Expr::one(),
            1 => self.clone(),
            _ => Expr::from_node(Node::Pow(self.clone(), n)),
        }
    }

    pub fn recip(&self) -> Self {
        self.pow(-1)
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self.node() {
            Node::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self.node() {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    /// True for the literal constant zero. Call after `normalize` to decide
    /// identities.
    pub fn is_zero(&self) -> bool {
        self.as_num().map(|q| q.is_zero()).unwrap_or(false)
    }

    pub fn is_one(&self) -> bool {
        self.as_num().map(|q| q.is_one()).unwrap_or(false)
    }

    /// Visit every node, children before parents.
    pub fn walk(&self, visit: &mut dyn FnMut(&Expr)) {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => {}
            Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| x.walk(visit)),
            Node::Pow(b, _) => b.walk(visit),
            Node::Func(fa) => fa.args.iter().for_each(|x| x.walk(visit)),
        }
        visit(self);
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Node::Sym(s) = e.node() {
                out.push(s.clone());
            }
        });
        out.sort();
        out.dedup();
        out
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let Node::Sym(s) = e.node() {
                found |= s.name() == name;
            }
        });
        found
    }

    /// Names of applied arbitrary functions.
    pub fn function_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Node::Func(fa) = e.node() {
                out.push(fa.name.to_string());
            }
        });
        out.sort();
        out.dedup();
        out
    }

    pub fn normalize(&self) -> Expr {
        normal::normalize(self).expect("symbolic division by zero")
    }

    pub fn try_normalize(&self) -> Result<Expr, crate::Error> {
        normal::normalize(self)
    }

    /// Numerator and denominator of the normal form.
    pub fn numer_denom(&self) -> (Expr, Expr) {
        normal::numer_denom(self).expect("symbolic division by zero")
    }

    /// Structural equality of normal forms.
    pub fn equivalent(&self, other: &Expr) -> bool {
        (self - other).normalize().is_zero()
    }

    fn kind_rank(&self) -> u8 {
        match self.node() {
            Node::Num(_) => 0,
            Node::Sym(_) => 1,
            Node::Func(_) => 2,
            Node::Pow(..) => 3,
            Node::Mul(_) => 4,
            Node::Add(_) => 5,
        }
    }
}

/// Total order: node kind, then symbol/function name, then derivative
/// multi-index, then children.
impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let r = self.kind_rank().cmp(&other.kind_rank());
        if r != Ordering::Equal {
            return r;
        }
        match (self.node(), other.node()) {
            (Node::Num(a), Node::Num(b)) => a.cmp(b),
            (Node::Sym(a), Node::Sym(b)) => a.cmp(b),
            (Node::Func(a), Node::Func(b)) => a
                .name
                .cmp(&b.name)
                .then_with(|| a.derivs.cmp(&b.derivs))
                .then_with(|| a.args.cmp(&b.args)),
            (Node::Pow(a, m), Node::Pow(b, n)) => a.cmp(b).then(m.cmp(n)),
            (Node::Mul(a), Node::Mul(b)) | (Node::Add(a), Node::Add(b)) => a.cmp(b),
            _ => unreachable!(),
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(q: Rational) -> Self {
        Expr::num(q)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                ops::$tr::$method(&self, &rhs)
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                ops::$tr::$method(&self, rhs)
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                ops::$tr::$method(self, &rhs)
            }
        }
        impl ops::$tr<i64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                ops::$tr::$method(self, &Expr::int(rhs))
            }
        }
        impl ops::$tr<i64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: i64) -> Expr {
                ops::$tr::$method(&self, &Expr::int(rhs))
            }
        }
    };
}

fn add_raw(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    let mut terms = Vec::new();
    for e in [a, b] {
        match e.node() {
            Node::Add(xs) => terms.extend(xs.iter().cloned()),
            _ => terms.push(e.clone()),
        }
    }
    Expr::sum(terms)
}

fn mul_raw(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::zero();
    }
    if a.is_one() {
        return b.clone();
    }
    if b.is_one() {
        return a.clone();
    }
    let mut factors = Vec::new();
    for e in [a, b] {
        match e.node() {
            Node::Mul(xs) => factors.extend(xs.iter().cloned()),
            _ => factors.push(e.clone()),
        }
    }
    Expr::product(factors)
}

binop!(Add, add, add_raw);
binop!(Sub, sub, |a, b| add_raw(a, &mul_raw(&Expr::int(-1), b)));
binop!(Mul, mul, mul_raw);
binop!(Div, div, |a, b| mul_raw(a, &b.recip()));

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        if let Some(q) = self.as_num() {
            return Expr::num(-q.clone());
        }
        mul_raw(&Expr::int(-1), self)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}
