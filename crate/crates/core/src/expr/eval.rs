//! Floating-point evaluation under a binding of symbols and functions.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;

use super::{Expr, Node};

/// Denominators closer to zero than this are a domain error.
pub const SINGULAR_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound symbol '{0}'")]
    UnboundSymbol(String),
    #[error("unbound function '{0}'")]
    UnboundFunction(String),
    #[error("domain error: {expr} vanishes (value {value:e})")]
    Domain { expr: String, value: f64 },
    #[error("non-finite value of {0}")]
    NonFinite(String),
    #[error("derivative {index:?} of '{name}' is not available")]
    DerivativeUnavailable { name: String, index: Vec<u32> },
}

/// A numeric callable with formal derivatives.
pub trait NumericFunction: Send + Sync {
    fn eval(&self, args: &[f64], derivs: &[u32]) -> Result<f64, EvalError>;
}

type F1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Single-argument function with its first two derivatives.
#[derive(Clone)]
pub struct UnaryFunction {
    name: String,
    d: [F1; 3],
}

impl UnaryFunction {
    pub fn new(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        UnaryFunction {
            name: name.to_string(),
            d: [Arc::new(f), Arc::new(df), Arc::new(d2f)],
        }
    }

    pub fn sin() -> Self {
        Self::new("sin", f64::sin, f64::cos, |x| -x.sin())
    }

    pub fn cos() -> Self {
        Self::new("cos", f64::cos, |x| -x.sin(), |x| -x.cos())
    }

    pub fn exp() -> Self {
        Self::new("exp", f64::exp, f64::exp, f64::exp)
    }

    pub fn square() -> Self {
        Self::new("square", |x| x * x, |x| 2.0 * x, |_| 2.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new("const", move |_| c, |_| 0.0, |_| 0.0)
    }
}

impl fmt::Debug for UnaryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UnaryFunction({})", self.name)
    }
}

impl NumericFunction for UnaryFunction {
    fn eval(&self, args: &[f64], derivs: &[u32]) -> Result<f64, EvalError> {
        match (args, derivs) {
            ([a], [k]) if (*k as usize) < self.d.len() => Ok((self.d[*k as usize])(*a)),
            _ => Err(EvalError::DerivativeUnavailable {
                name: self.name.clone(),
                index: derivs.to_vec(),
            }),
        }
    }
}

/// Function given by a symbolic body; derivatives up to total order three
/// are precomputed.
#[derive(Clone, Debug)]
pub struct ExprFunction {
    params: Vec<String>,
    body: Expr,
    derived: HashMap<Vec<u32>, Expr>,
    functions: Binding,
}

fn multi_indices(arity: usize, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0; arity]];
    let mut frontier = out.clone();
    for _ in 0..max_total {
        let mut next = Vec::new();
        for idx in &frontier {
            for k in 0..arity {
                let mut j = idx.clone();
                j[k] += 1;
                if !out.contains(&j) && !next.contains(&j) {
                    next.push(j);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

impl ExprFunction {
    pub fn new(params: &[&str], body: Expr) -> Self {
        let mut derived = HashMap::new();
        for idx in multi_indices(params.len(), 3) {
            let mut d = body.clone();
            for (k, &n) in idx.iter().enumerate() {
                for _ in 0..n {
                    d = d.partial(params[k]);
                }
            }
            derived.insert(idx, d);
        }
        ExprFunction {
            params: params.iter().map(|s| s.to_string()).collect(),
            body,
            derived,
            functions: Binding::new(),
        }
    }

    /// Callables for function atoms inside the body.
    pub fn with_functions(mut self, functions: Binding) -> Self {
        self.functions = functions;
        self
    }

    pub fn params(&self) -> Vec<&str> {
        self.params.iter().map(|s| s.as_str()).collect()
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }
}

impl NumericFunction for ExprFunction {
    fn eval(&self, args: &[f64], derivs: &[u32]) -> Result<f64, EvalError> {
        let mut b = self.functions.clone();
        for (p, a) in self.params.iter().zip(args) {
            b.set(p, *a);
        }
        match self.derived.get(derivs) {
            Some(d) => d.eval(&b),
            None => {
                let mut d = self.body.clone();
                for (k, &n) in derivs.iter().enumerate() {
                    for _ in 0..n {
                        d = d.partial(&self.params[k]);
                    }
                }
                d.eval(&b)
            }
        }
    }
}

/// Values for symbols and callables for arbitrary functions.
#[derive(Clone, Default)]
pub struct Binding {
    values: Vec<(Arc<str>, f64)>,
    functions: Vec<(Arc<str>, Arc<dyn NumericFunction>)>,
}

impl fmt::Debug for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.functions.iter().map(|(n, _)| &**n).collect();
        f.debug_struct("Binding")
            .field("values", &self.values)
            .field("functions", &names)
            .finish()
    }
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, v: f64) {
        match self.values.iter_mut().find(|(n, _)| &**n == name) {
            Some(slot) => slot.1 = v,
            None => self.values.push((Arc::from(name), v)),
        }
    }

    pub fn with(mut self, name: &str, v: f64) -> Self {
        self.set(name, v);
        self
    }

    pub fn set_function(&mut self, name: &str, f: Arc<dyn NumericFunction>) {
        match self.functions.iter_mut().find(|(n, _)| &**n == name) {
            Some(slot) => slot.1 = f,
            None => self.functions.push((Arc::from(name), f)),
        }
    }

    pub fn with_function(mut self, name: &str, f: impl NumericFunction + 'static) -> Self {
        self.set_function(name, Arc::new(f));
        self
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| &**n == name).map(|(_, v)| *v)
    }

    pub fn function(&self, name: &str) -> Option<&Arc<dyn NumericFunction>> {
        self.functions
            .iter()
            .find(|(n, _)| &**n == name)
            .map(|(_, f)| f)
    }
}

impl Expr {
    pub fn eval(&self, b: &Binding) -> Result<f64, EvalError> {
        let v = match self.node() {
            Node::Num(q) => q.to_f64().unwrap_or(f64::NAN),
            Node::Sym(s) => b
                .value(s.name())
                .ok_or_else(|| EvalError::UnboundSymbol(s.to_string_name()))?,
            Node::Add(xs) => {
                let mut acc = 0.0;
                for x in xs {
                    acc += x.eval(b)?;
                }
                acc
            }
            Node::Mul(xs) => {
                let mut acc = 1.0;
                for x in xs {
                    acc *= x.eval(b)?;
                }
                acc
            }
            Node::Pow(base, n) => {
                let v = base.eval(b)?;
                if *n < 0 && v.abs() < SINGULAR_EPS {
                    return Err(EvalError::Domain {
                        expr: base.to_string(),
                        value: v,
                    });
                }
                v.powi(*n as i32)
            }
            Node::Func(fa) => {
                let f = b
                    .function(&fa.name)
                    .ok_or_else(|| EvalError::UnboundFunction(fa.name.to_string()))?;
                let args = fa
                    .args
                    .iter()
                    .map(|a| a.eval(b))
                    .collect::<Result<Vec<_>, _>>()?;
                f.eval(&args, &fa.derivs)?
            }
        };
        if !v.is_finite() {
            return Err(EvalError::NonFinite(self.to_string()));
        }
        Ok(v)
    }
}

impl super::Symbol {
    fn to_string_name(&self) -> String {
        self.name().to_string()
    }
}
