//! Members of the wave family, their dependency signatures and the balance
//! form.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{parse, Binding, Expr, Node, SymbolKind};
use crate::{Error, Result};

/// Base and first-jet coordinates a member may depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Coord {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "t")]
    T,
    #[serde(rename = "u")]
    U,
    #[serde(rename = "u_x")]
    V1,
    #[serde(rename = "u_y")]
    V2,
    #[serde(rename = "u_t")]
    V3,
}

impl Coord {
    pub const ALL: [Coord; 7] = [
        Coord::X,
        Coord::Y,
        Coord::T,
        Coord::U,
        Coord::V1,
        Coord::V2,
        Coord::V3,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Coord::X => "x",
            Coord::Y => "y",
            Coord::T => "t",
            Coord::U => "u",
            Coord::V1 => "v1",
            Coord::V2 => "v2",
            Coord::V3 => "v3",
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Coord::V1 => "u_x",
            Coord::V2 => "u_y",
            Coord::V3 => "u_t",
            c => c.symbol(),
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyMember {
    pub f: Expr,
    pub g: Expr,
    pub h: Expr,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DependencySignature {
    pub f: BTreeSet<Coord>,
    pub g: BTreeSet<Coord>,
    pub h: BTreeSet<Coord>,
    pub f_is_zero: bool,
    pub g_is_zero: bool,
    pub h_is_zero: bool,
}

impl DependencySignature {
    pub fn none_involve(&self, c: Coord) -> bool {
        !self.f.contains(&c) && !self.g.contains(&c) && !self.h.contains(&c)
    }
}

/// Σ¹ = f, Σ² = g, Σ³ = −u_t, Σ = h.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceForm {
    pub sigma1: Expr,
    pub sigma2: Expr,
    pub sigma3: Expr,
    pub sigma: Expr,
}

fn check_slot(name: &str, e: &Expr) -> Result<()> {
    for s in e.symbols() {
        let ok = match s.kind() {
            SymbolKind::JetVariable => matches!(s.name(), "v1" | "v2" | "v3"),
            SymbolKind::FreeFunctionSlot => false,
            _ => true,
        };
        if !ok {
            return Err(Error::Dependence {
                field: name.to_string(),
                symbol: s.name().to_string(),
            });
        }
    }
    Ok(())
}

impl FamilyMember {
    /// Normalizes the three functions and rejects higher jets or slot
    /// symbols.
    pub fn new(f: Expr, g: Expr, h: Expr) -> Result<Self> {
        check_slot("f", &f)?;
        check_slot("g", &g)?;
        check_slot("h", &h)?;
        Ok(FamilyMember {
            f: f.try_normalize()?,
            g: g.try_normalize()?,
            h: h.try_normalize()?,
        })
    }

    pub fn from_strs(f: &str, g: &str, h: &str) -> Result<Self> {
        FamilyMember::new(parse(f)?, parse(g)?, parse(h)?)
    }

    /// Reads `f=...`, `g=...`, `h=...` lines; missing fields are zero.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut slots: [Option<Expr>; 3] = [None, None, None];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Input(format!("line {}: expected 'name = expression'", lineno + 1))
            })?;
            let idx = match key.trim() {
                "f" => 0,
                "g" => 1,
                "h" => 2,
                other => {
                    return Err(Error::Input(format!(
                        "line {}: unknown field '{other}'",
                        lineno + 1
                    )))
                }
            };
            if slots[idx].is_some() {
                return Err(Error::Input(format!(
                    "line {}: duplicate field '{}'",
                    lineno + 1,
                    key.trim()
                )));
            }
            slots[idx] = Some(parse(value)?);
        }
        let [f, g, h] = slots.map(|s| s.unwrap_or_else(Expr::zero));
        FamilyMember::new(f, g, h)
    }

    pub fn to_text(&self) -> String {
        format!("f = {}\ng = {}\nh = {}\n", self.f, self.g, self.h)
    }

    pub fn balance_form(&self) -> BalanceForm {
        BalanceForm {
            sigma1: self.f.clone(),
            sigma2: self.g.clone(),
            sigma3: -Expr::sym("v3"),
            sigma: self.h.clone(),
        }
    }

    /// f or g without any dependence on the coordinates.
    pub fn is_degenerate(&self) -> bool {
        let sig = signature(self);
        sig.f.is_empty() || sig.g.is_empty()
    }

    pub fn substitute(&self, pairs: &[(&str, Expr)]) -> Result<Self> {
        FamilyMember::new(
            self.f.substitute_pairs(pairs),
            self.g.substitute_pairs(pairs),
            self.h.substitute_pairs(pairs),
        )
    }
}

impl fmt::Display for FamilyMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f = {}; g = {}; h = {}", self.f, self.g, self.h)
    }
}

fn depends(e: &Expr) -> BTreeSet<Coord> {
    Coord::ALL
        .into_iter()
        .filter(|c| !e.partial(c.symbol()).is_zero())
        .collect()
}

pub fn signature(m: &FamilyMember) -> DependencySignature {
    let (f, g, h) = (m.f.normalize(), m.g.normalize(), m.h.normalize());
    DependencySignature {
        f: depends(&f),
        g: depends(&g),
        h: depends(&h),
        f_is_zero: f.is_zero(),
        g_is_zero: g.is_zero(),
        h_is_zero: h.is_zero(),
    }
}

/// Affine jointly in (u, u_x, u_y, u_t). Decided on the reduced fraction:
/// the denominator must be free of them, the numerator of total degree at
/// most one, and no function atom may take them as arguments.
pub fn is_linear(m: &FamilyMember) -> bool {
    [&m.f, &m.g, &m.h].into_iter().all(|e| {
        let (num, den) = e.numer_denom();
        degree_in_state(&den) == Some(0) && degree_in_state(&num).is_some_and(|d| d <= 1)
    })
}

const STATE_VARS: [&str; 4] = ["u", "v1", "v2", "v3"];

/// Total degree of a polynomial expression in u and the jets; `None` when a
/// function atom or negative power involves them.
fn degree_in_state(e: &Expr) -> Option<u32> {
    let involves = |e: &Expr| STATE_VARS.iter().any(|v| e.contains_symbol(v));
    match e.node() {
        Node::Num(_) => Some(0),
        Node::Sym(s) => Some(u32::from(STATE_VARS.contains(&s.name()))),
        Node::Add(xs) => xs.iter().map(degree_in_state).try_fold(0, |a, d| d.map(|d| a.max(d))),
        Node::Mul(xs) => xs.iter().map(degree_in_state).try_fold(0, |a, d| d.map(|d| a + d)),
        Node::Pow(b, n) => match degree_in_state(b)? {
            0 => Some(0),
            d if *n > 0 => Some(d * *n as u32),
            _ => None,
        },
        Node::Func(_) => (!involves(e)).then_some(0),
    }
}

/// Values of u and its first derivatives at a point, by central differences.
fn jets<F>(field: &F, p: [f64; 3], hs: f64) -> Result<[f64; 4]>
where
    F: Fn(f64, f64, f64) -> Result<f64> + ?Sized,
{
    let u = field(p[0], p[1], p[2])?;
    let mut out = [u, 0.0, 0.0, 0.0];
    for k in 0..3 {
        let mut a = p;
        let mut b = p;
        a[k] += hs;
        b[k] -= hs;
        out[k + 1] = (field(a[0], a[1], a[2])? - field(b[0], b[1], b[2])?) / (2.0 * hs);
    }
    Ok(out)
}

fn eval_at<F>(
    e: &Expr,
    binding: &Binding,
    field: &F,
    p: [f64; 3],
    hs: f64,
) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Result<f64> + ?Sized,
{
    let j = jets(field, p, hs)?;
    let mut b = binding.clone();
    for (name, v) in [
        ("x", p[0]),
        ("y", p[1]),
        ("t", p[2]),
        ("u", j[0]),
        ("v1", j[1]),
        ("v2", j[2]),
        ("v3", j[3]),
    ] {
        b.set(name, v);
    }
    Ok(e.eval(&b)?)
}

/// Pointwise `f_x + g_y + h − u_tt` by central differences through the full
/// composition. `binding` supplies parameters and arbitrary functions.
pub fn residual<F>(
    m: &FamilyMember,
    binding: &Binding,
    field: &F,
    point: [f64; 3],
    h_step: f64,
) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> Result<f64> + ?Sized,
{
    if h_step.is_nan() || h_step <= 0.0 {
        return Err(Error::Input("h_step must be positive".into()));
    }
    let shifted = |k: usize, s: f64| {
        let mut q = point;
        q[k] += s;
        q
    };
    let mut total = 0.0;
    if !m.f.is_zero() {
        let fp = eval_at(&m.f, binding, field, shifted(0, h_step), h_step)?;
        let fm = eval_at(&m.f, binding, field, shifted(0, -h_step), h_step)?;
        total += (fp - fm) / (2.0 * h_step);
    }
    if !m.g.is_zero() {
        let gp = eval_at(&m.g, binding, field, shifted(1, h_step), h_step)?;
        let gm = eval_at(&m.g, binding, field, shifted(1, -h_step), h_step)?;
        total += (gp - gm) / (2.0 * h_step);
    }
    if !m.h.is_zero() {
        total += eval_at(&m.h, binding, field, point, h_step)?;
    }
    let [x, y, t] = point;
    let utt = (field(x, y, t + h_step)? - 2.0 * field(x, y, t)? + field(x, y, t - h_step)?)
        / (h_step * h_step);
    Ok(total - utt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn member(f: &str, g: &str, h: &str) -> FamilyMember {
        FamilyMember::from_strs(f, g, h).unwrap()
    }

    #[test]
    fn signatures() {
        let s = signature(&member("u_x", "0", "0"));
        assert_eq!(s.f, BTreeSet::from([Coord::V1]));
        assert!(s.g.is_empty() && s.g_is_zero && s.h_is_zero);

        let s = signature(&member("u_x + u_t - u_t", "0", "0"));
        assert_eq!(s.f, BTreeSet::from([Coord::V1]));

        let s = signature(&member("u*u_x", "u_y", "u_t"));
        assert_eq!(s.f, BTreeSet::from([Coord::U, Coord::V1]));
        assert_eq!(s.g, BTreeSet::from([Coord::V2]));
        assert_eq!(s.h, BTreeSet::from([Coord::V3]));
    }

    #[test]
    fn linearity() {
        assert!(is_linear(&member("u_x", "u_y", "u")));
        assert!(is_linear(&member("x*u_x + t*u", "y*u_y", "0")));
        assert!(!is_linear(&member(
            "(eps*m'(u)*u_t^2 + u_x)/(1 + eps*m'(u)*u_x)",
            "0",
            "0"
        )));
        assert!(!is_linear(&member("u_x*u_y", "0", "0")));
        assert!(!is_linear(&member("u_x/(1 + u)", "0", "0")));
        assert!(!is_linear(&member("m(u)", "0", "0")));
        assert!(is_linear(&member("m(x)*u_x", "0", "u/(1 + x^2)")));
    }

    #[test]
    fn residual_examples() {
        let m = member("u_x", "0", "0");
        let b = Binding::new();
        let r = residual(&m, &b, &|x: f64, _y: f64, t: f64| Ok(x + t), [0.3, 0.1, -0.2], 1e-3)
            .unwrap();
        assert!(r.abs() < 1e-9);
        let r = residual(&m, &b, &|_x: f64, _y: f64, t: f64| Ok(t * t), [0.3, 0.1, 0.5], 1e-3)
            .unwrap();
        assert!((r + 2.0).abs() < 1e-6);
    }

    #[test]
    fn member_text() {
        let m = FamilyMember::parse_text("f = u_x\n# comment\nh = u\n").unwrap();
        assert_eq!(m, member("u_x", "0", "u"));
        assert_eq!(FamilyMember::parse_text(&m.to_text()).unwrap(), m);
        assert!(FamilyMember::parse_text("f = u_x\nf = u").is_err());
        assert!(FamilyMember::parse_text("k = 1").is_err());
        assert!(FamilyMember::new(Expr::sym("w11"), Expr::zero(), Expr::zero()).is_err());
    }

    #[test]
    fn balance_form() {
        let m = member("u_x", "u_y", "u");
        let b = m.balance_form();
        assert_eq!(b.sigma3, parse("-u_t").unwrap());
        assert_eq!(b.sigma, m.h);
    }
}
