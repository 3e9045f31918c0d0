//! Finite one-parameter equivalence transformations: the closed-form
//! families, RK4 exponentiation of generators, induced jet maps and
//! invariance sampling.
//!
//! A point of the extended space is ordered as
//! `(x, y, t, u, u_x, u_y, u_t, f, g, h)`.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{parse, Axis, Binding, EvalError, Expr, ExprFunction, NumericFunction, Symbol};
use crate::family::FamilyMember;
use crate::generators::{solve_wave_determining, FreeData, GeneratorSet};
use crate::{Error, Result};

pub const STATE: [&str; 10] = ["x", "y", "t", "u", "v1", "v2", "v3", "f", "g", "h"];
pub const EPS: &str = "eps";

/// Denominators below this magnitude make a random sample singular.
pub const SAMPLE_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "4.1")]
    ShiftXByU,
    #[serde(rename = "4.2")]
    ShiftXYByU,
    #[serde(rename = "4.3")]
    ShiftXByUY,
    #[serde(rename = "4.4")]
    ShiftYByUX,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::ShiftXByU,
        Family::ShiftXYByU,
        Family::ShiftXByUY,
        Family::ShiftYByUX,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Family::ShiftXByU => "4.1",
            Family::ShiftXYByU => "4.2",
            Family::ShiftXByUY => "4.3",
            Family::ShiftYByUX => "4.4",
        }
    }

    pub fn from_label(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.label() == s)
    }

    /// Arbitrary functions of the family with their parameter lists.
    pub fn function_slots(self) -> Vec<(&'static str, Vec<&'static str>)> {
        match self {
            Family::ShiftXByU => vec![("m", vec!["u"])],
            Family::ShiftXYByU => vec![("m", vec!["u"]), ("p", vec!["u"])],
            Family::ShiftXByUY => vec![("m", vec!["u", "y"])],
            Family::ShiftYByUX => vec![("m", vec!["u", "x"])],
        }
    }

    pub fn build(self) -> PointTransformation {
        match self {
            Family::ShiftXByU => make_transform_4_1(),
            Family::ShiftXYByU => make_transform_4_2(),
            Family::ShiftXByUY => make_transform_4_3(),
            Family::ShiftYByUX => make_transform_4_4(),
        }
    }
}

/// ε-dependent maps of coordinates, jets and the f, g, h slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointTransformation {
    pub family: Option<Family>,
    /// x̄, ȳ, t̄, ū.
    pub base: [Expr; 4],
    /// ū_x̄, ū_ȳ, ū_t̄.
    pub jets: [Expr; 3],
    /// f̄, ḡ, h̄.
    pub funcs: [Expr; 3],
    /// Validity domain: every entry must stay away from zero.
    pub denominators: Vec<Expr>,
    /// Generator coefficients ξ whose flow (along −ξ) gives the maps.
    pub xi: [Expr; 3],
}

fn s(name: &str) -> Expr {
    Expr::sym(name)
}

fn eps() -> Expr {
    s(EPS)
}

fn m1(name: &str) -> Expr {
    parse(&format!("{name}'(u)")).expect("valid")
}

fn fn2(name: &str, second: &str, derivs: [u32; 2]) -> Expr {
    Expr::func_deriv(name, derivs.to_vec(), vec![s("u"), s(second)])
}

impl PointTransformation {
    pub fn identity() -> Self {
        PointTransformation {
            family: None,
            base: [s("x"), s("y"), s("t"), s("u")],
            jets: [s("v1"), s("v2"), s("v3")],
            funcs: [s("f"), s("g"), s("h")],
            denominators: Vec::new(),
            xi: [Expr::zero(), Expr::zero(), Expr::zero()],
        }
    }

    /// All ten maps in state order.
    pub fn maps(&self) -> Vec<&Expr> {
        self.base
            .iter()
            .chain(self.jets.iter())
            .chain(self.funcs.iter())
            .collect()
    }

    fn map_all(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        PointTransformation {
            family: self.family,
            base: std::array::from_fn(|i| f(&self.base[i])),
            jets: std::array::from_fn(|i| f(&self.jets[i])),
            funcs: std::array::from_fn(|i| f(&self.funcs[i])),
            denominators: self.denominators.iter().map(&f).collect(),
            xi: self.xi.clone(),
        }
    }

    /// Replace ε by an expression.
    pub fn at(&self, e: &Expr) -> Self {
        let pairs = [(EPS, e.clone())];
        self.map_all(|m| m.substitute_pairs(&pairs))
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &PointTransformation) -> Self {
        let map: HashMap<Symbol, Expr> = STATE
            .iter()
            .zip(self.maps())
            .map(|(n, e)| (Symbol::new(n), e.clone()))
            .collect();
        let mut out = other.map_all(|m| m.substitute(&map));
        out.denominators.extend(self.denominators.iter().cloned());
        out
    }

    /// Binding with the point and ε set.
    fn bind(&self, b: &Binding, point: &[f64; 10], eps: f64) -> Binding {
        let mut b = b.clone();
        for (n, v) in STATE.iter().zip(point) {
            b.set(n, *v);
        }
        b.set(EPS, eps);
        b
    }

    /// Smallest |denominator| at a point, or an evaluation error.
    pub fn margin(&self, b: &Binding, point: &[f64; 10], eps: f64) -> Result<f64> {
        let b = self.bind(b, point, eps);
        let mut m = f64::INFINITY;
        for d in &self.denominators {
            m = m.min(d.eval(&b)?.abs());
        }
        Ok(m)
    }

    /// Evaluates the closed-form maps.
    pub fn apply(&self, b: &Binding, point: &[f64; 10], eps: f64) -> Result<[f64; 10]> {
        let b = self.bind(b, point, eps);
        let mut out = [0.0; 10];
        for (o, m) in out.iter_mut().zip(self.maps()) {
            *o = m.eval(&b)?;
        }
        Ok(out)
    }

    /// Generators of the flow with the determining equation solved.
    pub fn generators(&self) -> Result<GeneratorSet> {
        let mut fd = FreeData::zero();
        fd.xi = self.xi.clone();
        solve_wave_determining(&fd)
    }

    pub fn lie_system(&self) -> Result<LieSystem> {
        Ok(LieSystem::from_generators(&self.generators()?))
    }
}

fn shift_family(
    family: Family,
    x_shift: Expr,
    y_shift: Expr,
    jets: [Expr; 3],
    funcs: [Expr; 3],
    den: Expr,
) -> PointTransformation {
    let norm = |e: Expr| e.normalize();
    PointTransformation {
        family: Some(family),
        base: [
            norm(s("x") - eps() * &x_shift),
            norm(s("y") - eps() * &y_shift),
            s("t"),
            s("u"),
        ],
        jets: jets.map(norm),
        funcs: funcs.map(norm),
        denominators: vec![den.normalize()],
        xi: [x_shift, y_shift, Expr::zero()],
    }
}

/// x̄ = x − εm(u).
pub fn make_transform_4_1() -> PointTransformation {
    let m = parse("m(u)").unwrap();
    let mp = m1("m");
    let den = Expr::one() - eps() * &mp * s("v1");
    let jets = [s("v1") / &den, s("v2") / &den, s("v3") / &den];
    let funcs = [
        s("f") - eps() * &mp * (s("g") * s("v2") - s("v3").pow(2)) / &den,
        s("g") / &den,
        s("h") / &den,
    ];
    shift_family(Family::ShiftXByU, m, Expr::zero(), jets, funcs, den)
}

/// x̄ = x − εm(u), ȳ = y − εp(u).
pub fn make_transform_4_2() -> PointTransformation {
    let (m, p) = (parse("m(u)").unwrap(), parse("p(u)").unwrap());
    let (mp, pp) = (m1("m"), m1("p"));
    let den = Expr::one() - eps() * (&mp * s("v1") + &pp * s("v2"));
    let jets = [s("v1") / &den, s("v2") / &den, s("v3") / &den];
    let v3sq = s("v3").pow(2);
    let funcs = [
        ((Expr::one() - eps() * &mp * s("v1")) * s("f")
            - eps() * &mp * (s("v2") * s("g") - &v3sq))
            / &den,
        ((Expr::one() - eps() * &pp * s("v2")) * s("g")
            - eps() * &pp * (s("v1") * s("f") - &v3sq))
            / &den,
        s("h") / &den,
    ];
    shift_family(Family::ShiftXYByU, m, p, jets, funcs, den)
}

/// x̄ = x − εm(u, y).
pub fn make_transform_4_3() -> PointTransformation {
    let m = fn2("m", "y", [0, 0]);
    let mu = fn2("m", "y", [1, 0]);
    let my = fn2("m", "y", [0, 1]);
    let den = Expr::one() - eps() * &mu * s("v1");
    let jets = [
        s("v1") / &den,
        (s("v2") + eps() * &my * s("v1")) / &den,
        s("v3") / &den,
    ];
    let funcs = [
        s("f") - eps() * ((&my + &mu * s("v2")) * s("g") - &mu * s("v3").pow(2)) / &den,
        s("g") / &den,
        s("h") / &den,
    ];
    shift_family(Family::ShiftXByUY, m, Expr::zero(), jets, funcs, den)
}

/// ȳ = y − εm(u, x).
pub fn make_transform_4_4() -> PointTransformation {
    let m = fn2("m", "x", [0, 0]);
    let mu = fn2("m", "x", [1, 0]);
    let mx = fn2("m", "x", [0, 1]);
    let den = Expr::one() - eps() * &mu * s("v2");
    let jets = [
        (s("v1") + eps() * &mx * s("v2")) / &den,
        s("v2") / &den,
        s("v3") / &den,
    ];
    let funcs = [
        s("f") / &den,
        s("g") - eps() * ((&mx + &mu * s("v1")) * s("f") - &mu * s("v3").pow(2)) / &den,
        s("h") / &den,
    ];
    shift_family(Family::ShiftYByUX, Expr::zero(), m, jets, funcs, den)
}

/// Autonomous ODE system d(state)/dε = rhs(state).
#[derive(Clone, Debug)]
pub struct LieSystem {
    pub rhs: [Expr; 10],
}

impl LieSystem {
    pub fn new(rhs: [Expr; 10]) -> Result<Self> {
        for v in ["x", "y", "u", "v1", "v2", "v3", "f", "g", "h"] {
            if rhs[2].contains_symbol(v) {
                return Err(Error::Input(format!("t-component depends on '{v}'")));
            }
        }
        Ok(LieSystem { rhs })
    }

    /// Flow field (−ξ¹, −ξ², −ξ³, η, ζ₁, ζ₂, ζ₃, μ¹, μ², 𝓗).
    pub fn from_generators(gs: &GeneratorSet) -> Self {
        LieSystem {
            rhs: [
                (-&gs.xi[0]).normalize(),
                (-&gs.xi[1]).normalize(),
                (-&gs.xi[2]).normalize(),
                gs.eta.clone(),
                gs.zeta[0].clone(),
                gs.zeta[1].clone(),
                gs.zeta[2].clone(),
                gs.mu[0].clone(),
                gs.mu[1].clone(),
                gs.hcal.clone(),
            ],
        }
    }

    fn field(&self, b: &mut Binding, state: &[f64; 10]) -> std::result::Result<[f64; 10], EvalError> {
        for (n, v) in STATE.iter().zip(state) {
            b.set(n, *v);
        }
        let mut out = [0.0; 10];
        for (o, r) in out.iter_mut().zip(&self.rhs) {
            *o = r.eval(b)?;
        }
        Ok(out)
    }
}

pub const DEFAULT_STEPS: usize = 1000;

/// Classical RK4 with fixed step ε/steps.
pub fn integrate_lie(
    sys: &LieSystem,
    b: &Binding,
    initial: &[f64; 10],
    eps: f64,
    steps: usize,
) -> Result<[f64; 10]> {
    let steps = steps.max(1);
    let h = eps / steps as f64;
    let mut b = b.clone();
    let mut y = *initial;
    let add = |a: &[f64; 10], k: &[f64; 10], c: f64| -> [f64; 10] {
        std::array::from_fn(|i| a[i] + c * k[i])
    };
    for n in 0..steps {
        let reached = n as f64 * h;
        let singular = |e: EvalError| Error::FlowSingular {
            eps: reached,
            message: e.to_string(),
        };
        let k1 = sys.field(&mut b, &y).map_err(singular)?;
        let k2 = sys.field(&mut b, &add(&y, &k1, h / 2.0)).map_err(singular)?;
        let k3 = sys.field(&mut b, &add(&y, &k2, h / 2.0)).map_err(singular)?;
        let k4 = sys.field(&mut b, &add(&y, &k3, h)).map_err(singular)?;
        for i in 0..10 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(y)
}

/// Jacobian `J[k][i] = D_k x̄^i` of the base maps.
fn base_jacobian(pt: &PointTransformation) -> [[Expr; 3]; 3] {
    std::array::from_fn(|k| {
        std::array::from_fn(|i| pt.base[i].total_derivative_frozen(Axis::from_index(k)))
    })
}

fn det3(m: &[[Expr; 3]; 3]) -> Expr {
    let t = |a: usize, b: usize, c: usize| &m[0][a] * &m[1][b] * &m[2][c];
    (t(0, 1, 2) + t(1, 2, 0) + t(2, 0, 1) - t(2, 1, 0) - t(0, 2, 1) - t(1, 0, 2)).normalize()
}

/// Solves `J v̄ = rhs` by Cramer's rule.
fn cramer(m: &[[Expr; 3]; 3], rhs: &[Expr; 3]) -> [Expr; 3] {
    let d = det3(m);
    std::array::from_fn(|i| {
        let mut mi = m.clone();
        for k in 0..3 {
            mi[k][i] = rhs[k].clone();
        }
        (det3(&mi) / &d).normalize()
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct JetMapReport {
    /// v̄ recomputed by the chain rule.
    pub recomputed: Vec<String>,
    /// Stored minus recomputed jet maps, normalized.
    pub jet_residuals: Vec<String>,
    /// Stored f̄, ḡ, h̄ minus the divergence-form transformation
    /// (1/Δ)(D_j x̄^i)Σ^j, h/Δ.
    pub function_residuals: Vec<String>,
    pub passed: bool,
}

/// Recomputes the jet maps from the base maps and compares them with the
/// stored ones; also checks f̄, ḡ, h̄ against the divergence-form rule.
/// Valid for maps with ū = u.
pub fn induced_jet_map(pt: &PointTransformation) -> Result<JetMapReport> {
    if !pt.base[3].equivalent(&s("u")) {
        return Err(Error::Input("induced_jet_map expects u to be unchanged".into()));
    }
    let jac = base_jacobian(pt);
    let du: [Expr; 3] = std::array::from_fn(|k| pt.base[3].total_derivative_frozen(Axis::from_index(k)));
    let vbar = cramer(&jac, &du);
    let jet_res: Vec<Expr> = (0..3)
        .map(|i| (&pt.jets[i] - &vbar[i]).normalize())
        .collect();
    let delta = det3(&jac);
    let sigma = [s("f"), s("g"), -s("v3")];
    let mut fun_res = Vec::new();
    for i in 0..2 {
        let mut e = Expr::zero();
        for (row, sj) in jac.iter().zip(&sigma) {
            e = e + &row[i] * sj;
        }
        fun_res.push((&pt.funcs[i] - e / &delta).normalize());
    }
    fun_res.push((&pt.funcs[2] - s("h") / &delta).normalize());
    let passed = jet_res.iter().chain(&fun_res).all(Expr::is_zero);
    Ok(JetMapReport {
        recomputed: vbar.iter().map(|e| e.to_string()).collect(),
        jet_residuals: jet_res.iter().map(|e| e.to_string()).collect(),
        function_residuals: fun_res.iter().map(|e| e.to_string()).collect(),
        passed,
    })
}

/// The transformed member written in the barred variables (printed with
/// the plain symbol names).
/// `pt` must still carry ε symbolically; the inverse is its value at −ε.
pub fn transform_member(m: &FamilyMember, pt: &PointTransformation) -> Result<FamilyMember> {
    let identity = PointTransformation::identity();
    if !pt.maps().iter().any(|e| e.contains_symbol(EPS)) && pt.maps() != identity.maps() {
        return Err(Error::Input("transformation has no free eps to invert".into()));
    }
    let slots = [("f", m.f.clone()), ("g", m.g.clone()), ("h", m.h.clone())];
    let inverse = pt.at(&(-eps()));
    let inv: HashMap<Symbol, Expr> = STATE[..7]
        .iter()
        .zip(inverse.maps())
        .map(|(n, e)| (Symbol::new(n), e.clone()))
        .collect();
    let mut out = Vec::new();
    for fbar in &pt.funcs {
        let e = fbar.substitute_pairs(&slots);
        out.push(e.substitute(&inv).try_normalize()?);
    }
    let [f, g, h]: [Expr; 3] = out.try_into().unwrap();
    FamilyMember::new(f, g, h)
}

/// Polynomial of degree ≤ 2 in one or two arguments; derivatives exact.
#[derive(Clone, Debug)]
pub struct Quadratic {
    /// 1-arg: [c0, c1, c2]; 2-arg: [c00, c10, c01, c20, c11, c02].
    pub coeffs: Vec<f64>,
}

impl Quadratic {
    pub fn random(rng: &mut impl Rng, arity: usize) -> Self {
        let n = if arity == 1 { 3 } else { 6 };
        Quadratic {
            coeffs: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }
}

impl NumericFunction for Quadratic {
    fn eval(&self, args: &[f64], d: &[u32]) -> std::result::Result<f64, EvalError> {
        let c = &self.coeffs;
        let v = match (args, d) {
            ([a], [0]) => c[0] + c[1] * a + c[2] * a * a,
            ([a], [1]) => c[1] + 2.0 * c[2] * a,
            ([_], [2]) => 2.0 * c[2],
            ([_], [_]) => 0.0,
            ([a, b], [0, 0]) => {
                c[0] + c[1] * a + c[2] * b + c[3] * a * a + c[4] * a * b + c[5] * b * b
            }
            ([a, b], [1, 0]) => c[1] + 2.0 * c[3] * a + c[4] * b,
            ([a, b], [0, 1]) => c[2] + c[4] * a + 2.0 * c[5] * b,
            ([_, _], [2, 0]) => 2.0 * c[3],
            ([_, _], [1, 1]) => c[4],
            ([_, _], [0, 2]) => 2.0 * c[5],
            ([_, _], [_, _]) => 0.0,
            _ => {
                return Err(EvalError::DerivativeUnavailable {
                    name: "quadratic".into(),
                    index: d.to_vec(),
                })
            }
        };
        Ok(v)
    }
}

/// Uniform sampling box for random jet points.
pub fn random_point(rng: &mut impl Rng) -> [f64; 10] {
    std::array::from_fn(|i| match i {
        0..=3 => rng.gen_range(-1.0..1.0),
        4..=6 => rng.gen_range(-0.5..0.5),
        _ => rng.gen_range(-1.0..1.0),
    })
}

/// Functions and ε for a sampling run; `None` entries are drawn at random
/// per sample.
#[derive(Clone, Default)]
pub struct SampleSpec {
    pub functions: Option<Binding>,
    pub eps: Option<f64>,
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn random_functions(pt: &PointTransformation, rng: &mut impl Rng) -> Binding {
    let mut b = Binding::new();
    if let Some(fam) = pt.family {
        for (name, params) in fam.function_slots() {
            b.set_function(name, Arc::new(Quadratic::random(rng, params.len())));
        }
    }
    b
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub max_deviation: f64,
    pub samples: usize,
    pub singular_rejections: usize,
}

const MAX_ATTEMPTS: usize = 10_000;

/// Checks `R̄·Δ = R` at random jet points, where `R = D_x f + D_y g + h − u_tt`
/// is the residual of the member, `R̄` the residual of the transformed
/// member in the barred variables and `Δ = det(D_k x̄^i)`.
pub fn verify_invariance(
    m: &FamilyMember,
    pt: &PointTransformation,
    samples: usize,
    seed: u64,
    spec: &SampleSpec,
) -> Result<InvarianceReport> {
    let slots = [("f", m.f.clone()), ("g", m.g.clone()), ("h", m.h.clone())];
    let fbar: Vec<Expr> = pt.funcs.iter().map(|e| e.substitute_pairs(&slots)).collect();
    let full = |e: &Expr| -> [Expr; 3] { std::array::from_fn(|k| e.total_derivative_full(Axis::from_index(k))) };
    let original = (m.f.total_derivative_full(Axis::X) + m.g.total_derivative_full(Axis::Y) + &m.h
        - s("w33"))
    .normalize();
    let d_f = full(&fbar[0]);
    let d_g = full(&fbar[1]);
    let d_v3 = full(&pt.jets[2]);
    let jac = base_jacobian(pt);
    let extra = ["w11", "w12", "w13", "w22", "w23", "w33"];

    let run = |index: usize| -> Result<(f64, usize)> {
        let mut rng = sample_rng(seed, index as u64);
        for attempt in 0..MAX_ATTEMPTS {
            let mut b = match &spec.functions {
                Some(b) => b.clone(),
                None => random_functions(pt, &mut rng),
            };
            let eps = spec.eps.unwrap_or_else(|| rng.gen_range(0.01..0.3));
            let p = random_point(&mut rng);
            for (n, v) in STATE.iter().zip(&p) {
                b.set(n, *v);
            }
            for n in extra {
                b.set(n, rng.gen_range(-0.5..0.5));
            }
            b.set(EPS, eps);
            let ev = |e: &Expr| e.eval(&b);
            let jt: Vec<f64> = match jac.iter().flatten().map(ev).collect() {
                Ok(v) => v,
                Err(_) => continue,
            };
            let jt = [[jt[0], jt[1], jt[2]], [jt[3], jt[4], jt[5]], [jt[6], jt[7], jt[8]]];
            let det = det3f(&jt);
            let margin = pt
                .denominators
                .iter()
                .map(|d| ev(d).map(f64::abs))
                .try_fold(det.abs(), |acc, r| r.map(|v| acc.min(v)));
            match margin {
                Ok(mg) if mg >= SAMPLE_MARGIN => {}
                _ => continue,
            }
            let inv = inv3f(&jt, det);
            let vals = (|| -> std::result::Result<_, EvalError> {
                let df: Vec<f64> = d_f.iter().map(ev).collect::<std::result::Result<_, _>>()?;
                let dg: Vec<f64> = d_g.iter().map(ev).collect::<std::result::Result<_, _>>()?;
                let dv: Vec<f64> = d_v3.iter().map(ev).collect::<std::result::Result<_, _>>()?;
                Ok((df, dg, dv, ev(&fbar[2])?, ev(&original)?))
            })();
            let Ok((df, dg, dv, hbar, r)) = vals else { continue };
            let bar = |i: usize, d: &[f64]| (0..3).map(|k| inv[i][k] * d[k]).sum::<f64>();
            let rbar = bar(0, &df) + bar(1, &dg) + hbar - bar(2, &dv);
            return Ok(((rbar * det - r).abs(), attempt));
        }
        Err(Error::Verification(format!(
            "no nonsingular sample found for index {index}"
        )))
    };
    let results: Vec<(f64, usize)> = (0..samples)
        .into_par_iter()
        .map(run)
        .collect::<Result<_>>()?;
    Ok(InvarianceReport {
        max_deviation: results.iter().map(|r| r.0).fold(0.0, f64::max),
        samples,
        singular_rejections: results.iter().map(|r| r.1).sum(),
    })
}

fn det3f(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse of `J`, indexed `[i][k]` so that `D̄_i = Σ_k inv[i][k] D_k`.
fn inv3f(m: &[[f64; 3]; 3], det: f64) -> [[f64; 3]; 3] {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    [
        [c(1, 2, 1, 2) / det, -c(0, 2, 1, 2) / det, c(0, 1, 1, 2) / det],
        [-c(1, 2, 0, 2) / det, c(0, 2, 0, 2) / det, -c(0, 1, 0, 2) / det],
        [c(1, 2, 0, 1) / det, -c(0, 2, 0, 1) / det, c(0, 1, 0, 1) / det],
    ]
}

/// JSON transform specification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransformSpec {
    pub family: Family,
    #[serde(default)]
    pub functions: std::collections::BTreeMap<String, String>,
    pub eps: f64,
}

impl TransformSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: TransformSpec = serde_json::from_str(text)?;
        if !spec.eps.is_finite() {
            return Err(Error::Input("eps must be finite".into()));
        }
        spec.binding()?;
        Ok(spec)
    }

    pub fn transformation(&self) -> PointTransformation {
        self.family.build()
    }

    /// Numeric bindings of the family's functions; unspecified ones are
    /// rejected.
    pub fn binding(&self) -> Result<Binding> {
        let mut b = Binding::new();
        for (name, params) in self.family.function_slots() {
            let text = self
                .functions
                .get(name)
                .ok_or_else(|| Error::Input(format!("missing function '{name}'")))?;
            let body = parse(text)?;
            for sym in body.symbols() {
                if !params.contains(&sym.name()) {
                    return Err(Error::Input(format!(
                        "function '{name}' may only use {params:?}, found '{}'",
                        sym.name()
                    )));
                }
            }
            b.set_function(name, Arc::new(ExprFunction::new(&params, body)));
        }
        for k in self.functions.keys() {
            if !self.family.function_slots().iter().any(|(n, _)| n == k) {
                return Err(Error::Input(format!("unexpected function '{k}'")));
            }
        }
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::UnaryFunction;
    use crate::family::is_linear;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn identity_at_zero() {
        for fam in Family::ALL {
            let pt = fam.build().at(&Expr::zero());
            for (m, n) in pt.maps().iter().zip(STATE) {
                assert_eq!(**m, Expr::sym(n), "{}", fam.label());
            }
        }
    }

    #[test]
    fn shift_by_identity_function() {
        let pt = make_transform_4_1();
        let b = Binding::new().with_function("m", UnaryFunction::new("id", |u| u, |_| 1.0, |_| 0.0));
        let out = pt
            .apply(&b, &[1.0, 0.0, 2.0, 3.0, 0.5, 0.2, 0.1, 0.0, 0.0, 0.0], 0.1)
            .unwrap();
        assert!((out[0] - 0.7).abs() < 1e-15);
        assert!((out[4] - 0.5 / 0.95).abs() < 1e-15);
        assert!((out[6] - 0.1 / 0.95).abs() < 1e-15);
        let err = pt.apply(&b, &[1.0, 0.0, 2.0, 3.0, 10.0, 0.2, 0.1, 0.0, 0.0, 0.0], 0.1);
        assert!(err.is_err());
    }

    #[test]
    fn flow_matches_closed_form() {
        let pt = make_transform_4_1();
        let b = Binding::new().with_function("m", UnaryFunction::new("id", |u| u, |_| 1.0, |_| 0.0));
        let p0 = [1.0, 0.0, 2.0, 3.0, 0.5, 0.2, 0.1, 0.3, -0.2, 0.4];
        let flow = integrate_lie(&pt.lie_system().unwrap(), &b, &p0, 0.1, DEFAULT_STEPS).unwrap();
        let exact = pt.apply(&b, &p0, 0.1).unwrap();
        for i in 0..10 {
            assert!((flow[i] - exact[i]).abs() < 1e-8, "{i}");
        }
    }

    #[test]
    fn constant_time_flow() {
        let mut rhs: [Expr; 10] = std::array::from_fn(|_| Expr::zero());
        rhs[2] = Expr::one();
        let sys = LieSystem::new(rhs).unwrap();
        let p0 = [0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let out = integrate_lie(&sys, &Binding::new(), &p0, 0.5, 4).unwrap();
        assert_eq!(out[2], 0.75);
        let zero = LieSystem::new(std::array::from_fn(|_| Expr::zero())).unwrap();
        assert_eq!(integrate_lie(&zero, &Binding::new(), &p0, 0.5, 10).unwrap(), p0);
        let mut bad: [Expr; 10] = std::array::from_fn(|_| Expr::zero());
        bad[2] = Expr::sym("x");
        assert!(LieSystem::new(bad).is_err());
    }

    #[test]
    fn two_function_family_reduces() {
        let a = make_transform_4_2().maps().into_iter().cloned().collect::<Vec<_>>();
        let b = make_transform_4_1();
        for (x, y) in a.iter().zip(b.maps()) {
            let x = x.substitute_function("p", &["u"], &Expr::zero());
            assert_eq!(&x, y);
        }
    }

    #[test]
    fn uy_family_reduces_without_y() {
        let a = make_transform_4_3();
        let b = make_transform_4_1();
        for (x, y) in a.maps().into_iter().zip(b.maps()) {
            let x = x.substitute_function("m", &["u", "y"], &p("m(u)"));
            assert_eq!(&x, y);
        }
    }

    #[test]
    fn ux_family_mirrors() {
        let a = make_transform_4_4();
        let b = make_transform_4_1();
        let swap = |e: &Expr| {
            e.substitute_function("m", &["u", "x"], &p("m(u)")).substitute_pairs(&[
                ("x", p("y")),
                ("y", p("x")),
                ("v1", p("u_y")),
                ("v2", p("u_x")),
                ("f", p("g")),
                ("g", p("f")),
            ])
        };
        let order = [1, 0, 2, 3, 5, 4, 6, 8, 7, 9];
        let am = a.maps();
        for (i, y) in b.maps().into_iter().enumerate() {
            assert_eq!(&swap(am[order[i]]), y, "{i}");
        }
    }

    #[test]
    fn jet_maps_certified() {
        for fam in Family::ALL {
            let r = induced_jet_map(&fam.build()).unwrap();
            assert!(r.passed, "{}: {r:?}", fam.label());
        }
        assert!(induced_jet_map(&PointTransformation::identity()).unwrap().passed);
        let r = induced_jet_map(&make_transform_4_1()).unwrap();
        assert_eq!(p(&r.recomputed[0]), p("u_x/(1 - eps*m'(u)*u_x)"));
    }

    #[test]
    fn printed_readings_of_uy_and_ux_families_fail() {
        let mut pt = make_transform_4_3();
        let mu = fn2("m", "y", [1, 0]);
        let den = Expr::one() - eps() * &mu * s("v1");
        pt.jets[1] = (s("v2") / &den).normalize();
        assert!(!induced_jet_map(&pt).unwrap().passed);

        let mut pt = make_transform_4_4();
        let mu = fn2("m", "x", [1, 0]);
        let mx = fn2("m", "x", [0, 1]);
        let den = Expr::one() - eps() * &mu * s("v2");
        pt.funcs[1] = (s("g")
            - eps() * ((&mx + &mu) * s("v1") * s("f") + &mu * s("v3").pow(2)) / &den)
            .normalize();
        assert!(!induced_jet_map(&pt).unwrap().passed);
    }

    #[test]
    fn example_one() {
        let m = FamilyMember::from_strs("u_x", "0", "0").unwrap();
        let out = transform_member(&m, &make_transform_4_1()).unwrap();
        assert_eq!(out.f, p("(eps*m'(u)*u_t^2 + u_x)/(1 + eps*m'(u)*u_x)"));
        assert!(out.g.is_zero() && out.h.is_zero());
        let same = transform_member(&m, &PointTransformation::identity()).unwrap();
        assert_eq!(same, m);
        let fixed = make_transform_4_1().at(&Expr::frac(1, 10));
        assert!(transform_member(&m, &fixed).is_err());
    }

    #[test]
    fn linear_member_becomes_nonlinear() {
        let m = FamilyMember::from_strs("u_x", "u_y", "0").unwrap();
        let out = transform_member(&m, &make_transform_4_2()).unwrap();
        assert!(!is_linear(&out));
    }

    #[test]
    fn group_law_symbolic() {
        for fam in Family::ALL {
            let pt = fam.build();
            let (e1, e2) = (s("eps1"), s("eps2"));
            let composed = pt.at(&e1).then(&pt.at(&e2));
            let direct = pt.at(&(&e1 + &e2));
            for (a, b) in composed.maps().into_iter().zip(direct.maps()) {
                assert!(a.equivalent(b), "{}", fam.label());
            }
        }
    }

    #[test]
    fn invariance_identity_and_example() {
        let m = FamilyMember::from_strs("u_x", "0", "0").unwrap();
        let spec = SampleSpec {
            functions: Some(Binding::new().with_function("m", UnaryFunction::square())),
            eps: Some(0.1),
        };
        let r = verify_invariance(&m, &make_transform_4_1(), 50, 7, &spec).unwrap();
        assert!(r.max_deviation <= 1e-9, "{r:?}");
        let r = verify_invariance(&m, &PointTransformation::identity(), 10, 7, &SampleSpec::default())
            .unwrap();
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn spec_json() {
        let spec = TransformSpec::from_json(r#"{"family":"4.3","functions":{"m":"u*y"},"eps":0.1}"#)
            .unwrap();
        assert_eq!(spec.family, Family::ShiftXByUY);
        assert!(TransformSpec::from_json(r#"{"family":"4.3","functions":{"m":"u*x"},"eps":0.1}"#).is_err());
        assert!(TransformSpec::from_json(r#"{"family":"4.1","functions":{},"eps":0.1}"#).is_err());
        assert!(TransformSpec::from_json(r#"{"family":"5","eps":0.1}"#).is_err());
    }
}
