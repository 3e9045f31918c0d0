//! Prolonged equivalence generators of the wave family.
//!
//! Coefficients are written with ξ, the flow itself moves the coordinates
//! along −ξ (see [`crate::transform`]). With `D_i = ∂_i + v_i ∂_u`:
//!
//! ```text
//! ζ_i = D_i η + (D_i ξ^j) v_j
//! μ^i = (w + ξ^j_u v_j) Σ^i − (D_j ξ^i) Σ^j + α^{ij} v_j + β^i,   Σ = (f, g, −u_t)
//! 𝓗   = (w + ξ^j_u v_j) h − D_i μ^i
//! ```
//!
//! In `D_i μ^i` only the explicit (x, y, t, u) dependence is differentiated.

use serde_json::{json, Value};

use crate::expr::{Axis, Expr, SymbolKind};
use crate::{Error, Result};

const BASE: [&str; 4] = ["x", "y", "t", "u"];

/// Opaque function of the named base coordinates.
pub fn base_fn(name: &str, args: &[&str]) -> Expr {
    Expr::func(name, args.iter().map(|a| Expr::sym(a)).collect())
}

fn v(j: usize) -> Expr {
    Expr::sym(Axis::from_index(j).jet())
}

/// Free functions of the general generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeData {
    pub xi: [Expr; 3],
    pub eta: Expr,
    pub w: Expr,
    /// α¹¹, α²², α³³.
    pub alpha_diag: [Expr; 3],
    pub alpha12: Expr,
    pub alpha13: Expr,
    pub alpha23: Expr,
    pub beta: [Expr; 3],
    pub lambda: Expr,
    pub gamma: Expr,
}

impl FreeData {
    pub fn zero() -> Self {
        let z = Expr::zero;
        FreeData {
            xi: [z(), z(), z()],
            eta: z(),
            w: z(),
            alpha_diag: [z(), z(), z()],
            alpha12: z(),
            alpha13: z(),
            alpha23: z(),
            beta: [z(), z(), z()],
            lambda: z(),
            gamma: z(),
        }
    }

    /// Every slot an opaque function of its full argument list.
    pub fn generic() -> Self {
        let b = |n: &str| base_fn(n, &BASE);
        FreeData {
            xi: [b("xi1"), b("xi2"), b("xi3")],
            eta: b("eta"),
            w: b("w"),
            alpha_diag: [b("alpha11"), b("alpha22"), b("alpha33")],
            alpha12: b("alpha12"),
            alpha13: b("alpha13"),
            alpha23: b("alpha23"),
            beta: [b("beta1"), b("beta2"), b("beta3")],
            lambda: base_fn("lambda", &["x", "y"]),
            gamma: base_fn("gamma", &["x", "y", "t"]),
        }
    }

    /// α^{ij} with α^{ji} = −α^{ij} off the diagonal; indices are 0-based.
    pub fn alpha(&self, i: usize, j: usize) -> Expr {
        match (i, j) {
            _ if i == j => self.alpha_diag[i].clone(),
            (0, 1) => self.alpha12.clone(),
            (0, 2) => self.alpha13.clone(),
            (1, 2) => self.alpha23.clone(),
            _ => -self.alpha(j, i),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut base: Vec<(String, &Expr)> = vec![
            ("xi1".into(), &self.xi[0]),
            ("xi2".into(), &self.xi[1]),
            ("xi3".into(), &self.xi[2]),
            ("eta".into(), &self.eta),
            ("w".into(), &self.w),
            ("alpha12".into(), &self.alpha12),
            ("alpha13".into(), &self.alpha13),
            ("alpha23".into(), &self.alpha23),
        ];
        for i in 0..3 {
            base.push((format!("alpha{0}{0}", i + 1), &self.alpha_diag[i]));
            base.push((format!("beta{}", i + 1), &self.beta[i]));
        }
        for (name, e) in base {
            check_args(&name, e, &BASE)?;
        }
        check_args("lambda", &self.lambda, &["x", "y"])?;
        check_args("gamma", &self.gamma, &["x", "y", "t"])
    }
}

fn check_args(field: &str, e: &Expr, allowed: &[&str]) -> Result<()> {
    for s in e.symbols() {
        let ok = match s.kind() {
            SymbolKind::IndependentCoordinate | SymbolKind::DependentVariable => {
                allowed.contains(&s.name())
            }
            SymbolKind::GroupParameter => true,
            _ => false,
        };
        if !ok {
            return Err(Error::Dependence {
                field: field.to_string(),
                symbol: s.name().to_string(),
            });
        }
    }
    Ok(())
}

/// Coefficients of the prolonged vector field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSet {
    pub xi: [Expr; 3],
    pub eta: Expr,
    pub zeta: [Expr; 3],
    /// μ¹, μ² and the balance-form μ³.
    pub mu: [Expr; 3],
    pub hcal: Expr,
    /// The free data the set was built from, with solved slots filled in.
    pub free: FreeData,
}

fn sigma_slots() -> [Expr; 3] {
    [Expr::sym("f"), Expr::sym("g"), -Expr::sym("v3")]
}

/// w + ξ^j_u v_j
fn dilation(fd: &FreeData) -> Expr {
    let mut e = fd.w.clone();
    for j in 0..3 {
        e = e + fd.xi[j].partial("u") * v(j);
    }
    e
}

/// Generator coefficients straight from the general formulas.
pub fn build_general(fd: &FreeData) -> Result<GeneratorSet> {
    fd.validate()?;
    let dxi: Vec<Vec<Expr>> = (0..3)
        .map(|j| {
            Axis::ALL
                .iter()
                .map(|&a| fd.xi[j].total_derivative_frozen(a))
                .collect()
        })
        .collect();
    let zeta: [Expr; 3] = std::array::from_fn(|i| {
        let mut e = fd.eta.total_derivative_frozen(Axis::from_index(i));
        for (j, row) in dxi.iter().enumerate() {
            e = e + &row[i] * v(j);
        }
        e.normalize()
    });
    let sigma = sigma_slots();
    let dil = dilation(fd);
    let mu: [Expr; 3] = std::array::from_fn(|i| {
        let mut e = &dil * &sigma[i] + &fd.beta[i];
        for j in 0..3 {
            e = e - &dxi[i][j] * &sigma[j] + fd.alpha(i, j) * v(j);
        }
        e.normalize()
    });
    let hcal = hcal_from(fd, &mu);
    Ok(GeneratorSet {
        xi: fd.xi.clone(),
        eta: fd.eta.clone(),
        zeta,
        mu,
        hcal,
        free: fd.clone(),
    })
}

fn hcal_from(fd: &FreeData, mu: &[Expr; 3]) -> Expr {
    let mut e = dilation(fd) * Expr::sym("h");
    for (i, m) in mu.iter().enumerate() {
        e = e - m.total_derivative_frozen(Axis::from_index(i));
    }
    e.normalize()
}

/// ζ₃ + μ³, normalized.
pub fn determining_residual(gs: &GeneratorSet) -> Expr {
    (&gs.zeta[2] + &gs.mu[2]).normalize()
}

/// Imposes ξ³ = ξ³(t), α¹³ = ξ¹_t, α²³ = ξ²_t, β³ = −η_t and
/// w = α³³ + 2ξ̇³ + η_u, then checks ζ₃ + μ³ = 0. Supplied values of the
/// solved slots are replaced.
pub fn solve_wave_determining(fd: &FreeData) -> Result<GeneratorSet> {
    fd.validate()?;
    for s in ["x", "y", "u"] {
        let d = fd.xi[2].partial(s);
        if !d.is_zero() {
            return Err(Error::Verification(format!(
                "xi3 must depend on t only, but d(xi3)/d{s} = {d}"
            )));
        }
    }
    let mut solved = fd.clone();
    solved.alpha13 = fd.xi[0].partial("t");
    solved.alpha23 = fd.xi[1].partial("t");
    solved.beta[2] = -fd.eta.partial("t");
    solved.w = (&fd.alpha_diag[2] + Expr::int(2) * fd.xi[2].partial("t") + fd.eta.partial("u"))
        .normalize();
    let gs = build_general(&solved)?;
    let r = determining_residual(&gs);
    if !r.is_zero() {
        return Err(Error::Verification(format!("zeta3 + mu3 = {r}")));
    }
    Ok(gs)
}

/// 𝓗 recomputed from the set's coefficients.
pub fn compute_h(gs: &GeneratorSet) -> Expr {
    hcal_from(&gs.free, &gs.mu)
}

/// Names of the extended-manifold coordinates.
pub mod ext {
    /// s^i_j = ∂Σ^i/∂x^j.
    pub fn s_lower(i: usize, j: usize) -> String {
        format!("s{}_{}", i + 1, j + 1)
    }
    /// σ^i = ∂Σ^i/∂u.
    pub fn sigma(i: usize) -> String {
        format!("sigma{}", i + 1)
    }
    /// s^{ij} = ∂Σ^i/∂v_j.
    pub fn s_upper(i: usize, j: usize) -> String {
        format!("s{}{}", i + 1, j + 1)
    }
    /// t_j = ∂h/∂x^j.
    pub fn t_lower(j: usize) -> String {
        format!("t_{}", j + 1)
    }
    /// t^j = ∂h/∂v_j.
    pub fn t_upper(j: usize) -> String {
        format!("tv{}", j + 1)
    }
    pub const TAU: &str = "tau";
}

/// Components attached to s^i_j, σ^i, s^{ij}, t_j, τ, t^j.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditionalComponents {
    pub s_lower: [[Expr; 3]; 2],
    pub s_cal: [Expr; 2],
    pub s_upper: [[Expr; 3]; 2],
    pub t_lower: [Expr; 3],
    pub t_cal: Expr,
    pub t_upper: [Expr; 3],
    /// F¹, F².
    pub f: [Expr; 2],
    pub g: Expr,
}

fn s(name: &str) -> Expr {
    Expr::sym(name)
}

/// F^i = −s^i_j ξ^j − σ^i η − s^{ij} ζ_j + μ^i for i = 1, 2.
pub fn f_component(gs: &GeneratorSet, i: usize) -> Expr {
    let mut e = gs.mu[i].clone() - s(&ext::sigma(i)) * &gs.eta;
    for j in 0..3 {
        e = e - s(&ext::s_lower(i, j)) * &gs.xi[j] - s(&ext::s_upper(i, j)) * &gs.zeta[j];
    }
    e.normalize()
}

/// G = −t_j ξ^j − τ η − t^j ζ_j + 𝓗.
pub fn g_component(gs: &GeneratorSet) -> Expr {
    let mut e = gs.hcal.clone() - s(ext::TAU) * &gs.eta;
    for j in 0..3 {
        e = e - s(&ext::t_lower(j)) * &gs.xi[j] - s(&ext::t_upper(j)) * &gs.zeta[j];
    }
    e.normalize()
}

/// ∂E/∂var + ∂E/∂f·a¹ + ∂E/∂g·a² + ∂E/∂h·b, with (a¹, a², b) the matching
/// extended coordinates.
fn chain(e: &Expr, var: &str, a1: &str, a2: &str, b: &str) -> Expr {
    (e.partial(var) + e.partial("f") * s(a1) + e.partial("g") * s(a2) + e.partial("h") * s(b))
        .normalize()
}

pub fn additional_components(gs: &GeneratorSet) -> AdditionalComponents {
    let f = [f_component(gs, 0), f_component(gs, 1)];
    let g = g_component(gs);
    let s_lower = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            chain(
                &f[i],
                Axis::from_index(j).coordinate(),
                &ext::s_lower(0, j),
                &ext::s_lower(1, j),
                &ext::t_lower(j),
            )
        })
    });
    let s_cal =
        std::array::from_fn(|i| chain(&f[i], "u", &ext::sigma(0), &ext::sigma(1), ext::TAU));
    let s_upper = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            chain(
                &f[i],
                Axis::from_index(j).jet(),
                &ext::s_upper(0, j),
                &ext::s_upper(1, j),
                &ext::t_upper(j),
            )
        })
    });
    let t_lower = std::array::from_fn(|j| {
        chain(
            &g,
            Axis::from_index(j).coordinate(),
            &ext::s_lower(0, j),
            &ext::s_lower(1, j),
            &ext::t_lower(j),
        )
    });
    let t_cal = chain(&g, "u", &ext::sigma(0), &ext::sigma(1), ext::TAU);
    let t_upper = std::array::from_fn(|j| {
        chain(
            &g,
            Axis::from_index(j).jet(),
            &ext::s_upper(0, j),
            &ext::s_upper(1, j),
            &ext::t_upper(j),
        )
    });
    AdditionalComponents {
        s_lower,
        s_cal,
        s_upper,
        t_lower,
        t_cal,
        t_upper,
        f,
        g,
    }
}

impl GeneratorSet {
    fn entries(&self) -> Vec<(&'static str, &Expr)> {
        vec![
            ("xi1", &self.xi[0]),
            ("xi2", &self.xi[1]),
            ("xi3", &self.xi[2]),
            ("eta", &self.eta),
            ("zeta1", &self.zeta[0]),
            ("zeta2", &self.zeta[1]),
            ("zeta3", &self.zeta[2]),
            ("mu1", &self.mu[0]),
            ("mu2", &self.mu[1]),
            ("H", &self.hcal),
        ]
    }

    pub fn report_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        for (k, e) in self.entries() {
            map.insert(k.to_string(), json!(e.to_string()));
        }
        Value::Object(map)
    }

    pub fn report_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, e)| format!("{k} = {e}\n"))
            .collect()
    }
}
