//! Transport of exact solutions through point transformations: implicit
//! relations, pointwise Newton solves and finite-difference certificates.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::expr::{parse, Binding, EvalError, Expr, NumericFunction};
use crate::family::{residual, FamilyMember};
use crate::transform::{Family, PointTransformation, EPS};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 20;
pub const DEFAULT_H: f64 = 1e-3;
pub const DEFAULT_GRID: usize = 21;
pub const DEGENERATE: f64 = 1e-12;

/// Extra Newton steps allowed after the tolerance is met.
const POLISH_STEPS: usize = 3;

/// u = ψ(y)(t − x) + φ(y)(t + x).
#[derive(Clone)]
pub struct DAlembert {
    pub psi: Arc<dyn NumericFunction>,
    pub phi: Arc<dyn NumericFunction>,
}

pub fn dalembert(psi: Arc<dyn NumericFunction>, phi: Arc<dyn NumericFunction>) -> DAlembert {
    DAlembert { psi, phi }
}

impl DAlembert {
    pub fn expr(&self) -> Expr {
        parse("psi(y)*(t - x) + phi(y)*(t + x)").expect("valid")
    }

    pub fn binding(&self) -> Binding {
        let mut b = Binding::new();
        b.set_function("psi", self.psi.clone());
        b.set_function("phi", self.phi.clone());
        b
    }

    fn at(&self, f: &Arc<dyn NumericFunction>, y: f64, d: u32) -> Result<f64> {
        Ok(f.eval(&[y], &[d])?)
    }

    pub fn value(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        Ok(self.at(&self.psi, y, 0)? * (t - x) + self.at(&self.phi, y, 0)? * (t + x))
    }

    /// (u_x, u_y, u_t).
    pub fn gradient(&self, x: f64, y: f64, t: f64) -> Result<[f64; 3]> {
        let (ps, ph) = (self.at(&self.psi, y, 0)?, self.at(&self.phi, y, 0)?);
        Ok([
            ph - ps,
            self.at(&self.psi, y, 1)? * (t - x) + self.at(&self.phi, y, 1)? * (t + x),
            ps + ph,
        ])
    }

    /// u_xx − u_tt, identically zero.
    pub fn wave_residual(&self, _x: f64, _y: f64, _t: f64) -> f64 {
        0.0
    }
}

/// F(x̄, ȳ, t̄, ū) = 0 with bound functions and ε.
#[derive(Clone, Debug)]
pub struct ImplicitSolution {
    pub relation: Expr,
    pub derivative: Expr,
    /// Solution of the source member evaluated at the ε = 0 seed.
    pub seed: Expr,
    pub binding: Binding,
    pub eps: f64,
    pub family: Option<Family>,
}

impl ImplicitSolution {
    /// True when the construction goes beyond the single worked example
    /// (anything but the x̄ = x − εm(u) family).
    pub fn is_extension(&self) -> bool {
        !matches!(self.family, Some(Family::ShiftXByU) | None)
    }

    fn bind(&self, p: [f64; 3]) -> Binding {
        let mut b = self.binding.clone();
        b.set("x", p[0]);
        b.set("y", p[1]);
        b.set("t", p[2]);
        b
    }

    /// Initial guess from the untransformed solution.
    pub fn seed_value(&self, p: [f64; 3]) -> Result<f64> {
        Ok(self.seed.eval(&self.bind(p))?)
    }
}

/// Substitutes the inverse base map into `u = sol(x, y, t)`; `binding`
/// carries the source solution's functions and those of `pt`.
pub fn transport_solution(
    sol: &Expr,
    pt: &PointTransformation,
    binding: &Binding,
    eps: f64,
) -> Result<ImplicitSolution> {
    if !pt.base[3].equivalent(&Expr::sym("u")) {
        return Err(Error::Input("transport expects u to be unchanged".into()));
    }
    if sol.contains_symbol("u") || sol.contains_symbol(EPS) {
        return Err(Error::Input("source solution must be explicit in x, y, t".into()));
    }
    let inverse = pt.at(&(-Expr::sym(EPS)));
    let pairs = [
        ("x", inverse.base[0].clone()),
        ("y", inverse.base[1].clone()),
        ("t", inverse.base[2].clone()),
    ];
    let relation = (Expr::sym("u") - sol.substitute_pairs(&pairs)).normalize();
    let derivative = relation.partial("u");
    let mut binding = binding.clone();
    binding.set(EPS, eps);
    Ok(ImplicitSolution {
        relation,
        derivative,
        seed: sol.clone(),
        binding,
        eps,
        family: pt.family,
    })
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum NewtonError {
    #[error("no convergence after {iterations} iterations (|F| = {residual:e})")]
    Diverged { iterations: usize, residual: f64 },
    #[error("degenerate branch: |dF/du| < 1e-12 at u = {u}")]
    Degenerate { u: f64 },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub u: f64,
    /// Steps taken until |F| ≤ tol.
    pub iterations: usize,
    pub residual: f64,
}

/// Solves F(ū) = 0 at a point, then polishes to machine precision.
pub fn newton_solve(
    imp: &ImplicitSolution,
    point: [f64; 3],
    guess: f64,
    tol: f64,
    max_iter: usize,
) -> std::result::Result<NewtonOutcome, NewtonError> {
    let mut b = imp.bind(point);
    let mut eval = |u: f64| -> std::result::Result<(f64, f64), NewtonError> {
        b.set("u", u);
        Ok((imp.relation.eval(&b)?, imp.derivative.eval(&b)?))
    };
    let mut u = guess;
    let (mut f, mut df) = eval(u)?;
    let mut iterations = 0;
    while f.is_nan() || f.abs() > tol {
        if iterations == max_iter || !f.is_finite() {
            return Err(NewtonError::Diverged {
                iterations,
                residual: f.abs(),
            });
        }
        if df.abs() < DEGENERATE {
            return Err(NewtonError::Degenerate { u });
        }
        u -= f / df;
        iterations += 1;
        (f, df) = eval(u)?;
    }
    for _ in 0..POLISH_STEPS {
        if f == 0.0 || df.abs() < DEGENERATE {
            break;
        }
        let next = u - f / df;
        let (nf, ndf) = eval(next)?;
        if nf.is_nan() || nf.abs() >= f.abs() {
            break;
        }
        (u, f, df) = (next, nf, ndf);
    }
    if df.abs() < DEGENERATE {
        return Err(NewtonError::Degenerate { u });
    }
    Ok(NewtonOutcome {
        u,
        iterations,
        residual: f.abs(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridSpec {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n: DEFAULT_GRID,
            lo: -1.0,
            hi: 1.0,
        }
    }
}

impl GridSpec {
    pub fn coord(&self, i: usize) -> f64 {
        if self.n == 1 {
            return 0.5 * (self.lo + self.hi);
        }
        self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
    }

    pub fn point(&self, [i, j, k]: [usize; 3]) -> [f64; 3] {
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CertifyOptions {
    pub grid: GridSpec,
    pub h_step: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            grid: GridSpec::default(),
            h_step: DEFAULT_H,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct NewtonStats {
    pub solves: usize,
    pub max_iterations: usize,
    pub mean_iterations: f64,
    pub max_final_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RejectedPoint {
    pub index: [usize; 3],
    pub point: [f64; 3],
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridReport {
    pub member: String,
    pub transform: String,
    pub grid: GridSpec,
    pub h_step: f64,
    pub eps: f64,
    pub max_residual: f64,
    pub newton_stats: NewtonStats,
    pub rejected: Vec<RejectedPoint>,
    /// ū in lexicographic (x, y, t) order; NaN at rejected points.
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl GridReport {
    pub fn accepted(&self) -> usize {
        self.values.len() - self.rejected.len()
    }
}

/// Solves ū over the grid (sequential warm-started sweep), then evaluates
/// the target's residual at every solved point by central differences.
pub fn certify(
    imp: &ImplicitSolution,
    target: &FamilyMember,
    opts: &CertifyOptions,
) -> Result<GridReport> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::Input("tol must be positive".into()));
    }
    if opts.h_step.is_nan() || opts.h_step <= 0.0 {
        return Err(Error::Input("h_step must be positive".into()));
    }
    let g = opts.grid;
    if g.n == 0 {
        return Err(Error::Input("grid must have at least one point".into()));
    }
    let n = g.n;
    let mut values = vec![f64::NAN; n * n * n];
    let mut iters = vec![0usize; n * n * n];
    let mut finals = vec![0.0f64; n * n * n];
    let mut rejected = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let p = g.point([i, j, k]);
                let neighbour = if k > 0 {
                    Some(g.index(i, j, k - 1))
                } else if j > 0 {
                    Some(g.index(i, j - 1, 0))
                } else if i > 0 {
                    Some(g.index(i - 1, 0, 0))
                } else {
                    None
                };
                let guess = match neighbour.map(|ix| values[ix]).filter(|v| v.is_finite()) {
                    Some(v) => v,
                    None => imp.seed_value(p)?,
                };
                let ix = g.index(i, j, k);
                match newton_solve(imp, p, guess, opts.tol, opts.max_iter) {
                    Ok(o) => {
                        values[ix] = o.u;
                        iters[ix] = o.iterations;
                        finals[ix] = o.residual;
                    }
                    Err(e) => rejected.push(RejectedPoint {
                        index: [i, j, k],
                        point: p,
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }

    let h = opts.h_step;
    let residuals: Vec<(usize, std::result::Result<f64, String>)> = (0..n * n * n)
        .into_par_iter()
        .filter(|&ix| values[ix].is_finite())
        .map(|ix| {
            let (i, j, k) = (ix / (n * n), (ix / n) % n, ix % n);
            let p = g.point([i, j, k]);
            let centre = values[ix];
            let field = |x: f64, y: f64, t: f64| -> Result<f64> {
                newton_solve(imp, [x, y, t], centre, opts.tol, opts.max_iter)
                    .map(|o| o.u)
                    .map_err(|e| Error::Verification(format!("stencil at ({x}, {y}, {t}): {e}")))
            };
            (ix, residual(target, &imp.binding, &field, p, h).map_err(|e| e.to_string()))
        })
        .collect();

    let mut max_residual = 0.0f64;
    for (ix, r) in residuals {
        match r {
            Ok(r) if r.is_finite() => max_residual = max_residual.max(r.abs()),
            other => {
                let (i, j, k) = (ix / (n * n), (ix / n) % n, ix % n);
                rejected.push(RejectedPoint {
                    index: [i, j, k],
                    point: g.point([i, j, k]),
                    reason: other.err().unwrap_or_else(|| "non-finite residual".into()),
                });
                values[ix] = f64::NAN;
            }
        }
    }
    rejected.sort_by_key(|r| r.index);

    let solved: Vec<usize> = (0..values.len()).filter(|&ix| values[ix].is_finite()).collect();
    let newton_stats = NewtonStats {
        solves: solved.len(),
        max_iterations: solved.iter().map(|&ix| iters[ix]).max().unwrap_or(0),
        mean_iterations: if solved.is_empty() {
            0.0
        } else {
            solved.iter().map(|&ix| iters[ix]).sum::<usize>() as f64 / solved.len() as f64
        },
        max_final_residual: solved.iter().map(|&ix| finals[ix]).fold(0.0, f64::max),
    };
    debug_assert!(newton_stats.max_final_residual <= opts.tol);
    let transform = match imp.family {
        Some(f) if imp.is_extension() => format!("{} (extension)", f.label()),
        Some(f) => f.label().to_string(),
        None => "identity".into(),
    };
    Ok(GridReport {
        member: target.to_string(),
        transform,
        grid: g,
        h_step: h,
        eps: imp.eps,
        max_residual,
        newton_stats,
        rejected,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::UnaryFunction;
    use crate::transform::{make_transform_4_1, make_transform_4_2, transform_member};

    fn arc(f: UnaryFunction) -> Arc<dyn NumericFunction> {
        Arc::new(f)
    }

    fn example(psi: UnaryFunction, phi: UnaryFunction, eps: f64) -> (ImplicitSolution, FamilyMember) {
        let d = dalembert(arc(psi), arc(phi));
        let pt = make_transform_4_1();
        let b = d.binding().with_function("m", UnaryFunction::square());
        let imp = transport_solution(&d.expr(), &pt, &b, eps).unwrap();
        let lin = FamilyMember::from_strs("u_x", "0", "0").unwrap();
        let target = transform_member(&lin, &pt).unwrap();
        (imp, target)
    }

    #[test]
    fn dalembert_trivial() {
        let z = dalembert(arc(UnaryFunction::constant(0.0)), arc(UnaryFunction::constant(0.0)));
        assert_eq!(z.value(0.3, 0.2, 0.1).unwrap(), 0.0);
        let d = dalembert(arc(UnaryFunction::constant(1.0)), arc(UnaryFunction::constant(0.0)));
        assert_eq!(d.value(0.3, 0.2, 0.7).unwrap(), 0.7 - 0.3);
        assert_eq!(d.gradient(0.3, 0.2, 0.7).unwrap(), [-1.0, 0.0, 1.0]);
    }

    #[test]
    fn relation_matches_example() {
        let (imp, _) = example(UnaryFunction::sin(), UnaryFunction::cos(), 0.05);
        let printed = parse("u - psi(y)*(t - x - eps*m(u)) - phi(y)*(t + x + eps*m(u))").unwrap();
        assert!(imp.relation.equivalent(&printed));
        assert!(!imp.is_extension());
    }

    #[test]
    fn quadratic_root() {
        let d = dalembert(
            arc(UnaryFunction::new("id", |y| y, |_| 1.0, |_| 0.0)),
            arc(UnaryFunction::constant(0.0)),
        );
        let b = d.binding().with_function("m", UnaryFunction::square());
        let imp = transport_solution(&d.expr(), &make_transform_4_1(), &b, 0.05).unwrap();
        let o = newton_solve(&imp, [0.3, 0.5, 0.7], 0.0, 1e-12, 20).unwrap();
        let exact = (-1.0 + (1.0f64 + 4.0 * 0.025 * 0.2).sqrt()) / (2.0 * 0.025);
        assert!((o.u - exact).abs() < 1e-14);
        let e = newton_solve(&imp, [0.3, 0.5, 0.7], -20.0, 1e-12, 20).unwrap_err();
        assert!(matches!(e, NewtonError::Degenerate { .. }));
    }

    #[test]
    fn affine_at_zero_eps() {
        let (imp, _) = example(UnaryFunction::sin(), UnaryFunction::cos(), 0.0);
        let o = newton_solve(&imp, [0.1, 0.2, 0.3], 5.0, 1e-12, 20).unwrap();
        assert_eq!(o.iterations, 1);
    }

    #[test]
    fn small_grid_certifies() {
        let (imp, target) = example(UnaryFunction::sin(), UnaryFunction::cos(), 0.05);
        let opts = CertifyOptions {
            grid: GridSpec { n: 5, lo: -1.0, hi: 1.0 },
            ..Default::default()
        };
        let r = certify(&imp, &target, &opts).unwrap();
        assert!(r.rejected.is_empty());
        assert!(r.max_residual <= 1e-5, "{}", r.max_residual);
    }

    #[test]
    fn constant_solution() {
        let d = dalembert(arc(UnaryFunction::constant(0.0)), arc(UnaryFunction::constant(0.0)));
        let b = d.binding().with_function("m", UnaryFunction::square());
        let imp = transport_solution(&Expr::frac(3, 4), &make_transform_4_1(), &b, 0.1).unwrap();
        let target = FamilyMember::from_strs("u_x", "0", "0").unwrap();
        let opts = CertifyOptions {
            grid: GridSpec { n: 3, lo: -1.0, hi: 1.0 },
            ..Default::default()
        };
        let r = certify(&imp, &target, &opts).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert!(r.values.iter().all(|&v| v == 0.75));
    }

    #[test]
    fn two_function_extension_labelled() {
        let d = dalembert(arc(UnaryFunction::sin()), arc(UnaryFunction::cos()));
        let b = d
            .binding()
            .with_function("m", UnaryFunction::square())
            .with_function("p", UnaryFunction::sin());
        let imp = transport_solution(&d.expr(), &make_transform_4_2(), &b, 0.05).unwrap();
        assert!(imp.is_extension());
    }
}
