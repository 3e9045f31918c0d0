//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::constraints::{catalog, classify, verify_case, CaseReport};
use crate::expr::{parse, Binding, ExprFunction, NumericFunction, UnaryFunction};
use crate::family::{signature, FamilyMember};
use crate::generators::{base_fn, determining_residual, solve_wave_determining, FreeData};
use crate::transform::{
    induced_jet_map, transform_member, verify_invariance, Family, SampleSpec,
};
use crate::transport::{
    certify, dalembert, transport_solution, CertifyOptions, GridSpec, DEFAULT_H, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "wave-equiv", version, about = "Equivalence transformations of u_tt = f_x + g_y + h")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Look up the linearizability row of a member.
    #[command(disable_help_flag = true)]
    Classify(ClassifyArgs),
    /// Print the generator coefficients with the determining equation solved.
    #[command(disable_help_flag = true)]
    Generators(GeneratorsArgs),
    /// Apply a closed-form transformation to a member.
    #[command(disable_help_flag = true)]
    Transform(TransformArgs),
    /// Sample the invariance of the equation under a transformation.
    #[command(disable_help_flag = true)]
    Verify(VerifyArgs),
    /// Transport the d'Alembert solution and certify it on a grid.
    #[command(disable_help_flag = true)]
    Transport(TransportArgs),
    /// Verify catalog rows.
    #[command(disable_help_flag = true)]
    CaseCheck(CaseCheckArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    json: bool,
    #[arg(long, action = clap::ArgAction::Help)]
    help: Option<bool>,
}

#[derive(Args, Debug)]
struct MemberArgs {
    #[arg(short = 'f', long = "f", allow_hyphen_values = true)]
    f: Option<String>,
    #[arg(short = 'g', long = "g", allow_hyphen_values = true)]
    g: Option<String>,
    #[arg(short = 'h', long = "h", allow_hyphen_values = true)]
    h: Option<String>,
    /// File with `f = ...`, `g = ...`, `h = ...` lines.
    #[arg(long, conflicts_with_all = ["f", "g", "h"])]
    member: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FamilyArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    member: MemberArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct GeneratorsArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[command(flatten)]
    member: MemberArgs,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    member: MemberArgs,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest accepted deviation.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TransportArgs {
    #[arg(long, value_parser = parse_family, default_value = "4.1")]
    family: Family,
    #[arg(long, default_value = "sin")]
    psi: String,
    #[arg(long, default_value = "cos")]
    phi: String,
    #[arg(long, default_value = "square", allow_hyphen_values = true)]
    m: String,
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    #[arg(long, default_value_t = 0.05, allow_hyphen_values = true)]
    eps: f64,
    #[arg(long, default_value_t = 21)]
    grid: usize,
    #[arg(long, default_value_t = DEFAULT_H)]
    h_step: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Largest accepted residual.
    #[arg(long, default_value_t = 1e-5)]
    max_residual: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CaseCheckArgs {
    /// Row id; all rows when omitted.
    id: Option<String>,
    #[command(flatten)]
    common: Common,
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    Family::from_label(s).ok_or_else(|| format!("unknown family '{s}' (expected 4.1, 4.2, 4.3 or 4.4)"))
}

/// Outcome of a verb: a report and whether its check passed.
struct Outcome {
    text: String,
    json: serde_json::Value,
    passed: bool,
}

impl Outcome {
    fn new(text: String, json: impl Serialize, passed: bool) -> Result<Self> {
        Ok(Outcome {
            text,
            json: serde_json::to_value(json)?,
            passed,
        })
    }
}

fn builtins() -> Binding {
    Binding::new()
        .with_function("sin", UnaryFunction::sin())
        .with_function("cos", UnaryFunction::cos())
        .with_function("exp", UnaryFunction::exp())
        .with_function("square", UnaryFunction::square())
}

/// A builtin name (`sin`, `cos`, `exp`, `square`) or an expression in
/// `params` that may call the builtins.
fn numeric_function(flag: &str, text: &str, params: &[&str]) -> Result<Arc<dyn NumericFunction>> {
    let b = builtins();
    if params.len() == 1 {
        if let Some(f) = b.function(text.trim()) {
            return Ok(f.clone());
        }
    }
    let body = parse(text).map_err(|e| Error::Input(format!("--{flag}: {e}")))?;
    for s in body.symbols() {
        if !params.contains(&s.name()) {
            return Err(Error::Input(format!(
                "--{flag}: may only use {params:?}, found '{}'",
                s.name()
            )));
        }
    }
    for name in body.function_names() {
        if b.function(&name).is_none() {
            return Err(Error::Input(format!("--{flag}: unknown function '{name}'")));
        }
    }
    Ok(Arc::new(ExprFunction::new(params, body).with_functions(b)))
}

fn read_member(a: &MemberArgs) -> Result<FamilyMember> {
    if let Some(path) = &a.member {
        let text = std::fs::read_to_string(path)?;
        return FamilyMember::parse_text(&text);
    }
    if a.f.is_none() && a.g.is_none() && a.h.is_none() {
        return Err(Error::Input("no member given: use --f/--g/--h or --member".into()));
    }
    let field = |flag: &str, v: &Option<String>| -> Result<crate::Expr> {
        match v {
            None => Ok(crate::Expr::zero()),
            Some(s) => parse(s).map_err(|e| Error::Input(format!("--{flag}: {e}"))),
        }
    };
    FamilyMember::new(field("f", &a.f)?, field("g", &a.g)?, field("h", &a.h)?)
}

/// Numeric bindings for the family functions named on the command line;
/// `None` when none were given.
fn family_binding(a: &FamilyArgs) -> Result<Option<Binding>> {
    let given = [("m", &a.m), ("p", &a.p)];
    let slots = a.family.function_slots();
    for (name, v) in given {
        if v.is_some() && !slots.iter().any(|(n, _)| *n == name) {
            return Err(Error::Input(format!(
                "--{name} is not a function of family {}",
                a.family.label()
            )));
        }
    }
    if given.iter().all(|(_, v)| v.is_none()) {
        return Ok(None);
    }
    let mut b = Binding::new();
    for (name, params) in slots {
        let text = given
            .iter()
            .find(|(n, _)| *n == name)
            .and_then(|(_, v)| v.as_ref())
            .ok_or_else(|| Error::Input(format!("--{name} is required alongside the others")))?;
        b.set_function(name, numeric_function(name, text, &params)?);
    }
    Ok(Some(b))
}

fn run_classify(a: &ClassifyArgs) -> Result<Outcome> {
    let m = read_member(&a.member)?;
    let r = classify(&signature(&m));
    let mut text = format!("member: {m}\n");
    text += &format!("row: {}\n", r.row_id.as_deref().unwrap_or("none"));
    text += &format!("verdict: {}\n", serde_json::to_value(r.verdict)?.as_str().unwrap_or(""));
    for s in &r.shapes {
        text += &format!("shape: xi1 = {}, xi2 = {}, eta = {}\n", s.xi1, s.xi2, s.eta);
    }
    for w in &r.witness {
        text += &format!("witness: {w}\n");
    }
    for n in &r.nearest {
        text += &format!("nearest: {n}\n");
    }
    for d in r.discrepancies.iter().chain(&r.notes) {
        text += &format!("note: {d}\n");
    }
    Outcome::new(text, &r, true)
}

fn run_generators() -> Result<Outcome> {
    let mut fd = FreeData::generic();
    fd.xi[2] = base_fn("xi3", &["t"]);
    let gs = solve_wave_determining(&fd)?;
    let res = determining_residual(&gs);
    let mut text = gs.report_text();
    text += &format!("determining residual = {res}\n");
    let mut json = gs.report_json();
    json["determining_residual"] = serde_json::json!(res.to_string());
    Ok(Outcome {
        text,
        json,
        passed: res.is_zero(),
    })
}

fn run_transform(a: &TransformArgs) -> Result<Outcome> {
    let m = read_member(&a.member)?;
    let fam = a.family.family;
    let mut pt = fam.build();
    let cert = induced_jet_map(&pt)?;
    for (name, params) in fam.function_slots() {
        let given = if name == "m" { &a.family.m } else { &a.family.p };
        if let Some(text) = given {
            let body = parse(text).map_err(|e| Error::Input(format!("--{name}: {e}")))?;
            for s in body.symbols() {
                if !params.contains(&s.name()) {
                    return Err(Error::Input(format!(
                        "--{name}: may only use {params:?}, found '{}'",
                        s.name()
                    )));
                }
            }
            let sub = |e: &crate::Expr| e.substitute_function(name, &params, &body);
            pt.base = pt.base.each_ref().map(sub);
            pt.jets = pt.jets.each_ref().map(sub);
            pt.funcs = pt.funcs.each_ref().map(sub);
        }
    }
    let mut out = transform_member(&m, &pt)?;
    if let Some(e) = a.eps {
        let eps = parse(&format!("{e}")).map_err(|e| Error::Input(format!("--eps: {e}")))?;
        out = out.substitute(&[("eps", eps)])?;
    }
    #[derive(Serialize)]
    struct Report {
        family: Family,
        f: String,
        g: String,
        h: String,
        jet_map_certified: bool,
    }
    let r = Report {
        family: fam,
        f: out.f.to_string(),
        g: out.g.to_string(),
        h: out.h.to_string(),
        jet_map_certified: cert.passed,
    };
    let text = format!(
        "family: {}\nf = {}\ng = {}\nh = {}\njet map certified: {}\n",
        fam.label(),
        r.f,
        r.g,
        r.h,
        cert.passed
    );
    Outcome::new(text, &r, cert.passed)
}

fn run_verify(a: &VerifyArgs) -> Result<Outcome> {
    let m = read_member(&a.member)?;
    let pt = a.family.family.build();
    let spec = SampleSpec {
        functions: family_binding(&a.family)?,
        eps: a.eps,
    };
    let r = verify_invariance(&m, &pt, a.samples, a.seed, &spec)?;
    let passed = r.max_deviation <= a.tol;
    let text = format!(
        "max deviation: {:e}\nsamples: {}\nsingular rejections: {}\n{}\n",
        r.max_deviation,
        r.samples,
        r.singular_rejections,
        if passed { "PASS" } else { "FAIL" }
    );
    Outcome::new(text, &r, passed)
}

fn run_transport(a: &TransportArgs) -> Result<Outcome> {
    let d = dalembert(
        numeric_function("psi", &a.psi, &["y"])?,
        numeric_function("phi", &a.phi, &["y"])?,
    );
    let fa = FamilyArgs {
        family: a.family,
        m: Some(a.m.clone()),
        p: a.p.clone(),
    };
    let mut b = d.binding();
    if let Some(fb) = family_binding(&fa)? {
        for (name, _) in a.family.function_slots() {
            b.set_function(name, fb.function(name).expect("bound").clone());
        }
    }
    let pt = a.family.build();
    let imp = transport_solution(&d.expr(), &pt, &b, a.eps)?;
    let source = FamilyMember::from_strs("u_x", "0", "0")?;
    let target = transform_member(&source, &pt)?;
    let opts = CertifyOptions {
        grid: GridSpec {
            n: a.grid,
            lo: -1.0,
            hi: 1.0,
        },
        h_step: a.h_step,
        tol: a.tol,
        max_iter: a.max_iter,
    };
    let r = certify(&imp, &target, &opts)?;
    let passed = r.rejected.is_empty() && r.max_residual <= a.max_residual;
    let mut text = format!(
        "member: {}\ntransform: {}\neps: {}\ngrid: {}^3 on [{}, {}]^3, h = {}\nmax residual: {:e}\n",
        r.member, r.transform, r.eps, r.grid.n, r.grid.lo, r.grid.hi, r.h_step, r.max_residual
    );
    text += &format!(
        "newton: {} solves, max {} iterations, mean {:.2}\nrejected: {}\n",
        r.newton_stats.solves,
        r.newton_stats.max_iterations,
        r.newton_stats.mean_iterations,
        r.rejected.len()
    );
    for p in r.rejected.iter().take(10) {
        text += &format!("  {:?}: {}\n", p.point, p.reason);
    }
    text += if passed { "PASS\n" } else { "FAIL\n" };
    Outcome::new(text, &r, passed)
}

fn run_case_check(a: &CaseCheckArgs) -> Result<Outcome> {
    let ids: Vec<String> = match &a.id {
        Some(id) => vec![id.clone()],
        None => catalog().iter().map(|r| r.id.to_string()).collect(),
    };
    let reports: Vec<CaseReport> = ids.iter().map(|id| verify_case(id)).collect::<Result<_>>()?;
    let mut text = String::new();
    for r in &reports {
        text += &format!(
            "row {:>7}: {} ({} branch(es){})\n",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.branches.len(),
            r.forced_affine
                .as_ref()
                .map(|f| format!(", eta_uu forced by {}", f.component))
                .unwrap_or_default()
        );
    }
    let passed = reports.iter().all(|r| r.passed);
    Outcome::new(text, &reports, passed)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Verification(_) | Error::FlowSingular { .. } => EXIT_FAILED,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (program name first), runs the verb and writes the report.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let (outcome, json) = match &cli.verb {
        Verb::Classify(a) => (run_classify(a), a.common.json),
        Verb::Generators(a) => (run_generators(), a.common.json),
        Verb::Transform(a) => (run_transform(a), a.common.json),
        Verb::Verify(a) => (run_verify(a), a.common.json),
        Verb::Transport(a) => (run_transport(a), a.common.json),
        Verb::CaseCheck(a) => (run_case_check(a), a.common.json),
    };
    match outcome {
        Ok(o) => {
            let body = if json {
                serde_json::to_string_pretty(&o.json).unwrap_or_default() + "\n"
            } else {
                o.text
            };
            let _ = out.write_all(body.as_bytes());
            if o.passed {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
