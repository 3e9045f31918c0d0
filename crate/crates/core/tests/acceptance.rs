//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wave_equiv::constraints::{catalog, classify, verify_case, Verdict};
use wave_equiv::expr::{parse, Binding, Expr, UnaryFunction};
use wave_equiv::family::{Coord, FamilyMember};
use wave_equiv::generators::{determining_residual, solve_wave_determining, FreeData};
use wave_equiv::transform::{
    induced_jet_map, integrate_lie, make_transform_4_1, random_point, transform_member,
    verify_invariance, Family, Quadratic, SampleSpec, DEFAULT_STEPS, SAMPLE_MARGIN,
};
use wave_equiv::transport::{certify, dalembert, transport_solution, CertifyOptions, GridReport};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn random_poly(rng: &mut ChaCha8Rng, vars: &[&str], atom: &str) -> String {
    let mut terms = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let c: i32 = rng.gen_range(-3..=3);
        let mut t = c.to_string();
        for v in vars {
            match rng.gen_range(0..4) {
                1 => t += &format!("*{v}"),
                2 => t += &format!("*{v}^2"),
                _ => {}
            }
        }
        terms.push(t);
    }
    if rng.gen_bool(0.5) {
        terms.push(format!("{atom}({})", vars.join(", ")));
    }
    terms.join(" + ")
}

fn random_free_data(rng: &mut ChaCha8Rng) -> FreeData {
    const B: [&str; 4] = ["x", "y", "t", "u"];
    let mut p = |vars: &[&str], atom: &str| parse(&random_poly(rng, vars, atom)).unwrap();
    FreeData {
        xi: [p(&B, "a1"), p(&B, "a2"), p(&["t"], "a3")],
        eta: p(&B, "e"),
        w: p(&B, "w"),
        alpha_diag: [p(&B, "b11"), p(&B, "b22"), p(&B, "b33")],
        alpha12: p(&B, "b12"),
        alpha13: p(&B, "b13"),
        alpha23: p(&B, "b23"),
        beta: [p(&B, "c1"), p(&B, "c2"), p(&B, "c3")],
        lambda: p(&["x", "y"], "l"),
        gamma: p(&["x", "y", "t"], "g0"),
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    for _ in 0..50 {
        let fd = random_free_data(&mut rng);
        match solve_wave_determining(&fd) {
            Ok(gs) if determining_residual(&gs).is_zero() => {}
            _ => failures += 1,
        }
    }
    outcome(failures == 0, format!("50 random instances, {failures} nonzero"))
}

fn criterion_2() -> Outcome {
    let mut bad = Vec::new();
    for r in catalog() {
        match verify_case(r.id) {
            Ok(rep) => {
                let forced = r.verdict != Verdict::NotLinearizable || rep.forced_affine.is_some();
                if !rep.passed || !forced {
                    bad.push(r.id);
                }
            }
            Err(_) => bad.push(r.id),
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} rows verified, failing: {bad:?}", catalog().len()),
    )
}

fn criterion_3() -> Outcome {
    let mut checked = Vec::new();
    let mut bad = Vec::new();
    for r in catalog() {
        let sig = r.signature();
        let free = !sig.f.contains(&Coord::V3) && !sig.g.contains(&Coord::V3) && !sig.h.contains(&Coord::V3);
        if free {
            checked.push(r.id);
            if classify(&sig).verdict != Verdict::NotLinearizable {
                bad.push(r.id);
            }
        }
    }
    outcome(
        !checked.is_empty() && bad.is_empty(),
        format!("rows free of u_t: {checked:?}, misclassified: {bad:?}"),
    )
}

fn criterion_4() -> Outcome {
    let m = FamilyMember::from_strs("u_x", "0", "0").unwrap();
    let out = transform_member(&m, &make_transform_4_1()).unwrap();
    let printed = parse("(eps*m'(u)*u_t^2 + u_x)/(1 + eps*m'(u)*u_x)").unwrap();
    outcome(
        out.f == printed && out.g.is_zero() && out.h.is_zero(),
        format!("f = {}", out.f),
    )
}

fn random_functions(fam: Family, rng: &mut ChaCha8Rng) -> Binding {
    let mut b = Binding::new();
    for (name, params) in fam.function_slots() {
        b.set_function(name, Arc::new(Quadratic::random(rng, params.len())));
    }
    b
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for fam in Family::ALL {
        let pt = fam.build();
        let sys = pt.lie_system().unwrap();
        let mut n = 0;
        while n < 20 {
            let b = random_functions(fam, &mut rng);
            let p = random_point(&mut rng);
            let eps = rng.gen_range(0.01..0.3);
            let ok = |e: f64| pt.margin(&b, &p, e).is_ok_and(|m| m >= SAMPLE_MARGIN);
            if !ok(eps) {
                continue;
            }
            let exact = pt.apply(&b, &p, eps).unwrap();
            let flow = integrate_lie(&sys, &b, &p, eps, DEFAULT_STEPS).unwrap();
            for i in 0..10 {
                worst = worst.max((exact[i] - flow[i]).abs());
            }
            n += 1;
        }
    }
    let mut symbolic = true;
    for fam in [Family::ShiftXByU, Family::ShiftXYByU] {
        let pt = fam.build();
        let (e1, e2) = (Expr::sym("eps1"), Expr::sym("eps2"));
        let composed = pt.at(&e1).then(&pt.at(&e2));
        let direct = pt.at(&(&e1 + &e2));
        symbolic &= composed
            .maps()
            .into_iter()
            .zip(direct.maps())
            .all(|(a, b)| a.equivalent(b));
    }
    let mut group = 0.0f64;
    for fam in [Family::ShiftXByUY, Family::ShiftYByUX] {
        let pt = fam.build();
        let sys = pt.lie_system().unwrap();
        let mut n = 0;
        while n < 20 {
            let b = random_functions(fam, &mut rng);
            let p = random_point(&mut rng);
            let (e1, e2) = (rng.gen_range(0.01..0.15), rng.gen_range(0.01..0.15));
            let ok = |e: f64| pt.margin(&b, &p, e).is_ok_and(|m| m >= SAMPLE_MARGIN);
            if !ok(e1) || !ok(e1 + e2) {
                continue;
            }
            let half = integrate_lie(&sys, &b, &p, e1, DEFAULT_STEPS).unwrap();
            let two = integrate_lie(&sys, &b, &half, e2, DEFAULT_STEPS).unwrap();
            let exact = pt.apply(&b, &p, e1 + e2).unwrap();
            for i in 0..10 {
                group = group.max((two[i] - exact[i]).abs());
            }
            n += 1;
        }
    }
    outcome(
        worst <= 1e-8 && symbolic && group <= 1e-10,
        format!(
            "flow vs closed form {worst:.2e}, group law symbolic 4.1/4.2 {symbolic}, numeric 4.3/4.4 {group:.2e}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut detail = Vec::new();
    let mut all = true;
    for fam in Family::ALL {
        let r = induced_jet_map(&fam.build()).unwrap();
        all &= r.passed;
        detail.push(format!("{} {}", fam.label(), if r.passed { "zero" } else { "nonzero" }));
    }
    outcome(all, detail.join(", "))
}

fn criterion_7() -> Outcome {
    let runs: Vec<(&str, Family, [&str; 3], SampleSpec)> = vec![
        (
            "example 1",
            Family::ShiftXByU,
            ["u_x", "0", "0"],
            SampleSpec {
                functions: Some(Binding::new().with_function("m", UnaryFunction::square())),
                eps: Some(0.1),
            },
        ),
        ("example 1 random m", Family::ShiftXByU, ["u_x", "0", "0"], SampleSpec::default()),
        ("4.2", Family::ShiftXYByU, ["u_x", "u_y", "0"], SampleSpec::default()),
        ("4.3", Family::ShiftXByUY, ["u_x", "u_y", "u"], SampleSpec::default()),
    ];
    let mut all = true;
    let mut detail = Vec::new();
    for (name, fam, [f, g, h], spec) in runs {
        let m = FamilyMember::from_strs(f, g, h).unwrap();
        let r = verify_invariance(&m, &fam.build(), 100, 7, &spec).unwrap();
        all &= r.max_deviation <= 1e-9;
        detail.push(format!("{name} {:.2e}", r.max_deviation));
    }
    outcome(all, detail.join(", "))
}

fn example_certificate(eps: f64, h: f64) -> GridReport {
    let d = dalembert(Arc::new(UnaryFunction::sin()), Arc::new(UnaryFunction::cos()));
    let pt = make_transform_4_1();
    let b = d.binding().with_function("m", UnaryFunction::square());
    let imp = transport_solution(&d.expr(), &pt, &b, eps).unwrap();
    let source = FamilyMember::from_strs("u_x", "0", "0").unwrap();
    let target = transform_member(&source, &pt).unwrap();
    let opts = CertifyOptions {
        h_step: h,
        ..Default::default()
    };
    certify(&imp, &target, &opts).unwrap()
}

fn criterion_8() -> Outcome {
    let r = example_certificate(0.05, 1e-3);
    let half = example_certificate(0.05, 5e-4);
    let ratio = r.max_residual / half.max_residual;
    outcome(
        r.rejected.is_empty()
            && r.newton_stats.max_iterations <= 20
            && r.max_residual <= 1e-5
            && (3.0..=5.0).contains(&ratio),
        format!(
            "21^3 grid, {} rejected, max {} Newton iterations, residual {:.2e}, h/2 ratio {ratio:.2}",
            r.rejected.len(),
            r.newton_stats.max_iterations,
            r.max_residual
        ),
    )
}

fn criterion_9() -> Outcome {
    let reports: Vec<GridReport> = [0.2, 0.1, 0.05, 0.0]
        .into_iter()
        .map(|e| example_certificate(e, 1e-3))
        .collect();
    let res: Vec<f64> = reports.iter().map(|r| r.max_residual).collect();
    let decreasing = res.windows(2).all(|w| w[1] < w[0]);
    let floor = res[3] <= 1e-9;
    let detail = reports
        .iter()
        .map(|r| format!("eps {} {:.2e} ({} rejected)", r.eps, r.max_residual, r.rejected.len()))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(decreasing && floor, detail)
}

type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "determining identity", criterion_1, Duration::from_secs(10)),
        (2, "case catalog", criterion_2, Duration::from_secs(30)),
        (3, "corollary", criterion_3, Duration::MAX),
        (4, "example 1 symbolic", criterion_4, Duration::MAX),
        (5, "flow vs closed form", criterion_5, Duration::MAX),
        (6, "jet-map certificate", criterion_6, Duration::MAX),
        (7, "invariance sampling", criterion_7, Duration::from_secs(20)),
        (8, "transport certificate", criterion_8, Duration::from_secs(60)),
        (9, "eps continuity", criterion_9, Duration::MAX),
    ];
    let mut failed = 0;
    for (n, name, run, budget) in criteria {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let ok = o.passed && took <= budget;
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {n} ({name}): {} [{:.2}s] {}",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
