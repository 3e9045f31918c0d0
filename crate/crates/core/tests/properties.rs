use proptest::prelude::*;

use wave_equiv::expr::{parse, Binding, Expr};
use wave_equiv::family::{is_linear, signature, FamilyMember};
use wave_equiv::generators::{determining_residual, solve_wave_determining, FreeData};

const SYMS: [&str; 5] = ["x", "y", "u", "v1", "eps"];

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-3i64..=3).prop_map(Expr::int),
        prop::sample::select(SYMS.to_vec()).prop_map(Expr::sym),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 0i64..=3).prop_map(|(a, n)| a.pow(n)),
            (inner.clone(), inner).prop_map(|(a, b)| a / (b.pow(2) + Expr::one())),
        ]
    })
}

fn point() -> impl Strategy<Value = Binding> {
    prop::array::uniform5(-1.0f64..1.0).prop_map(|v| {
        let mut b = Binding::new();
        for (n, x) in SYMS.iter().zip(v) {
            b.set(n, x);
        }
        b
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn normalize_is_idempotent(e in expr()) {
        let n = e.normalize();
        prop_assert_eq!(n.normalize(), n);
    }

    #[test]
    fn normal_form_is_canonical(a in expr(), b in expr()) {
        prop_assert_eq!((&a + &b).normalize(), (&b + &a).normalize());
        prop_assert_eq!((&a * &b).normalize(), (&b * &a).normalize());
        prop_assert!((&a * (&b + Expr::one())).equivalent(&(&a * &b + &a)));
    }

    #[test]
    fn common_factors_cancel(a in expr(), b in expr(), c in expr()) {
        let c = c.pow(2) + Expr::one();
        let den = b.pow(2) + Expr::one();
        let lhs = (&a * &c) / (&den * &c);
        prop_assert!(lhs.equivalent(&(&a / &den)));
    }

    #[test]
    fn print_parse_round_trip(e in expr()) {
        let n = e.normalize();
        prop_assert_eq!(parse(&n.to_string()).unwrap(), n);
    }

    #[test]
    fn normal_form_evaluates_alike(e in expr(), b in point()) {
        if let (Ok(raw), Ok(n)) = (e.eval(&b), e.normalize().eval(&b)) {
            prop_assert!(close(raw, n, 1e-9), "{} vs {}", raw, n);
        }
    }

    #[test]
    fn derivative_matches_differences(e in expr(), b in point()) {
        let d = e.partial("x");
        let h = 1e-5;
        let x = b.value("x").unwrap();
        let at = |v: f64| { let mut b = b.clone(); b.set("x", v); e.eval(&b) };
        if let (Ok(p), Ok(m), Ok(dv)) = (at(x + h), at(x - h), d.eval(&b)) {
            let fd = (p - m) / (2.0 * h);
            prop_assert!(close(fd, dv, 1e-4), "{} vs {}", fd, dv);
        }
    }

    #[test]
    fn affine_members_are_linear(c in prop::array::uniform5(-4i64..=4)) {
        let f = format!("{}*u_x + {}*u + {}*x", c[0], c[1], c[2]);
        let g = format!("{}*u_y + {}*t", c[3], c[4]);
        let m = FamilyMember::from_strs(&f, &g, "u*x").unwrap();
        prop_assert!(is_linear(&m));
        let bent = FamilyMember::from_strs(&format!("{f} + u_x*u_t"), &g, "0").unwrap();
        prop_assert!(!is_linear(&bent));
    }

    #[test]
    fn signature_ignores_cancelling_terms(e in expr()) {
        let m = FamilyMember::from_strs("u_x*u", "u_y", "0").unwrap();
        let noisy = FamilyMember::new(&m.f + &e - &e, m.g.clone(), m.h.clone()).unwrap();
        prop_assert_eq!(signature(&noisy), signature(&m));
    }

    #[test]
    fn determining_identity(c in prop::collection::vec(-3i64..=3, 8)) {
        let p = |s: String| parse(&s).unwrap();
        let mut fd = FreeData::zero();
        fd.xi = [
            p(format!("{}*u^2 + {}*x*t + a(x, u)", c[0], c[1])),
            p(format!("{}*y*u + b(t)", c[2])),
            p(format!("{}*t^2 + {}*t", c[3], c[4])),
        ];
        fd.eta = p(format!("{}*u^2*x + e(x, y, t, u)", c[5]));
        fd.alpha_diag[0] = p(format!("{}*x*u", c[6]));
        fd.beta[1] = p(format!("{}*t*u", c[7]));
        let gs = solve_wave_determining(&fd).unwrap();
        prop_assert!(determining_residual(&gs).is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2048))]

    #[test]
    fn arbitrary_text_round_trips(s in "[-+*/^() xyutv123_.'\\[\\],mfgh]{0,24}") {
        if let Ok(e) = parse(&s) {
            let printed = e.to_string();
            let again = parse(&printed);
            prop_assert!(again.is_ok(), "{:?} -> {:?}: {:?}", s, printed, again);
            prop_assert_eq!(again.unwrap(), e);
        }
    }

    #[test]
    fn arbitrary_member_text_round_trips(s in "[fgh=u_xyt0-9+*() \n#]{0,32}") {
        if let Ok(m) = FamilyMember::parse_text(&s) {
            prop_assert_eq!(FamilyMember::parse_text(&m.to_text()).unwrap(), m);
        }
    }
}
