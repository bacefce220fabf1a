mod common;

use modcurv::eval::{evaluate, evaluate_name, EvalError, Value};
use modcurv::parse::parse_expr;
use rug::{Float, Rational};

const PREC: u32 = 256;

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn assert_close(got: &Float, want: &str, tol: f64) {
    let w = Float::with_val(PREC, Float::parse(want).unwrap());
    let r = common::rel_diff(got, &w);
    assert!(
        r < tol,
        "value {} differs from frozen oracle {} (rel {})",
        got,
        want,
        r
    );
}

// Frozen values from the independent arbitrary-precision oracle (300-bit
// mpmath evaluation of separately transcribed formulas).
#[test]
fn frozen_point_values_match_oracle() {
    let reg = common::load();
    let cases: &[(&str, Vec<Rational>, &str)] = &[
        ("K_1", vec![q(1, 2)], "-5.221202141311990363672496562865944422386e-1"),
        (
            "K_3",
            vec![q(1, 3), q(1, 5)],
            "1.335498941261809341891573777062044181099e-2",
        ),
        (
            "k_10",
            vec![q(2, 7), q(1, 77)],
            "-4.095335237298049123666703522483042213237e-1",
        ),
        ("R_1", vec![q(1, 4)], "2.086778117129595455400811548799153194014"),
        (
            "R_2",
            vec![q(1, 3), q(-1, 7)],
            "-1.323227990199357852695443011332980452854e-1",
        ),
        (
            "G_4",
            vec![q(1, 2), q(-1, 3), q(1, 5), q(1, 7)],
            "5.691210273363704868783563922979817964698e-2",
        ),
        (
            "K_16",
            vec![q(1, 2), q(-1, 3), q(1, 5)],
            "-7.262929071587474041441229241070312624104e-1",
        ),
    ];
    for (name, point, want) in cases {
        let v = evaluate_name(name, point, &reg, PREC).unwrap();
        assert_close(&v, want, 1e-60);
    }
}

#[test]
fn removable_singularities_are_resolved_by_limits() {
    let reg = common::load();
    // K_1(0) = -2 pi / 15, R_1(0) = 2 pi / 3.
    let pi = Float::with_val(PREC, rug::float::Constant::Pi);
    let k1 = evaluate_name("K_1", &[Rational::new()], &reg, PREC).unwrap();
    let want = Float::with_val(PREC, &pi * Rational::from((-2, 15)));
    assert!(common::rel_diff(&k1, &want) < 1e-60, "K_1(0) = {}", k1);
    let r1 = evaluate_name("R_1", &[Rational::new()], &reg, PREC).unwrap();
    let want = Float::with_val(PREC, &pi * Rational::from((2, 3)));
    assert!(common::rel_diff(&r1, &want) < 1e-60, "R_1(0) = {}", r1);
    // Hyperplane-singular point of a two-variable kernel.
    let k8t = evaluate_name("Ktilde_8", &[q(1, 3), q(1, 5), q(-8, 15)], &reg, PREC).unwrap();
    assert_close(&k8t, "-3.965174544466146410191210792923915749879e-2", 1e-40);
}

#[test]
fn exact_zero_denominators_raise_singular() {
    let reg = common::load();
    let e = parse_expr("1 / (s1 + s2)").unwrap();
    let env = [Value::Exact(q(1, 2)), Value::Exact(q(-1, 2))];
    assert_eq!(evaluate(&e, &env, &reg, PREC), Err(EvalError::Singular));
    // Negative powers of an exact zero base as well.
    let e2 = parse_expr("(s1 - 1/3)^-2").unwrap();
    let env2 = [Value::Exact(q(1, 3))];
    assert_eq!(evaluate(&e2, &env2, &reg, PREC), Err(EvalError::Singular));
}

#[test]
fn exact_rationality_propagates_through_call_arguments() {
    // The argument -s2 - s3 must reach the callee exactly; a rounded float
    // would miss the callee's internal pole structure and return
    // catastrophically cancelled garbage instead of a clean value.
    let reg = common::load();
    let e = parse_expr("k_10(s2, -s2 - s3)").unwrap();
    let env = [
        Value::Exact(q(1, 1)),
        Value::Exact(q(2, 7)),
        Value::Exact(q(-23, 77)),
    ];
    let v = evaluate(&e, &env, &reg, PREC).unwrap();
    assert_close(&v, "-4.095335237298049123666703522483042213237e-1", 1e-60);
}

#[test]
fn derivative_entries_materialize_lazily() {
    let reg = common::load();
    assert!(!reg.contains("K_3_d2"));
    let def = reg.resolve("K_3_d2").unwrap();
    assert_eq!(def.arity, 2);
    assert_eq!(def.origin, "derived");
    // d/ds2 K_3 at a regular point: finite and consistent with a central
    // difference of the base function.
    let h = q(1, 1 << 20);
    let p = [q(1, 3), q(1, 5)];
    let exact = evaluate_name("K_3_d2", &p, &reg, PREC).unwrap();
    let up = evaluate_name("K_3", &[p[0].clone(), p[1].clone() + h.clone()], &reg, PREC).unwrap();
    let dn = evaluate_name("K_3", &[p[0].clone(), p[1].clone() - h.clone()], &reg, PREC).unwrap();
    let fd = Float::with_val(PREC, &up - &dn) / Float::with_val(PREC, 2 * h);
    assert!(
        common::rel_diff(&exact, &fd) < 1e-10,
        "symbolic {} vs finite difference {}",
        exact,
        fd
    );
}

#[test]
fn arity_mismatch_is_reported() {
    let reg = common::load();
    let err = evaluate_name("K_3", &[q(1, 2)], &reg, PREC).unwrap_err();
    assert!(matches!(err, EvalError::Arity { .. }));
    let err2 = evaluate_name("no_such_fn", &[q(1, 2)], &reg, PREC).unwrap_err();
    assert!(matches!(err2, EvalError::Undefined(_)));
}
