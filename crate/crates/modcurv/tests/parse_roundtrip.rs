mod common;

use modcurv::parse::{parse_defs, parse_expr, s_vars};
use rug::Rational;

#[test]
fn every_corpus_definition_round_trips() {
    let reg = common::load();
    for name in reg.names() {
        let def = reg.resolve(&name).unwrap();
        let printed = def.body.to_string();
        let reparsed = parse_expr(&printed)
            .unwrap_or_else(|e| panic!("{}: reprint does not parse: {}", name, e));
        assert_eq!(
            reparsed, *def.body,
            "{}: parse(print(e)) != e\nprinted: {}",
            name, printed
        );
    }
}

#[test]
fn unary_minus_binds_tighter_than_power() {
    // -s1^2 parses as (-s1)^2.
    let e = parse_expr("-s1^2").unwrap();
    let env = [modcurv::eval::Value::Exact(Rational::from(3))];
    let v = modcurv::eval::eval_exact(&e, &env).unwrap();
    assert_eq!(v, Rational::from(9));
}

#[test]
fn power_binds_tighter_than_product_and_sum() {
    let e = parse_expr("1 + 2 * 3^2").unwrap();
    let v = modcurv::eval::eval_exact(&e, &[]).unwrap();
    assert_eq!(v, Rational::from(19));
}

#[test]
fn power_is_right_associative_with_integer_exponent() {
    // Negative exponents are allowed.
    let e = parse_expr("2^-2").unwrap();
    let v = modcurv::eval::eval_exact(&e, &[]).unwrap();
    assert_eq!(v, Rational::from((1, 4)));
}

#[test]
fn rational_literal_is_one_token() {
    let e = parse_expr("3/4").unwrap();
    assert_eq!(e, modcurv::expr::Expr::Rat(Rational::from((3, 4))));
    // Spaced division is a quotient node, not a literal.
    let e2 = parse_expr("3 / 4").unwrap();
    assert!(matches!(e2, modcurv::expr::Expr::Quot(_, _)));
}

#[test]
fn parse_errors_carry_line_and_column() {
    let err = parse_defs("def f(x) = x +\ndef g(y) = y;").unwrap_err();
    assert_eq!(err.line, 2);
    let err2 = parse_defs("def f(x) = @;").unwrap_err();
    assert_eq!(err2.line, 1);
    assert_eq!(err2.col, 12);
}

#[test]
fn comments_and_multiline_defs_parse() {
    let defs = parse_defs(
        "# leading comment\ndef f(a, b) = a + # inline\n  b / 2;\n",
    )
    .unwrap();
    assert_eq!(defs.len(), 1);
    assert_eq!(defs[0].name, "f");
    assert_eq!(defs[0].arity, 2);
}

#[test]
fn zero_denominator_literal_is_rejected() {
    assert!(parse_expr("1/0").is_err());
}

#[test]
fn unknown_variable_is_rejected() {
    let toks = modcurv::parse::lex("q + 1").unwrap();
    let mut p = modcurv::parse::Parser::new(&toks);
    assert!(p.expr(&s_vars).is_err());
}
