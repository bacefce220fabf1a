//! Constructive machinery: iterated finite-difference functions G_n,
//! rearrangement functions F_m / F^v_m, the eps/delta finite-difference
//! kernel combinators, cyclic coordinate actions, and quadratic invariants.

use crate::eval::{evaluate, limit_eval_auto, EvalError, Value};
use crate::expr::{substitute_with, Expr};
use crate::quad::{integrate, QuadError};
use crate::registry::Registry;
use rug::ops::Pow;
use rug::{Float, Rational};

fn var(i: u32) -> Expr {
    Expr::var(i)
}

fn shift_vars(e: &Expr, by: u32) -> Expr {
    substitute_with(e, &|i| Some(Expr::var(i + by)))
}

// ------------------------------------------------------------------- G_n

/// G_n built by the finite-difference recursion from G_1 = (exp(s1)-1)/s1:
/// G_n(s1..sn) = (G_{n-1}(s1,..,s_{n-2},s_{n-1}+s_n) - G_{n-1}(s1,..,s_{n-1})) / s_n.
pub fn g_expr(n: usize) -> Expr {
    assert!((1..=4).contains(&n), "g_expr is defined for n in 1..4");
    if n == 1 {
        return Expr::quot(Expr::sub(Expr::exp(var(1)), Expr::int(1)), var(1));
    }
    let prev = g_expr(n - 1);
    let merged = substitute_with(&prev, &|i| {
        if i as usize == n - 1 {
            Some(Expr::Sum(vec![var(i), var(i + 1)]))
        } else {
            None
        }
    });
    Expr::quot(Expr::sub(merged, prev), var(n as u32))
}

fn g1_float(s: &Float, prec: u32) -> Float {
    if s.is_zero() {
        return Float::with_val(prec, 1);
    }
    Float::with_val(prec, s.exp_m1_ref()) / s
}

fn g_int_rec(n: usize, s: &[Float], rel_tol: &Float, prec: u32) -> Result<Float, QuadError> {
    if n == 0 {
        return Ok(Float::with_val(prec, 1));
    }
    if n == 1 {
        return Ok(g1_float(&s[0], prec));
    }
    let zero = Float::with_val(prec, 0);
    let one = Float::with_val(prec, 1);
    let inner_tol = Float::with_val(prec, rel_tol / 8u32);
    let mut f = |r: &Float| -> Result<Float, QuadError> {
        let scaled: Vec<Float> = s[1..]
            .iter()
            .map(|x| Float::with_val(prec, x * r))
            .collect();
        let inner = g_int_rec(n - 1, &scaled, &inner_tol, prec)?;
        let head = Float::with_val(prec, &s[0] * r).exp();
        let rp = r.clone().pow(Float::with_val(prec, (n - 1) as u32));
        Ok(rp * head * inner)
    };
    integrate(&mut f, &zero, &one, rel_tol, prec)
}

/// Iterated-integral oracle for G_n:
/// G_n(s) = Int_0^1 r^{n-1} e^{s1 r} G_{n-1}(r s2, .., r sn) dr, G_0 = 1,
/// evaluated by nested adaptive Gauss–Legendre quadrature.
pub fn g_integral_oracle(n: usize, point: &[Rational], prec: u32) -> Result<Float, QuadError> {
    assert!((1..=4).contains(&n), "defined for n in 1..4");
    assert_eq!(point.len(), n);
    let s: Vec<Float> = point.iter().map(|q| Float::with_val(prec, q)).collect();
    let rel_tol = Float::with_val(prec, 1e-24f64);
    g_int_rec(n, &s, &rel_tol, prec)
}

// ------------------------------------------------------------- F_m, F^v_m

/// Multi-index entries must be non-negative; zero entries are removed by the
/// exact normalization identities of the defining integral:
///   F_(0,m1..mn)(u1..un)            = u1^(1-|m|) F_(m1..mn)(u2..un)
///   F_(..,0,..) interior            = merge u_j * u_{j+1}
///   F_(m0..m_{n-1},0)(u1..un)       = F_(m0..m_{n-1})(u1..u_{n-1})
/// after which the two-case recursion applies, down to
/// F_(1,1)(u) = log(u) / (u - 1) and F_(m0) = 1/(m0-1).
pub fn f_expr(m: &[i64]) -> Expr {
    let total: i64 = m.iter().sum();
    assert!(m.iter().all(|&x| x >= 0) && total >= 2, "invalid multi-index {:?}", m);
    // Zero-entry normalization.
    if let Some(j) = m.iter().position(|&x| x == 0) {
        if j == 0 {
            let inner = shift_vars(&f_expr(&m[1..]), 1);
            return Expr::prod(vec![
                Expr::pow(var(1), (1 - total) as i32),
                inner,
            ]);
        }
        if j == m.len() - 1 {
            return f_expr(&m[..j]);
        }
        let mut m2 = m.to_vec();
        m2.remove(j);
        let j = j as u32;
        return substitute_with(&f_expr(&m2), &|i| {
            if i < j {
                None
            } else if i == j {
                Some(Expr::prod(vec![var(j), var(j + 1)]))
            } else {
                Some(var(i + 1))
            }
        });
    }
    if m.len() == 1 {
        assert!(m[0] >= 2);
        return Expr::Rat(Rational::from((1, m[0] - 1)));
    }
    if m == [1, 1] {
        return Expr::quot(
            Expr::log(var(1)),
            Expr::sub(var(1), Expr::int(1)),
        );
    }
    // Reduce m1 first, then m0; zero entries normalize recursively.
    let mut a = m.to_vec();
    a[1] -= 1;
    let mut b = m.to_vec();
    b[0] -= 1;
    Expr::quot(
        Expr::sub(f_expr(&a), f_expr(&b)),
        Expr::sub(var(1), Expr::int(1)),
    )
}

/// F^v_m = (F_(m0,m1-1,..) + u1 * F_(m0-1,m1,..)) / (u1 - 1), zero entries
/// interpreted by the same normalization identities.
pub fn fv_expr(m: &[i64]) -> Expr {
    assert!(m.len() >= 2 && m[0] >= 1 && m[1] >= 1, "invalid multi-index {:?}", m);
    let mut a = m.to_vec();
    a[1] -= 1;
    let mut b = m.to_vec();
    b[0] -= 1;
    Expr::quot(
        Expr::Sum(vec![
            f_expr(&a),
            Expr::prod(vec![var(1), f_expr(&b)]),
        ]),
        Expr::sub(var(1), Expr::int(1)),
    )
}

fn eval_with_limits(
    e: &Expr,
    u: &[Rational],
    reg: &Registry,
    prec: u32,
) -> Result<Float, EvalError> {
    let env: Vec<Value> = u.iter().map(|q| Value::Exact(q.clone())).collect();
    match evaluate(e, &env, reg, prec) {
        Err(EvalError::Singular) => limit_eval_auto(e, &env, reg, prec),
        other => other,
    }
}

/// F_m at a positive point, with u_j = 1 degeneracies resolved by a
/// directional limit on the assembled expression.
pub fn f_m(m: &[i64], u: &[Rational], reg: &Registry, prec: u32) -> Result<Float, EvalError> {
    assert_eq!(u.len() + 1, m.len());
    assert!(
        u.iter().all(|q| q.cmp0() == std::cmp::Ordering::Greater),
        "u must be positive"
    );
    eval_with_limits(&f_expr(m), u, reg, prec)
}

/// F^v_m at a positive point.
pub fn fv_m(m: &[i64], u: &[Rational], reg: &Registry, prec: u32) -> Result<Float, EvalError> {
    assert_eq!(u.len() + 1, m.len());
    assert!(
        u.iter().all(|q| q.cmp0() == std::cmp::Ordering::Greater),
        "u must be positive"
    );
    eval_with_limits(&fv_expr(m), u, reg, prec)
}

fn f_quad_impl(
    m: &[i64],
    u: &[Rational],
    x_power: i64,
    prec: u32,
) -> Result<Float, QuadError> {
    // Cumulative products c_j = u_1 .. u_j.
    let mut cum = Vec::with_capacity(u.len());
    let mut acc = Rational::from(1);
    for q in u {
        acc *= q;
        cum.push(Float::with_val(prec, &acc));
    }
    let zero = Float::with_val(prec, 0);
    let one = Float::with_val(prec, 1);
    let rel_tol = Float::with_val(prec, 1e-22f64);
    let mut f = |t: &Float| -> Result<Float, QuadError> {
        let omt = Float::with_val(prec, 1 - t);
        if omt.is_zero() || t.is_zero() {
            return Ok(Float::with_val(prec, 0));
        }
        let x = Float::with_val(prec, t / &omt);
        let mut val = x.clone().pow(Float::with_val(prec, x_power));
        val /= Float::with_val(prec, &x + 1u32).pow(Float::with_val(prec, m[0]));
        for (j, c) in cum.iter().enumerate() {
            let factor = Float::with_val(prec, &x * c) + 1u32;
            val /= factor.pow(Float::with_val(prec, m[j + 1]));
        }
        // dx = dt / (1-t)^2
        Ok(val / Float::with_val(prec, &omt * &omt))
    };
    integrate(&mut f, &zero, &one, &rel_tol, prec)
}

/// Quadrature oracle for F_m:
/// Int_0^inf x^{|m|-2} (x+1)^{-m0} prod_j (x u1..uj + 1)^{-mj} dx,
/// substituted x = t/(1-t) onto (0,1).
pub fn f_quadrature_oracle(m: &[i64], u: &[Rational], prec: u32) -> Result<Float, QuadError> {
    let total: i64 = m.iter().sum();
    assert!(total >= 2);
    f_quad_impl(m, u, total - 2, prec)
}

/// Quadrature oracle for F^v_m (integrand exponent |m|-3).
pub fn fv_quadrature_oracle(m: &[i64], u: &[Rational], prec: u32) -> Result<Float, QuadError> {
    let total: i64 = m.iter().sum();
    assert!(total >= 3);
    f_quad_impl(m, u, total - 3, prec)
}

// --------------------------------------------------------- cyclic actions

/// Order-k rational coordinate action with its exponential weight.
pub struct CyclicAction {
    pub order: usize,
    pub dim: usize,
    mat: Vec<Vec<Rational>>,
    pub weight: Expr,
}

fn q(n: i64) -> Rational {
    Rational::from(n)
}

/// T2: s1 -> -s1, weight alpha_1 = exp(-s1/2).
pub fn t2() -> CyclicAction {
    CyclicAction {
        order: 2,
        dim: 1,
        mat: vec![vec![q(-1)]],
        weight: Expr::exp(Expr::neg(Expr::prod(vec![
            Expr::Rat(Rational::from((1, 2))),
            var(1),
        ]))),
    }
}

/// T3: (s1,s2) -> (-s1-s2, s1), weight alpha_2 = exp(-2 s1/3 - s2/3).
pub fn t3() -> CyclicAction {
    CyclicAction {
        order: 3,
        dim: 2,
        mat: vec![vec![q(-1), q(-1)], vec![q(1), q(0)]],
        weight: Expr::exp(Expr::neg(Expr::Sum(vec![
            Expr::prod(vec![Expr::Rat(Rational::from((2, 3))), var(1)]),
            Expr::prod(vec![Expr::Rat(Rational::from((1, 3))), var(2)]),
        ]))),
    }
}

/// T4: (s1,s2,s3) -> (-s1-s2-s3, s1, s2),
/// weight alpha_3 = exp(-3 s1/4 - s2/2 - s3/4).
pub fn t4() -> CyclicAction {
    CyclicAction {
        order: 4,
        dim: 3,
        mat: vec![
            vec![q(-1), q(-1), q(-1)],
            vec![q(1), q(0), q(0)],
            vec![q(0), q(1), q(0)],
        ],
        weight: Expr::exp(Expr::neg(Expr::Sum(vec![
            Expr::prod(vec![Expr::Rat(Rational::from((3, 4))), var(1)]),
            Expr::prod(vec![Expr::Rat(Rational::from((1, 2))), var(2)]),
            Expr::prod(vec![Expr::Rat(Rational::from((1, 4))), var(3)]),
        ]))),
    }
}

impl CyclicAction {
    /// Exact matrix power of the generator.
    fn mat_power(&self, power: usize) -> Vec<Vec<Rational>> {
        let n = self.dim;
        let mut out: Vec<Vec<Rational>> = (0..n)
            .map(|i| (0..n).map(|j| q((i == j) as i64)).collect())
            .collect();
        for _ in 0..(power % self.order) {
            let mut next = vec![vec![Rational::new(); n]; n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = Rational::new();
                    for (k, mk) in self.mat[i].iter().enumerate() {
                        acc += Rational::from(mk * &out[k][j]);
                    }
                    next[i][j] = acc;
                }
            }
            out = next;
        }
        out
    }

    /// Exact image of a point under the `power`-th iterate.
    pub fn apply(&self, power: usize, p: &[Rational]) -> Vec<Rational> {
        assert_eq!(p.len(), self.dim, "dimension mismatch");
        let m = self.mat_power(power);
        m.iter()
            .map(|row| {
                let mut acc = Rational::new();
                for (c, x) in row.iter().zip(p) {
                    acc += Rational::from(c * x);
                }
                acc
            })
            .collect()
    }

    /// Pullback: substitute each variable by its linear image under the
    /// `power`-th iterate, so that pullback(e) evaluated at p equals e
    /// evaluated at apply(power, p).
    pub fn pullback(&self, power: usize, e: &Expr) -> Expr {
        let m = self.mat_power(power);
        substitute_with(e, &|i| {
            let row = m.get((i - 1) as usize)?;
            let mut terms = Vec::new();
            for (j, c) in row.iter().enumerate() {
                if c.cmp0() == std::cmp::Ordering::Equal {
                    continue;
                }
                let v = var(j as u32 + 1);
                if *c == 1 {
                    terms.push(v);
                } else if *c == -1i32 {
                    terms.push(Expr::neg(v));
                } else {
                    terms.push(Expr::prod(vec![Expr::rat(c.clone()), v]));
                }
            }
            Some(match terms.len() {
                0 => Expr::int(0),
                1 => terms.pop().unwrap(),
                _ => Expr::Sum(terms),
            })
        })
    }

    /// Sum of `e` over the full orbit: Sum_i evaluate(pullback(i, e), p).
    pub fn averaging_residual(
        &self,
        e: &Expr,
        p: &[Rational],
        reg: &Registry,
        prec: u32,
    ) -> Result<Float, EvalError> {
        let env: Vec<Value> = p.iter().map(|x| Value::Exact(x.clone())).collect();
        let mut acc = Float::with_val(prec, 0);
        for i in 0..self.order {
            let image = self.pullback(i, e);
            acc += match evaluate(&image, &env, reg, prec) {
                Err(EvalError::Singular) => limit_eval_auto(&image, &env, reg, prec)?,
                other => other?,
            };
        }
        Ok(acc)
    }
}

/// Q2 (order 3, dimension 2) and Q3 (order 4, dimension 3): the positive
/// definite quadratic invariants of the cyclic actions.
pub fn quadratic_form(order: usize, p: &[Rational]) -> Result<Rational, String> {
    match (order, p.len()) {
        (3, 2) => {
            let (a, b) = (&p[0], &p[1]);
            Ok(Rational::from(a * a) + Rational::from(b * b) + Rational::from(a * b))
        }
        (4, 3) => {
            let (a, b, c) = (&p[0], &p[1], &p[2]);
            Ok(Rational::from(a * a)
                + Rational::from(b * b)
                + Rational::from(c * c)
                + Rational::from(a * b)
                + Rational::from(b * c)
                + Rational::from(c * a))
        }
        _ => Err(format!(
            "quadratic form: order {} expects dimension {}, got {}",
            order,
            if order == 3 { 2 } else { 3 },
            p.len()
        )),
    }
}

// ------------------------------------------------------ kernel combinators

fn lsub(l: &Expr, args: &[Expr]) -> Expr {
    substitute_with(l, &|i| args.get((i - 1) as usize).cloned())
}

fn s(i: u32) -> Expr {
    var(i)
}

fn nsum(idx: &[u32]) -> Expr {
    Expr::neg(Expr::Sum(idx.iter().map(|&i| var(i)).collect()))
}

fn sum(idx: &[u32]) -> Expr {
    Expr::Sum(idx.iter().map(|&i| var(i)).collect())
}

fn esum(idx: &[u32]) -> Expr {
    Expr::exp(sum(idx))
}

/// Finite-difference kernel Leps_{family,slot} applied to `l` (arity =
/// family); the result has arity family + 1.
pub fn eps_kernel(family: usize, slot: usize, l: &Expr) -> Result<Expr, String> {
    let bad = || Err(format!("eps kernel: no slot {} in family {}", slot, family));
    let e = match (family, slot) {
        (1, 1) => Expr::prod(vec![
            esum(&[1, 2]),
            Expr::quot(
                Expr::sub(lsub(l, &[nsum(&[2])]), lsub(l, &[s(1)])),
                sum(&[1, 2]),
            ),
        ]),
        (1, 2) => Expr::prod(vec![
            esum(&[1]),
            Expr::quot(
                Expr::sub(lsub(l, &[s(2)]), lsub(l, &[nsum(&[1])])),
                sum(&[1, 2]),
            ),
        ]),
        (2, 1) => Expr::prod(vec![
            esum(&[1, 2, 3]),
            Expr::quot(
                Expr::sub(lsub(l, &[nsum(&[2, 3]), s(2)]), lsub(l, &[s(1), s(2)])),
                sum(&[1, 2, 3]),
            ),
        ]),
        (2, 2) => Expr::prod(vec![
            esum(&[1, 2]),
            Expr::quot(
                Expr::sub(
                    lsub(l, &[s(3), nsum(&[2, 3])]),
                    lsub(l, &[nsum(&[1, 2]), s(1)]),
                ),
                sum(&[1, 2, 3]),
            ),
        ]),
        (2, 3) => Expr::prod(vec![
            esum(&[1]),
            Expr::quot(
                Expr::sub(lsub(l, &[s(2), s(3)]), lsub(l, &[s(2), nsum(&[1, 2])])),
                sum(&[1, 2, 3]),
            ),
        ]),
        (3, 1) => Expr::prod(vec![
            esum(&[1, 2, 3, 4]),
            Expr::quot(
                Expr::sub(
                    lsub(l, &[nsum(&[2, 3, 4]), s(2), s(3)]),
                    lsub(l, &[s(1), s(2), s(3)]),
                ),
                sum(&[1, 2, 3, 4]),
            ),
        ]),
        (3, 2) => Expr::prod(vec![
            esum(&[1, 2, 3]),
            Expr::quot(
                Expr::sub(
                    lsub(l, &[s(4), nsum(&[2, 3, 4]), s(2)]),
                    lsub(l, &[nsum(&[1, 2, 3]), s(1), s(2)]),
                ),
                sum(&[1, 2, 3, 4]),
            ),
        ]),
        (3, 3) => Expr::prod(vec![
            esum(&[1, 2]),
            Expr::quot(
                Expr::sub(
                    lsub(l, &[s(3), s(4), nsum(&[2, 3, 4])]),
                    lsub(l, &[s(3), nsum(&[1, 2, 3]), s(1)]),
                ),
                sum(&[1, 2, 3, 4]),
            ),
        ]),
        (3, 4) => Expr::prod(vec![
            esum(&[1]),
            Expr::quot(
                Expr::sub(
                    lsub(l, &[s(2), s(3), s(4)]),
                    lsub(l, &[s(2), s(3), nsum(&[1, 2, 3])]),
                ),
                sum(&[1, 2, 3, 4]),
            ),
        ]),
        _ => return bad(),
    };
    Ok(e)
}

/// Finite-difference kernel Ldelta_{family,slot} applied to `l`.
pub fn delta_kernel(family: usize, slot: usize, l: &Expr) -> Result<Expr, String> {
    let bad = || Err(format!("delta kernel: no slot {} in family {}", slot, family));
    let e = match (family, slot) {
        (1, 1) => Expr::quot(
            Expr::sub(lsub(l, &[s(2)]), lsub(l, &[sum(&[1, 2])])),
            s(1),
        ),
        (1, 2) => Expr::quot(
            Expr::sub(lsub(l, &[sum(&[1, 2])]), lsub(l, &[s(1)])),
            s(2),
        ),
        (2, 1) => Expr::quot(
            Expr::sub(lsub(l, &[s(2), s(3)]), lsub(l, &[sum(&[1, 2]), s(3)])),
            s(1),
        ),
        (2, 2) => Expr::quot(
            Expr::sub(
                lsub(l, &[sum(&[1, 2]), s(3)]),
                lsub(l, &[s(1), sum(&[2, 3])]),
            ),
            s(2),
        ),
        (2, 3) => Expr::quot(
            Expr::sub(lsub(l, &[s(1), sum(&[2, 3])]), lsub(l, &[s(1), s(2)])),
            s(3),
        ),
        (3, 1) => Expr::quot(
            Expr::sub(
                lsub(l, &[s(2), s(3), s(4)]),
                lsub(l, &[sum(&[1, 2]), s(3), s(4)]),
            ),
            s(1),
        ),
        (3, 2) => Expr::quot(
            Expr::sub(
                lsub(l, &[sum(&[1, 2]), s(3), s(4)]),
                lsub(l, &[s(1), sum(&[2, 3]), s(4)]),
            ),
            s(2),
        ),
        (3, 3) => Expr::quot(
            Expr::sub(
                lsub(l, &[s(1), sum(&[2, 3]), s(4)]),
                lsub(l, &[s(1), s(2), sum(&[3, 4])]),
            ),
            s(3),
        ),
        (3, 4) => Expr::quot(
            Expr::sub(
                lsub(l, &[s(1), s(2), sum(&[3, 4])]),
                lsub(l, &[s(1), s(2), s(3)]),
            ),
            s(4),
        ),
        _ => return bad(),
    };
    Ok(e)
}
