//! Arbitrary-precision evaluation with exact singularity detection and
//! directional limits at removable singularities.
//!
//! Two invariants keep pole detection honest:
//!
//! * Call arguments and quotient denominators are evaluated in **exact
//!   rational arithmetic** whenever the subtree is rational in the bindings.
//!   The singular sets of the corpus are rational hyperplanes; a rounded
//!   float argument would turn an exact pole into a near-pole that evaluates
//!   to catastrophically cancelled garbage instead of raising `Singular`.
//! * A diverging limit inside a call **re-raises** `Singular`, so an
//!   enclosing call can take the limit of the full, cancelling combination.

use crate::expr::Expr;
use crate::registry::Registry;
use rug::ops::Pow as RugPow;
use rug::{Float, Integer, Rational};
use std::fmt;

/// Extra bits of working precision used inside the limit ladder: the corpus
/// numerators vanish to order up to ~11 at the origin, so evaluation at
/// offsets down to 2^-49 can cancel ~550 bits; 700 guard bits leave margin
/// for one extra nesting level.
pub const LIMIT_GUARD_BITS: u32 = 700;

/// Dyadic offsets 2^-k for k in LADDER_LO..LADDER_HI form the extrapolation
/// ladder.
const LADDER_LO: u32 = 12;
const LADDER_HI: u32 = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// Division by an exact zero: the point lies on a singular hyperplane.
    Singular,
    /// The directional limit did not converge (a genuine pole).
    Diverged,
    /// Unknown call name.
    Undefined(String),
    /// Call with the wrong number of arguments.
    Arity {
        name: String,
        expect: usize,
        got: usize,
    },
    /// Domain error (logarithm of a non-positive value).
    Domain(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Singular => write!(f, "singular point (division by exact zero)"),
            EvalError::Diverged => write!(f, "directional limit did not converge"),
            EvalError::Undefined(n) => write!(f, "undefined function {:?}", n),
            EvalError::Arity { name, expect, got } => {
                write!(f, "{} expects {} argument(s), got {}", name, expect, got)
            }
            EvalError::Domain(m) => write!(f, "domain error: {}", m),
        }
    }
}

impl std::error::Error for EvalError {}

/// A binding value: exact rational when available, float otherwise.
#[derive(Debug, Clone)]
pub enum Value {
    Exact(Rational),
    Approx(Float),
}

impl Value {
    pub fn to_float(&self, prec: u32) -> Float {
        match self {
            Value::Exact(q) => Float::with_val(prec, q),
            Value::Approx(f) => f.clone(),
        }
    }

    /// Deterministic cache-key string.
    pub fn key(&self) -> String {
        match self {
            Value::Exact(q) => q.to_string(),
            Value::Approx(f) => format!("~{}", f.to_string_radix(16, None)),
        }
    }
}

/// Exact rational value of `e` under `env`, or `None` when the subtree is
/// not rational in the bindings (contains pi, exp, log, a call, or an
/// approximate binding).
pub fn eval_exact(e: &Expr, env: &[Value]) -> Option<Rational> {
    match e {
        Expr::Rat(q) => Some(q.clone()),
        Expr::Pi => None,
        Expr::Var(i) => match env.get((*i - 1) as usize) {
            Some(Value::Exact(q)) => Some(q.clone()),
            _ => None,
        },
        Expr::Neg(a) => eval_exact(a, env).map(|q| -q),
        Expr::Sum(terms) => {
            let mut acc = Rational::new();
            for t in terms {
                acc += eval_exact(t, env)?;
            }
            Some(acc)
        }
        Expr::Prod(factors) => {
            let mut acc = Rational::from(1);
            for t in factors {
                acc *= eval_exact(t, env)?;
            }
            Some(acc)
        }
        Expr::Quot(a, b) => {
            let num = eval_exact(a, env)?;
            let den = eval_exact(b, env)?;
            if den.cmp0() == std::cmp::Ordering::Equal {
                None
            } else {
                Some(num / den)
            }
        }
        Expr::Pow(b, k) => {
            let base = eval_exact(b, env)?;
            if base.cmp0() == std::cmp::Ordering::Equal && *k < 0 {
                None
            } else {
                Some(base.pow(*k))
            }
        }
        Expr::Exp(_) | Expr::Log(_) | Expr::Call(_, _) => None,
    }
}

/// Evaluate `e` at the bindings `env` with `prec` bits of precision.
pub fn evaluate(e: &Expr, env: &[Value], reg: &Registry, prec: u32) -> Result<Float, EvalError> {
    match e {
        Expr::Rat(q) => Ok(Float::with_val(prec, q)),
        Expr::Pi => Ok(Float::with_val(prec, rug::float::Constant::Pi)),
        Expr::Var(i) => match env.get((*i - 1) as usize) {
            Some(v) => Ok(v.to_float(prec)),
            None => Err(EvalError::Arity {
                name: format!("s{}", i),
                expect: env.len(),
                got: *i as usize,
            }),
        },
        Expr::Neg(a) => Ok(-evaluate(a, env, reg, prec)?),
        Expr::Sum(terms) => {
            let mut acc = Float::with_val(prec, 0);
            for t in terms {
                acc += evaluate(t, env, reg, prec)?;
            }
            Ok(acc)
        }
        Expr::Prod(factors) => {
            let mut acc = Float::with_val(prec, 1);
            for t in factors {
                acc *= evaluate(t, env, reg, prec)?;
            }
            Ok(acc)
        }
        Expr::Quot(a, b) => {
            let den = match eval_exact(b, env) {
                Some(q) => {
                    if q.cmp0() == std::cmp::Ordering::Equal {
                        return Err(EvalError::Singular);
                    }
                    Float::with_val(prec, q)
                }
                None => {
                    let d = evaluate(b, env, reg, prec)?;
                    if d.is_zero() {
                        return Err(EvalError::Singular);
                    }
                    d
                }
            };
            Ok(evaluate(a, env, reg, prec)? / den)
        }
        Expr::Pow(b, k) => {
            let base = match eval_exact(b, env) {
                Some(q) => {
                    if q.cmp0() == std::cmp::Ordering::Equal && *k < 0 {
                        return Err(EvalError::Singular);
                    }
                    Float::with_val(prec, q)
                }
                None => {
                    let v = evaluate(b, env, reg, prec)?;
                    if v.is_zero() && *k < 0 {
                        return Err(EvalError::Singular);
                    }
                    v
                }
            };
            Ok(base.pow(*k))
        }
        Expr::Exp(a) => Ok(evaluate(a, env, reg, prec)?.exp()),
        Expr::Log(a) => {
            let v = evaluate(a, env, reg, prec)?;
            if v <= 0 {
                return Err(EvalError::Domain("log of a non-positive value".into()));
            }
            Ok(v.ln())
        }
        Expr::Call(name, args) => {
            let def = reg.resolve(name)?;
            if args.len() != def.arity {
                return Err(EvalError::Arity {
                    name: name.to_string(),
                    expect: def.arity,
                    got: args.len(),
                });
            }
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                match eval_exact(a, env) {
                    Some(q) => vals.push(Value::Exact(q)),
                    None => vals.push(Value::Approx(evaluate(a, env, reg, prec)?)),
                }
            }
            let key = (
                name.to_string(),
                vals.iter().map(Value::key).collect::<Vec<_>>(),
                prec,
            );
            if let Some(v) = reg.cache_get(&key) {
                return Ok(v);
            }
            let result = match evaluate(&def.body, &vals, reg, prec) {
                Ok(v) => v,
                Err(EvalError::Singular) => match limit_eval_auto(&def.body, &vals, reg, prec) {
                    Ok(v) => v,
                    // Genuine pole here: escalate so an enclosing call can
                    // take the limit of the full, cancelling combination.
                    Err(EvalError::Diverged) => return Err(EvalError::Singular),
                    Err(other) => return Err(other),
                },
                Err(other) => return Err(other),
            };
            reg.cache_put(key, result.clone());
            Ok(result)
        }
    }
}

/// Generic rational directions with all partial sums nonzero; the second is
/// a fallback for expressions singular along the first.
pub fn default_directions() -> [Vec<Rational>; 2] {
    let d1 = [(1, 1), (1, 7), (1, 49), (1, 343)];
    let d2 = [(1, 1), (-1, 5), (1, 23), (-1, 101)];
    [
        d1.iter().map(|&(n, d)| Rational::from((n, d))).collect(),
        d2.iter().map(|&(n, d)| Rational::from((n, d))).collect(),
    ]
}

/// Directional limit of `e` at `point` along `dir` (both exact), by Neville
/// extrapolation over the dyadic offset ladder eps = 2^-k.
pub fn limit_eval(
    e: &Expr,
    point: &[Rational],
    dir: &[Rational],
    reg: &Registry,
    prec: u32,
) -> Result<Float, EvalError> {
    let vals: Vec<Value> = point.iter().map(|q| Value::Exact(q.clone())).collect();
    limit_dir(e, &vals, dir, reg, prec)
}

/// Limit along the default direction ladder, falling back to the second
/// generic direction if the first lies inside a singular set.
pub fn limit_eval_auto(
    e: &Expr,
    point: &[Value],
    reg: &Registry,
    prec: u32,
) -> Result<Float, EvalError> {
    let mut last = EvalError::Diverged;
    for dir in default_directions() {
        match limit_dir(e, point, &dir[..point.len().min(dir.len())], reg, prec) {
            Ok(v) => return Ok(v),
            Err(EvalError::Singular) | Err(EvalError::Diverged) => {
                last = EvalError::Diverged;
                continue;
            }
            Err(other) => return Err(other),
        }
    }
    Err(last)
}

fn limit_dir(
    e: &Expr,
    point: &[Value],
    dir: &[Rational],
    reg: &Registry,
    prec0: u32,
) -> Result<Float, EvalError> {
    if dir.len() < point.len() {
        return Err(EvalError::Domain("direction dimension mismatch".into()));
    }
    let wprec = prec0 + LIMIT_GUARD_BITS;
    let tol_bits = prec0.saturating_sub(16).max(8);
    let tol = Float::with_val(wprec, Float::i_exp(1, -(tol_bits as i32)));
    let mut vals: Vec<Float> = Vec::new();
    let mut hs: Vec<Float> = Vec::new();
    let mut best: Option<Float> = None;
    let mut grow = 0u32;
    for k in LADDER_LO..LADDER_HI {
        let eps = Rational::from((Integer::from(1), Integer::from(1) << k));
        let env: Vec<Value> = point
            .iter()
            .zip(dir.iter())
            .map(|(p, d)| {
                let step = Rational::from(&eps * d);
                match p {
                    Value::Exact(q) => Value::Exact(Rational::from(q + &step)),
                    Value::Approx(f) => {
                        Value::Approx(Float::with_val(wprec, f + Float::with_val(wprec, step)))
                    }
                }
            })
            .collect();
        let fv = match evaluate(e, &env, reg, wprec) {
            Ok(v) => v,
            Err(EvalError::Singular) => continue,
            Err(other) => return Err(other),
        };
        if let Some(last) = vals.last() {
            let fa = Float::with_val(wprec, fv.abs_ref());
            let la = Float::with_val(wprec, last.abs_ref());
            if fa > la * 4u32 && fa > 1e6 {
                grow += 1;
                if grow >= 4 {
                    break; // diverging like a power of 1/eps
                }
            }
        }
        hs.push(Float::with_val(wprec, &eps));
        vals.push(fv);
        // Neville extrapolation to eps = 0, in place on a copy.
        let n = vals.len();
        let mut row = vals.clone();
        for j in 1..n {
            for i in (j..n).rev() {
                let num = Float::with_val(wprec, &row[i] - &row[i - 1]);
                let den = Float::with_val(wprec, &hs[i - j] - &hs[i]);
                let t = num * &hs[i] / den;
                row[i] += t;
            }
        }
        if n >= 2 {
            let cur = row[n - 1].clone();
            if let Some(prev) = &best {
                let err = Float::with_val(wprec, &cur - prev).abs();
                let mut scale = Float::with_val(wprec, cur.abs_ref());
                if scale < 1 {
                    scale = Float::with_val(wprec, 1);
                }
                if err < scale * &tol {
                    return Ok(Float::with_val(prec0, &cur));
                }
            }
            best = Some(cur);
        }
    }
    Err(EvalError::Diverged)
}

/// Evaluate an arbitrary expression at an exact rational point, taking the
/// directional limit automatically when the point is singular.
pub fn evaluate_or_limit(
    e: &Expr,
    point: &[Rational],
    reg: &Registry,
    prec: u32,
) -> Result<Float, EvalError> {
    let env: Vec<Value> = point.iter().map(|q| Value::Exact(q.clone())).collect();
    match evaluate(e, &env, reg, prec) {
        Err(EvalError::Singular) => limit_eval_auto(e, &env, reg, prec),
        other => other,
    }
}

/// Evaluate a registered function at an exact rational point, taking the
/// directional limit automatically when the point is singular.
pub fn evaluate_name(
    name: &str,
    point: &[Rational],
    reg: &Registry,
    prec: u32,
) -> Result<Float, EvalError> {
    let def = reg.resolve(name)?;
    if point.len() != def.arity {
        return Err(EvalError::Arity {
            name: name.to_string(),
            expect: def.arity,
            got: point.len(),
        });
    }
    let env: Vec<Value> = point.iter().map(|q| Value::Exact(q.clone())).collect();
    match evaluate(&def.body, &env, reg, prec) {
        Err(EvalError::Singular) => limit_eval_auto(&def.body, &env, reg, prec),
        other => other,
    }
}
