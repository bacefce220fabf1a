//! Immutable expression trees over variables `s1..sn`, exact rationals, pi,
//! exponentials and registered function calls.

use rug::Rational;
use std::fmt;
use std::sync::Arc;

/// Expression tree node. Trees are immutable after construction and cheap to
/// share via `Arc` subtrees.
///
/// Variables are plain 1-based indices, so substitution has no capture
/// issues. `Pow` carries a (possibly negative) integer exponent. `Log` is
/// never produced by the corpus grammar; it is constructed programmatically
/// by the rearrangement-function recursion (the parser accepts `log(...)` as
/// a strict superset so printed trees always round-trip).
#[derive(Clone, PartialEq, Debug)]
pub enum Expr {
    Rat(Rational),
    Pi,
    Var(u32),
    Neg(Arc<Expr>),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Quot(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, i32),
    Exp(Arc<Expr>),
    Log(Arc<Expr>),
    Call(Arc<str>, Vec<Expr>),
}

impl Expr {
    /// Rational constant; negative values are normalized to `Neg` of the
    /// absolute value so programmatic trees print under the grammar (which
    /// has no signed number literals) and still round-trip structurally.
    pub fn rat(q: Rational) -> Expr {
        if q.cmp0() == std::cmp::Ordering::Less {
            Expr::Neg(Arc::new(Expr::Rat(-q)))
        } else {
            Expr::Rat(q)
        }
    }

    pub fn int(n: i64) -> Expr {
        Expr::rat(Rational::from(n))
    }

    pub fn var(i: u32) -> Expr {
        Expr::Var(i)
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Arc::new(e))
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        Expr::Sum(terms)
    }

    pub fn prod(factors: Vec<Expr>) -> Expr {
        Expr::Prod(factors)
    }

    pub fn quot(num: Expr, den: Expr) -> Expr {
        Expr::Quot(Arc::new(num), Arc::new(den))
    }

    pub fn pow(base: Expr, k: i32) -> Expr {
        Expr::Pow(Arc::new(base), k)
    }

    pub fn exp(e: Expr) -> Expr {
        Expr::Exp(Arc::new(e))
    }

    pub fn log(e: Expr) -> Expr {
        Expr::Log(Arc::new(e))
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call(Arc::from(name), args)
    }

    /// Difference a - b, printed as such.
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sum(vec![a, Expr::neg(b)])
    }

    /// Largest variable index appearing in the tree (0 when constant).
    pub fn max_var(&self) -> u32 {
        match self {
            Expr::Rat(_) | Expr::Pi => 0,
            Expr::Var(i) => *i,
            Expr::Neg(e) | Expr::Exp(e) | Expr::Log(e) => e.max_var(),
            Expr::Pow(e, _) => e.max_var(),
            Expr::Quot(a, b) => a.max_var().max(b.max_var()),
            Expr::Sum(v) | Expr::Prod(v) | Expr::Call(_, v) => {
                v.iter().map(Expr::max_var).max().unwrap_or(0)
            }
        }
    }

    /// Collect every call name in the tree into `out`.
    pub fn call_names(&self, out: &mut Vec<String>) {
        match self {
            Expr::Rat(_) | Expr::Pi | Expr::Var(_) => {}
            Expr::Neg(e) | Expr::Exp(e) | Expr::Log(e) => e.call_names(out),
            Expr::Pow(e, _) => e.call_names(out),
            Expr::Quot(a, b) => {
                a.call_names(out);
                b.call_names(out);
            }
            Expr::Sum(v) | Expr::Prod(v) => v.iter().for_each(|e| e.call_names(out)),
            Expr::Call(name, args) => {
                out.push(name.to_string());
                args.iter().for_each(|e| e.call_names(out));
            }
        }
    }
}

/// Exact symbolic partial derivative with respect to variable `var`.
///
/// Derivatives of call nodes are expressed through synthetic `<name>_d<i>`
/// calls (chain rule); the registry materializes those bodies lazily.
pub fn differentiate(e: &Expr, var: u32) -> Expr {
    let zero = || Expr::Rat(Rational::new());
    match e {
        Expr::Rat(_) | Expr::Pi => zero(),
        Expr::Var(i) => {
            if *i == var {
                Expr::Rat(Rational::from(1))
            } else {
                zero()
            }
        }
        Expr::Neg(a) => Expr::neg(differentiate(a, var)),
        Expr::Sum(terms) => Expr::Sum(terms.iter().map(|t| differentiate(t, var)).collect()),
        Expr::Prod(factors) => {
            let mut terms = Vec::with_capacity(factors.len());
            for i in 0..factors.len() {
                let mut fs = factors.clone();
                fs[i] = differentiate(&factors[i], var);
                terms.push(Expr::Prod(fs));
            }
            Expr::Sum(terms)
        }
        Expr::Quot(a, b) => {
            let da = differentiate(a, var);
            let db = differentiate(b, var);
            Expr::quot(
                Expr::sub(
                    Expr::Prod(vec![da, (**b).clone()]),
                    Expr::Prod(vec![(**a).clone(), db]),
                ),
                Expr::pow((**b).clone(), 2),
            )
        }
        Expr::Pow(b, k) => Expr::Prod(vec![
            Expr::int(*k as i64),
            Expr::pow((**b).clone(), k - 1),
            differentiate(b, var),
        ]),
        Expr::Exp(a) => Expr::Prod(vec![e.clone(), differentiate(a, var)]),
        Expr::Log(a) => Expr::quot(differentiate(a, var), (**a).clone()),
        Expr::Call(name, args) => {
            let mut terms = Vec::new();
            for (i, a) in args.iter().enumerate() {
                let da = differentiate(a, var);
                if matches!(&da, Expr::Rat(q) if q.cmp0() == std::cmp::Ordering::Equal) {
                    continue;
                }
                terms.push(Expr::Prod(vec![
                    Expr::call(&format!("{}_d{}", name, i + 1), args.clone()),
                    da,
                ]));
            }
            if terms.is_empty() {
                zero()
            } else {
                Expr::Sum(terms)
            }
        }
    }
}

/// Simultaneous substitution of variables by expressions. `bind(i)` returns
/// the replacement for variable `i`, or `None` to leave it untouched.
pub fn substitute_with(e: &Expr, bind: &dyn Fn(u32) -> Option<Expr>) -> Expr {
    match e {
        Expr::Rat(_) | Expr::Pi => e.clone(),
        Expr::Var(i) => bind(*i).unwrap_or_else(|| e.clone()),
        Expr::Neg(a) => Expr::neg(substitute_with(a, bind)),
        Expr::Sum(v) => Expr::Sum(v.iter().map(|t| substitute_with(t, bind)).collect()),
        Expr::Prod(v) => Expr::Prod(v.iter().map(|t| substitute_with(t, bind)).collect()),
        Expr::Quot(a, b) => Expr::quot(substitute_with(a, bind), substitute_with(b, bind)),
        Expr::Pow(a, k) => Expr::pow(substitute_with(a, bind), *k),
        Expr::Exp(a) => Expr::exp(substitute_with(a, bind)),
        Expr::Log(a) => Expr::log(substitute_with(a, bind)),
        Expr::Call(name, args) => Expr::Call(
            name.clone(),
            args.iter().map(|a| substitute_with(a, bind)).collect(),
        ),
    }
}

/// Substitution from an explicit (variable index -> expression) list.
pub fn substitute(e: &Expr, bindings: &[(u32, Expr)]) -> Expr {
    substitute_with(e, &|i| {
        bindings
            .iter()
            .find(|(j, _)| *j == i)
            .map(|(_, r)| r.clone())
    })
}

// ---------------------------------------------------------------- printing

/// Grammar levels: 0 = expr (+,-), 1 = term (*,/), 2 = factor (^),
/// 3 = base (unary minus), 4 = atom.
fn level(e: &Expr) -> u8 {
    match e {
        Expr::Sum(_) => 0,
        Expr::Prod(_) | Expr::Quot(_, _) => 1,
        Expr::Pow(_, _) => 2,
        Expr::Neg(_) => 3,
        Expr::Rat(_) | Expr::Pi | Expr::Var(_) | Expr::Exp(_) | Expr::Log(_) | Expr::Call(_, _) => {
            4
        }
    }
}

fn write_at(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if level(e) < min {
        write!(f, "(")?;
        write_at(e, 0, f)?;
        return write!(f, ")");
    }
    match e {
        Expr::Rat(q) => write!(f, "{}", q),
        Expr::Pi => write!(f, "pi"),
        Expr::Var(i) => write!(f, "s{}", i),
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_at(a, 3, f)
        }
        Expr::Sum(terms) => {
            for (i, t) in terms.iter().enumerate() {
                if i == 0 {
                    write_at(t, 1, f)?;
                } else if let Expr::Neg(inner) = t {
                    write!(f, " - ")?;
                    write_at(inner, 1, f)?;
                } else {
                    write!(f, " + ")?;
                    write_at(t, 1, f)?;
                }
            }
            Ok(())
        }
        Expr::Prod(factors) => {
            for (i, t) in factors.iter().enumerate() {
                if i > 0 {
                    write!(f, " * ")?;
                }
                write_at(t, if i == 0 { 1 } else { 2 }, f)?;
            }
            Ok(())
        }
        Expr::Quot(a, b) => {
            write_at(a, 1, f)?;
            write!(f, " / ")?;
            write_at(b, 2, f)
        }
        Expr::Pow(b, k) => {
            write_at(b, 3, f)?;
            write!(f, "^{}", k)
        }
        Expr::Exp(a) => {
            write!(f, "exp(")?;
            write_at(a, 0, f)?;
            write!(f, ")")
        }
        Expr::Log(a) => {
            write!(f, "log(")?;
            write_at(a, 0, f)?;
            write!(f, ")")
        }
        Expr::Call(name, args) => {
            write!(f, "{}(", name)?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_at(a, 0, f)?;
            }
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_at(self, 0, f)
    }
}
