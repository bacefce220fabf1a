//! Structural analysis: expand a registered function into an exact
//! exponential-polynomial fraction, extract its monomial lattice, assemble
//! the linear smoothness conditions imposed by the denominator's vanishing
//! loci, and decide rank / kernel membership with fraction-free elimination.

use crate::expr::Expr;
use crate::registry::Registry;
use rug::{Integer, Rational};
use serde_json::json;
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StructError {
    #[error("skipped: size")]
    SizeBudget,
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("{0}")]
    Other(String),
}

/// Hard caps; exceeding any of them yields `SizeBudget` rather than an
/// open-ended computation.
#[derive(Debug, Clone)]
pub struct Budget {
    /// Maximum number of terms in any intermediate polynomial.
    pub max_terms: usize,
    /// Maximum call-inlining depth.
    pub max_depth: usize,
    /// Cap on vanishing-order searches.
    pub max_order: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_terms: 50_000,
            max_depth: 64,
            max_order: 64,
        }
    }
}

// ------------------------------------------------------- exponential polys

/// Monomial `s^a * exp(<w, s>) * pi^p` with exact rational exponent
/// weights `w`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono {
    pub s: Vec<i64>,
    pub w: Vec<Rational>,
    pub pi: i64,
}

impl Mono {
    fn one(n: usize) -> Mono {
        Mono {
            s: vec![0; n],
            w: vec![Rational::new(); n],
            pi: 0,
        }
    }

    fn mul(&self, other: &Mono) -> Mono {
        Mono {
            s: self
                .s
                .iter()
                .zip(&other.s)
                .map(|(a, b)| a + b)
                .collect(),
            w: self
                .w
                .iter()
                .zip(&other.w)
                .map(|(a, b)| Rational::from(a + b))
                .collect(),
            pi: self.pi + other.pi,
        }
    }
}

/// Exact linear combination of `Mono`s.
#[derive(Debug, Clone)]
pub struct ExpPoly {
    pub nvars: usize,
    pub terms: HashMap<Mono, Rational>,
}

impl ExpPoly {
    pub fn zero(n: usize) -> ExpPoly {
        ExpPoly {
            nvars: n,
            terms: HashMap::new(),
        }
    }

    pub fn constant(n: usize, q: Rational) -> ExpPoly {
        let mut p = ExpPoly::zero(n);
        if q.cmp0() != std::cmp::Ordering::Equal {
            p.terms.insert(Mono::one(n), q);
        }
        p
    }

    pub fn var(n: usize, i: usize) -> ExpPoly {
        let mut m = Mono::one(n);
        m.s[i] = 1;
        let mut p = ExpPoly::zero(n);
        p.terms.insert(m, Rational::from(1));
        p
    }

    pub fn pi(n: usize) -> ExpPoly {
        let mut m = Mono::one(n);
        m.pi = 1;
        let mut p = ExpPoly::zero(n);
        p.terms.insert(m, Rational::from(1));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Mono, c: Rational) {
        if c.cmp0() == std::cmp::Ordering::Equal {
            return;
        }
        let e = self.terms.entry(m);
        match e {
            std::collections::hash_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().cmp0() == std::cmp::Ordering::Equal {
                    o.remove();
                }
            }
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add(&self, other: &ExpPoly, budget: &Budget) -> Result<ExpPoly, StructError> {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        if out.terms.len() > budget.max_terms {
            return Err(StructError::SizeBudget);
        }
        Ok(out)
    }

    pub fn neg(&self) -> ExpPoly {
        let mut out = ExpPoly::zero(self.nvars);
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), Rational::from(-c.clone()));
        }
        out
    }

    pub fn mul(&self, other: &ExpPoly, budget: &Budget) -> Result<ExpPoly, StructError> {
        if self.terms.len().saturating_mul(other.terms.len()) > 4 * budget.max_terms {
            return Err(StructError::SizeBudget);
        }
        let mut out = ExpPoly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), Rational::from(ca * cb));
            }
        }
        if out.terms.len() > budget.max_terms {
            return Err(StructError::SizeBudget);
        }
        Ok(out)
    }

    pub fn scale(&self, q: &Rational) -> ExpPoly {
        if q.cmp0() == std::cmp::Ordering::Equal {
            return ExpPoly::zero(self.nvars);
        }
        let mut out = ExpPoly::zero(self.nvars);
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), Rational::from(c * q));
        }
        out
    }

    pub fn pow(&self, k: u32, budget: &Budget) -> Result<ExpPoly, StructError> {
        let mut out = ExpPoly::constant(self.nvars, Rational::from(1));
        for _ in 0..k {
            out = out.mul(self, budget)?;
        }
        Ok(out)
    }

    /// If the polynomial is a nonzero constant, return it.
    pub fn as_constant(&self) -> Option<Rational> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        if *m == Mono::one(self.nvars) {
            Some(c.clone())
        } else {
            None
        }
    }

    /// If the polynomial is linear in `s` with no constant part, no pi, and
    /// no exponential weights, return the coefficient vector.
    pub fn as_linear_form(&self) -> Option<Vec<Rational>> {
        let mut coeffs = vec![Rational::new(); self.nvars];
        for (m, c) in &self.terms {
            if m.pi != 0 || m.w.iter().any(|w| w.cmp0() != std::cmp::Ordering::Equal) {
                return None;
            }
            if m.s.iter().sum::<i64>() != 1 {
                return None;
            }
            let i = m.s.iter().position(|&a| a == 1).unwrap();
            coeffs[i] = c.clone();
        }
        Some(coeffs)
    }
}

/// Fraction of exponential polynomials.
#[derive(Debug, Clone)]
pub struct Frac {
    pub num: ExpPoly,
    pub den: ExpPoly,
}

impl Frac {
    fn from_poly(p: ExpPoly) -> Frac {
        let n = p.nvars;
        Frac {
            num: p,
            den: ExpPoly::constant(n, Rational::from(1)),
        }
    }
}

/// Expand an expression into an exact fraction, inlining registered calls.
pub fn expand(
    e: &Expr,
    nvars: usize,
    reg: &Registry,
    budget: &Budget,
    depth: usize,
) -> Result<Frac, StructError> {
    if depth > budget.max_depth {
        return Err(StructError::SizeBudget);
    }
    match e {
        Expr::Rat(q) => Ok(Frac::from_poly(ExpPoly::constant(nvars, q.clone()))),
        Expr::Pi => Ok(Frac::from_poly(ExpPoly::pi(nvars))),
        Expr::Var(i) => {
            if *i as usize > nvars {
                return Err(StructError::Other(format!(
                    "variable s{} exceeds arity {}",
                    i, nvars
                )));
            }
            Ok(Frac::from_poly(ExpPoly::var(nvars, *i as usize - 1)))
        }
        Expr::Neg(a) => {
            let f = expand(a, nvars, reg, budget, depth)?;
            Ok(Frac {
                num: f.num.neg(),
                den: f.den,
            })
        }
        Expr::Sum(terms) => {
            let mut acc = Frac::from_poly(ExpPoly::zero(nvars));
            for t in terms {
                let f = expand(t, nvars, reg, budget, depth)?;
                // a/b + c/d = (a d + c b) / (b d)
                let num = acc
                    .num
                    .mul(&f.den, budget)?
                    .add(&f.num.mul(&acc.den, budget)?, budget)?;
                let den = acc.den.mul(&f.den, budget)?;
                acc = Frac { num, den };
            }
            Ok(acc)
        }
        Expr::Prod(factors) => {
            let mut acc = Frac::from_poly(ExpPoly::constant(nvars, Rational::from(1)));
            for t in factors {
                let f = expand(t, nvars, reg, budget, depth)?;
                acc = Frac {
                    num: acc.num.mul(&f.num, budget)?,
                    den: acc.den.mul(&f.den, budget)?,
                };
            }
            Ok(acc)
        }
        Expr::Quot(a, b) => {
            let fa = expand(a, nvars, reg, budget, depth)?;
            let fb = expand(b, nvars, reg, budget, depth)?;
            if fb.num.is_zero() {
                return Err(StructError::Other("division by zero".into()));
            }
            Ok(Frac {
                num: fa.num.mul(&fb.den, budget)?,
                den: fa.den.mul(&fb.num, budget)?,
            })
        }
        Expr::Pow(b, k) => {
            let f = expand(b, nvars, reg, budget, depth)?;
            if *k >= 0 {
                Ok(Frac {
                    num: f.num.pow(*k as u32, budget)?,
                    den: f.den.pow(*k as u32, budget)?,
                })
            } else {
                if f.num.is_zero() {
                    return Err(StructError::Other("division by zero".into()));
                }
                Ok(Frac {
                    num: f.den.pow((-*k) as u32, budget)?,
                    den: f.num.pow((-*k) as u32, budget)?,
                })
            }
        }
        Expr::Exp(a) => {
            let f = expand(a, nvars, reg, budget, depth)?;
            let c = f
                .den
                .as_constant()
                .ok_or_else(|| StructError::Unsupported("exp of a non-polynomial".into()))?;
            let arg = f.num.scale(&Rational::from(c.recip_ref()));
            let w = arg.as_linear_form().ok_or_else(|| {
                StructError::Unsupported("exp argument is not a homogeneous linear form".into())
            })?;
            let mut m = Mono::one(nvars);
            m.w = w;
            let mut p = ExpPoly::zero(nvars);
            p.terms.insert(m, Rational::from(1));
            Ok(Frac::from_poly(p))
        }
        Expr::Log(_) => Err(StructError::Unsupported("log".into())),
        Expr::Call(name, args) => {
            let def = reg
                .resolve(name)
                .map_err(|e| StructError::Other(format!("cannot resolve {:?}: {}", name, e)))?;
            if def.arity != args.len() {
                return Err(StructError::Other(format!(
                    "{:?} expects {} arguments, got {}",
                    name,
                    def.arity,
                    args.len()
                )));
            }
            let bindings: Vec<(u32, Expr)> = args
                .iter()
                .enumerate()
                .map(|(i, a)| ((i + 1) as u32, a.clone()))
                .collect();
            let body = crate::expr::substitute(&def.body, &bindings);
            expand(&body, nvars, reg, budget, depth + 1)
        }
    }
}

// ----------------------------------------------------------- monomial table

/// Numerator monomial lattice of an expanded fraction, with the common pi
/// power factored out.
#[derive(Debug, Clone)]
pub struct MonomialTable {
    pub nvars: usize,
    pub pi_power: i64,
    pub monos: Vec<Mono>,
    pub coeffs: Vec<Rational>,
}

pub fn monomial_table(num: &ExpPoly) -> MonomialTable {
    let pi_power = num.terms.keys().map(|m| m.pi).min().unwrap_or(0);
    let mut rows: Vec<(Mono, Rational)> = num
        .terms
        .iter()
        .map(|(m, c)| {
            let mut m = m.clone();
            m.pi -= pi_power;
            (m, c.clone())
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    MonomialTable {
        nvars: num.nvars,
        pi_power,
        monos: rows.iter().map(|(m, _)| m.clone()).collect(),
        coeffs: rows.into_iter().map(|(_, c)| c).collect(),
    }
}

/// Render the lattice as CSV: one row per monomial, exact exponents and
/// coefficients.
pub fn table_csv(t: &MonomialTable) -> String {
    let mut out = String::new();
    for i in 1..=t.nvars {
        let _ = write!(out, "s{}_pow,", i);
    }
    for i in 1..=t.nvars {
        let _ = write!(out, "s{}_exp_weight,", i);
    }
    out.push_str("pi_pow,coeff\n");
    for (m, c) in t.monos.iter().zip(&t.coeffs) {
        for a in &m.s {
            let _ = write!(out, "{},", a);
        }
        for w in &m.w {
            let _ = write!(out, "{},", w);
        }
        let _ = writeln!(out, "{},{}", m.pi, c);
    }
    out
}

// ------------------------------------------------------ vanishing analysis

fn factorial(n: usize) -> Rational {
    let mut f = Integer::from(1);
    for k in 2..=n {
        f *= k as u64;
    }
    Rational::from(f)
}

fn binom(n: i64, k: i64) -> Rational {
    if k < 0 || k > n {
        return Rational::new();
    }
    let mut num = Integer::from(1);
    for j in 0..k {
        num *= n - j;
    }
    Rational::from((num, factorial(k as usize).into_numer_denom().0))
}

fn rat_pow(q: &Rational, k: usize) -> Rational {
    let mut out = Rational::from(1);
    for _ in 0..k {
        out *= q;
    }
    out
}

/// Expand `coeff * mono` along the hyperplane `<form, s> = 0`: substitute
/// the pivot variable by `(t - rest) / c_e` and return the coefficient of
/// `t^j` (a polynomial in the remaining variables) for `j = 0..orders`.
fn t_expansion_term(
    mono: &Mono,
    coeff: &Rational,
    form: &[Rational],
    orders: usize,
    budget: &Budget,
) -> Result<Vec<ExpPoly>, StructError> {
    let n = mono.s.len();
    let e = form
        .iter()
        .rposition(|c| c.cmp0() != std::cmp::Ordering::Equal)
        .expect("form must be nonzero");
    let ce = &form[e];
    let ae = mono.s[e];
    // Residual monomial: pivot power and weight removed; exponential weight
    // of the pivot redistributed onto the remaining variables.
    let shift = Rational::from(&mono.w[e] / ce);
    let mut residual = mono.clone();
    residual.s[e] = 0;
    residual.w[e] = Rational::new();
    for i in 0..n {
        if i != e {
            residual.w[i] -= Rational::from(&shift * &form[i]);
        }
    }
    let mut residual_poly = ExpPoly::zero(n);
    residual_poly.terms.insert(residual, coeff.clone());
    // (-R0) with R0 = sum_{i != e} form_i * s_i.
    let mut neg_r0 = ExpPoly::zero(n);
    for i in 0..n {
        if i != e && form[i].cmp0() != std::cmp::Ordering::Equal {
            neg_r0 = neg_r0.add(
                &ExpPoly::var(n, i).scale(&Rational::from(-form[i].clone())),
                budget,
            )?;
        }
    }
    // Powers (-R0)^0 .. (-R0)^ae.
    let mut r_pows = Vec::with_capacity(ae as usize + 1);
    r_pows.push(ExpPoly::constant(n, Rational::from(1)));
    for _ in 0..ae {
        let last = r_pows.last().unwrap().clone();
        r_pows.push(last.mul(&neg_r0, budget)?);
    }
    let ce_inv_ae = rat_pow(&Rational::from(ce.recip_ref()), ae as usize);
    let mut out = Vec::with_capacity(orders);
    for j in 0..orders {
        let mut acc = ExpPoly::zero(n);
        let kmax = (j as i64).min(ae);
        for k in 0..=kmax {
            // t^k from (t - R0)^ae, t^{j-k} from exp(shift * t).
            let m = j - k as usize;
            let c = Rational::from(
                binom(ae, k) * rat_pow(&shift, m) / factorial(m),
            );
            if c.cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            acc = acc.add(&r_pows[(ae - k) as usize].scale(&c), budget)?;
        }
        out.push(acc.mul(&residual_poly, budget)?.scale(&ce_inv_ae));
    }
    Ok(out)
}

/// Coefficients of `t^0..t^{orders-1}` for a whole polynomial along a form.
fn t_expansion(
    poly: &ExpPoly,
    form: &[Rational],
    orders: usize,
    budget: &Budget,
) -> Result<Vec<ExpPoly>, StructError> {
    let mut out: Vec<ExpPoly> = (0..orders).map(|_| ExpPoly::zero(poly.nvars)).collect();
    for (m, c) in &poly.terms {
        let per = t_expansion_term(m, c, form, orders, budget)?;
        for (acc, p) in out.iter_mut().zip(per) {
            *acc = acc.add(&p, budget)?;
        }
    }
    Ok(out)
}

/// Vanishing order of `poly` along the hyperplane `<form, s> = 0`, up to
/// the budget cap.
pub fn vanishing_order_along(
    poly: &ExpPoly,
    form: &[Rational],
    budget: &Budget,
) -> Result<usize, StructError> {
    if poly.is_zero() {
        return Ok(budget.max_order);
    }
    for j in 0..budget.max_order {
        let coeffs = t_expansion(poly, form, j + 1, budget)?;
        if !coeffs[j].is_zero() {
            return Ok(j);
        }
    }
    Ok(budget.max_order)
}

/// Taylor coefficient of `s^beta` at the origin for a single monomial:
/// `prod_i w_i^{beta_i - a_i} / (beta_i - a_i)!` when `beta >= a`, else 0.
fn origin_taylor(m: &Mono, beta: &[i64]) -> Rational {
    let mut c = Rational::from(1);
    for i in 0..m.s.len() {
        let d = beta[i] - m.s[i];
        if d < 0 {
            return Rational::new();
        }
        c *= rat_pow(&m.w[i], d as usize) / factorial(d as usize);
    }
    c
}

fn compositions(total: i64, parts: usize) -> Vec<Vec<i64>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

/// Vanishing order of `poly` at the origin (minimum total degree with a
/// nonzero Taylor coefficient), up to the budget cap.
pub fn origin_order(poly: &ExpPoly, budget: &Budget) -> usize {
    if poly.is_zero() {
        return budget.max_order;
    }
    for d in 0..budget.max_order {
        for beta in compositions(d as i64, poly.nvars) {
            let mut acc = Rational::new();
            for (m, c) in &poly.terms {
                acc += origin_taylor(m, &beta) * c;
            }
            if acc.cmp0() != std::cmp::Ordering::Equal {
                return d;
            }
        }
    }
    budget.max_order
}

// --------------------------------------------------------- condition rows

#[derive(Debug, Clone)]
pub struct SmoothnessSystem {
    /// Human-readable row labels, in matrix row order.
    pub row_labels: Vec<String>,
    /// Exact condition matrix; columns follow the monomial table order.
    pub matrix: Vec<Vec<Rational>>,
    /// Denominator vanishing order at the origin.
    pub origin_order: usize,
    /// (form rendered as text, denominator vanishing order) per hyperplane.
    pub form_orders: Vec<(String, usize)>,
}

fn form_text(form: &[Rational]) -> String {
    let mut s = String::new();
    for (i, c) in form.iter().enumerate() {
        if c.cmp0() == std::cmp::Ordering::Equal {
            continue;
        }
        if !s.is_empty() {
            s.push_str(" + ");
        }
        if *c == 1 {
            let _ = write!(s, "s{}", i + 1);
        } else {
            let _ = write!(s, "{} * s{}", c, i + 1);
        }
    }
    s
}

fn mono_text(m: &Mono) -> String {
    let mut s = String::new();
    for (i, a) in m.s.iter().enumerate() {
        if *a != 0 {
            let _ = write!(s, "s{}^{} ", i + 1, a);
        }
    }
    let mut warg = String::new();
    for (i, w) in m.w.iter().enumerate() {
        if w.cmp0() != std::cmp::Ordering::Equal {
            if !warg.is_empty() {
                warg.push_str(" + ");
            }
            let _ = write!(warg, "{} * s{}", w, i + 1);
        }
    }
    if !warg.is_empty() {
        let _ = write!(s, "exp({}) ", warg);
    }
    if m.pi != 0 {
        let _ = write!(s, "pi^{} ", m.pi);
    }
    let t = s.trim_end();
    if t.is_empty() {
        "1".to_string()
    } else {
        t.to_string()
    }
}

/// Candidate singular hyperplanes: the coordinate axes and every sum of two
/// or more distinct variables (0/1 coefficient forms).
fn candidate_forms(n: usize) -> Vec<Vec<Rational>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let mut form = vec![Rational::new(); n];
        for i in 0..n {
            if mask & (1 << i) != 0 {
                form[i] = Rational::from(1);
            }
        }
        out.push(form);
    }
    // Single variables first, then larger supports; deterministic order.
    out.sort_by_key(|f| {
        (
            f.iter()
                .filter(|c| c.cmp0() != std::cmp::Ordering::Equal)
                .count(),
            f.iter()
                .enumerate()
                .filter(|(_, c)| c.cmp0() != std::cmp::Ordering::Equal)
                .map(|(i, _)| i)
                .collect::<Vec<_>>(),
        )
    });
    out
}

/// Assemble the linear conditions a numerator must satisfy for the fraction
/// to extend smoothly across every vanishing locus of the denominator:
///
/// * origin rows — total-degree Taylor coefficients below the denominator's
///   origin order must vanish;
/// * hyperplane rows — for each candidate form along which the denominator
///   vanishes to order `p`, the coefficient of `t^j` (`j < p`) of the
///   restriction expansion must vanish, one row per residual monomial.
///
/// For a single variable the axis coincides with the origin, so only the
/// origin family is emitted.
pub fn smoothness_system(
    table: &MonomialTable,
    den: &ExpPoly,
    budget: &Budget,
) -> Result<SmoothnessSystem, StructError> {
    let n = table.nvars;
    let ncols = table.monos.len();
    let mut row_labels = Vec::new();
    let mut matrix: Vec<Vec<Rational>> = Vec::new();

    let d0 = origin_order(den, budget);
    // Distinct pi powers give independent conditions.
    let mut pi_pows: Vec<i64> = table.monos.iter().map(|m| m.pi).collect();
    pi_pows.sort_unstable();
    pi_pows.dedup();
    for d in 0..d0 as i64 {
        for beta in compositions(d, n) {
            for &pp in &pi_pows {
                let row: Vec<Rational> = table
                    .monos
                    .iter()
                    .map(|m| {
                        if m.pi == pp {
                            origin_taylor(m, &beta)
                        } else {
                            Rational::new()
                        }
                    })
                    .collect();
                let mut label = format!(
                    "origin degree {} beta ({})",
                    d,
                    beta.iter()
                        .map(|b| b.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                );
                if pi_pows.len() > 1 {
                    let _ = write!(label, " pi^{}", pp);
                }
                row_labels.push(label);
                matrix.push(row);
            }
        }
    }

    let mut form_orders = Vec::new();
    if n >= 2 {
        for form in candidate_forms(n) {
            let p = vanishing_order_along(den, &form, budget)?;
            if p >= budget.max_order {
                return Err(StructError::Other(format!(
                    "denominator vanishes identically along {}",
                    form_text(&form)
                )));
            }
            form_orders.push((form_text(&form), p));
            if p == 0 {
                continue;
            }
            // Per-column expansions, then rows grouped by residual monomial.
            let mut col_exp: Vec<Vec<ExpPoly>> = Vec::with_capacity(ncols);
            for m in &table.monos {
                col_exp.push(t_expansion_term(m, &Rational::from(1), &form, p, budget)?);
            }
            for j in 0..p {
                let mut keys: Vec<Mono> = Vec::new();
                for ce in &col_exp {
                    for k in ce[j].terms.keys() {
                        if !keys.contains(k) {
                            keys.push(k.clone());
                        }
                    }
                }
                keys.sort();
                for key in keys {
                    let row: Vec<Rational> = col_exp
                        .iter()
                        .map(|ce| ce[j].terms.get(&key).cloned().unwrap_or_default())
                        .collect();
                    row_labels.push(format!(
                        "form {} order {} residual {}",
                        form_text(&form),
                        j,
                        mono_text(&key)
                    ));
                    matrix.push(row);
                    if matrix.len() > budget.max_terms {
                        return Err(StructError::SizeBudget);
                    }
                }
            }
        }
    }

    Ok(SmoothnessSystem {
        row_labels,
        matrix,
        origin_order: d0,
        form_orders,
    })
}

// -------------------------------------------------------------- linear rank

/// Rank of an exact rational matrix by fraction-free (Bareiss) elimination
/// on the denominator-cleared integer matrix.
pub fn rank(matrix: &[Vec<Rational>]) -> usize {
    let rows = matrix.len();
    if rows == 0 {
        return 0;
    }
    let cols = matrix[0].len();
    let mut m: Vec<Vec<Integer>> = matrix
        .iter()
        .map(|row| {
            let mut lcm = Integer::from(1);
            for q in row {
                lcm.lcm_mut(q.denom());
            }
            row.iter()
                .map(|q| Integer::from(q.numer() * &lcm) / q.denom())
                .collect()
        })
        .collect();
    let mut prev = Integer::from(1);
    let mut r = 0usize;
    for c in 0..cols {
        // Pivot search below row r.
        let Some(p) = (r..rows).find(|&i| m[i][c].cmp0() != std::cmp::Ordering::Equal) else {
            continue;
        };
        m.swap(r, p);
        for i in (r + 1)..rows {
            for j in (c + 1)..cols {
                let t = Integer::from(&m[r][c] * &m[i][j]) - Integer::from(&m[i][c] * &m[r][j]);
                m[i][j] = t / &prev;
            }
            m[i][c] = Integer::new();
        }
        prev = m[r][c].clone();
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Exact kernel membership: `matrix * c == 0`.
pub fn in_kernel(matrix: &[Vec<Rational>], c: &[Rational]) -> bool {
    matrix.iter().all(|row| {
        let mut acc = Rational::new();
        for (a, x) in row.iter().zip(c) {
            acc += Rational::from(a * x);
        }
        acc.cmp0() == std::cmp::Ordering::Equal
    })
}

// ------------------------------------------------------------------ report

#[derive(Debug)]
pub struct StructureReport {
    pub name: String,
    pub table: MonomialTable,
    pub system: SmoothnessSystem,
    pub rank: usize,
    pub kernel_dim: usize,
    pub coeff_in_kernel: bool,
}

/// Full structural analysis of a registered function.
pub fn analyze(name: &str, reg: &Registry, budget: &Budget) -> Result<StructureReport, StructError> {
    let def = reg
        .resolve(name)
        .map_err(|e| StructError::Other(format!("cannot resolve {:?}: {}", name, e)))?;
    let call = Expr::call(
        name,
        (1..=def.arity as u32).map(Expr::var).collect(),
    );
    let frac = expand(&call, def.arity, reg, budget, 0)?;
    if frac.num.is_zero() {
        return Err(StructError::Other(format!("{} expands to zero", name)));
    }
    let table = monomial_table(&frac.num);
    let system = smoothness_system(&table, &frac.den, budget)?;
    let r = rank(&system.matrix);
    let kernel_dim = table.monos.len() - r;
    let coeff_in_kernel = in_kernel(&system.matrix, &table.coeffs);
    Ok(StructureReport {
        name: name.to_string(),
        table,
        system,
        rank: r,
        kernel_dim,
        coeff_in_kernel,
    })
}

pub fn report_json(r: &StructureReport) -> serde_json::Value {
    json!({
        "name": r.name,
        "nvars": r.table.nvars,
        "pi_power": r.table.pi_power,
        "monomials": r.table.monos.iter().map(mono_text).collect::<Vec<_>>(),
        "coefficients": r.table.coeffs.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
        "den_origin_order": r.system.origin_order,
        "den_form_orders": r.system.form_orders.iter()
            .map(|(f, p)| json!({"form": f, "order": p}))
            .collect::<Vec<_>>(),
        "rows": r.system.row_labels,
        "matrix": r.system.matrix.iter()
            .map(|row| row.iter().map(|q| q.to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "rank": r.rank,
        "kernel_dim": r.kernel_dim,
        "coeff_in_kernel": r.coeff_in_kernel,
    })
}
