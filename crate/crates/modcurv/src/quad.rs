//! Adaptive Gauss–Legendre quadrature at arbitrary precision.

use rug::Float;
use std::fmt;

#[derive(Debug, Clone)]
pub enum QuadError {
    /// Interval budget exhausted before the error estimate met tolerance.
    NonConvergent,
    /// The integrand failed to evaluate at a node.
    BadIntegrand(String),
}

impl fmt::Display for QuadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadError::NonConvergent => write!(f, "quadrature did not converge"),
            QuadError::BadIntegrand(m) => write!(f, "integrand evaluation failed: {}", m),
        }
    }
}

impl std::error::Error for QuadError {}

/// Nodes and weights of the `order`-point Gauss–Legendre rule on (-1, 1),
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(order: usize, prec: u32) -> Vec<(Float, Float)> {
    let wprec = prec + 64;
    let pi = Float::with_val(wprec, rug::float::Constant::Pi);
    let mut out = Vec::with_capacity(order);
    let tol = Float::with_val(wprec, Float::i_exp(1, -((wprec - 16) as i32)));
    for i in 0..order {
        // Chebyshev initial guess.
        let mut x = (Float::with_val(wprec, i as f64 + 0.75) * &pi
            / Float::with_val(wprec, order as f64 + 0.5))
        .cos();
        let mut dp = Float::with_val(wprec, 0);
        for _ in 0..200 {
            // Legendre recurrence: p0 = 1, p1 = x,
            // (k+1) p_{k+1} = (2k+1) x p_k - k p_{k-1}.
            let mut p0 = Float::with_val(wprec, 1);
            let mut p1 = x.clone();
            for k in 1..order {
                let p2 = (Float::with_val(wprec, (2 * k + 1) as u64) * &x * &p1
                    - Float::with_val(wprec, k as u64) * &p0)
                    / Float::with_val(wprec, (k + 1) as u64);
                p0 = p1;
                p1 = p2;
            }
            // p'_n(x) = n (x p_n - p_{n-1}) / (x^2 - 1)
            let x2m1 = Float::with_val(wprec, &x * &x) - 1u32;
            dp = Float::with_val(wprec, order as u64)
                * (Float::with_val(wprec, &x * &p1) - &p0)
                / &x2m1;
            let step = p1 / &dp;
            x -= &step;
            if Float::with_val(wprec, step.abs_ref()) < tol {
                break;
            }
        }
        let x2m1 = Float::with_val(wprec, &x * &x) - 1u32;
        let w = Float::with_val(wprec, -2) / (x2m1 * Float::with_val(wprec, &dp * &dp));
        out.push((
            Float::with_val(prec, &x),
            Float::with_val(prec, &w),
        ));
    }
    out
}

fn rule_sum(
    f: &mut dyn FnMut(&Float) -> Result<Float, QuadError>,
    a: &Float,
    b: &Float,
    rule: &[(Float, Float)],
    prec: u32,
) -> Result<Float, QuadError> {
    let half = Float::with_val(prec, b - a) / 2u32;
    let mid = Float::with_val(prec, a + b) / 2u32;
    let mut acc = Float::with_val(prec, 0);
    for (x, w) in rule {
        let t = Float::with_val(prec, &half * x) + &mid;
        acc += w * f(&t)?;
    }
    Ok(acc * half)
}

/// Adaptive bisection with an embedded error estimate (one panel vs. two
/// half panels of the same order). The subinterval budget is capped at
/// 2^16; exhausting it is reported as non-convergence rather than silently
/// returning a low-quality value.
pub fn integrate(
    f: &mut dyn FnMut(&Float) -> Result<Float, QuadError>,
    a: &Float,
    b: &Float,
    rel_tol: &Float,
    prec: u32,
) -> Result<Float, QuadError> {
    const ORDER: usize = 32;
    const MAX_INTERVALS: usize = 1 << 16;
    let rule = gauss_legendre(ORDER, prec);
    let coarse = rule_sum(f, a, b, &rule, prec)?;
    let mut scale = Float::with_val(prec, coarse.abs_ref());
    if scale < 1 {
        scale = Float::with_val(prec, 1);
    }
    let total_len = Float::with_val(prec, b - a);
    let tol_abs = Float::with_val(prec, rel_tol * &scale);
    let mut stack: Vec<(Float, Float, Float)> = vec![(a.clone(), b.clone(), coarse)];
    let mut acc = Float::with_val(prec, 0);
    let mut used = 1usize;
    while let Some((lo, hi, whole)) = stack.pop() {
        let mid = Float::with_val(prec, &lo + &hi) / 2u32;
        let left = rule_sum(f, &lo, &mid, &rule, prec)?;
        let right = rule_sum(f, &mid, &hi, &rule, prec)?;
        let refined = Float::with_val(prec, &left + &right);
        let err = Float::with_val(prec, &whole - &refined).abs();
        let len_frac = Float::with_val(prec, &hi - &lo) / &total_len;
        if err <= Float::with_val(prec, &tol_abs * &len_frac) {
            acc += refined;
            continue;
        }
        used += 2;
        if used > MAX_INTERVALS {
            return Err(QuadError::NonConvergent);
        }
        stack.push((lo, mid.clone(), left));
        stack.push((mid, hi, right));
    }
    Ok(acc)
}
