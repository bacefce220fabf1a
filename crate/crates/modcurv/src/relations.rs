//! Relation suites: parse `.rel` files, sample admissible points
//! deterministically, evaluate residuals, and emit a reproducible JSON
//! report.

use crate::eval::{evaluate, EvalError, Value};
use crate::parse::{lex, s_vars, ParseError, Parser, Tok};
use crate::registry::Registry;
use rug::{Float, Rational};
use serde_json::json;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RelError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{file}: {source}")]
    Parse { file: String, source: ParseError },
    #[error("{0}")]
    Invalid(String),
}

/// A single verifiable identity with its declared singular hyperplanes
/// (coefficient vectors of linear forms in s1..sn).
#[derive(Debug, Clone)]
pub struct RelationSpec {
    pub id: String,
    pub arity: usize,
    pub lhs: crate::expr::Expr,
    pub rhs: crate::expr::Expr,
    pub sing: Vec<Vec<Rational>>,
    pub suite: String,
}

/// Extract the coefficient vector of a linear form parsed as an expression.
fn linear_coeffs(e: &crate::expr::Expr, arity: usize) -> Result<Vec<Rational>, RelError> {
    let zeros: Vec<Value> = (0..arity).map(|_| Value::Exact(Rational::new())).collect();
    let at_zero = crate::eval::eval_exact(e, &zeros)
        .ok_or_else(|| RelError::Invalid("singular form is not rational".into()))?;
    if at_zero.cmp0() != std::cmp::Ordering::Equal {
        return Err(RelError::Invalid(
            "singular form has a constant part".into(),
        ));
    }
    let mut coeffs = Vec::with_capacity(arity);
    for i in 0..arity {
        let mut env = zeros.clone();
        env[i] = Value::Exact(Rational::from(1));
        let c = crate::eval::eval_exact(e, &env)
            .ok_or_else(|| RelError::Invalid("singular form is not rational".into()))?;
        coeffs.push(c);
    }
    Ok(coeffs)
}

/// Parse one `.rel` file. Statement grammar:
/// `rel ID : ARITY : LHS == RHS ;` followed by an optional
/// `sing: form, form, ... ;` annotation.
pub fn load_relation_file(path: &Path, suite: &str) -> Result<Vec<RelationSpec>, RelError> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| RelError::Io {
        path: file.clone(),
        source,
    })?;
    let toks = lex(&text).map_err(|source| RelError::Parse {
        file: file.clone(),
        source,
    })?;
    let mut p = Parser::new(&toks);
    let mut out: Vec<RelationSpec> = Vec::new();
    let perr = |source: ParseError| RelError::Parse {
        file: file.clone(),
        source,
    };
    while !p.done() {
        let kw = p.eat_name().map_err(perr)?;
        match kw.as_str() {
            "rel" => {
                let id = p.eat_name().map_err(perr)?;
                p.eat_punct(':').map_err(perr)?;
                let arity = match p.peek() {
                    Some(Tok::Num(q)) if q.is_integer() => {
                        let a = q.numer().to_usize().unwrap_or(0);
                        p.pos += 1;
                        a
                    }
                    _ => return Err(perr(p.err("expected arity"))),
                };
                if !(1..=4).contains(&arity) {
                    return Err(RelError::Invalid(format!(
                        "{}: arity must be 1..4, got {}",
                        id, arity
                    )));
                }
                p.eat_punct(':').map_err(perr)?;
                let lhs = p.expr(&s_vars).map_err(perr)?;
                match p.peek() {
                    Some(Tok::EqEq) => p.pos += 1,
                    _ => return Err(perr(p.err("expected \"==\""))),
                }
                let rhs = p.expr(&s_vars).map_err(perr)?;
                p.eat_punct(';').map_err(perr)?;
                for side in [&lhs, &rhs] {
                    if side.max_var() as usize > arity {
                        return Err(RelError::Invalid(format!(
                            "{}: variable index exceeds arity {}",
                            id, arity
                        )));
                    }
                }
                out.push(RelationSpec {
                    id,
                    arity,
                    lhs,
                    rhs,
                    sing: Vec::new(),
                    suite: suite.to_string(),
                });
            }
            "sing" => {
                let spec = out.last_mut().ok_or_else(|| {
                    RelError::Invalid("sing annotation before any relation".into())
                })?;
                p.eat_punct(':').map_err(perr)?;
                loop {
                    let form = p.expr(&s_vars).map_err(perr)?;
                    spec.sing.push(linear_coeffs(&form, spec.arity)?);
                    if p.try_punct(';') {
                        break;
                    }
                    p.eat_punct(',').map_err(perr)?;
                }
            }
            other => {
                return Err(RelError::Invalid(format!(
                    "{}: expected \"rel\" or \"sing\", found {:?}",
                    file, other
                )))
            }
        }
    }
    Ok(out)
}

/// Load every `<suite>.rel` file in a directory; the suite tag is the file
/// stem. Verifies that every call name resolves in the registry.
pub fn load_relations(dir: &Path, reg: &Registry) -> Result<Vec<RelationSpec>, RelError> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|source| RelError::Io {
            path: dir.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "rel").unwrap_or(false))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        let suite = f
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("unknown")
            .to_string();
        out.extend(load_relation_file(&f, &suite)?);
    }
    for spec in &out {
        let mut names = Vec::new();
        spec.lhs.call_names(&mut names);
        spec.rhs.call_names(&mut names);
        for n in names {
            reg.resolve(&n)
                .map_err(|_| RelError::Invalid(format!("{}: dangling call {:?}", spec.id, n)))?;
        }
    }
    Ok(out)
}

// ------------------------------------------------------------- sampling

/// splitmix64 (Steele et al. constants).
#[derive(Clone)]
pub struct SplitMix64 {
    state: u64,
}

pub fn splitmix_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

impl SplitMix64 {
    /// Per-relation substream: state seeded with mix(seed ^ fnv1a64(id)).
    pub fn substream(seed: u64, relation_id: &str) -> Self {
        SplitMix64 {
            state: splitmix_mix(seed ^ fnv1a64(relation_id.as_bytes())),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        splitmix_mix(self.state)
    }
}

#[derive(Debug, Clone)]
pub struct SampleConfig {
    pub samples: usize,
    pub seed: u64,
    pub precision: u32,
    /// Relative tolerance, kept as the exact string given (for the report)
    /// and parsed at the working precision for comparisons.
    pub tolerance: String,
    /// Minimum distance from every declared hyperplane.
    pub clearance: Rational,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            samples: 20,
            seed: 1,
            precision: 256,
            tolerance: "1e-35".to_string(),
            clearance: Rational::from((1, 16)),
        }
    }
}

/// Draw one admissible point for a relation: coordinates are uniform
/// rationals with denominator 2^16 in [-2, 2]; the whole point is resampled
/// until every declared linear form is at least `clearance` away from zero.
pub fn sample_point(rng: &mut SplitMix64, spec: &RelationSpec, clearance: &Rational) -> Vec<Rational> {
    'outer: loop {
        let mut p = Vec::with_capacity(spec.arity);
        for _ in 0..spec.arity {
            let num = (rng.next_u64() % 262145) as i64 - 131072;
            p.push(Rational::from((num, 65536)));
        }
        for form in &spec.sing {
            let mut v = Rational::new();
            for (c, x) in form.iter().zip(&p) {
                v += Rational::from(c * x);
            }
            if Rational::from(v.abs_ref()) < *clearance {
                continue 'outer;
            }
        }
        return p;
    }
}

// ------------------------------------------------------------ verification

/// Deterministic decimal rendering used in reports.
pub fn fmt_float(f: &Float) -> String {
    if !f.is_finite() {
        return if f.is_nan() {
            "nan".to_string()
        } else if f.is_sign_negative() {
            "-inf".to_string()
        } else {
            "inf".to_string()
        };
    }
    f.to_string_radix(10, Some(30))
}

#[derive(Debug)]
pub struct ResidualRecord {
    pub id: String,
    pub point: Vec<Rational>,
    pub lhs: Option<Float>,
    pub rhs: Option<Float>,
    pub abs: Option<Float>,
    pub rel: Option<Float>,
    pub pass: bool,
    pub aborted: bool,
}

/// Evaluate both sides of a relation at an exact point and fill in the
/// residual record. Points lying on no declared hyperplane are regular, so
/// a singular or non-convergent evaluation is an abort, not a failure.
pub fn relation_residual(
    spec: &RelationSpec,
    point: &[Rational],
    reg: &Registry,
    prec: u32,
    tol: &Float,
) -> ResidualRecord {
    let env: Vec<Value> = point.iter().map(|q| Value::Exact(q.clone())).collect();
    let sides: Result<(Float, Float), EvalError> = (|| {
        let l = evaluate(&spec.lhs, &env, reg, prec)?;
        let r = evaluate(&spec.rhs, &env, reg, prec)?;
        Ok((l, r))
    })();
    match sides {
        Ok((l, r)) => {
            let abs = Float::with_val(prec, &l - &r).abs();
            let mut scale = Float::with_val(prec, l.abs_ref());
            let ra = Float::with_val(prec, r.abs_ref());
            if ra > scale {
                scale = ra;
            }
            if scale < 1 {
                scale = Float::with_val(prec, 1);
            }
            let rel = Float::with_val(prec, &abs / &scale);
            let pass = rel <= *tol;
            ResidualRecord {
                id: spec.id.clone(),
                point: point.to_vec(),
                lhs: Some(l),
                rhs: Some(r),
                abs: Some(abs),
                rel: Some(rel),
                pass,
                aborted: false,
            }
        }
        Err(_) => ResidualRecord {
            id: spec.id.clone(),
            point: point.to_vec(),
            lhs: None,
            rhs: None,
            abs: None,
            rel: None,
            pass: true,
            aborted: true,
        },
    }
}

#[derive(Debug)]
pub struct SuiteReport {
    pub json: serde_json::Value,
    pub pass_count: usize,
    pub fail_count: usize,
    pub aborted: usize,
    pub all_pass: bool,
}

/// Run a suite: for each relation draw `cfg.samples` admissible points and
/// record residuals. Point evaluations run in parallel; the report is an
/// ordered reduction by (relation, point index), so output is byte-identical
/// regardless of scheduling. A point that aborts (non-convergent limit) is
/// logged, not failed, unless aborts exceed 10% of the suite.
pub fn verify_suite(
    suite: &str,
    specs: &[RelationSpec],
    cfg: &SampleConfig,
    reg: &Registry,
) -> Result<SuiteReport, RelError> {
    let selected: Vec<&RelationSpec> = specs.iter().filter(|s| s.suite == suite).collect();
    if selected.is_empty() {
        return Err(RelError::Invalid(format!("no relations in suite {:?}", suite)));
    }
    let prec = cfg.precision;
    let tol = Float::parse(&cfg.tolerance)
        .map(|t| Float::with_val(prec, t))
        .map_err(|_| RelError::Invalid(format!("bad tolerance {:?}", cfg.tolerance)))?;
    // Sampling is sequential and independent of evaluation, so the point
    // list is deterministic for a given seed.
    let mut tasks: Vec<(&RelationSpec, Vec<Rational>)> = Vec::new();
    for spec in &selected {
        let mut rng = SplitMix64::substream(cfg.seed, &spec.id);
        for _ in 0..cfg.samples {
            tasks.push((spec, sample_point(&mut rng, spec, &cfg.clearance)));
        }
    }
    use rayon::prelude::*;
    let records: Vec<ResidualRecord> = tasks
        .par_iter()
        .map(|(spec, point)| relation_residual(spec, point, reg, prec, &tol))
        .collect();
    let mut results = Vec::with_capacity(records.len());
    let mut pass_count = 0;
    let mut fail_count = 0;
    let mut aborted = 0;
    let mut max_rel = Float::with_val(prec, 0);
    for r in &records {
        if r.aborted {
            aborted += 1;
        } else if r.pass {
            pass_count += 1;
        } else {
            fail_count += 1;
        }
        if let Some(rel) = &r.rel {
            if *rel > max_rel {
                max_rel = rel.clone();
            }
        }
        let fmt_opt = |v: &Option<Float>| {
            v.as_ref()
                .map(|f| fmt_float(f))
                .unwrap_or_else(|| "aborted".to_string())
        };
        results.push(json!({
            "id": r.id,
            "point": r.point.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
            "lhs": fmt_opt(&r.lhs),
            "rhs": fmt_opt(&r.rhs),
            "abs": fmt_opt(&r.abs),
            "rel": fmt_opt(&r.rel),
            "pass": r.pass && !r.aborted,
            "aborted": r.aborted,
        }));
    }
    let total = records.len();
    let abort_ok = aborted * 10 <= total;
    let all_pass = fail_count == 0 && abort_ok;
    let report = json!({
        "suite": suite,
        "precision_bits": prec,
        "tolerance": cfg.tolerance,
        "seed": cfg.seed,
        "results": results,
        "summary": {
            "pass": pass_count,
            "fail": fail_count,
            "aborted": aborted,
            "max_rel": fmt_float(&max_rel),
        },
    });
    Ok(SuiteReport {
        json: report,
        pass_count,
        fail_count,
        aborted,
        all_pass,
    })
}
