//! Corpus loading: parse the expression data files, verify them against the
//! SHA-256 manifest, and build the function registry.

use crate::expr::Expr;
use crate::parse::{parse_defs, ParseError};
use crate::registry::Registry;
use rug::Rational;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("checksum mismatch for {file}: manifest {expected}, actual {actual}")]
    Checksum {
        file: String,
        expected: String,
        actual: String,
    },
    #[error("{file}: {source}")]
    Parse { file: String, source: ParseError },
    #[error("{0}")]
    Duplicate(String),
    #[error("dangling call {callee:?} referenced by {caller:?}")]
    Dangling { caller: String, callee: String },
}

/// Strip a (possibly repeated) `_d<i>` derivative suffix down to the base
/// name that must be present in the registry.
fn derivative_base(name: &str) -> &str {
    let mut cur = name;
    loop {
        match cur.rfind("_d") {
            Some(pos)
                if !cur[pos + 2..].is_empty()
                    && cur[pos + 2..].bytes().all(|b| b.is_ascii_digit()) =>
            {
                cur = &cur[..pos];
            }
            _ => return cur,
        }
    }
}

/// Parse `MANIFEST` (sha256sum format: `<hex>  <name>` per line).
fn read_manifest(dir: &Path) -> Result<Vec<(String, String)>, CorpusError> {
    let path = dir.join("MANIFEST");
    let text = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io {
        path: path.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (hash, name) = match (parts.next(), parts.next()) {
            (Some(h), Some(n)) if h.len() == 64 => (h, n),
            _ => {
                return Err(CorpusError::Manifest(format!(
                    "MANIFEST line {}: expected \"<sha256>  <file>\"",
                    lineno + 1
                )))
            }
        };
        out.push((hash.to_ascii_lowercase(), name.to_string()));
    }
    if out.is_empty() {
        return Err(CorpusError::Manifest("MANIFEST lists no files".into()));
    }
    Ok(out)
}

/// Load every corpus file listed in `dir/MANIFEST`, verifying checksums,
/// and return the populated registry.
pub fn load_corpus(dir: &Path) -> Result<Registry, CorpusError> {
    let manifest = read_manifest(dir)?;
    let reg = Registry::new();
    for (expected, file) in &manifest {
        let path = dir.join(file);
        let bytes = std::fs::read(&path).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        let actual = hex::encode(Sha256::digest(&bytes));
        if &actual != expected {
            return Err(CorpusError::Checksum {
                file: file.clone(),
                expected: expected.clone(),
                actual,
            });
        }
        let text = String::from_utf8_lossy(&bytes);
        let stem = file.trim_end_matches(".expr");
        for def in parse_defs(&text).map_err(|source| CorpusError::Parse {
            file: file.clone(),
            source,
        })? {
            reg.insert(&def.name, def.arity, def.body, stem)
                .map_err(CorpusError::Duplicate)?;
        }
    }
    // Dangling-call check: every referenced name must resolve, possibly
    // through a lazily derived `_d<i>` entry.
    for name in reg.names() {
        let def = reg.resolve(&name).expect("listed name resolves");
        let mut callees = Vec::new();
        def.body.call_names(&mut callees);
        for callee in callees {
            if !reg.contains(derivative_base(&callee)) {
                return Err(CorpusError::Dangling {
                    caller: name.clone(),
                    callee,
                });
            }
        }
    }
    Ok(reg)
}

fn vars(n: usize) -> Vec<Expr> {
    (1..=n as u32).map(Expr::var).collect()
}

/// `k_j`: restriction of `K_j` to the complementary hyperplane — the last
/// variable is replaced by minus the sum of the others; arity drops by one.
pub fn k_restrict(j: u32, reg: &Registry) -> Result<Expr, String> {
    if !(3..=20).contains(&j) {
        return Err(format!("k-restriction is defined for j in 3..20, got {}", j));
    }
    let name = format!("K_{}", j);
    let def = reg
        .resolve(&name)
        .map_err(|_| format!("{} is not in the registry", name))?;
    let n = def.arity;
    let mut args = vars(n - 1);
    args.push(Expr::neg(Expr::Sum(vars(n - 1))));
    Ok(Expr::call(&name, args))
}

/// `Ktilde_j = (1/2^n) * sinh(S/2)/(S/2) * K_j` with `S = s1 + ... + sn`,
/// the sinh spelled with exp nodes.
pub fn ktilde(j: u32, reg: &Registry) -> Result<Expr, String> {
    let name = format!("K_{}", j);
    let def = reg
        .resolve(&name)
        .map_err(|_| format!("{} is not in the registry", name))?;
    let n = def.arity;
    let sigma = Expr::Sum(vars(n));
    let half = Expr::prod(vec![
        Expr::Rat(Rational::from((1, 2))),
        sigma.clone(),
    ]);
    let sinh2 = Expr::sub(Expr::exp(half.clone()), Expr::exp(Expr::neg(half)));
    let scale = Expr::Rat(Rational::from((
        rug::Integer::from(1),
        rug::Integer::from(1) << (n as u32),
    )));
    Ok(Expr::Prod(vec![
        scale,
        Expr::quot(sinh2, sigma),
        Expr::call(&name, vars(n)),
    ]))
}
