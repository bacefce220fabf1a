//! Function registry: name -> (arity, body), with lazily materialized
//! partial-derivative entries and a memoized value cache.

use crate::eval::EvalError;
use crate::expr::{differentiate, Expr};
use rug::Float;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

#[derive(Debug)]
pub struct Def {
    pub arity: usize,
    pub body: Arc<Expr>,
    /// Where the definition came from (corpus file stem or "derived").
    pub origin: String,
}

pub type CacheKey = (String, Vec<String>, u32);

/// Immutable after corpus load, except for two internally synchronized
/// maps: lazily derived `<name>_d<i>` definitions and the value cache.
/// Cached values are deterministic functions of their key, so concurrent
/// fills cannot introduce nondeterminism.
#[derive(Default)]
pub struct Registry {
    defs: RwLock<HashMap<String, Arc<Def>>>,
    cache: Mutex<HashMap<CacheKey, Float>>,
}

/// `name_d3` -> ("name", 3). The suffix must be `_d` followed by digits.
fn split_derivative(name: &str) -> Option<(&str, u32)> {
    let pos = name.rfind("_d")?;
    let digits = &name[pos + 2..];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((&name[..pos], digits.parse().ok()?))
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, name: &str, arity: usize, body: Expr, origin: &str) -> Result<(), String> {
        let mut defs = self.defs.write().unwrap();
        if defs.contains_key(name) {
            return Err(format!("duplicate definition of {:?}", name));
        }
        defs.insert(
            name.to_string(),
            Arc::new(Def {
                arity,
                body: Arc::new(body),
                origin: origin.to_string(),
            }),
        );
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.defs.read().unwrap().contains_key(name)
    }

    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.defs.read().unwrap().keys().cloned().collect();
        v.sort();
        v
    }

    /// Look up a definition; `<base>_d<i>` names are materialized on first
    /// use by symbolic differentiation of the base body.
    pub fn resolve(&self, name: &str) -> Result<Arc<Def>, EvalError> {
        if let Some(def) = self.defs.read().unwrap().get(name) {
            return Ok(def.clone());
        }
        let (base, var) = match split_derivative(name) {
            Some(x) => x,
            None => return Err(EvalError::Undefined(name.to_string())),
        };
        if var == 0 {
            return Err(EvalError::Undefined(name.to_string()));
        }
        let base_def = self.resolve(base)?;
        if var as usize > base_def.arity {
            return Err(EvalError::Undefined(name.to_string()));
        }
        let body = differentiate(&base_def.body, var);
        let def = Arc::new(Def {
            arity: base_def.arity,
            body: Arc::new(body),
            origin: "derived".to_string(),
        });
        let mut defs = self.defs.write().unwrap();
        let entry = defs.entry(name.to_string()).or_insert_with(|| def.clone());
        Ok(entry.clone())
    }

    pub fn cache_get(&self, key: &CacheKey) -> Option<Float> {
        self.cache.lock().unwrap().get(key).cloned()
    }

    pub fn cache_put(&self, key: CacheKey, val: Float) {
        self.cache.lock().unwrap().insert(key, val);
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}
