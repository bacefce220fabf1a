use modcurv::registry::Registry;
use std::path::PathBuf;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join("corpus")
}

pub fn relations_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join("relations")
}

pub fn load() -> Registry {
    modcurv::corpus::load_corpus(&corpus_dir()).expect("corpus loads")
}

/// Relative difference against max(1, |a|, |b|).
pub fn rel_diff(a: &rug::Float, b: &rug::Float) -> rug::Float {
    let prec = a.prec().max(b.prec());
    let abs = rug::Float::with_val(prec, a - b).abs();
    let mut scale = rug::Float::with_val(prec, a.abs_ref());
    let bb = rug::Float::with_val(prec, b.abs_ref());
    if bb > scale {
        scale = bb;
    }
    if scale < 1 {
        scale = rug::Float::with_val(prec, 1);
    }
    abs / scale
}
