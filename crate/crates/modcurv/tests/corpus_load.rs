mod common;

use modcurv::corpus::{k_restrict, ktilde, load_corpus, CorpusError};
use modcurv::eval::evaluate_or_limit;
use rug::Rational;

const PREC: u32 = 256;

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

#[test]
fn corpus_loads_with_verified_checksums() {
    let reg = common::load();
    // The full kernel family and its companions are present.
    for j in 1..=20 {
        assert!(reg.contains(&format!("K_{}", j)) || j >= 17, "K_{}", j);
    }
    for j in 3..=20 {
        assert!(reg.contains(&format!("k_{}", j)), "k_{}", j);
    }
    for j in 1..=20 {
        assert!(reg.contains(&format!("Ktilde_{}", j)), "Ktilde_{}", j);
    }
    for n in 1..=4 {
        assert!(reg.contains(&format!("G_{}", n)));
    }
    assert!(reg.contains("R_1") && reg.contains("R_2"));
}

#[test]
fn checksum_mismatch_is_detected() {
    // Copy the corpus, flip one byte, keep the manifest: load must fail.
    let dir = std::env::temp_dir().join("modcurv_corrupt_corpus");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    for entry in std::fs::read_dir(common::corpus_dir()).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, dir.join(p.file_name().unwrap())).unwrap();
    }
    let victim = dir.join("a2.expr");
    let mut bytes = std::fs::read(&victim).unwrap();
    let i = bytes.len() / 2;
    bytes[i] = if bytes[i] == b'1' { b'2' } else { b'1' };
    std::fs::write(&victim, &bytes).unwrap();
    match load_corpus(&dir) {
        Err(CorpusError::Checksum { file, .. }) => assert_eq!(file, "a2.expr"),
        other => panic!("expected checksum failure, got {:?}", other.map(|_| ())),
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn k_restriction_matches_stored_restrictions() {
    // k_j is stored as an independent transcription; the constructive
    // restriction K_j(.., -(sum)) must agree with it numerically.
    let reg = common::load();
    let cases: &[(u32, Vec<Rational>)] = &[
        (3, vec![q(2, 5)]),
        (5, vec![q(-3, 7)]),
        (8, vec![q(1, 3), q(1, 5)]),
        (10, vec![q(2, 7), q(1, 77)]),
        (16, vec![q(-1, 4), q(3, 8)]),
    ];
    for (j, p) in cases {
        let built = k_restrict(*j, &reg).unwrap();
        let via_restriction = evaluate_or_limit(&built, p, &reg, PREC).unwrap();
        let stored = modcurv::eval::evaluate_name(&format!("k_{}", j), p, &reg, PREC).unwrap();
        assert!(
            common::rel_diff(&via_restriction, &stored) < 1e-60,
            "k_{} at {:?}: {} vs {}",
            j, p, via_restriction, stored
        );
    }
}

#[test]
fn ktilde_construction_matches_stored_ktilde() {
    let reg = common::load();
    let cases: &[(u32, Vec<Rational>)] = &[
        (1, vec![q(1, 2)]),
        (4, vec![q(1, 3), q(-1, 5)]),
        (9, vec![q(1, 3), q(1, 5), q(1, 7)]),
    ];
    for (j, p) in cases {
        let built = ktilde(*j, &reg).unwrap();
        let a = evaluate_or_limit(&built, p, &reg, PREC).unwrap();
        let b = modcurv::eval::evaluate_name(&format!("Ktilde_{}", j), p, &reg, PREC).unwrap();
        assert!(
            common::rel_diff(&a, &b) < 1e-60,
            "Ktilde_{} at {:?}: {} vs {}",
            j, p, a, b
        );
    }
}

#[test]
fn duplicate_and_dangling_definitions_are_rejected() {
    let dir = std::env::temp_dir().join("modcurv_bad_corpus");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let text = "def f(x) = g(x) + 1;\n";
    std::fs::write(dir.join("one.expr"), text).unwrap();
    let hash = {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(text.as_bytes()))
    };
    std::fs::write(dir.join("MANIFEST"), format!("{}  one.expr\n", hash)).unwrap();
    match load_corpus(&dir) {
        Err(CorpusError::Dangling { caller, callee }) => {
            assert_eq!(caller, "f");
            assert_eq!(callee, "g");
        }
        other => panic!("expected dangling-call failure, got {:?}", other.map(|_| ())),
    }
    let _ = std::fs::remove_dir_all(&dir);
}
