//! Replays the fuzz seeds (and cheap mutations of them) through the same
//! invariants the fuzz targets assert, so they run on stable in CI.

use std::fs;
use std::path::PathBuf;

use qdeform::expr::{parse_expr, parse_poly};
use qdeform::ncalg::{NCPoly, RewriteSystem, Strategy};
use qdeform::scalar::Scalar;
use qdeform::serial::{structure_from_str, structure_to_string};

fn seeds(target: &str) -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<String> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|f| fs::read_to_string(f.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// Every prefix at a char boundary plus single-byte deletions.
fn mutations(seed: &str) -> Vec<String> {
    let mut out = vec![seed.to_string()];
    let idx: Vec<usize> = seed.char_indices().map(|(i, _)| i).collect();
    for &i in idx.iter().step_by(3) {
        out.push(seed[..i].to_string());
        let mut s = seed.to_string();
        s.remove(i);
        out.push(s);
    }
    out
}

#[test]
fn expression_seeds() {
    for seed in seeds("parse_expr") {
        assert!(parse_expr(&seed).is_ok(), "seed `{seed}` must parse");
        for text in mutations(&seed) {
            let Ok(ast) = parse_expr(&text) else { continue };
            let again = parse_expr(&ast.to_string()).unwrap();
            assert_eq!(again.to_string(), ast.to_string());
            if let Ok(poly) = ast.lower() {
                assert_eq!(parse_poly(&poly.to_string()).unwrap(), poly, "`{text}`");
            }
        }
    }
}

#[test]
fn structure_seeds() {
    for seed in seeds("structure_json") {
        assert!(structure_from_str(&seed).is_ok());
        for text in mutations(&seed) {
            let Ok(s) = structure_from_str(&text) else { continue };
            let back = structure_from_str(&structure_to_string(&s).unwrap()).unwrap();
            assert_eq!(back.bivector(), s.bivector());
        }
    }
}

#[test]
fn rule_system_seeds() {
    for seed in seeds("rule_system_json") {
        assert!(RewriteSystem::from_json_str(&seed).is_ok());
        for text in mutations(&seed) {
            let Ok(sys) = RewriteSystem::from_json_str(&text) else { continue };
            let word: Vec<String> = sys.alphabet().iter().rev().take(4).cloned().collect();
            let f = NCPoly::term(Scalar::from_int(1), word);
            let nf = sys.normal_form_with(&f, Strategy::Leftmost).unwrap();
            assert!(nf.terms().all(|(w, _)| w.len() <= f.degree()));
        }
    }
}
