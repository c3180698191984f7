#![allow(dead_code)]

use std::collections::BTreeSet;

use stickychase::parser::{parse_instance, parse_program, parse_query};
use stickychase::{ConjunctiveQuery, Instance, Program, Term};

pub fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn program(name: &str) -> Program {
    parse_program(&fixture(&format!("{name}.dlp"))).unwrap()
}

pub fn query(name: &str) -> ConjunctiveQuery {
    parse_query(&fixture(&format!("{name}.dlq"))).unwrap()
}

/// Facts in source syntax; nulls as `_:n<k>`, frozen nulls as `_:f<k>`.
pub fn atoms(text: &str) -> Instance {
    parse_instance(text).unwrap()
}

pub fn consts(names: &[&str]) -> BTreeSet<Vec<Term>> {
    names.iter().map(|n| vec![Term::constant(n)]).collect()
}

/// `base` plus the atoms of `extra`.
pub fn union(base: &Instance, extra: &str) -> Instance {
    let mut i = base.clone();
    i.extend(atoms(extra).iter().cloned());
    i
}

/// Seed for randomized tests; override with STICKYCHASE_SEED.
pub fn seed(default: u64) -> u64 {
    std::env::var("STICKYCHASE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}
