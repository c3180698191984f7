//! Program builders shared by the benchmarks.

use stickychase::generate::{random_program, GenConfig};
use stickychase::parser::{parse_program, parse_query};
use stickychase::{ConjunctiveQuery, Program};

/// Sticky program over an `n`-edge chain: every edge gets an unnamed successor.
pub fn sticky_chain(n: usize) -> Program {
    let mut text = String::new();
    for i in 0..n {
        text.push_str(&format!("R(c{i},c{}).\n", i + 1));
    }
    text.push_str("R(X,Y) -> exists Z R(Y,Z).\nR(X,Y), R(Y,Z) -> S(X,Y,Z).\n");
    parse_program(&text).expect("sticky chain")
}

pub fn sticky_chain_query() -> ConjunctiveQuery {
    parse_query("?Q(X) :- S(X,Y,Z).").expect("query")
}

/// Transitive closure over an `n`-edge chain.
pub fn tc_chain(n: usize) -> Program {
    let mut text = String::new();
    for i in 0..n {
        text.push_str(&format!("P(c{i},c{}).\n", i + 1));
    }
    text.push_str("P(X,Y) -> R(X,Y).\nP(X,Y), R(Y,Z) -> R(X,Z).\n");
    parse_program(&text).expect("tc chain")
}

/// `n` disjoint copies of the magic-sets example data.
pub fn magic_family(n: usize) -> Program {
    let mut text = String::new();
    for i in 1..=n {
        text.push_str(&format!("U(b{i}). R(a{i},b{i}).\n"));
    }
    text.push_str("R(X,Y), R(Y,Z) -> P(X,Z).\nU(Y), R(X,Y) -> exists Z R(Y,Z).\n");
    parse_program(&text).expect("magic family")
}

pub fn magic_query() -> ConjunctiveQuery {
    parse_query("?Q :- P(a1,X).").expect("query")
}

/// A random program with `rules` rules over 40 predicates.
pub fn large_random(rules: usize) -> Program {
    let cfg = GenConfig { predicates: 40, max_arity: 4, rules, max_body: 4, ..GenConfig::default() };
    random_program(7, &cfg)
}
