//! Seeded random programs, instances and queries for property tests and
//! benchmarks. Generated rules contain no constants.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Atom, ConjunctiveQuery, Instance, Program, Rule, Schema, Sym, Term};

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub predicates: usize,
    pub max_arity: usize,
    pub rules: usize,
    pub max_body: usize,
    /// Chance that a head argument is a fresh existential variable.
    pub exist_prob: f64,
    /// Chance that a body argument reuses an earlier variable of the rule.
    pub join_prob: f64,
    pub facts: usize,
    pub constants: usize,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            predicates: 4,
            max_arity: 3,
            rules: 4,
            max_body: 3,
            exist_prob: 0.25,
            join_prob: 0.5,
            facts: 12,
            constants: 4,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_schema(r: &mut ChaCha8Rng, cfg: &GenConfig) -> Vec<(String, usize)> {
    (0..cfg.predicates)
        .map(|i| (format!("P{i}"), r.gen_range(1..=cfg.max_arity)))
        .collect()
}

fn random_rule(r: &mut ChaCha8Rng, cfg: &GenConfig, schema: &[(String, usize)], id: usize) -> Rule {
    let mut vars: Vec<Sym> = Vec::new();
    let fresh = |vars: &mut Vec<Sym>| {
        let v: Sym = Sym::from(format!("V{}", vars.len()));
        vars.push(v.clone());
        v
    };
    let nbody = r.gen_range(1..=cfg.max_body);
    let mut body = Vec::new();
    for _ in 0..nbody {
        let (p, k) = schema.choose(r).unwrap();
        let args = (0..*k)
            .map(|_| {
                if !vars.is_empty() && r.gen_bool(cfg.join_prob) {
                    Term::Var(vars.choose(r).unwrap().clone())
                } else {
                    Term::Var(fresh(&mut vars))
                }
            })
            .collect();
        body.push(Atom::new(p, args));
    }
    let (p, k) = schema.choose(r).unwrap();
    let mut exist: Vec<Sym> = Vec::new();
    let args = (0..*k)
        .map(|_| {
            if r.gen_bool(cfg.exist_prob) {
                if !exist.is_empty() && r.gen_bool(0.3) {
                    Term::Var(exist.choose(r).unwrap().clone())
                } else {
                    let z = Sym::from(format!("Z{}", exist.len()));
                    exist.push(z.clone());
                    Term::Var(z)
                }
            } else {
                Term::Var(vars.choose(r).unwrap().clone())
            }
        })
        .collect();
    Rule::new(&format!("r{id}"), body, Atom::new(p, args), exist).expect("generated rule is safe")
}

/// Facts over `schema` with constants `c0..`.
pub fn random_edb(seed: u64, schema: &Schema, facts: usize, constants: usize) -> Instance {
    let mut r = rng(seed);
    let preds: Vec<(&Sym, &usize)> = schema.iter().collect();
    let mut inst = Instance::new();
    if preds.is_empty() {
        return inst;
    }
    for _ in 0..facts {
        let (p, k) = preds.choose(&mut r).unwrap();
        let args = (0..**k)
            .map(|_| Term::constant(&format!("c{}", r.gen_range(0..constants.max(1)))))
            .collect();
        inst.insert(Atom::new(p, args));
    }
    inst
}

/// Rules and an EDB drawn from `seed`.
pub fn random_program(seed: u64, cfg: &GenConfig) -> Program {
    let mut r = rng(seed);
    let schema = random_schema(&mut r, cfg);
    let rules: Vec<Rule> = (1..=cfg.rules)
        .map(|i| random_rule(&mut r, cfg, &schema, i))
        .collect();
    let declared: Schema = schema.iter().map(|(p, k)| (Sym::from(p.as_str()), *k)).collect();
    let edb = random_edb(r.gen(), &declared, cfg.facts, cfg.constants);
    let mut p = Program::new(rules, edb).expect("consistent schema");
    for (name, k) in declared {
        p.schema.entry(name).or_insert(k);
    }
    p
}

/// A query of one or two atoms over the program's schema, mixing constants
/// from the EDB vocabulary with variables; free variables are a random subset.
pub fn random_query(seed: u64, program: &Program, constants: usize) -> ConjunctiveQuery {
    let mut r = rng(seed);
    let preds: Vec<(&Sym, &usize)> = program.schema.iter().filter(|(_, &k)| k > 0).collect();
    let mut vars: Vec<Sym> = Vec::new();
    let mut body = Vec::new();
    for _ in 0..r.gen_range(1..=2) {
        let (p, k) = preds.choose(&mut r).unwrap();
        let args = (0..**k)
            .map(|_| {
                let roll: f64 = r.gen();
                if roll < 0.2 {
                    Term::constant(&format!("c{}", r.gen_range(0..constants.max(1))))
                } else if !vars.is_empty() && roll < 0.5 {
                    Term::Var(vars.choose(&mut r).unwrap().clone())
                } else {
                    let v = Sym::from(format!("Q{}", vars.len()));
                    vars.push(v.clone());
                    Term::Var(v)
                }
            })
            .collect();
        body.push(Atom::new(p, args));
    }
    let free: Vec<Sym> = vars
        .iter()
        .filter(|_| r.gen_bool(0.5))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    ConjunctiveQuery::new("Q", free, body)
}
