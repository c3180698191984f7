use std::collections::{BTreeMap, BTreeSet};

use super::atom::{Atom, Position, PositionSet};
use super::instance::Instance;
use super::query::ConjunctiveQuery;
use super::rule::Rule;
use super::term::Sym;
use crate::error::{Error, Result};

pub type Schema = BTreeMap<Sym, usize>;

/// Rules plus the extensional instance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub edb: Instance,
    pub schema: Schema,
}

impl Program {
    /// Builds a program, inferring the schema and rejecting arity conflicts.
    pub fn new(rules: Vec<Rule>, edb: Instance) -> Result<Program> {
        let mut schema = Schema::new();
        for r in &rules {
            r.validate()?;
            for a in r.body.iter().chain(std::iter::once(&r.head)) {
                declare(&mut schema, a)?;
            }
        }
        for a in edb.iter() {
            if !a.is_ground() || a.has_null() {
                return Err(Error::NonGroundEdb(a.to_string()));
            }
            declare(&mut schema, a)?;
        }
        Ok(Program { rules, edb, schema })
    }

    pub fn from_rules(rules: Vec<Rule>) -> Result<Program> {
        Program::new(rules, Instance::new())
    }

    /// Same rules over another EDB.
    pub fn with_edb(&self, edb: Instance) -> Result<Program> {
        Program::new(self.rules.clone(), edb)
    }

    /// Every position `P[i]` of the schema.
    pub fn positions(&self) -> PositionSet {
        self.schema
            .iter()
            .flat_map(|(p, &k)| (1..=k).map(move |i| Position::new(p, i)))
            .collect()
    }

    /// Predicates occurring in some rule head.
    pub fn intensional(&self) -> BTreeSet<Sym> {
        self.rules.iter().map(|r| r.head.pred.clone()).collect()
    }

    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.schema.get(pred).copied()
    }

    /// Checks the query atoms against the schema.
    pub fn check_query(&self, q: &ConjunctiveQuery) -> Result<()> {
        for a in &q.body {
            if let Some(&k) = self.schema.get(&a.pred) {
                if k != a.arity() {
                    return Err(Error::SchemaArity {
                        pred: a.pred.to_string(),
                        expected: k,
                        found: a.arity(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn declare(schema: &mut Schema, a: &Atom) -> Result<()> {
    match schema.get(&a.pred) {
        Some(&k) if k != a.arity() => Err(Error::SchemaArity {
            pred: a.pred.to_string(),
            expected: k,
            found: a.arity(),
        }),
        Some(_) => Ok(()),
        None => {
            schema.insert(a.pred.clone(), a.arity());
            Ok(())
        }
    }
}

/// Positions occurring in a rule set.
pub fn rule_positions(rules: &[Rule]) -> PositionSet {
    rules
        .iter()
        .flat_map(|r| r.body.iter().chain(std::iter::once(&r.head)))
        .flat_map(|a| (1..=a.arity()).map(move |i| Position::new(&a.pred, i)))
        .collect()
}
