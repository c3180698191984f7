use std::collections::BTreeSet;
use std::fmt;

use super::atom::Atom;
use super::term::Sym;
use crate::error::{Error, Result};

/// A tgd `body -> exists exist_vars head`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub id: String,
    pub body: Vec<Atom>,
    pub head: Atom,
    pub exist_vars: Vec<Sym>,
}

impl Rule {
    /// Builds a rule and checks the tgd invariants.
    pub fn new(id: &str, body: Vec<Atom>, head: Atom, exist_vars: Vec<Sym>) -> Result<Rule> {
        let rule = Rule {
            id: id.to_string(),
            body,
            head,
            exist_vars,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Error::InvalidRule {
            rule: self.id.clone(),
            msg,
        };
        if self.body.is_empty() {
            return Err(err("empty body".into()));
        }
        let body = self.body_vars();
        let head: BTreeSet<&Sym> = self.head.vars().collect();
        for z in &self.exist_vars {
            if body.contains(z) {
                return Err(err(format!("existential variable {z} occurs in the body")));
            }
            if !head.contains(z) {
                return Err(err(format!("existential variable {z} does not occur in the head")));
            }
        }
        for v in head {
            if !body.contains(v) && !self.exist_vars.contains(v) {
                return Err(err(format!("head variable {v} does not occur in the body")));
            }
        }
        Ok(())
    }

    pub fn is_existential(&self) -> bool {
        !self.exist_vars.is_empty()
    }

    pub fn is_exist_var(&self, v: &Sym) -> bool {
        self.exist_vars.contains(v)
    }

    pub fn body_vars(&self) -> BTreeSet<&Sym> {
        self.body.iter().flat_map(Atom::vars).collect()
    }

    /// Number of occurrences of `v` across all body atoms.
    pub fn body_occurrences(&self, v: &Sym) -> usize {
        self.body
            .iter()
            .flat_map(|a| a.args.iter())
            .filter(|t| t.as_var() == Some(v))
            .count()
    }

    /// Body variables occurring at least twice in the body.
    pub fn repeated_body_vars(&self) -> Vec<Sym> {
        self.body_vars()
            .into_iter()
            .filter(|v| self.body_occurrences(v) > 1)
            .cloned()
            .collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(" -> ")?;
        if !self.exist_vars.is_empty() {
            f.write_str("exists ")?;
            for (i, z) in self.exist_vars.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{z}")?;
            }
            f.write_str(" ")?;
        }
        write!(f, "{}.", self.head)
    }
}
