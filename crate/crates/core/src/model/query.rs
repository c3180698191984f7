use std::collections::BTreeSet;
use std::fmt;

use super::atom::Atom;
use super::term::Sym;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    pub name: String,
    pub free_vars: Vec<Sym>,
    pub exist_vars: Vec<Sym>,
    pub body: Vec<Atom>,
}

impl ConjunctiveQuery {
    /// Builds a query; every body variable not listed as free is existential.
    pub fn new(name: &str, free_vars: Vec<Sym>, body: Vec<Atom>) -> ConjunctiveQuery {
        let mut seen = BTreeSet::new();
        let mut exist_vars = Vec::new();
        for v in body.iter().flat_map(Atom::vars) {
            if !free_vars.contains(v) && seen.insert(v.clone()) {
                exist_vars.push(v.clone());
            }
        }
        ConjunctiveQuery {
            name: name.to_string(),
            free_vars,
            exist_vars,
            body,
        }
    }

    /// Number of existential variables, i.e. the resumption count.
    pub fn m_q(&self) -> usize {
        self.exist_vars.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.free_vars.is_empty()
    }

    pub fn var_count(&self) -> usize {
        self.free_vars.len() + self.exist_vars.len()
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.name)?;
        if !self.free_vars.is_empty() {
            f.write_str("(")?;
            for (i, v) in self.free_vars.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str(")")?;
        }
        f.write_str(" :- ")?;
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(".")
    }
}
