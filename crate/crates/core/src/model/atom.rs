use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::term::{Sym, Term};
use crate::error::Error;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: Sym,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom {
            pred: Arc::from(pred),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(Term::is_var)
    }

    pub fn has_null(&self) -> bool {
        self.args.iter().any(Term::is_any_null)
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> impl Iterator<Item = &Sym> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn position(&self, i: usize) -> Position {
        Position::new(&self.pred, i + 1)
    }

    pub fn positions(&self) -> impl Iterator<Item = (Position, &Term)> {
        self.args
            .iter()
            .enumerate()
            .map(move |(i, t)| (Position::new(&self.pred, i + 1), t))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// Predicate slot `P[i]`, 1-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub pred: Sym,
    pub index: usize,
}

impl Position {
    pub fn new(pred: &str, index: usize) -> Position {
        Position {
            pred: Arc::from(pred),
            index,
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.pred, self.index)
    }
}

impl FromStr for Position {
    type Err = Error;

    fn from_str(s: &str) -> Result<Position, Error> {
        let bad = || Error::BadPosition(s.to_string());
        let s = s.trim();
        let open = s.find('[').ok_or_else(bad)?;
        if !s.ends_with(']') || open == 0 {
            return Err(bad());
        }
        let index: usize = s[open + 1..s.len() - 1].parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        Ok(Position::new(&s[..open], index))
    }
}

pub type PositionSet = std::collections::BTreeSet<Position>;
