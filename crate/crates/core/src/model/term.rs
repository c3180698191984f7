use std::fmt;
use std::sync::Arc;

/// Interned-ish shared identifier used for predicates, constants and variables.
pub type Sym = Arc<str>;

/// A term of an atom.
///
/// The variant order is significant: it fixes the lexicographic order used by
/// the canonical chase (constants sort before nulls, nulls before frozen nulls).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Sym),
    /// Labeled null `_:n<k>`.
    Null(u32),
    /// Frozen null `_:f<k>`; behaves as a constant under homomorphisms.
    Frozen(u32),
    Var(Sym),
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Const(Arc::from(name))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(Arc::from(name))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// True for labeled nulls only.
    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }

    /// True for labeled and frozen nulls.
    pub fn is_any_null(&self) -> bool {
        matches!(self, Term::Null(_) | Term::Frozen(_))
    }

    /// Terms a homomorphism must keep fixed.
    pub fn is_rigid(&self) -> bool {
        matches!(self, Term::Const(_) | Term::Frozen(_))
    }

    pub fn as_var(&self) -> Option<&Sym> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

pub(crate) fn is_bare_constant(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c.is_ascii_digit() => {}
        _ => return false,
    }
    s != "exists" && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) if is_bare_constant(c) => write!(f, "{c}"),
            Term::Const(c) => {
                f.write_str("'")?;
                for ch in c.chars() {
                    if ch == '\'' || ch == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{ch}")?;
                }
                f.write_str("'")
            }
            Term::Null(k) => write!(f, "_:n{k}"),
            Term::Frozen(k) => write!(f, "_:f{k}"),
            Term::Var(v) => write!(f, "{v}"),
        }
    }
}
