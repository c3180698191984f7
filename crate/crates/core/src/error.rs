use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("{line}:{col}: predicate {pred} used with arity {found}, expected {expected}")]
    Arity {
        line: usize,
        col: usize,
        pred: String,
        expected: usize,
        found: usize,
    },

    #[error("{line}:{col}: existential variable {var} occurs in the rule body")]
    ExistentialInBody { line: usize, col: usize, var: String },

    #[error("{line}:{col}: head variable {var} is neither in the body nor existential")]
    UnsafeHeadVariable { line: usize, col: usize, var: String },

    #[error("{line}:{col}: declared existential variable {var} does not occur in the head")]
    UnusedExistential { line: usize, col: usize, var: String },

    #[error("{line}:{col}: rules have exactly one head atom")]
    MultiAtomHead { line: usize, col: usize },

    #[error("{line}:{col}: facts must be ground, found variable {var}")]
    NonGroundFact { line: usize, col: usize, var: String },

    #[error("{line}:{col}: answer variable {var} does not occur in the query body")]
    UnsafeQuery { line: usize, col: usize, var: String },

    #[error("expected exactly one query, found {0}")]
    QueryCount(usize),

    #[error("invalid rule {rule}: {msg}")]
    InvalidRule { rule: String, msg: String },

    #[error("predicate {pred} has arity {expected} but an atom with {found} arguments was given")]
    SchemaArity {
        pred: String,
        expected: usize,
        found: usize,
    },

    #[error("EDB atom {0} is not ground and null-free")]
    NonGroundEdb(String),

    #[error("variable {0} is not bound by the assignment")]
    UnboundVariable(String),

    #[error("atom {0} is not in the chased instance")]
    UnknownAtom(String),

    #[error("position {0} is not a position of the program")]
    UnknownPosition(String),

    #[error("cannot parse position {0:?}")]
    BadPosition(String),

    #[error("not in the class: {0}")]
    NotInClass(String),
}

pub type Result<T> = std::result::Result<T, Error>;
