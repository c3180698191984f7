//! Terms, atoms, rules, programs, instances and the homomorphism machinery.

mod atom;
mod hom;
mod instance;
mod program;
mod query;
mod rule;
mod term;

pub use atom::{Atom, Position, PositionSet};
pub use hom::{
    apply_assignment, apply_atom, bind_atoms, evaluate_cq, for_each_match, for_each_match_pruned, freeze_nulls, is_pi_homomorphic,
    Assignment,
};
pub(crate) use hom::for_each_match_ordered;
pub use instance::{isomorphic, Instance};
pub use program::{rule_positions, Program, Schema};
pub use query::ConjunctiveQuery;
pub use rule::Rule;
pub use term::{Sym, Term};
