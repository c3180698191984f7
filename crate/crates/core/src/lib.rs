//! A Datalog± engine: program classification (WA, JA, Sticky, WS, JWS),
//! the classic chase, selection-driven query answering with freezing and
//! resumptions, and magic-sets rewriting for existential rules.

pub mod chase;
pub mod classes;
pub mod error;
pub mod generate;
pub mod graph;
pub mod magic;
pub mod model;
pub mod parser;
pub mod qa;

pub use error::{Error, Result};
pub use model::*;
