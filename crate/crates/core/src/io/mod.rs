//! Text formats: the `.nid` rule language, `.prob` problems, a PPDDL subset and
//! conversions between PPDDL operators and NID rules.

mod convert;
mod lexer;
mod nid;
mod ppddl;
mod ppddl_eval;
mod problem;
mod sexpr;
mod triples;

pub use convert::{nid_to_ppddl, ppddl_to_nid, Conversion, ConvertError, NoiseExport, ToNidOptions, ToPpddlOptions};
pub use nid::{parse_rules, serialize_rule, serialize_rules, RuleFile};
pub use ppddl::{
    parse_ppddl, write_ppddl, DerivedDecl, Effect, Formula, PTerm, PpddlAction, PpddlDomain, PredicateDecl, TypedVar,
};
pub use ppddl_eval::{ppddl_successors, PpddlGrounding, Successors};
pub use problem::{parse_problem, Prior, ProblemFile};
pub use triples::parse_triples;

use std::fmt;

/// A diagnostic with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub file: String,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(file: &str, line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { file: file.to_string(), line, col, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.file, self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}
