//! Error types shared across parsing, compilation and transfer.

use crate::rules::Provenance;
use std::fmt;
use thiserror::Error;

/// A parse failure with source position. `col` is zero for errors that
/// concern a whole line or statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub file: String,
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.file, self.msg)
        } else if self.col == 0 {
            write!(f, "{}:{}: {}", self.file, self.line, self.msg)
        } else {
            write!(f, "{}:{}:{}: {}", self.file, self.line, self.col, self.msg)
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("{provenance}: predicate `{predicate}` used with arity {found}, previously {expected}")]
    ArityClash {
        predicate: String,
        expected: usize,
        found: usize,
        provenance: Provenance,
    },
    #[error("{provenance}: class `{class}` is not defined for language `{lang}`")]
    WrongClassLanguage {
        class: String,
        lang: String,
        provenance: Provenance,
    },
    #[error("{provenance}: `{symbol}` is both a class name and a class member for language `{lang}`")]
    AmbiguousClassSymbol {
        symbol: String,
        lang: String,
        provenance: Provenance,
    },
    #[error("{provenance}: rule has an empty match side after orientation")]
    EmptyMatchSide { provenance: Provenance },
}

/// Compilation aggregates every finding instead of stopping at the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompileErrors(pub Vec<CompileError>);

impl fmt::Display for CompileErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for CompileErrors {}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("{provenance}: external predicate `{name}/{arity}` is not registered")]
    UnregisteredExternal {
        name: String,
        arity: usize,
        provenance: Provenance,
    },
    #[error("{provenance}: unknown sort `{sort}`")]
    UnknownSort {
        sort: String,
        provenance: Provenance,
    },
    #[error("external predicate `{name}/{arity}` is already registered")]
    DuplicateExternal { name: String, arity: usize },
    #[error("no consistent derivation exists; failing target conditions: {}", failing.join("; "))]
    Exhausted { failing: Vec<String> },
}
