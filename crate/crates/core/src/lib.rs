//! A semantic-based machine-translation transfer engine.
//!
//! Declarative, bidirectional transfer rules over flat sets of labeled
//! semantic conditions are compiled into direction-specific, indexed rule
//! bases and applied to skolem-ground inputs by first-order matching,
//! condition filters and a specificity-ordered nonmonotonic control
//! strategy with a copying metarule as the fallback of last resort.

pub mod compile;
pub mod engine;
pub mod error;
pub mod index;
pub mod matching;
pub mod oracle;
pub mod parse;
pub mod rules;
pub mod sorts;
pub mod term;
pub mod vit;

pub use compile::{compile, CompiledRule, Flow, RuleBase, SpecificityKey};
pub use engine::{
    evaluate_condition, next_application, serialize_trace, transfer, transfer_all,
    transfer_with_options, ExternalRegistry, Side, TraceEvent, TransferOptions, TransferResult,
};
pub use error::{CompileError, CompileErrors, EngineError, ParseError};
pub use matching::{match_set, match_term, skolemize, substitute, MatchSolution};
pub use parse::{parse_condition, parse_rule_file, parse_rule_file_from, parse_sorts, parse_vit};
pub use rules::{ClassDef, Condition, Orientation, Provenance, TransferRule};
pub use sorts::{SortHierarchy, TOP_SORT};
pub use term::{canonicalize, FreshGen, LabeledCondition, Substitution, Term};
pub use vit::{vit_alpha_equal, Vit};
