//! Rule-based model-to-model transformation.
//!
//! Models are read by content interpreters ([`adapters`]) into a neutral
//! [`ModelDocument`], matched by the source terms of a [`RuleSet`]
//! ([`matching`]) and rebuilt by the target terms ([`transform`]), which also
//! record an [`ExecutionLedger`] for traceability.

pub mod adapters;
pub mod matching;
pub mod model;
pub mod rules;
pub mod transform;

pub use adapters::{effective_registry, interpreter, AdapterError, ContentInterpreter, Format, Loaded};
pub use matching::{combine, Binding, BindingSet, MatchError, Matcher, Slot};
pub use model::{
    resolve_metatypes, Entity, MetatypeRegistry, ModelDocument, ModelError, ObjectId, Relation, TypeFilter,
};
pub use rules::{
    dependency_graph, parse_rule_set, validate_rule_set, Diagnostic, LogicOp, ParseError, RuleSet,
};
pub use transform::{
    run_single_rule, run_transformation, Engine, EngineError, ExecutionLedger, RunStats, Trace, TraceError,
    TransformOutcome,
};
