//! Rule execution: matching, creation and enrichment of target objects,
//! transformation references, intermediates and the traceability ledger.

mod engine;
mod ledger;
mod store;

pub use engine::{
    remove_intermediates, run_single_rule, run_transformation, Engine, EngineError, OverlapWarning, RunStats,
    TransformOutcome,
};
pub use ledger::{
    ExecutionLedger, ExecutionRecord, Provenance, RecordRef, RecordStatus, RuleRecords, Trace, TraceError,
    TraceStep,
};
pub use store::{mint_id, TargetStore};

/// Provenance chain of a target object.
pub fn trace_lookup(ledger: &ExecutionLedger, id: &crate::model::ObjectId) -> Result<Trace, TraceError> {
    ledger.trace_lookup(id)
}
