use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::Binding;
use crate::model::ObjectId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Pending,
    Executed,
}

/// Names one execution: a rule and the canonical key of its input binding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordRef {
    pub rule: String,
    pub binding: String,
}

impl RecordRef {
    pub fn new(rule: impl Into<String>, binding: impl Into<String>) -> Self {
        Self { rule: rule.into(), binding: binding.into() }
    }
}

impl fmt::Display for RecordRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {{{}}}", self.rule, self.binding)
    }
}

/// One row of a rule's assignment table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub binding: Binding,
    pub key: String,
    pub status: RecordStatus,
    /// Objects denoted by each target parameter: minted ones and placeholder results.
    pub outputs: BTreeMap<String, Vec<ObjectId>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enriched: Vec<ObjectId>,
    /// Callee executions whose outputs this execution consumed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub calls: Vec<RecordRef>,
    /// Minted objects dropped as intermediates or dangling relations.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed: Vec<ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleRecords {
    pub name: String,
    pub records: Vec<ExecutionRecord>,
}

/// Reverse-index entry for a minted object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub rule: String,
    pub binding: String,
    pub sources: Vec<ObjectId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enriched_by: Vec<RecordRef>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub removed: bool,
}

impl Provenance {
    pub fn creator(&self) -> RecordRef {
        RecordRef::new(&self.rule, &self.binding)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("no provenance for `{0}`")]
    NotFound(ObjectId),
    #[error("invalid trace file: {0}")]
    Format(String),
}

/// Per-rule assignment tables plus a reverse index from minted ids to the
/// execution that created them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "LedgerRepr")]
pub struct ExecutionLedger {
    rules: Vec<RuleRecords>,
    provenance: BTreeMap<ObjectId, Provenance>,
    #[serde(skip)]
    index: BTreeMap<RecordRef, (usize, usize)>,
}

#[derive(Deserialize)]
struct LedgerRepr {
    rules: Vec<RuleRecords>,
    #[serde(default)]
    provenance: BTreeMap<ObjectId, Provenance>,
}

impl From<LedgerRepr> for ExecutionLedger {
    fn from(repr: LedgerRepr) -> Self {
        let mut index = BTreeMap::new();
        for (i, table) in repr.rules.iter().enumerate() {
            for (j, rec) in table.records.iter().enumerate() {
                index.insert(RecordRef::new(&table.name, &rec.key), (i, j));
            }
        }
        Self { rules: repr.rules, provenance: repr.provenance, index }
    }
}

/// One step of a provenance chain; `depth` 0 is the creating execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub depth: usize,
    pub rule: String,
    pub binding: String,
    pub sources: Vec<ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub id: ObjectId,
    pub removed: bool,
    pub enriched_by: Vec<RecordRef>,
    pub chain: Vec<TraceStep>,
}

impl Trace {
    pub fn rule(&self) -> &str {
        &self.chain[0].rule
    }

    pub fn binding(&self) -> &str {
        &self.chain[0].binding
    }

    pub fn sources(&self) -> &[ObjectId] {
        &self.chain[0].sources
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id)?;
        if self.removed {
            f.write_str(" (removed)")?;
        }
        writeln!(f)?;
        for step in &self.chain {
            let indent = "  ".repeat(step.depth + 1);
            let via = if step.depth == 0 { "created by" } else { "via" };
            write!(f, "{indent}{via} {} {{{}}}", step.rule, step.binding)?;
            let sources: Vec<&str> = step.sources.iter().map(ObjectId::as_str).collect();
            writeln!(f, " from [{}]", sources.join(", "))?;
        }
        for e in &self.enriched_by {
            writeln!(f, "  enriched by {e}")?;
        }
        Ok(())
    }
}

impl ExecutionLedger {
    pub fn new<I, S>(rule_names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            rules: rule_names
                .into_iter()
                .map(|n| RuleRecords { name: n.into(), records: Vec::new() })
                .collect(),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, TraceError> {
        serde_json::from_str(text).map_err(|e| TraceError::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ledger serializes");
        s.push('\n');
        s
    }

    /// Flat table: one row per minted object and role (created or enriched).
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["target_id", "role", "rule", "binding", "removed", "sources"])
            .expect("in-memory write");
        for (id, p) in &self.provenance {
            let sources: Vec<&str> = p.sources.iter().map(ObjectId::as_str).collect();
            let removed = if p.removed { "true" } else { "false" };
            w.write_record([id.as_str(), "created", &p.rule, &p.binding, removed, &sources.join(" ")])
                .expect("in-memory write");
            for e in &p.enriched_by {
                let src = self
                    .record(&e.rule, &e.binding)
                    .map(|r| {
                        let ids: Vec<String> =
                            r.binding.object_ids().iter().map(ToString::to_string).collect();
                        ids.join(" ")
                    })
                    .unwrap_or_default();
                w.write_record([id.as_str(), "enriched", &e.rule, &e.binding, removed, &src])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8")
    }

    pub fn rules(&self) -> &[RuleRecords] {
        &self.rules
    }

    pub fn records_of(&self, rule: &str) -> &[ExecutionRecord] {
        self.rules.iter().find(|t| t.name == rule).map_or(&[], |t| t.records.as_slice())
    }

    pub fn record(&self, rule: &str, key: &str) -> Option<&ExecutionRecord> {
        let &(i, j) = self.index.get(&RecordRef::new(rule, key))?;
        Some(&self.rules[i].records[j])
    }

    pub fn total_records(&self) -> usize {
        self.rules.iter().map(|t| t.records.len()).sum()
    }

    pub fn provenance(&self, id: &ObjectId) -> Option<&Provenance> {
        self.provenance.get(id)
    }

    pub fn provenance_entries(&self) -> impl Iterator<Item = (&ObjectId, &Provenance)> {
        self.provenance.iter()
    }

    fn slot(&mut self, rule: &str) -> usize {
        match self.rules.iter().position(|t| t.name == rule) {
            Some(i) => i,
            None => {
                self.rules.push(RuleRecords { name: rule.to_owned(), records: Vec::new() });
                self.rules.len() - 1
            }
        }
    }

    /// Appends a pending record. Returns `false` if one already exists.
    pub(crate) fn begin(&mut self, rule: &str, binding: &Binding) -> bool {
        let key = binding.canonical_key();
        let r = RecordRef::new(rule, &key);
        if self.index.contains_key(&r) {
            return false;
        }
        let i = self.slot(rule);
        self.rules[i].records.push(ExecutionRecord {
            binding: binding.clone(),
            key,
            status: RecordStatus::Pending,
            outputs: BTreeMap::new(),
            enriched: Vec::new(),
            calls: Vec::new(),
            removed: Vec::new(),
        });
        self.index.insert(r, (i, self.rules[i].records.len() - 1));
        true
    }

    pub(crate) fn record_mut(&mut self, r: &RecordRef) -> Option<&mut ExecutionRecord> {
        let &(i, j) = self.index.get(r)?;
        Some(&mut self.rules[i].records[j])
    }

    pub(crate) fn note_created(&mut self, id: ObjectId, by: &RecordRef, sources: Vec<ObjectId>) {
        self.provenance.insert(
            id,
            Provenance {
                rule: by.rule.clone(),
                binding: by.binding.clone(),
                sources,
                enriched_by: Vec::new(),
                removed: false,
            },
        );
    }

    pub(crate) fn note_enriched(&mut self, id: &ObjectId, by: &RecordRef) {
        if let Some(p) = self.provenance.get_mut(id) {
            if !p.enriched_by.contains(by) {
                p.enriched_by.push(by.clone());
            }
        }
        if let Some(rec) = self.record_mut(by) {
            if !rec.enriched.contains(id) {
                rec.enriched.push(id.clone());
            }
        }
    }

    pub(crate) fn mark_removed(&mut self, id: &ObjectId) {
        let Some(p) = self.provenance.get_mut(id) else {
            return;
        };
        p.removed = true;
        let creator = p.creator();
        if let Some(rec) = self.record_mut(&creator) {
            if !rec.removed.contains(id) {
                rec.removed.push(id.clone());
            }
        }
    }

    /// Provenance chain of `id`: the creating execution followed by every
    /// execution it called, transitively, depth-first in call order.
    pub fn trace_lookup(&self, id: &ObjectId) -> Result<Trace, TraceError> {
        let p = self.provenance.get(id).ok_or_else(|| TraceError::NotFound(id.clone()))?;
        let mut chain = Vec::new();
        let mut seen = BTreeSet::new();
        self.collect_chain(&p.creator(), 0, &mut seen, &mut chain);
        Ok(Trace { id: id.clone(), removed: p.removed, enriched_by: p.enriched_by.clone(), chain })
    }

    fn collect_chain(
        &self,
        r: &RecordRef,
        depth: usize,
        seen: &mut BTreeSet<RecordRef>,
        out: &mut Vec<TraceStep>,
    ) {
        if !seen.insert(r.clone()) {
            return;
        }
        let rec = self.record(&r.rule, &r.binding);
        out.push(TraceStep {
            depth,
            rule: r.rule.clone(),
            binding: r.binding.clone(),
            sources: rec.map(|x| x.binding.object_ids().into_iter().collect()).unwrap_or_default(),
        });
        if let Some(rec) = rec {
            for c in &rec.calls {
                self.collect_chain(c, depth + 1, seen, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExecutionLedger {
        let mut l = ExecutionLedger::new(["R2", "R3"]);
        let b2 = Binding::single("S", "p1");
        let b3 = Binding::single("A", "p2");
        assert!(l.begin("R2", &b2));
        assert!(!l.begin("R2", &b2));
        l.begin("R3", &b3);
        let r2 = RecordRef::new("R2", "S=p1");
        let r3 = RecordRef::new("R3", "A=p2");
        l.record_mut(&r3).unwrap().calls.push(r2.clone());
        l.note_created("sub".into(), &r2, vec!["p1".into()]);
        l.note_created("task".into(), &r3, vec!["p2".into()]);
        l.note_enriched(&"sub".into(), &r3);
        l
    }

    #[test]
    fn trace_follows_calls() {
        let l = sample();
        let t = l.trace_lookup(&"task".into()).unwrap();
        assert_eq!(t.rule(), "R3");
        assert_eq!(t.chain.len(), 2);
        assert_eq!(t.chain[1].rule, "R2");
        assert_eq!(t.chain[1].depth, 1);
        assert!(matches!(l.trace_lookup(&"nope".into()), Err(TraceError::NotFound(_))));
    }

    #[test]
    fn removal_is_flagged_not_forgotten() {
        let mut l = sample();
        l.mark_removed(&"sub".into());
        assert!(l.trace_lookup(&"sub".into()).unwrap().removed);
        assert_eq!(l.record("R2", "S=p1").unwrap().removed, vec![ObjectId::from("sub")]);
    }

    #[test]
    fn json_round_trip_rebuilds_index() {
        let l = sample();
        let back = ExecutionLedger::from_json(&l.to_json()).unwrap();
        assert_eq!(back, l);
        assert!(back.record("R3", "A=p2").is_some());
        assert_eq!(back.trace_lookup(&"task".into()).unwrap().chain.len(), 2);
    }

    #[test]
    fn csv_has_one_row_per_role() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "target_id,role,rule,binding,removed,sources");
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().any(|l| l.starts_with("sub,enriched,R3")));
    }
}
