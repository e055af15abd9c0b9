use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use super::ledger::{ExecutionLedger, RecordRef, RecordStatus};
use super::store::{mint_id, TargetStore};
use crate::matching::{Binding, MatchError, Matcher, Slot};
use crate::model::{
    ContentRef, Entity, MetatypeRegistry, ModelDocument, ModelError, ObjectId, Relation, ValueError,
};
use crate::rules::{
    validate_rule_set, Assignment, Diagnostic, EndRef, Location, RefArg, RuleSet, TargetKind, TargetTerm,
    TransformationReference, TransformationRule,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("rule set has {} diagnostic(s); first: {}", .0.len(), .0.first().map(|d| d.message.as_str()).unwrap_or(""))]
    Invalid(Vec<Diagnostic>),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("rule `{rule}` at {location}: {source}")]
    Match { rule: String, location: Location, source: MatchError },
    #[error("rule `{rule}` at {location}, binding {{{binding}}}: reference argument `{param}` is unbound")]
    UnboundArgument { rule: String, location: Location, binding: String, param: String },
    #[error("rule `{rule}` at {location}, binding {{{binding}}}: {source}")]
    Model { rule: String, location: Location, binding: String, source: Box<ModelError> },
    #[error("{error}; first written by {first}, then by {second}")]
    Conflict { error: Box<ValueError>, first: RecordRef, second: RecordRef },
    #[error("rule `{rule}` re-entered for binding {{{binding}}}")]
    Reentrant { rule: String, binding: String },
}

/// Two or more final objects sharing a type set and a name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlapWarning {
    pub types: Vec<String>,
    pub name: String,
    pub objects: Vec<(ObjectId, RecordRef)>,
}

impl std::fmt::Display for OverlapWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "overlap: {} `{}` created by", self.types.join("/"), self.name)?;
        for (i, (id, by)) in self.objects.iter().enumerate() {
            let sep = if i == 0 { " " } else { ", " };
            write!(f, "{sep}{by} as {id}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RunStats {
    pub rules_fired: usize,
    pub executions: usize,
    pub objects_created: usize,
    pub intermediates_removed: usize,
}

impl std::fmt::Display for RunStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} rules, {} objects created, {} intermediates",
            self.rules_fired, self.objects_created, self.intermediates_removed
        )
    }
}

#[derive(Debug, Clone)]
pub struct TransformOutcome {
    pub target: ModelDocument,
    pub ledger: ExecutionLedger,
    pub stats: RunStats,
    pub warnings: Vec<OverlapWarning>,
}

/// All bindings of one rule plus an index from (parameter, object) to the
/// bindings whose slot contains the object.
struct RuleMatch {
    bindings: Vec<Binding>,
    index: BTreeMap<String, BTreeMap<ObjectId, Vec<usize>>>,
}

impl RuleMatch {
    fn new(bindings: Vec<Binding>) -> Self {
        let mut index: BTreeMap<String, BTreeMap<ObjectId, Vec<usize>>> = BTreeMap::new();
        for (i, b) in bindings.iter().enumerate() {
            for (p, slot) in b.iter() {
                let by_id = index.entry(p.clone()).or_default();
                for id in slot.ids() {
                    by_id.entry(id.clone()).or_default().push(i);
                }
            }
        }
        Self { bindings, index }
    }

    /// Bindings whose slot for each `(param, slot)` shares at least one object with it.
    fn select(&self, args: &[(String, &Slot)]) -> Vec<usize> {
        let mut selected: Option<BTreeSet<usize>> = None;
        for (param, slot) in args {
            let hits: BTreeSet<usize> = slot
                .ids()
                .iter()
                .filter_map(|id| self.index.get(param).and_then(|m| m.get(id)))
                .flatten()
                .copied()
                .collect();
            selected = Some(match selected {
                None => hits,
                Some(s) => s.intersection(&hits).copied().collect(),
            });
        }
        match selected {
            None => (0..self.bindings.len()).collect(),
            Some(s) => s.into_iter().collect(),
        }
    }
}

/// State of one binding's execution.
struct Frame<'r> {
    rule: &'r TransformationRule,
    me: RecordRef,
    binding: Binding,
    targets: BTreeMap<String, Vec<ObjectId>>,
    calls: Vec<RecordRef>,
}

/// One value per expansion parameter.
type Choice = BTreeMap<String, ObjectId>;

/// A transformation run in progress.
///
/// Rules are matched against the source model only, once per rule, and
/// executed per binding. References execute their callee on demand and
/// reuse its recorded outputs afterwards.
pub struct Engine<'a> {
    rules: &'a RuleSet,
    source: &'a ModelDocument,
    matcher: Matcher<'a>,
    matches: Vec<Option<Rc<RuleMatch>>>,
    store: TargetStore,
    ledger: ExecutionLedger,
}

impl<'a> Engine<'a> {
    /// Refuses rule sets with diagnostics.
    pub fn new(
        rules: &'a RuleSet,
        source: &'a ModelDocument,
        registry: &'a MetatypeRegistry,
    ) -> Result<Self, EngineError> {
        let diags = validate_rule_set(rules);
        if !diags.is_empty() {
            return Err(EngineError::Invalid(diags));
        }
        Ok(Self {
            rules,
            source,
            matcher: Matcher::new(source, registry),
            matches: vec![None; rules.rules.len()],
            store: TargetStore::new(),
            ledger: ExecutionLedger::new(rules.rules.iter().map(|r| r.name.clone())),
        })
    }

    pub fn ledger(&self) -> &ExecutionLedger {
        &self.ledger
    }

    pub fn store(&self) -> &TargetStore {
        &self.store
    }

    fn rule_index(&self, name: &str) -> Result<usize, EngineError> {
        self.rules.index_of(name).ok_or_else(|| EngineError::UnknownRule(name.to_owned()))
    }

    fn matches(&mut self, idx: usize) -> Result<Rc<RuleMatch>, EngineError> {
        if let Some(m) = &self.matches[idx] {
            return Ok(Rc::clone(m));
        }
        let rule = &self.rules.rules[idx];
        let set = self.matcher.eval(&rule.source).map_err(|source| EngineError::Match {
            rule: rule.name.clone(),
            location: rule.location,
            source,
        })?;
        let m = Rc::new(RuleMatch::new(set.iter().cloned().collect()));
        self.matches[idx] = Some(Rc::clone(&m));
        Ok(m)
    }

    /// Bindings of a rule's source term, in canonical order.
    pub fn bindings(&mut self, rule: &str) -> Result<Vec<Binding>, EngineError> {
        let idx = self.rule_index(rule)?;
        Ok(self.matches(idx)?.bindings.clone())
    }

    /// Fires every unrecorded binding of every rule, in file order, until a
    /// full pass adds no record.
    pub fn run(&mut self) -> Result<(), EngineError> {
        loop {
            let before = self.ledger.total_records();
            for idx in 0..self.rules.rules.len() {
                self.fire_all(idx)?;
            }
            if self.ledger.total_records() == before {
                return Ok(());
            }
        }
    }

    /// Fires only `rule` (and, lazily, whatever it references).
    pub fn run_rule(&mut self, rule: &str) -> Result<(), EngineError> {
        let idx = self.rule_index(rule)?;
        self.fire_all(idx)
    }

    fn fire_all(&mut self, idx: usize) -> Result<(), EngineError> {
        let m = self.matches(idx)?;
        let name = &self.rules.rules[idx].name;
        for b in &m.bindings {
            if self.ledger.record(name, &b.canonical_key()).is_none() {
                self.execute(idx, b.clone())?;
            }
        }
        Ok(())
    }

    /// Executes `rule` for `binding` unless already recorded; returns every
    /// object its target parameters denote.
    pub fn execute_rule(&mut self, rule: &str, binding: &Binding) -> Result<Vec<ObjectId>, EngineError> {
        let idx = self.rule_index(rule)?;
        let r = self.execute(idx, binding.clone())?;
        let rec = self.ledger.record(&r.rule, &r.binding).expect("record exists");
        Ok(rec.outputs.values().flatten().cloned().collect())
    }

    fn execute(&mut self, idx: usize, binding: Binding) -> Result<RecordRef, EngineError> {
        let rules = self.rules;
        let rule = &rules.rules[idx];
        let me = RecordRef::new(&rule.name, binding.canonical_key());
        if !self.ledger.begin(&rule.name, &binding) {
            let rec = self.ledger.record(&me.rule, &me.binding).expect("record exists");
            if rec.status == RecordStatus::Pending {
                return Err(EngineError::Reentrant { rule: me.rule, binding: me.binding });
            }
            return Ok(me);
        }
        let mut frame = Frame { rule, me: me.clone(), binding, targets: BTreeMap::new(), calls: Vec::new() };
        self.exec_target(&mut frame, &rule.target)?;
        let rec = self.ledger.record_mut(&me).expect("record exists");
        rec.outputs = frame.targets;
        rec.calls = frame.calls;
        rec.status = RecordStatus::Executed;
        Ok(me)
    }

    fn exec_target(&mut self, frame: &mut Frame<'_>, term: &TargetTerm) -> Result<(), EngineError> {
        match term {
            TargetTerm::Group(children) => {
                for c in children {
                    self.exec_target(frame, c)?;
                }
            }
            TargetTerm::Element(e) => match &e.kind {
                TargetKind::Create(type_name) => {
                    let mut ids = Vec::new();
                    for choice in self.choices(frame, &e.assignments, &[]) {
                        let id = mint_id(&frame.me.rule, &frame.me.binding, &e.param, &render(&choice));
                        let entity = Entity::new(id.clone(), "", [type_name.as_str()]);
                        self.store
                            .add_entity(entity, e.intermediate)
                            .map_err(|err| model_error(frame, err))?;
                        self.created(frame, &id);
                        self.apply(frame, &id, &e.assignments, &choice)?;
                        ids.push(id);
                    }
                    frame.targets.insert(e.param.clone(), ids);
                }
                TargetKind::Placeholder(refs) => {
                    let ids = self.resolve_all(frame, refs)?;
                    frame.targets.insert(e.param.clone(), ids.clone());
                    self.enrich(frame, &ids, &e.assignments)?;
                }
            },
            TargetTerm::Relation(r) => {
                let sources = self.end(frame, &r.source)?;
                let targets = self.end(frame, &r.target)?;
                let mut ids = Vec::new();
                for s in &sources {
                    for t in &targets {
                        let ends = [("<source", s), ("<target", t)];
                        for mut choice in self.choices(frame, &r.assignments, &ends) {
                            let id = mint_id(&frame.me.rule, &frame.me.binding, &r.param, &render(&choice));
                            choice.retain(|k, _| !k.starts_with('<'));
                            let rel =
                                Relation::new(id.clone(), "", [r.type_name.as_str()], s.clone(), t.clone());
                            self.store
                                .add_relation(rel, r.intermediate)
                                .map_err(|err| model_error(frame, err))?;
                            self.created(frame, &id);
                            self.apply(frame, &id, &r.assignments, &choice)?;
                            ids.push(id);
                        }
                    }
                }
                frame.targets.insert(r.param.clone(), ids);
            }
            TargetTerm::Enrich(en) => {
                let ids = self.resolve_all(frame, &en.refs)?;
                self.enrich(frame, &ids, &en.assignments)?;
            }
        }
        Ok(())
    }

    fn created(&mut self, frame: &Frame<'_>, id: &ObjectId) {
        let sources = frame.binding.object_ids().into_iter().collect();
        self.ledger.note_created(id.clone(), &frame.me, sources);
    }

    fn enrich(
        &mut self,
        frame: &Frame<'_>,
        ids: &[ObjectId],
        assigns: &[Assignment],
    ) -> Result<(), EngineError> {
        if assigns.is_empty() {
            return Ok(());
        }
        for id in ids {
            for choice in self.choices(frame, assigns, &[]) {
                self.apply(frame, id, assigns, &choice)?;
            }
            self.ledger.note_enriched(id, &frame.me);
        }
        Ok(())
    }

    /// Objects a relation end denotes: a target parameter's objects, a source
    /// parameter's objects passed through, or reference results.
    fn end(&mut self, frame: &mut Frame<'_>, end: &EndRef) -> Result<Vec<ObjectId>, EngineError> {
        match end {
            EndRef::Param(p) => Ok(match frame.targets.get(p) {
                Some(ids) => ids.clone(),
                None => frame.binding.get(p).map(|s| s.ids().to_vec()).unwrap_or_default(),
            }),
            EndRef::Refs(refs) => self.resolve_all(frame, refs),
        }
    }

    fn resolve_all(
        &mut self,
        frame: &mut Frame<'_>,
        refs: &[TransformationReference],
    ) -> Result<Vec<ObjectId>, EngineError> {
        let mut out = Vec::new();
        for r in refs {
            for id in self.resolve(frame, r)? {
                if !out.contains(&id) {
                    out.push(id);
                }
            }
        }
        Ok(out)
    }

    /// `ref(...)` evaluated for the binding `caller`: the selected outputs
    /// of every callee binding matching the arguments, executing the callee
    /// first where it has not fired yet.
    pub fn resolve_reference(
        &mut self,
        caller_rule: &str,
        caller: &Binding,
        reference: &TransformationReference,
    ) -> Result<Vec<ObjectId>, EngineError> {
        let rules = self.rules;
        let rule = rules.rule(caller_rule).ok_or_else(|| EngineError::UnknownRule(caller_rule.to_owned()))?;
        let mut frame = Frame {
            rule,
            me: RecordRef::new(caller_rule, caller.canonical_key()),
            binding: caller.clone(),
            targets: BTreeMap::new(),
            calls: Vec::new(),
        };
        self.resolve(&mut frame, reference)
    }

    fn resolve(
        &mut self,
        frame: &mut Frame<'_>,
        r: &TransformationReference,
    ) -> Result<Vec<ObjectId>, EngineError> {
        let rules = self.rules;
        let idx = self.rule_index(&r.rule)?;
        let callee = &rules.rules[idx];
        let inputs = callee.source.input_parameters();
        let mut args: Vec<(String, &Slot)> = Vec::new();
        let mut positional = inputs.iter();
        for arg in &r.args {
            let callee_param = match arg {
                RefArg::Positional(_) => match positional.next() {
                    Some(p) => p.clone(),
                    None => continue,
                },
                RefArg::Named { callee, .. } => callee.clone(),
            };
            let caller_param = arg.caller_param();
            let slot = frame.binding.get(caller_param).ok_or_else(|| EngineError::UnboundArgument {
                rule: frame.rule.name.clone(),
                location: frame.rule.location,
                binding: frame.me.binding.clone(),
                param: caller_param.to_owned(),
            })?;
            args.push((callee_param, slot));
        }
        let m = self.matches(idx)?;
        let output = match &r.output {
            Some(o) => o.clone(),
            None => callee.target.created_parameters().first().map(|s| s.to_string()).unwrap_or_default(),
        };
        let mut out = Vec::new();
        for i in m.select(&args) {
            let called = self.execute(idx, m.bindings[i].clone())?;
            let rec = self.ledger.record(&called.rule, &called.binding).expect("record exists");
            for id in rec.outputs.get(&output).into_iter().flatten() {
                if !out.contains(id) {
                    out.push(id.clone());
                }
            }
            if !frame.calls.contains(&called) {
                frame.calls.push(called);
            }
        }
        Ok(out)
    }

    /// Expansion of a statement: one choice per combination of the
    /// multi-valued parameters its assignments read, crossed with `fixed`.
    fn choices(&self, frame: &Frame<'_>, assigns: &[Assignment], fixed: &[(&str, &ObjectId)]) -> Vec<Choice> {
        let mut base = Choice::new();
        for (k, v) in fixed {
            base.insert((*k).to_owned(), (*v).clone());
        }
        let mut out = vec![base];
        let params: BTreeSet<&str> = assigns.iter().flat_map(|a| a.value.parameters()).collect();
        for p in params {
            let values: &[ObjectId] = match (frame.targets.get(p), frame.binding.get(p)) {
                (Some(ids), _) if ids.len() != 1 => ids,
                (None, Some(slot @ Slot::Aggregated(_))) => slot.ids(),
                _ => continue,
            };
            out = out
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.insert(p.to_owned(), v.clone());
                        c
                    })
                })
                .collect();
        }
        out
    }

    fn context(&self, frame: &Frame<'_>, choice: &Choice) -> BTreeMap<String, ContentRef<'_>> {
        let mut ctx = BTreeMap::new();
        for (p, slot) in frame.binding.iter() {
            let id = match (choice.get(p), slot) {
                (Some(id), _) => id,
                (None, Slot::Single(id)) => id,
                (None, Slot::Aggregated(_)) => continue,
            };
            if let Some(obj) = self.source.object(id) {
                ctx.insert(p.clone(), obj);
            }
        }
        let target = self.store.model();
        for (p, ids) in &frame.targets {
            let id = match (choice.get(p), ids.as_slice()) {
                (Some(id), _) => id,
                (None, [only]) => only,
                _ => continue,
            };
            if let Some(obj) = target.object(id) {
                ctx.insert(p.clone(), obj);
            }
        }
        ctx
    }

    /// Evaluates every assignment against the frame and writes it to `id`.
    /// Assignments reading an unbound parameter or an absent value are skipped.
    fn apply(
        &mut self,
        frame: &Frame<'_>,
        id: &ObjectId,
        assigns: &[Assignment],
        choice: &Choice,
    ) -> Result<(), EngineError> {
        let values: Vec<_> = {
            let ctx = self.context(frame, choice);
            assigns
                .iter()
                .filter_map(|a| match a.value.evaluate(&ctx) {
                    Ok(Some(v)) => Some((a.accessor.clone(), v)),
                    Ok(None) | Err(_) => None,
                })
                .collect()
        };
        for (accessor, value) in values {
            self.store.assign(id, &accessor, &value, &frame.me).map_err(|c| EngineError::Conflict {
                error: c.error,
                first: c.first,
                second: frame.me.clone(),
            })?;
        }
        Ok(())
    }

    /// Removes intermediates, collects overlap warnings and hands back the result.
    pub fn finish(mut self) -> TransformOutcome {
        let removed = remove_intermediates(&mut self.store, &mut self.ledger);
        let target = self.store.into_model();
        let warnings = overlap_warnings(&target, &self.ledger);
        let stats = RunStats {
            rules_fired: self.ledger.rules().iter().filter(|t| !t.records.is_empty()).count(),
            executions: self.ledger.total_records(),
            objects_created: self.ledger.provenance_entries().count(),
            intermediates_removed: removed.len(),
        };
        TransformOutcome { target, ledger: self.ledger, stats, warnings }
    }
}

fn model_error(frame: &Frame<'_>, source: ModelError) -> EngineError {
    EngineError::Model {
        rule: frame.rule.name.clone(),
        location: frame.rule.location,
        binding: frame.me.binding.clone(),
        source: Box::new(source),
    }
}

fn render(choice: &Choice) -> String {
    choice.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

/// Drops intermediate objects and relations dangling on them; the ledger
/// keeps their records, flagged as removed.
pub fn remove_intermediates(store: &mut TargetStore, ledger: &mut ExecutionLedger) -> BTreeSet<ObjectId> {
    let removed = store.remove_intermediates();
    for id in &removed {
        ledger.mark_removed(id);
    }
    removed
}

type OverlapGroups = BTreeMap<(Vec<String>, String), Vec<(ObjectId, RecordRef)>>;

fn overlap_warnings(target: &ModelDocument, ledger: &ExecutionLedger) -> Vec<OverlapWarning> {
    let mut groups: OverlapGroups = BTreeMap::new();
    let objects = target.entities().chain(target.relations().map(|r| &r.base));
    for obj in objects {
        if obj.name.is_empty() {
            continue;
        }
        if let Some(p) = ledger.provenance(&obj.id) {
            let types = obj.metatypes.iter().cloned().collect();
            groups.entry((types, obj.name.clone())).or_default().push((obj.id.clone(), p.creator()));
        }
    }
    groups
        .into_iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|((types, name), objects)| OverlapWarning { types, name, objects })
        .collect()
}

/// Runs `rules` over `source` to fixpoint.
pub fn run_transformation(
    rules: &RuleSet,
    source: &ModelDocument,
    registry: &MetatypeRegistry,
) -> Result<TransformOutcome, EngineError> {
    let mut engine = Engine::new(rules, source, registry)?;
    engine.run()?;
    Ok(engine.finish())
}

/// Fires one rule (plus referenced rules as needed).
pub fn run_single_rule(
    rules: &RuleSet,
    source: &ModelDocument,
    registry: &MetatypeRegistry,
    rule: &str,
) -> Result<TransformOutcome, EngineError> {
    let mut engine = Engine::new(rules, source, registry)?;
    engine.run_rule(rule)?;
    Ok(engine.finish())
}
