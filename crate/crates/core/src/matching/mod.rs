//! Source-term evaluation against an immutable model.
//!
//! Without loop constraints an element term yields one binding per matching
//! entity. With loop constraints the matches are counted; if every constraint
//! accepts the count there is exactly one binding aggregating all of them,
//! otherwise none. Relationship terms group their candidate
//! (source, relation, target) triples according to which positions carry
//! constraints, see [`RelationPattern`].

mod binding;
mod logic;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;
use wildmatch::WildMatch;

pub use binding::{Binding, BindingSet, Slot};
pub use logic::{combine, combine_all};

use crate::model::{entities_of_type, relations_of_type, Entity, MetatypeRegistry, ModelDocument, ObjectId};
use crate::rules::{
    CompareOp, ConditionAccessor, LoopConstraint, RelationPattern, SearchCondition, SourceElement,
    SourceRelationship, SourceTerm, SubTerm,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("relationship `{param}` uses an undefined constraint pattern S/R/T = {}/{}/{}", .flags.0 as u8, .flags.1 as u8, .flags.2 as u8)]
    IllegalPattern { param: String, flags: (bool, bool, bool) },
}

/// Conjunction of all constraints on count `n`.
pub fn check_loop_constraint(n: u64, constraints: &[LoopConstraint]) -> bool {
    constraints.iter().all(|c| c.accepts(n))
}

/// Whether `object` satisfies a search condition. Absent namespaces and
/// attributes fail every operator.
pub fn condition_holds(cond: &SearchCondition, object: &Entity) -> bool {
    let test = |text: &str| match cond.op {
        CompareOp::Eq => text == cond.value,
        CompareOp::Ne => text != cond.value,
        CompareOp::Contains => text.contains(cond.value.as_str()),
        CompareOp::Matches => WildMatch::new(&cond.value).matches(text),
    };
    match &cond.accessor {
        ConditionAccessor::Name => test(&object.name),
        ConditionAccessor::Namespace => object.namespace.as_deref().is_some_and(test),
        ConditionAccessor::Attribute(k) => object.attributes.get(k).is_some_and(|v| test(v)),
        ConditionAccessor::Tag => match cond.op {
            CompareOp::Eq => object.tags.contains(&cond.value),
            CompareOp::Ne => !object.tags.contains(&cond.value),
            _ => object.tags.iter().any(|t| test(t)),
        },
    }
}

/// Evaluates source terms over one model. Holds only shared references, so
/// a matcher can be used from several threads.
#[derive(Debug, Clone, Copy)]
pub struct Matcher<'m> {
    model: &'m ModelDocument,
    registry: &'m MetatypeRegistry,
}

impl<'m> Matcher<'m> {
    pub fn new(model: &'m ModelDocument, registry: &'m MetatypeRegistry) -> Self {
        Self { model, registry }
    }

    pub fn model(&self) -> &'m ModelDocument {
        self.model
    }

    pub fn registry(&self) -> &'m MetatypeRegistry {
        self.registry
    }

    pub fn eval(&self, term: &SourceTerm) -> Result<BindingSet, MatchError> {
        match term {
            SourceTerm::Element(e) => Ok(self.eval_element(e)),
            SourceTerm::Relationship(r) => self.eval_relationship(r),
            SourceTerm::Group(g) => {
                let parts = g.children.iter().map(|c| self.eval(c)).collect::<Result<Vec<_>, _>>()?;
                Ok(combine_all(g.op, parts.into_iter()).unwrap_or_default())
            }
        }
    }

    pub fn eval_subterm(&self, sub: SubTerm<'_>) -> Result<BindingSet, MatchError> {
        match sub {
            SubTerm::Term(t) => self.eval(t),
            SubTerm::End(e) => Ok(self.eval_element(e)),
        }
    }

    /// Entities passing the type filter and every search condition, ascending by id.
    pub fn element_candidates(&self, term: &SourceElement) -> Vec<&'m Entity> {
        entities_of_type(self.model, &term.type_filter, self.registry)
            .into_iter()
            .filter(|e| term.conditions.iter().all(|c| condition_holds(c, e)))
            .collect()
    }

    fn end_accepts(&self, term: &SourceElement, id: &ObjectId) -> bool {
        self.model.entity(id).is_some_and(|e| {
            term.type_filter.accepts(&e.metatypes, self.registry)
                && term.conditions.iter().all(|c| condition_holds(c, e))
        })
    }

    pub fn eval_element(&self, term: &SourceElement) -> BindingSet {
        let matches = self.element_candidates(term);
        let mut out = BindingSet::new([term.param.clone()]);
        if term.constraints.is_empty() {
            for e in matches {
                out.insert(Binding::single(&term.param, e.id.clone()));
            }
        } else if check_loop_constraint(matches.len() as u64, &term.constraints) {
            let slot = Slot::aggregated(matches.into_iter().map(|e| e.id.clone()));
            out.insert(Binding::new().with(&term.param, slot));
        }
        out
    }

    /// Candidate (source, relation, target) triples in ascending relation-id order.
    pub fn relationship_triples(&self, term: &SourceRelationship) -> Vec<(ObjectId, ObjectId, ObjectId)> {
        relations_of_type(self.model, &term.type_filter, self.registry)
            .into_iter()
            .filter(|r| term.conditions.iter().all(|c| condition_holds(c, &r.base)))
            .filter(|r| self.end_accepts(&term.source, &r.source))
            .filter(|r| self.end_accepts(&term.target, &r.target))
            .map(|r| (r.source.clone(), r.id().clone(), r.target.clone()))
            .collect()
    }

    pub fn eval_relationship(&self, term: &SourceRelationship) -> Result<BindingSet, MatchError> {
        let pattern = term
            .pattern()
            .ok_or_else(|| MatchError::IllegalPattern { param: term.param.clone(), flags: term.flags() })?;
        let params = [&term.param, &term.source.param, &term.target.param];
        let mut out = BindingSet::new(params.iter().map(|p| p.to_string()));
        let triples = self.relationship_triples(term);

        if pattern == RelationPattern::PerRelation {
            for (s, r, t) in triples {
                out.insert(
                    Binding::new()
                        .with(&term.source.param, Slot::Single(s))
                        .with(&term.param, Slot::Single(r))
                        .with(&term.target.param, Slot::Single(t)),
                );
            }
            return Ok(out);
        }

        #[derive(Default)]
        struct Group {
            sources: BTreeSet<ObjectId>,
            relations: BTreeSet<ObjectId>,
            targets: BTreeSet<ObjectId>,
        }
        let mut groups: BTreeMap<(Option<ObjectId>, Option<ObjectId>), Group> = BTreeMap::new();
        if pattern == RelationPattern::Whole {
            groups.entry((None, None)).or_default();
        }
        for (s, r, t) in triples {
            let key = match pattern {
                RelationPattern::PerSource => (Some(s.clone()), None),
                RelationPattern::PerTarget => (None, Some(t.clone())),
                RelationPattern::PerPair => (Some(s.clone()), Some(t.clone())),
                RelationPattern::Whole | RelationPattern::PerRelation => (None, None),
            };
            let g = groups.entry(key).or_default();
            g.sources.insert(s);
            g.relations.insert(r);
            g.targets.insert(t);
        }

        let (s_flag, _, t_flag) = pattern.flags();
        for ((key_s, key_t), g) in groups {
            let ok = check_loop_constraint(g.relations.len() as u64, &term.constraints)
                && (!s_flag || check_loop_constraint(g.sources.len() as u64, &term.source.constraints))
                && (!t_flag || check_loop_constraint(g.targets.len() as u64, &term.target.constraints));
            if !ok {
                continue;
            }
            let source_slot = match key_s {
                Some(s) if !s_flag => Slot::Single(s),
                _ => Slot::Aggregated(g.sources.into_iter().collect()),
            };
            let target_slot = match key_t {
                Some(t) if !t_flag => Slot::Single(t),
                _ => Slot::Aggregated(g.targets.into_iter().collect()),
            };
            out.insert(
                Binding::new()
                    .with(&term.source.param, source_slot)
                    .with(&term.param, Slot::Aggregated(g.relations.into_iter().collect()))
                    .with(&term.target.param, target_slot),
            );
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Relation, TypeFilter};
    use crate::rules::CountOp;

    /// p1 aggregates p2 and p3 via g1, g2.
    fn processes() -> ModelDocument {
        let mut doc = ModelDocument::new();
        for id in ["p1", "p2", "p3"] {
            doc.add_entity(Entity::new(id, id.to_uppercase(), ["BusinessProcess"])).unwrap();
        }
        doc.add_relation(Relation::new("g1", "", ["AggregationRelationship", "Aggregate"], "p1", "p2"))
            .unwrap();
        doc.add_relation(Relation::new("g2", "", ["CompositionRelationship", "Aggregate"], "p1", "p3"))
            .unwrap();
        doc
    }

    fn rel(s: bool, r: bool, t: bool) -> SourceRelationship {
        let c = |on: bool| if on { vec![LoopConstraint::new(CountOp::AtLeast, 1)] } else { vec![] };
        SourceRelationship {
            param: "R".into(),
            type_filter: TypeFilter::named("Aggregate"),
            source: SourceElement {
                constraints: c(s),
                ..SourceElement::new("S", TypeFilter::named("BusinessProcess"))
            },
            target: SourceElement {
                constraints: c(t),
                ..SourceElement::new("T", TypeFilter::named("BusinessProcess"))
            },
            conditions: vec![],
            constraints: c(r),
        }
    }

    fn keys(s: &BindingSet) -> Vec<String> {
        s.iter().map(Binding::canonical_key).collect()
    }

    #[test]
    fn per_relation_iterates() {
        let doc = processes();
        let reg = MetatypeRegistry::new();
        let got = Matcher::new(&doc, &reg).eval_relationship(&rel(false, false, false)).unwrap();
        assert_eq!(keys(&got), ["R=g1;S=p1;T=p2", "R=g2;S=p1;T=p3"]);
    }

    #[test]
    fn per_source_aggregates_relations_and_targets() {
        let doc = processes();
        let reg = MetatypeRegistry::new();
        let got = Matcher::new(&doc, &reg).eval_relationship(&rel(false, true, true)).unwrap();
        assert_eq!(keys(&got), ["R=[g1,g2];S=p1;T=[p2,p3]"]);
    }

    #[test]
    fn whole_aggregates_everything() {
        let doc = processes();
        let reg = MetatypeRegistry::new();
        let got = Matcher::new(&doc, &reg).eval_relationship(&rel(true, true, true)).unwrap();
        assert_eq!(keys(&got), ["R=[g1,g2];S=[p1];T=[p2,p3]"]);
    }

    #[test]
    fn per_target_and_per_pair() {
        let doc = processes();
        let reg = MetatypeRegistry::new();
        let m = Matcher::new(&doc, &reg);
        assert_eq!(
            keys(&m.eval_relationship(&rel(true, true, false)).unwrap()),
            ["R=[g1];S=[p1];T=p2", "R=[g2];S=[p1];T=p3"]
        );
        assert_eq!(
            keys(&m.eval_relationship(&rel(false, true, false)).unwrap()),
            ["R=[g1];S=p1;T=p2", "R=[g2];S=p1;T=p3"]
        );
    }

    #[test]
    fn illegal_pattern_refused() {
        let doc = processes();
        let reg = MetatypeRegistry::new();
        assert!(Matcher::new(&doc, &reg).eval_relationship(&rel(true, false, false)).is_err());
    }

    #[test]
    fn element_iteration_and_aggregation() {
        let doc = processes();
        let reg = MetatypeRegistry::new();
        let m = Matcher::new(&doc, &reg);
        let plain = SourceElement::new("A", TypeFilter::named("BusinessProcess"));
        assert_eq!(m.eval_element(&plain).len(), 3);
        let agg = plain.clone().with_constraint(CountOp::AtLeast, 1);
        assert_eq!(keys(&m.eval_element(&agg)), ["A=[p1,p2,p3]"]);
        let none = plain.with_constraint(CountOp::MoreThan, 3);
        assert!(m.eval_element(&none).is_empty());
    }

    #[test]
    fn empty_model_yields_nothing() {
        let doc = ModelDocument::new();
        let reg = MetatypeRegistry::new();
        let got = Matcher::new(&doc, &reg).eval_element(&SourceElement::new("A", TypeFilter::named("X")));
        assert!(got.is_empty());
        assert_eq!(got.params().len(), 1);
    }

    #[test]
    fn zero_count_aggregate_on_empty_match() {
        let doc = ModelDocument::new();
        let reg = MetatypeRegistry::new();
        let term = SourceElement::new("A", TypeFilter::named("X")).with_constraint(CountOp::Exactly, 0);
        let got = Matcher::new(&doc, &reg).eval_element(&term);
        assert_eq!(keys(&got), ["A=[]"]);
    }

    #[test]
    fn loop_constraint_ranges() {
        let c = |op, n| LoopConstraint::new(op, n);
        assert!(check_loop_constraint(1, &[c(CountOp::AtLeast, 1)]));
        assert!(!check_loop_constraint(0, &[c(CountOp::AtLeast, 1)]));
        let range = [c(CountOp::MoreThan, 2), c(CountOp::AtMost, 5)];
        assert!(check_loop_constraint(4, &range));
        assert!(!check_loop_constraint(6, &range));
    }

    #[test]
    fn search_conditions() {
        let e = Entity::new("x", "Order Handling", ["T"])
            .with_attribute("owner", "EA")
            .with_tag("core")
            .with_namespace("sales");
        let cond = |accessor, op, v: &str| SearchCondition { accessor, op, value: v.into() };
        assert!(condition_holds(&cond(ConditionAccessor::Name, CompareOp::Contains, "Order"), &e));
        assert!(condition_holds(&cond(ConditionAccessor::Name, CompareOp::Matches, "Order*"), &e));
        assert!(!condition_holds(&cond(ConditionAccessor::Name, CompareOp::Eq, "Order"), &e));
        assert!(condition_holds(&cond(ConditionAccessor::Namespace, CompareOp::Eq, "sales"), &e));
        assert!(condition_holds(&cond(ConditionAccessor::Attribute("owner".into()), CompareOp::Ne, "X"), &e));
        assert!(!condition_holds(&cond(ConditionAccessor::Attribute("nope".into()), CompareOp::Ne, "X"), &e));
        assert!(condition_holds(&cond(ConditionAccessor::Tag, CompareOp::Eq, "core"), &e));
        assert!(condition_holds(&cond(ConditionAccessor::Tag, CompareOp::Ne, "edge"), &e));
    }

    #[test]
    fn conditions_shape_counted_population() {
        let doc = processes();
        let reg = MetatypeRegistry::new();
        let term = SourceElement::new("A", TypeFilter::named("BusinessProcess"))
            .with_condition(SearchCondition {
                accessor: ConditionAccessor::Name,
                op: CompareOp::Ne,
                value: "P1".into(),
            })
            .with_constraint(CountOp::Exactly, 2);
        let got = Matcher::new(&doc, &reg).eval_element(&term);
        assert_eq!(keys(&got), ["A=[p2,p3]"]);
    }
}
