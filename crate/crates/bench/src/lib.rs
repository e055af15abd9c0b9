//! Workloads shared by the benchmarks.

use emt_core::adapters::default_archimate_registry;
use emt_core::model::{Entity, MetatypeRegistry, ModelDocument, Relation};
use emt_core::rules::{parse_rule_set, RuleSet};

pub use emt_testkit::random_model;

pub const SCENARIO_RULES: &str = include_str!("../../../data/scenario/bpmn_mapping.emt");

pub fn scenario_rules() -> RuleSet {
    parse_rule_set(SCENARIO_RULES).expect("shipped rules parse")
}

/// The ArchiMate catalog plus the `Aggregate` supertype the scenario rules use.
pub fn scenario_registry() -> MetatypeRegistry {
    let mut reg = default_archimate_registry();
    reg.add_implied("AggregationRelationship", "Aggregate");
    reg.add_implied("CompositionRelationship", "Aggregate");
    reg
}

/// `parents` order processes, each aggregating `children` steps chained by
/// triggering relations, plus one actor and one role per parent.
pub fn order_model(parents: usize, children: usize, registry: &MetatypeRegistry) -> ModelDocument {
    let mut doc = ModelDocument::new();
    let typed = |t: &str| emt_core::model::resolve_metatypes([t], registry);
    for p in 0..parents {
        doc.add_entity(Entity::new(format!("actor{p}"), format!("Actor {p}"), typed("BusinessActor")))
            .unwrap();
        doc.add_entity(Entity::new(format!("role{p}"), format!("Role {p}"), typed("BusinessRole"))).unwrap();
        let parent = format!("proc{p}");
        doc.add_entity(Entity::new(parent.as_str(), format!("Process {p}"), typed("BusinessProcess")))
            .unwrap();
        for c in 0..children {
            let child = format!("proc{p}_{c}");
            doc.add_entity(Entity::new(child.as_str(), format!("Step {p}.{c}"), typed("BusinessProcess")))
                .unwrap();
            doc.add_relation(Relation::new(
                format!("agg{p}_{c}"),
                "",
                typed("Aggregation"),
                parent.as_str(),
                child.as_str(),
            ))
            .unwrap();
            if c > 0 {
                let prev = format!("proc{p}_{}", c - 1);
                doc.add_relation(Relation::new(
                    format!("trig{p}_{c}"),
                    "",
                    typed("Triggering"),
                    prev,
                    child.as_str(),
                ))
                .unwrap();
            }
        }
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use emt_core::transform::run_transformation;

    #[test]
    fn scaled_scenario_counts() {
        let reg = scenario_registry();
        let model = order_model(3, 4, &reg);
        let out = run_transformation(&scenario_rules(), &model, &reg).unwrap();
        let count = |t: &str| out.target.entities().filter(|e| e.has_type(t)).count();
        assert_eq!(count("Participant/Pool"), 6);
        assert_eq!(count("SubProcess"), 3);
        assert_eq!(count("Task"), 12);
        assert_eq!(out.target.relations().filter(|r| r.has_type("Sequence Flow")).count(), 9);
    }
}
