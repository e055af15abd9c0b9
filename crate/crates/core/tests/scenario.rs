use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use emt_core::adapters::{effective_registry, load_archimate, load_bpmn, load_registry, save_bpmn, Format};
use emt_core::matching::Matcher;
use emt_core::model::{Entity, MetatypeRegistry, ModelDocument, ObjectId, Relation};
use emt_core::rules::{parse_rule_set, RuleSet};
use emt_core::transform::{
    run_single_rule, run_transformation, trace_lookup, ExecutionLedger, TransformOutcome,
};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

struct Scenario {
    rules: RuleSet,
    source: ModelDocument,
    registry: MetatypeRegistry,
}

fn scenario() -> Scenario {
    let user = load_registry(&std::fs::read(data("scenario/aggregate_registry.json")).unwrap()).unwrap();
    let registry = effective_registry(Format::Archimate, Some(&user)).unwrap();
    let loaded =
        load_archimate(&std::fs::read(data("scenario/order_process.xml")).unwrap(), &registry).unwrap();
    assert!(loaded.warnings.is_empty(), "{:?}", loaded.warnings);
    let rules = parse_rule_set(&std::fs::read_to_string(data("scenario/bpmn_mapping.emt")).unwrap()).unwrap();
    Scenario { rules, source: loaded.model, registry }
}

fn run(s: &Scenario) -> TransformOutcome {
    run_transformation(&s.rules, &s.source, &s.registry).unwrap()
}

fn of_type<'m>(m: &'m ModelDocument, t: &str) -> Vec<&'m Entity> {
    m.entities().filter(|e| e.has_type(t)).collect()
}

fn relations_of<'m>(m: &'m ModelDocument, t: &str) -> Vec<&'m Relation> {
    m.relations().filter(|r| r.has_type(t)).collect()
}

fn named<'m>(m: &'m ModelDocument, t: &str, name: &str) -> &'m Entity {
    of_type(m, t).into_iter().find(|e| e.name == name).unwrap()
}

#[test]
fn order_process_becomes_pools_subprocess_and_tasks() {
    let s = scenario();
    let started = Instant::now();
    let out = run(&s);
    let bytes = save_bpmn(&out.target).unwrap();
    let elapsed = started.elapsed();
    let t = &out.target;

    let pools: BTreeSet<&str> = of_type(t, "Participant/Pool").iter().map(|e| e.name.as_str()).collect();
    assert_eq!(pools, BTreeSet::from(["Customer", "Clerk"]));
    let subs = of_type(t, "SubProcess");
    assert_eq!(subs.len(), 1);
    assert_eq!(subs[0].name, "Order Handling");
    let tasks: BTreeSet<&str> = of_type(t, "Task").iter().map(|e| e.name.as_str()).collect();
    assert_eq!(tasks, BTreeSet::from(["Check Credit", "Ship Goods"]));

    let nested = relations_of(t, "Nested Element");
    assert_eq!(nested.len(), 2);
    assert!(nested.iter().all(|r| r.target == subs[0].id));
    let flows = relations_of(t, "Sequence Flow");
    assert_eq!(flows.len(), 1);
    assert_eq!(flows[0].source, named(t, "Task", "Check Credit").id);
    assert_eq!(flows[0].target, named(t, "Task", "Ship Goods").id);

    assert_eq!(t.len(), 8);
    assert_eq!(out.stats.to_string(), "4 rules, 8 objects created, 0 intermediates");
    assert!(out.warnings.is_empty());
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");

    // The written file keeps the tasks inside the sub-process.
    let back = load_bpmn(&bytes).unwrap();
    let sub = named(&back, "SubProcess", "Order Handling");
    for task in of_type(&back, "Task") {
        assert!(back
            .relations()
            .any(|r| r.has_type("Nested Element") && r.source == task.id && r.target == sub.id));
    }
    let xml = String::from_utf8(bytes).unwrap();
    let sub_open = xml.find("<subProcess").unwrap();
    let sub_close = xml.find("</subProcess>").unwrap();
    for name in ["Check Credit", "Ship Goods"] {
        let at = xml.find(&format!("name=\"{name}\"")).unwrap();
        assert!(sub_open < at && at < sub_close, "{name} outside the sub-process");
    }
}

#[test]
fn every_target_object_traces_to_one_creator() {
    let s = scenario();
    let out = run(&s);
    let ledger = ExecutionLedger::from_json(&out.ledger.to_json()).unwrap();
    let ids: Vec<ObjectId> = out
        .target
        .entities()
        .map(|e| e.id.clone())
        .chain(out.target.relations().map(|r| r.id().clone()))
        .collect();
    for id in &ids {
        let trace = trace_lookup(&ledger, id).unwrap();
        assert!(!trace.removed);
        let creators: Vec<_> = ledger.provenance_entries().filter(|(pid, _)| *pid == id).collect();
        assert_eq!(creators.len(), 1);
        assert_eq!(trace.rule(), creators[0].1.rule);
    }
    assert_eq!(ledger.provenance_entries().count(), ids.len());

    let sub = &of_type(&out.target, "SubProcess")[0].id;
    let trace = trace_lookup(&ledger, sub).unwrap();
    assert_eq!(trace.rule(), "R2");
    assert!(trace.sources().contains(&ObjectId::from("order-handling")));

    let flow = relations_of(&out.target, "Sequence Flow")[0].id().clone();
    let trace = trace_lookup(&ledger, &flow).unwrap();
    assert_eq!(trace.rule(), "R4");
    // R4 places its flow between R3 tasks; each task execution nests through R2.
    let steps: BTreeSet<(usize, &str)> = trace.chain.iter().map(|s| (s.depth, s.rule.as_str())).collect();
    assert_eq!(steps, BTreeSet::from([(0, "R4"), (1, "R3"), (2, "R2")]));
    assert!(trace.sources().contains(&ObjectId::from("trigger-ship")));

    assert!(trace_lookup(&ledger, &ObjectId::from("nope")).is_err());
}

#[test]
fn replaying_is_deterministic_and_fires_each_binding_once() {
    let s = scenario();
    let runs: Vec<(Vec<u8>, String)> = (0..3)
        .map(|_| {
            let out = run(&s);
            (save_bpmn(&out.target).unwrap(), out.ledger.to_json())
        })
        .collect();
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
    let ledger = run(&s).ledger;
    for table in ledger.rules() {
        let keys: BTreeSet<&str> = table.records.iter().map(|r| r.key.as_str()).collect();
        assert_eq!(keys.len(), table.records.len(), "{} fired twice for a binding", table.name);
    }
}

#[test]
fn single_rule_runs() {
    let s = scenario();
    let r3 = run_single_rule(&s.rules, &s.source, &s.registry, "R3").unwrap();
    assert_eq!(of_type(&r3.target, "Task").len(), 2);
    assert_eq!(relations_of(&r3.target, "Nested Element").len(), 2);
    assert_eq!(of_type(&r3.target, "SubProcess").len(), 1);
    assert_eq!(r3.ledger.records_of("R2").len(), 1);
    assert!(r3.ledger.records_of("R1").is_empty());

    let r1 = run_single_rule(&s.rules, &s.source, &s.registry, "R1").unwrap();
    assert_eq!(r1.target.len(), 2);
    assert_eq!(of_type(&r1.target, "Participant/Pool").len(), 2);
}

#[test]
fn empty_source_gives_empty_target() {
    let s = scenario();
    let out = run_transformation(&s.rules, &ModelDocument::new(), &s.registry).unwrap();
    assert!(out.target.is_empty());
    assert_eq!(out.ledger.total_records(), 0);
}

#[test]
fn intermediate_variable_is_consumed_then_dropped() {
    let rules = parse_rule_set(&std::fs::read_to_string(data("samples/intermediates.emt")).unwrap()).unwrap();
    let mut source = ModelDocument::new();
    source
        .add_entity(Entity::new("p1", "Check Credit", ["BusinessProcess"]).with_attribute("owner", "Sales"))
        .unwrap();
    let registry = MetatypeRegistry::new();
    let out = run_transformation(&rules, &source, &registry).unwrap();
    let tasks = of_type(&out.target, "Task");
    assert_eq!(out.target.len(), 1);
    assert_eq!(tasks[0].name, "Check Credit (Sales)");
    assert!(of_type(&out.target, "Variable").is_empty());
    assert_eq!(out.stats.intermediates_removed, 1);

    let (var, prov) = out.ledger.provenance_entries().find(|(_, p)| p.rule == "Var").unwrap();
    assert!(prov.removed);
    assert!(!out.target.contains(var));
    let trace = trace_lookup(&out.ledger, var).unwrap();
    assert!(trace.removed);
    assert_eq!(trace.enriched_by.len(), 1);
}

fn process_model(rng: &mut ChaCha8Rng) -> ModelDocument {
    let mut doc = ModelDocument::new();
    let n = rng.gen_range(0..8);
    for i in 0..n {
        let ty = if rng.gen_bool(0.85) { "BusinessProcess" } else { "BusinessActor" };
        doc.add_entity(Entity::new(format!("p{i}"), format!("P{i}"), [ty])).unwrap();
    }
    if n > 0 {
        for j in 0..rng.gen_range(0..8) {
            let ty = if rng.gen_bool(0.7) { "Aggregate" } else { "Triggering" };
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            doc.add_relation(Relation::new(format!("r{j}"), "", [ty], format!("p{a}"), format!("p{b}")))
                .unwrap();
        }
    }
    doc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    /// Every process is turned into either a sub-process (rule 2) or a task
    /// (rule 3), never both.
    #[test]
    fn sub_process_and_task_rules_partition_processes(seed in any::<u64>()) {
        let s = scenario();
        let model = process_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let registry = MetatypeRegistry::new();
        let m = Matcher::new(&model, &registry);
        let ids = |rule: &str, param: &str| -> BTreeSet<ObjectId> {
            m.eval(&s.rules.rule(rule).unwrap().source)
                .unwrap()
                .iter()
                .flat_map(|b| b.get(param).unwrap().ids().to_vec())
                .collect()
        };
        let parents = ids("R2", "S");
        let leaves = ids("R3", "A");
        prop_assert!(parents.is_disjoint(&leaves));
        let processes: BTreeSet<ObjectId> =
            model.entities().filter(|e| e.has_type("BusinessProcess")).map(|e| e.id.clone()).collect();
        prop_assert_eq!(parents.union(&leaves).cloned().collect::<BTreeSet<_>>(), processes);

        let out = run_transformation(&s.rules, &model, &registry).unwrap();
        let r2: BTreeSet<&str> = out.ledger.records_of("R2").iter().map(|r| r.key.as_str()).collect();
        prop_assert_eq!(r2.len(), parents.len());
    }
}
