use std::collections::BTreeSet;
use std::path::Path;

use emt_core::model::{Entity, MetatypeRegistry, ModelDocument};
use emt_core::rules::{dependency_graph, parse_rule_set, validate_rule_set, DiagnosticKind};
use emt_core::transform::{Engine, EngineError};
use emt_testkit::{brute_force_cycles, random_edges, rule_text_for_graph};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn cycles_match_exhaustive_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=6);
        let mut edges = random_edges(&mut rng, n, 0.25);
        if rng.gen_bool(0.2) {
            let v = rng.gen_range(0..n);
            edges.push((v, v));
        }
        let rs = parse_rule_set(&rule_text_for_graph(n, &edges)).unwrap();
        let graph = dependency_graph(&rs);
        let want_edges: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
        prop_assert_eq!(graph.edges.iter().copied().collect::<BTreeSet<_>>(), want_edges);

        let index = |name: &String| name[1..].parse::<usize>().unwrap();
        let got: Vec<Vec<usize>> = graph.cycles().iter().map(|c| c.iter().map(index).collect()).collect();
        let got_set: BTreeSet<Vec<usize>> = got.iter().cloned().collect();
        prop_assert_eq!(got.len(), got_set.len(), "a cycle was reported twice");
        prop_assert_eq!(&got_set, &brute_force_cycles(n, &edges));

        let diags = validate_rule_set(&rs);
        let cycle_diags: Vec<&Vec<String>> = diags
            .iter()
            .filter_map(|d| match &d.kind {
                DiagnosticKind::ReferenceCycle { rules } => Some(rules),
                _ => None,
            })
            .collect();
        prop_assert_eq!(cycle_diags.len(), diags.len(), "{:?}", diags);
        prop_assert_eq!(cycle_diags.is_empty(), got_set.is_empty());
    }
}

#[test]
fn two_rule_cycle_is_rejected_before_execution() {
    let rs = parse_rule_set(
        "rule(Ping: element(A: T) -> group(element(B: U), element(X: * <- ref(Pong, A))))\n\
         rule(Pong: element(A: T) -> group(element(B: U), element(X: * <- ref(Ping, A))))",
    )
    .unwrap();
    let diags = validate_rule_set(&rs);
    let cycle = diags
        .iter()
        .find_map(|d| match &d.kind {
            DiagnosticKind::ReferenceCycle { rules } => Some((rules.clone(), d.message.clone())),
            _ => None,
        })
        .expect("cycle diagnostic");
    assert_eq!(cycle.0, ["Ping", "Pong"]);
    assert!(cycle.1.contains("Ping") && cycle.1.contains("Pong"), "{}", cycle.1);

    let mut model = ModelDocument::new();
    model.add_entity(Entity::new("e1", "x", ["T"])).unwrap();
    let registry = MetatypeRegistry::new();
    match Engine::new(&rs, &model, &registry) {
        Err(EngineError::Invalid(d)) => assert!(!d.is_empty()),
        Err(other) => panic!("unexpected error {other}"),
        Ok(_) => panic!("cyclic rule set accepted"),
    }
}

#[test]
fn scenario_corpus_edges() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/scenario/bpmn_mapping.emt");
    let rs = parse_rule_set(&std::fs::read_to_string(path).unwrap()).unwrap();
    let graph = dependency_graph(&rs);
    let edges: BTreeSet<(&str, &str)> = graph.edge_names().into_iter().collect();
    assert_eq!(edges, BTreeSet::from([("R3", "R2"), ("R4", "R2"), ("R4", "R3")]));
    assert!(graph.cycles().is_empty());
    assert!(validate_rule_set(&rs).is_empty());
}

#[test]
fn single_rule_has_no_edges() {
    let rs = parse_rule_set("rule(Only: element(A: T) -> element(B: U))").unwrap();
    assert!(dependency_graph(&rs).edges.is_empty());
}
