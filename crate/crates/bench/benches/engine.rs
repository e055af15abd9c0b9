use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use emt_bench::{order_model, random_model, scenario_registry, scenario_rules};
use emt_core::matching::{combine, BindingSet, Matcher};
use emt_core::model::{MetatypeRegistry, TypeFilter};
use emt_core::rules::{CountOp, LogicOp, SourceElement, SourceRelationship};
use emt_core::transform::run_transformation;
use emt_testkit::random_binding_set;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn transform(c: &mut Criterion) {
    let rules = scenario_rules();
    let registry = scenario_registry();
    let mut group = c.benchmark_group("scenario_transform");
    for parents in [1, 10, 100] {
        let model = order_model(parents, 5, &registry);
        group.bench_with_input(BenchmarkId::from_parameter(parents), &model, |b, m| {
            b.iter(|| run_transformation(&rules, black_box(m), &registry).unwrap())
        });
    }
    group.finish();
}

fn relationship(c: &mut Criterion) {
    let registry = MetatypeRegistry::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let model = random_model(&mut rng, 200, 2000);
    let mut group = c.benchmark_group("eval_relationship");
    for (label, s, r, t) in [
        ("per_relation", false, false, false),
        ("per_source", false, true, true),
        ("whole", true, true, true),
    ] {
        let end = |p: &str, on: bool| {
            let e = SourceElement::new(p, TypeFilter::named("A"));
            if on {
                e.with_constraint(CountOp::AtLeast, 1)
            } else {
                e
            }
        };
        let term = SourceRelationship {
            param: "R".into(),
            type_filter: TypeFilter::named("R"),
            source: end("S", s),
            target: end("T", t),
            conditions: Vec::new(),
            constraints: if r {
                vec![emt_core::rules::LoopConstraint::new(CountOp::AtLeast, 1)]
            } else {
                Vec::new()
            },
        };
        group.bench_function(label, |b| {
            b.iter(|| Matcher::new(&model, &registry).eval_relationship(black_box(&term)).unwrap())
        });
    }
    group.finish();
}

fn logic(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let universe: Vec<String> = (0..50).map(|i| format!("o{i}")).collect();
    let u: Vec<&str> = universe.iter().map(String::as_str).collect();
    let l: BindingSet = random_binding_set(&mut rng, &["X", "Y"], &u, 500, false);
    let r: BindingSet = random_binding_set(&mut rng, &["Y", "Z"], &u, 500, false);
    let mut group = c.benchmark_group("combine");
    for op in [LogicOp::And, LogicOp::Or, LogicOp::Xor] {
        group.bench_function(format!("{op:?}"), |b| b.iter(|| combine(op, black_box(&l), black_box(&r))));
    }
    group.finish();
}

criterion_group!(benches, transform, relationship, logic);
criterion_main!(benches);
