use emt_core::model::{Accessor, AssignAccessor, TypeFilter, ValueExpression, ValueSegment};
use emt_core::rules::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PARAMS: [&str; 4] = ["A", "B", "x1", "Long_Name"];
const TYPES: [&str; 4] = ["BusinessActor", "Participant/Pool", "Sequence Flow", "T"];
const TEXTS: [&str; 6] = ["", "plain", "with \"quotes\"", "back\\slash", "Grüße", "a*b?"];

struct Gen(ChaCha8Rng);

impl Gen {
    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs.choose(&mut self.0).unwrap()
    }

    fn filter(&mut self) -> TypeFilter {
        if self.0.gen_bool(0.2) {
            TypeFilter::Any
        } else {
            TypeFilter::named(self.pick(&TYPES))
        }
    }

    fn condition(&mut self) -> SearchCondition {
        let accessor = match self.0.gen_range(0..4) {
            0 => ConditionAccessor::Name,
            1 => ConditionAccessor::Namespace,
            2 => ConditionAccessor::Attribute(self.pick(&TEXTS[1..]).to_owned()),
            _ => ConditionAccessor::Tag,
        };
        let op = *[CompareOp::Eq, CompareOp::Ne, CompareOp::Contains, CompareOp::Matches]
            .choose(&mut self.0)
            .unwrap();
        SearchCondition { accessor, op, value: self.pick(&TEXTS).to_owned() }
    }

    fn constraints(&mut self) -> Vec<LoopConstraint> {
        (0..self.0.gen_range(0..=2))
            .map(|_| LoopConstraint::new(*CountOp::ALL.choose(&mut self.0).unwrap(), self.0.gen_range(0..20)))
            .collect()
    }

    fn element(&mut self, constrained: bool) -> SourceElement {
        let mut e = SourceElement::new(self.pick(&PARAMS), self.filter());
        e.conditions = (0..self.0.gen_range(0..=2)).map(|_| self.condition()).collect();
        if constrained {
            e.constraints = self.constraints();
        }
        e
    }

    fn source(&mut self, depth: usize) -> SourceTerm {
        match self.0.gen_range(0..if depth == 0 { 2 } else { 3 }) {
            0 => SourceTerm::Element(self.element(true)),
            1 => SourceTerm::Relationship(SourceRelationship {
                param: self.pick(&PARAMS).to_owned(),
                type_filter: self.filter(),
                source: self.element(true),
                target: self.element(true),
                conditions: (0..self.0.gen_range(0..=1)).map(|_| self.condition()).collect(),
                constraints: self.constraints(),
            }),
            _ => SourceTerm::Group(SourceGroup {
                op: *[LogicOp::And, LogicOp::Or, LogicOp::Xor].choose(&mut self.0).unwrap(),
                children: (0..self.0.gen_range(2..=3)).map(|_| self.source(depth - 1)).collect(),
            }),
        }
    }

    fn value(&mut self) -> ValueExpression {
        let segments = (0..self.0.gen_range(1..=3))
            .map(|_| {
                if self.0.gen_bool(0.4) {
                    ValueSegment::Literal(self.pick(&TEXTS).to_owned())
                } else {
                    let accessor = match self.0.gen_range(0..5) {
                        0 => Accessor::Name,
                        1 => Accessor::Id,
                        2 => Accessor::Namespace,
                        3 => Accessor::Attribute(self.pick(&TEXTS[1..]).to_owned()),
                        _ => Accessor::Tag(self.pick(&TEXTS[1..]).to_owned()),
                    };
                    ValueSegment::Path { param: self.pick(&PARAMS).to_owned(), accessor }
                }
            })
            .collect();
        ValueExpression { segments }
    }

    fn assignments(&mut self) -> Vec<Assignment> {
        (0..self.0.gen_range(0..=2))
            .map(|_| Assignment {
                accessor: match self.0.gen_range(0..4) {
                    0 => AssignAccessor::Name,
                    1 => AssignAccessor::Namespace,
                    2 => AssignAccessor::Attribute(self.pick(&TEXTS[1..]).to_owned()),
                    _ => AssignAccessor::Tag,
                },
                value: self.value(),
            })
            .collect()
    }

    fn reference(&mut self) -> TransformationReference {
        TransformationReference {
            rule: self.pick(&["R1", "Other"]).to_owned(),
            output: self.0.gen_bool(0.3).then(|| self.pick(&PARAMS).to_owned()),
            args: (0..self.0.gen_range(0..=2))
                .map(|_| {
                    if self.0.gen_bool(0.5) {
                        RefArg::Positional(self.pick(&PARAMS).to_owned())
                    } else {
                        RefArg::Named {
                            callee: self.pick(&PARAMS).to_owned(),
                            caller: self.pick(&PARAMS).to_owned(),
                        }
                    }
                })
                .collect(),
        }
    }

    fn refs(&mut self) -> Vec<TransformationReference> {
        (0..self.0.gen_range(1..=2)).map(|_| self.reference()).collect()
    }

    fn end(&mut self) -> EndRef {
        if self.0.gen_bool(0.5) {
            EndRef::Param(self.pick(&PARAMS).to_owned())
        } else {
            EndRef::Refs(self.refs())
        }
    }

    fn target(&mut self, depth: usize) -> TargetTerm {
        match self.0.gen_range(0..if depth == 0 { 3 } else { 4 }) {
            0 => TargetTerm::Element(TargetElement {
                param: self.pick(&PARAMS).to_owned(),
                kind: if self.0.gen_bool(0.7) {
                    TargetKind::Create(self.pick(&TYPES).to_owned())
                } else {
                    TargetKind::Placeholder(self.refs())
                },
                assignments: self.assignments(),
                intermediate: self.0.gen_bool(0.2),
            }),
            1 => TargetTerm::Relation(TargetRelation {
                param: self.pick(&PARAMS).to_owned(),
                type_name: self.pick(&TYPES).to_owned(),
                source: self.end(),
                target: self.end(),
                assignments: self.assignments(),
                intermediate: self.0.gen_bool(0.2),
            }),
            2 => TargetTerm::Enrich(Enrichment { refs: self.refs(), assignments: self.assignments() }),
            _ => TargetTerm::Group((0..self.0.gen_range(2..=3)).map(|_| self.target(depth - 1)).collect()),
        }
    }

    fn rule_set(&mut self) -> RuleSet {
        let rules = (0..self.0.gen_range(1..=3))
            .map(|i| TransformationRule {
                name: format!("R{i}"),
                source: self.source(2),
                target: self.target(2),
                location: Location::default(),
            })
            .collect();
        RuleSet { name: String::new(), rules }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn print_then_parse_is_identity(seed in any::<u64>()) {
        let ast = Gen(ChaCha8Rng::seed_from_u64(seed)).rule_set();
        let text = ast.to_string();
        let back = parse_rule_set(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &ast, "{}", text);
        prop_assert_eq!(back.to_string(), text);
    }
}

#[test]
fn shipped_rule_files_print_canonically() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    for file in ["scenario/bpmn_mapping.emt", "samples/intermediates.emt", "samples/collaboration.emt"] {
        let text = std::fs::read_to_string(root.join(file)).unwrap();
        let rs = parse_rule_set(&text).unwrap();
        assert_eq!(parse_rule_set(&rs.to_string()).unwrap(), rs, "{file}");
    }
}
