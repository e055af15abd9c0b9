use emt_core::adapters::{load_bpmn, load_generic, save_bpmn, save_generic};
use emt_core::model::ModelDocument;
use emt_testkit::{random_bpmn, random_generic};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn generic_round_trip_is_lossless(seed in any::<u64>()) {
        let doc = random_generic(&mut ChaCha8Rng::seed_from_u64(seed));
        let bytes = save_generic(&doc);
        let back = load_generic(&bytes).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(save_generic(&back), bytes);
    }

    #[test]
    fn bpmn_second_save_equals_first(seed in any::<u64>()) {
        let doc = random_bpmn(&mut ChaCha8Rng::seed_from_u64(seed));
        let first = save_bpmn(&doc).unwrap();
        let back = load_bpmn(&first).unwrap();
        let second = save_bpmn(&back).unwrap();
        prop_assert_eq!(String::from_utf8(second).unwrap(), String::from_utf8(first).unwrap());
        for e in doc.entities().filter(|e| !e.has_type("Process")) {
            let b = back.entity(&e.id);
            prop_assert!(b.is_some(), "{} lost", e.id);
            prop_assert_eq!(&b.unwrap().name, &e.name);
        }
        for r in doc.relations().filter(|r| r.has_type("Sequence Flow")) {
            let b = back.relation(r.id()).unwrap();
            prop_assert_eq!((&b.source, &b.target), (&r.source, &r.target));
        }
    }
}

#[test]
fn empty_documents() {
    let empty = ModelDocument::new();
    assert_eq!(load_generic(&save_generic(&empty)).unwrap(), empty);
    assert_eq!(load_generic(br#"{"entities": [], "relations": []}"#).unwrap(), empty);
    let bpmn = save_bpmn(&empty).unwrap();
    assert!(load_bpmn(&bpmn).unwrap().is_empty());
}
