use emt_core::matching::{combine, combine_all, BindingSet};
use emt_core::rules::LogicOp;
use emt_testkit::{flat_join, flat_union, oracle_combine, random_binding_set};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const UNIVERSE: [&str; 4] = ["a", "b", "c", "d"];
const PARAM_SHAPES: [&[&str]; 5] = [&["X"], &["X", "Y"], &["Y"], &["Y", "Z"], &["Z"]];

fn random_pair(rng: &mut ChaCha8Rng, partial: bool) -> (BindingSet, BindingSet) {
    let lp = PARAM_SHAPES[rng.gen_range(0..PARAM_SHAPES.len())];
    let rp = PARAM_SHAPES[rng.gen_range(0..PARAM_SHAPES.len())];
    (random_binding_set(rng, lp, &UNIVERSE, 6, partial), random_binding_set(rng, rp, &UNIVERSE, 6, partial))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn pairwise_combination_matches_set_reference(seed in any::<u64>(), partial in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l, r) = random_pair(&mut rng, partial);
        for op in [LogicOp::And, LogicOp::Or, LogicOp::Xor] {
            prop_assert_eq!(combine(op, &l, &r), oracle_combine(op, &l, &r), "{:?}", op);
        }
    }

    #[test]
    fn algebraic_identities(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = PARAM_SHAPES[rng.gen_range(0..PARAM_SHAPES.len())];
        let s = random_binding_set(&mut rng, params, &UNIVERSE, 8, false);
        let empty = BindingSet::new(params.iter().copied());
        prop_assert_eq!(combine(LogicOp::And, &s, &s), s.clone());
        prop_assert_eq!(combine(LogicOp::Or, &s, &empty), s.clone());
        prop_assert_eq!(combine(LogicOp::Or, &empty, &s), s.clone());
        prop_assert!(combine(LogicOp::Xor, &s, &s).is_empty());
    }

    #[test]
    fn n_ary_and_or_match_flat_references(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=4);
        let operands: Vec<BindingSet> = (0..n)
            .map(|_| {
                let p = PARAM_SHAPES[rng.gen_range(0..PARAM_SHAPES.len())];
                random_binding_set(&mut rng, p, &UNIVERSE, 5, false)
            })
            .collect();
        let and = combine_all(LogicOp::And, operands.iter().cloned()).unwrap();
        prop_assert_eq!(and, flat_join(&operands));
        let or = combine_all(LogicOp::Or, operands.iter().cloned()).unwrap();
        prop_assert_eq!(or, flat_union(&operands));
    }

    #[test]
    fn and_or_are_commutative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l, r) = random_pair(&mut rng, false);
        prop_assert_eq!(combine(LogicOp::And, &l, &r), combine(LogicOp::And, &r, &l));
        prop_assert_eq!(combine(LogicOp::Or, &l, &r), combine(LogicOp::Or, &r, &l));
        prop_assert_eq!(combine(LogicOp::Xor, &l, &r), combine(LogicOp::Xor, &r, &l));
    }
}
