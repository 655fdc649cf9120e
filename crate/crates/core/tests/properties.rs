mod common;

use std::collections::{BTreeSet, HashSet};

use catalog_core::evaluation::{average_precision, evaluate, Verdict};
use catalog_core::matching::{
    assignment_cost, foreign_key_match, group_components, match_records, matching_degree,
    solve_assignment, ForeignKeyConfig, Layout,
};
use catalog_core::model::{AttributeRecord, MatchStage, ParseStatus};
use catalog_core::Execution;
use indexmap::IndexMap;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cost_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(n, m)| {
        prop::collection::vec(prop::collection::vec(0.0f64..=100.0, m), n)
    })
}

fn fk_record(id: &str, fig: &str, item: &str) -> AttributeRecord {
    let mut attributes = IndexMap::new();
    attributes.insert("catalog_figure_no".to_string(), fig.to_string());
    attributes.insert("item_index".to_string(), item.to_string());
    AttributeRecord {
        block_id: id.into(),
        attributes,
        parse_status: ParseStatus::Ok,
        warnings: vec![],
    }
}

fn small_value() -> impl Strategy<Value = String> {
    prop_oneof![Just(String::new()), "[ab]", "[ab][ab]"]
}

fn verdicts() -> impl Strategy<Value = (Vec<Verdict>, usize)> {
    prop::collection::vec(prop::bool::ANY, 0..40).prop_flat_map(|bits| {
        let v: Vec<Verdict> = bits.iter().map(|b| if *b { Verdict::Tp } else { Verdict::Fp }).collect();
        let tp = bits.iter().filter(|b| **b).count();
        (Just(v), tp..=tp + 5)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn assignment_matches_exhaustive_minimum(costs in cost_matrix()) {
        let pairs = solve_assignment(&costs).unwrap();
        let n = costs.len();
        let m = costs[0].len();
        prop_assert_eq!(pairs.len(), n.min(m));
        let rows: HashSet<_> = pairs.iter().map(|p| p.0).collect();
        let cols: HashSet<_> = pairs.iter().map(|p| p.1).collect();
        prop_assert_eq!(rows.len(), pairs.len());
        prop_assert_eq!(cols.len(), pairs.len());
        prop_assert_eq!(assignment_cost(&costs, &pairs), common::oracle::brute_force_min_cost(&costs));
    }

    #[test]
    fn average_precision_matches_envelope_oracle((v, n_gt) in verdicts()) {
        let curve = average_precision(&v, n_gt);
        prop_assert_eq!(curve.ap, common::oracle::envelope_ap(&v, n_gt));
        prop_assert!((0.0..=1.0).contains(&curve.ap));
        for w in curve.points.windows(2) {
            prop_assert!(w[0].recall <= w[1].recall);
        }
    }

    #[test]
    fn perfect_rankings_score_one(n in 1usize..30) {
        prop_assert_eq!(average_precision(&vec![Verdict::Tp; n], n).ap, 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn matching_degree_law(
        (f1, i1, f2, i2) in (small_value(), small_value(), small_value(), small_value())
    ) {
        let cfg = ForeignKeyConfig::default();
        let a = fk_record("a", &f1, &i1);
        let b = fk_record("b", &f2, &i2);
        let ab = matching_degree(&a, &b, &cfg);
        prop_assert_eq!(ab, matching_degree(&b, &a, &cfg));
        prop_assert!((0.0..=1.0).contains(&ab));
        let set = |f: &str, i: &str| -> BTreeSet<String> {
            [f, i].iter().filter(|s| !s.is_empty()).map(|s| s.to_string()).collect()
        };
        let (sa, sb) = (set(&f1, &i1), set(&f2, &i2));
        prop_assert_eq!(ab == 1.0, sa == sb && !sa.is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matching_partitions_pairs_by_stage(seed in any::<u64>()) {
        let cat = common::synth::catalog(&mut ChaCha8Rng::seed_from_u64(seed));
        let cfg = ForeignKeyConfig::default();
        let layout = Layout::new(&cat.blocks, &cat.pages);
        let outcome = match_records(&cat.images, &cat.texts, &layout, &cfg, Execution::Sequential).unwrap();
        let components = group_components(&foreign_key_match(&cat.images, &cat.texts, &cfg));
        let id_pair = |(i, j): (usize, usize)| (cat.images[i].block_id.clone(), cat.texts[j].block_id.clone());
        let fk: HashSet<_> = components.one_to_one.iter().copied().map(id_pair).collect();

        let mut seen = HashSet::new();
        for p in &outcome.pairs {
            prop_assert!(seen.insert(p.image_block_id.clone()));
            prop_assert!(seen.insert(p.text_block_id.clone()));
            let key = (p.image_block_id.clone(), p.text_block_id.clone());
            let in_groups = components
                .groups
                .iter()
                .filter(|g| g.pairs.iter().copied().map(id_pair).any(|q| q == key)
                    || (g.images.iter().any(|&i| cat.images[i].block_id == key.0)
                        && g.texts.iter().any(|&j| cat.texts[j].block_id == key.1)))
                .count();
            match p.stage {
                MatchStage::ForeignKey => {
                    prop_assert!(fk.contains(&key));
                    prop_assert_eq!(in_groups, 0);
                }
                MatchStage::Bipartite => {
                    prop_assert!(!fk.contains(&key));
                    prop_assert_eq!(in_groups, 1);
                }
                MatchStage::Human => prop_assert!(false, "harvest never emits human pairs"),
            }
        }
        let fk_only = outcome.pairs.iter().filter(|p| p.stage == MatchStage::ForeignKey).count();
        prop_assert_eq!(fk_only, components.one_to_one.len());
        if !components.groups.is_empty() {
            prop_assert!(outcome.pairs.len() > fk_only);
        }
    }

    #[test]
    fn matching_is_deterministic_across_execution_modes(seed in any::<u64>()) {
        let cat = common::synth::catalog(&mut ChaCha8Rng::seed_from_u64(seed));
        let cfg = ForeignKeyConfig::default();
        let layout = Layout::new(&cat.blocks, &cat.pages);
        let a = match_records(&cat.images, &cat.texts, &layout, &cfg, Execution::Sequential).unwrap();
        let b = match_records(&cat.images, &cat.texts, &layout, &cfg, Execution::Parallel).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Shuffling predictions that tie on confidence leaves AP unchanged.
    #[test]
    fn equal_confidence_permutation_keeps_ap(perm in Just((0..8usize).collect::<Vec<_>>()).prop_shuffle()) {
        let gt = common::eval_entries(&[0, 2, 4, 6]);
        let preds_sorted = common::eval_predictions(8);
        let preds: Vec<_> = perm.iter().map(|&i| preds_sorted[i].clone()).collect();
        let cfg = catalog_core::evaluation::EvalConfig::default();
        prop_assert_eq!(
            evaluate(&preds, &gt, &cfg).unwrap(),
            evaluate(&preds_sorted, &gt, &cfg).unwrap()
        );
    }
}
