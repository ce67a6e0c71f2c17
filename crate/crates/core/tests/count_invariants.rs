mod common;

use std::collections::{BTreeMap, BTreeSet};

use caption_core::config::Config;
use caption_core::counts::{CountStore, IndexKind, PairKey};
use caption_core::lexicon::SynsetId;
use proptest::prelude::*;

use common::{fixture_model, AncestorOracle};

const RULES: [&str; 3] = ["np-adj", "pp-attach/location", "s-vp"];

type Op = (usize, usize, usize, u64);

fn expected_pairs(oracle: &AncestorOracle, senses: &[SynsetId], ops: &[Op]) -> BTreeMap<(String, String, String), u64> {
    let mut want = BTreeMap::new();
    for &(r, h, d, delta) in ops {
        for gh in oracle.closure(senses[h].as_str()) {
            for gd in oracle.closure(senses[d].as_str()) {
                *want.entry((RULES[r].to_string(), gh.clone(), gd)).or_insert(0) += delta;
            }
        }
    }
    want
}

fn check_indexes(store: &CountStore) {
    let all: BTreeSet<PairKey> = store.pairs().map(|(k, _)| k.clone()).collect();
    for kind in IndexKind::ALL {
        assert_eq!(store.index_keys(kind), all, "{kind:?} index covers exactly the stored pairs");
        for key in &all {
            let probe = match kind {
                IndexKind::First => key.first.lemma(),
                IndexKind::FirstSense => key.first.as_str(),
                IndexKind::Second => key.second.lemma(),
                IndexKind::SecondSense => key.second.as_str(),
            };
            let hits = store.lookup_by(kind, probe);
            assert!(hits.iter().any(|(k, c)| k == key && Some(*c) == store.pair_count(key)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_counts_match_ancestor_cross_product(
        ops in prop::collection::vec((0..RULES.len(), 0usize..1000, 0usize..1000, 1u64..4), 1..40)
    ) {
        let model = fixture_model();
        let senses: Vec<SynsetId> = model.lexicon.synsets().cloned().collect();
        let ops: Vec<Op> = ops.into_iter().map(|(r, h, d, n)| (r, h % senses.len(), d % senses.len(), n)).collect();
        let cfg = Config::default();
        let mut store = CountStore::new();
        for &(r, h, d, n) in &ops {
            store.increment_pair(&model.lexicon, &cfg, RULES[r], &senses[h], &senses[d], n).unwrap();
        }
        let oracle = AncestorOracle::from_fixture();
        let want = expected_pairs(&oracle, &senses, &ops);
        let got: BTreeMap<(String, String, String), u64> = store
            .pairs()
            .map(|(k, c)| ((k.rule.to_string(), k.first.to_string(), k.second.to_string()), c))
            .collect();
        prop_assert_eq!(got, want);
        prop_assert_eq!(store.total_instances(), 0);
        check_indexes(&store);
    }

    #[test]
    fn superconcept_counts_dominate(
        ops in prop::collection::vec((0..RULES.len(), 0usize..1000, 0usize..1000, 1u64..4), 1..40)
    ) {
        let model = fixture_model();
        let senses: Vec<SynsetId> = model.lexicon.synsets().cloned().collect();
        let cfg = Config::default();
        let mut store = CountStore::new();
        for (r, h, d, n) in ops {
            let (h, d) = (&senses[h % senses.len()], &senses[d % senses.len()]);
            store.increment_pair(&model.lexicon, &cfg, RULES[r], h, d, n).unwrap();
        }
        for (key, count) in store.pairs() {
            for sup in model.lexicon.superconcepts(&key.first).unwrap() {
                let k = PairKey::new(&key.rule, sup, key.second.clone());
                prop_assert!(store.pair_count(&k).unwrap_or(0) >= count);
            }
            for sup in model.lexicon.superconcepts(&key.second).unwrap() {
                let k = PairKey::new(&key.rule, key.first.clone(), sup);
                prop_assert!(store.pair_count(&k).unwrap_or(0) >= count);
            }
        }
    }

    #[test]
    fn unary_counts_follow_leaf_increments(
        ops in prop::collection::vec((0usize..1000, 1u64..5), 1..60)
    ) {
        let model = fixture_model();
        let senses: Vec<SynsetId> = model.lexicon.synsets().cloned().collect();
        let cfg = Config::default();
        let oracle = AncestorOracle::from_fixture();
        let mut store = CountStore::new();
        let mut want: BTreeMap<String, u64> = BTreeMap::new();
        for (s, n) in &ops {
            let s = &senses[s % senses.len()];
            store.increment_unary(&model.lexicon, &cfg, s, *n).unwrap();
            for g in oracle.closure(s.as_str()) {
                *want.entry(g).or_insert(0) += n;
            }
        }
        let got: BTreeMap<String, u64> = store.unary_counts().map(|(s, c)| (s.to_string(), c)).collect();
        prop_assert_eq!(got, want);
        prop_assert_eq!(store.total_instances(), ops.iter().map(|(_, n)| n).sum::<u64>());
        prop_assert!(store.is_empty());
    }

    #[test]
    fn text_form_round_trips(
        ops in prop::collection::vec((0..RULES.len(), 0usize..1000, 0usize..1000, 1u64..4), 0..20)
    ) {
        let model = fixture_model();
        let senses: Vec<SynsetId> = model.lexicon.synsets().cloned().collect();
        let cfg = Config::default();
        let mut store = CountStore::new();
        for (r, h, d, n) in ops {
            let (h, d) = (&senses[h % senses.len()], &senses[d % senses.len()]);
            store.increment_pair(&model.lexicon, &cfg, RULES[r], h, d, n).unwrap();
            store.increment_unary(&model.lexicon, &cfg, h, n).unwrap();
        }
        let back = CountStore::load(&store.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), store.to_text());
        check_indexes(&back);
    }
}

#[test]
fn removing_pairs_keeps_indexes_in_step() {
    let model = fixture_model();
    let cfg = Config::default();
    let mut store = CountStore::new();
    let (f18, mount) = (SynsetId::from("f-18-1"), SynsetId::from("mount-1"));
    store.increment_pair(&model.lexicon, &cfg, "s-vp", &mount, &f18, 2).unwrap();
    let keys: Vec<PairKey> = store.pairs().map(|(k, _)| k.clone()).collect();
    for k in keys.iter().step_by(2) {
        store.set_pair(k.clone(), 0);
    }
    check_indexes(&store);
    assert!(store.lookup_by(IndexKind::SecondSense, "f-18-1").len() < keys.len());
}
