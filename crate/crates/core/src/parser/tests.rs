use proptest::prelude::*;

use super::*;
use crate::config::Config;
use crate::counts::{CountStore, PairKey};
use crate::grammar::Grammar;
use crate::lexicon::tests::{FMT, HIER, LEX};
use crate::lexicon::Lexicon;

pub(crate) const GRAMMAR: &str = "\
start=NP
relations=participle-mod,modification,prep-attach,marker
NP -> noun count=10
NP -> code count=1
NP -> NP PARTICIPLEPHRASE head=1 rel=participle-mod count=5
NP -> ADJECTIVE GERUND head=2 rel=modification count=5
NP -> ADJECTIVE NP head=2 rel=modification count=3
NP -> NP PP head=1 rel=prep-attach count=4
PP -> preposition NP head=2 rel=marker count=1
ADJECTIVE -> noun count=1
ADJECTIVE -> adjective count=3
GERUND -> gerund
PARTICIPLEPHRASE -> participle
";

pub(crate) fn model_with(counts: CountStore) -> Model {
    let lex = format!("{LEX}sense\tground\tnoun\tground-1\t5\nsense\tsand\tnoun\tsand-1\t9\n");
    let lexicon = Lexicon::load(&lex, HIER, FMT).unwrap();
    let config = Config {
        unknown_roots: vec!["weapon-1".into(), "vehicle-1".into()],
        ..Config::default()
    };
    Model::new(lexicon, Grammar::load(GRAMMAR).unwrap(), counts, config).unwrap()
}

pub(crate) fn analyze(model: &Model, text: &str) -> Vec<TokenAnalysis> {
    analyze_tokens(model, &model.lexicon.tokenize(text))
}

fn id(s: &str) -> SynsetId {
    SynsetId::from(s)
}

fn landing_counts() -> CountStore {
    let mut c = CountStore::new();
    c.set_pair(PairKey::new("NP->NP+PARTICIPLEPHRASE", id("aircraft-1"), id("land-2")), 230);
    c.set_unary(id("aircraft-1"), 1000);
    c.set_unary(id("f-18-1"), 10);
    c.set_unary(id("land-2"), 300);
    c
}

#[test]
fn landing_prefers_participle_reading() {
    let model = model_with(landing_counts());
    let tokens = analyze(&model, "f-18 landing");
    let result = nbest_parse(&model, &tokens, 5).unwrap();
    assert_eq!(result.trees.len(), 2);
    assert!(result.exhausted);
    assert_eq!(result.trees[0].rule_id(), Some("NP->NP+PARTICIPLEPHRASE"));
    assert_eq!(result.trees[1].rule_id(), Some("NP->ADJECTIVE+GERUND"));
    assert!(result.trees[0].score > result.trees[1].score);
    assert_eq!(result.trees[0].head, id("f-18-1"));
}

#[test]
fn single_word_scores_rule_only() {
    let model = model_with(CountStore::new());
    let tokens = analyze(&model, "missile");
    let result = nbest_parse(&model, &tokens, 3).unwrap();
    assert_eq!(result.trees.len(), 1);
    let rule = model.grammar.rule("NP->noun").unwrap();
    assert_eq!(result.trees[0].score, model.grammar.rule_log_prob(rule, 0.5));
    assert_eq!(result.trees[0].head, id("projectile-1"));
}

#[test]
fn sense_ambiguity_ranked_by_context() {
    let mut counts = CountStore::new();
    let model = model_with(CountStore::new());
    counts
        .increment_pair(&model.lexicon, &model.config, "NP->NP+PP/location", &id("missile-1"), &id("ground-1"), 20)
        .unwrap();
    let model = model_with(counts);
    let tokens = analyze(&model, "sidewinder on ground");
    let result = nbest_parse(&model, &tokens, 5).unwrap();
    let heads: Vec<&str> = result.trees.iter().map(|t| t.head.as_str()).collect();
    assert!(heads.contains(&"sidewinder-1") && heads.contains(&"sidewinder-2"));
    assert_eq!(heads[0], "sidewinder-2");
    assert_eq!(result.trees[0].relation(), Some("locationover"));
}

#[test]
fn no_parse_reports_prefix() {
    let model = model_with(CountStore::new());
    let tokens = analyze(&model, "big on");
    assert_eq!(
        nbest_parse(&model, &tokens, 2),
        Err(ParseError::NoParse {
            tokens: 2,
            longest_prefix: 1
        })
    );
    assert!(exhaustive_parses(&model, &tokens).unwrap().is_empty());
    assert_eq!(nbest_parse(&model, &[], 2), Err(ParseError::EmptyInput));
    assert_eq!(nbest_parse(&model, &tokens, 0), Err(ParseError::ZeroRequested));
}

#[test]
fn oracle_cap_enforced() {
    let model = model_with(CountStore::new());
    let tokens = analyze(&model, "big big big big big big big big big big big f-18");
    assert!(matches!(exhaustive_parses(&model, &tokens), Err(ParseError::OracleCap { len: 12, cap: 10 })));
}

#[test]
fn two_token_parse_count_bounded() {
    let model = model_with(CountStore::new());
    // sidewinder has two noun senses; "sand" one. Binary rules that can
    // join NP/ADJECTIVE + NP: only NP -> ADJECTIVE NP.
    let tokens = analyze(&model, "sidewinder sand");
    let all = exhaustive_parses(&model, &tokens).unwrap();
    assert_eq!(all.len(), 2);
    assert!(all.iter().all(|t| t.head == id("sand-1")));
}

fn same_trees(a: &[ParseNode], b: &[ParseNode]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y)
}

#[test]
fn search_matches_oracle_on_examples() {
    let model = model_with(landing_counts());
    for text in [
        "f-18 landing",
        "sidewinder on ground",
        "big sidewinder on f-18 on sand",
        "big big f-18 landing on ground",
        "f-18 landing on sidewinder",
        "bu# 1234 on ground",
    ] {
        let tokens = analyze(&model, text);
        let all = exhaustive_parses(&model, &tokens).unwrap();
        for n in 1..=6 {
            let got = nbest_parse(&model, &tokens, n).unwrap();
            let want: Vec<ParseNode> = all.iter().take(n).cloned().collect();
            assert!(same_trees(&got.trees, &want), "{text} n={n}");
        }
    }
}

#[test]
fn rescoring_and_round_trips() {
    let model = model_with(landing_counts());
    let tokens = analyze(&model, "big sidewinder on f-18 landing");
    for tree in exhaustive_parses(&model, &tokens).unwrap() {
        assert!((score_tree(&model, &tree).unwrap() - tree.score).abs() < 1e-9);
        let back = tree_from_bracketed(&model, &tree.to_bracketed()).unwrap();
        assert_eq!(back.to_bracketed(), tree.to_bracketed());
        let json = serde_json::to_string(&tree).unwrap();
        let from_json: ParseNode = serde_json::from_str(&json).unwrap();
        assert_eq!(from_json, tree);
    }
    assert!(tree_from_bracketed(&model, "(NP head=x score=0 (verb head=land-2 score=0 \"land\"))").is_err());
}

#[test]
fn single_binary_node_score_is_rule_plus_cooc() {
    let model = model_with(landing_counts());
    let tokens = analyze(&model, "f-18 landing");
    let tree = &nbest_parse(&model, &tokens, 1).unwrap().trees[0];
    let g = &model.grammar;
    let lp = |id: &str| g.rule_log_prob(g.rule(id).unwrap(), 0.5);
    let cooc = model
        .counts
        .cooc_log_prob(&model.lexicon, &model.config, "NP->NP+PARTICIPLEPHRASE", &id("f-18-1"), &id("land-2"))
        .unwrap();
    let expected = lp("NP->noun") + lp("PARTICIPLEPHRASE->participle") + (lp("NP->NP+PARTICIPLEPHRASE") + cooc);
    assert!((tree.score - expected).abs() < 1e-12);
    assert!((cooc - (2.3f64 / 10.0).ln()).abs() < 1e-12);
}

#[test]
fn swapping_children_changes_roles() {
    let mut counts = CountStore::new();
    counts.set_pair(PairKey::new("NP->ADJECTIVE+NP", id("sand-1"), id("ground-1")), 9);
    counts.set_unary(id("sand-1"), 10);
    counts.set_unary(id("ground-1"), 10);
    let model = model_with(counts);
    let a = &nbest_parse(&model, &analyze(&model, "ground sand"), 1).unwrap().trees[0];
    let b = &nbest_parse(&model, &analyze(&model, "sand ground"), 1).unwrap().trees[0];
    assert_eq!(a.head, id("sand-1"));
    assert_eq!(b.head, id("ground-1"));
    assert!(a.score > b.score);
}

#[test]
fn raising_top_pair_keeps_rank() {
    let model = model_with(landing_counts());
    let tokens = analyze(&model, "f-18 landing on ground");
    let before = nbest_parse(&model, &tokens, 5).unwrap();
    let best = &before.trees[0];
    let NodeKind::Rule { stat_key: Some(key), .. } = &best.kind else {
        panic!("binary root expected");
    };
    let dep = &best.children[1].head;
    let mut bumped = model.clone();
    bumped.counts.increment_pair(&model.lexicon, &model.config, key, &best.head, dep, 50).unwrap();
    let after = nbest_parse(&bumped, &tokens, 5).unwrap();
    assert_eq!(after.trees[0].to_bracketed().split(" score=").count(), best.to_bracketed().split(" score=").count());
    assert_eq!(after.trees[0].shape(), best.shape());
}

const WORDS: [&str; 9] = ["big", "sidewinder", "on", "f-18", "landing", "ground", "sand", "missile", "bu# 77"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn search_equals_oracle(
        words in proptest::collection::vec(0usize..WORDS.len(), 1..7),
        seeds in proptest::collection::vec((0usize..4, 0usize..4, 1u64..40), 0..8),
        n in 1usize..6,
    ) {
        let base = model_with(CountStore::new());
        let rules = ["NP->NP+PARTICIPLEPHRASE", "NP->ADJECTIVE+NP", "NP->NP+PP/location", "NP->ADJECTIVE+GERUND"];
        let senses = ["sidewinder-2", "f-18-1", "ground-1", "land-2"];
        let mut counts = CountStore::new();
        for (r, s, c) in seeds {
            counts
                .increment_pair(&base.lexicon, &base.config, rules[r], &id(senses[s]), &id(senses[(s + 1) % 4]), c)
                .unwrap();
        }
        let model = model_with(counts);
        let text: Vec<&str> = words.iter().map(|&w| WORDS[w]).collect();
        let tokens = analyze(&model, &text.join(" "));
        let all = exhaustive_parses(&model, &tokens).unwrap();
        match nbest_parse(&model, &tokens, n) {
            Ok(got) => {
                let want: Vec<ParseNode> = all.iter().take(n).cloned().collect();
                prop_assert!(same_trees(&got.trees, &want));
                prop_assert_eq!(got.exhausted, all.len() <= n && got.exhausted);
                for t in &got.trees {
                    prop_assert!(t.score.is_finite() && t.score <= 0.0);
                    for node in t.preorder() {
                        prop_assert!(node.score >= t.score);
                    }
                }
                for w in got.trees.windows(2) {
                    prop_assert!(w[0].score >= w[1].score);
                }
            }
            Err(ParseError::NoParse { .. }) => prop_assert!(all.is_empty()),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
