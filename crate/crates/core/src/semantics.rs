//! Meaning lists built from parse trees, unknown-word classification, and
//! alternative interpretations of a caption.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grammar::MARKER;
use crate::lexicon::SynsetId;
use crate::model::Model;
use crate::parser::{self, LeafOrigin, NodeKind, ParseError, ParseNode, ParseResult, TokenAnalysis};

pub type Var = u32;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    AKindOf { var: Var, synset: SynsetId },
    Property { var: Var, synset: SynsetId },
    Relation { label: String, head: Var, dep: Var },
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::AKindOf { var, synset } => write!(f, "ako v{var} {synset}"),
            Predicate::Property { var, synset } => write!(f, "prop v{var} {synset}"),
            Predicate::Relation { label, head, dep } => write!(f, "rel {label} v{head} v{dep}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeaningList {
    pub predicates: BTreeSet<Predicate>,
}

impl MeaningList {
    pub fn variables(&self) -> BTreeSet<Var> {
        self.predicates
            .iter()
            .flat_map(|p| match p {
                Predicate::AKindOf { var, .. } | Predicate::Property { var, .. } => vec![*var],
                Predicate::Relation { head, dep, .. } => vec![*head, *dep],
            })
            .collect()
    }

    pub fn kind_of(&self, var: Var) -> Option<&SynsetId> {
        self.predicates.iter().find_map(|p| match p {
            Predicate::AKindOf { var: v, synset } if *v == var => Some(synset),
            _ => None,
        })
    }

    /// One predicate per line: `ako v3 projectile-1`, `prop v3 big-1`,
    /// `rel locationover v3 v5`.
    pub fn to_text(&self) -> String {
        self.predicates.iter().map(|p| format!("{p}\n")).collect()
    }

    fn signature(&self, var: Var) -> Vec<String> {
        let mut sig: Vec<String> = self
            .predicates
            .iter()
            .filter_map(|p| match p {
                Predicate::AKindOf { var: v, synset } if *v == var => Some(format!("a {synset}")),
                Predicate::Property { var: v, synset } if *v == var => Some(format!("p {synset}")),
                Predicate::Relation { label, head, .. } if *head == var => Some(format!("h {label}")),
                Predicate::Relation { label, dep, .. } if *dep == var => Some(format!("d {label}")),
                _ => None,
            })
            .collect();
        sig.sort();
        sig
    }

    fn renamed(&self, map: &BTreeMap<Var, Var>) -> BTreeSet<Predicate> {
        self.predicates
            .iter()
            .map(|p| match p {
                Predicate::AKindOf { var, synset } => Predicate::AKindOf {
                    var: map[var],
                    synset: synset.clone(),
                },
                Predicate::Property { var, synset } => Predicate::Property {
                    var: map[var],
                    synset: synset.clone(),
                },
                Predicate::Relation { label, head, dep } => Predicate::Relation {
                    label: label.clone(),
                    head: map[head],
                    dep: map[dep],
                },
            })
            .collect()
    }

    /// Equal up to a renaming of variables.
    pub fn isomorphic(&self, other: &MeaningList) -> bool {
        if self.predicates.len() != other.predicates.len() {
            return false;
        }
        let mine: Vec<Var> = self.variables().into_iter().collect();
        let theirs: Vec<Var> = other.variables().into_iter().collect();
        if mine.len() != theirs.len() {
            return false;
        }
        let their_sigs: BTreeMap<Var, Vec<String>> = theirs.iter().map(|v| (*v, other.signature(*v))).collect();
        let candidates: Vec<Vec<Var>> = mine
            .iter()
            .map(|v| {
                let sig = self.signature(*v);
                theirs.iter().copied().filter(|t| their_sigs[t] == sig).collect()
            })
            .collect();
        let mut map = BTreeMap::new();
        let mut used = BTreeSet::new();
        self.assign(&mine, &candidates, 0, &mut map, &mut used, other)
    }

    fn assign(
        &self,
        vars: &[Var],
        candidates: &[Vec<Var>],
        at: usize,
        map: &mut BTreeMap<Var, Var>,
        used: &mut BTreeSet<Var>,
        other: &MeaningList,
    ) -> bool {
        if at == vars.len() {
            return self.renamed(map) == other.predicates;
        }
        for &c in &candidates[at] {
            if used.insert(c) {
                map.insert(vars[at], c);
                if self.assign(vars, candidates, at + 1, map, used, other) {
                    return true;
                }
                map.remove(&vars[at]);
                used.remove(&c);
            }
        }
        false
    }
}

impl fmt::Display for MeaningList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.predicates.iter().map(|p| p.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

fn var_of(token: usize) -> Var {
    token as Var + 1
}

/// Meaning list of a parse: one variable per noun/verb/code leaf, numbered
/// by token position from 1; modifiers become properties of their head and
/// every labelled binary node a relation between head and dependent.
pub fn meaning_list(tree: &ParseNode) -> Result<MeaningList, ParseError> {
    let leaves = tree.leaves();
    let mut entity: BTreeMap<usize, &ParseNode> = BTreeMap::new();
    let mut modifier: BTreeMap<usize, &ParseNode> = BTreeMap::new();
    let mut predicates = BTreeSet::new();
    for leaf in &leaves {
        let class = leaf.leaf_class().expect("leaf");
        if class.is_entity() {
            entity.insert(leaf.span.0, leaf);
            predicates.insert(Predicate::AKindOf {
                var: var_of(leaf.span.0),
                synset: leaf.head.clone(),
            });
        } else if class.is_modifier() {
            modifier.insert(leaf.span.0, leaf);
        }
    }
    for node in tree.preorder() {
        let NodeKind::Rule { relation: Some(label), .. } = &node.kind else {
            continue;
        };
        if label == MARKER {
            continue;
        }
        let [left, right] = node.children.as_slice() else {
            return Err(ParseError::Malformed(format!("relation on non-binary node `{}`", node.category)));
        };
        let dep = if left.head_token == node.head_token { right } else { left };
        if !entity.contains_key(&node.head_token) {
            continue;
        }
        let head = var_of(node.head_token);
        if let Some(m) = modifier.get(&dep.head_token) {
            predicates.insert(Predicate::Property {
                var: head,
                synset: m.head.clone(),
            });
        } else if entity.contains_key(&dep.head_token) {
            predicates.insert(Predicate::Relation {
                label: label.clone(),
                head,
                dep: var_of(dep.head_token),
            });
        }
    }
    Ok(MeaningList { predicates })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Head,
    Dependent,
}

/// A binary node the unknown word takes part in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContextPair {
    pub stat_key: String,
    pub slot: Slot,
    pub known: SynsetId,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    /// Candidate categories, best first, with the product of estimated pair
    /// counts as score.
    pub ranked: Vec<(SynsetId, f64)>,
    pub low_confidence: bool,
}

impl Classification {
    pub fn best(&self) -> &SynsetId {
        &self.ranked[0].0
    }
}

/// Binary nodes in which the word at `token` is the head or the dependent's
/// head.
pub fn context_pairs(tree: &ParseNode, token: usize) -> Vec<ContextPair> {
    let mut out = Vec::new();
    for node in tree.preorder() {
        let NodeKind::Rule { stat_key: Some(key), .. } = &node.kind else {
            continue;
        };
        let [left, right] = node.children.as_slice() else {
            continue;
        };
        let (head, dep) = if left.head_token == node.head_token { (left, right) } else { (right, left) };
        if head.head_token == token {
            out.push(ContextPair {
                stat_key: key.clone(),
                slot: Slot::Head,
                known: dep.head.clone(),
            });
        } else if dep.head_token == token {
            out.push(ContextPair {
                stat_key: key.clone(),
                slot: Slot::Dependent,
                known: head.head.clone(),
            });
        }
    }
    out
}

/// Ranks the configured open-class roots as the category of an unknown
/// word by how well each fits the word's context.
pub fn classify_unknown(model: &Model, context: &[ContextPair]) -> Result<Classification, ParseError> {
    let roots = &model.config.unknown_roots;
    if context.is_empty() {
        return Ok(Classification {
            ranked: roots.iter().map(|r| (r.clone(), 0.0)).collect(),
            low_confidence: true,
        });
    }
    let mut ranked = Vec::new();
    for (order, root) in roots.iter().enumerate() {
        let mut score = 1.0;
        for pair in context {
            let (head, dep) = match pair.slot {
                Slot::Head => (root, &pair.known),
                Slot::Dependent => (&pair.known, root),
            };
            score *= model
                .counts
                .estimated_pair_count(&model.lexicon, &model.config, &pair.stat_key, head, dep)?
                .value;
        }
        ranked.push((root.clone(), score, model.counts.unary(root), order));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.2.cmp(&a.2)).then(a.3.cmp(&b.3)));
    Ok(Classification {
        ranked: ranked.into_iter().map(|(r, s, _, _)| (r, s)).collect(),
        low_confidence: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnknownWord {
    pub token_index: usize,
    pub token: String,
    pub classification: Classification,
}

/// Tokens with their leaf options after unknown words were classified.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaptionAnalysis {
    pub tokens: Vec<TokenAnalysis>,
    pub unknown: Vec<UnknownWord>,
}

/// Tokenizes and analyses a caption. Each unknown word is classified from
/// its context in the best parse that lets it range over every open-class
/// root, and then fixed to the winning category.
pub fn analyze_caption(model: &Model, text: &str) -> Result<CaptionAnalysis, ParseError> {
    let words = model.lexicon.tokenize(&text.to_lowercase());
    if words.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let mut tokens = parser::analyze_tokens(model, &words);
    let unknown_at: Vec<usize> = (0..tokens.len()).filter(|&i| tokens[i].is_unknown()).collect();
    if unknown_at.is_empty() {
        return Ok(CaptionAnalysis {
            tokens,
            unknown: Vec::new(),
        });
    }
    let best = parser::nbest_parse(model, &tokens, 1)?.trees.remove(0);
    let mut unknown = Vec::new();
    for i in unknown_at {
        let classification = classify_unknown(model, &context_pairs(&best, i))?;
        let winner = classification.best().clone();
        tokens[i].options.retain(|o| o.synset == winner);
        debug_assert_eq!(tokens[i].origin, LeafOrigin::Unknown);
        unknown.push(UnknownWord {
            token_index: i,
            token: tokens[i].token.clone(),
            classification,
        });
    }
    Ok(CaptionAnalysis { tokens, unknown })
}

/// Analyses and parses a caption.
pub fn parse_caption(model: &Model, text: &str, n: usize) -> Result<(CaptionAnalysis, ParseResult), ParseError> {
    let analysis = analyze_caption(model, text)?;
    let result = parser::nbest_parse(model, &analysis.tokens, n)?;
    Ok((analysis, result))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Interpretation {
    pub meaning: MeaningList,
    pub score: f64,
}

/// Meaning lists of the parses scoring within `config.delta` of the best,
/// with isomorphic duplicates merged, best first, at most `max_alternatives`.
pub fn interpretations(model: &Model, text: &str, max_alternatives: usize) -> Result<Vec<Interpretation>, ParseError> {
    let depth = model.config.review_depth.max(max_alternatives).max(1);
    let (_, result) = parse_caption(model, text, depth)?;
    let best = result.trees[0].score;
    let mut out: Vec<Interpretation> = Vec::new();
    for tree in &result.trees {
        if tree.score < best - model.config.delta || out.len() >= max_alternatives {
            break;
        }
        let meaning = meaning_list(tree)?;
        if !out.iter().any(|i| i.meaning.isomorphic(&meaning)) {
            out.push(Interpretation {
                meaning,
                score: tree.score,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::{CountStore, PairKey};
    use crate::parser::tests::{analyze, model_with};
    use proptest::prelude::*;

    fn id(s: &str) -> SynsetId {
        SynsetId::from(s)
    }

    fn ako(var: Var, s: &str) -> Predicate {
        Predicate::AKindOf { var, synset: id(s) }
    }

    fn best_meaning(model: &Model, text: &str) -> MeaningList {
        let tokens = analyze(model, text);
        meaning_list(&parser::nbest_parse(model, &tokens, 1).unwrap().trees[0]).unwrap()
    }

    #[test]
    fn single_noun() {
        let model = model_with(CountStore::new());
        let m = best_meaning(&model, "missile");
        assert_eq!(m.predicates, BTreeSet::from([ako(1, "projectile-1")]));
        assert_eq!(m.to_text(), "ako v1 projectile-1\n");
    }

    #[test]
    fn adjective_and_preposition() {
        let model = model_with(CountStore::new());
        let m = best_meaning(&model, "big missile on ground");
        let want = BTreeSet::from([
            ako(2, "projectile-1"),
            Predicate::Property {
                var: 2,
                synset: id("big-1"),
            },
            Predicate::Relation {
                label: "locationover".into(),
                head: 2,
                dep: 4,
            },
            ako(4, "ground-1"),
        ]);
        assert_eq!(m.predicates, want);
        assert!(m.to_text().contains("rel locationover v2 v4\n"));
    }

    #[test]
    fn alias_invariance() {
        let model = model_with(CountStore::new());
        let a = best_meaning(&model, "big missile on ground");
        let b = best_meaning(&model, "big projectile on ground");
        assert!(a.isomorphic(&b));
    }

    #[test]
    fn relations_are_typed() {
        let model = model_with(CountStore::new());
        for text in ["f-18 landing on sand", "big sidewinder on big f-18", "bu# 77 on ground"] {
            let tokens = analyze(&model, text);
            for tree in parser::exhaustive_parses(&model, &tokens).unwrap() {
                let m = meaning_list(&tree).unwrap();
                for p in &m.predicates {
                    if let Predicate::Relation { head, dep, .. } = p {
                        assert!(m.kind_of(*head).is_some() && m.kind_of(*dep).is_some());
                    }
                }
            }
        }
    }

    fn ambiguous_counts(model: &Model) -> CountStore {
        let mut counts = CountStore::new();
        for (s, c) in [("missile-1", 6), ("snake-1", 5)] {
            counts
                .increment_pair(&model.lexicon, &model.config, "NP->NP+PP/location", &id(s), &id("ground-1"), c)
                .unwrap();
        }
        counts
    }

    #[test]
    fn ambiguous_caption_has_two_readings() {
        let base = model_with(CountStore::new());
        let model = model_with(ambiguous_counts(&base));
        let readings = interpretations(&model, "sidewinder on ground", 5).unwrap();
        assert_eq!(readings.len(), 2);
        let kinds: BTreeSet<&SynsetId> = readings.iter().filter_map(|r| r.meaning.kind_of(1)).collect();
        assert_eq!(kinds, BTreeSet::from([&id("sidewinder-1"), &id("sidewinder-2")]));
        let one = interpretations(&model, "missile", 5).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn duplicate_graphs_merge() {
        // (big f-18) on sand and big (f-18 on sand) mean the same thing.
        let model = model_with(CountStore::new());
        let tokens = analyze(&model, "big f-18 on sand");
        let trees = parser::exhaustive_parses(&model, &tokens).unwrap();
        let graphs: Vec<MeaningList> = trees.iter().map(|t| meaning_list(t).unwrap()).collect();
        assert!(graphs.len() >= 2 && graphs[0].isomorphic(&graphs[1]));
        let readings = interpretations(&model, "big f-18 on sand", 5).unwrap();
        assert_eq!(readings.len(), 1);
        assert_eq!(readings[0].score, trees[0].score);
    }

    #[test]
    fn unknown_word_classified_by_context() {
        let base = model_with(CountStore::new());
        let mut counts = CountStore::new();
        counts
            .increment_pair(&base.lexicon, &base.config, "NP->NP+PP/location", &id("weapon-1"), &id("f-18-1"), 30)
            .unwrap();
        let model = model_with(counts);
        let a = analyze_caption(&model, "ghwxyzzy on f-18").unwrap();
        assert_eq!(a.unknown.len(), 1);
        assert_eq!(a.unknown[0].classification.best(), &id("weapon-1"));
        assert!(!a.unknown[0].classification.low_confidence);
        assert_eq!(a.tokens[0].options.len(), 1);
        let alone = analyze_caption(&model, "ghwxyzzy").unwrap();
        assert!(alone.unknown[0].classification.low_confidence);
        assert_eq!(alone.unknown[0].classification.best(), &id("weapon-1"));
    }

    #[test]
    fn floor_only_context_falls_back_to_unary() {
        let mut counts = CountStore::new();
        counts.set_unary(id("vehicle-1"), 9);
        counts.set_unary(id("weapon-1"), 2);
        let model = model_with(counts);
        let ctx = [ContextPair {
            stat_key: "NP->NP+PP/location".into(),
            slot: Slot::Head,
            known: id("sand-1"),
        }];
        let c = classify_unknown(&model, &ctx).unwrap();
        assert_eq!(c.ranked[0], (id("vehicle-1"), 0.5));
    }

    #[test]
    fn classification_monotone_in_counts() {
        let ctx = [ContextPair {
            stat_key: "NP->NP+PP/location".into(),
            slot: Slot::Dependent,
            known: id("sand-1"),
        }];
        let mut last = 0.0;
        for c in [1u64, 5, 9, 40] {
            let mut counts = CountStore::new();
            counts.set_pair(PairKey::new("NP->NP+PP/location", id("sand-1"), id("weapon-1")), c);
            let model = model_with(counts);
            let s = classify_unknown(&model, &ctx)
                .unwrap()
                .ranked
                .iter()
                .find(|(r, _)| *r == id("weapon-1"))
                .unwrap()
                .1;
            assert!(s >= last);
            last = s;
        }
    }

    fn arb_meaning() -> impl Strategy<Value = MeaningList> {
        let synsets = ["a-1", "b-1", "c-1"];
        (
            proptest::collection::vec(0usize..3, 1..5),
            proptest::collection::vec((0usize..5, 0usize..5, 0usize..2), 0..5),
        )
            .prop_map(move |(kinds, rels)| {
                let mut predicates = BTreeSet::new();
                for (v, k) in kinds.iter().enumerate() {
                    predicates.insert(Predicate::AKindOf {
                        var: v as Var + 1,
                        synset: SynsetId::from(synsets[*k]),
                    });
                }
                let n = kinds.len();
                for (h, d, l) in rels {
                    if h % n != d % n {
                        predicates.insert(Predicate::Relation {
                            label: ["x", "y"][l].into(),
                            head: (h % n) as Var + 1,
                            dep: (d % n) as Var + 1,
                        });
                    }
                }
                MeaningList { predicates }
            })
    }

    fn shuffle(m: &MeaningList, seed: u64) -> MeaningList {
        let vars: Vec<Var> = m.variables().into_iter().collect();
        let mut perm = vars.clone();
        let len = perm.len();
        for i in 0..len {
            let j = (seed as usize).wrapping_mul(31).wrapping_add(i * 7) % len;
            perm.swap(i, j);
        }
        let map: BTreeMap<Var, Var> = vars.into_iter().zip(perm.into_iter().map(|v| v + 10)).collect();
        MeaningList {
            predicates: m.renamed(&map),
        }
    }

    proptest! {
        #[test]
        fn isomorphism_is_an_equivalence(a in arb_meaning(), b in arb_meaning(), c in arb_meaning(), seed in 0u64..100) {
            prop_assert!(a.isomorphic(&a));
            prop_assert_eq!(a.isomorphic(&b), b.isomorphic(&a));
            if a.isomorphic(&b) && b.isomorphic(&c) {
                prop_assert!(a.isomorphic(&c));
            }
            let renamed = shuffle(&a, seed);
            prop_assert!(a.isomorphic(&renamed));
            prop_assert!(renamed.isomorphic(&shuffle(&renamed, seed + 1)));
        }
    }
}
