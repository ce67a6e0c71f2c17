//! N-best parsing under the binary grammar.
//!
//! A parse scores as the sum, over rule nodes, of the rule's log probability
//! plus, for binary nodes, the log co-occurrence probability of the head and
//! dependent senses. Every term is at most zero, so a partial constituent's
//! score bounds all of its completions and best-first search can stop as soon
//! as the agenda falls below the N-th complete parse.

mod oracle;
mod search;
mod tree;

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

pub use oracle::exhaustive_parses;
pub use search::nbest_parse;
pub use tree::{NodeKind, ParseNode};

use crate::counts::CountsError;
use crate::grammar::{self, GrammarRule, LexClass, Symbol, MARKER, PREP_ATTACH};
use crate::lexicon::{PrepClass, ResolutionKind, SynsetId};
use crate::model::Model;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParseError {
    #[error("nothing to parse")]
    EmptyInput,
    #[error("the number of parses requested must be at least 1")]
    ZeroRequested,
    #[error("no parse covers all {tokens} tokens; the longest parsable prefix has {longest_prefix}")]
    NoParse { tokens: usize, longest_prefix: usize },
    #[error("{len} tokens exceed the exhaustive-parse cap of {cap}")]
    OracleCap { len: usize, cap: usize },
    #[error(transparent)]
    Counts(#[from] CountsError),
    #[error("malformed tree: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeafOrigin {
    Lexicon,
    Special { value: String },
    Resolved { surface: String, resolution: ResolutionKind },
    Unknown,
}

/// One way a token can appear as a leaf.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafOption {
    pub class: LexClass,
    pub synset: SynsetId,
    pub frequency_rank: u32,
    pub prep_class: Option<PrepClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TokenAnalysis {
    pub token: String,
    pub origin: LeafOrigin,
    pub options: Vec<LeafOption>,
}

impl TokenAnalysis {
    pub fn is_unknown(&self) -> bool {
        self.origin == LeafOrigin::Unknown
    }
}

fn push_option(options: &mut Vec<LeafOption>, option: LeafOption) {
    match options
        .iter_mut()
        .find(|o| o.class == option.class && o.synset == option.synset)
    {
        Some(o) => o.frequency_rank = o.frequency_rank.min(option.frequency_rank),
        None => options.push(option),
    }
}

/// Candidate leaves for each token: special formats, then lexicon senses,
/// then the misspelling/abbreviation resolver, then the configured
/// open-class roots for unknown words.
pub fn analyze_tokens(model: &Model, tokens: &[String]) -> Vec<TokenAnalysis> {
    let lex = &model.lexicon;
    tokens
        .iter()
        .map(|token| {
            if let Some((synset, value)) = lex.classify_special(token) {
                return TokenAnalysis {
                    token: token.clone(),
                    origin: LeafOrigin::Special { value },
                    options: vec![LeafOption {
                        class: LexClass::Code,
                        synset,
                        frequency_rank: 0,
                        prep_class: None,
                    }],
                };
            }
            let mut origin = LeafOrigin::Lexicon;
            let mut senses = lex.lookup_senses(token);
            if senses.is_empty() {
                if let Some(best) = lex.resolve_unknown(token, &model.config).into_iter().next() {
                    senses = lex.lookup_senses(&best.surface);
                    origin = LeafOrigin::Resolved {
                        surface: best.surface,
                        resolution: best.kind,
                    };
                }
            }
            let mut options = Vec::new();
            for sense in &senses {
                for class in LexClass::for_sense(sense) {
                    push_option(
                        &mut options,
                        LeafOption {
                            class: *class,
                            synset: sense.synset.clone(),
                            frequency_rank: sense.frequency_rank,
                            prep_class: sense.prep_class,
                        },
                    );
                }
            }
            if options.is_empty() {
                origin = LeafOrigin::Unknown;
                options = model
                    .config
                    .unknown_roots
                    .iter()
                    .enumerate()
                    .map(|(i, root)| LeafOption {
                        class: LexClass::Noun,
                        synset: root.clone(),
                        frequency_rank: i as u32,
                        prep_class: None,
                    })
                    .collect();
            }
            options.sort_by(|a, b| (a.frequency_rank, &a.synset, a.class).cmp(&(b.frequency_rank, &b.synset, b.class)));
            TokenAnalysis {
                token: token.clone(),
                origin,
                options,
            }
        })
        .collect()
}

/// Up to `n` best parses in ranking order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParseResult {
    pub trees: Vec<ParseNode>,
    /// No parse exists beyond those returned.
    pub exhausted: bool,
}

/// What a constituent exposes to the node above it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct HeadInfo {
    pub synset: SynsetId,
    pub token: usize,
    /// Class of a preposition this constituent introduces, carried through
    /// marker nodes to the attaching node.
    pub prep: Option<PrepClass>,
}

pub(crate) struct Combined {
    pub add: f64,
    pub head: HeadInfo,
    pub relation: Option<String>,
    pub stat_key: Arc<str>,
}

type CoocKey = (Arc<str>, SynsetId, SynsetId);

/// Shared scoring so search, oracle and rescoring agree bit for bit.
pub(crate) struct Scorer<'a> {
    pub model: &'a Model,
    rule_lp: Vec<f64>,
    cooc: RefCell<HashMap<CoocKey, f64>>,
}

impl<'a> Scorer<'a> {
    pub fn new(model: &'a Model) -> Scorer<'a> {
        let g = &model.grammar;
        Scorer {
            model,
            rule_lp: g.rules().iter().map(|r| g.rule_log_prob(r, model.config.alpha)).collect(),
            cooc: RefCell::new(HashMap::new()),
        }
    }

    pub fn rule(&self, idx: usize) -> &'a GrammarRule {
        &self.model.grammar.rules()[idx]
    }

    pub fn unary_add(&self, rule: usize) -> f64 {
        self.rule_lp[rule]
    }

    pub fn leaf(option: &LeafOption, token: usize) -> HeadInfo {
        HeadInfo {
            synset: option.synset.clone(),
            token,
            prep: if option.class == LexClass::Preposition {
                option.prep_class
            } else {
                None
            },
        }
    }

    pub fn binary(&self, rule_idx: usize, left: &HeadInfo, right: &HeadInfo) -> Result<Combined, ParseError> {
        let rule = self.rule(rule_idx);
        let (head, dep) = grammar::head_of(rule, left, right).map_err(|e| ParseError::Malformed(e.to_string()))?;
        let label = rule.relation.as_deref().unwrap_or(MARKER);
        let (relation, stat_key): (String, Arc<str>) = if label == PREP_ATTACH {
            let class = dep.prep.unwrap_or(PrepClass::Miscellaneous);
            (
                grammar::specialized_relation(class).to_string(),
                Arc::from(format!("{}/{}", rule.id, class.name())),
            )
        } else {
            (label.to_string(), Arc::from(rule.id.as_str()))
        };
        let key = (stat_key.clone(), head.synset.clone(), dep.synset.clone());
        let cached = self.cooc.borrow().get(&key).copied();
        let cooc = match cached {
            Some(c) => c,
            None => {
                let m = self.model;
                let c = m
                    .counts
                    .cooc_log_prob(&m.lexicon, &m.config, &stat_key, &head.synset, &dep.synset)?;
                self.cooc.borrow_mut().insert(key, c);
                c
            }
        };
        let prep = if label == MARKER { left.prep.or(right.prep) } else { None };
        Ok(Combined {
            add: self.rule_lp[rule_idx] + cooc,
            head: HeadInfo {
                synset: head.synset,
                token: head.token,
                prep,
            },
            relation: Some(relation),
            stat_key,
        })
    }
}

pub(crate) fn binary_score(left: f64, right: f64, add: f64) -> f64 {
    left + right + add
}

pub(crate) fn unary_score(child: f64, add: f64) -> f64 {
    child + add
}

pub(crate) fn leaf_node(option: &LeafOption, token: &str, index: usize) -> ParseNode {
    ParseNode {
        category: option.class.name().to_string(),
        span: (index, index + 1),
        head: option.synset.clone(),
        head_token: index,
        score: 0.0,
        kind: NodeKind::Leaf {
            class: option.class,
            token: token.to_string(),
            frequency_rank: option.frequency_rank,
            prep_class: option.prep_class.filter(|_| option.class == LexClass::Preposition),
        },
        children: Vec::new(),
    }
}

fn head_info(node: &ParseNode, prep: Option<PrepClass>) -> HeadInfo {
    HeadInfo {
        synset: node.head.clone(),
        token: node.head_token,
        prep,
    }
}

pub(crate) fn unary_node(scorer: &Scorer, rule: usize, child: ParseNode) -> ParseNode {
    let r = scorer.rule(rule);
    ParseNode {
        category: r.lhs.clone(),
        span: child.span,
        head: child.head.clone(),
        head_token: child.head_token,
        score: unary_score(child.score, scorer.unary_add(rule)),
        kind: NodeKind::Rule {
            rule: r.id.clone(),
            relation: None,
            stat_key: None,
        },
        children: vec![child],
    }
}

pub(crate) fn binary_node(scorer: &Scorer, rule: usize, left: ParseNode, right: ParseNode, c: Combined) -> ParseNode {
    let r = scorer.rule(rule);
    ParseNode {
        category: r.lhs.clone(),
        span: (left.span.0, right.span.1),
        head: c.head.synset,
        head_token: c.head.token,
        score: binary_score(left.score, right.score, c.add),
        kind: NodeKind::Rule {
            rule: r.id.clone(),
            relation: c.relation,
            stat_key: Some(c.stat_key.to_string()),
        },
        children: vec![left, right],
    }
}

/// Rebuilds a node bottom-up, returning it with the prep class it exposes.
fn rebuild(scorer: &Scorer, node: &ParseNode) -> Result<(ParseNode, Option<PrepClass>), ParseError> {
    match (&node.kind, node.children.as_slice()) {
        (NodeKind::Leaf { class, token, .. }, []) => {
            let lex = &scorer.model.lexicon;
            let is_root = scorer.model.config.unknown_roots.contains(&node.head);
            if !lex.contains(&node.head) && !is_root {
                return Err(ParseError::Malformed(format!("unknown sense `{}`", node.head)));
            }
            let option = LeafOption {
                class: *class,
                synset: node.head.clone(),
                frequency_rank: match &node.kind {
                    NodeKind::Leaf { frequency_rank, .. } => *frequency_rank,
                    NodeKind::Rule { .. } => 0,
                },
                prep_class: lex.prep_class(&node.head),
            };
            let leaf = leaf_node(&option, token, node.span.0);
            let prep = Scorer::leaf(&option, node.span.0).prep;
            Ok((leaf, prep))
        }
        (NodeKind::Rule { .. }, children) if !children.is_empty() && children.len() <= 2 => {
            let built: Vec<(ParseNode, Option<PrepClass>)> =
                children.iter().map(|c| rebuild(scorer, c)).collect::<Result<_, _>>()?;
            let symbols: Vec<Symbol> = built
                .iter()
                .map(|(c, _)| match &c.kind {
                    NodeKind::Leaf { class, .. } => Symbol::Lexical(*class),
                    NodeKind::Rule { .. } => Symbol::Category(c.category.clone()),
                })
                .collect();
            let rule = scorer
                .model
                .grammar
                .rules()
                .iter()
                .position(|r| r.lhs == node.category && r.rhs == symbols)
                .ok_or_else(|| {
                    let rhs: Vec<&str> = symbols.iter().map(Symbol::name).collect();
                    ParseError::Malformed(format!("no rule {} -> {}", node.category, rhs.join(" ")))
                })?;
            let mut it = built.into_iter();
            let (first, first_prep) = it.next().expect("nonempty");
            match it.next() {
                None => Ok((unary_node(scorer, rule, first), first_prep)),
                Some((second, second_prep)) => {
                    if first.span.1 != second.span.0 {
                        return Err(ParseError::Malformed("children are not adjacent".into()));
                    }
                    let c = scorer.binary(rule, &head_info(&first, first_prep), &head_info(&second, second_prep))?;
                    let prep = c.head.prep;
                    Ok((binary_node(scorer, rule, first, second, c), prep))
                }
            }
        }
        _ => Err(ParseError::Malformed(format!("node `{}` has a bad shape", node.category))),
    }
}

/// Recomputes every score in the tree from its leaves.
pub fn rescore(model: &Model, tree: &ParseNode) -> Result<ParseNode, ParseError> {
    let scorer = Scorer::new(model);
    Ok(rebuild(&scorer, &renumber(tree))?.0)
}

/// The tree's score recomputed from its leaves.
pub fn score_tree(model: &Model, tree: &ParseNode) -> Result<f64, ParseError> {
    Ok(rescore(model, tree)?.score)
}

/// Reassigns leaf spans left to right.
fn renumber(tree: &ParseNode) -> ParseNode {
    fn walk(node: &ParseNode, next: &mut usize) -> ParseNode {
        if node.is_leaf() {
            let mut leaf = node.clone();
            leaf.span = (*next, *next + 1);
            leaf.head_token = *next;
            *next += 1;
            return leaf;
        }
        let children: Vec<ParseNode> = node.children.iter().map(|c| walk(c, next)).collect();
        let mut out = node.clone();
        out.span = (
            children.first().map_or(0, |c| c.span.0),
            children.last().map_or(0, |c| c.span.1),
        );
        out.children = children;
        out
    }
    walk(tree, &mut 0)
}

/// Reads the bracketed form back into a scored tree under `model`.
pub fn tree_from_bracketed(model: &Model, text: &str) -> Result<ParseNode, ParseError> {
    fn convert(raw: &tree::RawTree, model: &Model) -> Result<ParseNode, ParseError> {
        match raw {
            tree::RawTree::Leaf { category, head, token } => {
                let class: LexClass = category
                    .parse()
                    .map_err(|_| ParseError::Malformed(format!("unknown leaf class `{category}`")))?;
                let head = SynsetId::from(head.as_str());
                let frequency_rank = model
                    .lexicon
                    .lookup_senses(token)
                    .iter()
                    .filter(|s| s.synset == head)
                    .map(|s| s.frequency_rank)
                    .min()
                    .or_else(|| model.lexicon.rank_of(&head))
                    .or_else(|| {
                        model.config.unknown_roots.iter().position(|r| *r == head).map(|i| i as u32)
                    })
                    .unwrap_or(0);
                Ok(ParseNode {
                    category: category.clone(),
                    span: (0, 0),
                    head,
                    head_token: 0,
                    score: 0.0,
                    kind: NodeKind::Leaf {
                        class,
                        token: token.clone(),
                        frequency_rank,
                        prep_class: None,
                    },
                    children: Vec::new(),
                })
            }
            tree::RawTree::Node { category, children } => Ok(ParseNode {
                category: category.clone(),
                span: (0, 0),
                head: SynsetId::from("unset"),
                head_token: 0,
                score: 0.0,
                kind: NodeKind::Rule {
                    rule: String::new(),
                    relation: None,
                    stat_key: None,
                },
                children: children.iter().map(|c| convert(c, model)).collect::<Result<_, _>>()?,
            }),
        }
    }
    let raw = tree::parse_bracketed(text).map_err(ParseError::Malformed)?;
    rescore(model, &convert(&raw, model)?)
}

#[cfg(test)]
pub(crate) mod tests;
