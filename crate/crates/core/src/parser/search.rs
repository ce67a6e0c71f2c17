use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use super::{
    binary_node, binary_score, leaf_node, unary_node, unary_score, HeadInfo, ParseError, ParseNode, ParseResult,
    Scorer, TokenAnalysis,
};
use crate::grammar::Symbol;
use crate::lexicon::{PrepClass, SynsetId};
use crate::model::Model;

/// Constituents that share a category, span and exposed head score
/// identically in every context, so each needs at most N derivations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct ItemKey {
    symbol: Symbol,
    start: usize,
    end: usize,
    head: SynsetId,
    prep: Option<PrepClass>,
}

enum Step {
    Leaf { token: usize, option: usize },
    Unary { rule: usize, child: usize },
    Binary {
        rule: usize,
        left: usize,
        right: usize,
        relation: Option<String>,
        stat_key: Arc<str>,
    },
}

struct Deriv {
    item: usize,
    score: f64,
    head: HeadInfo,
    step: Step,
}

struct Item {
    key: ItemKey,
    accepted: Vec<usize>,
}

struct Pending {
    score: f64,
    seq: usize,
    deriv: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    scorer: Scorer<'a>,
    tokens: &'a [TokenAnalysis],
    n: usize,
    derivs: Vec<Deriv>,
    items: Vec<Item>,
    item_ids: HashMap<ItemKey, usize>,
    /// Items with at least one accepted derivation, by (symbol, start) and (symbol, end).
    by_start: HashMap<(Symbol, usize), Vec<usize>>,
    by_end: HashMap<(Symbol, usize), Vec<usize>>,
    agenda: BinaryHeap<Pending>,
    seq: usize,
    pruned: bool,
    unary_by_child: HashMap<Symbol, Vec<usize>>,
    binary_by_left: HashMap<Symbol, Vec<usize>>,
    binary_by_right: HashMap<Symbol, Vec<usize>>,
}

impl<'a> Search<'a> {
    fn new(model: &'a Model, tokens: &'a [TokenAnalysis], n: usize) -> Search<'a> {
        let mut unary_by_child: HashMap<Symbol, Vec<usize>> = HashMap::new();
        let mut binary_by_left: HashMap<Symbol, Vec<usize>> = HashMap::new();
        let mut binary_by_right: HashMap<Symbol, Vec<usize>> = HashMap::new();
        for (i, r) in model.grammar.rules().iter().enumerate() {
            if r.is_binary() {
                binary_by_left.entry(r.rhs[0].clone()).or_default().push(i);
                binary_by_right.entry(r.rhs[1].clone()).or_default().push(i);
            } else {
                unary_by_child.entry(r.rhs[0].clone()).or_default().push(i);
            }
        }
        Search {
            scorer: Scorer::new(model),
            tokens,
            n,
            derivs: Vec::new(),
            items: Vec::new(),
            item_ids: HashMap::new(),
            by_start: HashMap::new(),
            by_end: HashMap::new(),
            agenda: BinaryHeap::new(),
            seq: 0,
            pruned: false,
            unary_by_child,
            binary_by_left,
            binary_by_right,
        }
    }

    fn push(&mut self, symbol: Symbol, start: usize, end: usize, score: f64, head: HeadInfo, step: Step) {
        let key = ItemKey {
            symbol,
            start,
            end,
            head: head.synset.clone(),
            prep: head.prep,
        };
        let item = match self.item_ids.get(&key) {
            Some(&id) => id,
            None => {
                let id = self.items.len();
                self.items.push(Item {
                    key: key.clone(),
                    accepted: Vec::new(),
                });
                self.item_ids.insert(key, id);
                id
            }
        };
        let deriv = self.derivs.len();
        self.derivs.push(Deriv { item, score, head, step });
        self.agenda.push(Pending {
            score,
            seq: self.seq,
            deriv,
        });
        self.seq += 1;
    }

    fn seed(&mut self) {
        for (t, analysis) in self.tokens.iter().enumerate() {
            for (o, option) in analysis.options.iter().enumerate() {
                let head = Scorer::leaf(option, t);
                self.push(
                    Symbol::Lexical(option.class),
                    t,
                    t + 1,
                    0.0,
                    head,
                    Step::Leaf { token: t, option: o },
                );
            }
        }
    }

    /// Accepts a popped derivation if its item still has room, and returns
    /// whether it was accepted.
    fn accept(&mut self, deriv: usize) -> bool {
        let d = &self.derivs[deriv];
        let item = &mut self.items[d.item];
        if item.accepted.len() >= self.n {
            let nth = self.derivs[item.accepted[self.n - 1]].score;
            if d.score < nth {
                self.pruned = true;
                return false;
            }
        }
        let first = item.accepted.is_empty();
        item.accepted.push(deriv);
        if first {
            let k = &item.key;
            let id = d.item;
            self.by_start.entry((k.symbol.clone(), k.start)).or_default().push(id);
            self.by_end.entry((k.symbol.clone(), k.end)).or_default().push(id);
        }
        true
    }

    fn expand(&mut self, deriv: usize) -> Result<(), ParseError> {
        let (symbol, start, end) = {
            let k = &self.items[self.derivs[deriv].item].key;
            (k.symbol.clone(), k.start, k.end)
        };
        let score = self.derivs[deriv].score;
        let head = self.derivs[deriv].head.clone();
        for rule in self.unary_by_child.get(&symbol).cloned().unwrap_or_default() {
            let lhs = Symbol::Category(self.scorer.rule(rule).lhs.clone());
            let s = unary_score(score, self.scorer.unary_add(rule));
            self.push(lhs, start, end, s, head.clone(), Step::Unary { rule, child: deriv });
        }
        for rule in self.binary_by_left.get(&symbol).cloned().unwrap_or_default() {
            let right_symbol = self.scorer.rule(rule).rhs[1].clone();
            let partners = self.by_start.get(&(right_symbol, end)).cloned().unwrap_or_default();
            for item in partners {
                for other in self.items[item].accepted.clone() {
                    self.combine(rule, deriv, other)?;
                }
            }
        }
        for rule in self.binary_by_right.get(&symbol).cloned().unwrap_or_default() {
            let left_symbol = self.scorer.rule(rule).rhs[0].clone();
            let partners = self.by_end.get(&(left_symbol, start)).cloned().unwrap_or_default();
            for item in partners {
                for other in self.items[item].accepted.clone() {
                    self.combine(rule, other, deriv)?;
                }
            }
        }
        Ok(())
    }

    fn combine(&mut self, rule: usize, left: usize, right: usize) -> Result<(), ParseError> {
        let (l, r) = (&self.derivs[left], &self.derivs[right]);
        let c = self.scorer.binary(rule, &l.head, &r.head)?;
        let score = binary_score(l.score, r.score, c.add);
        let start = self.items[l.item].key.start;
        let end = self.items[r.item].key.end;
        let lhs = Symbol::Category(self.scorer.rule(rule).lhs.clone());
        self.push(
            lhs,
            start,
            end,
            score,
            c.head,
            Step::Binary {
                rule,
                left,
                right,
                relation: c.relation,
                stat_key: c.stat_key,
            },
        );
        Ok(())
    }

    fn build(&self, deriv: usize) -> ParseNode {
        let d = &self.derivs[deriv];
        match &d.step {
            Step::Leaf { token, option } => {
                let a = &self.tokens[*token];
                leaf_node(&a.options[*option], &a.token, *token)
            }
            Step::Unary { rule, child } => unary_node(&self.scorer, *rule, self.build(*child)),
            Step::Binary {
                rule,
                left,
                right,
                relation,
                stat_key,
            } => {
                let c = super::Combined {
                    add: 0.0,
                    head: d.head.clone(),
                    relation: relation.clone(),
                    stat_key: stat_key.clone(),
                };
                let mut node = binary_node(&self.scorer, *rule, self.build(*left), self.build(*right), c);
                node.score = d.score;
                node
            }
        }
    }
}

/// Up to `n` best parses, best first, found by best-first search that stops
/// once nothing left on the agenda can beat the N-th complete parse. Ties at
/// the cut-off are resolved by [`ParseNode::rank_cmp`].
pub fn nbest_parse(model: &Model, tokens: &[TokenAnalysis], n: usize) -> Result<ParseResult, ParseError> {
    if tokens.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    if n == 0 {
        return Err(ParseError::ZeroRequested);
    }
    let goal = Symbol::Category(model.grammar.start().to_string());
    let len = tokens.len();
    let mut search = Search::new(model, tokens, n);
    search.seed();
    let mut goals: Vec<usize> = Vec::new();
    let mut stopped = false;
    while let Some(top) = search.agenda.pop() {
        if goals.len() >= n && top.score < search.derivs[goals[n - 1]].score {
            stopped = true;
            break;
        }
        if !search.accept(top.deriv) {
            continue;
        }
        let key = &search.items[search.derivs[top.deriv].item].key;
        if key.symbol == goal && key.start == 0 && key.end == len {
            goals.push(top.deriv);
        }
        search.expand(top.deriv)?;
    }
    if goals.is_empty() {
        let longest_prefix = search
            .items
            .iter()
            .filter(|i| i.key.start == 0 && !i.accepted.is_empty() && matches!(i.key.symbol, Symbol::Category(_)))
            .map(|i| i.key.end)
            .max()
            .unwrap_or(0);
        return Err(ParseError::NoParse {
            tokens: len,
            longest_prefix,
        });
    }
    let mut trees: Vec<ParseNode> = goals.iter().map(|&d| search.build(d)).collect();
    trees.sort_by(|a, b| a.rank_cmp(b));
    let exhausted = !stopped && !search.pruned && trees.len() <= n;
    trees.truncate(n);
    Ok(ParseResult { trees, exhausted })
}
