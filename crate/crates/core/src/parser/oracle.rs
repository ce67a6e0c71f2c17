use std::collections::{BTreeMap, HashMap};

use super::{binary_node, leaf_node, unary_node, HeadInfo, ParseError, ParseNode, Scorer, TokenAnalysis};
use crate::grammar::Symbol;
use crate::lexicon::PrepClass;
use crate::model::Model;

type Cell = HashMap<Symbol, Vec<(ParseNode, Option<PrepClass>)>>;

/// Symbols ordered so that every unary rule's child precedes its parent.
fn unary_order(model: &Model) -> Vec<Symbol> {
    let rules: Vec<_> = model.grammar.rules().iter().filter(|r| !r.is_binary()).collect();
    let mut indegree: BTreeMap<Symbol, usize> = BTreeMap::new();
    for r in &rules {
        indegree.entry(r.rhs[0].clone()).or_insert(0);
        *indegree.entry(Symbol::Category(r.lhs.clone())).or_insert(0) += 1;
    }
    let mut order = Vec::new();
    let mut ready: Vec<Symbol> = indegree.iter().filter(|(_, d)| **d == 0).map(|(s, _)| s.clone()).collect();
    while let Some(s) = ready.pop() {
        for r in rules.iter().filter(|r| r.rhs[0] == s) {
            let lhs = Symbol::Category(r.lhs.clone());
            let d = indegree.get_mut(&lhs).expect("counted");
            *d -= 1;
            if *d == 0 {
                ready.push(lhs);
            }
        }
        order.push(s);
    }
    order
}

/// Every complete parse, by dynamic programming over all spans, rules and
/// leaf options, in ranking order.
pub fn exhaustive_parses(model: &Model, tokens: &[TokenAnalysis]) -> Result<Vec<ParseNode>, ParseError> {
    let len = tokens.len();
    let cap = model.config.oracle_cap;
    if len > cap {
        return Err(ParseError::OracleCap { len, cap });
    }
    if len == 0 {
        return Ok(Vec::new());
    }
    let scorer = Scorer::new(model);
    let rules = model.grammar.rules();
    let order = unary_order(model);
    let mut chart: HashMap<(usize, usize), Cell> = HashMap::new();
    for width in 1..=len {
        for start in 0..=len - width {
            let end = start + width;
            let mut cell: Cell = HashMap::new();
            if width == 1 {
                let a = &tokens[start];
                for option in &a.options {
                    let prep = Scorer::leaf(option, start).prep;
                    cell.entry(Symbol::Lexical(option.class))
                        .or_default()
                        .push((leaf_node(option, &a.token, start), prep));
                }
            }
            for mid in start + 1..end {
                let (Some(left), Some(right)) = (chart.get(&(start, mid)), chart.get(&(mid, end))) else {
                    continue;
                };
                for (ri, rule) in rules.iter().enumerate().filter(|(_, r)| r.is_binary()) {
                    let (Some(ls), Some(rs)) = (left.get(&rule.rhs[0]), right.get(&rule.rhs[1])) else {
                        continue;
                    };
                    for (l, lp) in ls {
                        for (r, rp) in rs {
                            let lh = HeadInfo {
                                synset: l.head.clone(),
                                token: l.head_token,
                                prep: *lp,
                            };
                            let rh = HeadInfo {
                                synset: r.head.clone(),
                                token: r.head_token,
                                prep: *rp,
                            };
                            let c = scorer.binary(ri, &lh, &rh)?;
                            let prep = c.head.prep;
                            let node = binary_node(&scorer, ri, l.clone(), r.clone(), c);
                            cell.entry(Symbol::Category(rule.lhs.clone())).or_default().push((node, prep));
                        }
                    }
                }
            }
            for symbol in &order {
                let Some(children) = cell.get(symbol).cloned() else {
                    continue;
                };
                for (ri, rule) in rules.iter().enumerate() {
                    if rule.is_binary() || &rule.rhs[0] != symbol {
                        continue;
                    }
                    for (child, prep) in &children {
                        let node = unary_node(&scorer, ri, child.clone());
                        cell.entry(Symbol::Category(rule.lhs.clone())).or_default().push((node, *prep));
                    }
                }
            }
            chart.insert((start, end), cell);
        }
    }
    let goal = Symbol::Category(model.grammar.start().to_string());
    let mut out: Vec<ParseNode> = chart
        .remove(&(0, len))
        .and_then(|mut c| c.remove(&goal))
        .unwrap_or_default()
        .into_iter()
        .map(|(n, _)| n)
        .collect();
    out.sort_by(|a, b| a.rank_cmp(b));
    Ok(out)
}
