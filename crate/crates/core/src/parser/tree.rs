use std::cmp::Ordering;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::grammar::LexClass;
use crate::lexicon::{PrepClass, SynsetId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    Leaf {
        class: LexClass,
        token: String,
        frequency_rank: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        prep_class: Option<PrepClass>,
    },
    Rule {
        rule: String,
        /// Relation after preposition specialisation; absent on unary nodes.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        relation: Option<String>,
        /// Key the co-occurrence statistics are stored under.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stat_key: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParseNode {
    pub category: String,
    pub span: (usize, usize),
    pub head: SynsetId,
    pub head_token: usize,
    pub score: f64,
    #[serde(flatten)]
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ParseNode>,
}

impl ParseNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn rule_id(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Rule { rule, .. } => Some(rule),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn relation(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Rule { relation, .. } => relation.as_deref(),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn leaf_class(&self) -> Option<LexClass> {
        match &self.kind {
            NodeKind::Leaf { class, .. } => Some(*class),
            NodeKind::Rule { .. } => None,
        }
    }

    /// Leaves in token order.
    pub fn leaves(&self) -> Vec<&ParseNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a ParseNode>) {
        if self.is_leaf() {
            out.push(self);
        }
        for c in &self.children {
            c.collect_leaves(out);
        }
    }

    /// Every node in preorder.
    pub fn preorder(&self) -> Vec<&ParseNode> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let node = out[i];
            i += 1;
            let at = i;
            for (k, c) in node.children.iter().enumerate() {
                out.insert(at + k, c);
            }
        }
        out
    }

    pub fn frequency_rank_sum(&self) -> u64 {
        self.leaves()
            .iter()
            .map(|l| match &l.kind {
                NodeKind::Leaf { frequency_rank, .. } => *frequency_rank as u64,
                NodeKind::Rule { .. } => 0,
            })
            .sum()
    }

    fn structure_key(&self) -> Vec<(usize, usize, &str, &str)> {
        self.preorder()
            .into_iter()
            .map(|n| {
                let label = match &n.kind {
                    NodeKind::Rule { stat_key: Some(k), .. } => k.as_str(),
                    NodeKind::Rule { rule, .. } => rule.as_str(),
                    NodeKind::Leaf { class, .. } => class.name(),
                };
                (n.span.0, n.span.1, label, n.head.as_str())
            })
            .collect()
    }

    /// Total order used for ranking: score descending, then lower summed
    /// frequency rank, then span/rule/sense structure.
    pub fn rank_cmp(&self, other: &ParseNode) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.frequency_rank_sum().cmp(&other.frequency_rank_sum()))
            .then_with(|| self.structure_key().cmp(&other.structure_key()))
    }

    /// `(CAT head=<synset> score=<float> child child)`; leaves carry their
    /// token in quotes.
    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.write_bracketed(&mut out);
        out
    }

    /// The bracketed form without scores; equal shapes mean the same
    /// analysis regardless of the counts it was scored under.
    pub fn shape(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, false);
        out
    }

    fn write_bracketed(&self, out: &mut String) {
        self.write(out, true);
    }

    fn write(&self, out: &mut String, scores: bool) {
        let _ = write!(out, "({} head={}", self.category, self.head);
        if scores {
            let _ = write!(out, " score={}", self.score);
        }
        match &self.kind {
            NodeKind::Leaf { token, .. } => {
                out.push_str(" \"");
                for c in token.chars() {
                    if c == '"' || c == '\\' {
                        out.push('\\');
                    }
                    out.push(c);
                }
                out.push('"');
            }
            NodeKind::Rule { .. } => {
                for c in &self.children {
                    out.push(' ');
                    c.write(out, scores);
                }
            }
        }
        out.push(')');
    }
}

impl fmt::Display for ParseNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracketed())
    }
}

/// Unvalidated shape read back from the bracketed form.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum RawTree {
    Leaf { category: String, head: String, token: String },
    Node { category: String, children: Vec<RawTree> },
}

pub(crate) fn parse_bracketed(text: &str) -> Result<RawTree, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let tree = parse_raw(&chars, &mut pos)?;
    skip_ws(&chars, &mut pos);
    if pos != chars.len() {
        return Err(format!("trailing text at offset {pos}"));
    }
    Ok(tree)
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while chars.get(*pos).is_some_and(|c| c.is_whitespace()) {
        *pos += 1;
    }
}

fn atom(chars: &[char], pos: &mut usize) -> String {
    let start = *pos;
    while chars
        .get(*pos)
        .is_some_and(|c| !c.is_whitespace() && *c != '(' && *c != ')' && *c != '"')
    {
        *pos += 1;
    }
    chars[start..*pos].iter().collect()
}

fn parse_raw(chars: &[char], pos: &mut usize) -> Result<RawTree, String> {
    skip_ws(chars, pos);
    if chars.get(*pos) != Some(&'(') {
        return Err(format!("expected `(` at offset {pos}"));
    }
    *pos += 1;
    let category = atom(chars, pos);
    if category.is_empty() {
        return Err(format!("missing category at offset {pos}"));
    }
    let mut head = None;
    let mut children = Vec::new();
    let mut token = None;
    loop {
        skip_ws(chars, pos);
        match chars.get(*pos) {
            None => return Err("unterminated tree".into()),
            Some(')') => {
                *pos += 1;
                break;
            }
            Some('(') => children.push(parse_raw(chars, pos)?),
            Some('"') => {
                *pos += 1;
                let mut t = String::new();
                loop {
                    match chars.get(*pos) {
                        None => return Err("unterminated token".into()),
                        Some('\\') => {
                            t.extend(chars.get(*pos + 1));
                            *pos += 2;
                        }
                        Some('"') => {
                            *pos += 1;
                            break;
                        }
                        Some(c) => {
                            t.push(*c);
                            *pos += 1;
                        }
                    }
                }
                token = Some(t);
            }
            Some(_) => {
                let a = atom(chars, pos);
                match a.split_once('=') {
                    Some(("head", v)) => head = Some(v.to_string()),
                    Some(("score", _)) => {}
                    _ => return Err(format!("unexpected `{a}`")),
                }
            }
        }
    }
    match (token, children.is_empty()) {
        (Some(token), true) => Ok(RawTree::Leaf {
            category,
            head: head.ok_or("leaf without head")?,
            token,
        }),
        (None, false) => Ok(RawTree::Node { category, children }),
        _ => Err(format!("node `{category}` must have either a token or children")),
    }
}
