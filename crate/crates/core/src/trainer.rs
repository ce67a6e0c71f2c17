//! Interactive review of candidate parses and batch training from gold
//! trees. Both paths feed the same increments into the model.

use std::fmt;

use serde::Serialize;

use crate::counts::CountsError;
use crate::grammar::GrammarError;
use crate::model::Model;
use crate::parser::{self, NodeKind, ParseError, ParseNode};
use crate::semantics::{self, MeaningList, UnknownWord};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TrainError {
    #[error("no proposal is outstanding; request the next candidate first")]
    NoProposal,
    #[error("journal line {line}: {message}")]
    Journal { line: usize, message: String },
    #[error("journal line {line}: expected caption `{expected}`, found `{found}`")]
    JournalMismatch { line: usize, expected: String, found: String },
    #[error("gold line {line}: expected `<caption-id>\\t<tree>`")]
    GoldSyntax { line: usize },
    #[error("gold line {line}: {source}")]
    Gold { line: usize, source: ParseError },
    #[error("unknown statistic key `{0}`")]
    UnknownStatKey(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Counts(#[from] CountsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Requested,
    Unparsable,
    /// Every candidate up to the review depth was rejected.
    DepthExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum Decision {
    Accepted { caption_id: String, rank: usize },
    Skipped { caption_id: String, reason: SkipReason },
}

impl Decision {
    pub fn caption_id(&self) -> &str {
        match self {
            Decision::Accepted { caption_id, .. } | Decision::Skipped { caption_id, .. } => caption_id,
        }
    }
}

/// One journal line: `<caption-id> <rank|skip>`.
impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Accepted { caption_id, rank } => write!(f, "{caption_id} {rank}"),
            Decision::Skipped { caption_id, .. } => write!(f, "{caption_id} skip"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Proposal {
    pub caption_id: String,
    pub text: String,
    /// 1-based position of this candidate in the ranking.
    pub rank: usize,
    pub tree: ParseNode,
    pub meaning: MeaningList,
    pub unknown: Vec<UnknownWord>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub total_reviewed: usize,
    pub first_try_accepted: usize,
    pub accepted: usize,
    pub skipped: usize,
}

impl Counters {
    /// Share of reviewed captions whose top candidate was accepted.
    pub fn first_try_accuracy(&self) -> Option<f64> {
        (self.total_reviewed > 0).then(|| self.first_try_accepted as f64 / self.total_reviewed as f64)
    }
}

#[derive(Clone, Debug)]
struct Candidates {
    cursor: usize,
    unknown: Vec<UnknownWord>,
    trees: Vec<ParseNode>,
}

/// Walks a corpus caption by caption. The model is passed into each call so
/// the owner decides how it is shared.
#[derive(Clone, Debug)]
pub struct ReviewSession {
    captions: Vec<(String, String)>,
    cursor: usize,
    rank: usize,
    candidates: Option<Candidates>,
    pending: Option<Proposal>,
    decisions: Vec<Decision>,
    counters: Counters,
}

impl ReviewSession {
    pub fn new(captions: Vec<(String, String)>) -> ReviewSession {
        ReviewSession {
            captions,
            cursor: 0,
            rank: 1,
            candidates: None,
            pending: None,
            decisions: Vec::new(),
            counters: Counters::default(),
        }
    }

    /// Rebuilds a session by replaying a journal against `model`, applying
    /// every accepted tree again.
    pub fn replay(model: &mut Model, captions: Vec<(String, String)>, journal: &str) -> Result<ReviewSession, TrainError> {
        let mut session = ReviewSession::new(captions);
        for (i, raw) in journal.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let (id, action) = raw.split_once(' ').ok_or_else(|| TrainError::Journal {
                line,
                message: format!("expected `<caption-id> <rank|skip>`, found `{raw}`"),
            })?;
            let Some((expected, _)) = session.captions.get(session.cursor) else {
                return Err(TrainError::Journal {
                    line,
                    message: "journal is longer than the corpus".into(),
                });
            };
            if expected != id {
                return Err(TrainError::JournalMismatch {
                    line,
                    expected: expected.clone(),
                    found: id.to_string(),
                });
            }
            if action == "skip" {
                session.record_skip(SkipReason::Requested);
                continue;
            }
            let rank: usize = action.parse().ok().filter(|&r| r >= 1).ok_or_else(|| TrainError::Journal {
                line,
                message: format!("bad rank `{action}`"),
            })?;
            let text = session.captions[session.cursor].1.clone();
            let depth = model.config.review_depth.max(rank);
            let (analysis, result) = semantics::parse_caption(model, &text, depth).map_err(|e| TrainError::Journal {
                line,
                message: e.to_string(),
            })?;
            let Some(tree) = result.trees.into_iter().nth(rank - 1) else {
                return Err(TrainError::Journal {
                    line,
                    message: format!("caption `{id}` has fewer than {rank} parses"),
                });
            };
            session.rank = rank;
            session.pending = Some(Proposal {
                caption_id: id.to_string(),
                text,
                rank,
                meaning: semantics::meaning_list(&tree)?,
                tree,
                unknown: analysis.unknown,
            });
            session.accept(model)?;
        }
        Ok(session)
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn journal_text(&self) -> String {
        self.decisions.iter().map(|d| format!("{d}\n")).collect()
    }

    /// Index of the caption under review; equals the corpus size when done.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn corpus_len(&self) -> usize {
        self.captions.len()
    }

    pub fn is_finished(&self) -> bool {
        self.cursor >= self.captions.len()
    }

    pub fn pending(&self) -> Option<&Proposal> {
        self.pending.as_ref()
    }

    /// The candidate currently up for review, or `None` once the corpus is
    /// exhausted. Captions that cannot be parsed, and captions whose
    /// candidates have all been rejected, are skipped on the way.
    pub fn propose(&mut self, model: &Model) -> Result<Option<Proposal>, TrainError> {
        if let Some(p) = &self.pending {
            return Ok(Some(p.clone()));
        }
        loop {
            let Some((id, text)) = self.captions.get(self.cursor).cloned() else {
                return Ok(None);
            };
            if self.candidates.as_ref().is_none_or(|c| c.cursor != self.cursor) {
                match semantics::parse_caption(model, &text, model.config.review_depth.max(1)) {
                    Ok((analysis, result)) => {
                        self.candidates = Some(Candidates {
                            cursor: self.cursor,
                            unknown: analysis.unknown,
                            trees: result.trees,
                        })
                    }
                    Err(ParseError::NoParse { .. } | ParseError::EmptyInput) => {
                        self.record_skip(SkipReason::Unparsable);
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let candidates = self.candidates.as_ref().expect("filled above");
            let Some(tree) = candidates.trees.get(self.rank - 1).cloned() else {
                self.record_skip(SkipReason::DepthExhausted);
                continue;
            };
            let proposal = Proposal {
                caption_id: id,
                text,
                rank: self.rank,
                meaning: semantics::meaning_list(&tree)?,
                tree,
                unknown: candidates.unknown.clone(),
            };
            self.pending = Some(proposal.clone());
            return Ok(Some(proposal));
        }
    }

    /// Accepts the outstanding proposal and trains the model on it.
    pub fn accept(&mut self, model: &mut Model) -> Result<Decision, TrainError> {
        let proposal = self.pending.as_ref().ok_or(TrainError::NoProposal)?;
        apply_tree(model, &proposal.tree)?;
        let proposal = self.pending.take().expect("checked above");
        let decision = Decision::Accepted {
            caption_id: proposal.caption_id,
            rank: proposal.rank,
        };
        self.counters.total_reviewed += 1;
        self.counters.accepted += 1;
        if proposal.rank == 1 {
            self.counters.first_try_accepted += 1;
        }
        self.decisions.push(decision.clone());
        self.advance();
        Ok(decision)
    }

    /// Rejects the outstanding proposal; returns the rank the next proposal
    /// for this caption would have.
    pub fn reject(&mut self) -> Result<usize, TrainError> {
        self.pending.take().ok_or(TrainError::NoProposal)?;
        self.rank += 1;
        Ok(self.rank)
    }

    pub fn skip(&mut self) -> Result<Decision, TrainError> {
        self.pending.take().ok_or(TrainError::NoProposal)?;
        Ok(self.record_skip(SkipReason::Requested))
    }

    fn record_skip(&mut self, reason: SkipReason) -> Decision {
        let decision = Decision::Skipped {
            caption_id: self.captions[self.cursor].0.clone(),
            reason,
        };
        self.counters.total_reviewed += 1;
        self.counters.skipped += 1;
        self.decisions.push(decision.clone());
        self.advance();
        decision
    }

    fn advance(&mut self) {
        self.cursor += 1;
        self.rank = 1;
        self.candidates = None;
        self.pending = None;
    }
}

/// Adds one observation of `tree` to the model: every rule used, every
/// head/dependent pair under its statistic key and every leaf sense. Nothing
/// changes if any increment fails.
pub fn apply_tree(model: &mut Model, tree: &ParseNode) -> Result<(), TrainError> {
    let mut grammar = model.grammar.clone();
    let mut counts = model.counts.clone();
    for node in tree.preorder() {
        match &node.kind {
            NodeKind::Rule { rule, stat_key, .. } => {
                grammar.increment(rule, 1)?;
                let Some(key) = stat_key else { continue };
                if !model.is_stat_key(key) {
                    return Err(TrainError::UnknownStatKey(key.clone()));
                }
                let head_pos = model.grammar.rule(rule).map_or(1, |r| r.head);
                let dep = match (head_pos, node.children.as_slice()) {
                    (1, [_, d]) | (2, [d, _]) => &d.head,
                    _ => return Err(ParseError::Malformed(format!("node `{}` is not binary", node.category)).into()),
                };
                counts.increment_pair(&model.lexicon, &model.config, key, &node.head, dep, 1)?;
            }
            NodeKind::Leaf { .. } => counts.increment_unary(&model.lexicon, &model.config, &node.head, 1)?,
        }
    }
    model.grammar = grammar;
    model.counts = counts;
    Ok(())
}

/// Reads `<caption-id>\t<bracketed tree>` lines.
pub fn parse_gold(text: &str) -> Result<Vec<(usize, String, String)>, TrainError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (id, tree) = line.split_once('\t').ok_or(TrainError::GoldSyntax { line: i + 1 })?;
        if id.trim().is_empty() {
            return Err(TrainError::GoldSyntax { line: i + 1 });
        }
        out.push((i + 1, id.trim().to_string(), tree.trim().to_string()));
    }
    Ok(out)
}

/// Trains on every gold tree. All trees are validated before any is
/// applied, so a bad line leaves the model untouched. Returns the number of
/// trees applied.
pub fn batch_train(model: &mut Model, gold: &str) -> Result<usize, TrainError> {
    let mut trees = Vec::new();
    for (line, _, text) in parse_gold(gold)? {
        let tree = parser::tree_from_bracketed(model, &text).map_err(|source| TrainError::Gold { line, source })?;
        trees.push(tree);
    }
    let mut staged = model.clone();
    for tree in &trees {
        apply_tree(&mut staged, tree)?;
    }
    *model = staged;
    Ok(trees.len())
}
