//! Operations shared by the command line and the HTTP service, so both
//! produce the same results for the same input.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;

use caption_core::counts::CountStore;
use caption_core::grammar::Grammar;
use caption_core::model::{self, DataDir, Model};
use caption_core::parser::{NodeKind, ParseError, ParseNode};
use caption_core::retrieval::{self, CaptionIndex, MatchBinding, RetrievalError};
use caption_core::semantics::{self, MeaningList, UnknownWord};
use caption_core::trainer::{Proposal, ReviewSession};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Workspace {
    pub dir: DataDir,
    pub config: Option<PathBuf>,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>, config: Option<PathBuf>) -> Workspace {
        Workspace {
            dir: DataDir::new(root),
            config,
        }
    }

    pub fn load_model(&self) -> anyhow::Result<Model> {
        Model::load(&self.dir, self.config.as_deref())
            .with_context(|| format!("loading data directory {}", self.dir.root.display()))
    }

    pub fn corpus(&self, path: Option<&Path>) -> anyhow::Result<Vec<(String, String)>> {
        let path = path.map_or_else(|| self.dir.corpus(), Path::to_path_buf);
        let text = model::read(&path)?;
        retrieval::parse_corpus(&text).with_context(|| format!("reading {}", path.display()))
    }

    /// The saved index, or one built in memory from the data corpus when
    /// none has been saved.
    pub fn load_index(&self, model: &Model) -> anyhow::Result<CaptionIndex> {
        let dir = self.dir.index_dir();
        if dir.join("records.json").exists() {
            return CaptionIndex::load(&dir, &model.lexicon).with_context(|| format!("loading {}", dir.display()));
        }
        let mut index = CaptionIndex::new();
        if self.dir.corpus().exists() {
            index.index_corpus(model, &model::read(&self.dir.corpus())?)?;
        }
        Ok(index)
    }

    pub fn lock(&self) -> anyhow::Result<SessionLock> {
        SessionLock::acquire(self.dir.session_lock())
    }

    /// Opens the review session. An existing journal is replayed on top of
    /// the counts saved when it was started; otherwise the current counts
    /// become that starting point.
    pub fn open_session(&self, _lock: &SessionLock) -> anyhow::Result<(Model, ReviewSession)> {
        let mut model = self.load_model()?;
        let captions = self.corpus(None)?;
        let base = self.dir.session_base();
        let journal = self.dir.journal();
        if journal.exists() {
            if !base.exists() {
                bail!("{} exists but {} is missing", journal.display(), base.display());
            }
            model.counts = CountStore::load(&model::read(&base.join("counts.txt"))?)?;
            model.grammar = Grammar::load(&model::read(&base.join("grammar.txt"))?)?;
            let session = ReviewSession::replay(&mut model, captions, &model::read(&journal)?)
                .with_context(|| format!("replaying {}", journal.display()))?;
            Ok((model, session))
        } else {
            model::write(&base.join("counts.txt"), &model.counts.to_text())?;
            model::write(&base.join("grammar.txt"), &model.grammar.to_text())?;
            Ok((model, ReviewSession::new(captions)))
        }
    }

    pub fn save_session(&self, model: &Model, session: &ReviewSession) -> anyhow::Result<()> {
        model::write(&self.dir.journal(), &session.journal_text())?;
        model.save_counts(&self.dir)?;
        Ok(())
    }
}

/// Exclusive right to run a review session on a data directory; released
/// on drop.
#[derive(Debug)]
pub struct SessionLock {
    path: PathBuf,
}

impl SessionLock {
    fn acquire(path: PathBuf) -> anyhow::Result<SessionLock> {
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(SessionLock { path }),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => bail!(
                "another review session holds {}; remove it if no session is running",
                path.display()
            ),
            Err(e) => Err(e).with_context(|| format!("creating {}", path.display())),
        }
    }
}

impl Drop for SessionLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParseEntry {
    pub rank: usize,
    pub score: f64,
    pub bracketed: String,
    pub tree: ParseNode,
    pub meaning: MeaningList,
    pub meaning_text: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParseReport {
    pub text: String,
    pub tokens: Vec<String>,
    pub unknown: Vec<UnknownWord>,
    pub exhausted: bool,
    pub parses: Vec<ParseEntry>,
}

pub fn parse_report(model: &Model, text: &str, n: usize) -> Result<ParseReport, ParseError> {
    let (analysis, result) = semantics::parse_caption(model, text, n)?;
    let mut parses = Vec::new();
    for (i, tree) in result.trees.into_iter().enumerate() {
        let meaning = semantics::meaning_list(&tree)?;
        parses.push(ParseEntry {
            rank: i + 1,
            score: tree.score,
            bracketed: tree.to_bracketed(),
            meaning_text: meaning.to_text(),
            meaning,
            tree,
        });
    }
    Ok(ParseReport {
        text: text.to_string(),
        tokens: analysis.tokens.into_iter().map(|t| t.token).collect(),
        unknown: analysis.unknown,
        exhausted: result.exhausted,
        parses,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QueryHit {
    pub rank: usize,
    pub caption_id: String,
    pub text: String,
    pub matched_predicates: usize,
    pub best_score: f64,
    pub binding: MatchBinding,
}

pub fn query_report(model: &Model, index: &CaptionIndex, text: &str, k: usize) -> Result<Vec<QueryHit>, RetrievalError> {
    Ok(index
        .search(model, text, k)?
        .into_iter()
        .enumerate()
        .map(|(i, h)| QueryHit {
            rank: i + 1,
            text: index.get(&h.caption_id).map(|r| r.text.clone()).unwrap_or_default(),
            caption_id: h.caption_id,
            matched_predicates: h.matched_predicates,
            best_score: h.best_score,
            binding: h.binding,
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ProposalView {
    pub caption_id: String,
    pub text: String,
    pub rank: usize,
    pub score: f64,
    pub bracketed: String,
    pub tree: ParseNode,
    pub meaning: MeaningList,
    pub meaning_text: String,
    pub unknown: Vec<UnknownWord>,
}

impl From<Proposal> for ProposalView {
    fn from(p: Proposal) -> Self {
        ProposalView {
            caption_id: p.caption_id,
            text: p.text,
            rank: p.rank,
            score: p.tree.score,
            bracketed: p.tree.to_bracketed(),
            meaning_text: p.meaning.to_text(),
            meaning: p.meaning,
            tree: p.tree,
            unknown: p.unknown,
        }
    }
}

/// Identifies the proposal a client is looking at, so actions taken on a
/// stale view can be refused.
pub fn proposal_token(session: &ReviewSession) -> Option<String> {
    session.pending().map(|p| format!("{}:{}", session.cursor(), p.rank))
}

#[derive(Clone, Debug, Serialize)]
pub struct StoreStats {
    pub pairs: usize,
    pub unary_entries: usize,
    pub total_instances: u64,
    pub grammar_rules: usize,
}

pub fn store_stats(model: &Model) -> StoreStats {
    StoreStats {
        pairs: model.counts.len(),
        unary_entries: model.counts.unary_counts().count(),
        total_instances: model.counts.total_instances(),
        grammar_rules: model.grammar.rules().len(),
    }
}

/// Multi-line rendering of a tree, one node per line.
pub fn render_tree(tree: &ParseNode) -> String {
    let mut out = String::new();
    render_into(tree, 0, &mut out);
    out
}

fn render_into(node: &ParseNode, depth: usize, out: &mut String) {
    out.push_str(&"  ".repeat(depth));
    out.push_str(&node.category);
    out.push(' ');
    out.push_str(node.head.as_str());
    if let Some(rel) = node.relation() {
        out.push_str(" [");
        out.push_str(rel);
        out.push(']');
    }
    if let NodeKind::Leaf { token, .. } = &node.kind {
        out.push_str(&format!(" {token:?}"));
    }
    out.push_str(&format!(" {:.4}\n", node.score));
    for c in &node.children {
        render_into(c, depth + 1, out);
    }
}
