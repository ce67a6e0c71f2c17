//! Caption index and query matching over meaning lists.
//!
//! A query matches a caption when some interpretation of the query maps
//! into some interpretation of the caption: every query variable binds to a
//! distinct caption variable whose type is the same as, below, or one part
//! hop away from the query type, and every property and relation carries
//! over under the binding.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lexicon::{Lexicon, SynsetId};
use crate::model::{self, Model, ModelError};
use crate::parser::ParseError;
use crate::semantics::{self, Interpretation, MeaningList, Predicate, Var};

/// Relation linking a verb to its object in either direction.
pub const VERBAL_OBJECT: &str = "verbal-object";

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("caption id `{0}` is already indexed")]
    DuplicateId(String),
    #[error("caption `{0}` has no text")]
    EmptyText(String),
    #[error("corpus line {line}: expected `<caption-id>\\t<text>`")]
    CorpusSyntax { line: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("query: {0}")]
    Query(ParseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("index file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub id: String,
    pub text: String,
    pub interpretations: Vec<MeaningList>,
    pub best_score: Option<f64>,
    /// Parser diagnostic when the caption could not be parsed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchBinding {
    pub vars: BTreeMap<Var, Var>,
    pub query_interpretation: usize,
    pub caption_interpretation: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchHit {
    pub caption_id: String,
    pub matched_predicates: usize,
    pub best_score: f64,
    pub binding: MatchBinding,
}

fn is_relation_verb(lex: &Lexicon, synset: &SynsetId) -> Option<String> {
    lex.generalizations(synset)
        .ok()?
        .iter()
        .find_map(|(s, _)| lex.relation_verb(s).map(String::from))
}

/// Collapses relation verbs: when a verb like "mounted" links an object X
/// to a location Y through its own relation label L, the verb variable is
/// replaced by L(X, Y).
pub fn canonicalize(meaning: &MeaningList, lex: &Lexicon) -> MeaningList {
    let mut preds = meaning.predicates.clone();
    let verbs: Vec<(Var, String)> = meaning
        .variables()
        .into_iter()
        .filter_map(|v| meaning.kind_of(v).and_then(|s| is_relation_verb(lex, s)).map(|l| (v, l)))
        .collect();
    for (v, label) in verbs {
        let mut objects = BTreeSet::new();
        let mut places = BTreeSet::new();
        for p in &preds {
            if let Predicate::Relation { label: l, head, dep } = p {
                if l == VERBAL_OBJECT && *head == v {
                    objects.insert(*dep);
                } else if l == VERBAL_OBJECT && *dep == v {
                    objects.insert(*head);
                } else if *l == label && *head == v {
                    places.insert(*dep);
                }
            }
        }
        if objects.is_empty() || places.is_empty() {
            continue;
        }
        preds.retain(|p| match p {
            Predicate::AKindOf { var, .. } | Predicate::Property { var, .. } => *var != v,
            Predicate::Relation { head, dep, .. } => *head != v && *dep != v,
        });
        for x in &objects {
            for y in &places {
                if x != y {
                    preds.insert(Predicate::Relation {
                        label: label.clone(),
                        head: *x,
                        dep: *y,
                    });
                }
            }
        }
    }
    MeaningList { predicates: preds }
}

/// A caption entity of type `found` satisfies a query for `wanted` if it is
/// `wanted` or below it, or is (a kind of) a part of something that is.
pub fn type_satisfies(lex: &Lexicon, found: &SynsetId, wanted: &SynsetId) -> bool {
    if lex.is_a(found, wanted) {
        return true;
    }
    let Ok(gens) = lex.generalizations(found) else {
        return found == wanted;
    };
    gens.iter()
        .flat_map(|(g, _)| lex.wholes(g))
        .any(|w| lex.is_a(w, wanted))
}

fn kinds(m: &MeaningList, v: Var) -> Vec<&SynsetId> {
    m.predicates
        .iter()
        .filter_map(|p| match p {
            Predicate::AKindOf { var, synset } if *var == v => Some(synset),
            _ => None,
        })
        .collect()
}

fn props(m: &MeaningList, v: Var) -> Vec<&SynsetId> {
    m.predicates
        .iter()
        .filter_map(|p| match p {
            Predicate::Property { var, synset } if *var == v => Some(synset),
            _ => None,
        })
        .collect()
}

/// Variable binding under which every query predicate holds in the caption.
/// Both graphs are canonicalized first.
pub fn graph_match(query: &MeaningList, caption: &MeaningList, lex: &Lexicon) -> Option<BTreeMap<Var, Var>> {
    let q = canonicalize(query, lex);
    let c = canonicalize(caption, lex);
    let qvars: Vec<Var> = q.variables().into_iter().collect();
    let cvars: Vec<Var> = c.variables().into_iter().collect();
    let candidates: Vec<Vec<Var>> = qvars
        .iter()
        .map(|&qv| {
            cvars
                .iter()
                .copied()
                .filter(|&cv| {
                    let ck = kinds(&c, cv);
                    let cp = props(&c, cv);
                    kinds(&q, qv)
                        .iter()
                        .all(|s| ck.iter().any(|k| type_satisfies(lex, k, s)))
                        && props(&q, qv).iter().all(|s| cp.iter().any(|p| lex.is_a(p, s)))
                })
                .collect()
        })
        .collect();
    let relations: Vec<(&str, Var, Var)> = c
        .predicates
        .iter()
        .filter_map(|p| match p {
            Predicate::Relation { label, head, dep } => Some((label.as_str(), *head, *dep)),
            _ => None,
        })
        .collect();
    let query_relations: Vec<(&str, Var, Var)> = q
        .predicates
        .iter()
        .filter_map(|p| match p {
            Predicate::Relation { label, head, dep } => Some((label.as_str(), *head, *dep)),
            _ => None,
        })
        .collect();
    let mut map = BTreeMap::new();
    let mut used = BTreeSet::new();
    fn assign(
        at: usize,
        qvars: &[Var],
        candidates: &[Vec<Var>],
        map: &mut BTreeMap<Var, Var>,
        used: &mut BTreeSet<Var>,
        qrel: &[(&str, Var, Var)],
        crel: &[(&str, Var, Var)],
    ) -> bool {
        let consistent = qrel.iter().all(|(l, h, d)| match (map.get(h), map.get(d)) {
            (Some(ch), Some(cd)) => crel.iter().any(|(cl, x, y)| cl == l && x == ch && y == cd),
            _ => true,
        });
        if !consistent {
            return false;
        }
        if at == qvars.len() {
            return true;
        }
        for &cv in &candidates[at] {
            if used.insert(cv) {
                map.insert(qvars[at], cv);
                if assign(at + 1, qvars, candidates, map, used, qrel, crel) {
                    return true;
                }
                map.remove(&qvars[at]);
                used.remove(&cv);
            }
        }
        false
    }
    assign(0, &qvars, &candidates, &mut map, &mut used, &query_relations, &relations).then_some(map)
}

#[derive(Clone, Debug, Default)]
pub struct CaptionIndex {
    records: BTreeMap<String, CaptionRecord>,
    postings: BTreeMap<SynsetId, BTreeSet<String>>,
}

/// Synsets under which a caption entity of this type is filed: the type,
/// its ancestors, and every whole (with ancestors) of any of them.
fn index_keys(lex: &Lexicon, synset: &SynsetId) -> BTreeSet<SynsetId> {
    let mut keys = BTreeSet::from([synset.clone()]);
    let Ok(gens) = lex.generalizations(synset) else {
        return keys;
    };
    for (g, _) in gens {
        keys.insert(g.clone());
        for w in lex.wholes(g) {
            if let Ok(wg) = lex.generalizations(w) {
                keys.extend(wg.iter().map(|(s, _)| s.clone()));
            }
        }
    }
    keys
}

impl CaptionIndex {
    pub fn new() -> CaptionIndex {
        CaptionIndex::default()
    }

    pub fn records(&self) -> impl Iterator<Item = &CaptionRecord> {
        self.records.values()
    }

    pub fn get(&self, id: &str) -> Option<&CaptionRecord> {
        self.records.get(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Caption ids filed under a synset.
    pub fn posting(&self, synset: &SynsetId) -> Option<&BTreeSet<String>> {
        self.postings.get(synset)
    }

    fn insert(&mut self, lex: &Lexicon, record: CaptionRecord) {
        for m in &record.interpretations {
            for p in &m.predicates {
                if let Predicate::AKindOf { synset, .. } = p {
                    for key in index_keys(lex, synset) {
                        self.postings.entry(key).or_default().insert(record.id.clone());
                    }
                }
            }
        }
        self.records.insert(record.id.clone(), record);
    }

    /// Parses and files a caption. A caption that does not parse is kept
    /// with its diagnostic and takes no part in search.
    pub fn index_caption(&mut self, model: &Model, id: &str, text: &str) -> Result<&CaptionRecord, RetrievalError> {
        if self.records.contains_key(id) {
            return Err(RetrievalError::DuplicateId(id.to_string()));
        }
        if text.trim().is_empty() {
            return Err(RetrievalError::EmptyText(id.to_string()));
        }
        let record = match semantics::interpretations(model, text, model.config.max_alternatives) {
            Ok(list) => CaptionRecord {
                id: id.to_string(),
                text: text.to_string(),
                best_score: list.first().map(|i| i.score),
                interpretations: list.into_iter().map(|i| i.meaning).collect(),
                error: None,
            },
            Err(e) => CaptionRecord {
                id: id.to_string(),
                text: text.to_string(),
                interpretations: Vec::new(),
                best_score: None,
                error: Some(e.to_string()),
            },
        };
        self.insert(&model.lexicon, record);
        Ok(&self.records[id])
    }

    /// Indexes every `<caption-id>\t<text>` line; returns how many failed to parse.
    pub fn index_corpus(&mut self, model: &Model, corpus: &str) -> Result<usize, RetrievalError> {
        let mut failed = 0;
        for (id, text) in parse_corpus(corpus)? {
            if self.index_caption(model, &id, &text)?.error.is_some() {
                failed += 1;
            }
        }
        Ok(failed)
    }

    fn candidates(&self, lex: &Lexicon, query: &MeaningList) -> BTreeSet<String> {
        let canonical = canonicalize(query, lex);
        let mut out: Option<BTreeSet<String>> = None;
        for p in &canonical.predicates {
            if let Predicate::AKindOf { synset, .. } = p {
                let posting = self.postings.get(synset).cloned().unwrap_or_default();
                out = Some(match out {
                    None => posting,
                    Some(acc) => acc.intersection(&posting).cloned().collect(),
                });
            }
        }
        out.unwrap_or_else(|| self.records.keys().cloned().collect())
    }

    /// Ranked captions matching any interpretation of the query: more
    /// matched query predicates first, then higher parse score, then id.
    pub fn search(&self, model: &Model, query: &str, k: usize) -> Result<Vec<SearchHit>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        let readings: Vec<Interpretation> =
            semantics::interpretations(model, query, model.config.max_alternatives).map_err(RetrievalError::Query)?;
        self.search_meanings(&model.lexicon, &readings.into_iter().map(|i| i.meaning).collect::<Vec<_>>(), k)
    }

    pub fn search_meanings(&self, lex: &Lexicon, readings: &[MeaningList], k: usize) -> Result<Vec<SearchHit>, RetrievalError> {
        let mut ids = BTreeSet::new();
        for q in readings {
            ids.extend(self.candidates(lex, q));
        }
        let mut hits = Vec::new();
        for id in ids {
            let record = &self.records[&id];
            let Some(best_score) = record.best_score else {
                continue;
            };
            let mut best: Option<SearchHit> = None;
            for (qi, q) in readings.iter().enumerate() {
                let size = canonicalize(q, lex).predicates.len();
                for (ci, c) in record.interpretations.iter().enumerate() {
                    if best.as_ref().is_some_and(|b| b.matched_predicates >= size) {
                        break;
                    }
                    if let Some(vars) = graph_match(q, c, lex) {
                        best = Some(SearchHit {
                            caption_id: id.clone(),
                            matched_predicates: size,
                            best_score,
                            binding: MatchBinding {
                                vars,
                                query_interpretation: qi,
                                caption_interpretation: ci,
                            },
                        });
                    }
                }
            }
            hits.extend(best);
        }
        hits.sort_by(|a, b| {
            b.matched_predicates
                .cmp(&a.matched_predicates)
                .then(b.best_score.total_cmp(&a.best_score))
                .then(a.caption_id.cmp(&b.caption_id))
        });
        hits.truncate(k);
        Ok(hits)
    }

    pub fn save(&self, dir: &Path) -> Result<(), RetrievalError> {
        let records: Vec<&CaptionRecord> = self.records.values().collect();
        model::write(&dir.join("records.json"), &serde_json::to_string_pretty(&records)?)?;
        Ok(())
    }

    /// Loads a saved index; a missing index is empty.
    pub fn load(dir: &Path, lex: &Lexicon) -> Result<CaptionIndex, RetrievalError> {
        let path = dir.join("records.json");
        let mut index = CaptionIndex::new();
        if !path.exists() {
            return Ok(index);
        }
        let records: Vec<CaptionRecord> = serde_json::from_str(&model::read(&path)?)?;
        for r in records {
            index.insert(lex, r);
        }
        Ok(index)
    }
}

/// `<caption-id>\t<text>` records; blank lines and `#` comments skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<(String, String)>, RetrievalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (id, caption) = line
            .split_once('\t')
            .ok_or(RetrievalError::CorpusSyntax { line: i + 1 })?;
        if id.trim().is_empty() {
            return Err(RetrievalError::CorpusSyntax { line: i + 1 });
        }
        out.push((id.trim().to_string(), caption.trim().to_string()));
    }
    Ok(out)
}
