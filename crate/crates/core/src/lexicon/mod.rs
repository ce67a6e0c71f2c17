//! Word senses, synonym sets, the type/part hierarchy and token analysis.
//!
//! Three flat files feed a [`Lexicon`]:
//!
//! * lexicon: `sense <surface> <pos> <synset-id> <freq-rank> [<prep-class>]`
//! * hierarchy: `ako <child> <parent>`, `part <part> <whole>`,
//!   `alias <surface> <synset-id>`, `relverb <synset-id> <relation>`
//! * formats: `fmt <name> <pattern> <category-synset>`
//!
//! Fields are tab-separated, so surfaces and patterns may contain spaces.
//! A surface with a space is a phrase and is merged into one token by
//! [`Lexicon::tokenize`].

mod format;
mod morph;
mod resolve;
mod tokenize;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use format::{FormatPattern, SpecialFormatRule};
pub use resolve::{Resolution, ResolutionKind};

/// Identifier of a synonym set, conventionally `<lemma>-<sense number>`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SynsetId(Arc<str>);

impl SynsetId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The lemma part, i.e. everything before the trailing `-<number>`.
    pub fn lemma(&self) -> &str {
        match self.0.rsplit_once('-') {
            Some((lemma, n)) if !lemma.is_empty() && n.parse::<u32>().is_ok() => lemma,
            _ => &self.0,
        }
    }

    pub fn sense_number(&self) -> Option<u32> {
        self.0.rsplit_once('-').and_then(|(_, n)| n.parse().ok())
    }

    fn well_formed(s: &str) -> bool {
        !s.is_empty()
            && !s.chars().any(char::is_whitespace)
            && matches!(s.rsplit_once('-'), Some((l, n)) if !l.is_empty() && n.parse::<u32>().is_ok_and(|n| n > 0))
    }
}

impl From<&str> for SynsetId {
    fn from(s: &str) -> Self {
        SynsetId(Arc::from(s))
    }
}

impl From<String> for SynsetId {
    fn from(s: String) -> Self {
        SynsetId(Arc::from(s))
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl Serialize for SynsetId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for SynsetId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d).map(SynsetId::from)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Preposition,
    Determiner,
    Conjunction,
    Other,
}

impl Pos {
    pub const ALL: [Pos; 8] = [
        Pos::Noun,
        Pos::Verb,
        Pos::Adjective,
        Pos::Adverb,
        Pos::Preposition,
        Pos::Determiner,
        Pos::Conjunction,
        Pos::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adjective => "adjective",
            Pos::Adverb => "adverb",
            Pos::Preposition => "preposition",
            Pos::Determiner => "determiner",
            Pos::Conjunction => "conjunction",
            Pos::Other => "other",
        }
    }
}

impl FromStr for Pos {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Pos::ALL.into_iter().find(|p| p.name() == s).ok_or(())
    }
}

/// Preposition subclass; selects the specialised attachment relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrepClass {
    Location,
    Time,
    Social,
    Abstract,
    Miscellaneous,
}

impl PrepClass {
    pub const ALL: [PrepClass; 5] = [
        PrepClass::Location,
        PrepClass::Time,
        PrepClass::Social,
        PrepClass::Abstract,
        PrepClass::Miscellaneous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrepClass::Location => "location",
            PrepClass::Time => "time",
            PrepClass::Social => "social",
            PrepClass::Abstract => "abstract",
            PrepClass::Miscellaneous => "miscellaneous",
        }
    }
}

impl FromStr for PrepClass {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        PrepClass::ALL.into_iter().find(|p| p.name() == s).ok_or(())
    }
}

/// Inflectional form a token was recognised in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordForm {
    Base,
    /// `-s`/`-es`: noun plural or verb third person.
    Plural,
    /// `-ing`: gerund or present participle.
    Ing,
    /// `-ed`: past participle.
    Ed,
    /// `-er`: comparative adjective.
    Er,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSense {
    pub surface: String,
    pub pos: Pos,
    pub synset: SynsetId,
    pub frequency_rank: u32,
    pub form: WordForm,
    pub prep_class: Option<PrepClass>,
}

impl WordSense {
    fn order_key(&self) -> (u32, &SynsetId, WordForm, Pos) {
        (self.frequency_rank, &self.synset, self.form, self.pos)
    }
}

#[derive(Clone, Debug)]
struct SynsetInfo {
    pos: Pos,
    rank: u32,
    prep_class: Option<PrepClass>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LexiconError {
    #[error("{file} line {line}: {message}")]
    Syntax {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("lexicon line {line}: duplicate sense `{surface}` {pos} {synset}")]
    DuplicateSense {
        line: usize,
        surface: String,
        pos: String,
        synset: SynsetId,
    },
    #[error("lexicon line {line}: duplicate synset id `{synset}` declared with a different part of speech")]
    DuplicateSynset { line: usize, synset: SynsetId },
    #[error("{file} line {line}: unknown synset `{synset}`")]
    UnknownSynset {
        file: &'static str,
        line: usize,
        synset: SynsetId,
    },
    #[error("ako cycle between `{0}` and `{1}`")]
    Cycle(SynsetId, SynsetId),
    #[error("unknown synset `{0}`")]
    NotFound(SynsetId),
}

/// Immutable lexicon aggregate.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashMap<String, Vec<WordSense>>,
    synsets: BTreeMap<SynsetId, SynsetInfo>,
    parents: BTreeMap<SynsetId, Vec<SynsetId>>,
    wholes: BTreeMap<SynsetId, Vec<SynsetId>>,
    relation_verbs: BTreeMap<SynsetId, String>,
    formats: Vec<SpecialFormatRule>,
    phrase_len: usize,
    /// Per synset: itself at distance 0, then ancestors in breadth-first order.
    generalizations: BTreeMap<SynsetId, Vec<(SynsetId, usize)>>,
    /// Longest ako path from the synset up to a root.
    heights: BTreeMap<SynsetId, usize>,
}

fn fields(line: &str) -> Vec<&str> {
    line.split('\t').map(str::trim).filter(|f| !f.is_empty()).collect()
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

impl Lexicon {
    /// Builds a lexicon from the three file contents, checking every invariant.
    pub fn load(lexicon_text: &str, hierarchy_text: &str, formats_text: &str) -> Result<Lexicon, LexiconError> {
        let syntax = |file, line, message: &str| LexiconError::Syntax {
            file,
            line,
            message: message.to_string(),
        };
        let mut entries: HashMap<String, Vec<WordSense>> = HashMap::new();
        let mut synsets: BTreeMap<SynsetId, SynsetInfo> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (line, raw) in content_lines(lexicon_text) {
            let f = fields(raw);
            if f.first() != Some(&"sense") || !(5..=6).contains(&f.len()) {
                return Err(syntax("lexicon", line, "expected `sense <surface> <pos> <synset> <rank> [<prep-class>]`"));
            }
            let surface = f[1];
            if surface != surface.to_lowercase() {
                return Err(syntax("lexicon", line, "surface must be lowercase"));
            }
            let pos: Pos = f[2].parse().map_err(|_| syntax("lexicon", line, "unknown part of speech"))?;
            if !SynsetId::well_formed(f[3]) {
                return Err(syntax("lexicon", line, "synset id must look like `<lemma>-<positive number>`"));
            }
            let synset = SynsetId::from(f[3]);
            let rank: u32 = f[4].parse().map_err(|_| syntax("lexicon", line, "frequency rank must be a nonnegative integer"))?;
            let prep_class = match (pos, f.get(5)) {
                (Pos::Preposition, Some(c)) => {
                    Some(c.parse().map_err(|_| syntax("lexicon", line, "unknown preposition class"))?)
                }
                (Pos::Preposition, None) => return Err(syntax("lexicon", line, "preposition needs a class")),
                (_, Some(_)) => return Err(syntax("lexicon", line, "only prepositions take a class")),
                (_, None) => None,
            };
            if !seen.insert((surface.to_string(), pos, synset.clone())) {
                return Err(LexiconError::DuplicateSense {
                    line,
                    surface: surface.to_string(),
                    pos: pos.name().to_string(),
                    synset,
                });
            }
            match synsets.get_mut(&synset) {
                Some(info) if info.pos != pos || info.prep_class != prep_class => {
                    return Err(LexiconError::DuplicateSynset { line, synset })
                }
                Some(info) => info.rank = info.rank.min(rank),
                None => {
                    synsets.insert(synset.clone(), SynsetInfo { pos, rank, prep_class });
                }
            }
            entries.entry(surface.to_string()).or_default().push(WordSense {
                surface: surface.to_string(),
                pos,
                synset,
                frequency_rank: rank,
                form: WordForm::Base,
                prep_class,
            });
        }

        let mut parents: BTreeMap<SynsetId, Vec<SynsetId>> = BTreeMap::new();
        let mut wholes: BTreeMap<SynsetId, Vec<SynsetId>> = BTreeMap::new();
        let mut relation_verbs = BTreeMap::new();
        let mut aliases = Vec::new();
        let known = |file, line, s: &str| -> Result<SynsetId, LexiconError> {
            let id = SynsetId::from(s);
            if synsets.contains_key(&id) {
                Ok(id)
            } else {
                Err(LexiconError::UnknownSynset { file, line, synset: id })
            }
        };
        for (line, raw) in content_lines(hierarchy_text) {
            let f = fields(raw);
            match (f.first().copied(), f.len()) {
                (Some("ako"), 3) => {
                    let child = known("hierarchy", line, f[1])?;
                    let parent = known("hierarchy", line, f[2])?;
                    if child == parent {
                        return Err(LexiconError::Cycle(child, parent));
                    }
                    parents.entry(child).or_default().push(parent);
                }
                (Some("part"), 3) => {
                    let part = known("hierarchy", line, f[1])?;
                    let whole = known("hierarchy", line, f[2])?;
                    wholes.entry(part).or_default().push(whole);
                }
                (Some("alias"), 3) => {
                    if f[1] != f[1].to_lowercase() {
                        return Err(syntax("hierarchy", line, "alias surface must be lowercase"));
                    }
                    aliases.push((f[1].to_string(), known("hierarchy", line, f[2])?));
                }
                (Some("relverb"), 3) => {
                    relation_verbs.insert(known("hierarchy", line, f[1])?, f[2].to_string());
                }
                _ => {
                    return Err(syntax(
                        "hierarchy",
                        line,
                        "expected `ako|part|alias|relverb` with two arguments",
                    ))
                }
            }
        }
        for list in parents.values_mut().chain(wholes.values_mut()) {
            list.sort();
            list.dedup();
        }
        for (surface, synset) in aliases {
            let info = &synsets[&synset];
            let list = entries.entry(surface.clone()).or_default();
            if list.iter().any(|s| s.synset == synset) {
                continue;
            }
            list.push(WordSense {
                surface,
                pos: info.pos,
                synset,
                frequency_rank: info.rank,
                form: WordForm::Base,
                prep_class: info.prep_class,
            });
        }
        for list in entries.values_mut() {
            list.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        }

        let mut formats = Vec::new();
        for (line, raw) in content_lines(formats_text) {
            let f = fields(raw);
            if f.first() != Some(&"fmt") || f.len() != 4 {
                return Err(syntax("formats", line, "expected `fmt <name> <pattern> <category>`"));
            }
            let pattern = FormatPattern::parse(f[2]).map_err(|m| syntax("formats", line, &m))?;
            let category = known("formats", line, f[3])?;
            formats.push(SpecialFormatRule {
                name: f[1].to_string(),
                pattern,
                category,
            });
        }

        check_acyclic(&synsets, &parents)?;
        let phrase_len = entries.keys().map(|k| k.split(' ').count()).max().unwrap_or(1);
        let mut lex = Lexicon {
            entries,
            synsets,
            parents,
            wholes,
            relation_verbs,
            formats,
            phrase_len,
            generalizations: BTreeMap::new(),
            heights: BTreeMap::new(),
        };
        lex.precompute();
        Ok(lex)
    }

    fn precompute(&mut self) {
        let ids: Vec<SynsetId> = self.synsets.keys().cloned().collect();
        for id in &ids {
            let mut out = vec![(id.clone(), 0)];
            let mut seen = BTreeSet::from([id.clone()]);
            let mut queue = VecDeque::from([(id.clone(), 0usize)]);
            while let Some((cur, d)) = queue.pop_front() {
                for p in self.parents.get(&cur).into_iter().flatten() {
                    if seen.insert(p.clone()) {
                        out.push((p.clone(), d + 1));
                        queue.push_back((p.clone(), d + 1));
                    }
                }
            }
            self.generalizations.insert(id.clone(), out);
        }
        fn height(
            id: &SynsetId,
            parents: &BTreeMap<SynsetId, Vec<SynsetId>>,
            memo: &mut BTreeMap<SynsetId, usize>,
        ) -> usize {
            if let Some(h) = memo.get(id) {
                return *h;
            }
            let h = parents
                .get(id)
                .into_iter()
                .flatten()
                .map(|p| height(p, parents, memo) + 1)
                .max()
                .unwrap_or(0);
            memo.insert(id.clone(), h);
            h
        }
        let mut memo = BTreeMap::new();
        for id in &ids {
            height(id, &self.parents, &mut memo);
        }
        self.heights = memo;
    }

    pub fn contains(&self, synset: &SynsetId) -> bool {
        self.synsets.contains_key(synset)
    }

    pub fn synsets(&self) -> impl Iterator<Item = &SynsetId> {
        self.synsets.keys()
    }

    pub fn pos_of(&self, synset: &SynsetId) -> Option<Pos> {
        self.synsets.get(synset).map(|i| i.pos)
    }

    pub fn rank_of(&self, synset: &SynsetId) -> Option<u32> {
        self.synsets.get(synset).map(|i| i.rank)
    }

    pub fn prep_class(&self, synset: &SynsetId) -> Option<PrepClass> {
        self.synsets.get(synset).and_then(|i| i.prep_class)
    }

    pub fn parents(&self, synset: &SynsetId) -> &[SynsetId] {
        self.parents.get(synset).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Wholes that `part` is directly a part of.
    pub fn wholes(&self, part: &SynsetId) -> &[SynsetId] {
        self.wholes.get(part).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Canonical relation label for a verb that only expresses attachment.
    pub fn relation_verb(&self, synset: &SynsetId) -> Option<&str> {
        self.relation_verbs.get(synset).map(String::as_str)
    }

    pub fn formats(&self) -> &[SpecialFormatRule] {
        &self.formats
    }

    /// Ancestors in breadth-first order, nearest first, ties by synset id.
    pub fn superconcepts(&self, synset: &SynsetId) -> Result<Vec<SynsetId>, LexiconError> {
        Ok(self.generalizations(synset)?[1..].iter().map(|(s, _)| s.clone()).collect())
    }

    /// The synset itself (distance 0) followed by every ancestor with its
    /// shortest ako distance.
    pub fn generalizations(&self, synset: &SynsetId) -> Result<&[(SynsetId, usize)], LexiconError> {
        self.generalizations
            .get(synset)
            .map(Vec::as_slice)
            .ok_or_else(|| LexiconError::NotFound(synset.clone()))
    }

    /// Reflexive ako test.
    pub fn is_a(&self, synset: &SynsetId, ancestor: &SynsetId) -> bool {
        self.generalizations
            .get(synset)
            .is_some_and(|g| g.iter().any(|(s, _)| s == ancestor))
    }

    pub fn height(&self, synset: &SynsetId) -> usize {
        self.heights.get(synset).copied().unwrap_or(0)
    }

    /// Every single-token surface (direct senses and aliases).
    pub fn surfaces(&self) -> impl Iterator<Item = (&str, &[WordSense])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn is_phrase(&self, surface: &str) -> bool {
        surface.contains(' ') && self.entries.contains_key(surface)
    }

    /// Senses for a token: direct entries, aliases and suffix variants,
    /// ordered by frequency rank then synset id.
    pub fn lookup_senses(&self, token: &str) -> Vec<WordSense> {
        let mut out: Vec<WordSense> = self.entries.get(token).cloned().unwrap_or_default();
        for (stem, form, allowed) in morph::candidate_stems(token) {
            if let Some(list) = self.entries.get(&stem) {
                for s in list.iter().filter(|s| allowed.contains(&s.pos)) {
                    out.push(WordSense {
                        form,
                        ..s.clone()
                    });
                }
            }
        }
        out.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        out.dedup_by(|a, b| a.synset == b.synset && a.form == b.form && a.pos == b.pos);
        out
    }
}

fn check_acyclic(
    synsets: &BTreeMap<SynsetId, SynsetInfo>,
    parents: &BTreeMap<SynsetId, Vec<SynsetId>>,
) -> Result<(), LexiconError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: BTreeMap<&SynsetId, Mark> = BTreeMap::new();
    for start in synsets.keys() {
        if marks.contains_key(start) {
            continue;
        }
        // Iterative DFS; each frame is (node, next parent index).
        let mut stack: Vec<(&SynsetId, usize)> = vec![(start, 0)];
        marks.insert(start, Mark::Open);
        while let Some((node, idx)) = stack.pop() {
            let ps = parents.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if idx < ps.len() {
                stack.push((node, idx + 1));
                let p = &ps[idx];
                match marks.get(p) {
                    Some(Mark::Open) => return Err(LexiconError::Cycle(node.clone(), p.clone())),
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(p, Mark::Open);
                        stack.push((p, 0));
                    }
                }
            } else {
                marks.insert(node, Mark::Done);
            }
        }
    }
    Ok(())
}
