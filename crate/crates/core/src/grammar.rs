//! Binary context-free grammar with head positions and case-relation labels.
//!
//! File format, one item per line, `#` comments:
//!
//! ```text
//! start=CAPTION
//! relations=modification,participle-mod,prep-attach,marker
//! NP -> NP PARTICIPLEPHRASE head=1 rel=participle-mod count=40
//! NP -> noun head=1 count=100 id=np-noun
//! ```
//!
//! Uppercase right-hand symbols are categories; lowercase ones name a
//! [`LexClass`]. Rule ids default to `LHS->A+B` when no `id=` is given.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lexicon::{Pos, PrepClass, WordForm, WordSense};

/// Relation label that contributes no predicate (determiners, punctuation,
/// the preposition inside its own phrase).
pub const MARKER: &str = "marker";
/// Relation label that is replaced by the attached preposition's class.
pub const PREP_ATTACH: &str = "prep-attach";

/// The attachment relation for a preposition class.
pub fn specialized_relation(class: PrepClass) -> &'static str {
    match class {
        PrepClass::Location => "locationover",
        PrepClass::Time => "timeat",
        PrepClass::Social => "socialwith",
        PrepClass::Abstract => "abstractof",
        PrepClass::Miscellaneous => "relatedto",
    }
}

/// Preterminal classes a token can fill.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexClass {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Preposition,
    Determiner,
    Conjunction,
    Other,
    /// `-ing` form used as a noun.
    Gerund,
    /// `-ing` form used as a modifier.
    Participle,
    /// `-ed` form.
    Pastpart,
    /// Special-format token.
    Code,
}

impl LexClass {
    pub const ALL: [LexClass; 12] = [
        LexClass::Noun,
        LexClass::Verb,
        LexClass::Adjective,
        LexClass::Adverb,
        LexClass::Preposition,
        LexClass::Determiner,
        LexClass::Conjunction,
        LexClass::Other,
        LexClass::Gerund,
        LexClass::Participle,
        LexClass::Pastpart,
        LexClass::Code,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LexClass::Noun => "noun",
            LexClass::Verb => "verb",
            LexClass::Adjective => "adjective",
            LexClass::Adverb => "adverb",
            LexClass::Preposition => "preposition",
            LexClass::Determiner => "determiner",
            LexClass::Conjunction => "conjunction",
            LexClass::Other => "other",
            LexClass::Gerund => "gerund",
            LexClass::Participle => "participle",
            LexClass::Pastpart => "pastpart",
            LexClass::Code => "code",
        }
    }

    /// Classes a looked-up sense may fill.
    pub fn for_sense(sense: &WordSense) -> &'static [LexClass] {
        match (sense.pos, sense.form) {
            (Pos::Noun, _) => &[LexClass::Noun],
            (Pos::Verb, WordForm::Ing) => &[LexClass::Gerund, LexClass::Participle],
            (Pos::Verb, WordForm::Ed) => &[LexClass::Pastpart],
            (Pos::Verb, _) => &[LexClass::Verb],
            (Pos::Adjective, _) => &[LexClass::Adjective],
            (Pos::Adverb, _) => &[LexClass::Adverb],
            (Pos::Preposition, _) => &[LexClass::Preposition],
            (Pos::Determiner, _) => &[LexClass::Determiner],
            (Pos::Conjunction, _) => &[LexClass::Conjunction],
            (Pos::Other, _) => &[LexClass::Other],
        }
    }

    /// Whether a leaf of this class introduces a meaning-list variable.
    pub fn is_entity(self) -> bool {
        matches!(
            self,
            LexClass::Noun
                | LexClass::Verb
                | LexClass::Gerund
                | LexClass::Participle
                | LexClass::Pastpart
                | LexClass::Code
        )
    }

    /// Whether a leaf of this class contributes a property to its head.
    pub fn is_modifier(self) -> bool {
        matches!(self, LexClass::Adjective | LexClass::Adverb)
    }
}

impl FromStr for LexClass {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        LexClass::ALL.into_iter().find(|c| c.name() == s).ok_or(())
    }
}

impl fmt::Display for LexClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Category(String),
    Lexical(LexClass),
}

impl Symbol {
    pub fn name(&self) -> &str {
        match self {
            Symbol::Category(c) => c,
            Symbol::Lexical(l) => l.name(),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrammarRule {
    pub id: String,
    pub lhs: String,
    pub rhs: Vec<Symbol>,
    /// 1 or 2: which right-hand child supplies the headword.
    pub head: u8,
    pub relation: Option<String>,
    pub count: u64,
}

impl GrammarRule {
    pub fn is_binary(&self) -> bool {
        self.rhs.len() == 2
    }

    fn default_id(lhs: &str, rhs: &[Symbol]) -> String {
        let rhs: Vec<&str> = rhs.iter().map(Symbol::name).collect();
        format!("{lhs}->{}", rhs.join("+"))
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GrammarError {
    #[error("grammar line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("grammar line {line}: rule has {arity} right-hand symbols; only one or two are allowed")]
    NotBinary { line: usize, arity: usize },
    #[error("grammar line {line}: invalid head position `{value}`")]
    BadHead { line: usize, value: String },
    #[error("grammar line {line}: duplicate rule id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("grammar line {line}: duplicate rule {lhs} -> {rhs}")]
    DuplicateRule { line: usize, lhs: String, rhs: String },
    #[error("grammar line {line}: relation `{label}` is not declared")]
    UnknownRelation { line: usize, label: String },
    #[error("grammar: category `{0}` is used but never defined")]
    UndefinedCategory(String),
    #[error("grammar: start category missing or never defined")]
    BadStart,
    #[error("grammar: unary rules form a cycle through `{0}`")]
    UnaryCycle(String),
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("rule `{0}` is unary")]
    NotBinaryRule(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grammar {
    start: String,
    relations: Option<BTreeSet<String>>,
    rules: Vec<GrammarRule>,
    by_id: HashMap<String, usize>,
    lhs_totals: BTreeMap<String, u64>,
    lhs_fanout: BTreeMap<String, usize>,
}

impl Grammar {
    pub fn load(text: &str) -> Result<Grammar, GrammarError> {
        let mut start = None;
        let mut relations: Option<BTreeSet<String>> = None;
        let mut rules: Vec<GrammarRule> = Vec::new();
        let mut by_id = HashMap::new();
        let mut shapes = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let syntax = |m: &str| GrammarError::Syntax {
                line,
                message: m.to_string(),
            };
            if let Some(s) = trimmed.strip_prefix("start=") {
                start = Some(s.trim().to_string());
                continue;
            }
            if let Some(r) = trimmed.strip_prefix("relations=") {
                let set: BTreeSet<String> = r
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect();
                relations.get_or_insert_with(BTreeSet::new).extend(set);
                continue;
            }
            let (lhs, rest) = trimmed.split_once("->").ok_or_else(|| syntax("expected `LHS -> RHS ...`"))?;
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.chars().any(|c| c.is_lowercase() || c.is_whitespace()) {
                return Err(syntax("left-hand side must be one uppercase category"));
            }
            let mut rhs = Vec::new();
            let (mut head, mut relation, mut count, mut id) = (None, None, None, None);
            for tok in rest.split_whitespace() {
                if let Some((k, v)) = tok.split_once('=') {
                    match k {
                        "head" => head = Some(v.to_string()),
                        "rel" => relation = Some(v.to_string()),
                        "count" => count = Some(v.parse::<u64>().map_err(|_| syntax("count must be a nonnegative integer"))?),
                        "id" => id = Some(v.to_string()),
                        _ => return Err(syntax(&format!("unknown attribute `{k}`"))),
                    }
                } else if tok.chars().all(|c| c.is_lowercase() || c == '-') {
                    let class = tok
                        .parse::<LexClass>()
                        .map_err(|_| syntax(&format!("unknown lexical class `{tok}`")))?;
                    rhs.push(Symbol::Lexical(class));
                } else {
                    rhs.push(Symbol::Category(tok.to_string()));
                }
            }
            if rhs.is_empty() {
                return Err(syntax("empty right-hand side"));
            }
            if rhs.len() > 2 {
                return Err(GrammarError::NotBinary { line, arity: rhs.len() });
            }
            let head_value = head.unwrap_or_else(|| "1".to_string());
            let head: u8 = match head_value.as_str() {
                "1" => 1,
                "2" if rhs.len() == 2 => 2,
                _ => return Err(GrammarError::BadHead { line, value: head_value }),
            };
            match (&relation, rhs.len()) {
                (None, 2) => return Err(syntax("binary rule needs rel=<label>")),
                (Some(_), 1) => return Err(syntax("unary rule takes no relation")),
                _ => {}
            }
            let id = id.unwrap_or_else(|| GrammarRule::default_id(lhs, &rhs));
            if by_id.contains_key(&id) {
                return Err(GrammarError::DuplicateId { line, id });
            }
            if !shapes.insert((lhs.to_string(), rhs.clone())) {
                return Err(GrammarError::DuplicateRule {
                    line,
                    lhs: lhs.to_string(),
                    rhs: rhs.iter().map(Symbol::name).collect::<Vec<_>>().join(" "),
                });
            }
            if let (Some(label), Some(vocab)) = (&relation, &relations) {
                if !vocab.contains(label) {
                    return Err(GrammarError::UnknownRelation {
                        line,
                        label: label.clone(),
                    });
                }
            }
            by_id.insert(id.clone(), rules.len());
            rules.push(GrammarRule {
                id,
                lhs: lhs.to_string(),
                rhs,
                head,
                relation,
                count: count.unwrap_or(0),
            });
        }
        let start = start.ok_or(GrammarError::BadStart)?;
        let defined: BTreeSet<&str> = rules.iter().map(|r| r.lhs.as_str()).collect();
        if !defined.contains(start.as_str()) {
            return Err(GrammarError::BadStart);
        }
        for r in &rules {
            for s in &r.rhs {
                if let Symbol::Category(c) = s {
                    if !defined.contains(c.as_str()) {
                        return Err(GrammarError::UndefinedCategory(c.clone()));
                    }
                }
            }
        }
        let mut g = Grammar {
            start,
            relations,
            rules,
            by_id,
            lhs_totals: BTreeMap::new(),
            lhs_fanout: BTreeMap::new(),
        };
        g.check_unary_cycles()?;
        g.recompute_totals();
        Ok(g)
    }

    fn check_unary_cycles(&self) -> Result<(), GrammarError> {
        let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for r in self.rules.iter().filter(|r| !r.is_binary()) {
            if let Symbol::Category(c) = &r.rhs[0] {
                edges.entry(r.lhs.as_str()).or_default().push(c.as_str());
            }
        }
        fn visit<'a>(
            n: &'a str,
            edges: &BTreeMap<&'a str, Vec<&'a str>>,
            state: &mut BTreeMap<&'a str, bool>,
        ) -> Result<(), String> {
            match state.get(n) {
                Some(true) => return Ok(()),
                Some(false) => return Err(n.to_string()),
                None => {}
            }
            state.insert(n, false);
            for m in edges.get(n).into_iter().flatten() {
                visit(m, edges, state)?;
            }
            state.insert(n, true);
            Ok(())
        }
        let mut state = BTreeMap::new();
        for n in edges.keys() {
            visit(n, &edges, &mut state).map_err(GrammarError::UnaryCycle)?;
        }
        Ok(())
    }

    fn recompute_totals(&mut self) {
        self.lhs_totals.clear();
        self.lhs_fanout.clear();
        for r in &self.rules {
            *self.lhs_totals.entry(r.lhs.clone()).or_default() += r.count;
            *self.lhs_fanout.entry(r.lhs.clone()).or_default() += 1;
        }
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn rules(&self) -> &[GrammarRule] {
        &self.rules
    }

    pub fn rule(&self, id: &str) -> Option<&GrammarRule> {
        self.by_id.get(id).map(|&i| &self.rules[i])
    }

    pub fn rule_index(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn lhs_total(&self, lhs: &str) -> u64 {
        self.lhs_totals.get(lhs).copied().unwrap_or(0)
    }

    /// Declared relation vocabulary plus the preposition specialisations.
    pub fn relation_vocabulary(&self) -> BTreeSet<String> {
        let mut vocab: BTreeSet<String> = match &self.relations {
            Some(v) => v.clone(),
            None => self.rules.iter().filter_map(|r| r.relation.clone()).collect(),
        };
        if vocab.contains(PREP_ATTACH) {
            vocab.extend(PrepClass::ALL.iter().map(|c| specialized_relation(*c).to_string()));
        }
        vocab
    }

    /// `ln((count + alpha) / (lhs_total + alpha * fanout))`, conditioned on the
    /// rule's left-hand side.
    pub fn rule_log_prob(&self, rule: &GrammarRule, alpha: f64) -> f64 {
        let total = self.lhs_total(&rule.lhs) as f64;
        let fanout = self.lhs_fanout.get(&rule.lhs).copied().unwrap_or(1) as f64;
        ((rule.count as f64 + alpha) / (total + alpha * fanout)).ln().min(0.0)
    }

    pub fn increment(&mut self, id: &str, delta: u64) -> Result<(), GrammarError> {
        let idx = self.rule_index(id).ok_or_else(|| GrammarError::UnknownRule(id.to_string()))?;
        let lhs = self.rules[idx].lhs.clone();
        self.rules[idx].count += delta;
        *self.lhs_totals.entry(lhs).or_default() += delta;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("start={}\n", self.start);
        if let Some(rel) = &self.relations {
            let _ = writeln!(out, "relations={}", rel.iter().cloned().collect::<Vec<_>>().join(","));
        }
        for r in &self.rules {
            let rhs: Vec<&str> = r.rhs.iter().map(Symbol::name).collect();
            let _ = write!(out, "{} -> {} head={}", r.lhs, rhs.join(" "), r.head);
            if let Some(rel) = &r.relation {
                let _ = write!(out, " rel={rel}");
            }
            let _ = write!(out, " count={}", r.count);
            if r.id != GrammarRule::default_id(&r.lhs, &r.rhs) {
                let _ = write!(out, " id={}", r.id);
            }
            out.push('\n');
        }
        out
    }
}

/// Splits a binary node's child heads into (head, dependent).
pub fn head_of<T: Clone>(rule: &GrammarRule, left: &T, right: &T) -> Result<(T, T), GrammarError> {
    if !rule.is_binary() {
        return Err(GrammarError::NotBinaryRule(rule.id.clone()));
    }
    Ok(if rule.head == 1 {
        (left.clone(), right.clone())
    } else {
        (right.clone(), left.clone())
    })
}
