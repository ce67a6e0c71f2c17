//! Co-occurrence and unary counts with hierarchy-inherited estimates.
//!
//! Pair counts are keyed by (statistic key, head sense, dependent sense). Every
//! increment also bumps each combination of the two senses' superconcepts, so
//! a pair that was never seen can be estimated from the nearest ancestor pair
//! with enough support, scaled by the unary-count ratio of each generalized
//! slot.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::lexicon::{Lexicon, LexiconError, SynsetId};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub rule: Arc<str>,
    pub first: SynsetId,
    pub second: SynsetId,
}

impl PairKey {
    pub fn new(rule: &str, first: SynsetId, second: SynsetId) -> PairKey {
        PairKey {
            rule: Arc::from(rule),
            first,
            second,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    /// Head word (synset lemma).
    First,
    /// Head sense; the synset id fixes the part of speech.
    FirstSense,
    Second,
    SecondSense,
}

impl IndexKind {
    pub const ALL: [IndexKind; 4] = [
        IndexKind::First,
        IndexKind::FirstSense,
        IndexKind::Second,
        IndexKind::SecondSense,
    ];

    fn key_of(self, key: &PairKey) -> &str {
        match self {
            IndexKind::First => key.first.lemma(),
            IndexKind::FirstSense => key.first.as_str(),
            IndexKind::Second => key.second.lemma(),
            IndexKind::SecondSense => key.second.as_str(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CountsError {
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("increment delta must be at least 1")]
    ZeroDelta,
    #[error("sample size must be positive")]
    EmptySample,
    #[error("sample size {n} exceeds population {population}")]
    SampleExceedsPopulation { n: u64, population: u64 },
    #[error("ancestor count {a} exceeds population {population}")]
    CountExceedsPopulation { a: u64, population: u64 },
    #[error("population {0} is too small for a standard deviation")]
    PopulationTooSmall(u64),
    #[error("counts line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// Estimated count and spread from an ancestor count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Antisample {
    pub estimate: f64,
    /// Standard deviation of the estimated proportion.
    pub proportion_std_dev: f64,
}

impl Antisample {
    /// Deviation on the count scale for a sample of size `n`.
    pub fn count_std_dev(&self, n: u64) -> f64 {
        n as f64 * self.proportion_std_dev
    }
}

/// `A` pairs observed among `N` ancestor instances; estimate how many fall in
/// a subpopulation of `n`.
pub fn antisample_estimate(a: u64, n: u64, population: u64) -> Result<Antisample, CountsError> {
    if n == 0 {
        return Err(CountsError::EmptySample);
    }
    if n > population {
        return Err(CountsError::SampleExceedsPopulation { n, population });
    }
    if a > population {
        return Err(CountsError::CountExceedsPopulation { a, population });
    }
    if population < 2 {
        return Err(CountsError::PopulationTooSmall(population));
    }
    let big_n = population as f64;
    let estimate = (a as u128 * n as u128) as f64 / big_n;
    let variance = (a as f64 / big_n) * ((population - a) as f64 / big_n) * ((population - n) as f64 / (big_n - 1.0))
        / n as f64;
    Ok(Antisample {
        estimate,
        proportion_std_dev: variance.sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimateSource {
    Exact,
    Inherited { ancestor: PairKey, n: u64, population: u64, ancestor_count: u64 },
    Floor,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub source: EstimateSource,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountStore {
    pairs: BTreeMap<PairKey, u64>,
    indexes: [BTreeMap<String, BTreeSet<PairKey>>; 4],
    unary: BTreeMap<SynsetId, u64>,
    total: u64,
}

/// The synset itself, or the first configured code category it falls under.
pub fn policy_synset(lex: &Lexicon, config: &Config, synset: &SynsetId) -> SynsetId {
    config
        .code_categories
        .iter()
        .find(|c| lex.is_a(synset, c))
        .cloned()
        .unwrap_or_else(|| synset.clone())
}

fn capped<'a>(
    lex: &'a Lexicon,
    config: &Config,
    synset: &SynsetId,
) -> Result<impl Iterator<Item = &'a (SynsetId, usize)> + 'a, LexiconError> {
    let cap = config.generalization_depth.unwrap_or(usize::MAX);
    Ok(lex.generalizations(synset)?.iter().filter(move |(_, d)| *d <= cap))
}

impl CountStore {
    pub fn new() -> CountStore {
        CountStore::default()
    }

    pub fn pair_count(&self, key: &PairKey) -> Option<u64> {
        self.pairs.get(key).copied()
    }

    pub fn unary(&self, synset: &SynsetId) -> u64 {
        self.unary.get(synset).copied().unwrap_or(0)
    }

    pub fn total_instances(&self) -> u64 {
        self.total
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&PairKey, u64)> {
        self.pairs.iter().map(|(k, v)| (k, *v))
    }

    pub fn unary_counts(&self) -> impl Iterator<Item = (&SynsetId, u64)> {
        self.unary.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn add_pair(&mut self, key: PairKey, delta: u64) {
        let entry = self.pairs.entry(key.clone()).or_insert(0);
        let fresh = *entry == 0;
        *entry += delta;
        if fresh {
            for kind in IndexKind::ALL {
                self.indexes[kind as usize]
                    .entry(kind.key_of(&key).to_string())
                    .or_default()
                    .insert(key.clone());
            }
        }
    }

    fn remove_pair(&mut self, key: &PairKey) {
        if self.pairs.remove(key).is_none() {
            return;
        }
        for kind in IndexKind::ALL {
            let idx = &mut self.indexes[kind as usize];
            let k = kind.key_of(key);
            if let Some(set) = idx.get_mut(k) {
                set.remove(key);
                if set.is_empty() {
                    idx.remove(k);
                }
            }
        }
    }

    /// Overwrites one pair count without propagation. Zero removes the pair.
    pub fn set_pair(&mut self, key: PairKey, count: u64) {
        self.remove_pair(&key);
        if count > 0 {
            self.add_pair(key, count);
        }
    }

    /// Overwrites one unary count without propagation.
    pub fn set_unary(&mut self, synset: SynsetId, count: u64) {
        if count == 0 {
            self.unary.remove(&synset);
        } else {
            self.unary.insert(synset, count);
        }
    }

    pub fn set_total(&mut self, total: u64) {
        self.total = total;
    }

    fn bump_unary_chain(&mut self, lex: &Lexicon, synset: &SynsetId, delta: u64) -> Result<(), LexiconError> {
        for (s, _) in lex.generalizations(synset)? {
            *self.unary.entry(s.clone()).or_insert(0) += delta;
        }
        Ok(())
    }

    /// Records `delta` occurrences of the pair and of every ancestor
    /// combination. Unary counts are left to `increment_unary`.
    pub fn increment_pair(
        &mut self,
        lex: &Lexicon,
        config: &Config,
        rule: &str,
        head: &SynsetId,
        dep: &SynsetId,
        delta: u64,
    ) -> Result<(), CountsError> {
        if delta == 0 {
            return Err(CountsError::ZeroDelta);
        }
        let head = policy_synset(lex, config, head);
        let dep = policy_synset(lex, config, dep);
        let heads: Vec<SynsetId> = capped(lex, config, &head)?.map(|(s, _)| s.clone()).collect();
        let deps: Vec<SynsetId> = capped(lex, config, &dep)?.map(|(s, _)| s.clone()).collect();
        let rule: Arc<str> = Arc::from(rule);
        for h in &heads {
            for d in &deps {
                self.add_pair(
                    PairKey {
                        rule: rule.clone(),
                        first: h.clone(),
                        second: d.clone(),
                    },
                    delta,
                );
            }
        }
        Ok(())
    }

    /// Records `delta` word instances of the sense.
    pub fn increment_unary(&mut self, lex: &Lexicon, config: &Config, synset: &SynsetId, delta: u64) -> Result<(), CountsError> {
        if delta == 0 {
            return Err(CountsError::ZeroDelta);
        }
        let synset = policy_synset(lex, config, synset);
        self.bump_unary_chain(lex, &synset, delta)?;
        self.total += delta;
        Ok(())
    }

    pub fn lookup_by(&self, kind: IndexKind, key: &str) -> Vec<(PairKey, u64)> {
        self.indexes[kind as usize]
            .get(key)
            .into_iter()
            .flatten()
            .map(|k| (k.clone(), self.pairs[k]))
            .collect()
    }

    /// Every key reachable through one index.
    pub fn index_keys(&self, kind: IndexKind) -> BTreeSet<PairKey> {
        self.indexes[kind as usize].values().flatten().cloned().collect()
    }

    /// Unary count used as a sample size; unseen senses count as one.
    pub fn effective_unary(&self, synset: &SynsetId) -> u64 {
        self.unary(synset).max(1)
    }

    /// Ancestor pairs in search order: total distance, then fewer head
    /// generalizations, then breadth-first order within each slot.
    fn ancestor_pairs(
        &self,
        lex: &Lexicon,
        config: &Config,
        head: &SynsetId,
        dep: &SynsetId,
    ) -> Result<Vec<(usize, usize, SynsetId, SynsetId)>, LexiconError> {
        let heads: Vec<_> = capped(lex, config, head)?.enumerate().collect();
        let deps: Vec<_> = capped(lex, config, dep)?.enumerate().collect();
        let mut out = Vec::new();
        for (hi, (h, hd)) in &heads {
            for (di, (d, dd)) in &deps {
                if hd + dd > 0 {
                    out.push(((hd + dd, *hd, *hi, *di), h.clone(), d.clone()));
                }
            }
        }
        out.sort_by_key(|a| a.0);
        Ok(out
            .into_iter()
            .map(|((_, _, hi, di), h, d)| (hi, di, h, d))
            .collect())
    }

    /// Sample and population sizes for reaching `(h, d)` from `(head, dep)`:
    /// the product of unary counts over the generalized slots.
    fn scale(&self, head: &SynsetId, dep: &SynsetId, h: &SynsetId, d: &SynsetId) -> (u64, u64) {
        let mut n = 1u64;
        let mut population = 1u64;
        for (specific, general) in [(head, h), (dep, d)] {
            if specific != general {
                let big = self.unary(general).max(1);
                n = n.saturating_mul(self.effective_unary(specific).min(big));
                population = population.saturating_mul(big);
            }
        }
        (n, population)
    }

    /// Nearest ancestor pair whose count reaches the threshold.
    fn inherited(
        &self,
        lex: &Lexicon,
        config: &Config,
        rule: &str,
        head: &SynsetId,
        dep: &SynsetId,
    ) -> Result<Option<(PairKey, u64, u64, u64)>, LexiconError> {
        for (_, _, h, d) in self.ancestor_pairs(lex, config, head, dep)? {
            let key = PairKey::new(rule, h.clone(), d.clone());
            if let Some(a) = self.pair_count(&key).filter(|&a| a >= config.theta) {
                let (n, population) = self.scale(head, dep, &h, &d);
                return Ok(Some((key, a, n, population)));
            }
        }
        Ok(None)
    }

    pub fn estimated_pair_count(
        &self,
        lex: &Lexicon,
        config: &Config,
        rule: &str,
        head: &SynsetId,
        dep: &SynsetId,
    ) -> Result<Estimate, CountsError> {
        let head = policy_synset(lex, config, head);
        let dep = policy_synset(lex, config, dep);
        lex.generalizations(&head)?;
        lex.generalizations(&dep)?;
        if let Some(c) = self.pair_count(&PairKey::new(rule, head.clone(), dep.clone())) {
            return Ok(Estimate {
                value: c as f64,
                source: EstimateSource::Exact,
            });
        }
        if let Some((ancestor, a, n, population)) = self.inherited(lex, config, rule, &head, &dep)? {
            let value = a as f64 * n as f64 / population as f64;
            return Ok(Estimate {
                value,
                source: EstimateSource::Inherited {
                    ancestor,
                    n,
                    population,
                    ancestor_count: a,
                },
            });
        }
        Ok(Estimate {
            value: config.epsilon,
            source: EstimateSource::Floor,
        })
    }

    /// Log probability that `head` takes `dep` under `rule`: the estimated
    /// pair count over the head's unary count, capped at zero.
    pub fn cooc_log_prob(
        &self,
        lex: &Lexicon,
        config: &Config,
        rule: &str,
        head: &SynsetId,
        dep: &SynsetId,
    ) -> Result<f64, CountsError> {
        let est = self.estimated_pair_count(lex, config, rule, head, dep)?;
        let head = policy_synset(lex, config, head);
        let unary = match est.source {
            // With no pair evidence at all, an unseen sense is measured
            // against the nearest generalization that has been seen.
            EstimateSource::Floor => lex
                .generalizations(&head)?
                .iter()
                .map(|(s, _)| self.unary(s))
                .find(|&u| u > 0)
                .unwrap_or(1),
            _ => self.effective_unary(&head),
        };
        Ok((est.value / unary as f64).min(1.0).ln())
    }

    /// Drops every pair whose count is within one count-scale standard
    /// deviation of its inherited estimate. Pairs serving as the basis of a
    /// dropped pair are kept, and the most specific pairs are considered
    /// first. Returns the number of dropped pairs.
    pub fn compact(&mut self, lex: &Lexicon, config: &Config) -> usize {
        let snapshot = self.clone();
        let mut order: Vec<&PairKey> = snapshot.pairs.keys().collect();
        order.sort_by_key(|k| std::cmp::Reverse(lex.height(&k.first) + lex.height(&k.second)));
        let mut protected: BTreeSet<PairKey> = BTreeSet::new();
        let mut dropped = BTreeSet::new();
        for key in order {
            if protected.contains(key) {
                continue;
            }
            let Ok(Some((ancestor, a, n, population))) =
                snapshot.inherited(lex, config, &key.rule, &key.first, &key.second)
            else {
                continue;
            };
            if dropped.contains(&ancestor) {
                continue;
            }
            let Ok(anti) = antisample_estimate(a, n, population) else {
                continue;
            };
            let c = snapshot.pairs[key] as f64;
            if (c - anti.estimate).abs() <= anti.count_std_dev(n) {
                dropped.insert(key.clone());
                protected.insert(ancestor);
            }
        }
        for key in &dropped {
            self.remove_pair(key);
        }
        dropped.len()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, c) in &self.pairs {
            let _ = writeln!(out, "pair {} {} {} {c}", k.rule, k.first, k.second);
        }
        for (s, c) in &self.unary {
            let _ = writeln!(out, "unary {s} {c}");
        }
        let _ = writeln!(out, "total {}", self.total);
        out
    }

    pub fn load(text: &str) -> Result<CountStore, CountsError> {
        let mut store = CountStore::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if fields.is_empty() || fields[0].starts_with('#') {
                continue;
            }
            let syntax = |message: String| CountsError::Syntax { line, message };
            let count = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| syntax(format!("count `{s}` is not a nonnegative integer")))
            };
            match fields.as_slice() {
                ["pair", rule, first, second, c] => {
                    let key = PairKey::new(rule, SynsetId::from(*first), SynsetId::from(*second));
                    if store.pairs.contains_key(&key) {
                        return Err(syntax("duplicate pair".into()));
                    }
                    store.set_pair(key, count(c)?);
                }
                ["unary", s, c] => store.set_unary(SynsetId::from(*s), count(c)?),
                ["total", c] => store.total = count(c)?,
                _ => return Err(syntax(format!("unrecognized record `{}`", raw.trim()))),
            }
        }
        Ok(store)
    }
}
