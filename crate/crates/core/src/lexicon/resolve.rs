//! Heuristic misspelling and abbreviation matching against known words.

use serde::{Deserialize, Serialize};

use super::Lexicon;
use crate::config::Config;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolutionKind {
    Misspelling,
    Abbreviation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub surface: String,
    pub kind: ResolutionKind,
    /// Levenshtein distance between token and candidate; lower is better.
    pub distance: usize,
    pub frequency_rank: u32,
}

fn is_vowel(c: char) -> bool {
    "aeiou".contains(c)
}

/// First letter plus every later consonant.
fn skeleton(word: &str) -> Vec<char> {
    let mut chars = word.chars().filter(|c| c.is_ascii_alphabetic());
    let Some(first) = chars.next() else {
        return Vec::new();
    };
    std::iter::once(first).chain(chars.filter(|c| !is_vowel(*c))).collect()
}

fn is_subsequence(needle: &[char], hay: &[char]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|c| it.any(|h| h == c))
}

impl Lexicon {
    /// Known words the token could be a misspelling or abbreviation of,
    /// best first. Empty when nothing qualifies.
    pub fn resolve_unknown(&self, token: &str, config: &Config) -> Vec<Resolution> {
        let len = token.chars().count();
        let max_edit = if len < config.short_token_len {
            config.short_misspelling_distance
        } else {
            config.misspelling_distance
        };
        let letters: Vec<char> = token.chars().collect();
        let abbreviation_shape = len >= 2 && letters.iter().all(|c| c.is_ascii_lowercase());
        let mut out = Vec::new();
        for (surface, senses) in self.surfaces() {
            if surface.contains(' ') || surface == token {
                continue;
            }
            let rank = senses.iter().map(|s| s.frequency_rank).min().unwrap_or(u32::MAX);
            let distance = strsim::levenshtein(token, surface);
            if distance <= max_edit {
                out.push(Resolution {
                    surface: surface.to_string(),
                    kind: ResolutionKind::Misspelling,
                    distance,
                    frequency_rank: rank,
                });
            } else if abbreviation_shape
                && surface.chars().count() > len
                && surface.starts_with(letters[0])
                && is_subsequence(&letters, &skeleton(surface))
            {
                out.push(Resolution {
                    surface: surface.to_string(),
                    kind: ResolutionKind::Abbreviation,
                    distance,
                    frequency_rank: rank,
                });
            }
        }
        out.sort_by(|a, b| {
            (a.distance, a.frequency_rank, &a.surface).cmp(&(b.distance, b.frequency_rank, &b.surface))
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::small;
    use super::*;

    #[test]
    fn examples_resolve() {
        let lex = small();
        let cfg = Config::default();
        let r = lex.resolve_unknown("trngl", &cfg);
        assert_eq!(r[0].surface, "triangle");
        assert_eq!(r[0].kind, ResolutionKind::Abbreviation);
        let r = lex.resolve_unknown("crcl", &cfg);
        assert_eq!(r[0].surface, "circle");
        let r = lex.resolve_unknown("inyodern", &cfg);
        assert_eq!(r[0].surface, "inyokern");
        assert_eq!(r[0].kind, ResolutionKind::Misspelling);
        assert!(lex.resolve_unknown("qqqqqqqqqq", &cfg).is_empty());
    }

    #[test]
    fn short_tokens_use_tighter_edit_bound() {
        let lex = small();
        let cfg = Config::default();
        // "snakx" is 5 chars: one edit allowed.
        assert!(lex.resolve_unknown("snakx", &cfg).iter().any(|r| r.surface == "snake"));
        assert!(!lex.resolve_unknown("snxkx", &cfg).iter().any(|r| r.surface == "snake"));
    }

    #[test]
    fn skeletons() {
        assert_eq!(skeleton("triangle"), vec!['t', 'r', 'n', 'g', 'l']);
        assert_eq!(skeleton("aircraft"), vec!['a', 'r', 'c', 'r', 'f', 't']);
    }
}
