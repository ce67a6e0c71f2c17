use super::{Lexicon, SynsetId};

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || "#/-'&+".contains(c)
}

/// A position may end a token if it is the end of text, whitespace, or
/// punctuation that will itself be split off.
fn at_boundary(text: &[char], end: usize) -> bool {
    match text.get(end) {
        None => true,
        Some(c) if c.is_whitespace() => true,
        Some('.') => text.get(end + 1).is_none_or(|c| !c.is_alphanumeric()),
        Some(c) => !is_word_char(*c),
    }
}

impl Lexicon {
    /// Splits lowercase caption text into tokens. Special-format shapes are
    /// matched first (longest match, then file order), then words and
    /// punctuation, then known multi-word phrases are merged.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        let mut raw: Vec<(String, bool)> = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            let special = self
                .formats
                .iter()
                .filter_map(|r| r.pattern.longest_at(&chars, i, |end| at_boundary(&chars, end)))
                .max();
            if let Some(len) = special {
                raw.push((chars[i..i + len].iter().collect(), true));
                i += len;
                continue;
            }
            if is_word_char(chars[i]) {
                let start = i;
                while i < chars.len() {
                    let c = chars[i];
                    let inner_dot = c == '.' && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
                    if is_word_char(c) || inner_dot {
                        i += 1;
                    } else {
                        break;
                    }
                }
                raw.push((chars[start..i].iter().collect(), true));
            } else {
                raw.push((chars[i].to_string(), false));
                i += 1;
            }
        }
        self.merge_phrases(raw)
    }

    fn merge_phrases(&self, raw: Vec<(String, bool)>) -> Vec<String> {
        let mut out = Vec::with_capacity(raw.len());
        let mut i = 0;
        while i < raw.len() {
            let mut taken = 1;
            for len in (2..=self.phrase_len.min(raw.len() - i)).rev() {
                let window = &raw[i..i + len];
                if !window.iter().all(|(_, w)| *w) {
                    continue;
                }
                let joined = window.iter().map(|(t, _)| t.as_str()).collect::<Vec<_>>().join(" ");
                if self.is_phrase(&joined) {
                    out.push(joined);
                    taken = len;
                    break;
                }
            }
            if taken == 1 {
                out.push(raw[i].0.clone());
            }
            i += taken;
        }
        out
    }

    /// Category and normalised value for a special-format token; the first
    /// rule in file order that matches the whole token wins.
    pub fn classify_special(&self, token: &str) -> Option<(SynsetId, String)> {
        self.formats
            .iter()
            .find(|r| r.pattern.matches_whole(token))
            .map(|r| (r.category.clone(), r.pattern.normalize(token)))
    }
}
