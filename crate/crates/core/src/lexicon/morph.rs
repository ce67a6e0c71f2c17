//! Suffix stripping for the four inflection families.

use super::{Pos, WordForm};

const VERB_NOUN: &[Pos] = &[Pos::Noun, Pos::Verb];
const VERB: &[Pos] = &[Pos::Verb];
const ADJ: &[Pos] = &[Pos::Adjective];

fn undouble(stem: &str) -> Option<String> {
    let b = stem.as_bytes();
    let n = b.len();
    (n >= 3 && b[n - 1] == b[n - 2] && !b"aeiouslz".contains(&b[n - 1])).then(|| stem[..n - 1].to_string())
}

/// Candidate lemma spellings for `token`, with the form and the parts of
/// speech the lemma must have for the analysis to hold.
pub(super) fn candidate_stems(token: &str) -> Vec<(String, WordForm, &'static [Pos])> {
    let mut out = Vec::new();
    let mut push = |stem: String, form, pos| {
        if stem.len() >= 2 {
            out.push((stem, form, pos));
        }
    };
    if let Some(stem) = token.strip_suffix("ies") {
        push(format!("{stem}y"), WordForm::Plural, VERB_NOUN);
    }
    if let Some(stem) = token.strip_suffix("es") {
        push(stem.to_string(), WordForm::Plural, VERB_NOUN);
    }
    if let Some(stem) = token.strip_suffix('s') {
        if !stem.ends_with('s') {
            push(stem.to_string(), WordForm::Plural, VERB_NOUN);
        }
    }
    for (suffix, form, pos) in [("ing", WordForm::Ing, VERB), ("ed", WordForm::Ed, VERB), ("er", WordForm::Er, ADJ)] {
        let Some(stem) = token.strip_suffix(suffix) else {
            continue;
        };
        push(stem.to_string(), form, pos);
        push(format!("{stem}e"), form, pos);
        if let Some(u) = undouble(stem) {
            push(u, form, pos);
        }
        if form != WordForm::Ing {
            if let Some(y) = stem.strip_suffix('i') {
                push(format!("{y}y"), form, pos);
            }
        }
    }
    out
}
