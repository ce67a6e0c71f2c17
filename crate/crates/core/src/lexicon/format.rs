//! Special-format token shapes (`bu# 7074`, `02/21/93`, `an/apq-89`).
//!
//! Pattern syntax: lowercase letters, digits, `#`, `/`, `-`, `.` and space
//! match themselves. `L` is a letter and `N` a digit; either may be followed
//! by `+` (one or more) or `*` (zero or more). `MM`, `DD` and `YY` match the
//! two-digit month, day and year of a date.

use super::SynsetId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Letter,
    Digit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Repeat {
    One,
    OneOrMore,
    ZeroOrMore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DateField {
    Month,
    Day,
    Year,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Element {
    Literal(char),
    Class(Class, Repeat),
    Date(DateField),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatPattern {
    source: String,
    elements: Vec<Element>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialFormatRule {
    pub name: String,
    pub pattern: FormatPattern,
    pub category: SynsetId,
}

impl FormatPattern {
    pub fn parse(source: &str) -> Result<FormatPattern, String> {
        let chars: Vec<char> = source.chars().collect();
        let mut elements = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let pair: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            match (c, pair.as_str()) {
                (_, "MM") | (_, "DD") | (_, "YY") => {
                    elements.push(Element::Date(match c {
                        'M' => DateField::Month,
                        'D' => DateField::Day,
                        _ => DateField::Year,
                    }));
                    i += 2;
                    continue;
                }
                ('L', _) | ('N', _) => {
                    let class = if c == 'L' { Class::Letter } else { Class::Digit };
                    let repeat = match chars.get(i + 1) {
                        Some('+') => Repeat::OneOrMore,
                        Some('*') => Repeat::ZeroOrMore,
                        _ => Repeat::One,
                    };
                    i += if repeat == Repeat::One { 1 } else { 2 };
                    elements.push(Element::Class(class, repeat));
                    continue;
                }
                _ => {}
            }
            if c.is_ascii_lowercase() || c.is_ascii_digit() || "#/-. ".contains(c) {
                elements.push(Element::Literal(c));
                i += 1;
            } else {
                return Err(format!("unsupported pattern character `{c}`"));
            }
        }
        if elements.is_empty() {
            return Err("empty pattern".into());
        }
        Ok(FormatPattern {
            source: source.to_string(),
            elements,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn is_date(&self) -> bool {
        self.elements.iter().any(|e| matches!(e, Element::Date(_)))
    }

    /// Every end offset (in chars) at which the pattern matches `text[start..]`.
    fn match_ends(&self, text: &[char], start: usize) -> Vec<usize> {
        let mut ends = Vec::new();
        self.walk(text, start, 0, &mut ends);
        ends.sort_unstable();
        ends.dedup();
        ends
    }

    fn walk(&self, text: &[char], pos: usize, el: usize, ends: &mut Vec<usize>) {
        let Some(element) = self.elements.get(el) else {
            ends.push(pos);
            return;
        };
        match element {
            Element::Literal(c) => {
                if text.get(pos) == Some(c) {
                    self.walk(text, pos + 1, el + 1, ends);
                }
            }
            Element::Date(field) => {
                let (Some(a), Some(b)) = (text.get(pos), text.get(pos + 1)) else {
                    return;
                };
                let (Some(a), Some(b)) = (a.to_digit(10), b.to_digit(10)) else {
                    return;
                };
                let v = a * 10 + b;
                let ok = match field {
                    DateField::Month => (1..=12).contains(&v),
                    DateField::Day => (1..=31).contains(&v),
                    DateField::Year => true,
                };
                if ok {
                    self.walk(text, pos + 2, el + 1, ends);
                }
            }
            Element::Class(class, repeat) => {
                let fits = |c: &char| match class {
                    Class::Letter => c.is_ascii_lowercase(),
                    Class::Digit => c.is_ascii_digit(),
                };
                let run = text[pos.min(text.len())..].iter().take_while(|c| fits(c)).count();
                let (lo, hi) = match repeat {
                    Repeat::One => (1, 1.min(run)),
                    Repeat::OneOrMore => (1, run),
                    Repeat::ZeroOrMore => (0, run),
                };
                for n in lo..=hi {
                    if n <= run {
                        self.walk(text, pos + n, el + 1, ends);
                    }
                }
            }
        }
    }

    /// Length of the longest match starting at `start`, if any.
    pub(super) fn longest_at(&self, text: &[char], start: usize, boundary: impl Fn(usize) -> bool) -> Option<usize> {
        self.match_ends(text, start)
            .into_iter()
            .rev()
            .find(|&end| end > start && boundary(end))
            .map(|end| end - start)
    }

    pub fn matches_whole(&self, token: &str) -> bool {
        let chars: Vec<char> = token.chars().collect();
        self.match_ends(&chars, 0).contains(&chars.len())
    }

    /// Canonical value for a token that matches the whole pattern.
    pub fn normalize(&self, token: &str) -> String {
        if self.is_date() {
            return self.normalize_date(token);
        }
        let prefix: usize = self
            .elements
            .iter()
            .take_while(|e| matches!(e, Element::Literal(_)))
            .count();
        let rest: String = token.chars().skip(prefix).collect();
        let rest = rest.trim();
        if rest.is_empty() {
            token.to_string()
        } else {
            rest.to_string()
        }
    }

    fn normalize_date(&self, token: &str) -> String {
        let chars: Vec<char> = token.chars().collect();
        let (mut month, mut day, mut year) = (String::new(), String::new(), String::new());
        let mut pos = 0;
        for e in &self.elements {
            match e {
                Element::Literal(_) => pos += 1,
                Element::Date(f) => {
                    let v: String = chars[pos..pos + 2].iter().collect();
                    match f {
                        DateField::Month => month = v,
                        DateField::Day => day = v,
                        DateField::Year => year = v,
                    }
                    pos += 2;
                }
                Element::Class(..) => return token.to_string(),
            }
        }
        let yy: u32 = year.parse().unwrap_or(0);
        let century = if yy >= 30 { 1900 } else { 2000 };
        format!("{:04}-{month}-{day}", century + yy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patterns_match_and_normalize() {
        let bu = FormatPattern::parse("bu# N+").unwrap();
        assert!(bu.matches_whole("bu# 462945"));
        assert!(!bu.matches_whole("bu#"));
        assert_eq!(bu.normalize("bu# 462945"), "462945");

        let date = FormatPattern::parse("MM/DD/YY").unwrap();
        assert!(date.matches_whole("02/21/93"));
        assert!(!date.matches_whole("13/21/93"));
        assert_eq!(date.normalize("02/21/93"), "1993-02-21");

        let an = FormatPattern::parse("an/L+-N+").unwrap();
        assert!(an.matches_whole("an/apq-89"));
        assert!(!an.matches_whole("an/apq"));

        let frac = FormatPattern::parse("N/N").unwrap();
        assert!(frac.matches_whole("3/4"));
        assert_eq!(frac.normalize("3/4"), "3/4");
    }

    #[test]
    fn rejects_unknown_syntax() {
        assert!(FormatPattern::parse("bu(").is_err());
        assert!(FormatPattern::parse("").is_err());
    }

    #[test]
    fn longest_match_respects_boundary() {
        let p = FormatPattern::parse("N+").unwrap();
        let text: Vec<char> = "7074, x".chars().collect();
        assert_eq!(p.longest_at(&text, 0, |_| true), Some(4));
        assert_eq!(p.longest_at(&text, 0, |e| e == 2), Some(2));
    }
}
