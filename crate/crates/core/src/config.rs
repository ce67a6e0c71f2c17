//! Tunable parameters, read from `key=value` lines.

use std::fmt::Write as _;

use crate::lexicon::SynsetId;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: invalid value for `{key}`: {value}")]
    BadValue { line: usize, key: String, value: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Minimum ancestor-pair count before it is trusted for inheritance.
    pub theta: u64,
    /// Count floor used when no ancestor pair qualifies.
    pub epsilon: f64,
    /// Additive smoothing for rule probabilities.
    pub alpha: f64,
    /// Log-score margin for keeping alternative interpretations.
    pub delta: f64,
    pub review_depth: usize,
    pub oracle_cap: usize,
    pub max_alternatives: usize,
    pub unknown_roots: Vec<SynsetId>,
    pub code_categories: Vec<SynsetId>,
    /// Maximum ancestor distance used when propagating pair counts.
    pub generalization_depth: Option<usize>,
    pub misspelling_distance: usize,
    pub short_misspelling_distance: usize,
    /// Tokens shorter than this use `short_misspelling_distance`.
    pub short_token_len: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            theta: 5,
            epsilon: 0.5,
            alpha: 0.5,
            delta: 100f64.ln(),
            review_depth: 10,
            oracle_cap: 10,
            max_alternatives: 5,
            unknown_roots: ["equipment-1", "person-1", "place-1"]
                .into_iter()
                .map(SynsetId::from)
                .collect(),
            code_categories: Vec::new(),
            generalization_depth: None,
            misspelling_distance: 2,
            short_misspelling_distance: 1,
            short_token_len: 6,
        }
    }
}

fn ids(value: &str) -> Vec<SynsetId> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(SynsetId::from)
        .collect()
}

impl Config {
    /// Parses overrides on top of the defaults. Unknown keys are errors.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ConfigError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            };
            let positive_f = |v: &str| v.parse::<f64>().ok().filter(|x| *x > 0.0 && x.is_finite());
            let positive_u = |v: &str| v.parse::<usize>().ok().filter(|x| *x > 0);
            match key {
                "theta" => cfg.theta = value.parse().ok().filter(|x| *x > 0).ok_or_else(bad)?,
                "epsilon" => cfg.epsilon = positive_f(value).ok_or_else(bad)?,
                "alpha" => cfg.alpha = positive_f(value).ok_or_else(bad)?,
                "delta" => cfg.delta = positive_f(value).ok_or_else(bad)?,
                "review_depth" => cfg.review_depth = positive_u(value).ok_or_else(bad)?,
                "oracle_cap" => cfg.oracle_cap = positive_u(value).ok_or_else(bad)?,
                "max_alternatives" => cfg.max_alternatives = positive_u(value).ok_or_else(bad)?,
                "unknown_roots" => {
                    cfg.unknown_roots = ids(value);
                    if cfg.unknown_roots.is_empty() {
                        return Err(bad());
                    }
                }
                "code_categories" => cfg.code_categories = ids(value),
                "generalization_depth" => {
                    cfg.generalization_depth = match value {
                        "unlimited" | "" => None,
                        v => Some(positive_u(v).ok_or_else(bad)?),
                    }
                }
                "misspelling_distance" => cfg.misspelling_distance = positive_u(value).ok_or_else(bad)?,
                "short_misspelling_distance" => {
                    cfg.short_misspelling_distance = value.parse().map_err(|_| bad())?
                }
                "short_token_len" => cfg.short_token_len = positive_u(value).ok_or_else(bad)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[SynsetId]| v.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let _ = writeln!(out, "theta={}", self.theta);
        let _ = writeln!(out, "epsilon={}", self.epsilon);
        let _ = writeln!(out, "alpha={}", self.alpha);
        let _ = writeln!(out, "delta={}", self.delta);
        let _ = writeln!(out, "review_depth={}", self.review_depth);
        let _ = writeln!(out, "oracle_cap={}", self.oracle_cap);
        let _ = writeln!(out, "max_alternatives={}", self.max_alternatives);
        let _ = writeln!(out, "unknown_roots={}", join(&self.unknown_roots));
        let _ = writeln!(out, "code_categories={}", join(&self.code_categories));
        match self.generalization_depth {
            Some(d) => {
                let _ = writeln!(out, "generalization_depth={d}");
            }
            None => {
                let _ = writeln!(out, "generalization_depth=unlimited");
            }
        }
        let _ = writeln!(out, "misspelling_distance={}", self.misspelling_distance);
        let _ = writeln!(out, "short_misspelling_distance={}", self.short_misspelling_distance);
        let _ = writeln!(out, "short_token_len={}", self.short_token_len);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_round_trip() {
        let cfg = Config::default();
        assert_eq!(Config::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn overrides_and_errors() {
        let cfg = Config::parse("# c\ntheta=7\ncode_categories=date-1, aircraft-id-1\n").unwrap();
        assert_eq!(cfg.theta, 7);
        assert_eq!(cfg.code_categories.len(), 2);
        assert_eq!(Config::parse("theta").unwrap_err(), ConfigError::Syntax { line: 1 });
        assert!(matches!(Config::parse("\nfoo=1"), Err(ConfigError::UnknownKey { line: 2, .. })));
        assert!(matches!(Config::parse("epsilon=-1"), Err(ConfigError::BadValue { .. })));
    }
}
