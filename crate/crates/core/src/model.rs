//! Lexicon, grammar, counts and configuration bundled together, plus the
//! data-directory layout they are loaded from.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::config::{Config, ConfigError};
use crate::counts::{CountStore, CountsError};
use crate::grammar::{Grammar, GrammarError, PREP_ATTACH};
use crate::lexicon::{Lexicon, LexiconError, PrepClass, SynsetId};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Counts(#[from] CountsError),
    #[error("unknown statistic key `{0}`")]
    UnknownStatKey(String),
    #[error("configured synset `{0}` is not in the lexicon")]
    UnknownConfigSynset(SynsetId),
}

/// Files under a data directory.
#[derive(Clone, Debug)]
pub struct DataDir {
    pub root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> DataDir {
        DataDir { root: root.into() }
    }

    pub fn lexicon(&self) -> PathBuf {
        self.root.join("lexicon/lexicon.txt")
    }
    pub fn hierarchy(&self) -> PathBuf {
        self.root.join("lexicon/hierarchy.txt")
    }
    pub fn formats(&self) -> PathBuf {
        self.root.join("lexicon/formats.txt")
    }
    pub fn grammar(&self) -> PathBuf {
        self.root.join("grammar.txt")
    }
    pub fn counts(&self) -> PathBuf {
        self.root.join("counts.txt")
    }
    pub fn config(&self) -> PathBuf {
        self.root.join("config.txt")
    }
    pub fn journal(&self) -> PathBuf {
        self.root.join("journal.txt")
    }
    pub fn index_dir(&self) -> PathBuf {
        self.root.join("index")
    }
    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus.txt")
    }
    pub fn gold(&self) -> PathBuf {
        self.root.join("gold.txt")
    }
    /// Counts and grammar as they were when the current journal started.
    pub fn session_base(&self) -> PathBuf {
        self.root.join("session-base")
    }
    pub fn session_lock(&self) -> PathBuf {
        self.root.join("session.lock")
    }
}

pub fn read(path: &Path) -> Result<String, ModelError> {
    fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_optional(path: &Path) -> Result<String, ModelError> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(String::new()),
        Err(source) => Err(ModelError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

pub fn write(path: &Path, text: &str) -> Result<(), ModelError> {
    let io_err = |source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

#[derive(Clone, Debug)]
pub struct Model {
    pub lexicon: Lexicon,
    pub grammar: Grammar,
    pub counts: CountStore,
    pub config: Config,
}

impl Model {
    pub fn new(lexicon: Lexicon, grammar: Grammar, counts: CountStore, config: Config) -> Result<Model, ModelError> {
        for s in config.unknown_roots.iter().chain(&config.code_categories) {
            if !lexicon.contains(s) {
                return Err(ModelError::UnknownConfigSynset(s.clone()));
            }
        }
        Ok(Model {
            lexicon,
            grammar,
            counts,
            config,
        })
    }

    /// Loads every component; a missing counts file or config file means
    /// empty counts or defaults. `config_override` replaces `config.txt`.
    pub fn load(dir: &DataDir, config_override: Option<&Path>) -> Result<Model, ModelError> {
        let config_text = match config_override {
            Some(p) => read(p)?,
            None => read_optional(&dir.config())?,
        };
        let config = Config::parse(&config_text)?;
        let lexicon = Lexicon::load(&read(&dir.lexicon())?, &read(&dir.hierarchy())?, &read_optional(&dir.formats())?)?;
        let grammar = Grammar::load(&read(&dir.grammar())?)?;
        let counts = CountStore::load(&read_optional(&dir.counts())?)?;
        Model::new(lexicon, grammar, counts, config)
    }

    pub fn save_counts(&self, dir: &DataDir) -> Result<(), ModelError> {
        write(&dir.counts(), &self.counts.to_text())?;
        write(&dir.grammar(), &self.grammar.to_text())
    }

    /// Whether `key` names a binary rule, or a preposition-attaching binary
    /// rule followed by `/<class>`.
    pub fn is_stat_key(&self, key: &str) -> bool {
        let (rule, class) = match key.split_once('/') {
            Some((r, c)) => (r, Some(c)),
            None => (key, None),
        };
        let Some(rule) = self.grammar.rule(rule) else {
            return false;
        };
        let attaches = rule.relation.as_deref() == Some(PREP_ATTACH);
        rule.is_binary()
            && match class {
                None => !attaches,
                Some(c) => attaches && c.parse::<PrepClass>().is_ok(),
            }
    }

    pub fn increment_pair(&mut self, key: &str, head: &SynsetId, dep: &SynsetId, delta: u64) -> Result<(), ModelError> {
        if !self.is_stat_key(key) {
            return Err(ModelError::UnknownStatKey(key.to_string()));
        }
        self.counts
            .increment_pair(&self.lexicon, &self.config, key, head, dep, delta)?;
        Ok(())
    }
}
