#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use caption_core::model::{DataDir, Model};

pub fn data_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn fixture_model() -> Model {
    Model::load(&DataDir::new(data_root()), None).expect("fixture data loads")
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(data_root().join(name)).expect("fixture file")
}

/// Reflexive-transitive `ako` closure read straight from the hierarchy
/// file, kept apart from the lexicon's own traversal.
pub struct AncestorOracle {
    parents: BTreeMap<String, BTreeSet<String>>,
}

impl AncestorOracle {
    pub fn from_fixture() -> AncestorOracle {
        let mut parents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for line in fixture_text("lexicon/hierarchy.txt").lines() {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.first() == Some(&"ako") {
                parents.entry(f[1].to_string()).or_default().insert(f[2].to_string());
            }
        }
        AncestorOracle { parents }
    }

    pub fn closure(&self, s: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![s.to_string()];
        while let Some(x) = stack.pop() {
            if seen.insert(x.clone()) {
                stack.extend(self.parents.get(&x).into_iter().flatten().cloned());
            }
        }
        seen
    }
}
