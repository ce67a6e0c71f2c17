//! Caption parsing and retrieval.
//!
//! Captions are tokenized against a [`lexicon::Lexicon`], parsed with a
//! binary [`grammar::Grammar`] whose parses are scored by co-occurrence
//! statistics from a [`counts::CountStore`], turned into meaning lists by
//! [`semantics`], and matched against queries by [`retrieval`]. The
//! [`trainer`] accumulates counts from reviewed parses.

pub mod config;
pub mod lexicon;
pub mod grammar;
pub mod counts;
pub mod model;
pub mod parser;
pub mod semantics;
pub mod retrieval;
pub mod trainer;
