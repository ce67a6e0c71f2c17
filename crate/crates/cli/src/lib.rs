//! Command-line and HTTP front ends over `caption_core`.

pub mod app;
pub mod service;
