//! File formats, the annotation service and the command line around
//! `valence-core`.

pub mod annotation;
pub mod cli;
pub mod config;
pub mod dond;
pub mod eval;
pub mod manifest;
pub mod tracks;
