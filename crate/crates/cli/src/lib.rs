//! Library surface of the command-line pipeline, kept separate from the
//! binary so integration tests can drive the stages directly.

pub mod config;
pub mod pipeline;
