//! File formats and command line for `lkq-core`.

pub mod cli;
pub mod document;
pub mod numbers;
