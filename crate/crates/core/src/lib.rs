//! Rewriting of conjunctive queries under tuple-generating dependencies
//! into unions of conjunctive queries (and SQL) that can be evaluated
//! directly over the stored database.

pub mod chase;
pub mod cli;
pub mod eliminate;
pub mod emit;
pub mod error;
pub mod graphs;
pub mod model;
pub mod normalize;
pub mod parallel;
pub mod parser;
pub mod rewriter;
pub mod subsume;

pub use error::{Error, Result};
