//! Iterative machine teaching by label synthesis.
//!
//! A teacher watches a gradient-descent learner and, instead of choosing which
//! example to show, rewrites the label of a randomly drawn example so that one
//! SGD step moves the learner as close as possible to a target `w*`.

pub mod error;
pub mod data;
pub mod greedy;
pub mod harness;
pub mod learners;
pub mod numerics;
pub mod param;

pub use error::{Error, Result};
