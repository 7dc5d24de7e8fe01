//! Continuous author name disambiguation.
//!
//! Given a freshly published paper and one of its author slots, rank the
//! existing person profiles that carry a compatible name and decide whether
//! the best-ranked profile is the author or whether the paper belongs to a
//! person the system has never seen (NIL).
//!
//! The crate is `no_std` and only needs an allocator. File formats, the
//! pipeline and the command-line front end live in the `namefly` crate.
//!
//! Layout:
//!
//! * [`corpus`]: papers, persons, disambiguation instances, splitting and a
//!   planted synthetic generator.
//! * [`candidates`]: name normalization, name variants, Jaro-Winkler and the
//!   same-coauthor ratio diagnostic.
//! * [`text`] and [`embeddings`]: tokenization and skip-gram pre-training.
//! * [`kernel`], [`attention`], [`mlp`], [`matcher`]: the interaction-based
//!   matcher with hand-written backward passes.
//! * [`decider`] and [`joint`]: NIL decision and reward-weighted joint
//!   fine-tuning.
//! * [`baselines`] and [`eval`]: feature/GBDT and threshold baselines, metrics.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attention;
pub mod baselines;
pub mod candidates;
pub mod corpus;
pub mod decider;
pub mod embeddings;
mod error;
pub mod eval;
pub mod joint;
pub mod kernel;
pub mod matcher;
mod math;
pub mod mlp;
pub mod optim;
pub mod seed;
pub mod text;

pub use error::{Error, Result};
