//! Learning pure Nash equilibria of two-player zero-sum matrix games from
//! noisy bandit feedback.
//!
//! The crate ships three learners (explore-then-commit, adaptive elimination
//! and non-uniform elimination), a Tsallis-INF baseline, closed-form regret
//! bounds, independent verification oracles and the experiment drivers behind
//! the `zsg` command-line tool.

pub mod bandit_env;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod learners;
pub mod matrix_game;
pub mod oracles;
pub mod regret_metrics;
pub mod rng;

pub use error::{Error, Result};
pub use matrix_game::{compute_gaps, find_pure_ne, GapProfile, Pair, PayoffMatrix};
