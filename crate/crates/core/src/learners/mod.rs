//! Online learners for pure equilibria under bandit feedback.
//!
//! Every learner follows the same step contract ([`Learner`]): it emits an
//! action pair, receives the noisy payoff for it, and repeats until the
//! horizon is spent. [`play`] drives a learner against an environment and
//! records a [`RunTrace`].

mod elimination;
mod etc;
pub mod schedule;
mod tsallis;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bandit_env::EnvHandle;
use crate::error::{Error, Result};
use crate::matrix_game::Pair;

pub use elimination::{EliminationLearner, ExplorationMode};
pub use etc::EtcLearner;
pub use schedule::{
    ae_last_round, ae_schedule, etc_exploration_k, nue_last_round, nue_schedule, RoundSchedule,
};
pub use tsallis::{TsallisInf, TsallisPlayer};

/// Learner selector, matching the CLI tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Etc,
    Ae,
    Nue,
    Tsallis,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Etc,
        Algorithm::Ae,
        Algorithm::Nue,
        Algorithm::Tsallis,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            Algorithm::Etc => "etc",
            Algorithm::Ae => "ae",
            Algorithm::Nue => "nue",
            Algorithm::Tsallis => "tsallis",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "etc" => Ok(Algorithm::Etc),
            "ae" => Ok(Algorithm::Ae),
            "nue" => Ok(Algorithm::Nue),
            "tsallis" => Ok(Algorithm::Tsallis),
            other => Err(Error::InvalidParameter(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Parameters shared by all learners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Round budget `T`.
    pub horizon: u64,
    /// Subgaussian parameter assumed by the schedules.
    pub sigma: f64,
    /// Per-pair exploration count (ETC only).
    pub k: Option<u64>,
    /// Seed of the learner's own randomness (Tsallis-INF sampling).
    pub seed: u64,
}

impl LearnerConfig {
    pub fn new(horizon: u64, sigma: f64) -> Self {
        Self {
            horizon,
            sigma,
            k: None,
            seed: 0,
        }
    }

    pub fn with_k(mut self, k: u64) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be finite and > 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// The step contract shared by all learners.
pub trait Learner {
    /// Next action pair to play.
    fn select(&mut self) -> Result<Pair>;
    /// Feeds back the payoff observed for the pair returned by `select`.
    fn update(&mut self, pair: Pair, reward: f64) -> Result<()>;
    /// Pair the learner has committed to, if any.
    fn committed(&self) -> Option<Pair> {
        None
    }
    /// Per-round log (elimination learners only).
    fn rounds(&self) -> &[RoundRecord] {
        &[]
    }
}

/// One played step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step {
    /// 1-based step index.
    pub t: u64,
    pub row: usize,
    pub col: usize,
    pub reward: f64,
}

/// What happened in one elimination round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub schedule: RoundSchedule,
    /// Active pairs at round start with their planned plays.
    pub plays: Vec<(Pair, u64)>,
    /// Pairs removed at the end of the round.
    pub eliminated: Vec<Pair>,
    /// False when the horizon ran out mid-round.
    pub completed: bool,
}

/// Full record of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    pub algorithm: Algorithm,
    pub rows: usize,
    pub cols: usize,
    pub steps: Vec<Step>,
    /// Row-major play counts `n_ij,T`.
    pub counts: Vec<u64>,
    pub committed: Option<Pair>,
    pub rounds: Vec<RoundRecord>,
}

impl RunTrace {
    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols + col]
    }

    pub fn pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        self.steps.iter().map(|s| (s.row, s.col))
    }
}

/// Drives `learner` against `env` for `horizon` steps.
pub fn play<L: Learner + ?Sized>(
    algorithm: Algorithm,
    learner: &mut L,
    env: &mut EnvHandle,
    horizon: u64,
) -> Result<RunTrace> {
    let (rows, cols) = (env.truth().rows(), env.truth().cols());
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut counts = vec![0u64; rows * cols];
    for t in 1..=horizon {
        let (i, j) = learner.select()?;
        let r = env.sample_payoff(i, j)?;
        learner.update((i, j), r)?;
        counts[i * cols + j] += 1;
        steps.push(Step {
            t,
            row: i,
            col: j,
            reward: r,
        });
    }
    Ok(RunTrace {
        algorithm,
        rows,
        cols,
        steps,
        counts,
        committed: learner.committed(),
        rounds: learner.rounds().to_vec(),
    })
}

/// Explore-then-commit for zero-sum games.
pub fn etc_zsg_run(env: &mut EnvHandle, config: &LearnerConfig) -> Result<RunTrace> {
    let mut learner = EtcLearner::new(env.truth().rows(), env.truth().cols(), config)?;
    play(Algorithm::Etc, &mut learner, env, config.horizon)
}

/// Explore-then-commit with adaptive action-pair elimination.
pub fn ae_run(env: &mut EnvHandle, config: &LearnerConfig) -> Result<RunTrace> {
    let mut learner = EliminationLearner::new(
        env.truth().rows(),
        env.truth().cols(),
        config,
        ExplorationMode::Uniform,
    )?;
    play(Algorithm::Ae, &mut learner, env, config.horizon)
}

/// Elimination with exploration weighted by the estimated equilibrium.
pub fn nue_run(env: &mut EnvHandle, config: &LearnerConfig) -> Result<RunTrace> {
    let mut learner = EliminationLearner::new(
        env.truth().rows(),
        env.truth().cols(),
        config,
        ExplorationMode::NonUniform,
    )?;
    play(Algorithm::Nue, &mut learner, env, config.horizon)
}

/// Independent Tsallis-INF learners for both players (comparison baseline).
pub fn tsallis_inf_run(env: &mut EnvHandle, config: &LearnerConfig) -> Result<RunTrace> {
    let bound = env.truth().max_abs() + 5.0 * config.sigma;
    let mut learner = TsallisInf::new(env.truth().rows(), env.truth().cols(), bound, config)?;
    play(Algorithm::Tsallis, &mut learner, env, config.horizon)
}

/// Dispatches on `algorithm`.
pub fn run(algorithm: Algorithm, env: &mut EnvHandle, config: &LearnerConfig) -> Result<RunTrace> {
    match algorithm {
        Algorithm::Etc => etc_zsg_run(env, config),
        Algorithm::Ae => ae_run(env, config),
        Algorithm::Nue => nue_run(env, config),
        Algorithm::Tsallis => tsallis_inf_run(env, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_tokens_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.token().parse::<Algorithm>().unwrap(), a);
        }
        assert!("ucb".parse::<Algorithm>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(LearnerConfig::new(0, 0.5).validate().is_err());
        assert!(LearnerConfig::new(10, 0.0).validate().is_err());
        assert!(LearnerConfig::new(10, f64::NAN).validate().is_err());
        assert!(LearnerConfig::new(10, 0.5).validate().is_ok());
    }
}
