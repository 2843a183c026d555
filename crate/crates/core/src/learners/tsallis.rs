//! Tsallis-INF (α = 1/2) run independently by each player.
//!
//! Each player keeps importance-weighted cumulative loss estimates `L̂` and
//! plays `p_i = 4 / (η (L̂_i - x))²`, with the normalizer `x < min L̂` found
//! by Newton's method and `η_t = 2/√t`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix_game::Pair;
use crate::rng::{stream, SimRng};

use super::{Learner, LearnerConfig};

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;

/// One player's Tsallis-INF state.
#[derive(Debug, Clone)]
pub struct TsallisPlayer {
    cum_loss: Vec<f64>,
    probs: Vec<f64>,
}

impl TsallisPlayer {
    pub fn new(actions: usize) -> Self {
        Self {
            cum_loss: vec![0.0; actions],
            probs: vec![1.0 / actions as f64; actions],
        }
    }

    /// Most recently computed sampling distribution.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Recomputes the sampling distribution for learning rate `eta`.
    pub fn distribution(&mut self, eta: f64) -> &[f64] {
        let min_loss = self.cum_loss.iter().copied().fold(f64::INFINITY, f64::min);
        // At this x the leading arm has weight exactly 1, so the sum is >= 1
        // and Newton descends monotonically onto the root (the map is convex
        // and increasing in x).
        let mut x = min_loss - 2.0 / eta;
        for _ in 0..NEWTON_MAX_ITER {
            let mut total = 0.0;
            let mut slope = 0.0;
            for &l in &self.cum_loss {
                let w = 4.0 / (eta * (l - x)).powi(2);
                total += w;
                slope += eta * w.powf(1.5);
            }
            let gap = total - 1.0;
            if gap.abs() < NEWTON_TOL {
                break;
            }
            x -= gap / slope;
        }
        for (p, &l) in self.probs.iter_mut().zip(&self.cum_loss) {
            *p = 4.0 / (eta * (l - x)).powi(2);
        }
        let total: f64 = self.probs.iter().sum();
        self.probs.iter_mut().for_each(|p| *p /= total);
        &self.probs
    }

    fn sample(&self, rng: &mut SimRng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }

    /// Importance-weighted update for the played action with loss in [0, 1].
    fn update(&mut self, action: usize, loss: f64) {
        self.cum_loss[action] += loss / self.probs[action];
    }
}

/// Both players running Tsallis-INF on normalized losses.
///
/// Row loss is `(B - r) / 2B`, column loss `(r + B) / 2B`, each clamped to
/// [0, 1], where `B` bounds the magnitude of observed payoffs.
#[derive(Debug, Clone)]
pub struct TsallisInf {
    row: TsallisPlayer,
    col: TsallisPlayer,
    bound: f64,
    t: u64,
    rng: SimRng,
}

impl TsallisInf {
    pub fn new(rows: usize, cols: usize, bound: f64, config: &LearnerConfig) -> Result<Self> {
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "loss scaling bound must be > 0, got {bound}"
            )));
        }
        if config.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        Ok(Self {
            row: TsallisPlayer::new(rows),
            col: TsallisPlayer::new(cols),
            bound,
            t: 0,
            rng: stream(config.seed),
        })
    }

    pub fn row_player(&self) -> &TsallisPlayer {
        &self.row
    }

    pub fn col_player(&self) -> &TsallisPlayer {
        &self.col
    }
}

impl Learner for TsallisInf {
    fn select(&mut self) -> Result<Pair> {
        self.t += 1;
        let eta = 2.0 / (self.t as f64).sqrt();
        self.row.distribution(eta);
        self.col.distribution(eta);
        let i = self.row.sample(&mut self.rng);
        let j = self.col.sample(&mut self.rng);
        Ok((i, j))
    }

    fn update(&mut self, pair: Pair, reward: f64) -> Result<()> {
        let b = self.bound;
        let row_loss = ((b - reward) / (2.0 * b)).clamp(0.0, 1.0);
        let col_loss = ((reward + b) / (2.0 * b)).clamp(0.0, 1.0);
        self.row.update(pair.0, row_loss);
        self.col.update(pair.1, col_loss);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit_env::{EnvHandle, NoiseModel};
    use crate::learners::tsallis_inf_run;
    use crate::matrix_game::PayoffMatrix;

    #[test]
    fn uniform_start() {
        let mut p = TsallisPlayer::new(4);
        let probs = p.distribution(2.0);
        for &x in probs {
            assert!((x - 0.25).abs() < 1e-9);
        }
    }

    #[test]
    fn lower_loss_gets_more_mass() {
        let mut p = TsallisPlayer::new(3);
        p.cum_loss = vec![10.0, 0.0, 25.0];
        let probs = p.distribution(0.1).to_vec();
        assert!(probs[1] > probs[0] && probs[0] > probs[2]);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distributions_stay_valid() {
        let a = PayoffMatrix::from_rows(&[vec![0.5, 0.2, -0.4], vec![0.9, 0.1, 0.0]]).unwrap();
        let cfg = LearnerConfig::new(2_000, 0.3).with_seed(17);
        let mut learner = TsallisInf::new(2, 3, a.max_abs() + 1.5, &cfg).unwrap();
        let mut env = EnvHandle::new(a, NoiseModel::gaussian(0.3).unwrap(), 2);
        for _ in 0..2_000 {
            let p = learner.select().unwrap();
            for probs in [learner.row_player().probabilities(), learner.col_player().probabilities()] {
                assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-8);
                assert!(probs.iter().all(|&x| x >= 0.0));
            }
            let r = env.sample_payoff(p.0, p.1).unwrap();
            learner.update(p, r).unwrap();
        }
    }

    #[test]
    fn single_pair_game() {
        let a = PayoffMatrix::new(1, 1, vec![-0.2]).unwrap();
        let mut env = EnvHandle::new(a, NoiseModel::gaussian(0.5).unwrap(), 0);
        let trace = tsallis_inf_run(&mut env, &LearnerConfig::new(300, 0.5)).unwrap();
        assert_eq!(trace.counts, vec![300]);
    }
}
