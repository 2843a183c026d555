use crate::bandit_env::EmpiricalEstimate;
use crate::error::{Error, Result};
use crate::matrix_game::{find_pure_ne, Pair, PayoffView};

use super::{Learner, LearnerConfig};

/// Explore every pair `k` times in row-major blocks, then commit for the rest
/// of the horizon to a saddle point of the estimated matrix.
///
/// When the estimate has no exact saddle the commitment is the maximin row
/// paired with the minimax column.
#[derive(Debug, Clone)]
pub struct EtcLearner {
    rows: usize,
    cols: usize,
    k: u64,
    explored: u64,
    est: EmpiricalEstimate,
    committed: Option<Pair>,
}

impl EtcLearner {
    pub fn new(rows: usize, cols: usize, config: &LearnerConfig) -> Result<Self> {
        config.validate()?;
        let k = config
            .k
            .ok_or_else(|| Error::InvalidParameter("etc requires k".into()))?;
        let n = (rows * cols) as u64;
        if k == 0 || n.saturating_mul(k) > config.horizon {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= N*k <= T, got N={n}, k={k}, T={}",
                config.horizon
            )));
        }
        Ok(Self {
            rows,
            cols,
            k,
            explored: 0,
            est: EmpiricalEstimate::new(rows, cols),
            committed: None,
        })
    }

    fn exploration_len(&self) -> u64 {
        (self.rows * self.cols) as u64 * self.k
    }

    fn commit(&mut self) -> Pair {
        assert!(
            self.est.counts().iter().all(|&c| c > 0),
            "commit read an unexplored cell"
        );
        let pair = match find_pure_ne(&self.est) {
            Some(ne) => ne.equilibrium.pair(),
            None => maximin_pair(&self.est),
        };
        self.committed = Some(pair);
        pair
    }
}

/// `argmax_i min_j M(i,j)` paired with `argmin_j max_i M(i,j)`, smallest
/// index on ties.
pub(crate) fn maximin_pair<V: PayoffView + ?Sized>(m: &V) -> Pair {
    let mut best_row = (0, f64::NEG_INFINITY);
    for i in 0..m.rows() {
        let worst = (0..m.cols()).map(|j| m.payoff(i, j)).fold(f64::INFINITY, f64::min);
        if worst > best_row.1 {
            best_row = (i, worst);
        }
    }
    let mut best_col = (0, f64::INFINITY);
    for j in 0..m.cols() {
        let worst = (0..m.rows()).map(|i| m.payoff(i, j)).fold(f64::NEG_INFINITY, f64::max);
        if worst < best_col.1 {
            best_col = (j, worst);
        }
    }
    (best_row.0, best_col.0)
}

impl Learner for EtcLearner {
    fn select(&mut self) -> Result<Pair> {
        if let Some(p) = self.committed {
            return Ok(p);
        }
        if self.explored < self.exploration_len() {
            let slot = (self.explored / self.k) as usize;
            return Ok((slot / self.cols, slot % self.cols));
        }
        Ok(self.commit())
    }

    fn update(&mut self, pair: Pair, reward: f64) -> Result<()> {
        if self.committed.is_none() {
            self.est.record(pair.0, pair.1, reward)?;
            self.explored += 1;
        }
        Ok(())
    }

    fn committed(&self) -> Option<Pair> {
        self.committed
    }
}
