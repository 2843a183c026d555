//! Round-based action-pair elimination.
//!
//! Each round explores every surviving pair, then drops the pairs that fail
//! the ε-equilibrium test on the running estimate (comparisons only against
//! rows and columns that still have a surviving pair). The gap guess halves
//! every round. Once one pair survives it is played until the horizon; if
//! several survive the last round, the pair with the largest ε-equilibrium
//! slack is committed.
//!
//! The non-uniform variant adds to each pair's exploration a share
//! proportional to the joint probability of the minimax strategies computed
//! on the surviving sub-game, and runs half as many rounds.

use crate::bandit_env::EmpiricalEstimate;
use crate::error::Result;
use crate::matrix_game::{
    eps_ne_satisfied, joint_probabilities, materialize, ne_margin, solve_minimax, Pair,
    PayoffMatrix,
};

use super::schedule::{ae_last_round, nue_last_round, round_schedule};
use super::{Learner, LearnerConfig, RoundRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExplorationMode {
    /// `k_t` plays per active pair.
    Uniform,
    /// `k_t + ⌈k_raw · P̂_ij⌉` plays per active pair.
    NonUniform,
}

#[derive(Debug, Clone)]
pub struct EliminationLearner {
    rows: usize,
    cols: usize,
    sigma: f64,
    horizon: u64,
    mode: ExplorationMode,
    last_round: usize,
    round: usize,
    est: EmpiricalEstimate,
    active: Vec<bool>,
    /// Row-major joint probabilities for the next round (non-uniform mode).
    joint: Vec<f64>,
    plan: Vec<(Pair, u64)>,
    cursor: usize,
    left_in_block: u64,
    committed: Option<Pair>,
    rounds: Vec<RoundRecord>,
}

impl EliminationLearner {
    pub fn new(
        rows: usize,
        cols: usize,
        config: &LearnerConfig,
        mode: ExplorationMode,
    ) -> Result<Self> {
        config.validate()?;
        let n = rows * cols;
        if config.horizon < n as u64 {
            return Err(crate::error::Error::InvalidParameter(format!(
                "horizon {} smaller than number of pairs {n}",
                config.horizon
            )));
        }
        let last_round = match mode {
            ExplorationMode::Uniform => ae_last_round(config.horizon),
            ExplorationMode::NonUniform => nue_last_round(config.horizon),
        };
        let mut learner = Self {
            rows,
            cols,
            sigma: config.sigma,
            horizon: config.horizon,
            mode,
            last_round,
            round: 0,
            est: EmpiricalEstimate::new(rows, cols),
            active: vec![true; n],
            joint: vec![1.0 / n as f64; n],
            plan: Vec::new(),
            cursor: 0,
            left_in_block: 0,
            committed: None,
            rounds: Vec::new(),
        };
        learner.begin_round()?;
        Ok(learner)
    }

    pub fn active_pairs(&self) -> Vec<Pair> {
        (0..self.rows * self.cols)
            .filter(|&k| self.active[k])
            .map(|k| (k / self.cols, k % self.cols))
            .collect()
    }

    pub fn estimate(&self) -> &EmpiricalEstimate {
        &self.est
    }

    /// Index of the final elimination round.
    pub fn last_round(&self) -> usize {
        self.last_round
    }

    /// Joint probabilities that weight the upcoming round.
    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    fn active_rows_cols(&self) -> (Vec<usize>, Vec<usize>) {
        let rows = (0..self.rows)
            .filter(|&i| (0..self.cols).any(|j| self.active[i * self.cols + j]))
            .collect();
        let cols = (0..self.cols)
            .filter(|&j| (0..self.rows).any(|i| self.active[i * self.cols + j]))
            .collect();
        (rows, cols)
    }

    fn begin_round(&mut self) -> Result<()> {
        let active = self.active_pairs();
        if active.len() == 1 {
            self.committed = Some(active[0]);
            return Ok(());
        }
        if self.round > self.last_round {
            self.committed = Some(self.max_margin_pair(&active, 0.0)?);
            return Ok(());
        }
        let schedule = round_schedule(self.round, self.sigma, self.horizon)?;
        let plan: Vec<(Pair, u64)> = active
            .iter()
            .map(|&(i, j)| {
                let extra = match self.mode {
                    ExplorationMode::Uniform => 0,
                    ExplorationMode::NonUniform => {
                        (schedule.k_raw * self.joint[i * self.cols + j]).ceil() as u64
                    }
                };
                ((i, j), schedule.k + extra)
            })
            .collect();
        self.rounds.push(RoundRecord {
            schedule,
            plays: plan.clone(),
            eliminated: Vec::new(),
            completed: false,
        });
        self.left_in_block = plan[0].1;
        self.plan = plan;
        self.cursor = 0;
        Ok(())
    }

    fn max_margin_pair(&self, candidates: &[Pair], eps: f64) -> Result<Pair> {
        let (rows, cols) = self.active_rows_cols();
        let mut best = (candidates[0], f64::NEG_INFINITY);
        for &(i, j) in candidates {
            let m = ne_margin(&self.est, i, j, eps, &rows, &cols)?;
            if m > best.1 {
                best = ((i, j), m);
            }
        }
        Ok(best.0)
    }

    fn end_round(&mut self) -> Result<()> {
        let eps = self.rounds.last().expect("round in progress").schedule.eps;
        let (rows, cols) = self.active_rows_cols();
        for &i in &rows {
            for &j in &cols {
                assert!(self.est.count(i, j) > 0, "elimination read unexplored cell ({i},{j})");
            }
        }
        let active = self.active_pairs();
        let mut eliminated = Vec::new();
        for &(i, j) in &active {
            if !eps_ne_satisfied(&self.est, i, j, eps, &rows, &cols)? {
                eliminated.push((i, j));
            }
        }
        if eliminated.len() == active.len() {
            let keep = self.max_margin_pair(&active, eps)?;
            eliminated.retain(|&p| p != keep);
        }
        for &(i, j) in &eliminated {
            self.active[i * self.cols + j] = false;
        }
        let record = self.rounds.last_mut().expect("round in progress");
        record.eliminated = eliminated;
        record.completed = true;

        if self.mode == ExplorationMode::NonUniform {
            self.update_joint()?;
        }
        self.round += 1;
        self.begin_round()
    }

    fn update_joint(&mut self) -> Result<()> {
        let (rows, cols) = self.active_rows_cols();
        let est = materialize(&self.est)?;
        let sub: PayoffMatrix = est.submatrix(&rows, &cols)?;
        let mixed = solve_minimax(&sub)?;
        let sub_joint = joint_probabilities(&mixed.p, &mixed.q, (rows.len(), cols.len()))?;
        let mut joint = vec![0.0; self.rows * self.cols];
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                let k = i * self.cols + j;
                if self.active[k] {
                    joint[k] = sub_joint[a * cols.len() + b];
                }
            }
        }
        let total: f64 = joint.iter().sum();
        if total > 0.0 {
            joint.iter_mut().for_each(|x| *x /= total);
        } else {
            let n = self.active.iter().filter(|&&a| a).count() as f64;
            for (x, &a) in joint.iter_mut().zip(&self.active) {
                *x = if a { 1.0 / n } else { 0.0 };
            }
        }
        // Guard against a renormalized entry drifting past 1.
        joint.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
        self.joint = joint;
        Ok(())
    }
}

impl Learner for EliminationLearner {
    fn select(&mut self) -> Result<Pair> {
        if let Some(p) = self.committed {
            return Ok(p);
        }
        Ok(self.plan[self.cursor].0)
    }

    fn update(&mut self, pair: Pair, reward: f64) -> Result<()> {
        if self.committed.is_some() {
            return Ok(());
        }
        self.est.record(pair.0, pair.1, reward)?;
        self.left_in_block -= 1;
        while self.left_in_block == 0 {
            self.cursor += 1;
            if self.cursor == self.plan.len() {
                return self.end_round();
            }
            self.left_in_block = self.plan[self.cursor].1;
        }
        Ok(())
    }

    fn committed(&self) -> Option<Pair> {
        self.committed
    }

    fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }
}
