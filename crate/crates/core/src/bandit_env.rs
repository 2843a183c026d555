//! Stochastic game environment and the running payoff estimate.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_game::{PayoffMatrix, PayoffView};
use crate::rng::{stream, SimRng};

/// Observation noise. Gaussian with standard deviation `sigma` is
/// `sigma`-subgaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseModel {
    Gaussian { sigma: f64 },
}

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be finite and >= 0, got {sigma}"
            )));
        }
        Ok(NoiseModel::Gaussian { sigma })
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } => sigma,
        }
    }

    fn draw(&self, rng: &mut SimRng) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
        }
    }
}

/// A single-owner environment: true matrix, noise, and one seeded stream.
#[derive(Debug, Clone)]
pub struct EnvHandle {
    truth: PayoffMatrix,
    noise: NoiseModel,
    rng: SimRng,
}

impl EnvHandle {
    pub fn new(truth: PayoffMatrix, noise: NoiseModel, seed: u64) -> Self {
        Self {
            truth,
            noise,
            rng: stream(seed),
        }
    }

    pub fn truth(&self) -> &PayoffMatrix {
        &self.truth
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    /// Plays `(row, col)` and returns the noisy payoff credited to the row
    /// player; the column player is credited its negation.
    pub fn sample_payoff(&mut self, row: usize, col: usize) -> Result<f64> {
        self.truth.check_index(row, col)?;
        Ok(self.truth.get(row, col) + self.noise.draw(&mut self.rng))
    }
}

/// Running per-pair means and play counts.
///
/// Unvisited cells read as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalEstimate {
    rows: usize,
    cols: usize,
    sum: Vec<f64>,
    count: Vec<u64>,
    total_steps: u64,
}

impl EmpiricalEstimate {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            sum: vec![0.0; rows * cols],
            count: vec![0; rows * cols],
            total_steps: 0,
        }
    }

    pub fn for_game(a: &PayoffMatrix) -> Self {
        Self::new(a.rows(), a.cols())
    }

    pub fn record(&mut self, row: usize, col: usize, r: f64) -> Result<()> {
        if row >= self.rows || col >= self.cols {
            return Err(Error::IndexOutOfRange {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        if !r.is_finite() {
            return Err(Error::NonFiniteObservation(r));
        }
        let k = row * self.cols + col;
        self.sum[k] += r;
        self.count[k] += 1;
        self.total_steps += 1;
        Ok(())
    }

    pub fn reset(&mut self) {
        self.sum.iter_mut().for_each(|x| *x = 0.0);
        self.count.iter_mut().for_each(|x| *x = 0);
        self.total_steps = 0;
    }

    pub fn mean(&self, row: usize, col: usize) -> f64 {
        let k = row * self.cols + col;
        match self.count[k] {
            0 => 0.0,
            n => self.sum[k] / n as f64,
        }
    }

    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.count[row * self.cols + col]
    }

    /// Row-major counts.
    pub fn counts(&self) -> &[u64] {
        &self.count
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }
}

impl PayoffView for EmpiricalEstimate {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn payoff(&self, row: usize, col: usize) -> f64 {
        self.mean(row, col)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example() -> PayoffMatrix {
        PayoffMatrix::from_rows(&[vec![0.5, 0.2], vec![0.9, 0.1]]).unwrap()
    }

    #[test]
    fn noiseless_sampling_is_exact() {
        let mut env = EnvHandle::new(example(), NoiseModel::gaussian(0.0).unwrap(), 3);
        for (i, j) in example().pairs() {
            assert_eq!(env.sample_payoff(i, j).unwrap(), example().get(i, j));
        }
    }

    #[test]
    fn sample_mean_converges() {
        let mut env = EnvHandle::new(example(), NoiseModel::gaussian(0.5).unwrap(), 11);
        let n = 100_000;
        let mean = (0..n).map(|_| env.sample_payoff(1, 0).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 0.9).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn same_seed_same_observations() {
        let noise = NoiseModel::gaussian(0.3).unwrap();
        let mut a = EnvHandle::new(example(), noise, 99);
        let mut b = EnvHandle::new(example(), noise, 99);
        for t in 0..1000 {
            let (i, j) = (t % 2, (t / 2) % 2);
            assert_eq!(a.sample_payoff(i, j).unwrap(), b.sample_payoff(i, j).unwrap());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut env = EnvHandle::new(example(), NoiseModel::gaussian(0.1).unwrap(), 0);
        assert!(env.sample_payoff(2, 0).is_err());
        assert!(NoiseModel::gaussian(-1.0).is_err());
        assert!(NoiseModel::gaussian(f64::NAN).is_err());
        let mut est = EmpiricalEstimate::new(2, 2);
        assert_eq!(
            est.record(0, 0, f64::INFINITY),
            Err(Error::NonFiniteObservation(f64::INFINITY))
        );
        assert!(est.record(0, 2, 1.0).is_err());
        assert_eq!(est.total_steps(), 0);
    }

    #[test]
    fn record_examples() {
        let mut est = EmpiricalEstimate::new(2, 2);
        est.record(0, 0, 0.7).unwrap();
        assert_eq!(est.mean(0, 0), 0.7);
        assert_eq!(est.count(0, 0), 1);
        assert_eq!(est.mean(1, 1), 0.0);
        assert_eq!(est.count(1, 1), 0);

        let mut est = EmpiricalEstimate::new(2, 2);
        for r in [0.25, 0.75, 0.5, 0.5] {
            est.record(1, 0, r).unwrap();
        }
        assert_eq!(est.mean(1, 0), 0.5);
        est.record(1, 0, 1.0).unwrap();
        assert_abs_diff_eq!(est.mean(1, 0), 0.6, epsilon = 1e-15);
        assert_eq!(est.count(1, 0), 5);
        assert_eq!(est.total_steps(), 5);
    }

    #[test]
    fn reset_is_idempotent() {
        let mut est = EmpiricalEstimate::new(2, 3);
        est.record(1, 2, 3.0).unwrap();
        est.record(0, 0, -1.0).unwrap();
        est.reset();
        assert!(est.counts().iter().all(|&c| c == 0));
        assert_eq!(est.total_steps(), 0);
        let once = est.clone();
        est.reset();
        assert_eq!(est, once);
        assert_eq!(est, EmpiricalEstimate::new(2, 3));
    }
}
