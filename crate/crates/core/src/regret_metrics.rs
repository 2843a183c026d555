//! Regret accounting and closed-form evaluation of the regret upper bounds.
//!
//! Realized regrets weight the per-pair play counts of a single run by the
//! gaps of the true matrix; expectations come from averaging over seeds.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::learners::RunTrace;
use crate::matrix_game::{GapProfile, Pair, PayoffMatrix};

/// Regrets of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    /// `Σ Δ*_ij n_ij`; `None` when the game has no pure equilibrium.
    pub nash: Option<f64>,
    /// `R^max + R^min`.
    pub external: f64,
    /// `Σ Δmax_ij n_ij`.
    pub max_player: f64,
    /// `Σ Δmin_ij n_ij`.
    pub min_player: f64,
    /// Cumulative `|v - A(i_t, j_t)|`; empty when built from counts alone.
    pub abs_cumulative: Vec<f64>,
}

/// Realized regrets from row-major play counts.
pub fn regret_from_counts(gaps: &GapProfile, counts: &[u64]) -> Result<RegretReport> {
    if counts.len() != gaps.num_pairs() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} counts", gaps.num_pairs()),
            got: format!("{} counts", counts.len()),
        });
    }
    let weighted = |w: &[f64]| -> f64 { w.iter().zip(counts).map(|(g, &n)| g * n as f64).sum() };
    let max_player = weighted(&gaps.delta_max);
    let min_player = weighted(&gaps.delta_min);
    let nash = gaps.delta_star_all().ok().map(weighted);
    Ok(RegretReport {
        nash,
        external: max_player + min_player,
        max_player,
        min_player,
        abs_cumulative: Vec::new(),
    })
}

/// Full report for a trace, including the absolute-regret series.
pub fn regret_report(a: &PayoffMatrix, gaps: &GapProfile, trace: &RunTrace) -> Result<RegretReport> {
    let mut report = regret_from_counts(gaps, &trace.counts)?;
    if let Some(eq) = gaps.equilibrium {
        report.abs_cumulative = abs_regret_series(a, eq.value, trace.pairs())?;
    }
    Ok(report)
}

/// Cumulative `Σ_s |value - A(i_s, j_s)|` over the played pairs.
///
/// Uses the true mean payoff of each played pair, so the series is free of
/// observation noise.
pub fn abs_regret_series<I>(a: &PayoffMatrix, value: f64, pairs: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = Pair>,
{
    if !value.is_finite() {
        return Err(Error::NoPureEquilibrium);
    }
    let mut acc = 0.0;
    pairs
        .into_iter()
        .map(|(i, j)| {
            a.check_index(i, j)?;
            acc += (value - a.get(i, j)).abs();
            Ok(acc)
        })
        .collect()
}

/// Absolute regret of a trace from its counts alone: `Σ |v - A_ij| n_ij`.
pub fn abs_regret_from_counts(a: &PayoffMatrix, value: f64, counts: &[u64]) -> Result<f64> {
    if counts.len() != a.num_pairs() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} counts", a.num_pairs()),
            got: format!("{} counts", counts.len()),
        });
    }
    Ok(a.entries()
        .iter()
        .zip(counts)
        .map(|(x, &n)| (value - x).abs() * n as f64)
        .sum())
}

fn check_sigma_horizon(sigma: f64, horizon: u64) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    Ok(())
}

/// ETC Nash-regret bound
/// `k ΣΔ*_ij + (T - Nk) Σ Δ*_ij exp(-kΔ_ij²/16σ²)`.
pub fn bound_etc(gaps: &GapProfile, sigma: f64, horizon: u64, k: u64) -> Result<f64> {
    check_sigma_horizon(sigma, horizon)?;
    let n = gaps.num_pairs() as u64;
    if k == 0 || n.saturating_mul(k) > horizon {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= N*k <= T, got N={n}, k={k}, T={horizon}"
        )));
    }
    let star = gaps.delta_star_all()?;
    let kf = k as f64;
    let rest = (horizon - n * k) as f64;
    let s2 = 16.0 * sigma * sigma;
    let mut explore = 0.0;
    let mut commit = 0.0;
    for (&ds, &d) in star.iter().zip(&gaps.delta) {
        explore += ds;
        if ds != 0.0 {
            let tail = if s2 == 0.0 { 0.0 } else { (-kf * d * d / s2).exp() };
            commit += ds * tail;
        }
    }
    Ok(kf * explore + rest * commit)
}

/// Worst-case two-pair ETC bound
/// `min{TΔ, Δ + (16σ²/Δ)(1 + max{0, ln(Δ²T/16σ²)})}`.
pub fn bound_etc_min(delta: f64, sigma: f64, horizon: u64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    check_sigma_horizon(sigma, horizon)?;
    let t = horizon as f64;
    let s2 = 16.0 * sigma * sigma;
    let second = if s2 == 0.0 {
        delta
    } else {
        delta + s2 / delta * (1.0 + (delta * delta * t / s2).ln().max(0.0))
    };
    Ok((t * delta).min(second))
}

/// Smallest admissible threshold for the uniform elimination bounds,
/// `4σ√(e/T)`.
pub fn lambda_floor_ae(sigma: f64, horizon: u64) -> f64 {
    4.0 * sigma * (std::f64::consts::E / horizon as f64).sqrt()
}

/// Smallest admissible threshold for the non-uniform bounds, `4σ(e/T)^¼`.
pub fn lambda_floor_nue(sigma: f64, horizon: u64) -> f64 {
    4.0 * sigma * (std::f64::consts::E / horizon as f64).powf(0.25)
}

/// Earliest round whose gap guess is below half the pair's gap,
/// `min{t : Δ̂_t < Δ_ij / 2}`. `None` for zero-gap pairs.
pub fn first_separating_round(delta: f64, sigma: f64) -> Option<usize> {
    if !(delta > 0.0) {
        return None;
    }
    (0..2048)
        .find(|&t| crate::learners::schedule::delta_hat(t, sigma) < delta / 2.0)
}

/// Inputs shared by the elimination bounds.
#[derive(Debug, Clone, Serialize)]
pub struct BoundInputs {
    pub gaps: GapProfile,
    pub sigma: f64,
    pub horizon: u64,
    pub lambda: f64,
}

impl BoundInputs {
    pub fn new(gaps: GapProfile, sigma: f64, horizon: u64, lambda: f64) -> Result<Self> {
        check_sigma_horizon(sigma, horizon)?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
        }
        Ok(Self {
            gaps,
            sigma,
            horizon,
            lambda,
        })
    }

    /// `(S1, S2)` with `S1 = {Δ > λ}` and `S2 = {0 < Δ <= λ}`. Zero-gap pairs
    /// are in neither.
    pub fn partition(&self) -> (Vec<Pair>, Vec<Pair>) {
        let (mut s1, mut s2) = (Vec::new(), Vec::new());
        for i in 0..self.gaps.rows {
            for j in 0..self.gaps.cols {
                let d = self.gaps.delta(i, j);
                if d > self.lambda {
                    s1.push((i, j));
                } else if d > 0.0 {
                    s2.push((i, j));
                }
            }
        }
        (s1, s2)
    }

    fn require_floor(&self, floor: f64) -> Result<()> {
        if self.lambda < floor {
            return Err(Error::InvalidParameter(format!(
                "lambda {} below its floor {floor}",
                self.lambda
            )));
        }
        Ok(())
    }

    fn nash(&self, log_coeff: f64) -> Result<f64> {
        let (s1, s2) = self.partition();
        let s = self.sigma * self.sigma;
        let t = self.horizon as f64;
        let lam2 = self.lambda * self.lambda;
        let mut total = 0.0;
        for &(i, j) in &s1 {
            let d2 = self.gaps.delta(i, j).powi(2);
            let ds = self.gaps.delta_star(i, j)?;
            let ln = (d2 * t / (256.0 * s)).ln();
            total += ds * (1.0 + 768.0 * s / d2 + log_coeff * s / d2 * ln);
        }
        let mut worst: Option<f64> = None;
        for &(i, j) in &s2 {
            let ds = self.gaps.delta_star(i, j)?;
            total += ds * 512.0 * s / lam2;
            worst = Some(worst.map_or(ds, |w| w.max(ds)));
        }
        Ok(total + worst.unwrap_or(0.0) * t)
    }

    fn external(&self, log_coeff: f64) -> f64 {
        let (s1, s2) = self.partition();
        let s = self.sigma * self.sigma;
        let t = self.horizon as f64;
        let mut total = 0.0;
        for &(i, j) in &s1 {
            let d = self.gaps.delta(i, j);
            let ln = (d * d * t / (256.0 * s)).ln();
            total += d + 768.0 * s / d + log_coeff * s / d * ln;
        }
        total + s2.len() as f64 * 512.0 * s / self.lambda
    }
}

/// Nash-regret bound of the uniform elimination learner.
pub fn bound_ae_nash(inputs: &BoundInputs) -> Result<f64> {
    inputs.require_floor(lambda_floor_ae(inputs.sigma, inputs.horizon))?;
    inputs.nash(256.0)
}

/// External-regret bound of the uniform elimination learner. The `λT` term
/// is counted only when `S2` is nonempty.
pub fn bound_ae_external(inputs: &BoundInputs) -> Result<f64> {
    inputs.require_floor(lambda_floor_ae(inputs.sigma, inputs.horizon))?;
    let (_, s2) = inputs.partition();
    let tail = if s2.is_empty() {
        0.0
    } else {
        inputs.lambda * inputs.horizon as f64
    };
    Ok(inputs.external(256.0) + tail)
}

/// Nash-regret bound of the non-uniform elimination learner.
pub fn bound_nue_nash(inputs: &BoundInputs) -> Result<f64> {
    inputs.require_floor(lambda_floor_nue(inputs.sigma, inputs.horizon))?;
    inputs.nash(512.0)
}

/// External-regret bound of the non-uniform elimination learner, with `λT`
/// charged once per pair of `S2`.
pub fn bound_nue_external(inputs: &BoundInputs) -> Result<f64> {
    inputs.require_floor(lambda_floor_nue(inputs.sigma, inputs.horizon))?;
    let (_, s2) = inputs.partition();
    Ok(inputs.external(512.0) + s2.len() as f64 * inputs.lambda * inputs.horizon as f64)
}
