//! Exploration and tolerance schedules.
//!
//! Round `t` of the elimination learners uses the gap guess
//! `Δ̂_t = 2^(2-t) σ`, per-pair exploration
//! `k_t = ⌈(16σ²/Δ̂_t²) ln(Δ̂_t² T / 16σ²)⌉` and tolerance
//! `ε_t = sqrt((4σ²/k_t) ln(Δ̂_t² T / 16σ²))`, which guarantees
//! `ε_t <= Δ̂_t / 2`.

use serde::Serialize;

use crate::error::{Error, Result};

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be finite and > 0, got {sigma}"
        )));
    }
    Ok(())
}

fn check_horizon(horizon: u64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    Ok(())
}

/// ETC exploration count for a known gap:
/// `max{1, ⌈(16σ²/Δ²) ln(Δ²T/16σ²)⌉}`.
pub fn etc_exploration_k(delta: f64, sigma: f64, horizon: u64) -> Result<u64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    check_sigma(sigma)?;
    check_horizon(horizon)?;
    let scale = 16.0 * sigma * sigma / (delta * delta);
    let raw = (scale * (horizon as f64 / scale).ln()).ceil();
    Ok(if raw < 1.0 { 1 } else { raw as u64 })
}

fn last_round(horizon: u64, fraction: f64) -> usize {
    let x = fraction * (horizon as f64 / std::f64::consts::E).log2();
    if x <= 0.0 {
        0
    } else {
        x.floor() as usize
    }
}

/// Last round index of the uniform elimination learner, `⌊½ log₂(T/e)⌋`.
pub fn ae_last_round(horizon: u64) -> usize {
    last_round(horizon, 0.5)
}

/// Last round index of the non-uniform learner, `⌊¼ log₂(T/e)⌋`.
pub fn nue_last_round(horizon: u64) -> usize {
    last_round(horizon, 0.25)
}

/// Gap guess `Δ̂_t = 2^(2-t) σ`.
pub fn delta_hat(round: usize, sigma: f64) -> f64 {
    sigma * 2f64.powi(2 - round as i32)
}

/// Schedule values for one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundSchedule {
    pub round: usize,
    pub delta_hat: f64,
    pub k: u64,
    pub eps: f64,
    /// `ln(Δ̂_t² T / 16σ²)`.
    pub log_term: f64,
    /// `(16σ²/Δ̂_t²) · log_term`, the value `k` is the ceiling of.
    pub k_raw: f64,
}

/// Schedule for any round whose log term is positive, without the
/// last-round restriction.
pub fn round_schedule(round: usize, sigma: f64, horizon: u64) -> Result<RoundSchedule> {
    check_sigma(sigma)?;
    check_horizon(horizon)?;
    let dh = delta_hat(round, sigma);
    let s2 = 16.0 * sigma * sigma;
    let log_term = (dh * dh * horizon as f64 / s2).ln();
    if !(log_term > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "round {round} has non-positive log term {log_term} at horizon {horizon}"
        )));
    }
    let k_raw = s2 / (dh * dh) * log_term;
    let k = k_raw.ceil() as u64;
    let eps = (4.0 * sigma * sigma / k as f64 * log_term).sqrt();
    Ok(RoundSchedule {
        round,
        delta_hat: dh,
        k,
        eps,
        log_term,
        k_raw,
    })
}

/// Schedule of the uniform elimination learner for round `t <= ae_last_round(T)`.
pub fn ae_schedule(round: usize, sigma: f64, horizon: u64) -> Result<RoundSchedule> {
    let last = ae_last_round(horizon);
    if round > last {
        return Err(Error::RoundOutOfRange { round, last });
    }
    round_schedule(round, sigma, horizon)
}

/// Per-pair exploration of the non-uniform learner:
/// `k_t + ⌈(16σ² P_ij / Δ̂_t²) ln(Δ̂_t² T / 16σ²)⌉`.
pub fn nue_schedule(round: usize, sigma: f64, horizon: u64, joint_prob: f64) -> Result<u64> {
    let last = nue_last_round(horizon);
    if round > last {
        return Err(Error::RoundOutOfRange { round, last });
    }
    if !(0.0..=1.0).contains(&joint_prob) {
        return Err(Error::InvalidParameter(format!(
            "joint probability {joint_prob} outside [0, 1]"
        )));
    }
    let s = round_schedule(round, sigma, horizon)?;
    Ok(s.k + (s.k_raw * joint_prob).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn etc_k_examples() {
        // 16 ln 62.5 = 66.16
        assert_eq!(etc_exploration_k(0.5, 0.5, 1000).unwrap(), 67);
        // log argument 0.625 < 1
        assert_eq!(etc_exploration_k(0.05, 0.5, 1000).unwrap(), 1);
        // Δ²T = 16σ²
        assert_eq!(etc_exploration_k(0.2, 0.5, 100).unwrap(), 1);
        assert!(etc_exploration_k(0.0, 0.5, 1000).is_err());
        assert!(etc_exploration_k(-0.1, 0.5, 1000).is_err());
    }

    #[test]
    fn ae_schedule_examples() {
        let s = ae_schedule(0, 0.5, 10_000).unwrap();
        assert_eq!(s.delta_hat, 2.0);
        assert_eq!(s.k, 10);
        assert_abs_diff_eq!(s.eps, (0.1 * 10_000f64.ln()).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.eps, 0.9597, epsilon = 1e-4);
        assert!(s.eps <= s.delta_hat / 2.0);

        assert_eq!(ae_last_round(10_000), 5);
        assert!(ae_schedule(5, 0.5, 10_000).is_ok());
        assert_eq!(
            ae_schedule(6, 0.5, 10_000),
            Err(Error::RoundOutOfRange { round: 6, last: 5 })
        );
    }

    #[test]
    fn nue_schedule_examples() {
        assert_eq!(nue_schedule(0, 0.5, 10_000, 1.0).unwrap(), 20);
        assert_eq!(nue_schedule(0, 0.5, 10_000, 0.0).unwrap(), 10);
        assert_eq!(nue_last_round(10_000), 2);
        assert!(nue_schedule(3, 0.5, 10_000, 0.5).is_err());
        assert!(nue_schedule(0, 0.5, 10_000, 1.5).is_err());
    }

    #[test]
    fn last_rounds_for_reference_horizons() {
        assert_eq!(ae_last_round(1_000), 4);
        assert_eq!(nue_last_round(1_000), 2);
        assert_eq!(ae_last_round(1_000_000), 9);
        assert_eq!(nue_last_round(1_000_000), 4);
        assert_eq!(ae_last_round(1), 0);
    }

    #[test]
    fn tolerance_never_exceeds_half_gap_guess() {
        for horizon in [10u64, 100, 1_000, 10_000, 123_457, 1_000_000] {
            for sigma in [1e-6, 0.1, 0.5, 1.0, 3.0] {
                for t in 0..=ae_last_round(horizon) {
                    let s = ae_schedule(t, sigma, horizon).unwrap();
                    assert!(s.eps <= s.delta_hat / 2.0, "{horizon} {sigma} {t}");
                    assert!(s.k >= 1);
                }
            }
        }
    }
}
