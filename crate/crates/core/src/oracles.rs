//! Independent verifiers for the main code paths.
//!
//! Nothing here calls the routine it checks: saddle points are found by the
//! literal double-loop definition, 2×2 mixed solutions by closed form, and
//! the Monte Carlo oracles re-simulate exploration with their own estimator.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::learners::schedule::round_schedule;
use crate::matrix_game::{
    compute_gaps, find_pure_ne, solve_minimax, MixedProfile, Pair, PayoffMatrix,
};
use crate::regret_metrics::first_separating_round;
use crate::rng::{derive_seed, stream, SimRng};

/// Largest game the exhaustive saddle search accepts.
pub const MAX_BRUTE_FORCE_PAIRS: usize = 10_000;

/// Oracle value set against a main-path value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub quantity: String,
    pub oracle: f64,
    pub main: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
    /// Trial count for Monte Carlo quantities.
    pub trials: Option<u64>,
    /// Standard error for Monte Carlo quantities.
    pub stderr: Option<f64>,
    pub pass: bool,
}

impl OracleReport {
    fn new(quantity: impl Into<String>, oracle: f64, main: f64, pass: bool) -> Self {
        let abs_dev = (oracle - main).abs();
        let scale = oracle.abs().max(main.abs());
        Self {
            quantity: quantity.into(),
            oracle,
            main,
            abs_dev,
            rel_dev: if scale > 0.0 { abs_dev / scale } else { 0.0 },
            trials: None,
            stderr: None,
            pass,
        }
    }
}

/// Every pair satisfying `A(i', j) <= A(i, j) <= A(i, j')` for all `i', j'`,
/// row-major.
pub fn brute_force_saddles(a: &PayoffMatrix) -> Result<Vec<Pair>> {
    if a.num_pairs() > MAX_BRUTE_FORCE_PAIRS {
        return Err(Error::InvalidParameter(format!(
            "brute force limited to {MAX_BRUTE_FORCE_PAIRS} pairs"
        )));
    }
    let mut out = Vec::new();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let v = a.get(i, j);
            let col_ok = (0..a.rows()).all(|r| a.get(r, j) <= v);
            let row_ok = (0..a.cols()).all(|c| v <= a.get(i, c));
            if col_ok && row_ok {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

/// Closed-form minimax solution of a saddle-free 2×2 game
/// `[[a, b], [c, d]]`.
pub fn closed_form_2x2_mixed(m: &PayoffMatrix) -> Result<MixedProfile> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "2x2".into(),
            got: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    if !brute_force_saddles(m)?.is_empty() {
        return Err(Error::InvalidParameter(
            "closed form needs a game without a saddle point".into(),
        ));
    }
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let den = a - b - c + d;
    if den.abs() < 1e-12 {
        return Err(Error::InvalidParameter("degenerate 2x2 denominator".into()));
    }
    let p0 = (d - c) / den;
    let q0 = (d - b) / den;
    Ok(MixedProfile {
        p: vec![p0, 1.0 - p0],
        q: vec![q0, 1.0 - q0],
        value: (a * d - b * c) / den,
    })
}

/// Monte Carlo frequency with its standard error and analytic ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub frequency: f64,
    pub stderr: f64,
    pub trials: u64,
    /// Analytic upper bound the frequency is compared against.
    pub bound: f64,
}

impl McEstimate {
    fn from_hits(hits: u64, trials: u64, bound: f64) -> Self {
        let f = hits as f64 / trials as f64;
        Self {
            frequency: f,
            stderr: (f * (1.0 - f) / trials as f64).sqrt(),
            trials,
            bound,
        }
    }

    /// `frequency <= bound + z * stderr`.
    pub fn within(&self, z: f64) -> bool {
        self.frequency <= self.bound + z * self.stderr
    }

    fn report(&self, quantity: &str) -> OracleReport {
        let mut r = OracleReport::new(quantity, self.frequency, self.bound, self.within(3.0));
        r.trials = Some(self.trials);
        r.stderr = Some(self.stderr);
        r
    }
}

fn unique_ne(a: &PayoffMatrix) -> Result<Pair> {
    match brute_force_saddles(a)?.as_slice() {
        [p] => Ok(*p),
        [] => Err(Error::NoPureEquilibrium),
        _ => Err(Error::InvalidParameter("game has several saddle points".into())),
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    Ok(())
}

/// Sample means of `k` noisy draws per pair, row-major.
fn sample_means(a: &PayoffMatrix, sigma: f64, k: u64, rng: &mut SimRng) -> Vec<f64> {
    a.entries()
        .iter()
        .map(|&mu| {
            let s: f64 = (0..k)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    mu + sigma * z
                })
                .sum();
            s / k as f64
        })
        .collect()
}

/// Pair ETC would commit to on the estimate `est`: the first saddle, else the
/// maximin row with the minimax column.
fn commit_on(est: &[f64], rows: usize, cols: usize) -> Pair {
    let at = |i: usize, j: usize| est[i * cols + j];
    for i in 0..rows {
        for j in 0..cols {
            let v = at(i, j);
            if (0..rows).all(|r| at(r, j) <= v) && (0..cols).all(|c| v <= at(i, c)) {
                return (i, j);
            }
        }
    }
    let row_val = |i: usize| (0..cols).map(|j| at(i, j)).fold(f64::INFINITY, f64::min);
    let col_val = |j: usize| (0..rows).map(|i| at(i, j)).fold(f64::NEG_INFINITY, f64::max);
    let mut bi = 0;
    for i in 1..rows {
        if row_val(i) > row_val(bi) {
            bi = i;
        }
    }
    let mut bj = 0;
    for j in 1..cols {
        if col_val(j) < col_val(bj) {
            bj = j;
        }
    }
    (bi, bj)
}

/// How often ETC with `k` plays per pair commits to a pair other than the
/// unique saddle, against `Σ_{(i,j) ≠ NE} exp(-kΔ_ij²/16σ²)`.
pub fn mc_misidentification(
    a: &PayoffMatrix,
    sigma: f64,
    k: u64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let ne = unique_ne(a)?;
    let gaps = compute_gaps(a);
    let bound: f64 = a
        .pairs()
        .filter(|&p| p != ne)
        .map(|(i, j)| {
            let d = gaps.delta(i, j);
            if sigma == 0.0 {
                0.0
            } else {
                (-(k as f64) * d * d / (16.0 * sigma * sigma)).exp()
            }
        })
        .sum();
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(derive_seed(seed, &[trial]));
            let est = sample_means(a, sigma, k, &mut rng);
            u64::from(commit_on(&est, a.rows(), a.cols()) != ne)
        })
        .sum();
    Ok(McEstimate::from_hits(hits, trials, bound))
}

/// How often the suboptimal pair `probe` survives one elimination round at
/// schedule `round`, with every pair explored `k_t` times and compared against
/// all rows and columns, against the ceiling `16σ²/(Δ̂_t² T)`.
///
/// Requires `round >= min{t : Δ̂_t < Δ_probe / 2}`.
pub fn mc_keep_probability(
    a: &PayoffMatrix,
    sigma: f64,
    horizon: u64,
    round: usize,
    probe: Pair,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials)?;
    a.check_index(probe.0, probe.1)?;
    let ne = unique_ne(a)?;
    if probe == ne {
        return Err(Error::InvalidParameter(
            "the keep-probability ceiling applies to suboptimal pairs only".into(),
        ));
    }
    let delta = compute_gaps(a).delta(probe.0, probe.1);
    let first = first_separating_round(delta, sigma).ok_or_else(|| {
        Error::InvalidParameter("probed pair has zero gap".into())
    })?;
    if round < first {
        return Err(Error::InvalidParameter(format!(
            "round {round} precedes the first separating round {first}"
        )));
    }
    let sched = round_schedule(round, sigma, horizon)?;
    let ceiling = 16.0 * sigma * sigma / (sched.delta_hat * sched.delta_hat * horizon as f64);
    let (rows, cols) = (a.rows(), a.cols());
    let (pi, pj) = probe;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(derive_seed(seed, &[trial]));
            let est = sample_means(a, sigma, sched.k, &mut rng);
            let v = est[pi * cols + pj];
            let col_ok = (0..rows).all(|r| est[r * cols + pj] <= v + sched.eps);
            let row_ok = (0..cols).all(|c| v <= est[pi * cols + c] + sched.eps);
            u64::from(col_ok && row_ok)
        })
        .sum();
    Ok(McEstimate::from_hits(hits, trials, ceiling))
}

/// Runs every applicable oracle on `a` and reports each comparison.
///
/// Monte Carlo checks need a unique saddle; they use `k` from `etc_k` for
/// misidentification and the first separating round for keep-probability.
pub fn verify_instance(
    a: &PayoffMatrix,
    sigma: f64,
    horizon: u64,
    etc_k: u64,
    trials: u64,
    seed: u64,
) -> Result<Vec<OracleReport>> {
    let mut out = Vec::new();

    let brute = brute_force_saddles(a)?;
    let main = find_pure_ne(a);
    let agree = match &main {
        Some(ne) => brute.first() == Some(&ne.equilibrium.pair()) && ne.unique == (brute.len() == 1),
        None => brute.is_empty(),
    };
    let main_count = if main.is_some() {
        crate::matrix_game::saddle_pairs(a).len()
    } else {
        0
    };
    out.push(OracleReport::new(
        "saddle_count",
        brute.len() as f64,
        main_count as f64,
        agree && brute.len() == main_count,
    ));

    if a.rows() == 2 && a.cols() == 2 && brute.is_empty() {
        let closed = closed_form_2x2_mixed(a)?;
        let lp = solve_minimax(a)?;
        let dev = (closed.value - lp.value).abs();
        out.push(OracleReport::new("minimax_value", closed.value, lp.value, dev <= 1e-9));
    }

    if brute.len() == 1 && sigma > 0.0 {
        let mis = mc_misidentification(a, sigma, etc_k, trials, derive_seed(seed, &[1]))?;
        out.push(mis.report("misidentification"));
        let gaps = compute_gaps(a);
        for (i, j) in a.pairs().filter(|&p| p != brute[0]) {
            let Some(t) = first_separating_round(gaps.delta(i, j), sigma) else {
                continue;
            };
            let seed = derive_seed(seed, &[2, i as u64, j as u64]);
            match mc_keep_probability(a, sigma, horizon, t, (i, j), trials, seed) {
                Ok(keep) => out.push(keep.report(&format!("keep_probability({i},{j})@{t}"))),
                // rounds whose log term is non-positive have no schedule
                Err(Error::InvalidParameter(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}
