//! Instance generation, batch experiments and CSV output.
//!
//! Every run derives its streams from the master seed and its run index, so
//! results do not depend on thread count or scheduling; aggregation happens
//! after the parallel section in run order.

use std::io::Write;

use rand::seq::IndexedRandom;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit_env::{EnvHandle, NoiseModel};
use crate::error::{Error, Result};
use crate::learners::{self, etc_exploration_k, Algorithm, LearnerConfig, RunTrace};
use crate::matrix_game::{compute_gaps, find_pure_ne, solve_minimax, GapProfile, PayoffMatrix};
use crate::regret_metrics::{abs_regret_series, bound_etc_min, regret_from_counts};
use crate::rng::{derive_seed, stream, tag, SimRng};

/// Rejection-sampling attempts before instance generation gives up.
pub const REJECTION_CAP: usize = 100_000;

/// Random-instance recipe: i.i.d. Gaussian entries with mean zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub m: usize,
    pub l: usize,
    pub entry_sigma: f64,
    pub noise_sigma: f64,
    pub require_unique_pure_ne: bool,
    pub seed: u64,
}

impl InstanceSpec {
    /// Square game whose entries and noise share one standard deviation.
    pub fn coupled(m: usize, l: usize, sigma: f64, seed: u64) -> Self {
        Self {
            m,
            l,
            entry_sigma: sigma,
            noise_sigma: sigma,
            require_unique_pure_ne: true,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.l == 0 {
            return Err(Error::InvalidParameter(format!(
                "dimensions must be positive, got {}x{}",
                self.m, self.l
            )));
        }
        if !(self.entry_sigma >= 0.0) || !self.entry_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "entry sigma must be >= 0, got {}",
                self.entry_sigma
            )));
        }
        NoiseModel::gaussian(self.noise_sigma)?;
        Ok(())
    }
}

/// A generated game with its gaps and the number of draws it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub matrix: PayoffMatrix,
    pub gaps: GapProfile,
    pub attempts: usize,
}

/// Draws a game per `spec`, redrawing until it has a unique pure equilibrium
/// when required.
pub fn generate_instance(spec: &InstanceSpec) -> Result<Instance> {
    generate_instance_where(spec, |_| true)
}

/// Like [`generate_instance`] with an extra acceptance predicate.
pub fn generate_instance_where<F>(spec: &InstanceSpec, accept: F) -> Result<Instance>
where
    F: Fn(&Instance) -> bool,
{
    spec.validate()?;
    let mut rng = stream(spec.seed);
    let normal = Normal::new(0.0, spec.entry_sigma)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut passed_ne = 0usize;
    for attempt in 1..=REJECTION_CAP {
        let entries: Vec<f64> = (0..spec.m * spec.l).map(|_| normal.sample(&mut rng)).collect();
        let matrix = PayoffMatrix::new(spec.m, spec.l, entries)?;
        if spec.require_unique_pure_ne && !find_pure_ne(&matrix).is_some_and(|ne| ne.unique) {
            continue;
        }
        passed_ne += 1;
        let inst = Instance {
            gaps: compute_gaps(&matrix),
            matrix,
            attempts: attempt,
        };
        if accept(&inst) {
            return Ok(inst);
        }
    }
    Err(Error::RejectionCapExceeded {
        attempts: REJECTION_CAP,
        // every draw failed; report how many cleared the equilibrium filter
        rate: passed_ne as f64 / REJECTION_CAP as f64,
    })
}

/// Fraction of `draws` Gaussian matrices that have a unique pure equilibrium.
pub fn unique_ne_acceptance_rate(m: usize, l: usize, entry_sigma: f64, draws: u64, seed: u64) -> Result<f64> {
    let normal =
        Normal::new(0.0, entry_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = stream(seed);
    let mut hits = 0u64;
    for _ in 0..draws {
        let entries: Vec<f64> = (0..m * l).map(|_| normal.sample(&mut rng)).collect();
        let a = PayoffMatrix::new(m, l, entries)?;
        hits += u64::from(find_pure_ne(&a).is_some_and(|ne| ne.unique));
    }
    Ok(hits as f64 / draws as f64)
}

/// Which experiment a plan describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Fig1,
    Fig2,
    Fig3,
    Custom,
}

/// Batch experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub experiment: ExperimentId,
    pub algorithms: Vec<Algorithm>,
    pub horizon: u64,
    pub runs: usize,
    /// Gap grid (fig1).
    pub deltas: Vec<f64>,
    /// Noise level for fig1; the σ-list draws replace it for fig2/3.
    pub sigma: f64,
    /// σ values drawn per run (fig2/3).
    pub sigmas: Vec<f64>,
    /// ETC exploration lengths drawn per run (fig2/3).
    pub k_list: Vec<u64>,
    /// Game dimensions (fig2/3).
    pub dims: (usize, usize),
    /// Output row spacing in steps (fig2/3).
    pub stride: u64,
    pub seed: u64,
}

/// `0, 0.05, ..., 1.0`.
pub fn fig1_deltas() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.05).collect()
}

/// `100, 125, ..., 2500`.
pub fn etc_k_list() -> Vec<u64> {
    (100..=2500).step_by(25).collect()
}

/// σ-list of the large-gap regime.
pub const LARGE_GAP_SIGMAS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
/// σ-list of the small-gap regime.
pub const SMALL_GAP_SIGMAS: [f64; 2] = [0.1, 0.2];

impl ExperimentPlan {
    pub fn fig1(runs: usize, seed: u64) -> Self {
        Self {
            experiment: ExperimentId::Fig1,
            algorithms: vec![Algorithm::Etc],
            horizon: 1_000,
            runs,
            deltas: fig1_deltas(),
            sigma: 0.5,
            sigmas: Vec::new(),
            k_list: Vec::new(),
            dims: (2, 1),
            stride: 1,
            seed,
        }
    }

    /// Large-gap comparison (`sigmas` = [`LARGE_GAP_SIGMAS`]).
    pub fn fig2(runs: usize, seed: u64) -> Self {
        Self::fig23(ExperimentId::Fig2, LARGE_GAP_SIGMAS.to_vec(), runs, seed)
    }

    /// Small-gap comparison (`sigmas` = [`SMALL_GAP_SIGMAS`]).
    pub fn fig3(runs: usize, seed: u64) -> Self {
        Self::fig23(ExperimentId::Fig3, SMALL_GAP_SIGMAS.to_vec(), runs, seed)
    }

    fn fig23(id: ExperimentId, sigmas: Vec<f64>, runs: usize, seed: u64) -> Self {
        Self {
            experiment: id,
            algorithms: Algorithm::ALL.to_vec(),
            horizon: 10_000,
            runs,
            deltas: Vec::new(),
            sigma: sigmas[0],
            sigmas,
            k_list: etc_k_list(),
            dims: (2, 2),
            stride: 100,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("algorithm list is empty".into());
        }
        match self.experiment {
            ExperimentId::Fig1 => {
                if self.deltas.is_empty() {
                    return bad("delta grid is empty".into());
                }
                if let Some(d) = self.deltas.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
                    return bad(format!("delta {d} must be finite and >= 0"));
                }
                if !(self.sigma > 0.0) || !self.sigma.is_finite() {
                    return bad(format!("sigma must be > 0, got {}", self.sigma));
                }
                if self.horizon < 2 {
                    return bad("fig1 needs T >= 2".into());
                }
            }
            _ => {
                if self.sigmas.is_empty() {
                    return bad("sigma list is empty".into());
                }
                if let Some(s) = self.sigmas.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
                    return bad(format!("sigma {s} must be finite and > 0"));
                }
                if self.stride == 0 {
                    return bad("stride must be >= 1".into());
                }
                let n = (self.dims.0 * self.dims.1) as u64;
                if self.dims.0 == 0 || self.dims.1 == 0 {
                    return bad("dimensions must be positive".into());
                }
                if self.algorithms.contains(&Algorithm::Etc) {
                    if self.k_list.is_empty() {
                        return bad("ETC k list is empty".into());
                    }
                    if let Some(k) = self.k_list.iter().find(|&&k| k == 0 || k * n > self.horizon) {
                        return bad(format!("ETC k {k} outside [1, T/N]"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One fig1 output row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig1Row {
    pub delta: f64,
    pub k: u64,
    pub mean_regret: f64,
    pub stderr: f64,
    pub bound: f64,
}

/// ETC on `[[0], [-Δ]]` over the gap grid, with `k` tuned to each gap.
///
/// At `Δ = 0` both rows are equilibria, so `k = 1` and the bound is 0.
pub fn run_fig1(plan: &ExperimentPlan) -> Result<Vec<Fig1Row>> {
    plan.validate()?;
    let sigma = plan.sigma;
    let horizon = plan.horizon;
    plan.deltas
        .iter()
        .enumerate()
        .map(|(point, &delta)| {
            let a = PayoffMatrix::new(2, 1, vec![0.0, -delta])?;
            let gaps = compute_gaps(&a);
            let (k, bound) = if delta > 0.0 {
                let k = etc_exploration_k(delta, sigma, horizon)?.min(horizon / 2);
                (k, bound_etc_min(delta, sigma, horizon)?)
            } else {
                (1, 0.0)
            };
            let noise = NoiseModel::gaussian(sigma)?;
            let cfg = LearnerConfig::new(horizon, sigma).with_k(k);
            let regrets = (0..plan.runs)
                .into_par_iter()
                .map(|run| {
                    let seed = derive_seed(plan.seed, &[point as u64, run as u64, tag::NOISE]);
                    let mut env = EnvHandle::new(a.clone(), noise, seed);
                    let trace = learners::etc_zsg_run(&mut env, &cfg)?;
                    regret_from_counts(&gaps, &trace.counts)?
                        .nash
                        .ok_or(Error::NoPureEquilibrium)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean_regret, stderr) = mean_stderr(&regrets);
            Ok(Fig1Row {
                delta,
                k,
                mean_regret,
                stderr,
                bound,
            })
        })
        .collect()
}

/// One fig2/3 output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig23Row {
    pub algo: Algorithm,
    pub t: u64,
    pub mean_cum_regret: f64,
    pub stderr: f64,
}

/// Per-run setup shared by every algorithm of a fig2/3 run.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub instance: Instance,
    pub sigma: f64,
    pub k: u64,
    pub noise_seed: u64,
    pub policy_seed: u64,
}

/// Draws σ, the ETC `k` and the instance of run `run`.
pub fn run_setup(plan: &ExperimentPlan, run: usize) -> Result<RunSetup> {
    let mut rng: SimRng = stream(derive_seed(plan.seed, &[run as u64, tag::INSTANCE]));
    let sigma = *plan
        .sigmas
        .choose(&mut rng)
        .ok_or_else(|| Error::InvalidParameter("sigma list is empty".into()))?;
    let k = plan.k_list.choose(&mut rng).copied().unwrap_or(1);
    let spec = InstanceSpec::coupled(plan.dims.0, plan.dims.1, sigma, rand::Rng::random(&mut rng));
    Ok(RunSetup {
        instance: generate_instance(&spec)?,
        sigma,
        k,
        noise_seed: derive_seed(plan.seed, &[run as u64, tag::NOISE]),
        policy_seed: derive_seed(plan.seed, &[run as u64, tag::POLICY]),
    })
}

/// Runs `algo` on the run's instance with its shared noise stream.
pub fn run_algorithm(setup: &RunSetup, algo: Algorithm, horizon: u64) -> Result<RunTrace> {
    let noise = NoiseModel::gaussian(setup.sigma)?;
    let mut env = EnvHandle::new(setup.instance.matrix.clone(), noise, setup.noise_seed);
    let mut cfg = LearnerConfig::new(horizon, setup.sigma).with_seed(setup.policy_seed);
    if algo == Algorithm::Etc {
        cfg = cfg.with_k(setup.k);
    }
    learners::run(algo, &mut env, &cfg)
}

/// Steps at which fig2/3 rows are reported: `stride, 2·stride, ..., T`.
pub fn report_steps(horizon: u64, stride: u64) -> Vec<u64> {
    let mut steps: Vec<u64> = (1..=horizon / stride).map(|i| i * stride).collect();
    if steps.last() != Some(&horizon) {
        steps.push(horizon);
    }
    steps
}

/// Final cumulative absolute regret of every algorithm for each run, in run
/// order; `result[run][a]` follows `plan.algorithms`.
pub fn fig23_curves(plan: &ExperimentPlan) -> Result<Vec<Vec<Vec<f64>>>> {
    plan.validate()?;
    let steps = report_steps(plan.horizon, plan.stride);
    (0..plan.runs)
        .into_par_iter()
        .map(|run| {
            let setup = run_setup(plan, run)?;
            let value = setup
                .instance
                .gaps
                .equilibrium
                .ok_or(Error::NoPureEquilibrium)?
                .value;
            plan.algorithms
                .iter()
                .map(|&algo| {
                    let trace = run_algorithm(&setup, algo, plan.horizon)?;
                    let series = abs_regret_series(&setup.instance.matrix, value, trace.pairs())?;
                    Ok(steps.iter().map(|&t| series[t as usize - 1]).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect()
}

/// Pointwise mean and standard error of the cumulative absolute regret.
pub fn run_fig23(plan: &ExperimentPlan) -> Result<Vec<Fig23Row>> {
    let curves = fig23_curves(plan)?;
    let steps = report_steps(plan.horizon, plan.stride);
    let mut rows = Vec::with_capacity(plan.algorithms.len() * steps.len());
    for (a, &algo) in plan.algorithms.iter().enumerate() {
        for (s, &t) in steps.iter().enumerate() {
            let xs: Vec<f64> = curves.iter().map(|run| run[a][s]).collect();
            let (mean_cum_regret, stderr) = mean_stderr(&xs);
            rows.push(Fig23Row {
                algo,
                t,
                mean_cum_regret,
                stderr,
            });
        }
    }
    Ok(rows)
}

/// Final mean cumulative regret per algorithm, in plan order.
pub fn final_means(plan: &ExperimentPlan, rows: &[Fig23Row]) -> Vec<(Algorithm, f64)> {
    plan.algorithms
        .iter()
        .map(|&algo| {
            let last = rows
                .iter()
                .filter(|r| r.algo == algo)
                .max_by_key(|r| r.t)
                .map_or(f64::NAN, |r| r.mean_cum_regret);
            (algo, last)
        })
        .collect()
}

/// Reference value for a run's absolute regret: the saddle payoff, or the
/// mixed value for games without a saddle.
pub fn game_value(a: &PayoffMatrix) -> Result<f64> {
    match find_pure_ne(a) {
        Some(ne) => Ok(ne.equilibrium.value),
        None => Ok(solve_minimax(a)?.value),
    }
}

/// Fixed-width decimal with 9 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-30..=30).contains(&exp) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fig1_csv<W: Write>(out: W, rows: &[Fig1Row]) -> Result<()> {
    write_rows(
        out,
        &["delta", "mean_regret", "stderr", "bound"],
        rows.iter().map(|r| {
            vec![
                fmt_num(r.delta),
                fmt_num(r.mean_regret),
                fmt_num(r.stderr),
                fmt_num(r.bound),
            ]
        }),
    )
}

pub fn write_fig23_csv<W: Write>(out: W, rows: &[Fig23Row]) -> Result<()> {
    write_rows(
        out,
        &["algo", "t", "mean_cum_regret", "stderr"],
        rows.iter().map(|r| {
            vec![
                r.algo.token().to_string(),
                r.t.to_string(),
                fmt_num(r.mean_cum_regret),
                fmt_num(r.stderr),
            ]
        }),
    )
}

/// Step-by-step trace with the running absolute regret against `value`.
pub fn write_trace_csv<W: Write>(out: W, a: &PayoffMatrix, value: f64, trace: &RunTrace) -> Result<()> {
    let series = abs_regret_series(a, value, trace.pairs())?;
    write_rows(
        out,
        &["t", "i", "j", "r", "cum_abs_regret"],
        trace.steps.iter().zip(&series).map(|(s, c)| {
            vec![
                s.t.to_string(),
                s.row.to_string(),
                s.col.to_string(),
                fmt_num(s.reward),
                fmt_num(*c),
            ]
        }),
    )
}

/// Runs `f` on a pool of `threads` workers; `ZSG_THREADS` takes precedence.
/// `None` or 0 leaves the choice to rayon.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let from_env = match std::env::var("ZSG_THREADS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
            Error::InvalidParameter(format!("ZSG_THREADS must be a non-negative integer, got '{v}'"))
        })?),
        Err(_) => None,
    };
    let n = from_env.or(threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(pool.install(f))
}
