//! Command-line front end of the `zsg` binary.
//!
//! Exit codes: 0 on success, 2 on usage or configuration errors, 1 on runtime
//! failures (including a failed oracle check).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bandit_env::{EnvHandle, NoiseModel};
use crate::error::{Error, Result};
use crate::experiments::{
    fig1_deltas, game_value, generate_instance, run_fig1, run_fig23, with_threads,
    write_fig1_csv, write_fig23_csv, write_trace_csv, ExperimentId, ExperimentPlan,
    InstanceSpec,
};
use crate::learners::{self, etc_exploration_k, Algorithm, LearnerConfig};
use crate::matrix_game::{compute_gaps, GapProfile, PayoffMatrix};
use crate::oracles::verify_instance;
use crate::regret_metrics::{
    bound_ae_external, bound_ae_nash, bound_etc, bound_etc_min, bound_nue_external,
    bound_nue_nash, lambda_floor_ae, lambda_floor_nue, regret_from_counts, BoundInputs,
};
use crate::rng::{derive_seed, tag};

#[derive(Debug, Parser)]
#[command(name = "zsg", version, about = "Pure-equilibrium learning in zero-sum matrix games")]
pub struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Independent runs (seeds) per configuration.
    #[arg(long, global = true)]
    runs: Option<usize>,
    /// Horizon.
    #[arg(long = "T", global = true)]
    horizon: Option<u64>,
    /// Noise standard deviation.
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Step spacing of fig23 output rows.
    #[arg(long, global = true)]
    stride: Option<u64>,
    /// Worker threads; ZSG_THREADS overrides.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Regime {
    /// σ drawn from {0.25, 0.5, 0.75, 1}.
    Large,
    /// σ drawn from {0.1, 0.2}.
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum Theorem {
    /// ETC Nash regret with exploration k.
    #[value(name = "4.1")]
    #[serde(rename = "4.1")]
    Etc,
    /// Worst-case two-pair ETC regret.
    #[value(name = "4.1-min")]
    #[serde(rename = "4.1-min")]
    EtcMin,
    /// Uniform elimination, Nash regret.
    #[value(name = "5.1")]
    #[serde(rename = "5.1")]
    AeNash,
    /// Uniform elimination, external regret.
    #[value(name = "5.2")]
    #[serde(rename = "5.2")]
    AeExternal,
    /// Non-uniform elimination, Nash regret.
    #[value(name = "6.1")]
    #[serde(rename = "6.1")]
    NueNash,
    /// Non-uniform elimination, external regret.
    #[value(name = "6.1-ext")]
    #[serde(rename = "6.1-ext")]
    NueExternal,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// ETC regret against its bound over a gap grid (2x1 games).
    Fig1 {
        /// Comma-separated gap grid (default 0, 0.05, ..., 1).
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
    },
    /// Cumulative absolute regret curves on random games.
    Fig23 {
        #[arg(long, value_enum, default_value = "large")]
        regime: Regime,
        /// Comma-separated σ list (overrides --regime).
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        /// Comma-separated algorithms (default: all).
        #[arg(long, value_delimiter = ',')]
        algos: Option<Vec<String>>,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        l: usize,
    },
    /// One algorithm on one game; writes the step trace.
    Run {
        #[arg(long)]
        algo: Option<String>,
        /// Game JSON `{"m":..,"l":..,"entries":[..]}`.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// JSON file with any of algo, T, sigma, seed, k, matrix, out, threads.
        #[arg(long)]
        config: Option<PathBuf>,
        /// ETC exploration per pair (default: tuned to the smallest positive gap).
        #[arg(long)]
        k: Option<u64>,
    },
    /// Evaluates a regret bound on a game.
    Bounds {
        #[arg(long, value_enum)]
        theorem: Theorem,
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Threshold λ, or `auto` for the smallest admissible value.
        #[arg(long, default_value = "auto")]
        lambda: String,
        /// ETC exploration per pair (4.1).
        #[arg(long)]
        k: Option<u64>,
        /// Gap of the two-pair family (4.1-min); defaults to the smallest positive gap.
        #[arg(long)]
        delta: Option<f64>,
        /// Also run the verification oracles on the instance.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Emits random games with a unique pure equilibrium as JSON lines.
    Gen {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        l: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Keep games without a unique pure equilibrium.
        #[arg(long)]
        any: bool,
    },
    /// Runs the verification oracles on a game and emits JSON lines.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        /// ETC exploration per pair for the misidentification check.
        #[arg(long)]
        k: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
}

/// `run` settings loadable from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    algo: Option<String>,
    #[serde(rename = "T")]
    horizon: Option<u64>,
    sigma: Option<f64>,
    seed: Option<u64>,
    k: Option<u64>,
    matrix: Option<PathBuf>,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    let mut threads = cli.global.threads;
    if let Command::Run {
        config: Some(p), ..
    } = &cli.command
    {
        if threads.is_none() {
            threads = load_run_config(p)?.threads;
        }
    }
    with_threads(threads, move || dispatch(cli))?
}

fn load_run_config(path: &Path) -> Result<RunConfigFile> {
    serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn load_matrix(path: &Path) -> Result<PayoffMatrix> {
    PayoffMatrix::from_json(&read_to_string(path)?)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_algos(tokens: &[String]) -> Result<Vec<Algorithm>> {
    tokens.iter().map(|t| t.trim().parse()).collect()
}

/// Smallest positive Δ of the game.
fn min_positive_gap(gaps: &GapProfile) -> Result<f64> {
    gaps.delta
        .iter()
        .copied()
        .filter(|&d| d > 0.0)
        .min_by(f64::total_cmp)
        .ok_or_else(|| config_err("game has no pair with a positive gap"))
}

/// ETC exploration tuned to the smallest positive gap, capped at `T/N`.
fn default_etc_k(gaps: &GapProfile, sigma: f64, horizon: u64) -> Result<u64> {
    let n = gaps.num_pairs() as u64;
    let cap = (horizon / n).max(1);
    match min_positive_gap(gaps) {
        Ok(d) => Ok(etc_exploration_k(d, sigma, horizon)?.min(cap)),
        Err(_) => Ok(1),
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let g = cli.global;
    let seed = g.seed.unwrap_or(0);
    match cli.command {
        Command::Fig1 { deltas } => {
            let mut plan = ExperimentPlan::fig1(g.runs.unwrap_or(1_000), seed);
            plan.deltas = deltas.unwrap_or_else(fig1_deltas);
            plan.horizon = g.horizon.unwrap_or(plan.horizon);
            plan.sigma = g.sigma.unwrap_or(plan.sigma);
            let rows = run_fig1(&plan)?;
            let mut out = open_out(g.out.as_deref())?;
            write_fig1_csv(&mut out, &rows)?;
            out.flush()?;
            Ok(0)
        }
        Command::Fig23 {
            regime,
            sigmas,
            algos,
            m,
            l,
        } => {
            let runs = g.runs.unwrap_or(100);
            let mut plan = match regime {
                Regime::Large => ExperimentPlan::fig2(runs, seed),
                Regime::Small => ExperimentPlan::fig3(runs, seed),
            };
            if let Some(s) = sigmas {
                plan.experiment = ExperimentId::Custom;
                plan.sigmas = s;
            } else if g.sigma.is_some() {
                plan.experiment = ExperimentId::Custom;
                plan.sigmas = g.sigma.into_iter().collect();
            }
            if let Some(a) = algos {
                plan.algorithms = parse_algos(&a)?;
            }
            plan.dims = (m, l);
            plan.horizon = g.horizon.unwrap_or(plan.horizon);
            plan.stride = g.stride.unwrap_or(plan.stride);
            // shorter horizons keep only the list entries with N·k <= T
            let n = (m * l).max(1) as u64;
            let cap = plan.horizon / n;
            plan.k_list.retain(|&k| k <= cap);
            if plan.k_list.is_empty() {
                plan.k_list.push(cap.max(1));
            }
            let rows = run_fig23(&plan)?;
            let mut out = open_out(g.out.as_deref())?;
            write_fig23_csv(&mut out, &rows)?;
            out.flush()?;
            Ok(0)
        }
        Command::Run {
            algo,
            matrix,
            config,
            k,
        } => {
            let file = match &config {
                Some(p) => load_run_config(p)?,
                None => RunConfigFile::default(),
            };
            let algo: Algorithm = algo
                .or(file.algo)
                .ok_or_else(|| config_err("run needs --algo"))?
                .parse()?;
            let matrix_path = matrix
                .or(file.matrix)
                .ok_or_else(|| config_err("run needs --matrix"))?;
            let a = load_matrix(&matrix_path)?;
            let horizon = g.horizon.or(file.horizon).unwrap_or(10_000);
            let sigma = g.sigma.or(file.sigma).unwrap_or(0.5);
            let seed = g.seed.or(file.seed).unwrap_or(0);
            let out_path = g.out.or(file.out);
            let gaps = compute_gaps(&a);
            let mut cfg = LearnerConfig::new(horizon, sigma)
                .with_seed(derive_seed(seed, &[0, tag::POLICY]));
            if algo == Algorithm::Etc {
                let k = match k.or(file.k) {
                    Some(k) => k,
                    None => default_etc_k(&gaps, sigma, horizon)?,
                };
                cfg = cfg.with_k(k);
            }
            let mut env = EnvHandle::new(
                a.clone(),
                NoiseModel::gaussian(sigma)?,
                derive_seed(seed, &[0, tag::NOISE]),
            );
            let trace = learners::run(algo, &mut env, &cfg)?;
            let value = game_value(&a)?;
            let mut out = open_out(out_path.as_deref())?;
            write_trace_csv(&mut out, &a, value, &trace)?;
            out.flush()?;
            let report = regret_from_counts(&gaps, &trace.counts)?;
            let summary = json!({
                "kind": "realized",
                "algo": algo,
                "T": horizon,
                "sigma": sigma,
                "seed": seed,
                "k": cfg.k,
                "committed": trace.committed,
                "counts": trace.counts,
                "nash_regret": report.nash,
                "external_regret": report.external,
                "max_player_regret": report.max_player,
                "min_player_regret": report.min_player,
            });
            eprintln!("{summary}");
            Ok(0)
        }
        Command::Bounds {
            theorem,
            instance,
            lambda,
            k,
            delta,
            verify,
            trials,
        } => {
            let sigma = g.sigma.unwrap_or(0.5);
            let horizon = g.horizon.unwrap_or(10_000);
            let a = match &instance {
                Some(p) => Some(load_matrix(p)?),
                None => None,
            };
            let need_instance = || a.clone().ok_or_else(|| config_err("--instance is required"));
            let mut inputs = serde_json::Map::new();
            inputs.insert("sigma".into(), json!(sigma));
            inputs.insert("T".into(), json!(horizon));
            let value = match theorem {
                Theorem::Etc => {
                    let a = need_instance()?;
                    let gaps = compute_gaps(&a);
                    let k = match k {
                        Some(k) => k,
                        None => default_etc_k(&gaps, sigma, horizon)?,
                    };
                    inputs.insert("k".into(), json!(k));
                    bound_etc(&gaps, sigma, horizon, k)?
                }
                Theorem::EtcMin => {
                    let d = match (delta, &a) {
                        (Some(d), _) => d,
                        (None, Some(a)) => min_positive_gap(&compute_gaps(a))?,
                        (None, None) => return Err(config_err("4.1-min needs --delta or --instance")),
                    };
                    inputs.insert("delta".into(), json!(d));
                    bound_etc_min(d, sigma, horizon)?
                }
                _ => {
                    let a = need_instance()?;
                    let nue = matches!(theorem, Theorem::NueNash | Theorem::NueExternal);
                    let floor = if nue {
                        lambda_floor_nue(sigma, horizon)
                    } else {
                        lambda_floor_ae(sigma, horizon)
                    };
                    let lam = if lambda == "auto" {
                        floor
                    } else {
                        lambda
                            .parse::<f64>()
                            .map_err(|_| config_err(format!("bad --lambda '{lambda}'")))?
                    };
                    inputs.insert("lambda".into(), json!(lam));
                    let b = BoundInputs::new(compute_gaps(&a), sigma, horizon, lam)?;
                    match theorem {
                        Theorem::AeNash => bound_ae_nash(&b)?,
                        Theorem::AeExternal => bound_ae_external(&b)?,
                        Theorem::NueNash => bound_nue_nash(&b)?,
                        _ => bound_nue_external(&b)?,
                    }
                }
            };
            if let Some(a) = &a {
                inputs.insert("m".into(), json!(a.rows()));
                inputs.insert("l".into(), json!(a.cols()));
            }
            let mut out = open_out(g.out.as_deref())?;
            writeln!(out, "{}", json!({"theorem": theorem, "inputs": inputs, "value": value}))?;
            let mut code = 0;
            if verify {
                let a = need_instance()?;
                let gaps = compute_gaps(&a);
                let k = k.unwrap_or(default_etc_k(&gaps, sigma, horizon)?);
                code = emit_reports(&mut out, &a, sigma, horizon, k, trials, seed)?;
            }
            out.flush()?;
            Ok(code)
        }
        Command::Gen { m, l, count, any } => {
            let sigma = g.sigma.unwrap_or(0.5);
            let mut out = open_out(g.out.as_deref())?;
            for c in 0..count {
                let spec = InstanceSpec {
                    m,
                    l,
                    entry_sigma: sigma,
                    noise_sigma: sigma,
                    require_unique_pure_ne: !any,
                    seed: derive_seed(seed, &[c as u64, tag::INSTANCE]),
                };
                let inst = generate_instance(&spec)?;
                writeln!(out, "{}", inst.matrix.to_json())?;
            }
            out.flush()?;
            Ok(0)
        }
        Command::Verify { instance, k, trials } => {
            let a = load_matrix(&instance)?;
            let sigma = g.sigma.unwrap_or(0.5);
            let horizon = g.horizon.unwrap_or(10_000);
            let k = match k {
                Some(k) => k,
                None => default_etc_k(&compute_gaps(&a), sigma, horizon)?,
            };
            let mut out = open_out(g.out.as_deref())?;
            let code = emit_reports(&mut out, &a, sigma, horizon, k, trials, seed)?;
            out.flush()?;
            Ok(code)
        }
    }
}

fn emit_reports(
    out: &mut dyn Write,
    a: &PayoffMatrix,
    sigma: f64,
    horizon: u64,
    k: u64,
    trials: u64,
    seed: u64,
) -> Result<i32> {
    let reports = verify_instance(a, sigma, horizon, k, trials, seed)?;
    for r in &reports {
        writeln!(out, "{}", serde_json::to_string(r).expect("report serializes"))?;
    }
    Ok(if reports.iter().all(|r| r.pass) { 0 } else { 1 })
}
