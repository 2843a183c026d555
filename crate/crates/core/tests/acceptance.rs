//! Acceptance suite. Runs every primary criterion at its pinned tolerance,
//! prints one `[PASS]`/`[FAIL]` line per criterion and exits nonzero if any
//! criterion fails.
//!
//! Run alone with `cargo test --test acceptance`.

use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use zsg_core::bandit_env::{EnvHandle, NoiseModel};
use zsg_core::experiments::{
    final_means, generate_instance, generate_instance_where, mean_stderr, run_fig1, run_fig23,
    ExperimentPlan, InstanceSpec,
};
use zsg_core::learners::schedule::delta_hat;
use zsg_core::learners::{
    ae_last_round, ae_run, ae_schedule, nue_last_round, nue_run, Algorithm, EliminationLearner,
    ExplorationMode, LearnerConfig, RunTrace,
};
use zsg_core::matrix_game::{compute_gaps, find_pure_ne, saddle_pairs, solve_minimax, PayoffMatrix};
use zsg_core::oracles::{brute_force_saddles, closed_form_2x2_mixed, mc_keep_probability, mc_misidentification};
use zsg_core::regret_metrics::{
    bound_ae_nash, first_separating_round, lambda_floor_ae, regret_from_counts, BoundInputs,
};
use zsg_core::rng::{derive_seed, stream};
use zsg_core::Error;

const SEED: u64 = 20_240_517;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fig1_reproduction() -> Result<Outcome, Error> {
    let plan = ExperimentPlan::fig1(10_000, SEED);
    let rows = run_fig1(&plan)?;
    let mut worst = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for r in rows.iter().filter(|r| r.delta > 0.0) {
        worst = worst.max(r.mean_regret / r.bound);
        if r.mean_regret > r.bound {
            violations.push(format!("Δ={:.2}: {:.3} > {:.3}", r.delta, r.mean_regret, r.bound));
        }
    }
    // k = 1 exactly where Δ²T <= 16σ²
    let plateau_edge = 4.0 * plan.sigma / (plan.horizon as f64).sqrt();
    let plateau: Vec<f64> = rows.iter().filter(|r| r.k == 1 && r.delta > 0.0).map(|r| r.delta).collect();
    let plateau_ok = !plateau.is_empty()
        && rows
            .iter()
            .filter(|r| r.delta > 0.0)
            .all(|r| (r.k == 1) == (r.delta <= plateau_edge));
    let shape_ok = rows.len() == 21 && rows[0].mean_regret == 0.0;
    let at_half = rows.iter().find(|r| (r.delta - 0.5).abs() < 1e-12).expect("grid has 0.5");
    Ok(outcome(
        violations.is_empty() && plateau_ok && shape_ok,
        format!(
            "21 points x 10^4 seeds; max mean/bound = {worst:.3}; k=1 plateau at Δ ∈ {plateau:?}; \
             Δ=0.5: {:.3} ± {:.3} vs bound {:.3}{}",
            at_half.mean_regret,
            at_half.stderr,
            at_half.bound,
            if violations.is_empty() { String::new() } else { format!("; violations {violations:?}") }
        ),
    ))
}

fn misidentification() -> Result<Outcome, Error> {
    let a = PayoffMatrix::new(2, 1, vec![0.0, -0.5])?;
    let est = mc_misidentification(&a, 0.5, 67, 10_000, SEED)?;
    Ok(outcome(
        est.within(3.0),
        format!(
            "frequency {:.5} (stderr {:.5}) vs exp(-kΔ²/16σ²) = {:.5}",
            est.frequency, est.stderr, est.bound
        ),
    ))
}

fn fig23_ordering() -> Result<Outcome, Error> {
    let batches = 10;
    let mut large_wins = 0;
    let mut small_wins = 0;
    let mut notes = Vec::new();
    for b in 0..batches {
        let seed = derive_seed(SEED, &[b]);
        let large = ExperimentPlan::fig2(100, seed);
        let fm = final_means(&large, &run_fig23(&large)?);
        let get = |fm: &[(Algorithm, f64)], a: Algorithm| fm.iter().find(|x| x.0 == a).unwrap().1;
        let (etc, ae, nue, ts) = (
            get(&fm, Algorithm::Etc),
            get(&fm, Algorithm::Ae),
            get(&fm, Algorithm::Nue),
            get(&fm, Algorithm::Tsallis),
        );
        let lw = ae < etc && nue < etc;
        large_wins += usize::from(lw);

        let small = ExperimentPlan::fig3(100, derive_seed(seed, &[1]));
        let fs = final_means(&small, &run_fig23(&small)?);
        let (s_ae, s_nue, s_ts) = (
            get(&fs, Algorithm::Ae),
            get(&fs, Algorithm::Nue),
            get(&fs, Algorithm::Tsallis),
        );
        let sw = s_ae < s_ts && s_nue < s_ts;
        small_wins += usize::from(sw);
        notes.push(format!(
            "b{b}: large etc {etc:.1} ae {ae:.1} nue {nue:.1} ts {ts:.1} | small ae {s_ae:.1} nue {s_nue:.1} ts {s_ts:.1}"
        ));
    }
    for n in &notes {
        println!("    {n}");
    }
    Ok(outcome(
        large_wins * 10 >= batches as usize * 8 && small_wins * 10 >= batches as usize * 8,
        format!("large-Δ AE,NUE < ETC in {large_wins}/10 batches; small-Δ AE,NUE < Tsallis-INF in {small_wins}/10 batches"),
    ))
}

fn ae_nash_bound() -> Result<Outcome, Error> {
    let (sigma, horizon) = (0.5, 10_000u64);
    let lambda = lambda_floor_ae(sigma, horizon);
    let mut fails = Vec::new();
    let mut negative_bounds = 0;
    let (mut nonneg_instances, mut nonneg_fails) = (0, 0);
    for inst_idx in 0..50u64 {
        let spec = InstanceSpec::coupled(2, 2, sigma, derive_seed(SEED, &[51, inst_idx]));
        let inst = generate_instance_where(&spec, |inst| {
            inst.gaps.delta.iter().all(|&d| d == 0.0 || d > lambda)
        })?;
        let inputs = BoundInputs::new(inst.gaps.clone(), sigma, horizon, lambda)?;
        let bound = bound_ae_nash(&inputs)?;
        if bound < 0.0 {
            negative_bounds += 1;
        }
        let cfg = LearnerConfig::new(horizon, sigma);
        let noise = NoiseModel::gaussian(sigma)?;
        let regrets = (0..1_000u64)
            .into_par_iter()
            .map(|run| {
                let mut env = EnvHandle::new(
                    inst.matrix.clone(),
                    noise,
                    derive_seed(SEED, &[52, inst_idx, run]),
                );
                let trace = ae_run(&mut env, &cfg)?;
                Ok(regret_from_counts(&inst.gaps, &trace.counts)?.nash.expect("pure NE"))
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        let (mean, se) = mean_stderr(&regrets);
        let violated = mean > bound + 2.0 * se;
        if bound >= 0.0 {
            nonneg_instances += 1;
            nonneg_fails += usize::from(violated);
        }
        if violated {
            fails.push(format!("#{inst_idx}: {mean:.2}±{se:.2} > {bound:.2}"));
        }
    }
    Ok(outcome(
        fails.is_empty(),
        format!(
            "{} of 50 instances exceed bound + 2se; {negative_bounds} have a negative bound; \
             {nonneg_fails} of the {nonneg_instances} with a nonnegative bound exceed it{}",
            fails.len(),
            if fails.is_empty() { String::new() } else { format!("; e.g. {:?}", &fails[..fails.len().min(5)]) }
        ),
    ))
}

fn keep_probability() -> Result<Outcome, Error> {
    let a = PayoffMatrix::from_rows(&[vec![0.5, 0.2], vec![0.9, 0.1]])?;
    let (sigma, horizon, probe) = (0.2, 10_000, (1, 1));
    let t = first_separating_round(compute_gaps(&a).delta(1, 1), sigma).expect("positive gap");
    let at_t = mc_keep_probability(&a, sigma, horizon, t, probe, 10_000, derive_seed(SEED, &[61]))?;
    let at_next =
        mc_keep_probability(&a, sigma, horizon, t + 1, probe, 10_000, derive_seed(SEED, &[62]))?;
    let tightening = at_next.frequency <= at_t.frequency + 3.0 * at_next.stderr.max(at_t.stderr);
    Ok(outcome(
        at_t.within(3.0) && at_next.within(3.0) && tightening,
        format!(
            "t_ij = {t}: freq {:.4} (se {:.4}) vs ceiling {:.4}; t_ij+1: freq {:.4} (se {:.4}) vs ceiling {:.4}",
            at_t.frequency, at_t.stderr, at_t.bound, at_next.frequency, at_next.stderr, at_next.bound
        ),
    ))
}

fn check_trace_rounds(trace: &RunTrace, last: usize, sigma: f64, nue: bool) -> Result<(), String> {
    for r in &trace.rounds {
        let s = r.schedule;
        if s.round > last {
            return Err(format!("round {} beyond last {last}", s.round));
        }
        if s.delta_hat != sigma * 2f64.powi(2 - s.round as i32) {
            return Err(format!("Δ̂ mismatch at round {}", s.round));
        }
        if s.eps > s.delta_hat / 2.0 {
            return Err(format!("ε > Δ̂/2 at round {}", s.round));
        }
        if r.plays.iter().any(|&(_, n)| n < s.k) {
            return Err(format!("pair explored fewer than k_t at round {}", s.round));
        }
        if !nue && r.plays.iter().any(|&(_, n)| n != s.k) {
            return Err(format!("uniform round {} with unequal plays", s.round));
        }
    }
    Ok(())
}

fn schedule_identities() -> Result<Outcome, Error> {
    let mut problems = Vec::new();
    let mut runs_checked = 0;
    for &horizon in &[1_000u64, 10_000, 1_000_000] {
        let ratio = horizon as f64 / std::f64::consts::E;
        let ae_rounds = (0.5 * ratio.log2()).floor() as usize + 1;
        let nue_rounds = (0.25 * ratio.log2()).floor() as usize + 1;
        if ae_last_round(horizon) + 1 != ae_rounds || nue_last_round(horizon) + 1 != nue_rounds {
            problems.push(format!("round counts at T={horizon}"));
        }
        for sigma in [0.1, 0.25, 0.5, 1.0] {
            for t in 0..ae_rounds {
                let s = ae_schedule(t, sigma, horizon)?;
                if s.delta_hat != delta_hat(t, sigma) || s.delta_hat != sigma * 2f64.powi(2 - t as i32) {
                    problems.push(format!("Δ̂ at T={horizon} σ={sigma} t={t}"));
                }
                if s.eps > s.delta_hat / 2.0 {
                    problems.push(format!("ε at T={horizon} σ={sigma} t={t}"));
                }
            }
            if !matches!(ae_schedule(ae_rounds, sigma, horizon), Err(Error::RoundOutOfRange { .. })) {
                problems.push(format!("AE schedule past last round at T={horizon}"));
            }
            let cfg = LearnerConfig::new(horizon, sigma);
            for (mode, rounds) in [
                (ExplorationMode::Uniform, ae_rounds),
                (ExplorationMode::NonUniform, nue_rounds),
            ] {
                let learner = EliminationLearner::new(2, 2, &cfg, mode)?;
                if learner.last_round() + 1 != rounds {
                    problems.push(format!("{mode:?} learner rounds at T={horizon}"));
                }
            }
        }
        // traces on random games, fewer seeds at the longest horizon
        let seeds = if horizon >= 1_000_000 { 4 } else { 40 };
        for s in 0..seeds {
            let sigma = [0.1, 0.25, 0.5, 1.0][s as usize % 4];
            let inst = generate_instance(&InstanceSpec::coupled(
                2 + s as usize % 2,
                2,
                sigma,
                derive_seed(SEED, &[71, horizon, s]),
            ))?;
            let cfg = LearnerConfig::new(horizon, sigma);
            let noise = NoiseModel::gaussian(sigma)?;
            for nue in [false, true] {
                let mut env = EnvHandle::new(inst.matrix.clone(), noise, derive_seed(SEED, &[72, horizon, s]));
                let trace = if nue { nue_run(&mut env, &cfg)? } else { ae_run(&mut env, &cfg)? };
                let last = if nue { nue_last_round(horizon) } else { ae_last_round(horizon) };
                if let Err(e) = check_trace_rounds(&trace, last, sigma, nue) {
                    problems.push(format!("T={horizon} seed {s}: {e}"));
                }
                runs_checked += 1;
            }
        }
    }
    Ok(outcome(
        problems.is_empty(),
        format!(
            "AE rounds {:?}, NUE rounds {:?} for T = 1e3, 1e4, 1e6; {runs_checked} traces checked{}",
            [1_000u64, 10_000, 1_000_000].map(|t| ae_last_round(t) + 1),
            [1_000u64, 10_000, 1_000_000].map(|t| nue_last_round(t) + 1),
            if problems.is_empty() { String::new() } else { format!("; {problems:?}") }
        ),
    ))
}

fn random_matrix(rng: &mut impl Rng, m: usize, l: usize) -> PayoffMatrix {
    // integer entries produce ties and multiple saddles; Gaussian ones do not
    let entries: Vec<f64> = if rng.random_bool(0.5) {
        (0..m * l).map(|_| rng.random_range(-2..=2) as f64).collect()
    } else {
        let n = Normal::new(0.0, 1.0).unwrap();
        (0..m * l).map(|_| n.sample(rng)).collect()
    };
    PayoffMatrix::new(m, l, entries).unwrap()
}

fn oracle_equivalence() -> Result<Outcome, Error> {
    let mut rng = stream(derive_seed(SEED, &[81]));
    let mut mismatches = 0;
    let mut with_saddle = 0;
    for _ in 0..1_000 {
        let (m, l) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let a = random_matrix(&mut rng, m, l);
        let brute = brute_force_saddles(&a)?;
        let main = find_pure_ne(&a);
        let agree = saddle_pairs(&a) == brute
            && match main {
                Some(ne) => brute.first() == Some(&ne.equilibrium.pair()) && ne.unique == (brute.len() == 1),
                None => brute.is_empty(),
            };
        with_saddle += usize::from(!brute.is_empty());
        mismatches += usize::from(!agree);
    }
    let n = Normal::new(0.0, 1.0).unwrap();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 1_000 {
        let a = PayoffMatrix::new(2, 2, (0..4).map(|_| n.sample(&mut rng)).collect())?;
        if !brute_force_saddles(&a)?.is_empty() {
            continue;
        }
        let closed = closed_form_2x2_mixed(&a)?;
        let lp = solve_minimax(&a)?;
        let dev = (closed.value - lp.value)
            .abs()
            .max((closed.p[0] - lp.p[0]).abs())
            .max((closed.q[0] - lp.q[0]).abs());
        worst = worst.max(dev);
        checked += 1;
    }
    Ok(outcome(
        mismatches == 0 && worst <= 1e-9,
        format!(
            "saddle sets: {mismatches} mismatches on 1000 matrices ({with_saddle} with a saddle); \
             2x2 minimax: max deviation {worst:.2e} on 1000 saddle-free games"
        ),
    ))
}

fn nash_gap_below_gap() -> Result<Outcome, Error> {
    let mut violations = 0;
    let mut pairs = 0;
    for s in 0..1_000u64 {
        let dims = (1 + s as usize % 4, 1 + (s as usize / 4) % 4);
        let sigma = [0.1, 0.5, 1.0, 3.0][s as usize % 4];
        let inst = generate_instance(&InstanceSpec::coupled(dims.0, dims.1, sigma, derive_seed(SEED, &[91, s])))?;
        let star = inst.gaps.delta_star_all()?;
        for (ds, d) in star.iter().zip(&inst.gaps.delta) {
            pairs += 1;
            violations += usize::from(ds > d);
        }
    }
    Ok(outcome(
        violations == 0,
        format!("{violations} violations of Δ* <= Δ over {pairs} pairs on 1000 instances"),
    ))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_zsg"))
        .args(args)
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited with {status}"))
    }
}

fn cli_determinism() -> Result<Outcome, Error> {
    let dir = std::env::temp_dir().join(format!("zsg-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let matrix = dir.join("game.json");
    std::fs::write(&matrix, r#"{"m":2,"l":2,"entries":[0.5,0.2,0.9,0.1]}"#)?;
    let m = matrix.to_str().unwrap().to_string();
    let cases: Vec<(&str, Vec<String>)> = vec![
        ("fig1", vec!["fig1".into(), "--runs".into(), "200".into(), "--seed".into(), "7".into()]),
        (
            "fig23",
            vec!["fig23".into(), "--runs".into(), "8".into(), "--seed".into(), "7".into(), "--T".into(), "3000".into()],
        ),
        (
            "run",
            vec!["run".into(), "--algo".into(), "tsallis".into(), "--matrix".into(), m.clone(), "--T".into(), "2000".into(), "--seed".into(), "7".into()],
        ),
    ];
    let mut problems = Vec::new();
    for (name, args) in &cases {
        let mut outputs = Vec::new();
        for (rep, threads) in ["1", "4", "4"].iter().enumerate() {
            let out = dir.join(format!("{name}-{rep}.csv"));
            let mut full: Vec<&str> = args.iter().map(String::as_str).collect();
            let out_s = out.to_str().unwrap().to_string();
            full.extend(["--threads", threads, "--out", &out_s]);
            if let Err(e) = run_cli(&full) {
                problems.push(e);
                continue;
            }
            outputs.push(std::fs::read(&out)?);
        }
        if outputs.len() != 3 || outputs.windows(2).any(|w| w[0] != w[1]) {
            problems.push(format!("{name}: outputs differ"));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(outcome(
        problems.is_empty(),
        if problems.is_empty() {
            "fig1, fig23 and run CSVs byte-identical across 3 invocations (1 and 4 threads)".to_string()
        } else {
            format!("{problems:?}")
        },
    ))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Result<Outcome, Error>)> = vec![
        ("figure 1 reproduction", fig1_reproduction),
        ("ETC misidentification Monte Carlo", misidentification),
        ("figure 2/3 ordering", fig23_ordering),
        ("AE Nash-regret bound Monte Carlo", ae_nash_bound),
        ("keep-probability ceiling", keep_probability),
        ("schedule identities", schedule_identities),
        ("oracle equivalence", oracle_equivalence),
        ("Δ* <= Δ", nash_gap_below_gap),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(o) => {
                let tag = if o.pass { "PASS" } else { "FAIL" };
                failed += usize::from(!o.pass);
                println!("[{tag}] {name} ({secs:.1}s): {}", o.detail);
            }
            Err(e) => {
                failed += 1;
                println!("[FAIL] {name} ({secs:.1}s): error: {e}");
            }
        }
    }
    println!("acceptance: {} failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
