//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line, even when all of them pass.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::Parser;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use posgame::agent_sim::{fork_scenario, run_simulation, Simulation};
use posgame::cli::config::RunConfig;
use posgame::cli::preset::find_preset;
use posgame::cli::{basin_boundaries, mean_field, sweep, Cli, SweepParam};
use posgame::dynamics::{interior_fixed_point, FitnessModel, Verdict};
use posgame::ess::{classify_ess, EssClass, DEFAULT_EPSILON_GRID};
use posgame::game_core::{
    build_reward_matrix, check_security_condition, effective_reward, quorum_size, EconomicParams, RewardScheme,
    Strategy,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:.0?}"))
}

fn preset(name: &str) -> RunConfig {
    find_preset(name).expect("preset exists").config()
}

fn matrices() -> Outcome {
    let start = Instant::now();
    let params = EconomicParams::default();
    let expected = [
        (RewardScheme::Universal, [[10.0, 10.0], [11.0, 110.0]]),
        (RewardScheme::RewardForWork, [[10.0, -1.0], [-1.0, 110.0]]),
        (RewardScheme::Penalty, [[10.0, -100.0], [-100.0, 110.0]]),
    ];
    for (scheme, cells) in expected {
        let m = build_reward_matrix(scheme, &params).map_err(|e| e.to_string())?;
        ensure(m.cells() == cells, || format!("{scheme}: {:?} != {cells:?}", m.cells()))?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok("three matrices exact".into())
}

fn figures() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    for (name, want) in [
        ("fig2a", Verdict::ConvergedMalicious),
        ("fig2c", Verdict::ConvergedMalicious),
        ("fig2f", Verdict::ConvergedMalicious),
        ("fig3", Verdict::ConvergedHonest),
    ] {
        let t = mean_field(&preset(name)).map_err(|e| e.to_string())?;
        ensure(t.verdict == want, || format!("{name}: {} instead of {want}", t.verdict))?;
        details.push(format!("{name} {} in {}", t.verdict, t.rounds_to_converge.unwrap_or(0)));
        if name == "fig2c" {
            let below = t.first_round_honest_below(0.5);
            ensure(below.is_some_and(|r| r <= 150), || format!("fig2c honest share below 0.5 at {below:?}"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(details.join(", "))
}

fn penalty_monotonicity() -> Outcome {
    let start = Instant::now();
    let mut rounds = Vec::new();
    for p in [1000.0, 500.0, 100.0] {
        let mut c = preset("fig3");
        c.economy.penalty = p;
        let t = mean_field(&c).map_err(|e| e.to_string())?;
        ensure(t.verdict == Verdict::ConvergedHonest, || format!("p={p}: {}", t.verdict))?;
        rounds.push(t.rounds_to_converge.expect("converged"));
    }
    ensure(rounds[0] <= rounds[1] && rounds[1] <= rounds[2], || format!("rounds {rounds:?} not monotone"))?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("rounds p=1000/500/100: {rounds:?}"))
}

fn ess_table() -> Outcome {
    let start = Instant::now();
    let params = EconomicParams::default();
    let model = FitnessModel::QuorumDeterministic;
    let classify = |incumbent, scheme, params: &EconomicParams| {
        classify_ess(incumbent, scheme, params, model, &DEFAULT_EPSILON_GRID).map_err(|e| e.to_string())
    };
    let no_saving = params.clone().with_saved_expense(0.0);
    let cases = [
        (Strategy::Honest, RewardScheme::Universal, &no_saving, EssClass::MixedOrNeutral, Some((10.0, 10.0))),
        (Strategy::Honest, RewardScheme::RewardForWork, &params, EssClass::StrictEss, Some((10.0, -1.0))),
        (Strategy::Honest, RewardScheme::Penalty, &params, EssClass::StrictEss, Some((10.0, -100.0))),
        (Strategy::Malicious, RewardScheme::RewardForWork, &params, EssClass::StrictEss, None),
        (Strategy::Malicious, RewardScheme::Penalty, &params, EssClass::StrictEss, None),
    ];
    for (incumbent, scheme, p, class, fitness) in cases {
        let v = classify(incumbent, scheme, p)?;
        ensure(v.classification == class, || format!("{scheme}/{incumbent}: {} not {class}", v.classification))?;
        if let Some(f) = fitness {
            let got = (v.incumbent_fitness, v.mutant_fitness);
            ensure(got == f, || format!("{scheme}/{incumbent}: fitness {got:?} not {f:?}"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok("five rows reproduced".into())
}

/// Root of `F_h - F_m` under pairwise matching, found by bisection on the
/// literal matrix entries.
fn bisect_indifference(cells: [[f64; 2]; 2]) -> f64 {
    let gap = |x: f64| {
        let h = x * cells[0][0] + (1.0 - x) * cells[0][1];
        let m = x * cells[1][0] + (1.0 - x) * cells[1][1];
        h - m
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    assert!(gap(lo).signum() != gap(hi).signum(), "no sign change on [0, 1]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid).signum() == gap(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn thresholds() -> Outcome {
    let params = EconomicParams::default();
    let cases = [
        (RewardScheme::Penalty, [[10.0, -100.0], [-100.0, 110.0]], 0.65625, (0.5, 0.8)),
        (RewardScheme::RewardForWork, [[10.0, -1.0], [-1.0, 110.0]], 111.0 / 122.0, (0.85, 0.95)),
    ];
    let mut details = Vec::new();
    for (scheme, cells, expected, (from, to)) in cases {
        let m = build_reward_matrix(scheme, &params).map_err(|e| e.to_string())?;
        let x = interior_fixed_point(&m).ok_or_else(|| format!("{scheme}: no interior fixed point"))?;
        ensure((x - expected).abs() <= 1e-9, || format!("{scheme}: x* = {x}, expected {expected}"))?;
        let oracle = bisect_indifference(cells);
        ensure((x - oracle).abs() <= 1e-9, || format!("{scheme}: x* = {x}, bisection {oracle}"))?;

        let mut c = RunConfig::default();
        c.game.scheme = scheme;
        let points = sweep(&c, SweepParam::X0, from, to, 31).map_err(|e| e.to_string())?;
        let b = basin_boundaries(&points);
        ensure(b.len() == 1 && b[0].lower < expected && expected < b[0].upper, || {
            format!("{scheme}: sweep boundaries {b:?} do not bracket {expected}")
        })?;
        details.push(format!("{scheme} x*={x:.9} in [{:.4}, {:.4}]", b[0].lower, b[0].upper));
    }
    Ok(details.join(", "))
}

fn mean_field_consistency() -> Outcome {
    const N: usize = 10_000;
    const ROUNDS: usize = 50;
    const SEEDS: u64 = 10;
    let start = Instant::now();
    let mut details = Vec::new();
    for name in ["fig2a", "fig3"] {
        let config = preset(name);
        let reference = mean_field(&config).map_err(|e| e.to_string())?;
        let mut sim = config.sim_config().map_err(|e| e.to_string())?;
        sim.n_validators = N;
        sim.rounds = ROUNDS;
        let runs: Vec<Vec<f64>> = (0..SEEDS)
            .map(|seed| {
                let mut s = sim.clone();
                s.seed = seed;
                run_simulation(&s).map(|t| t.honest_fraction)
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let sup_norm = |path: &dyn Fn(usize) -> f64| {
            (0..=ROUNDS).map(|t| (path(t) - reference.honest_at(t)).abs()).fold(0.0, f64::max)
        };
        let averaged = sup_norm(&|t| runs.iter().map(|r| r[t]).sum::<f64>() / SEEDS as f64);
        let per_seed = runs.iter().map(|r| sup_norm(&|t| r[t])).sum::<f64>() / SEEDS as f64;
        ensure(averaged <= 0.05 && per_seed <= 0.05, || {
            format!("{name}: sup-norm {averaged:.4} (mean path), {per_seed:.4} (mean over seeds)")
        })?;
        details.push(format!("{name} sup-norm {averaged:.4}/{per_seed:.4}"));
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(details.join(", "))
}

fn cli_csv(dir: &std::path::Path, seed: u64) -> Result<Vec<u8>, String> {
    let out = dir.to_str().expect("utf-8 temp path");
    let seed = seed.to_string();
    let args = ["posgame", "simulate", "--validators", "200", "--rounds", "60", "--seed", &seed, "--out", out];
    let cli = Cli::try_parse_from(args).map_err(|e| e.to_string())?;
    posgame::cli::run(cli).map_err(|e| e.to_string())?;
    std::fs::read(dir.join(posgame::cli::TRAJECTORY_FILE)).map_err(|e| e.to_string())
}

fn conservation_and_determinism() -> Outcome {
    let mut rounds = 0usize;
    let schemes = [("fig2a", 0.0), ("fig2c", 0.02), ("fig3", 0.05), ("fig2f", 0.0)];
    for seed in 0..10u64 {
        let (name, mutation) = schemes[seed as usize % schemes.len()];
        let mut config = preset(name).sim_config().map_err(|e| e.to_string())?;
        config.n_validators = 60;
        config.mutation_rate = mutation;
        config.seed = seed;
        let mut sim = Simulation::new(config).map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            let (r, _) = sim.step();
            ensure(r.conservation_gap() == 0.0, || {
                format!("{name} seed {seed} round {}: gap {}", r.round_index, r.conservation_gap())
            })?;
            rounds += 1;
        }
    }

    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let c = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = cli_csv(a.path(), 7)?;
    ensure(first == cli_csv(b.path(), 7)?, || "same seed gave different CSVs".into())?;
    ensure(first != cli_csv(c.path(), 8)?, || "different seeds gave identical CSVs".into())?;
    Ok(format!("{rounds} rounds balanced exactly, CSVs byte-identical"))
}

fn fork_dichotomy() -> Outcome {
    let start = Instant::now();
    let params = EconomicParams::default();
    let mut cases = 0;
    for n in [4usize, 9, 30, 100, 301] {
        for k in 0..=n {
            let fraction = k as f64 / n as f64;
            for penalty in [false, true] {
                let r = fork_scenario(n, fraction, penalty, &params).map_err(|e| e.to_string())?;
                let expect_both = !penalty && r.rational_count >= quorum_size(n, params.quorum_threshold);
                ensure(expect_both == (!penalty && 3 * k >= 2 * n), || format!("n={n} k={k}: quorum size mismatch"))?;
                ensure(r.both_forks_finalized == expect_both, || format!("n={n} k={k} penalty={penalty}: {r:?}"))?;
                let slashed = if penalty { r.rational_count } else { 0 };
                ensure(r.slashed_count == slashed, || {
                    format!("n={n} k={k} penalty={penalty}: slashed {}", r.slashed_count)
                })?;
                cases += 1;
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("{cases} scenarios"))
}

fn security_condition() -> Outcome {
    let mut runner = TestRunner::new(Config { cases: 4096, failure_persistence: None, ..Config::default() });
    let strategy = (0.0..1e6f64, 1usize..2000, 0.0..1e3f64, prop::sample::select(RewardScheme::ALL.to_vec()));
    runner
        .run(&strategy, |(incentive, denominator, expense, scheme)| {
            let params = EconomicParams { expense, ..EconomicParams::default() };
            let reward = effective_reward(scheme, &params, incentive, true, denominator).unwrap();
            let insecure = !check_security_condition(reward).is_secure();
            prop_assert_eq!(insecure, incentive / (denominator as f64) < expense);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("4096 randomized parameter sets".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 matrix fidelity", matrices),
        ("2 figure reproduction", figures),
        ("3 penalty monotonicity", penalty_monotonicity),
        ("4 ESS table", ess_table),
        ("5 derived thresholds", thresholds),
        ("6 mean-field consistency", mean_field_consistency),
        ("7 conservation and determinism", conservation_and_determinism),
        ("8 fork dichotomy", fork_dichotomy),
        ("9 security condition", security_condition),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        match result {
            Ok(detail) => println!("PASS  {name:<32} {elapsed:>9.2?}  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<32} {elapsed:>9.2?}  {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
