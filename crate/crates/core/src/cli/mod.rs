//! Command-line front end of the `posgame` binary.
//!
//! Configuration is layered: built-in defaults (or a preset, or a config
//! file), then command-line flags. Every run writes its CSV table and a JSON
//! summary under `--out` (default `$POSGAME_OUT_DIR`, else `posgame-out`).
//!
//! Exit status is 0 on success, 2 on configuration errors and 1 on I/O errors.

pub mod config;
pub mod output;
pub mod preset;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::agent_sim::run_simulation;
use crate::dynamics::{interior_fixed_point, interior_is_repelling, run_trajectory, FitnessModel, Trajectory, Verdict};
use crate::error::{Error, Result};
use crate::ess::{classify_ess, genesis_outcome, DEFAULT_EPSILON_GRID};
use crate::game_core::{build_reward_matrix, RewardScheme, Strategy};
pub use config::RunConfig;
use output::EssRow;
pub use preset::{find_preset, ScenarioPreset, PRESETS};

pub const OUT_DIR_ENV: &str = "POSGAME_OUT_DIR";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ESS_FILE: &str = "ess.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Parser)]
#[command(name = "posgame", version, about = "Evolutionary dynamics of the proof-of-stake block validation game")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean-field replicator trajectory
    Replicate(RunArgs),
    /// ESS verdicts for every scheme, incumbent and fitness model
    Ess(RunArgs),
    /// Agent-based simulation with stakes and slashing
    Simulate(RunArgs),
    /// Run a named preset (fig2a..fig2f, fig3)
    Scenario {
        name: String,
        /// Run the agent-based simulation instead of the mean-field dynamics
        #[arg(long)]
        agent: bool,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Grid over the initial honest share or the penalty, reporting basin boundaries
    Sweep {
        #[arg(long, value_enum, default_value_t = SweepParam::X0)]
        param: SweepParam,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 31)]
        steps: usize,
        #[command(flatten)]
        args: RunArgs,
    },
    /// List the scenario presets
    Presets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    X0,
    Penalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Matching,
    Quorum,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML config file, or a summary.json from an earlier run
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// universal | reward-for-work | penalty
    #[arg(long)]
    pub scheme: Option<String>,
    /// Initial honest share
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub penalty: Option<f64>,
    #[arg(long)]
    pub benefit: Option<f64>,
    #[arg(long)]
    pub expense: Option<f64>,
    #[arg(long)]
    pub saved_expense: Option<f64>,
    #[arg(long)]
    pub reward: Option<f64>,
    /// Quorum threshold, at least 2/3
    #[arg(long)]
    pub quorum: Option<f64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub validators: Option<usize>,
    #[arg(long)]
    pub imitation_rate: Option<f64>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "posgame-out")]
    pub out: PathBuf,
    /// Write only this output; both when absent
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

impl RunArgs {
    fn base_config(&self) -> Result<RunConfig> {
        match &self.config {
            Some(path) => RunConfig::load(path),
            None => Ok(RunConfig::default()),
        }
    }

    /// Applies command-line overrides on top of `base`.
    pub fn apply(&self, mut c: RunConfig) -> Result<RunConfig> {
        if let Some(s) = &self.scheme {
            c.game.scheme = s.parse()?;
        }
        if let Some(m) = self.model {
            c.game.model = match m {
                ModelArg::Matching => FitnessModel::PairwiseMatching,
                ModelArg::Quorum => FitnessModel::QuorumDeterministic,
            };
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut c.game.x0, self.x0);
        set(&mut c.economy.penalty, self.penalty);
        set(&mut c.economy.benefit, self.benefit);
        set(&mut c.economy.expense, self.expense);
        set(&mut c.economy.saved_expense, self.saved_expense);
        set(&mut c.economy.reward, self.reward);
        set(&mut c.economy.quorum, self.quorum);
        set(&mut c.agents.imitation_rate, self.imitation_rate);
        set(&mut c.agents.mutation_rate, self.mutation_rate);
        if let Some(r) = self.rounds {
            c.game.rounds = r;
        }
        if let Some(s) = self.seed {
            c.agents.seed = s;
        }
        if let Some(n) = self.validators {
            c.agents.validators = n;
        }
        c.validate()?;
        Ok(c)
    }

    fn resolve(&self) -> Result<RunConfig> {
        self.apply(self.base_config()?)
    }

    fn writes(&self, format: OutputFormat) -> bool {
        self.format.is_none_or(|f| f == format)
    }
}

/// What a command produced.
#[derive(Debug)]
pub struct RunReport {
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

fn emit(args: &RunArgs, table_name: &str, table: String, summary: Value) -> Result<RunReport> {
    let mut files = Vec::new();
    if args.writes(OutputFormat::Csv) {
        files.push(output::write_file(&args.out, table_name, &table)?);
    }
    if args.writes(OutputFormat::Json) {
        let text = serde_json::to_string_pretty(&summary).expect("summary is valid JSON") + "\n";
        files.push(output::write_file(&args.out, SUMMARY_FILE, &text)?);
    }
    Ok(RunReport { summary, files })
}

fn fixed_points(config: &RunConfig) -> Result<Value> {
    let matrix = build_reward_matrix(config.game.scheme, &config.economic_params())?;
    let interior = interior_fixed_point(&matrix);
    Ok(json!({
        "pure": [0.0, 1.0],
        "interior": interior,
        "interior_repelling": interior.map(|_| interior_is_repelling(&matrix)),
    }))
}

pub fn mean_field(config: &RunConfig) -> Result<Trajectory> {
    let params = config.economic_params();
    let matrix = build_reward_matrix(config.game.scheme, &params)?;
    run_trajectory(&matrix, config.initial_state()?, config.game.model, &params, &config.trajectory_options()?)
}

fn run_mean_field(config: &RunConfig, args: &RunArgs, preset: Option<&str>) -> Result<RunReport> {
    let trajectory = mean_field(config)?;
    let params = config.economic_params();
    let matrix = build_reward_matrix(config.game.scheme, &params)?;
    let last = trajectory.final_state();
    let summary = json!({
        "command": "replicate",
        "preset": preset,
        "verdict": trajectory.verdict,
        "rounds_to_converge": trajectory.rounds_to_converge,
        "final_state": { "x_h": last.honest(), "x_m": last.malicious() },
        "genesis": genesis_outcome(&config.initial_state()?, config.game.scheme, &params)?,
        "fixed_points": fixed_points(config)?,
        "matrix": matrix.cells(),
        "config": config,
    });
    emit(args, TRAJECTORY_FILE, output::trajectory_csv(&trajectory), summary)
}

fn run_agents(config: &RunConfig, args: &RunArgs, preset: Option<&str>) -> Result<RunReport> {
    let sim = config.sim_config()?;
    let t = run_simulation(&sim)?;
    let stake = |s: Strategy| -> f64 {
        t.records.last().map_or(0.0, |r| match s {
            Strategy::Honest => r.stake_honest,
            Strategy::Malicious => r.stake_malicious,
        })
    };
    let summary = json!({
        "command": "simulate",
        "preset": preset,
        "verdict": t.verdict,
        "rounds_to_converge": t.rounds_to_converge,
        "final_honest_fraction": t.honest_fraction.last(),
        "outcome_counts": t.outcome_counts,
        "stake": { "honest": stake(Strategy::Honest), "malicious": stake(Strategy::Malicious) },
        "fixed_points": fixed_points(config)?,
        "config": config,
    });
    emit(args, TRAJECTORY_FILE, output::agent_csv(&t), summary)
}

fn run_ess(config: &RunConfig, args: &RunArgs) -> Result<RunReport> {
    let mut rows = Vec::new();
    for model in [FitnessModel::QuorumDeterministic, FitnessModel::PairwiseMatching] {
        for scheme in RewardScheme::ALL {
            let mut params = config.economic_params();
            if params.penalty.is_none() && scheme == RewardScheme::Penalty {
                params.penalty = RunConfig::default().economic_params().penalty;
            }
            for incumbent in Strategy::ALL {
                let verdict = classify_ess(incumbent, scheme, &params, model, &DEFAULT_EPSILON_GRID)?;
                rows.push(EssRow { scheme, incumbent, model, verdict });
            }
        }
    }
    let table: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "scheme": r.scheme,
                "incumbent": r.incumbent,
                "model": r.model,
                "verdict": r.verdict,
            })
        })
        .collect();
    let summary = json!({
        "command": "ess",
        "epsilon_grid": DEFAULT_EPSILON_GRID,
        "verdicts": table,
        "config": config,
    });
    emit(args, ESS_FILE, output::ess_csv(&rows), summary)
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub verdict: Verdict,
    pub rounds_to_converge: Option<usize>,
    pub final_honest: f64,
    pub interior_fixed_point: Option<f64>,
}

/// Adjacent grid values between which the verdict changes.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BasinBoundary {
    pub lower: f64,
    pub upper: f64,
    pub below: Verdict,
    pub above: Verdict,
}

pub fn sweep(config: &RunConfig, param: SweepParam, from: f64, to: f64, steps: usize) -> Result<Vec<SweepPoint>> {
    if steps < 2 {
        return Err(Error::config("sweep needs at least 2 steps"));
    }
    if !(from.is_finite() && to.is_finite() && from < to) {
        return Err(Error::config(format!("sweep range [{from}, {to}] is empty")));
    }
    let grid: Vec<f64> = (0..steps).map(|k| from + (to - from) * k as f64 / (steps - 1) as f64).collect();
    let configs = grid
        .iter()
        .map(|&value| {
            let mut c = config.clone();
            match param {
                SweepParam::X0 => c.game.x0 = value,
                SweepParam::Penalty => c.economy.penalty = value,
            }
            c.validate().map(|_| (value, c))
        })
        .collect::<Result<Vec<_>>>()?;
    // ordered collect keeps the output independent of thread scheduling
    configs
        .par_iter()
        .map(|(value, c)| {
            let t = mean_field(c)?;
            let matrix = build_reward_matrix(c.game.scheme, &c.economic_params())?;
            Ok(SweepPoint {
                value: *value,
                verdict: t.verdict,
                rounds_to_converge: t.rounds_to_converge,
                final_honest: t.final_state().honest(),
                interior_fixed_point: interior_fixed_point(&matrix),
            })
        })
        .collect()
}

pub fn basin_boundaries(points: &[SweepPoint]) -> Vec<BasinBoundary> {
    points
        .windows(2)
        .filter(|w| w[0].verdict != w[1].verdict)
        .map(|w| BasinBoundary { lower: w[0].value, upper: w[1].value, below: w[0].verdict, above: w[1].verdict })
        .collect()
}

fn run_sweep(
    config: &RunConfig,
    args: &RunArgs,
    param: SweepParam,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<RunReport> {
    let points = sweep(config, param, from, to, steps)?;
    let boundaries = basin_boundaries(&points);
    let mut table = String::from("value,verdict,rounds_to_converge,final_x_h,interior_fixed_point\n");
    for p in &points {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            output::format_g12(p.value),
            p.verdict,
            p.rounds_to_converge.map_or(String::new(), |r| r.to_string()),
            output::format_g12(p.final_honest),
            p.interior_fixed_point.map_or(String::new(), output::format_g12),
        ));
    }
    let summary = json!({
        "command": "sweep",
        "param": match param { SweepParam::X0 => "x0", SweepParam::Penalty => "penalty" },
        "points": points,
        "boundaries": boundaries,
        "config": config,
    });
    emit(args, SWEEP_FILE, table, summary)
}

pub fn run(cli: Cli) -> Result<RunReport> {
    match cli.command {
        Command::Replicate(args) => run_mean_field(&args.resolve()?, &args, None),
        Command::Simulate(args) => run_agents(&args.resolve()?, &args, None),
        Command::Ess(args) => run_ess(&args.resolve()?, &args),
        Command::Scenario { name, agent, args } => {
            let preset = find_preset(&name)?;
            if args.config.is_some() {
                return Err(Error::config("a scenario cannot be combined with --config"));
            }
            let config = args.apply(preset.config())?;
            if agent {
                run_agents(&config, &args, Some(preset.name))
            } else {
                run_mean_field(&config, &args, Some(preset.name))
            }
        }
        Command::Sweep { param, from, to, steps, args } => {
            let config = args.resolve()?;
            run_sweep(&config, &args, param, from, to, steps)
        }
        Command::Presets => {
            let list: Vec<Value> = PRESETS
                .iter()
                .map(|p| json!({ "name": p.name, "description": p.description, "config": p.config() }))
                .collect();
            Ok(RunReport { summary: Value::Array(list), files: Vec::new() })
        }
    }
}

/// Entry point of the binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(report) => {
            let text = serde_json::to_string_pretty(&report.summary).expect("summary is valid JSON");
            // a closed pipe on stdout is not a failure of the run
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            for f in &report.files {
                log::info!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("posgame: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
