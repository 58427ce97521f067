//! Agent-based simulation of block rounds.
//!
//! Explicit validators vote their strategy each round, the quorum outcome
//! moves stake (rewards, expenses, slashes), and strategies are then revised
//! by imitation. Stake accounting always follows the realized quorum; the
//! fitness that drives imitation follows the configured [`FitnessModel`].

mod fork;
mod revision;
mod rng;
mod round;

pub use fork::{fork_scenario, ForkReport};
pub use revision::{update_strategies, RevisionParams, RevisionRule};
pub use round::{payoff_components, run_round, PayoffComponents, RoundResult};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Fitness, FitnessModel, ShiftPolicy, Verdict, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::game_core::{
    build_reward_matrix, round_payoff, EconomicParams, PopulationState, QuorumOutcome, RewardMatrix, RewardScheme,
    Strategy,
};

pub const MIN_VALIDATORS: usize = 4;
pub const DEFAULT_BASELINE_STAKE: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatorAccount {
    pub id: u64,
    pub strategy: Strategy,
    pub stake: f64,
    pub participated_last_round: bool,
    pub cumulative_payoff: f64,
}

impl ValidatorAccount {
    pub fn new(id: u64, strategy: Strategy, stake: f64) -> Self {
        ValidatorAccount { id, strategy, stake, participated_last_round: false, cumulative_payoff: 0.0 }
    }

    /// Zero-stake validators stay in the set but no longer vote.
    pub fn is_active(&self) -> bool {
        self.stake > 0.0
    }
}

pub type ValidatorSet = Vec<ValidatorAccount>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_validators: usize,
    pub initial_honest_fraction: f64,
    pub scheme: RewardScheme,
    pub params: EconomicParams,
    pub baseline_stake: f64,
    pub imitation_rate: f64,
    pub mutation_rate: f64,
    pub rounds: usize,
    pub seed: u64,
    pub fitness_model: FitnessModel,
    pub revision: RevisionRule,
    pub shift: ShiftPolicy,
    pub epsilon: f64,
}

impl SimConfig {
    pub fn new(
        scheme: RewardScheme,
        params: EconomicParams,
        n_validators: usize,
        initial_honest_fraction: f64,
    ) -> Self {
        SimConfig {
            n_validators,
            initial_honest_fraction,
            scheme,
            params,
            baseline_stake: DEFAULT_BASELINE_STAKE,
            imitation_rate: 1.0,
            mutation_rate: 0.0,
            rounds: 100,
            seed: 0,
            fitness_model: FitnessModel::PairwiseMatching,
            revision: RevisionRule::Proportional,
            shift: ShiftPolicy::default(),
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_validators < MIN_VALIDATORS {
            return Err(Error::config(format!(
                "need at least {MIN_VALIDATORS} validators for a BFT quorum, got {}",
                self.n_validators
            )));
        }
        if !(0.0..=1.0).contains(&self.initial_honest_fraction) {
            return Err(Error::config(format!(
                "initial honest fraction {} outside [0, 1]",
                self.initial_honest_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.imitation_rate) {
            return Err(Error::config(format!("imitation rate {} outside [0, 1]", self.imitation_rate)));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::config(format!("mutation rate {} outside [0, 1]", self.mutation_rate)));
        }
        if !(self.baseline_stake.is_finite() && self.baseline_stake >= 0.0) {
            return Err(Error::config(format!("baseline stake {} must be >= 0", self.baseline_stake)));
        }
        ShiftPolicy::new(self.shift.background)?;
        build_reward_matrix(self.scheme, &self.params)?;
        Ok(())
    }
}

/// Lays out `round(n * fraction)` honest validators at seeded positions.
pub fn init_validators(config: &SimConfig) -> Result<ValidatorSet> {
    config.validate()?;
    let n = config.n_validators;
    let fraction = config.initial_honest_fraction;
    let honest = ((n as f64) * fraction).round() as usize;
    if fraction > 0.0 && fraction < 1.0 && (honest == 0 || honest == n) {
        log::warn!("honest fraction {fraction} rounds to {honest} of {n} validators; the requested minority vanishes");
    }
    let mut strategies: Vec<Strategy> = std::iter::repeat_n(Strategy::Honest, honest)
        .chain(std::iter::repeat_n(Strategy::Malicious, n - honest))
        .collect();
    strategies.shuffle(&mut rng::setup_rng(config.seed));
    Ok(strategies
        .into_iter()
        .enumerate()
        .map(|(id, s)| ValidatorAccount::new(id as u64, s, config.baseline_stake))
        .collect())
}

/// Round-robin fitness: each validator's average payoff against every other validator.
pub fn matching_fitness(matrix: &RewardMatrix, honest: usize, malicious: usize) -> Fitness {
    let against = |s: Strategy| {
        let (same, other) = match s {
            Strategy::Honest => (honest.saturating_sub(1), malicious),
            Strategy::Malicious => (malicious.saturating_sub(1), honest),
        };
        let total = same + other;
        if total == 0 {
            return matrix.payoff(s, s);
        }
        (same as f64 * matrix.payoff(s, s) + other as f64 * matrix.payoff(s, s.other())) / total as f64
    };
    Fitness::new(against(Strategy::Honest), against(Strategy::Malicious))
}

/// Largest payoff difference the scheme can produce, nil blocks included.
fn max_payoff_gap(matrix: &RewardMatrix, params: &EconomicParams) -> f64 {
    let nil = [-params.expense, -params.saved_expense];
    let hi = nil.iter().copied().fold(matrix.max_entry(), f64::max);
    let lo = nil.iter().copied().fold(matrix.min_entry(), f64::min);
    hi - lo
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Honest share when the round was played.
    pub honest_fraction: f64,
    pub outcome: QuorumOutcome,
    /// Strategy fitness that drove the revision after this round.
    pub fitness: Fitness,
    pub stake_honest: f64,
    pub stake_malicious: f64,
    pub minted: f64,
    pub slashed: f64,
    pub expenses: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub honest_quorum: usize,
    pub malicious_quorum: usize,
    pub nil_block: usize,
}

impl OutcomeCounts {
    fn record(&mut self, outcome: QuorumOutcome) {
        match outcome {
            QuorumOutcome::HonestQuorum => self.honest_quorum += 1,
            QuorumOutcome::MaliciousQuorum => self.malicious_quorum += 1,
            QuorumOutcome::NilBlock => self.nil_block += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrajectory {
    /// Honest share before round 0 and after each round's revision.
    pub honest_fraction: Vec<f64>,
    pub records: Vec<RoundRecord>,
    pub outcome_counts: OutcomeCounts,
    pub verdict: Verdict,
    /// First round index at which the population was pure.
    pub rounds_to_converge: Option<usize>,
    pub final_stakes: Vec<f64>,
}

/// A running simulation. Rounds mutate the validator set in sequence.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    matrix: RewardMatrix,
    revision: RevisionParams,
    validators: ValidatorSet,
    round: usize,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        let validators = init_validators(&config)?;
        let matrix = build_reward_matrix(config.scheme, &config.params)?;
        let revision = RevisionParams {
            rule: config.revision,
            imitation_rate: config.imitation_rate,
            mutation_rate: config.mutation_rate,
            shift: config.shift,
            max_gap: max_payoff_gap(&matrix, &config.params),
        };
        Ok(Simulation { config, matrix, revision, validators, round: 0 })
    }

    pub fn validators(&self) -> &[ValidatorAccount] {
        &self.validators
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn counts(&self) -> (usize, usize) {
        let honest = self.validators.iter().filter(|v| v.strategy == Strategy::Honest).count();
        (honest, self.validators.len() - honest)
    }

    pub fn honest_fraction(&self) -> f64 {
        self.counts().0 as f64 / self.validators.len() as f64
    }

    /// Plays one round and revises strategies. Returns the round's ledger and
    /// the strategy fitness used for the revision.
    pub fn step(&mut self) -> (RoundResult, Fitness) {
        let (honest, malicious) = self.counts();
        let result = run_round(&mut self.validators, self.config.scheme, &self.config.params, self.round);
        let (per_validator, strategy_fitness) = match self.config.fitness_model {
            FitnessModel::PairwiseMatching => {
                let f = matching_fitness(&self.matrix, honest, malicious);
                (self.validators.iter().map(|v| f.of(v.strategy)).collect::<Vec<_>>(), f)
            }
            FitnessModel::QuorumDeterministic => {
                let cell = |s| round_payoff(&self.matrix, s, result.outcome, &self.config.params);
                (result.payoffs.clone(), Fitness::new(cell(Strategy::Honest), cell(Strategy::Malicious)))
            }
        };
        update_strategies(&mut self.validators, &per_validator, &self.revision, self.config.seed, self.round);
        self.round += 1;
        (result, strategy_fitness)
    }
}

pub fn run_simulation(config: &SimConfig) -> Result<SimTrajectory> {
    let mut sim = Simulation::new(config.clone())?;
    let epsilon = config.epsilon;
    let verdict_at = |h: f64| PopulationState::from_honest(h).ok().and_then(|x| Verdict::of_state(&x, epsilon));

    let mut honest_fraction = vec![sim.honest_fraction()];
    let mut records = Vec::with_capacity(config.rounds);
    let mut outcome_counts = OutcomeCounts::default();
    for _ in 0..config.rounds {
        let before = sim.honest_fraction();
        let round = sim.round();
        let (result, fitness) = sim.step();
        // stakes are attributed to the strategy held while the round was played
        let (stake_honest, stake_malicious) =
            result.votes.iter().zip(sim.validators()).fold((0.0, 0.0), |(h, m), (vote, v)| match vote {
                Some(Strategy::Honest) => (h + v.stake, m),
                Some(Strategy::Malicious) => (h, m + v.stake),
                None => (h, m),
            });
        outcome_counts.record(result.outcome);
        records.push(RoundRecord {
            round,
            honest_fraction: before,
            outcome: result.outcome,
            fitness,
            stake_honest,
            stake_malicious,
            minted: result.minted,
            slashed: result.slashed,
            expenses: result.expenses,
        });
        honest_fraction.push(sim.honest_fraction());
    }
    let rounds_to_converge = honest_fraction.iter().position(|&h| verdict_at(h).is_some());
    let verdict = honest_fraction.last().and_then(|&h| verdict_at(h)).unwrap_or(Verdict::MaxRoundsReached);
    Ok(SimTrajectory {
        honest_fraction,
        records,
        outcome_counts,
        verdict,
        rounds_to_converge,
        final_stakes: sim.validators().iter().map(|v| v.stake).collect(),
    })
}
