//! Discrete replicator dynamics over block rounds.
//!
//! Each round the honest share is reweighted by its shifted fitness. The
//! shift `σ = max(0, -min F) + β` makes both fitnesses strictly positive so
//! negative payoffs (slashes, unpaid expenses) can be handled; it changes the
//! speed of selection but never its direction or the rest points.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_core::{
    quorum_outcome, round_payoff, EconomicParams, PopulationState, QuorumOutcome, RewardMatrix, Strategy,
};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_ROUNDS: usize = 500;
pub const DEFAULT_BACKGROUND_FITNESS: f64 = 1.0;

/// Fitness differences at or below this count as a rest point.
pub const REST_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessModel {
    /// Expected payoff against a partner drawn from the population mixture.
    #[serde(rename = "matching")]
    PairwiseMatching,
    /// Payoff in the column picked by the quorum the population forms.
    #[serde(rename = "quorum")]
    QuorumDeterministic,
}

impl std::str::FromStr for FitnessModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "matching" | "pairwise" | "pairwise-matching" => Ok(FitnessModel::PairwiseMatching),
            "quorum" | "quorum-deterministic" => Ok(FitnessModel::QuorumDeterministic),
            other => Err(Error::config(format!("unknown fitness model `{other}`"))),
        }
    }
}

impl fmt::Display for FitnessModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitnessModel::PairwiseMatching => f.write_str("matching"),
            FitnessModel::QuorumDeterministic => f.write_str("quorum"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub honest: f64,
    pub malicious: f64,
}

impl Fitness {
    pub fn new(honest: f64, malicious: f64) -> Self {
        Fitness { honest, malicious }
    }

    pub fn of(&self, s: Strategy) -> f64 {
        match s {
            Strategy::Honest => self.honest,
            Strategy::Malicious => self.malicious,
        }
    }

    /// `F_h - F_m`.
    pub fn advantage(&self) -> f64 {
        self.honest - self.malicious
    }
}

/// Affine shift applied to fitness before the replicator update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftPolicy {
    /// Background fitness `β > 0`.
    pub background: f64,
}

impl Default for ShiftPolicy {
    fn default() -> Self {
        ShiftPolicy { background: DEFAULT_BACKGROUND_FITNESS }
    }
}

impl ShiftPolicy {
    pub fn new(background: f64) -> Result<Self> {
        if !(background.is_finite() && background > 0.0) {
            return Err(Error::config(format!("background fitness must be > 0, got {background}")));
        }
        Ok(ShiftPolicy { background })
    }

    /// `σ = max(0, -min(lowest)) + β` for a set of payoffs whose minimum is `lowest`.
    pub fn offset(&self, lowest: f64) -> f64 {
        (-lowest).max(0.0) + self.background
    }
}

pub fn fitness(matrix: &RewardMatrix, x: &PopulationState, model: FitnessModel, params: &EconomicParams) -> Fitness {
    match model {
        FitnessModel::PairwiseMatching => {
            let against = |s: Strategy| {
                x.honest() * matrix.payoff(s, Strategy::Honest) + x.malicious() * matrix.payoff(s, Strategy::Malicious)
            };
            Fitness::new(against(Strategy::Honest), against(Strategy::Malicious))
        }
        FitnessModel::QuorumDeterministic => {
            let outcome = quorum_outcome(x, params.quorum_threshold);
            Fitness::new(
                round_payoff(matrix, Strategy::Honest, outcome, params),
                round_payoff(matrix, Strategy::Malicious, outcome, params),
            )
        }
    }
}

pub fn replicator_step(x: &PopulationState, f: Fitness, shift: ShiftPolicy) -> Result<PopulationState> {
    let sigma = shift.offset(f.honest.min(f.malicious));
    let honest = x.honest() * (f.honest + sigma);
    let malicious = x.malicious() * (f.malicious + sigma);
    let total = honest + malicious;
    if !(total > 0.0) {
        return Err(Error::DegenerateStep(total));
    }
    PopulationState::new(honest / total, malicious / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    ConvergedHonest,
    ConvergedMalicious,
    InteriorRest,
    MaxRoundsReached,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::ConvergedHonest => "ConvergedHonest",
            Verdict::ConvergedMalicious => "ConvergedMalicious",
            Verdict::InteriorRest => "InteriorRest",
            Verdict::MaxRoundsReached => "MaxRoundsReached",
        }
    }

    /// Convergence verdict for a bare state, if it has reached a pure corner.
    pub fn of_state(x: &PopulationState, epsilon: f64) -> Option<Verdict> {
        if x.honest() >= 1.0 - epsilon {
            Some(Verdict::ConvergedHonest)
        } else if x.malicious() >= 1.0 - epsilon {
            Some(Verdict::ConvergedMalicious)
        } else {
            None
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOptions {
    pub max_rounds: usize,
    pub epsilon: f64,
    pub shift: ShiftPolicy,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions { max_rounds: DEFAULT_MAX_ROUNDS, epsilon: DEFAULT_EPSILON, shift: ShiftPolicy::default() }
    }
}

impl TrajectoryOptions {
    pub fn with_max_rounds(mut self, max_rounds: usize) -> Self {
        self.max_rounds = max_rounds;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `states[t]` is the population at the start of round `t`.
    pub states: Vec<PopulationState>,
    /// Fitness evaluated at each state.
    pub fitness_trace: Vec<Fitness>,
    /// Quorum the population would form at each state.
    pub outcomes: Vec<QuorumOutcome>,
    pub verdict: Verdict,
    /// Rounds taken to reach the verdict; `None` when the round limit was hit.
    pub rounds_to_converge: Option<usize>,
}

impl Trajectory {
    pub fn final_state(&self) -> &PopulationState {
        self.states.last().expect("trajectory always holds the initial state")
    }

    /// Honest share at round `t`, holding the last state once the run has stopped.
    pub fn honest_at(&self, t: usize) -> f64 {
        self.states.get(t).unwrap_or_else(|| self.final_state()).honest()
    }

    /// First round whose honest share is below `level`.
    pub fn first_round_honest_below(&self, level: f64) -> Option<usize> {
        self.states.iter().position(|x| x.honest() < level)
    }
}

pub fn run_trajectory(
    matrix: &RewardMatrix,
    x0: PopulationState,
    model: FitnessModel,
    params: &EconomicParams,
    options: &TrajectoryOptions,
) -> Result<Trajectory> {
    if options.max_rounds == 0 {
        return Err(Error::domain("max_rounds must be >= 1"));
    }
    if !(options.epsilon > 0.0 && options.epsilon < 0.5) {
        return Err(Error::domain(format!("convergence tolerance {} outside (0, 0.5)", options.epsilon)));
    }
    let mut states = vec![x0];
    let mut fitness_trace = Vec::new();
    let mut outcomes = Vec::new();
    let mut round = 0;
    let (verdict, rounds_to_converge) = loop {
        let x = states[round];
        let f = fitness(matrix, &x, model, params);
        fitness_trace.push(f);
        outcomes.push(quorum_outcome(&x, params.quorum_threshold));
        if let Some(v) = Verdict::of_state(&x, options.epsilon) {
            break (v, Some(round));
        }
        if f.advantage().abs() <= REST_TOLERANCE {
            break (Verdict::InteriorRest, Some(round));
        }
        if round == options.max_rounds {
            break (Verdict::MaxRoundsReached, None);
        }
        states.push(replicator_step(&x, f, options.shift)?);
        round += 1;
    };
    Ok(Trajectory { states, fitness_trace, outcomes, verdict, rounds_to_converge })
}

/// Honest share `x*` at which both strategies earn the same under pairwise matching.
pub fn interior_fixed_point(matrix: &RewardMatrix) -> Option<f64> {
    let [[hh, hm], [mh, mm]] = matrix.cells();
    let denominator = hh - hm - mh + mm;
    if denominator.abs() < f64::EPSILON * (hh.abs() + hm.abs() + mh.abs() + mm.abs()).max(1.0) {
        return None;
    }
    let x = (mm - hm) / denominator;
    (x > 0.0 && x < 1.0).then_some(x)
}

/// True when the interior rest point repels (coordination game): `F_h - F_m`
/// grows with the honest share.
pub fn interior_is_repelling(matrix: &RewardMatrix) -> bool {
    let [[hh, hm], [mh, mm]] = matrix.cells();
    hh - hm - mh + mm > 0.0
}
