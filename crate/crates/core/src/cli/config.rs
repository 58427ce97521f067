//! Run configuration: a TOML file with `[game]`, `[economy]` and `[agents]`
//! sections. Every field has a default, so an empty file is a valid config.
//!
//! ```toml
//! [game]
//! scheme = "penalty"
//! model = "matching"
//! x0 = 0.667
//!
//! [economy]
//! unit = 1.0
//! penalty = 500.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent_sim::{RevisionRule, SimConfig, DEFAULT_BASELINE_STAKE};
use crate::dynamics::{
    FitnessModel, ShiftPolicy, TrajectoryOptions, DEFAULT_BACKGROUND_FITNESS, DEFAULT_EPSILON, DEFAULT_MAX_ROUNDS,
};
use crate::error::{Error, Result};
use crate::game_core::{EconomicParams, PopulationState, RewardScheme, TWO_THIRDS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSection {
    pub scheme: RewardScheme,
    pub model: FitnessModel,
    /// Initial honest share.
    pub x0: f64,
    pub rounds: usize,
    pub epsilon: f64,
    pub background_fitness: f64,
}

impl Default for GameSection {
    fn default() -> Self {
        GameSection {
            scheme: RewardScheme::Penalty,
            model: FitnessModel::PairwiseMatching,
            x0: 0.667,
            rounds: DEFAULT_MAX_ROUNDS,
            epsilon: DEFAULT_EPSILON,
            background_fitness: DEFAULT_BACKGROUND_FITNESS,
        }
    }
}

/// Token amounts in multiples of `unit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconomySection {
    pub unit: f64,
    pub expense: f64,
    pub saved_expense: f64,
    pub reward: f64,
    pub benefit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_benefit: Option<f64>,
    /// Slash for deviating from the quorum; values <= 0 disable it.
    pub penalty: f64,
    pub quorum: f64,
}

impl Default for EconomySection {
    fn default() -> Self {
        EconomySection {
            unit: 1.0,
            expense: 1.0,
            saved_expense: 1.0,
            reward: 10.0,
            benefit: 100.0,
            max_benefit: None,
            penalty: 100.0,
            quorum: TWO_THIRDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSection {
    pub validators: usize,
    /// Starting stake, in multiples of `unit`.
    pub baseline_stake: f64,
    pub imitation_rate: f64,
    pub mutation_rate: f64,
    pub revision: RevisionRule,
    pub seed: u64,
}

impl Default for AgentSection {
    fn default() -> Self {
        AgentSection {
            validators: 1000,
            baseline_stake: DEFAULT_BASELINE_STAKE,
            imitation_rate: 1.0,
            mutation_rate: 0.0,
            revision: RevisionRule::Proportional,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub game: GameSection,
    pub economy: EconomySection,
    pub agents: AgentSection,
}

/// A summary file only needs its `config` member to be reloadable.
#[derive(Deserialize)]
struct EchoedSummary {
    config: RunConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("malformed config: {e}")))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config always serializes")
    }

    /// Loads a TOML config, or the `config` echoed in a JSON summary.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let config = if path.extension().is_some_and(|ext| ext == "json") {
            serde_json::from_str::<EchoedSummary>(&text)
                .map(|s| s.config)
                .map_err(|e| Error::config(format!("malformed summary {}: {e}", path.display())))?
        } else {
            Self::from_toml_str(&text)?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn economic_params(&self) -> EconomicParams {
        let e = &self.economy;
        let x = e.unit;
        EconomicParams {
            expense: e.expense * x,
            saved_expense: e.saved_expense * x,
            reward: e.reward * x,
            block_reward: 0.0,
            per_tx_fees: Vec::new(),
            byzantine_benefit: e.benefit * x,
            max_byzantine_benefit: e.max_benefit.map(|b| b * x),
            penalty: (e.penalty > 0.0).then_some(e.penalty * x),
            quorum_threshold: e.quorum,
        }
    }

    pub fn initial_state(&self) -> Result<PopulationState> {
        PopulationState::from_honest(self.game.x0)
    }

    pub fn trajectory_options(&self) -> Result<TrajectoryOptions> {
        Ok(TrajectoryOptions {
            max_rounds: self.game.rounds,
            epsilon: self.game.epsilon,
            shift: ShiftPolicy::new(self.game.background_fitness * self.economy.unit)?,
        })
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let a = &self.agents;
        let config = SimConfig {
            n_validators: a.validators,
            initial_honest_fraction: self.game.x0,
            scheme: self.game.scheme,
            params: self.economic_params(),
            baseline_stake: a.baseline_stake * self.economy.unit,
            imitation_rate: a.imitation_rate,
            mutation_rate: a.mutation_rate,
            rounds: self.game.rounds,
            seed: a.seed,
            fitness_model: self.game.model,
            revision: a.revision,
            shift: ShiftPolicy::new(self.game.background_fitness * self.economy.unit)?,
            epsilon: self.game.epsilon,
        };
        Ok(config)
    }

    /// Checks everything a run needs except agent-only settings.
    pub fn validate(&self) -> Result<()> {
        if !(self.economy.unit.is_finite() && self.economy.unit > 0.0) {
            return Err(Error::config(format!("unit must be > 0, got {}", self.economy.unit)));
        }
        self.economic_params().validate()?;
        if self.game.scheme == RewardScheme::Penalty && !(self.economy.penalty > 0.0) {
            return Err(Error::config(format!("penalty scheme requires penalty > 0, got {}", self.economy.penalty)));
        }
        self.initial_state()?;
        if self.game.rounds == 0 {
            return Err(Error::config("rounds must be >= 1"));
        }
        if !(self.game.epsilon > 0.0 && self.game.epsilon < 0.5) {
            return Err(Error::config(format!("epsilon {} outside (0, 0.5)", self.game.epsilon)));
        }
        self.trajectory_options()?;
        Ok(())
    }
}
