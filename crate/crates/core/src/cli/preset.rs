//! Named scenarios for the reference experiments.

use super::config::RunConfig;
use crate::dynamics::FitnessModel;
use crate::error::{Error, Result};
use crate::game_core::RewardScheme;

pub struct ScenarioPreset {
    pub name: &'static str,
    pub description: &'static str,
    pub scheme: RewardScheme,
    pub x0: f64,
    pub penalty: f64,
}

pub const PRESETS: [ScenarioPreset; 7] = [
    ScenarioPreset {
        name: "fig2a",
        description: "universal reward, 90% honest: the malicious minority takes over",
        scheme: RewardScheme::Universal,
        x0: 0.9,
        penalty: 100.0,
    },
    ScenarioPreset {
        name: "fig2b",
        description: "reward for work, 90% honest",
        scheme: RewardScheme::RewardForWork,
        x0: 0.9,
        penalty: 100.0,
    },
    ScenarioPreset {
        name: "fig2c",
        description: "reward for work, two-thirds honest: the malicious third takes over",
        scheme: RewardScheme::RewardForWork,
        x0: 0.667,
        penalty: 100.0,
    },
    ScenarioPreset {
        name: "fig2d",
        description: "penalty at 50% of the baseline stake, two-thirds honest",
        scheme: RewardScheme::Penalty,
        x0: 0.667,
        penalty: 500.0,
    },
    ScenarioPreset {
        name: "fig2e",
        description: "penalty at 100% of the baseline stake, two-thirds honest",
        scheme: RewardScheme::Penalty,
        x0: 0.667,
        penalty: 1000.0,
    },
    ScenarioPreset {
        name: "fig2f",
        description: "penalty, 51% honest: the network turns malicious",
        scheme: RewardScheme::Penalty,
        x0: 0.51,
        penalty: 100.0,
    },
    ScenarioPreset {
        name: "fig3",
        description: "penalty, two-thirds honest: honesty tolerates one-third malicious",
        scheme: RewardScheme::Penalty,
        x0: 0.667,
        penalty: 100.0,
    },
];

impl ScenarioPreset {
    pub fn config(&self) -> RunConfig {
        let mut c = RunConfig::default();
        c.game.scheme = self.scheme;
        c.game.model = FitnessModel::PairwiseMatching;
        c.game.x0 = self.x0;
        c.economy.penalty = self.penalty;
        c
    }
}

pub fn find_preset(name: &str) -> Result<&'static ScenarioPreset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::config(format!("unknown preset `{name}` (known: {})", known.join(", ")))
    })
}
