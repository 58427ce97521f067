//! Evolutionarily stable strategy classification by mutant invasion, and
//! the genesis (initial population) analysis of which strategy takes over.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{fitness, interior_fixed_point, interior_is_repelling, FitnessModel};
use crate::error::{Error, Result};
use crate::game_core::{build_reward_matrix, EconomicParams, PopulationState, RewardScheme, Strategy};

/// Largest mutant share an incumbent is tested against.
pub const MAX_MUTANT_FRACTION: f64 = 1.0 / 3.0;

pub const DEFAULT_EPSILON_GRID: [f64; 5] = [0.01, 0.05, 0.10, 0.20, 0.33];

/// Fitness gaps within this band count as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Distance from the interior rest point reported as a boundary start.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvasionSetup {
    pub incumbent: Strategy,
    pub mutant_fraction: f64,
    pub scheme: RewardScheme,
    pub params: EconomicParams,
    pub model: FitnessModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvasionFitness {
    pub incumbent: f64,
    pub mutant: f64,
}

impl InvasionFitness {
    pub fn gap(&self) -> f64 {
        self.incumbent - self.mutant
    }
}

fn check_mutant_fraction(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= MAX_MUTANT_FRACTION {
        Ok(())
    } else {
        Err(Error::domain(format!("mutant fraction {eps} outside (0, 1/3]")))
    }
}

/// Fitness of incumbents and mutants at `(1 - ε)` incumbents, `ε` mutants.
pub fn invasion_fitness(setup: &InvasionSetup) -> Result<InvasionFitness> {
    check_mutant_fraction(setup.mutant_fraction)?;
    let matrix = build_reward_matrix(setup.scheme, &setup.params)?;
    let eps = setup.mutant_fraction;
    let x = match setup.incumbent {
        Strategy::Honest => PopulationState::new(1.0 - eps, eps)?,
        Strategy::Malicious => PopulationState::new(eps, 1.0 - eps)?,
    };
    let f = fitness(&matrix, &x, setup.model, &setup.params);
    Ok(InvasionFitness { incumbent: f.of(setup.incumbent), mutant: f.of(setup.incumbent.other()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EssClass {
    StrictEss,
    MixedOrNeutral,
    NotEss,
}

impl EssClass {
    pub fn name(self) -> &'static str {
        match self {
            EssClass::StrictEss => "StrictESS",
            EssClass::MixedOrNeutral => "MixedOrNeutral",
            EssClass::NotEss => "NotESS",
        }
    }
}

impl fmt::Display for EssClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssVerdict {
    pub classification: EssClass,
    /// Fitnesses at the mutant share that was most favourable to the mutants.
    pub incumbent_fitness: f64,
    pub mutant_fitness: f64,
    /// Smallest incumbent advantage over the grid; its size grades how strong a strict ESS is.
    pub gap: f64,
    pub critical_fraction: f64,
    pub note: String,
}

pub fn classify_ess(
    incumbent: Strategy,
    scheme: RewardScheme,
    params: &EconomicParams,
    model: FitnessModel,
    grid: &[f64],
) -> Result<EssVerdict> {
    if grid.is_empty() {
        return Err(Error::domain("mutant-fraction grid is empty"));
    }
    let mut worst: Option<(f64, InvasionFitness)> = None;
    let mut ties = 0usize;
    for &eps in grid {
        let setup = InvasionSetup { incumbent, mutant_fraction: eps, scheme, params: params.clone(), model };
        let f = invasion_fitness(&setup)?;
        if f.gap().abs() <= TIE_TOLERANCE {
            ties += 1;
        }
        if worst.is_none_or(|(_, w)| f.gap() < w.gap()) {
            worst = Some((eps, f));
        }
    }
    let (eps, f) = worst.expect("grid is non-empty");
    let (classification, note) = if f.gap() < -TIE_TOLERANCE {
        (
            EssClass::NotEss,
            format!("{} mutants out-earn {incumbent} incumbents by {} at ε = {eps}", incumbent.other(), -f.gap()),
        )
    } else if ties > 0 {
        (
            EssClass::MixedOrNeutral,
            format!(
                "{} mutants earn as much as {incumbent} incumbents; drift can shift the population",
                incumbent.other()
            ),
        )
    } else {
        (EssClass::StrictEss, format!("{incumbent} incumbents out-earn mutants by at least {} on the grid", f.gap()))
    };
    Ok(EssVerdict {
        classification,
        incumbent_fitness: f.incumbent,
        mutant_fitness: f.mutant,
        gap: f.gap(),
        critical_fraction: eps,
        note,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GenesisOutcome {
    HonestDominates,
    MaliciousDominates,
    /// Neither strategy takes over: the start sits on the rest point, or the
    /// dynamics settle in the interior.
    Boundary,
}

impl GenesisOutcome {
    pub fn name(self) -> &'static str {
        match self {
            GenesisOutcome::HonestDominates => "HonestDominates",
            GenesisOutcome::MaliciousDominates => "MaliciousDominates",
            GenesisOutcome::Boundary => "Boundary",
        }
    }
}

/// Which strategy the pairwise-matching dynamics drive the network to from `x0`.
pub fn genesis_outcome(x0: &PopulationState, scheme: RewardScheme, params: &EconomicParams) -> Result<GenesisOutcome> {
    let matrix = build_reward_matrix(scheme, params)?;
    if x0.honest() >= 1.0 {
        return Ok(GenesisOutcome::HonestDominates);
    }
    if x0.malicious() >= 1.0 {
        return Ok(GenesisOutcome::MaliciousDominates);
    }
    if let Some(rest) = interior_fixed_point(&matrix) {
        if (x0.honest() - rest).abs() <= BOUNDARY_TOLERANCE || !interior_is_repelling(&matrix) {
            return Ok(GenesisOutcome::Boundary);
        }
        return Ok(if x0.honest() > rest {
            GenesisOutcome::HonestDominates
        } else {
            GenesisOutcome::MaliciousDominates
        });
    }
    // no interior rest point: the advantage keeps one sign on (0, 1)
    let advantage = fitness(&matrix, x0, FitnessModel::PairwiseMatching, params).advantage();
    Ok(if advantage > 0.0 {
        GenesisOutcome::HonestDominates
    } else if advantage < 0.0 {
        GenesisOutcome::MaliciousDominates
    } else {
        GenesisOutcome::Boundary
    })
}
