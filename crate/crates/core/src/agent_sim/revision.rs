//! Strategy revision between rounds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::revision_rng;
use super::ValidatorAccount;
use crate::dynamics::ShiftPolicy;
use crate::game_core::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RevisionRule {
    /// A revising validator copies a peer drawn with probability proportional
    /// to the peer's shifted fitness. In expectation this is exactly the
    /// discrete replicator map used by the mean-field dynamics.
    Proportional,
    /// A revising validator compares itself with a uniformly drawn peer and
    /// switches with probability `max(0, peer - own) / Δmax`.
    PairwiseDifference,
}

impl std::str::FromStr for RevisionRule {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "proportional" => Ok(RevisionRule::Proportional),
            "pairwise-difference" | "pairwise" => Ok(RevisionRule::PairwiseDifference),
            other => Err(crate::Error::config(format!("unknown revision rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevisionParams {
    pub rule: RevisionRule,
    /// Probability `μ` that a validator revises at all.
    pub imitation_rate: f64,
    pub mutation_rate: f64,
    pub shift: ShiftPolicy,
    /// Largest payoff gap the scheme can produce; normalizes the pairwise rule.
    pub max_gap: f64,
}

/// Revises every validator's strategy at once from the pre-revision snapshot.
///
/// `fitness[i]` is the payoff validator `i` is judged by. Returns the number
/// of validators whose strategy changed.
pub fn update_strategies(
    validators: &mut [ValidatorAccount],
    fitness: &[f64],
    params: &RevisionParams,
    seed: u64,
    round: usize,
) -> usize {
    assert_eq!(validators.len(), fitness.len(), "one fitness value per validator");
    let n = validators.len();
    if n == 0 {
        return 0;
    }
    let snapshot: Vec<Strategy> = validators.iter().map(|v| v.strategy).collect();

    let cumulative: Vec<f64> = match params.rule {
        RevisionRule::Proportional => {
            let lowest = fitness.iter().copied().fold(f64::INFINITY, f64::min);
            let sigma = params.shift.offset(lowest);
            fitness
                .iter()
                .scan(0.0, |acc, f| {
                    *acc += f + sigma;
                    Some(*acc)
                })
                .collect()
        }
        RevisionRule::PairwiseDifference => Vec::new(),
    };

    let mut changed = 0;
    for (i, v) in validators.iter_mut().enumerate() {
        let mut rng = revision_rng(seed, round as u64, v.id);
        let mut next = snapshot[i];
        if rng.random::<f64>() < params.imitation_rate {
            match params.rule {
                RevisionRule::Proportional => {
                    let total = cumulative[n - 1];
                    let target = rng.random::<f64>() * total;
                    let j = cumulative.partition_point(|&c| c <= target).min(n - 1);
                    next = snapshot[j];
                }
                RevisionRule::PairwiseDifference => {
                    let j = rng.random_range(0..n);
                    let gain = (fitness[j] - fitness[i]).max(0.0);
                    let p = if params.max_gap > 0.0 { (gain / params.max_gap).min(1.0) } else { 0.0 };
                    if rng.random::<f64>() < p {
                        next = snapshot[j];
                    }
                }
            }
        }
        if rng.random::<f64>() < params.mutation_rate {
            next = next.other();
        }
        if next != v.strategy {
            v.strategy = next;
            changed += 1;
        }
    }
    changed
}
