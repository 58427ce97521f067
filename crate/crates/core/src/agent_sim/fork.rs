//! Nothing-at-stake fork: a malicious proposer publishes two conflicting
//! children of the same parent block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game_core::{quorum_size, validate_block, Block, EconomicParams, Transaction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForkReport {
    pub both_forks_finalized: bool,
    pub slashed_count: usize,
    pub rational_count: usize,
    /// Counted votes for the first-seen and the conflicting block.
    pub votes_first: usize,
    pub votes_conflicting: usize,
    pub quorum_size: usize,
    pub slashed_amount: f64,
}

/// Rational validators sign every block they see; honest ones sign only the
/// first child. With penalties, a double signature is evidence: the signer is
/// slashed and its vote for the conflicting block is discarded.
pub fn fork_scenario(
    n_validators: usize,
    rational_fraction: f64,
    penalty_enabled: bool,
    params: &EconomicParams,
) -> Result<ForkReport> {
    if n_validators < 4 {
        return Err(Error::domain(format!("fork scenario needs at least 4 validators, got {n_validators}")));
    }
    if !(0.0..=1.0).contains(&rational_fraction) {
        return Err(Error::domain(format!("rational fraction {rational_fraction} outside [0, 1]")));
    }
    let penalty = if penalty_enabled {
        params.penalty.filter(|p| *p > 0.0).ok_or_else(|| Error::config("penalty scenario requires p > 0"))?
    } else {
        0.0
    };

    // same spend in both children: each is valid on its own
    let spend = Transaction { id: 1, correct: true };
    let first = Block { transactions: vec![spend.clone(), Transaction { id: 2, correct: true }] };
    let conflicting = Block { transactions: vec![spend, Transaction { id: 3, correct: true }] };

    let rational = ((n_validators as f64) * rational_fraction).round() as usize;
    let honest = n_validators - rational;

    let signs_first = if validate_block(&first) { honest + rational } else { 0 };
    let double_signers = if validate_block(&conflicting) { rational } else { 0 };

    let (votes_conflicting, slashed_count) = if penalty_enabled { (0, double_signers) } else { (double_signers, 0) };
    let needed = quorum_size(n_validators, params.quorum_threshold);
    Ok(ForkReport {
        both_forks_finalized: signs_first >= needed && votes_conflicting >= needed,
        slashed_count,
        rational_count: rational,
        votes_first: signs_first,
        votes_conflicting,
        quorum_size: needed,
        slashed_amount: slashed_count as f64 * penalty,
    })
}
