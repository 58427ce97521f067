//! One block round: votes, quorum, and the stake ledger.

use serde::{Deserialize, Serialize};

use super::ValidatorAccount;
use crate::game_core::{quorum_size, EconomicParams, QuorumOutcome, RewardScheme, Strategy};

/// Ledger movements behind a single matrix payoff.
///
/// `incentive + benefit - expense - slash` equals the matrix cell (or the
/// nil-block cost) for the same strategy and outcome.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PayoffComponents {
    /// Share of the block incentive, `i / N′ = r + e`.
    pub incentive: f64,
    /// Byzantine extraction by a malicious quorum member.
    pub benefit: f64,
    pub expense: f64,
    pub slash: f64,
}

impl PayoffComponents {
    pub fn net(&self) -> f64 {
        self.incentive + self.benefit - self.expense - self.slash
    }
}

pub fn payoff_components(
    scheme: RewardScheme,
    params: &EconomicParams,
    strategy: Strategy,
    outcome: QuorumOutcome,
) -> PayoffComponents {
    let e = params.expense;
    let e_saved = params.saved_expense;
    let share = params.reward + e;
    let p = params.penalty.unwrap_or(0.0);
    let paid = |expense| PayoffComponents { incentive: share, expense, ..Default::default() };
    let cost = |expense| PayoffComponents { expense, ..Default::default() };
    let cartel = PayoffComponents { incentive: share, benefit: params.byzantine_benefit, expense: e, slash: 0.0 };
    let slashed = PayoffComponents { slash: p, ..Default::default() };

    use QuorumOutcome::*;
    use RewardScheme::*;
    use Strategy::*;
    match (outcome, scheme, strategy) {
        (NilBlock, _, Honest) => cost(e),
        (NilBlock, _, Malicious) => cost(e_saved),
        (HonestQuorum, _, Honest) => paid(e),
        (MaliciousQuorum, _, Malicious) => cartel,
        // abstaining keeps e′ of the expense
        (HonestQuorum, Universal, Malicious) => paid(e - e_saved),
        (MaliciousQuorum, Universal, Honest) => paid(e),
        (HonestQuorum, RewardForWork, Malicious) => cost(e_saved),
        (MaliciousQuorum, RewardForWork, Honest) => cost(e),
        (HonestQuorum, Penalty, Malicious) | (MaliciousQuorum, Penalty, Honest) => slashed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub round_index: usize,
    /// Vote of each validator; `None` for inactive (zero-stake) validators.
    pub votes: Vec<Option<Strategy>>,
    pub outcome: QuorumOutcome,
    /// Applied change of each validator's stake.
    pub payoffs: Vec<f64>,
    /// Block incentive `i` offered for the round.
    pub incentive: f64,
    /// Tokens credited from outside the stake ledger: incentive shares and Byzantine extraction.
    pub minted: f64,
    /// Stake burned by slashing.
    pub slashed: f64,
    /// Operating expense actually paid.
    pub expenses: f64,
}

impl RoundResult {
    /// `Σ payoffs - (minted - slashed - expenses)`; zero when the ledger balances.
    pub fn conservation_gap(&self) -> f64 {
        self.payoffs.iter().sum::<f64>() - (self.minted - self.slashed - self.expenses)
    }
}

/// Plays one round: every active validator votes its strategy, the quorum is
/// decided against the full validator count, and stakes are updated.
pub fn run_round(
    validators: &mut [ValidatorAccount],
    scheme: RewardScheme,
    params: &EconomicParams,
    round_index: usize,
) -> RoundResult {
    let n = validators.len();
    let votes: Vec<Option<Strategy>> = validators.iter().map(|v| v.is_active().then_some(v.strategy)).collect();
    let count = |s: Strategy| votes.iter().filter(|v| **v == Some(s)).count();
    let needed = quorum_size(n, params.quorum_threshold);
    let (honest_votes, malicious_votes) = (count(Strategy::Honest), count(Strategy::Malicious));
    let outcome = if needed > 0 && honest_votes >= needed {
        QuorumOutcome::HonestQuorum
    } else if needed > 0 && malicious_votes >= needed {
        QuorumOutcome::MaliciousQuorum
    } else {
        QuorumOutcome::NilBlock
    };
    let share = params.reward + params.expense;
    let incentive = match (scheme, outcome) {
        (_, QuorumOutcome::NilBlock) => 0.0,
        (RewardScheme::Universal, _) => share * n as f64,
        (_, QuorumOutcome::HonestQuorum) => share * honest_votes as f64,
        (_, QuorumOutcome::MaliciousQuorum) => share * malicious_votes as f64,
    };

    let mut payoffs = Vec::with_capacity(n);
    let (mut minted, mut slashed, mut expenses) = (0.0, 0.0, 0.0);
    for (v, vote) in validators.iter_mut().zip(&votes) {
        let Some(strategy) = vote else {
            v.participated_last_round = false;
            payoffs.push(0.0);
            continue;
        };
        let c = payoff_components(scheme, params, *strategy, outcome);
        let credit = c.incentive + c.benefit;
        let mut stake = v.stake + credit;
        let paid = c.expense.min(stake);
        stake -= paid;
        let burned = c.slash.min(stake);
        stake -= burned;
        let payoff = credit - paid - burned;

        v.stake = stake;
        v.cumulative_payoff += payoff;
        v.participated_last_round = outcome.winner() == Some(*strategy);
        minted += credit;
        slashed += burned;
        expenses += paid;
        payoffs.push(payoff);
    }
    RoundResult { round_index, votes, outcome, payoffs, incentive, minted, slashed, expenses }
}
