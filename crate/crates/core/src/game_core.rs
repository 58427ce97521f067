//! Domain objects of the block validation game.
//!
//! Validators pick a pure strategy per block, the population state decides
//! which quorum (if any) forms, and one of three reward schemes turns the
//! (strategy, quorum) pair into a payoff. All values here are immutable once
//! built and every operation is a pure function.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `x_h + x_m = 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// BFT quorum fraction.
pub const TWO_THIRDS: f64 = 2.0 / 3.0;

/// The rounded threshold `x >= 0.67` used for figure reproduction.
pub const PRESET_THRESHOLD_067: f64 = 0.67;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    Honest,
    Malicious,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Honest, Strategy::Malicious];

    pub fn other(self) -> Strategy {
        match self {
            Strategy::Honest => Strategy::Malicious,
            Strategy::Malicious => Strategy::Honest,
        }
    }

    fn index(self) -> usize {
        match self {
            Strategy::Honest => 0,
            Strategy::Malicious => 1,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Honest => write!(f, "honest"),
            Strategy::Malicious => write!(f, "malicious"),
        }
    }
}

/// Distribution of strategies over the validator set for one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    honest: f64,
    malicious: f64,
}

impl PopulationState {
    pub fn new(honest: f64, malicious: f64) -> Result<Self> {
        if !(honest.is_finite() && malicious.is_finite()) || honest < 0.0 || malicious < 0.0 {
            return Err(Error::domain(format!(
                "population shares must be finite and non-negative, got ({honest}, {malicious})"
            )));
        }
        if (honest + malicious - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::domain(format!("population shares must sum to 1, got {honest} + {malicious}")));
        }
        Ok(PopulationState { honest, malicious })
    }

    /// State with honest share `x` and malicious share `1 - x`.
    pub fn from_honest(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(format!("honest share {x} outside [0, 1]")));
        }
        PopulationState::new(x, 1.0 - x)
    }

    pub fn all_honest() -> Self {
        PopulationState { honest: 1.0, malicious: 0.0 }
    }

    pub fn all_malicious() -> Self {
        PopulationState { honest: 0.0, malicious: 1.0 }
    }

    pub fn honest(&self) -> f64 {
        self.honest
    }

    pub fn malicious(&self) -> f64 {
        self.malicious
    }

    pub fn share(&self, s: Strategy) -> f64 {
        match s {
            Strategy::Honest => self.honest,
            Strategy::Malicious => self.malicious,
        }
    }

    /// Strategies relabelled: honest share becomes malicious share.
    pub fn mirrored(&self) -> Self {
        PopulationState { honest: self.malicious, malicious: self.honest }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardScheme {
    /// Every validator is paid, whether or not it worked.
    Universal,
    /// Only quorum members are paid.
    RewardForWork,
    /// Quorum members are paid, deviators are slashed.
    Penalty,
}

impl RewardScheme {
    pub const ALL: [RewardScheme; 3] = [RewardScheme::Universal, RewardScheme::RewardForWork, RewardScheme::Penalty];

    pub fn name(self) -> &'static str {
        match self {
            RewardScheme::Universal => "universal",
            RewardScheme::RewardForWork => "reward-for-work",
            RewardScheme::Penalty => "penalty",
        }
    }
}

impl fmt::Display for RewardScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RewardScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "universal" | "universal-reward" => Ok(RewardScheme::Universal),
            "reward-for-work" | "rfw" | "work" => Ok(RewardScheme::RewardForWork),
            "penalty" => Ok(RewardScheme::Penalty),
            other => Err(Error::config(format!("unknown reward scheme `{other}`"))),
        }
    }
}

/// The scalar economy of the game, in token units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomicParams {
    /// Operating expense `e` of a participating validator.
    pub expense: f64,
    /// Expense `e′` saved (universal) or spent (reward-for-work) by a malicious validator.
    pub saved_expense: f64,
    /// Effective per-validator reward `r` in a homogeneous quorum.
    pub reward: f64,
    /// Block reward `R` minted with each block.
    pub block_reward: f64,
    pub per_tx_fees: Vec<f64>,
    /// Benefit `b` a malicious validator extracts from a malicious quorum.
    pub byzantine_benefit: f64,
    /// Upper bound `B` on the Byzantine benefit; unbounded when absent.
    pub max_byzantine_benefit: Option<f64>,
    /// Slash `p` for deviating from the quorum. Required by the penalty scheme.
    pub penalty: Option<f64>,
    pub quorum_threshold: f64,
}

impl Default for EconomicParams {
    fn default() -> Self {
        EconomicParams::scaled(1.0)
    }
}

impl EconomicParams {
    /// Defaults of the reference experiments expressed in multiples of `unit`:
    /// `e = x`, `e′ = e`, `r = 10x`, `b = 100x`, `p = 100x`, `q = 2/3`.
    pub fn scaled(unit: f64) -> Self {
        EconomicParams {
            expense: unit,
            saved_expense: unit,
            reward: 10.0 * unit,
            block_reward: 0.0,
            per_tx_fees: Vec::new(),
            byzantine_benefit: 100.0 * unit,
            max_byzantine_benefit: None,
            penalty: Some(100.0 * unit),
            quorum_threshold: TWO_THIRDS,
        }
    }

    pub fn with_penalty(mut self, p: f64) -> Self {
        self.penalty = Some(p);
        self
    }

    pub fn with_saved_expense(mut self, e_saved: f64) -> Self {
        self.saved_expense = e_saved;
        self
    }

    pub fn with_quorum_threshold(mut self, q: f64) -> Self {
        self.quorum_threshold = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.expense, self.saved_expense, self.reward, self.block_reward, self.byzantine_benefit];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("economic parameters must be finite"));
        }
        if self.expense < 0.0 {
            return Err(Error::config(format!("expense must be >= 0, got {}", self.expense)));
        }
        if !(0.0..=self.expense).contains(&self.saved_expense) {
            return Err(Error::config(format!(
                "saved expense must lie in [0, e] = [0, {}], got {}",
                self.expense, self.saved_expense
            )));
        }
        if self.block_reward < 0.0 {
            return Err(Error::config("block reward must be >= 0"));
        }
        if self.per_tx_fees.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::config("transaction fees must be finite and >= 0"));
        }
        if self.byzantine_benefit < 0.0 {
            return Err(Error::config("byzantine benefit must be >= 0"));
        }
        if let Some(bound) = self.max_byzantine_benefit {
            if self.byzantine_benefit > bound {
                return Err(Error::config(format!(
                    "byzantine benefit {} exceeds its bound {bound}",
                    self.byzantine_benefit
                )));
            }
        }
        if let Some(p) = self.penalty {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::config(format!("penalty must be > 0, got {p}")));
            }
        }
        // 2/3 as an f64 rounds below the real 2/3, so compare against the constant.
        if !(self.quorum_threshold >= TWO_THIRDS && self.quorum_threshold <= 1.0) {
            return Err(Error::config(format!("quorum threshold must lie in [2/3, 1], got {}", self.quorum_threshold)));
        }
        Ok(())
    }

    fn penalty_for(&self, scheme: RewardScheme) -> Result<f64> {
        match self.penalty {
            Some(p) if p > 0.0 => Ok(p),
            Some(p) => Err(Error::config(format!("{scheme} scheme requires p > 0, got {p}"))),
            None => Err(Error::config(format!("{scheme} scheme requires a penalty p"))),
        }
    }

    /// Incentive of a block built from this economy's fees and block reward.
    pub fn incentive(&self) -> Result<f64> {
        incentive(&self.per_tx_fees, self.block_reward)
    }
}

/// Total incentive of a block: sum of its transaction fees plus the block reward.
pub fn incentive(fees: &[f64], block_reward: f64) -> Result<f64> {
    if block_reward < 0.0 || !block_reward.is_finite() {
        return Err(Error::domain(format!("block reward must be >= 0, got {block_reward}")));
    }
    if let Some(bad) = fees.iter().find(|f| !f.is_finite() || **f < 0.0) {
        return Err(Error::domain(format!("transaction fee must be >= 0, got {bad}")));
    }
    Ok(fees.iter().sum::<f64>() + block_reward)
}

/// Per-validator reward for one block under `scheme`.
///
/// `denominator` is the validator-set size for the universal scheme and the
/// quorum size for the other two.
pub fn effective_reward(
    scheme: RewardScheme,
    params: &EconomicParams,
    incentive: f64,
    in_quorum: bool,
    denominator: usize,
) -> Result<f64> {
    if denominator == 0 {
        return Err(Error::domain("reward denominator must be >= 1"));
    }
    let share = incentive / denominator as f64 - params.expense;
    match scheme {
        RewardScheme::Universal => Ok(share),
        RewardScheme::RewardForWork => Ok(if in_quorum { share } else { 0.0 }),
        RewardScheme::Penalty => {
            let p = params.penalty_for(scheme)?;
            Ok(if in_quorum { share } else { -p })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SecurityVerdict {
    Secure,
    Insecure { reason: String },
}

impl SecurityVerdict {
    pub fn is_secure(&self) -> bool {
        matches!(self, SecurityVerdict::Secure)
    }
}

/// A network is secure only when validating pays at least its cost.
pub fn check_security_condition(effective_reward: f64) -> SecurityVerdict {
    if effective_reward >= 0.0 {
        SecurityVerdict::Secure
    } else {
        SecurityVerdict::Insecure {
            reason: format!(
                "effective reward {effective_reward} is negative: rational validators would abstain from consensus"
            ),
        }
    }
}

/// Payoffs indexed by validator strategy (rows) and quorum strategy (columns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardMatrix {
    cells: [[f64; 2]; 2],
}

impl RewardMatrix {
    /// Rows (honest, malicious), columns (honest quorum, malicious quorum).
    pub fn from_rows(cells: [[f64; 2]; 2]) -> Self {
        RewardMatrix { cells }
    }

    pub fn cells(&self) -> [[f64; 2]; 2] {
        self.cells
    }

    pub fn payoff(&self, validator: Strategy, quorum: Strategy) -> f64 {
        self.cells[validator.index()][quorum.index()]
    }

    /// The same game with the strategy labels exchanged.
    pub fn mirrored(&self) -> Self {
        let [[a, b], [c, d]] = self.cells;
        RewardMatrix { cells: [[d, c], [b, a]] }
    }

    pub fn max_entry(&self) -> f64 {
        self.cells.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.cells.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn build_reward_matrix(scheme: RewardScheme, params: &EconomicParams) -> Result<RewardMatrix> {
    params.validate()?;
    let r = params.reward;
    let b = params.byzantine_benefit;
    let cells = match scheme {
        RewardScheme::Universal => [[r, r], [r + params.saved_expense, r + b]],
        RewardScheme::RewardForWork => [[r, -params.expense], [-params.saved_expense, r + b]],
        RewardScheme::Penalty => {
            let p = params.penalty_for(scheme)?;
            [[r, -p], [-p, r + b]]
        }
    };
    Ok(RewardMatrix { cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuorumOutcome {
    HonestQuorum,
    MaliciousQuorum,
    NilBlock,
}

impl QuorumOutcome {
    /// Strategy of the quorum that finalized the block.
    pub fn winner(self) -> Option<Strategy> {
        match self {
            QuorumOutcome::HonestQuorum => Some(Strategy::Honest),
            QuorumOutcome::MaliciousQuorum => Some(Strategy::Malicious),
            QuorumOutcome::NilBlock => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            QuorumOutcome::HonestQuorum => "HonestQuorum",
            QuorumOutcome::MaliciousQuorum => "MaliciousQuorum",
            QuorumOutcome::NilBlock => "NilBlock",
        }
    }
}

impl fmt::Display for QuorumOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn quorum_outcome(x: &PopulationState, q: f64) -> QuorumOutcome {
    if x.honest() >= q {
        QuorumOutcome::HonestQuorum
    } else if x.malicious() >= q {
        QuorumOutcome::MaliciousQuorum
    } else {
        QuorumOutcome::NilBlock
    }
}

/// Smallest vote count `k` with `k >= q * n`.
pub fn quorum_size(n: usize, q: f64) -> usize {
    // q * n can land a hair above an exact integer.
    let k = (q * n as f64 - 1e-9).ceil();
    (k.max(0.0) as usize).min(n)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: u64,
    pub correct: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub transactions: Vec<Transaction>,
}

impl Block {
    pub fn from_flags(flags: &[bool]) -> Self {
        Block {
            transactions: flags
                .iter()
                .enumerate()
                .map(|(id, &correct)| Transaction { id: id as u64, correct })
                .collect(),
        }
    }
}

/// A block is valid iff every transaction in it is correct. The empty block is valid.
pub fn validate_block(block: &Block) -> bool {
    block.transactions.iter().all(|tx| tx.correct)
}

/// Payoff of one validator for a round with the given outcome.
///
/// A nil block pays nobody; honest validators still spend `e`, malicious ones `e′`.
pub fn round_payoff(matrix: &RewardMatrix, s: Strategy, outcome: QuorumOutcome, params: &EconomicParams) -> f64 {
    match outcome.winner() {
        Some(quorum) => matrix.payoff(s, quorum),
        None => match s {
            Strategy::Honest => -params.expense,
            Strategy::Malicious => -params.saved_expense,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_params() -> EconomicParams {
        EconomicParams::default()
    }

    #[test]
    fn incentive_sums_fees_and_block_reward() {
        assert_eq!(incentive(&[1.0, 2.0, 3.0], 4.0).unwrap(), 10.0);
        assert_eq!(incentive(&[], 0.0).unwrap(), 0.0);
        assert_eq!(incentive(&[0.5, 0.5], 9.0).unwrap(), 10.0);
        assert!(incentive(&[-1.0], 0.0).is_err());
        assert!(incentive(&[], -2.0).is_err());
    }

    #[test]
    fn effective_reward_per_scheme() {
        let params = table_params();
        let r = effective_reward(RewardScheme::RewardForWork, &params, 10.0, true, 5).unwrap();
        assert_eq!(r, 1.0);
        let r = effective_reward(RewardScheme::RewardForWork, &params, 1234.0, false, 5).unwrap();
        assert_eq!(r, 0.0);
        let r = effective_reward(RewardScheme::Penalty, &params, 10.0, false, 5).unwrap();
        assert_eq!(r, -100.0);
        // universal ignores quorum membership
        let a = effective_reward(RewardScheme::Universal, &params, 30.0, false, 10).unwrap();
        assert_eq!(a, 2.0);
    }

    #[test]
    fn effective_reward_errors() {
        let params = table_params();
        assert!(matches!(effective_reward(RewardScheme::Universal, &params, 1.0, true, 0), Err(Error::Domain(_))));
        let mut no_penalty = params.clone();
        no_penalty.penalty = None;
        assert!(matches!(effective_reward(RewardScheme::Penalty, &no_penalty, 1.0, true, 3), Err(Error::Config(_))));
        no_penalty.penalty = Some(0.0);
        assert!(effective_reward(RewardScheme::Penalty, &no_penalty, 1.0, true, 3).is_err());
    }

    #[test]
    fn security_condition_boundary_is_non_strict() {
        assert!(check_security_condition(1.0).is_secure());
        assert!(check_security_condition(0.0).is_secure());
        assert!(!check_security_condition(-0.5).is_secure());
    }

    #[test]
    fn reward_matrices_match_closed_forms() {
        let params = table_params();
        let u = build_reward_matrix(RewardScheme::Universal, &params).unwrap();
        assert_eq!(u.cells(), [[10.0, 10.0], [11.0, 110.0]]);
        let w = build_reward_matrix(RewardScheme::RewardForWork, &params).unwrap();
        assert_eq!(w.cells(), [[10.0, -1.0], [-1.0, 110.0]]);
        let p = build_reward_matrix(RewardScheme::Penalty, &params).unwrap();
        assert_eq!(p.cells(), [[10.0, -100.0], [-100.0, 110.0]]);
    }

    #[test]
    fn penalty_matrix_requires_penalty() {
        let mut params = table_params();
        params.penalty = None;
        assert!(matches!(build_reward_matrix(RewardScheme::Penalty, &params), Err(Error::Config(_))));
        // other schemes do not care
        assert!(build_reward_matrix(RewardScheme::Universal, &params).is_ok());
    }

    #[test]
    fn params_validation() {
        let mut p = table_params();
        p.saved_expense = 2.0;
        assert!(p.validate().is_err());
        let mut p = table_params();
        p.max_byzantine_benefit = Some(50.0);
        assert!(p.validate().is_err());
        let p = table_params().with_quorum_threshold(0.6);
        assert!(p.validate().is_err());
        let p = table_params().with_quorum_threshold(PRESET_THRESHOLD_067);
        assert!(p.validate().is_ok());
        let p = table_params().with_penalty(-3.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn quorum_outcome_examples() {
        let q = PRESET_THRESHOLD_067;
        let s = |h: f64| PopulationState::from_honest(h).unwrap();
        assert_eq!(quorum_outcome(&s(0.70), q), QuorumOutcome::HonestQuorum);
        assert_eq!(quorum_outcome(&s(0.30), q), QuorumOutcome::MaliciousQuorum);
        assert_eq!(quorum_outcome(&s(0.50), q), QuorumOutcome::NilBlock);
        // non-strict at the default threshold
        assert_eq!(quorum_outcome(&s(TWO_THIRDS), TWO_THIRDS), QuorumOutcome::HonestQuorum);
    }

    #[test]
    fn quorum_size_is_exact_on_multiples_of_three() {
        assert_eq!(quorum_size(3, TWO_THIRDS), 2);
        assert_eq!(quorum_size(99, TWO_THIRDS), 66);
        assert_eq!(quorum_size(100, TWO_THIRDS), 67);
        assert_eq!(quorum_size(4, TWO_THIRDS), 3);
        assert_eq!(quorum_size(100, 1.0), 100);
    }

    #[test]
    fn block_validity() {
        assert!(validate_block(&Block::from_flags(&[true; 10])));
        let mut flags = [true; 10];
        flags[6] = false;
        assert!(!validate_block(&Block::from_flags(&flags)));
        assert!(validate_block(&Block::default()));
    }

    #[test]
    fn round_payoff_examples() {
        let params = table_params();
        let m = build_reward_matrix(RewardScheme::Penalty, &params).unwrap();
        assert_eq!(round_payoff(&m, Strategy::Honest, QuorumOutcome::HonestQuorum, &params), 10.0);
        assert_eq!(round_payoff(&m, Strategy::Malicious, QuorumOutcome::HonestQuorum, &params), -100.0);

        let nil = table_params().with_saved_expense(0.0);
        for scheme in RewardScheme::ALL {
            let m = build_reward_matrix(scheme, &nil).unwrap();
            assert_eq!(round_payoff(&m, Strategy::Honest, QuorumOutcome::NilBlock, &nil), -1.0);
            assert_eq!(round_payoff(&m, Strategy::Malicious, QuorumOutcome::NilBlock, &nil), 0.0);
        }
    }

    #[test]
    fn population_state_rejects_off_simplex() {
        assert!(PopulationState::new(0.5, 0.6).is_err());
        assert!(PopulationState::new(-0.1, 1.1).is_err());
        assert!(PopulationState::from_honest(1.2).is_err());
        assert!(PopulationState::new(0.3, 0.7).is_ok());
    }

    #[test]
    fn mirrored_matrix_swaps_labels() {
        let m = RewardMatrix::from_rows([[1.0, 2.0], [3.0, 4.0]]);
        let w = m.mirrored();
        for s in Strategy::ALL {
            for q in Strategy::ALL {
                assert_eq!(w.payoff(s.other(), q.other()), m.payoff(s, q));
            }
        }
    }

    #[test]
    fn scheme_names_parse() {
        for scheme in RewardScheme::ALL {
            assert_eq!(scheme.name().parse::<RewardScheme>().unwrap(), scheme);
        }
        assert!("proof-of-work".parse::<RewardScheme>().is_err());
    }
}
