//! Evolutionary analysis of the proof-of-stake block validation game.
//!
//! * [`game_core`]: strategies, population states, reward matrices and quorum outcomes.
//! * [`dynamics`]: replicator trajectories and their rest points.
//! * [`ess`]: invasion tests and genesis analysis.
//! * [`agent_sim`]: validators with stakes, slashing and imitation.
//! * [`cli`]: scenario presets and CSV/JSON output for the `posgame` binary.

pub mod agent_sim;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod ess;
pub mod game_core;

pub use error::{Error, Result};
