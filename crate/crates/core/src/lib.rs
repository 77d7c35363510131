//! Mining-strategy analysis under volatile block rewards.
//!
//! The crate is `no_std` (with `alloc`) and contains every algorithm of the
//! toolkit: the shared accounting vocabulary, a generic average-reward MDP
//! solver, the WeRLman whale-transaction environments, closed-form strategy
//! evaluators, the simplified time-fee model, the fee-band mempool and the
//! full race simulator. File formats, the command line and the wire server
//! live in the `volmine` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod closed_form;
pub mod config;
pub mod error;
mod linalg;
pub mod mdp;
pub mod mempool;
pub mod profit;
pub mod rng;
pub mod sim_env;
pub mod simplified;
pub mod stats;
pub mod threshold;
pub mod werlman;

pub use config::{MiningConfig, ProfitReport, StepInfo};
pub use error::{Error, Result};
pub use profit::{percentage_increase, time_averaged_profit};
pub use threshold::{security_threshold, threshold_search, Threshold};
