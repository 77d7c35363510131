use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Attack and network parameters shared by every model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    /// Adversary share of the total mining power.
    pub alpha: f64,
    /// Fraction of altruistic honest power that mines on the adversary's
    /// branch during a same-height race.
    pub gamma: f64,
    /// Fraction of non-adversarial power that is petty-compliant.
    pub petty_ratio: f64,
    /// Minimum fee advantage (BTC) before a petty-compliant miner deviates.
    pub delta_btc: f64,
    /// Protocol block subsidy in BTC.
    pub protocol_reward: f64,
    /// Block arrival rate in blocks per minute.
    pub lambda_rate: f64,
    /// Profit margin a deviation must beat honest mining by.
    pub epsilon: f64,
    /// Maximum fork length before the adversary must publish or adopt.
    pub max_fork_len: usize,
}

impl MiningConfig {
    pub fn new(alpha: f64, gamma: f64) -> Self {
        MiningConfig {
            alpha,
            gamma,
            ..Self::default()
        }
    }

    pub fn honest_share(&self) -> f64 {
        1.0 - self.alpha
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(domain(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        frac("alpha", self.alpha)?;
        frac("gamma", self.gamma)?;
        frac("petty_ratio", self.petty_ratio)?;
        if !(self.delta_btc >= 0.0) {
            return Err(domain(format!(
                "delta_btc must be non-negative, got {}",
                self.delta_btc
            )));
        }
        if !(self.protocol_reward >= 0.0) {
            return Err(domain(format!(
                "protocol_reward must be non-negative, got {}",
                self.protocol_reward
            )));
        }
        if !(self.lambda_rate > 0.0) {
            return Err(domain(format!(
                "lambda_rate must be positive, got {}",
                self.lambda_rate
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(domain(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_fork_len == 0 {
            return Err(domain("max_fork_len must be at least 1"));
        }
        Ok(())
    }
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            alpha: 0.25,
            gamma: 0.5,
            petty_ratio: 0.0,
            delta_btc: 0.0,
            protocol_reward: 0.0,
            lambda_rate: 0.1,
            epsilon: 1e-6,
            max_fork_len: 8,
        }
    }
}

/// Outcome of one environment step as seen by the adversary.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepInfo {
    /// Reward credited to the adversary in this step (BTC or normalized units).
    pub reward_adv: f64,
    /// Blocks that entered the canonical chain in this step (both parties).
    pub canonical_blocks: u32,
    /// Blocks mined in this step, canonical or not.
    pub total_blocks: u32,
    /// Elapsed time attributed to this step.
    pub elapsed: f64,
}

/// Profit of a strategy next to the honest baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfitReport {
    pub profit: f64,
    pub honest_profit: f64,
    pub percentage_increase: f64,
}

impl ProfitReport {
    pub fn new(profit: f64, honest_profit: f64) -> Result<Self> {
        Ok(ProfitReport {
            profit,
            honest_profit,
            percentage_increase: crate::profit::percentage_increase(profit, honest_profit)?,
        })
    }
}
