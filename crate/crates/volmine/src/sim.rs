//! Batch runs of baseline agents and table policies in the simulator.

use serde::{Deserialize, Serialize};
use volmine_core::sim_env::{honest_agent, Env, EnvAction, EnvConfig, EnvState, EnvStats};
use volmine_core::stats::BatchRatio;

/// Policy as an ordered rule list over the race state. The first matching
/// rule picks the action; unmatched states play honestly.
///
/// ```json
/// {"rules": [
///   {"l_a": 1, "l_h": 0, "action": {"kind": "wait"}},
///   {"l_a": 1, "l_h": 1, "latest_honest": true, "action": {"kind": "match"}}
/// ]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub l_a: usize,
    pub l_h: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_active: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latest_honest: Option<bool>,
    pub action: EnvAction,
}

impl Rule {
    fn matches(&self, s: &EnvState) -> bool {
        self.l_a == s.l_a
            && self.l_h == s.l_h
            && self.match_active.is_none_or(|m| m == s.match_active)
            && self.latest_honest.is_none_or(|h| h == s.latest_honest)
    }
}

impl PolicyTable {
    pub fn action(&self, s: &EnvState) -> EnvAction {
        self.rules
            .iter()
            .find(|r| r.matches(s))
            .map_or_else(|| honest_agent(s), |r| r.action)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Summary of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub agent: String,
    pub steps: u64,
    pub seed: u64,
    pub minutes: f64,
    pub stats: EnvStats,
    /// Adversary share of all mined blocks.
    pub adversary_mined_share: f64,
    /// Adversary share of canonical blocks.
    pub adversary_canonical_share: f64,
    /// Adversary reward per simulated minute.
    pub reward_per_minute: Estimate,
    /// Adversary reward per canonical block.
    pub reward_per_canonical_block: Estimate,
    /// Mean step reward under the configured objective.
    pub mean_step_reward: f64,
}

pub fn run<A>(
    config: &EnvConfig,
    seed: u64,
    steps: u64,
    batch: u64,
    name: &str,
    mut agent: A,
) -> anyhow::Result<SimReport>
where
    A: FnMut(&EnvState) -> EnvAction,
{
    anyhow::ensure!(steps > 0, "steps must be positive");
    let mut env = Env::reset(config.clone(), seed)?;
    let batch = batch.clamp(1, steps);
    let mut per_minute = BatchRatio::new(batch);
    let mut per_block = BatchRatio::new(batch);
    let mut reward_sum = 0.0;
    let mut minutes = 0.0;
    for _ in 0..steps {
        let action = agent(&env.state);
        let t = env.step(action)?;
        per_minute.push(t.info.reward_adv, t.info.elapsed);
        per_block.push(t.info.reward_adv, t.info.canonical_blocks as f64);
        reward_sum += t.reward;
        minutes += t.info.elapsed;
    }
    let s = env.stats;
    let mined = (s.mined_adv + s.mined_honest) as f64;
    let canonical = (s.canonical_adv + s.canonical_honest) as f64;
    let share = |x: u64, total: f64| if total > 0.0 { x as f64 / total } else { 0.0 };
    Ok(SimReport {
        agent: name.to_string(),
        steps,
        seed,
        minutes,
        stats: s,
        adversary_mined_share: share(s.mined_adv, mined),
        adversary_canonical_share: share(s.canonical_adv, canonical),
        reward_per_minute: Estimate {
            mean: per_minute.ratio(),
            std_error: per_minute.std_error(),
        },
        reward_per_canonical_block: Estimate {
            mean: per_block.ratio(),
            std_error: per_block.std_error(),
        },
        mean_step_reward: reward_sum / steps as f64,
    })
}
