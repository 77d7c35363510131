//! Full race simulator over a fee-band mempool or a time-fee curve.
//!
//! Each step applies one adversarial action and then samples the next block
//! event. Every tip keeps the mempool left behind when it was mined together
//! with its mining time, so a block mined later on that tip sees exactly the
//! weight that arrived in between. Rewards are credited when blocks enter the
//! canonical chain.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::{MiningConfig, StepInfo};
use crate::error::{domain, Error, Result};
use crate::mempool::{advance_pool, pack_block, FeeBandModel, GrowthFn, PoolState, SAT_PER_BTC};
use crate::rng::{exponential, step_rng, uniform};

/// Source of transaction fees for newly mined blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeeSource {
    /// Fee-band mempool; growth is measured in minutes since the parent block.
    Mempool { model: FeeBandModel },
    /// Fee in BTC as a function of minutes since the parent block.
    TimeFee { curve: GrowthFn },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    PreDam,
    PostDam,
}

/// Step-reward definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub mode: RewardMode,
    /// Average reward distributed per block interval under honest mining.
    pub r_norm: f64,
    /// Constant cost per step.
    pub cost: f64,
    /// Reward per canonical block charged against the adversary.
    pub rho: f64,
}

impl RewardSpec {
    pub fn pre_dam(r_norm: f64, cost: f64) -> Self {
        RewardSpec {
            mode: RewardMode::PreDam,
            r_norm,
            cost,
            rho: 0.0,
        }
    }

    pub fn post_dam(rho: f64) -> Self {
        RewardSpec {
            mode: RewardMode::PostDam,
            r_norm: 1.0,
            cost: 0.0,
            rho,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            RewardMode::PreDam if !(self.r_norm > 0.0) => Err(domain("r_norm must be positive before adjustment")),
            RewardMode::PostDam if !(self.rho >= 0.0) => Err(domain("rho must be non-negative")),
            _ => Ok(()),
        }
    }
}

/// `R_A / R_norm - cost`.
pub fn reward_predam(info: &StepInfo, spec: &RewardSpec) -> Result<f64> {
    if spec.mode != RewardMode::PreDam {
        return Err(Error::ModeMismatch { expected: "pre_dam" });
    }
    Ok(info.reward_adv / spec.r_norm - spec.cost)
}

/// `R_A - rho (N_A + N_H)`.
pub fn reward_postdam(info: &StepInfo, spec: &RewardSpec) -> Result<f64> {
    if spec.mode != RewardMode::PostDam {
        return Err(Error::ModeMismatch { expected: "post_dam" });
    }
    Ok(info.reward_adv - spec.rho * info.canonical_blocks as f64)
}

/// Average block interval after a difficulty adjustment: the honest
/// interval scaled by the canonical share of mined blocks.
pub fn update_tb(history: &[StepInfo], t_ideal: f64) -> Result<f64> {
    let canon: u64 = history.iter().map(|s| s.canonical_blocks as u64).sum();
    let total: u64 = history.iter().map(|s| s.total_blocks as u64).sum();
    if total == 0 {
        return Err(domain("no mined blocks in history"));
    }
    Ok(canon as f64 / total as f64 * t_ideal)
}

/// Environment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub mining: MiningConfig,
    pub fees: FeeSource,
    pub reward: RewardSpec,
    /// Deepest `adopt_i` offered.
    #[serde(default = "default_k1")]
    pub k1: usize,
    /// Fee (BTC) an undercutting block leaves below its target. Defaults to
    /// one base-band vByte.
    #[serde(default)]
    pub undercut_margin: Option<f64>,
}

fn default_k1() -> usize {
    3
}

impl EnvConfig {
    pub fn new(mining: MiningConfig, fees: FeeSource, reward: RewardSpec) -> Self {
        EnvConfig {
            mining,
            fees,
            reward,
            k1: 3,
            undercut_margin: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mining.validate()?;
        self.reward.validate()?;
        if self.mining.max_fork_len < 2 {
            return Err(domain("max_fork_len must be at least 2"));
        }
        if let FeeSource::Mempool { model } = &self.fees {
            model.validate(120.0)?;
        }
        if let Some(m) = self.undercut_margin {
            if !(m >= 0.0) {
                return Err(domain("undercut margin must be non-negative"));
            }
        }
        Ok(())
    }

    /// Honest block interval in minutes.
    pub fn t_ideal(&self) -> f64 {
        1.0 / self.mining.lambda_rate
    }

    fn margin(&self) -> f64 {
        self.undercut_margin.unwrap_or(match &self.fees {
            FeeSource::Mempool { model } => model.base_fee() / SAT_PER_BTC,
            FeeSource::TimeFee { .. } => 1e-8,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Override,
    Match,
    Wait,
    Adopt,
    UndercutBlock,
    UndercutFork,
}

/// Adversarial action. `depth` is the `i` of `adopt_i`; `duration` (minutes)
/// bounds an undercut attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvAction {
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl EnvAction {
    pub const OVERRIDE: Self = Self::plain(ActionKind::Override);
    pub const MATCH: Self = Self::plain(ActionKind::Match);
    pub const WAIT: Self = Self::plain(ActionKind::Wait);

    const fn plain(kind: ActionKind) -> Self {
        EnvAction {
            kind,
            depth: 0,
            duration: None,
        }
    }

    pub const fn adopt(depth: usize) -> Self {
        EnvAction {
            kind: ActionKind::Adopt,
            depth,
            duration: None,
        }
    }

    pub const fn undercut_block(duration: f64) -> Self {
        EnvAction {
            kind: ActionKind::UndercutBlock,
            depth: 0,
            duration: Some(duration),
        }
    }

    pub const fn undercut_fork(duration: f64) -> Self {
        EnvAction {
            kind: ActionKind::UndercutFork,
            depth: 0,
            duration: Some(duration),
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            ActionKind::Override => "override".into(),
            ActionKind::Match => "match".into(),
            ActionKind::Wait => "wait".into(),
            ActionKind::Adopt => format!("adopt_{}", self.depth),
            ActionKind::UndercutBlock => "undercut_block".into(),
            ActionKind::UndercutFork => "undercut_fork".into(),
        }
    }
}

/// Pending undercut attempt: fee cap for the adversary's next block and the
/// time at which the attempt is abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UndercutPlan {
    pub fee_cap: f64,
    pub deadline: f64,
}

/// Race state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub l_a: usize,
    pub l_h: usize,
    /// Whether the latest mined block is honest.
    pub latest_honest: bool,
    pub match_active: bool,
    /// The block mined after an undercut action was adversarial.
    pub undercut: bool,
    /// Block rewards (BTC) of the adversarial fork, padded with zeros.
    pub br_a: Vec<f64>,
    /// Block rewards (BTC) of the honest fork, padded with zeros.
    pub br_h: Vec<f64>,
    /// Mempool after each adversarial block, as of its mining time.
    pub pool_a: Vec<PoolState>,
    pub pool_h: Vec<PoolState>,
    pub pool_c: PoolState,
    /// Mining times of the fork blocks and of the canonical tip.
    pub time_a: Vec<f64>,
    pub time_h: Vec<f64>,
    pub time_c: f64,
    pub clock: f64,
    pub plan: Option<UndercutPlan>,
    pub step: u64,
}

/// Power split on the next block during a same-height race.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchSplit {
    pub adversary: f64,
    pub honest_on_adversarial: f64,
    pub honest_on_honest: f64,
}

/// Block counts kept for conservation checks and fee averages.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnvStats {
    pub mined_adv: u64,
    pub mined_honest: u64,
    pub canonical_adv: u64,
    pub canonical_honest: u64,
    pub orphaned: u64,
    pub reward_canonical_adv: f64,
    pub reward_canonical_honest: f64,
}

/// Result of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub info: StepInfo,
    pub reward: f64,
    /// Block rewards of every block canonicalised in this step.
    pub canonical_reward: f64,
    /// Whether the block mined in this step is adversarial.
    pub adversarial_block: bool,
}

/// Race outcome of `state`: who mines the next block and on which fork.
pub fn resolve_match(state: &EnvState, cfg: &MiningConfig) -> MatchSplit {
    let alpha = cfg.alpha;
    let n = state.l_h.min(state.l_a);
    let fee_adv: f64 = state.br_a[..n].iter().sum();
    let fee_hon: f64 = state.br_h[..state.l_h].iter().sum();
    let deficit = fee_hon - fee_adv;
    let petty_to_adv = deficit > 0.0 && deficit >= cfg.delta_btc;
    let share = cfg.gamma * (1.0 - cfg.petty_ratio) + if petty_to_adv { cfg.petty_ratio } else { 0.0 };
    MatchSplit {
        adversary: alpha,
        honest_on_adversarial: (1.0 - alpha) * share,
        honest_on_honest: (1.0 - alpha) * (1.0 - share),
    }
}

/// Simulated environment session.
#[derive(Debug, Clone)]
pub struct Env {
    pub config: EnvConfig,
    pub state: EnvState,
    pub stats: EnvStats,
    seed: u64,
    tb: f64,
}

impl Env {
    /// Empty race with the mempool at its reference time.
    pub fn reset(config: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let k = config.mining.max_fork_len;
        let pool_c = match &config.fees {
            FeeSource::Mempool { model } => model.initial_pool(),
            FeeSource::TimeFee { .. } => PoolState {
                weights: Vec::new(),
                clock: 0.0,
            },
        };
        let state = EnvState {
            l_a: 0,
            l_h: 0,
            latest_honest: true,
            match_active: false,
            undercut: false,
            br_a: vec![0.0; k],
            br_h: vec![0.0; k],
            pool_a: Vec::new(),
            pool_h: Vec::new(),
            pool_c,
            time_a: Vec::new(),
            time_h: Vec::new(),
            time_c: 0.0,
            clock: 0.0,
            plan: None,
            step: 0,
        };
        let tb = config.t_ideal();
        Ok(Env {
            config,
            state,
            stats: EnvStats::default(),
            seed,
            tb,
        })
    }

    /// Current mean block interval used for sampling (minutes).
    pub fn block_time(&self) -> f64 {
        match self.config.reward.mode {
            RewardMode::PreDam => self.config.t_ideal(),
            RewardMode::PostDam => self.tb,
        }
    }

    /// Sets the post-adjustment block interval.
    pub fn set_block_time(&mut self, tb: f64) -> Result<()> {
        if !(tb > 0.0) {
            return Err(domain(format!("block time must be positive, got {tb}")));
        }
        self.tb = tb;
        Ok(())
    }

    pub fn set_rho(&mut self, rho: f64) -> Result<()> {
        if !(rho >= 0.0) {
            return Err(domain(format!("rho must be non-negative, got {rho}")));
        }
        self.config.reward.rho = rho;
        Ok(())
    }

    pub fn legal_actions(&self) -> Vec<EnvAction> {
        legal_actions(&self.state, &self.config)
    }

    /// Applies `action`, samples the next block and returns what was
    /// credited. An illegal action leaves the state untouched.
    pub fn step(&mut self, action: EnvAction) -> Result<Transition> {
        if !is_legal(&self.state, &self.config, &action) {
            return Err(Error::IllegalAction(format!(
                "{} in ({}, {})",
                action.name(),
                self.state.l_a,
                self.state.l_h
            )));
        }
        if let Some(d) = action.duration {
            if !(d >= 0.0) {
                return Err(Error::IllegalAction(format!(
                    "undercut duration must be non-negative, got {d}"
                )));
            }
        }
        let mut rng = step_rng(self.seed, self.state.step);
        self.state.step += 1;
        let mut acc = Credit::default();
        self.apply_action(&action, &mut acc);

        let start = self.state.clock;
        let dt = exponential(&mut rng, 1.0 / self.block_time());
        if let Some(plan) = self.state.plan {
            if start + dt >= plan.deadline {
                // The attempt expires first: mine on the honest tip instead.
                let n = self.state.l_h;
                self.canonize_honest(n, &mut acc);
                self.state.plan = None;
            }
        }
        self.state.clock = start + dt;

        let u = uniform(&mut rng);
        let adversarial = if self.state.match_active {
            let split = resolve_match(&self.state, &self.config.mining);
            if u < split.adversary {
                self.mine_adversarial()?;
                true
            } else if u < split.adversary + split.honest_on_adversarial {
                let n = self.state.l_h;
                self.canonize_adv(n, &mut acc);
                self.state.match_active = false;
                self.mine_honest()?;
                false
            } else {
                self.state.match_active = false;
                self.mine_honest()?;
                false
            }
        } else if u < self.config.mining.alpha {
            self.mine_adversarial()?;
            true
        } else {
            self.mine_honest()?;
            false
        };
        if adversarial {
            self.stats.mined_adv += 1;
        } else {
            self.stats.mined_honest += 1;
        }

        let info = StepInfo {
            reward_adv: acc.reward_adv,
            canonical_blocks: acc.canonical,
            total_blocks: 1,
            elapsed: dt,
        };
        let reward = match self.config.reward.mode {
            RewardMode::PreDam => reward_predam(&info, &self.config.reward)?,
            RewardMode::PostDam => reward_postdam(&info, &self.config.reward)?,
        };
        Ok(Transition {
            info,
            reward,
            canonical_reward: acc.reward_adv + acc.reward_honest,
            adversarial_block: adversarial,
        })
    }
}

#[derive(Default)]
struct Credit {
    reward_adv: f64,
    reward_honest: f64,
    canonical: u32,
}

impl Env {
    fn apply_action(&mut self, action: &EnvAction, acc: &mut Credit) {
        let s = &mut self.state;
        match action.kind {
            ActionKind::Override => {
                let n = s.l_h + 1;
                self.canonize_adv(n, acc);
                self.state.match_active = false;
                self.state.undercut = false;
                self.state.plan = None;
            }
            ActionKind::Adopt => {
                let n = s.l_h - action.depth;
                self.canonize_honest(n, acc);
                self.state.match_active = false;
                self.state.undercut = false;
                self.state.plan = None;
            }
            ActionKind::Match => {
                s.match_active = true;
                s.undercut = false;
                s.plan = None;
            }
            ActionKind::Wait => {}
            ActionKind::UndercutBlock => {
                let n = s.l_h - 1;
                self.canonize_honest(n, acc);
                let r = self.config.mining.protocol_reward;
                let target = self.state.br_h[0] - r;
                self.set_plan(target, action.duration.unwrap_or(0.0));
            }
            ActionKind::UndercutFork => {
                let r = self.config.mining.protocol_reward;
                let fee_h: f64 = s.br_h[..s.l_h].iter().map(|b| b - r).sum();
                let fee_a: f64 = s.br_a[..s.l_a].iter().map(|b| b - r).sum();
                self.set_plan(fee_h - fee_a, action.duration.unwrap_or(0.0));
            }
        }
    }

    fn set_plan(&mut self, target_fee: f64, duration: f64) {
        let s = &mut self.state;
        s.match_active = false;
        s.undercut = false;
        s.plan = Some(UndercutPlan {
            fee_cap: (target_fee - self.config.margin()).max(0.0),
            deadline: s.clock + duration,
        });
    }

    /// The first `n` adversarial blocks become canonical; the honest fork
    /// is orphaned.
    fn canonize_adv(&mut self, n: usize, acc: &mut Credit) {
        let s = &mut self.state;
        if n == 0 {
            return;
        }
        let reward: f64 = s.br_a[..n].iter().sum();
        acc.reward_adv += reward;
        acc.canonical += n as u32;
        self.stats.canonical_adv += n as u64;
        self.stats.reward_canonical_adv += reward;
        self.stats.orphaned += s.l_h as u64;
        s.pool_c = s.pool_a[n - 1].clone();
        s.time_c = s.time_a[n - 1];
        s.pool_a.drain(..n);
        s.time_a.drain(..n);
        s.br_a.drain(..n);
        s.br_a.resize(self.config.mining.max_fork_len, 0.0);
        s.l_a -= n;
        s.l_h = 0;
        s.pool_h.clear();
        s.time_h.clear();
        s.br_h.iter_mut().for_each(|b| *b = 0.0);
    }

    /// The first `n` honest blocks become canonical; the adversarial fork
    /// is orphaned.
    fn canonize_honest(&mut self, n: usize, acc: &mut Credit) {
        let s = &mut self.state;
        self.stats.orphaned += s.l_a as u64;
        s.l_a = 0;
        s.pool_a.clear();
        s.time_a.clear();
        s.br_a.iter_mut().for_each(|b| *b = 0.0);
        if n == 0 {
            return;
        }
        let reward: f64 = s.br_h[..n].iter().sum();
        acc.reward_honest += reward;
        acc.canonical += n as u32;
        self.stats.canonical_honest += n as u64;
        self.stats.reward_canonical_honest += reward;
        s.pool_c = s.pool_h[n - 1].clone();
        s.time_c = s.time_h[n - 1];
        s.pool_h.drain(..n);
        s.time_h.drain(..n);
        s.br_h.drain(..n);
        s.br_h.resize(self.config.mining.max_fork_len, 0.0);
        s.l_h -= n;
    }

    /// Fee and post-block mempool of a block mined now on a tip.
    fn mine_on(&self, pool: &PoolState, mined_at: f64, cap: Option<f64>) -> Result<(f64, PoolState)> {
        let age = (self.state.clock - mined_at).max(0.0);
        match &self.config.fees {
            FeeSource::Mempool { model } => {
                let fresh = PoolState {
                    weights: pool.weights.clone(),
                    clock: 0.0,
                };
                let grown = advance_pool(&fresh, model, age);
                let (block, mut after) = pack_block(&grown, model, cap)?;
                after.clock = 0.0;
                Ok((block.fee, after))
            }
            FeeSource::TimeFee { curve } => {
                let fee = curve.eval(age).max(0.0);
                let fee = cap.map_or(fee, |c| fee.min(c));
                Ok((fee, pool.clone()))
            }
        }
    }

    fn mine_adversarial(&mut self) -> Result<()> {
        let s = &self.state;
        let (pool, at) = if s.l_a == 0 {
            (&s.pool_c, s.time_c)
        } else {
            (&s.pool_a[s.l_a - 1], s.time_a[s.l_a - 1])
        };
        let cap = s.plan.map(|p| p.fee_cap);
        let (fee, after) = self.mine_on(pool, at, cap)?;
        let r = self.config.mining.protocol_reward;
        let s = &mut self.state;
        s.br_a[s.l_a] = r + fee;
        s.pool_a.push(after);
        s.time_a.push(s.clock);
        s.l_a += 1;
        s.latest_honest = false;
        s.undercut = s.plan.is_some();
        s.plan = None;
        Ok(())
    }

    fn mine_honest(&mut self) -> Result<()> {
        let s = &self.state;
        let (pool, at) = if s.l_h == 0 {
            (&s.pool_c, s.time_c)
        } else {
            (&s.pool_h[s.l_h - 1], s.time_h[s.l_h - 1])
        };
        let (fee, after) = self.mine_on(pool, at, None)?;
        let r = self.config.mining.protocol_reward;
        let s = &mut self.state;
        s.br_h[s.l_h] = r + fee;
        s.pool_h.push(after);
        s.time_h.push(s.clock);
        s.l_h += 1;
        s.latest_honest = true;
        s.undercut = false;
        s.plan = None;
        Ok(())
    }
}

fn is_legal(s: &EnvState, cfg: &EnvConfig, a: &EnvAction) -> bool {
    let k = cfg.mining.max_fork_len;
    let below_cap = s.l_a < k && s.l_h < k;
    match a.kind {
        ActionKind::Override => s.l_a > s.l_h,
        ActionKind::Adopt => a.depth <= s.l_h && a.depth <= cfg.k1 && a.duration.is_none(),
        ActionKind::Match => below_cap && s.l_h >= 1 && s.l_a >= s.l_h && (s.latest_honest || s.undercut),
        ActionKind::Wait => below_cap,
        ActionKind::UndercutBlock => s.l_h >= 1 && a.duration.is_some(),
        ActionKind::UndercutFork => below_cap && s.l_h >= 1 && s.l_a + 1 == s.l_h && a.duration.is_some(),
    }
}

/// Legal actions in `s`; undercut kinds carry a zero placeholder duration.
pub fn legal_actions(s: &EnvState, cfg: &EnvConfig) -> Vec<EnvAction> {
    let mut candidates = vec![EnvAction::OVERRIDE, EnvAction::MATCH, EnvAction::WAIT];
    candidates.extend((0..=cfg.k1).map(EnvAction::adopt));
    candidates.push(EnvAction::undercut_block(0.0));
    candidates.push(EnvAction::undercut_fork(0.0));
    candidates.into_iter().filter(|a| is_legal(s, cfg, a)).collect()
}

/// Publish every block immediately and mine on the longest chain.
pub fn honest_agent(s: &EnvState) -> EnvAction {
    if s.l_a > s.l_h {
        EnvAction::OVERRIDE
    } else if s.l_h > 0 {
        EnvAction::adopt(0)
    } else {
        EnvAction::WAIT
    }
}

/// Single-block undercutting with a fixed attempt duration: publish own
/// blocks on the longest chain, undercut every honest tip for `duration`
/// minutes and publish a successful undercutting block at once.
pub fn undercut_agent(s: &EnvState, duration: f64) -> EnvAction {
    if s.l_a > s.l_h {
        EnvAction::OVERRIDE
    } else if s.undercut && s.l_a == s.l_h && s.l_h >= 1 {
        EnvAction::MATCH
    } else if s.match_active {
        EnvAction::WAIT
    } else if s.l_h >= 1 {
        if duration > 0.0 {
            EnvAction::undercut_block(duration)
        } else {
            EnvAction::adopt(0)
        }
    } else {
        EnvAction::WAIT
    }
}

/// Keeps a private lead of at most one block and races on a tie.
pub fn lead_one_selfish_agent(s: &EnvState) -> EnvAction {
    if s.match_active {
        return if s.l_a > s.l_h {
            EnvAction::OVERRIDE
        } else {
            EnvAction::WAIT
        };
    }
    if s.l_a > s.l_h {
        if s.l_h == 0 && s.l_a == 1 {
            EnvAction::WAIT
        } else {
            EnvAction::OVERRIDE
        }
    } else if s.l_a == s.l_h && s.l_h >= 1 && s.latest_honest {
        EnvAction::MATCH
    } else if s.l_a < s.l_h {
        EnvAction::adopt(0)
    } else {
        EnvAction::WAIT
    }
}
