//! Whale-transaction mining environments and their exact MDP.
//!
//! Blocks carry a normal fee of 1. A whale transaction adds an extra fee `F`
//! to the block that includes it; each block holds at most one whale. After
//! a block raises the maximum chain height, a whale arrives with
//! probability `p` as long as fewer than `max_pool` whales wait in the
//! mempool.
//!
//! In the original variant the new whale enters the mempool and the
//! adversary sees it before deciding (predictive capability). In the
//! non-predictable variant the whale is sampled together with the block that
//! was just mined and is included in that block, so nothing is known in
//! advance.
//!
//! Rewards are credited when blocks become canonical. Whale bookkeeping uses
//! `t_h` (whales in the honest fork), `t_a` (whales in adversarial blocks at
//! heights up to the honest height) and the bit list `l` (whales in
//! adversarial blocks above the honest height, bit `i` for height `h+1+i`).

use alloc::format;
use alloc::vec::Vec;

use hashbrown::HashMap;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{MiningConfig, StepInfo};
use crate::error::{domain, Error, Result};
use crate::mdp::{self, Choice, Mdp, MdpBuilder, Outcome, SolverOptions};
use crate::rng::uniform;
use crate::threshold::{threshold_search, Threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    NonPredictable,
}

/// Fee structure of the environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WerlmanParams {
    /// Extra fee of a whale transaction (normal fee is 1).
    #[serde(rename = "F")]
    pub whale_fee: f64,
    /// Whale arrival probability per new-height block.
    pub p: f64,
    pub variant: Variant,
}

impl WerlmanParams {
    pub fn new(whale_fee: f64, p: f64, variant: Variant) -> Self {
        WerlmanParams { whale_fee, p, variant }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.whale_fee >= 0.0) {
            return Err(domain(format!(
                "whale fee must be non-negative, got {}",
                self.whale_fee
            )));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(domain(format!("whale probability must lie in [0, 1], got {}", self.p)));
        }
        Ok(())
    }

    /// Profit per canonical block of the honest strategy, `alpha (1 + F p)`.
    pub fn honest_profit(&self, alpha: f64) -> f64 {
        alpha * (1.0 + self.whale_fee * self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForkFlag {
    LatestHonest,
    LatestAdversarial,
    MatchActive,
}

/// Decision state of the environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WerlmanState {
    pub a: u8,
    pub h: u8,
    pub fork: ForkFlag,
    pub pool: u8,
    pub t_a: u8,
    pub t_h: u8,
    /// Whale markers of adversarial blocks above the honest height.
    pub l: u16,
}

impl WerlmanState {
    pub const INITIAL: WerlmanState = WerlmanState {
        a: 0,
        h: 0,
        fork: ForkFlag::LatestAdversarial,
        pool: 0,
        t_a: 0,
        t_h: 0,
        l: 0,
    };

    /// Number of adversarial blocks above the honest height.
    pub fn lead(&self) -> u8 {
        self.a.saturating_sub(self.h)
    }

    /// Whale markers as a list, lowest height first.
    pub fn l_markers(&self) -> Vec<u8> {
        (0..self.lead()).map(|i| ((self.l >> i) & 1) as u8).collect()
    }

    fn own_whales(&self) -> u8 {
        self.t_a + self.l.count_ones() as u8
    }

    /// Structural validity under the given caps.
    pub fn is_valid(&self, max_fork_len: usize, max_pool: usize) -> bool {
        let k = max_fork_len as u8;
        let fork_ok = match self.fork {
            ForkFlag::LatestHonest => self.h >= 1,
            ForkFlag::LatestAdversarial => self.a >= 1 || self.h == 0,
            ForkFlag::MatchActive => self.a >= self.h && self.h >= 1,
        };
        fork_ok
            && self.a <= k
            && self.h <= k
            && self.pool as usize <= max_pool
            && self.t_h <= self.h.min(self.pool)
            && self.t_a <= self.a.min(self.h)
            && (self.l >> self.lead()) == 0
            && self.own_whales() <= self.pool
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WerlmanAction {
    Adopt = 0,
    Override = 1,
    Match = 2,
    Wait = 3,
}

impl WerlmanAction {
    pub const ALL: [WerlmanAction; 4] = [
        WerlmanAction::Adopt,
        WerlmanAction::Override,
        WerlmanAction::Match,
        WerlmanAction::Wait,
    ];
    pub const NAMES: [&'static str; 4] = ["adopt", "override", "match", "wait"];

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self as usize]
    }
}

/// Size limits of the enumerated model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub max_pool: usize,
    pub state_budget: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_pool: 2,
            state_budget: 5_000_000,
        }
    }
}

/// Actions available in `s`. At the fork-length cap only adopt and
/// override remain.
pub fn legal_actions(s: &WerlmanState, max_fork_len: usize) -> Vec<WerlmanAction> {
    let k = max_fork_len as u8;
    let below_cap = s.a < k && s.h < k;
    let mut out = Vec::with_capacity(4);
    out.push(WerlmanAction::Adopt);
    if s.a > s.h {
        out.push(WerlmanAction::Override);
    }
    if below_cap && s.fork == ForkFlag::LatestHonest && s.h >= 1 && s.a >= s.h {
        out.push(WerlmanAction::Match);
    }
    if below_cap {
        out.push(WerlmanAction::Wait);
    }
    out
}

/// Situation after the adversary's decision and before the next block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct PostState {
    a: u8,
    h: u8,
    active: bool,
    pool: u8,
    t_a: u8,
    t_h: u8,
    l: u16,
}

impl PostState {
    fn as_state(&self, fork: ForkFlag) -> WerlmanState {
        WerlmanState {
            a: self.a,
            h: self.h,
            fork,
            pool: self.pool,
            t_a: self.t_a,
            t_h: self.t_h,
            l: self.l,
        }
    }
}

/// Resolves the decision: returns the post-decision situation and the
/// reward and canonical blocks it credits.
fn apply_action(s: &WerlmanState, action: WerlmanAction, f: f64) -> (PostState, f64, f64) {
    match action {
        WerlmanAction::Adopt => (
            PostState {
                a: 0,
                h: 0,
                active: false,
                pool: s.pool - s.t_h,
                t_a: 0,
                t_h: 0,
                l: 0,
            },
            0.0,
            s.h as f64,
        ),
        WerlmanAction::Override => {
            let first = (s.l & 1) as u8;
            let whales = s.t_a + first;
            let blocks = s.h as f64 + 1.0;
            (
                PostState {
                    a: s.a - s.h - 1,
                    h: 0,
                    active: false,
                    pool: s.pool - whales,
                    t_a: 0,
                    t_h: 0,
                    l: s.l >> 1,
                },
                blocks + f * whales as f64,
                blocks,
            )
        }
        WerlmanAction::Match | WerlmanAction::Wait => (
            PostState {
                a: s.a,
                h: s.h,
                active: action == WerlmanAction::Match || s.fork == ForkFlag::MatchActive,
                pool: s.pool,
                t_a: s.t_a,
                t_h: s.t_h,
                l: s.l,
            },
            0.0,
            0.0,
        ),
    }
}

/// Original sampling: after a new-height block a whale joins the mempool
/// (if it has room). Returns the state of the whale branch, if any.
pub fn sample_transaction_original_branch(
    state: &WerlmanState,
    new_height: bool,
    max_pool: usize,
) -> Option<WerlmanState> {
    if new_height && (state.pool as usize) < max_pool {
        let mut w = *state;
        w.pool += 1;
        Some(w)
    } else {
        None
    }
}

/// Random form of [`sample_transaction_original_branch`].
pub fn sample_transaction_original<R: Rng + ?Sized>(
    state: &WerlmanState,
    new_height: bool,
    p: f64,
    max_pool: usize,
    rng: &mut R,
) -> WerlmanState {
    match sample_transaction_original_branch(state, new_height, max_pool) {
        Some(w) if uniform(rng) < p => w,
        _ => *state,
    }
}

/// Non-predictable sampling of the transaction included in the block that
/// turned `previous` into `current`. Returns `(with_fee, without_fee)`.
pub fn sample_transaction_nonpredictable(
    current: &WerlmanState,
    previous: &WerlmanState,
    max_pool: usize,
) -> (WerlmanState, WerlmanState) {
    let grew = current.a.max(current.h) > previous.a.max(previous.h);
    if !grew || current.pool as usize >= max_pool {
        return (*current, *current);
    }
    let mut with = *current;
    with.pool += 1;
    if current.h > previous.h {
        if current.t_h == previous.t_h {
            with.t_h += 1;
        }
    } else if current.a <= current.h {
        if current.t_a == previous.t_a {
            with.t_a += 1;
        }
    } else {
        let last = 1u16 << (current.lead() - 1);
        with.l |= last;
    }
    (with, *current)
}

fn push_sampled(
    out: &mut Vec<(f64, WerlmanState, f64, f64)>,
    prob: f64,
    current: WerlmanState,
    previous: WerlmanState,
    params: &WerlmanParams,
    max_pool: usize,
    reward: f64,
    canon: f64,
) {
    let (with, without) = match params.variant {
        Variant::Original => {
            let grew = current.a.max(current.h) > previous.a.max(previous.h);
            match sample_transaction_original_branch(&current, grew, max_pool) {
                Some(w) => (w, current),
                None => (current, current),
            }
        }
        Variant::NonPredictable => sample_transaction_nonpredictable(&current, &previous, max_pool),
    };
    if with == without {
        out.push((prob, without, reward, canon));
    } else {
        if params.p > 0.0 {
            out.push((prob * params.p, with, reward, canon));
        }
        if params.p < 1.0 {
            out.push((prob * (1.0 - params.p), without, reward, canon));
        }
    }
}

/// Honest block on top of the honest fork of `prev`.
fn honest_extends(prev: &WerlmanState) -> WerlmanState {
    let mut s = *prev;
    s.h += 1;
    if s.pool > s.t_h {
        s.t_h += 1;
    }
    if s.h <= s.a {
        s.t_a += (s.l & 1) as u8;
        s.l >>= 1;
    }
    s.fork = ForkFlag::LatestHonest;
    s
}

/// Next-block distribution from a post-decision situation:
/// `(probability, next state, reward, canonical blocks)`.
fn block_event(
    post: &PostState,
    params: &WerlmanParams,
    cfg: &MiningConfig,
    max_pool: usize,
    out: &mut Vec<(f64, WerlmanState, f64, f64)>,
) {
    let alpha = cfg.alpha;
    let f = params.whale_fee;
    let base_fork = if post.active {
        ForkFlag::MatchActive
    } else {
        ForkFlag::LatestAdversarial
    };
    let prev = post.as_state(base_fork);

    if alpha > 0.0 {
        let mut s = prev;
        s.a += 1;
        let has_whale = s.pool > prev.own_whales();
        if s.a <= s.h {
            if has_whale {
                s.t_a += 1;
            }
        } else if has_whale {
            s.l |= 1 << (s.a - s.h - 1);
        }
        push_sampled(out, alpha, s, prev, params, max_pool, 0.0, 0.0);
    }
    if alpha < 1.0 {
        let honest = 1.0 - alpha;
        let gamma = if post.active { cfg.gamma } else { 0.0 };
        if gamma > 0.0 {
            // Honest block on the adversary's published prefix.
            let whales = post.t_a;
            let reward = post.h as f64 + f * whales as f64;
            let rebased = WerlmanState {
                a: post.a - post.h,
                h: 0,
                fork: ForkFlag::LatestHonest,
                pool: post.pool - whales,
                t_a: 0,
                t_h: 0,
                l: post.l,
            };
            let s = honest_extends(&rebased);
            push_sampled(out, gamma * honest, s, rebased, params, max_pool, reward, post.h as f64);
        }
        if gamma < 1.0 {
            let s = honest_extends(&prev);
            push_sampled(out, (1.0 - gamma) * honest, s, prev, params, max_pool, 0.0, 0.0);
        }
    }
}

/// Labelled transition of one decision step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelledOutcome {
    pub prob: f64,
    pub next: WerlmanState,
    pub reward: f64,
    pub canon: f64,
}

/// Full distribution of `(state, action)`: decision rewards plus the next
/// block. Identical successor states are merged.
pub fn transition_outcomes(
    state: &WerlmanState,
    action: WerlmanAction,
    params: &WerlmanParams,
    cfg: &MiningConfig,
    max_pool: usize,
) -> Result<Vec<LabelledOutcome>> {
    if !legal_actions(state, cfg.max_fork_len).contains(&action) {
        return Err(Error::IllegalAction(format!("{} in {:?}", action.name(), state)));
    }
    let (post, r0, n0) = apply_action(state, action, params.whale_fee);
    let mut raw = Vec::new();
    block_event(&post, params, cfg, max_pool, &mut raw);
    let mut out: Vec<LabelledOutcome> = Vec::with_capacity(raw.len());
    for (prob, next, r, n) in raw {
        if let Some(o) = out
            .iter_mut()
            .find(|o| o.next == next && o.reward == r0 + r && o.canon == n0 + n)
        {
            o.prob += prob;
        } else {
            out.push(LabelledOutcome {
                prob,
                next,
                reward: r0 + r,
                canon: n0 + n,
            });
        }
    }
    Ok(out)
}

/// Every structurally valid state, in a fixed order with the initial state
/// first.
pub fn enumerate_states(max_fork_len: usize, max_pool: usize) -> Vec<WerlmanState> {
    let k = max_fork_len as u8;
    let mut out = Vec::new();
    out.push(WerlmanState::INITIAL);
    for a in 0..=k {
        for h in 0..=k {
            for fork in [
                ForkFlag::LatestHonest,
                ForkFlag::LatestAdversarial,
                ForkFlag::MatchActive,
            ] {
                for pool in 0..=max_pool as u8 {
                    for t_h in 0..=h.min(pool) {
                        for t_a in 0..=a.min(h).min(pool) {
                            let lead = a.saturating_sub(h);
                            for l in 0..(1u32 << lead) {
                                let s = WerlmanState {
                                    a,
                                    h,
                                    fork,
                                    pool,
                                    t_a,
                                    t_h,
                                    l: l as u16,
                                };
                                if s != WerlmanState::INITIAL && s.is_valid(max_fork_len, max_pool) {
                                    out.push(s);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Exact MDP with its state labels.
#[derive(Debug, Clone)]
pub struct WerlmanMdp {
    pub mdp: Mdp,
    pub states: Vec<WerlmanState>,
}

/// Builds the exact MDP of the environment.
pub fn build_mdp(params: &WerlmanParams, cfg: &MiningConfig, caps: &Caps) -> Result<WerlmanMdp> {
    params.validate()?;
    cfg.validate()?;
    let k = cfg.max_fork_len;
    if k > 15 {
        return Err(Error::Budget {
            cap: format!("max_fork_len={k}"),
            states: usize::MAX,
            budget: caps.state_budget,
        });
    }
    if caps.max_pool > k.min(255) {
        return Err(domain(format!("max_pool {} exceeds max_fork_len {}", caps.max_pool, k)));
    }
    let states = enumerate_states(k, caps.max_pool);
    if states.len() > caps.state_budget {
        return Err(Error::Budget {
            cap: format!("max_fork_len={k}, max_pool={}", caps.max_pool),
            states: states.len(),
            budget: caps.state_budget,
        });
    }
    let index: HashMap<WerlmanState, u32> = states.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
    let mut post_index: HashMap<PostState, u32> = HashMap::new();
    let mut posts: Vec<PostState> = Vec::new();
    let mut builder = MdpBuilder::new(WerlmanAction::NAMES);
    let mut choices = Vec::with_capacity(4);
    for s in &states {
        choices.clear();
        for action in legal_actions(s, k) {
            let (post, reward, canon) = apply_action(s, action, params.whale_fee);
            let q = *post_index.entry(post).or_insert_with(|| {
                posts.push(post);
                (posts.len() - 1) as u32
            });
            choices.push(Choice {
                action: action as u8,
                post: q,
                reward,
                canon,
            });
        }
        builder.push_state(&choices);
    }
    let mut raw = Vec::new();
    let mut outs: Vec<Outcome> = Vec::new();
    for post in &posts {
        raw.clear();
        outs.clear();
        block_event(post, params, cfg, caps.max_pool, &mut raw);
        for &(prob, next, reward, canon) in &raw {
            let j = *index
                .get(&next)
                .ok_or_else(|| domain(format!("transition leaves the state space: {next:?}")))?;
            if let Some(o) = outs
                .iter_mut()
                .find(|o| o.next == j && o.reward == reward && o.canon == canon)
            {
                o.prob += prob;
            } else {
                outs.push(Outcome {
                    next: j,
                    prob,
                    reward,
                    canon,
                });
            }
        }
        builder.push_post(&outs);
    }
    let mdp = builder.build(0)?;
    Ok(WerlmanMdp { mdp, states })
}

impl WerlmanMdp {
    pub fn state_index(&self, s: &WerlmanState) -> Option<usize> {
        self.states.iter().position(|x| x == s)
    }

    /// Restriction to the honest strategy: override when ahead, adopt when
    /// behind, wait only in the empty race.
    pub fn honest_restricted(&self) -> Result<Mdp> {
        let states = &self.states;
        self.mdp.restricted(|i, a| honest_action(&states[i]) as u8 == a)
    }
}

/// Action of the honest strategy in `s`.
pub fn honest_action(s: &WerlmanState) -> WerlmanAction {
    if s.a > s.h {
        WerlmanAction::Override
    } else if s.h > s.a || s.h > 0 {
        WerlmanAction::Adopt
    } else {
        WerlmanAction::Wait
    }
}

/// Optimal profit per canonical block and the optimal policy.
pub fn solve(
    params: &WerlmanParams,
    cfg: &MiningConfig,
    caps: &Caps,
    opts: &SolverOptions,
) -> Result<(WerlmanMdp, mdp::Solution)> {
    let model = build_mdp(params, cfg, caps)?;
    let sol = mdp::solve_average_reward(&model.mdp, (0.0, 1.0 + params.whale_fee), opts)?;
    Ok((model, sol))
}

/// Bisection settings for threshold searches over `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    pub bracket: (f64, f64),
    pub tol: f64,
    pub solver: SolverOptions,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            bracket: (0.0, 0.5),
            tol: 1e-4,
            solver: SolverOptions::default(),
        }
    }
}

/// Smallest adversary share whose optimal profit beats honest mining by
/// `cfg.epsilon`.
pub fn werlman_threshold(
    params: &WerlmanParams,
    cfg: &MiningConfig,
    caps: &Caps,
    opts: &ThresholdOptions,
) -> Result<Threshold> {
    threshold_search(
        |alpha| {
            let c = cfg.with_alpha(alpha);
            let model = build_mdp(params, &c, caps)?;
            let target = params.honest_profit(alpha) + cfg.epsilon;
            mdp::optimal_ratio_reaches(&model.mdp, target, &opts.solver)
        },
        opts.bracket,
        opts.tol,
    )
}

/// Step-by-step simulator of the environment.
#[derive(Debug, Clone)]
pub struct WerlmanEnv {
    pub params: WerlmanParams,
    pub config: MiningConfig,
    pub max_pool: usize,
    pub state: WerlmanState,
}

impl WerlmanEnv {
    pub fn new(params: WerlmanParams, config: MiningConfig, max_pool: usize) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        Ok(WerlmanEnv {
            params,
            config,
            max_pool,
            state: WerlmanState::INITIAL,
        })
    }

    pub fn reset(&mut self) {
        self.state = WerlmanState::INITIAL;
    }

    pub fn legal_actions(&self) -> Vec<WerlmanAction> {
        legal_actions(&self.state, self.config.max_fork_len)
    }

    /// Applies `action` and samples the next block. Elapsed time is counted
    /// in canonical blocks, the post-adjustment time unit.
    pub fn step<R: Rng + ?Sized>(&mut self, action: WerlmanAction, rng: &mut R) -> Result<StepInfo> {
        let outs = transition_outcomes(&self.state, action, &self.params, &self.config, self.max_pool)?;
        let u = uniform(rng);
        let mut acc = 0.0;
        let mut pick = outs[outs.len() - 1];
        for o in &outs {
            acc += o.prob;
            if u < acc {
                pick = *o;
                break;
            }
        }
        self.state = pick.next;
        Ok(StepInfo {
            reward_adv: pick.reward,
            canonical_blocks: pick.canon as u32,
            total_blocks: 1,
            elapsed: pick.canon,
        })
    }
}
