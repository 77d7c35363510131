//! Simplified volatile-reward model with a discrete linear time-fee schedule.
//!
//! The fee a block collects grows linearly with the time since its parent
//! was mined, discretised into `M` steps of length `delta`. States are
//! `(l_a, l_h, t_total, t_last, fork)`:
//!
//! * `t_total` is the sum of time indices of the adversary's private blocks,
//!   so the private fork is worth `l_a (R + fee0) + r_fee * delta * t_total`;
//! * `t_last` counts time steps since the adversary's chain tip was mined and
//!   sets the index of the next adversarial block;
//! * `fork` is 0 after an adversarial block, 1 after an honest block and 2
//!   after the adversary extended a matched race.
//!
//! A private fork's reward is only known in total, so `override` publishes
//! the whole fork and `match` requires equal fork lengths.
//!
//! After a difficulty adjustment (`PostDam`) the objective is reward per
//! canonical block and only blocks at a new height draw a generation time;
//! same-height race blocks take time index 0. Before the adjustment
//! (`PreDam`) every block draws a time index and the objective is reward per
//! mined block.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::MiningConfig;
use crate::error::{domain, Error, Result};
use crate::mdp::{self, Choice, Mdp, MdpBuilder, Outcome, SolverOptions};
use crate::threshold::{threshold_search, Threshold};

/// Discrete linear time-fee schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFeeSchedule {
    /// Fee of a block mined immediately after its parent (BTC).
    pub fee0: f64,
    /// Fee growth per minute (BTC/min).
    pub r_fee: f64,
    /// Number of discrete time points.
    #[serde(rename = "M")]
    pub m: usize,
    /// Minutes per time step.
    pub delta: f64,
    /// Block rate in blocks per minute.
    #[serde(rename = "lambda")]
    pub lambda_rate: f64,
}

impl TimeFeeSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(domain(format!("M must be at least 2, got {}", self.m)));
        }
        if !(self.delta > 0.0) {
            return Err(domain(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.lambda_rate > 0.0) {
            return Err(domain(format!("lambda must be positive, got {}", self.lambda_rate)));
        }
        if !(self.fee0 >= 0.0) || !(self.r_fee >= 0.0) {
            return Err(domain(format!(
                "fee0 and r_fee must be non-negative, got {} and {}",
                self.fee0, self.r_fee
            )));
        }
        Ok(())
    }

    /// Fee of a block whose generation time falls in step `i`.
    pub fn discrete_fee(&self, i: usize) -> f64 {
        self.fee0 + self.r_fee * i.min(self.m - 1) as f64 * self.delta
    }

    /// Probability of each time index; the top index absorbs the tail.
    pub fn time_probs(&self) -> Vec<f64> {
        let ld = self.lambda_rate * self.delta;
        let mut out = Vec::with_capacity(self.m);
        for i in 0..self.m - 1 {
            out.push(libm::exp(-ld * i as f64) - libm::exp(-ld * (i + 1) as f64));
        }
        out.push(libm::exp(-ld * (self.m - 1) as f64));
        out
    }

    /// Draws a time index by inverting the exponential CDF.
    pub fn sample_time_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let t = crate::rng::exponential(rng, self.lambda_rate);
        ((t / self.delta) as usize).min(self.m - 1)
    }

    /// Expected time index of a fresh draw.
    pub fn mean_index(&self) -> f64 {
        self.time_probs().iter().enumerate().map(|(i, p)| i as f64 * p).sum()
    }

    /// Expected fee of a block whose parent was mined at the same moment
    /// the race began.
    pub fn expected_fee(&self) -> f64 {
        self.fee0 + self.r_fee * self.delta * self.mean_index()
    }

    /// Uniform uncapped schedule parameters for a given reward-increase ratio
    /// with `R + fee0` normalised to one.
    pub fn from_ratio(ratio: f64, protocol_reward: f64, m: usize, delta: f64, lambda_rate: f64) -> Result<Self> {
        if !(protocol_reward <= 1.0) {
            return Err(domain("protocol reward exceeds the normalised block reward"));
        }
        let s = TimeFeeSchedule {
            fee0: 1.0 - protocol_reward,
            r_fee: ratio,
            m,
            delta,
            lambda_rate,
        };
        s.validate()?;
        Ok(s)
    }
}

/// `r_fee / (R + fee0)`.
pub fn reward_increase_ratio(protocol_reward: f64, fee0: f64, r_fee: f64) -> Result<f64> {
    let d = protocol_reward + fee0;
    if d == 0.0 {
        return Err(domain("R + fee0 is zero"));
    }
    Ok(r_fee / d)
}

/// Schedule matching the two-level whale environment: the top time step has
/// probability `p` and the top fee is `1 + F` times the fee at the average
/// generation time, which is normalised to one.
pub fn calibrate_to_werlman(p: f64, lambda_rate: f64, m: usize, whale_fee: f64) -> Result<TimeFeeSchedule> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("p must lie in (0, 1), got {p}")));
    }
    if m < 2 {
        return Err(domain(format!("M must be at least 2, got {m}")));
    }
    if !(lambda_rate > 0.0) || !(whale_fee >= 0.0) {
        return Err(domain("lambda must be positive and F non-negative"));
    }
    let t_top = -libm::log(p) / lambda_rate;
    let delta = t_top / (m - 1) as f64;
    let mut s = TimeFeeSchedule {
        fee0: 1.0,
        r_fee: 0.0,
        m,
        delta,
        lambda_rate,
    };
    let t_avg = s.mean_index() * delta;
    let r_fee = whale_fee / (t_top - t_avg);
    let fee0 = 1.0 - r_fee * t_avg;
    if fee0 < 0.0 {
        return Err(domain(format!("F = {whale_fee} requires a negative base fee ({fee0})")));
    }
    s.fee0 = fee0;
    s.r_fee = r_fee;
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Reward per canonical block, zero-time heuristic for same-height blocks.
    PostDam,
    /// Reward per mined block, every block draws a time index.
    PreDam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SimplifiedState {
    pub l_a: u8,
    pub l_h: u8,
    pub t_total: u16,
    pub t_last: u8,
    pub fork: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplifiedAction {
    Override = 0,
    Adopt = 1,
    Match = 2,
    Wait = 3,
}

impl SimplifiedAction {
    pub const NAMES: [&'static str; 4] = ["override", "adopt", "match", "wait"];
}

/// Actions available in `s` with fork cap `k`.
pub fn legal_actions(s: &SimplifiedState, k: u8) -> Vec<SimplifiedAction> {
    let mut out = Vec::with_capacity(4);
    let below_cap = s.l_a < k && s.l_h < k;
    if s.l_a > s.l_h {
        out.push(SimplifiedAction::Override);
    }
    out.push(SimplifiedAction::Adopt);
    if below_cap && s.fork == 1 && s.l_a == s.l_h && s.l_h >= 1 {
        out.push(SimplifiedAction::Match);
    }
    if below_cap && s.fork != 2 {
        out.push(SimplifiedAction::Wait);
    }
    out
}

/// Value of the adversary's private fork.
pub fn fork_reward(s: &SimplifiedState, schedule: &TimeFeeSchedule, protocol_reward: f64) -> f64 {
    s.l_a as f64 * (protocol_reward + schedule.fee0) + schedule.r_fee * schedule.delta * s.t_total as f64
}

struct Layout {
    k: usize,
    m: usize,
    tt: usize,
}

impl Layout {
    fn new(k: usize, m: usize) -> Self {
        Layout {
            k,
            m,
            tt: k * (m - 1) + 1,
        }
    }

    fn size(&self, flags: usize) -> usize {
        (self.k + 1) * (self.k + 1) * self.tt * self.m * flags
    }

    fn key(&self, a: usize, h: usize, tt: usize, tl: usize, flag: usize, flags: usize) -> usize {
        (((a * (self.k + 1) + h) * self.tt + tt) * self.m + tl) * flags + flag
    }
}

fn is_valid(s: &SimplifiedState, k: u8, m: usize) -> bool {
    if s.l_a > k || s.l_h > k || s.t_total as usize > s.l_a as usize * (m - 1) || s.t_last as usize >= m {
        return false;
    }
    match s.fork {
        0 => (s.l_a >= 1 || (s.l_h == 0 && s.t_total == 0)) && s.t_last == 0,
        1 => s.l_h >= 1,
        2 => s.l_h >= 1 && s.l_a == s.l_h + 1 && s.t_last == 0,
        _ => false,
    }
}

/// Every structurally valid state, the empty race first.
pub fn enumerate_states(k: u8, m: usize) -> Vec<SimplifiedState> {
    let init = SimplifiedState {
        l_a: 0,
        l_h: 0,
        t_total: 0,
        t_last: 0,
        fork: 0,
    };
    let mut out = vec![init];
    for l_a in 0..=k {
        for l_h in 0..=k {
            for t_total in 0..=(l_a as usize * (m - 1)) {
                for t_last in 0..m {
                    for fork in 0..3u8 {
                        let s = SimplifiedState {
                            l_a,
                            l_h,
                            t_total: t_total as u16,
                            t_last: t_last as u8,
                            fork,
                        };
                        if s != init && is_valid(&s, k, m) {
                            out.push(s);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Exact MDP of the simplified model with its state labels.
#[derive(Debug, Clone)]
pub struct SimplifiedModel {
    pub mdp: Mdp,
    pub states: Vec<SimplifiedState>,
    pub schedule: TimeFeeSchedule,
    pub objective: Objective,
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct Post {
    a: u8,
    h: u8,
    tt: u16,
    tl: u8,
    active: bool,
}

/// Default state budget of [`build_mdp`].
pub const STATE_BUDGET: usize = 5_000_000;

/// Builds the exact MDP for `objective`.
pub fn build_mdp(
    schedule: &TimeFeeSchedule,
    cfg: &MiningConfig,
    objective: Objective,
    state_budget: usize,
) -> Result<SimplifiedModel> {
    schedule.validate()?;
    cfg.validate()?;
    let k = cfg.max_fork_len;
    let m = schedule.m;
    if k > 60 || m > 250 {
        return Err(Error::Budget {
            cap: format!("max_fork_len={k}, M={m}"),
            states: usize::MAX,
            budget: state_budget,
        });
    }
    let layout = Layout::new(k, m);
    let states = enumerate_states(k as u8, m);
    if states.len() > state_budget {
        return Err(Error::Budget {
            cap: format!("max_fork_len={k}, M={m}"),
            states: states.len(),
            budget: state_budget,
        });
    }
    let mut index = vec![u32::MAX; layout.size(3)];
    for (i, s) in states.iter().enumerate() {
        index[layout.key(
            s.l_a as usize,
            s.l_h as usize,
            s.t_total as usize,
            s.t_last as usize,
            s.fork as usize,
            3,
        )] = i as u32;
    }

    let base = cfg.protocol_reward + schedule.fee0;
    let step_fee = schedule.r_fee * schedule.delta;
    let fork_value = |a: u8, tt: u16| a as f64 * base + step_fee * tt as f64;
    let post_dam = objective == Objective::PostDam;

    let mut post_slot = vec![u32::MAX; layout.size(2)];
    let mut posts: Vec<Post> = Vec::new();
    let mut builder = MdpBuilder::new(SimplifiedAction::NAMES);
    let mut choices = Vec::with_capacity(4);
    for s in &states {
        choices.clear();
        for action in legal_actions(s, k as u8) {
            let (post, reward, canon) = match action {
                SimplifiedAction::Override => (
                    Post {
                        a: 0,
                        h: 0,
                        tt: 0,
                        tl: s.t_last,
                        active: false,
                    },
                    fork_value(s.l_a, s.t_total),
                    s.l_a as f64,
                ),
                SimplifiedAction::Adopt => (
                    Post {
                        a: 0,
                        h: 0,
                        tt: 0,
                        tl: 0,
                        active: false,
                    },
                    0.0,
                    s.l_h as f64,
                ),
                SimplifiedAction::Match | SimplifiedAction::Wait => (
                    Post {
                        a: s.l_a,
                        h: s.l_h,
                        tt: s.t_total,
                        tl: s.t_last,
                        active: action == SimplifiedAction::Match,
                    },
                    0.0,
                    0.0,
                ),
            };
            let key = layout.key(
                post.a as usize,
                post.h as usize,
                post.tt as usize,
                post.tl as usize,
                post.active as usize,
                2,
            );
            if post_slot[key] == u32::MAX {
                post_slot[key] = posts.len() as u32;
                posts.push(post);
            }
            let (reward, canon) = if post_dam { (reward, canon) } else { (reward, 0.0) };
            choices.push(Choice {
                action: action as u8,
                post: post_slot[key],
                reward,
                canon,
            });
        }
        builder.push_state(&choices);
    }
    drop(post_slot);

    let probs = schedule.time_probs();
    let alpha = cfg.alpha;
    let mut acc = vec![0.0; m];
    let mut outs: Vec<Outcome> = Vec::new();
    let step_canon = if post_dam { 0.0 } else { 1.0 };
    for p in &posts {
        outs.clear();
        let lookup = |a: u8, h: u8, tt: usize, tl: usize, fork: usize| -> Result<u32> {
            let j = index[layout.key(a as usize, h as usize, tt, tl, fork, 3)];
            if j == u32::MAX {
                Err(domain(format!(
                    "transition leaves the state space: ({a}, {h}, {tt}, {tl}, {fork})"
                )))
            } else {
                Ok(j)
            }
        };
        // Distribution of min(tl + i, M - 1) for a fresh index i, or the
        // point mass at tl under the zero-time rule.
        let spread = |fresh: bool, acc: &mut [f64]| {
            for x in acc.iter_mut() {
                *x = 0.0;
            }
            if fresh {
                for (i, pi) in probs.iter().enumerate() {
                    acc[(p.tl as usize + i).min(m - 1)] += pi;
                }
            } else {
                acc[p.tl as usize] = 1.0;
            }
        };

        if alpha > 0.0 {
            let fresh = !post_dam || p.a + 1 > p.h;
            spread(fresh, &mut acc);
            let fork = if p.active { 2 } else { 0 };
            for (b, &pb) in acc.iter().enumerate() {
                if pb > 0.0 {
                    outs.push(Outcome {
                        next: lookup(p.a + 1, p.h, p.tt as usize + b, 0, fork)?,
                        prob: alpha * pb,
                        reward: 0.0,
                        canon: step_canon,
                    });
                }
            }
        }
        if alpha < 1.0 {
            let honest = 1.0 - alpha;
            let gamma = if p.active { cfg.gamma } else { 0.0 };
            if gamma > 0.0 {
                spread(true, &mut acc);
                let reward = fork_value(p.a, p.tt);
                let canon = if post_dam { p.a as f64 } else { step_canon };
                for (b, &pb) in acc.iter().enumerate() {
                    if pb > 0.0 {
                        outs.push(Outcome {
                            next: lookup(0, 1, 0, b, 1)?,
                            prob: gamma * honest * pb,
                            reward,
                            canon,
                        });
                    }
                }
            }
            if gamma < 1.0 {
                let fresh = !post_dam || p.h + 1 > p.a;
                spread(fresh, &mut acc);
                for (b, &pb) in acc.iter().enumerate() {
                    if pb > 0.0 {
                        outs.push(Outcome {
                            next: lookup(p.a, p.h + 1, p.tt as usize, b, 1)?,
                            prob: (1.0 - gamma) * honest * pb,
                            reward: 0.0,
                            canon: step_canon,
                        });
                    }
                }
            }
        }
        builder.push_post(&outs);
    }
    let mdp = builder.build(0)?;
    Ok(SimplifiedModel {
        mdp,
        states,
        schedule: *schedule,
        objective,
    })
}

/// Honest profit, identical per canonical block and per mined block:
/// `alpha (R + E[fee])`.
pub fn honest_profit(schedule: &TimeFeeSchedule, cfg: &MiningConfig) -> f64 {
    cfg.alpha * (cfg.protocol_reward + schedule.expected_fee())
}

impl SimplifiedModel {
    /// Upper bound on any achievable ratio: the most valuable block.
    pub fn rho_bracket(&self, cfg: &MiningConfig) -> (f64, f64) {
        (
            0.0,
            cfg.protocol_reward + self.schedule.discrete_fee(self.schedule.m - 1),
        )
    }

    /// Restriction to the honest strategy.
    pub fn honest_restricted(&self) -> Result<Mdp> {
        let states = &self.states;
        self.mdp.restricted(|i, a| {
            let s = &states[i];
            let want = if s.l_a > s.l_h {
                SimplifiedAction::Override
            } else if s.l_h > 0 {
                SimplifiedAction::Adopt
            } else {
                SimplifiedAction::Wait
            };
            want as u8 == a
        })
    }

    /// Action table of `policy` as `(state, action name)` rows.
    pub fn policy_table<'a>(
        &'a self,
        policy: &'a mdp::Policy,
    ) -> impl Iterator<Item = (SimplifiedState, &'a str)> + 'a {
        self.states.iter().enumerate().map(move |(i, s)| {
            let a = policy.action(&self.mdp, i);
            (*s, SimplifiedAction::NAMES[a as usize])
        })
    }
}

fn solve(
    schedule: &TimeFeeSchedule,
    cfg: &MiningConfig,
    objective: Objective,
    opts: &SolverOptions,
) -> Result<(SimplifiedModel, mdp::Solution)> {
    let model = build_mdp(schedule, cfg, objective, STATE_BUDGET)?;
    let sol = mdp::solve_average_reward(&model.mdp, model.rho_bracket(cfg), opts)?;
    Ok((model, sol))
}

/// Optimal reward per canonical block after a difficulty adjustment.
pub fn solve_postdam(
    schedule: &TimeFeeSchedule,
    cfg: &MiningConfig,
    opts: &SolverOptions,
) -> Result<(SimplifiedModel, mdp::Solution)> {
    solve(schedule, cfg, Objective::PostDam, opts)
}

/// Optimal reward per mined block before any difficulty adjustment.
pub fn solve_predam(
    schedule: &TimeFeeSchedule,
    cfg: &MiningConfig,
    opts: &SolverOptions,
) -> Result<(SimplifiedModel, mdp::Solution)> {
    solve(schedule, cfg, Objective::PreDam, opts)
}

/// Smallest share at which the optimal strategy beats honest mining by
/// `cfg.epsilon` under `objective`.
pub fn threshold(
    schedule: &TimeFeeSchedule,
    cfg: &MiningConfig,
    objective: Objective,
    opts: &crate::werlman::ThresholdOptions,
) -> Result<Threshold> {
    threshold_search(
        |alpha| {
            let c = cfg.with_alpha(alpha);
            let model = build_mdp(schedule, &c, objective, STATE_BUDGET)?;
            let target = honest_profit(schedule, &c) + cfg.epsilon;
            mdp::optimal_ratio_reaches(&model.mdp, target, &opts.solver)
        },
        opts.bracket,
        opts.tol,
    )
}
