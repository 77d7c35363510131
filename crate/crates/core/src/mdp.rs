//! Finite average-reward MDPs with a fractional objective.
//!
//! A model alternates between decision states and chance nodes. In a decision
//! state the adversary picks a [`Choice`], which pays an immediate reward and
//! leads to a chance node ("post-decision state"). The chance node then moves
//! to the next decision state according to its [`Outcome`] distribution,
//! possibly paying further rewards. Several choices may share a chance node,
//! which keeps large models compact.
//!
//! The objective is the long-run ratio of adversary reward to canonical
//! blocks. It is solved by bisection on the ratio `rho`: for fixed `rho` the
//! linear reward `reward - rho * canon` is optimised by relative value
//! iteration, and the sign of the optimal gain tells on which side of the
//! optimal ratio `rho` lies.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::uniform;

/// One decision available in a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    /// Index into the model's action names.
    pub action: u8,
    /// Chance node reached after the decision.
    pub post: u32,
    /// Adversary reward credited by the decision itself.
    pub reward: f64,
    /// Canonical blocks credited by the decision itself.
    pub canon: f64,
}

/// One branch of a chance node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub next: u32,
    pub prob: f64,
    pub reward: f64,
    pub canon: f64,
}

/// Flattened view of a single transition out of a `(state, choice)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
    pub canon: f64,
}

/// Compressed sparse representation of a two-stage MDP.
#[derive(Debug, Clone)]
pub struct Mdp {
    action_names: Vec<String>,
    choice_start: Vec<u32>,
    choices: Vec<Choice>,
    outcome_start: Vec<u32>,
    outcomes: Vec<Outcome>,
    post_reward: Vec<f64>,
    post_canon: Vec<f64>,
    initial: u32,
}

/// Incremental constructor for [`Mdp`].
#[derive(Debug, Clone)]
pub struct MdpBuilder {
    action_names: Vec<String>,
    choice_start: Vec<u32>,
    choices: Vec<Choice>,
    outcome_start: Vec<u32>,
    outcomes: Vec<Outcome>,
}

/// Probability mass tolerated away from one in a chance node.
pub const PROB_TOL: f64 = 1e-12;

impl MdpBuilder {
    pub fn new<S: Into<String>>(action_names: impl IntoIterator<Item = S>) -> Self {
        MdpBuilder {
            action_names: action_names.into_iter().map(Into::into).collect(),
            choice_start: vec![0],
            choices: Vec::new(),
            outcome_start: vec![0],
            outcomes: Vec::new(),
        }
    }

    pub fn num_states(&self) -> usize {
        self.choice_start.len() - 1
    }

    pub fn num_posts(&self) -> usize {
        self.outcome_start.len() - 1
    }

    /// Appends a decision state and returns its index.
    pub fn push_state(&mut self, choices: &[Choice]) -> u32 {
        self.choices.extend_from_slice(choices);
        self.choice_start.push(self.choices.len() as u32);
        (self.choice_start.len() - 2) as u32
    }

    /// Appends a chance node and returns its index.
    pub fn push_post(&mut self, outcomes: &[Outcome]) -> u32 {
        self.outcomes.extend_from_slice(outcomes);
        self.outcome_start.push(self.outcomes.len() as u32);
        (self.outcome_start.len() - 2) as u32
    }

    /// Validates indices and probabilities and freezes the model.
    pub fn build(self, initial: u32) -> Result<Mdp> {
        let n_states = self.num_states();
        let n_posts = self.num_posts();
        if initial as usize >= n_states {
            return Err(domain(format!(
                "initial state {initial} out of range ({n_states} states)"
            )));
        }
        for s in 0..n_states {
            let cs = &self.choices[self.choice_start[s] as usize..self.choice_start[s + 1] as usize];
            if cs.is_empty() {
                return Err(domain(format!("state {s} has no available action")));
            }
            for c in cs {
                if c.post as usize >= n_posts {
                    return Err(domain(format!("state {s} refers to missing chance node {}", c.post)));
                }
                if c.action as usize >= self.action_names.len() {
                    return Err(domain(format!("state {s} uses unknown action {}", c.action)));
                }
            }
        }
        let mut post_reward = Vec::with_capacity(n_posts);
        let mut post_canon = Vec::with_capacity(n_posts);
        for q in 0..n_posts {
            let os = &self.outcomes[self.outcome_start[q] as usize..self.outcome_start[q + 1] as usize];
            let mut total = 0.0;
            let mut r = 0.0;
            let mut n = 0.0;
            for o in os {
                if o.next as usize >= n_states {
                    return Err(domain(format!("chance node {q} refers to missing state {}", o.next)));
                }
                if !(o.prob >= 0.0) {
                    return Err(domain(format!("chance node {q} has negative probability {}", o.prob)));
                }
                total += o.prob;
                r += o.prob * o.reward;
                n += o.prob * o.canon;
            }
            if (total - 1.0).abs() > PROB_TOL {
                return Err(domain(format!("chance node {q} probabilities sum to {total}")));
            }
            post_reward.push(r);
            post_canon.push(n);
        }
        Ok(Mdp {
            action_names: self.action_names,
            choice_start: self.choice_start,
            choices: self.choices,
            outcome_start: self.outcome_start,
            outcomes: self.outcomes,
            post_reward,
            post_canon,
            initial,
        })
    }
}

impl Mdp {
    pub fn num_states(&self) -> usize {
        self.choice_start.len() - 1
    }

    pub fn num_posts(&self) -> usize {
        self.outcome_start.len() - 1
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn initial(&self) -> usize {
        self.initial as usize
    }

    pub fn action_names(&self) -> &[String] {
        &self.action_names
    }

    pub fn choices(&self, s: usize) -> &[Choice] {
        &self.choices[self.choice_start[s] as usize..self.choice_start[s + 1] as usize]
    }

    pub fn outcomes(&self, post: usize) -> &[Outcome] {
        &self.outcomes[self.outcome_start[post] as usize..self.outcome_start[post + 1] as usize]
    }

    /// Position of `action` among the choices of `s`, if available.
    pub fn choice_index(&self, s: usize, action: u8) -> Option<usize> {
        self.choices(s).iter().position(|c| c.action == action)
    }

    /// Transitions of `(s, choice)` with the decision reward folded into
    /// every branch.
    pub fn transitions(&self, s: usize, choice: usize) -> impl Iterator<Item = Transition> + '_ {
        let c = self.choices(s)[choice];
        self.outcomes(c.post as usize).iter().map(move |o| Transition {
            next: o.next as usize,
            prob: o.prob,
            reward: c.reward + o.reward,
            canon: c.canon + o.canon,
        })
    }

    /// Expected one-step `(reward, canon)` of `(s, choice)`.
    pub fn expected_step(&self, s: usize, choice: usize) -> (f64, f64) {
        let c = self.choices(s)[choice];
        (
            c.reward + self.post_reward[c.post as usize],
            c.canon + self.post_canon[c.post as usize],
        )
    }

    /// Builds a model from flat per-`(state, action)` transition lists, one
    /// chance node per pair.
    pub fn from_transitions(
        action_names: Vec<String>,
        initial: usize,
        states: &[Vec<(u8, Vec<Transition>)>],
    ) -> Result<Mdp> {
        let mut b = MdpBuilder::new(action_names);
        let mut post = 0u32;
        let mut choices = Vec::new();
        for acts in states {
            choices.clear();
            for (action, _) in acts {
                choices.push(Choice {
                    action: *action,
                    post,
                    reward: 0.0,
                    canon: 0.0,
                });
                post += 1;
            }
            b.push_state(&choices);
        }
        let mut outs = Vec::new();
        for acts in states {
            for (_, ts) in acts {
                outs.clear();
                outs.extend(ts.iter().map(|t| Outcome {
                    next: t.next as u32,
                    prob: t.prob,
                    reward: t.reward,
                    canon: t.canon,
                }));
                b.push_post(&outs);
            }
        }
        b.build(initial as u32)
    }

    /// Copy of the model keeping only the choices accepted by `keep`.
    pub fn restricted<F>(&self, mut keep: F) -> Result<Mdp>
    where
        F: FnMut(usize, u8) -> bool,
    {
        let mut b = MdpBuilder::new(self.action_names.iter().cloned());
        let mut buf = Vec::new();
        for s in 0..self.num_states() {
            buf.clear();
            buf.extend(self.choices(s).iter().copied().filter(|c| keep(s, c.action)));
            b.push_state(&buf);
        }
        for q in 0..self.num_posts() {
            b.push_post(self.outcomes(q));
        }
        b.build(self.initial)
    }
}

/// Deterministic stationary policy: one choice position per state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub choice: Vec<u8>,
}

impl Policy {
    pub fn action(&self, mdp: &Mdp, s: usize) -> u8 {
        mdp.choices(s)[self.choice[s] as usize].action
    }
}

/// Numerical settings of the average-reward solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Width of the gain bracket at which value iteration stops.
    pub vi_tol: f64,
    /// Width of the ratio bracket at which the bisection stops.
    pub rho_tol: f64,
    /// Sweep cap for a single value-iteration run.
    pub max_sweeps: usize,
    /// Self-loop weight of the aperiodicity transform, in `[0, 1)`.
    pub aperiodicity: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            vi_tol: 1e-9,
            rho_tol: 1e-8,
            max_sweeps: 1_000_000,
            aperiodicity: 0.1,
        }
    }
}

/// Sign of the optimal gain for a fixed ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainSign {
    Positive,
    Negative,
    /// The gain bracket shrank below tolerance while straddling zero.
    Zero,
}

/// Relative value iteration for the linearised objective
/// `reward - rho * canon`, keeping its value vector between runs so that
/// nearby ratios warm-start each other.
#[derive(Debug, Clone)]
pub struct ValueIteration<'m> {
    mdp: &'m Mdp,
    values: Vec<f64>,
    post_values: Vec<f64>,
    sweeps: usize,
}

impl<'m> ValueIteration<'m> {
    pub fn new(mdp: &'m Mdp) -> Self {
        ValueIteration {
            mdp,
            values: vec![0.0; mdp.num_states()],
            post_values: vec![0.0; mdp.num_posts()],
            sweeps: 0,
        }
    }

    /// Total sweeps performed so far.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn update_posts(&mut self, rho: f64) {
        let m = self.mdp;
        let v = &self.values;
        for (q, w) in self.post_values.iter_mut().enumerate() {
            let lo = m.outcome_start[q] as usize;
            let hi = m.outcome_start[q + 1] as usize;
            let mut acc = m.post_reward[q] - rho * m.post_canon[q];
            for o in &m.outcomes[lo..hi] {
                acc += o.prob * v[o.next as usize];
            }
            *w = acc;
        }
    }

    #[inline]
    fn best_choice(&self, s: usize, rho: f64) -> (usize, f64) {
        let m = self.mdp;
        let lo = m.choice_start[s] as usize;
        let hi = m.choice_start[s + 1] as usize;
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (i, c) in m.choices[lo..hi].iter().enumerate() {
            let q = c.reward - rho * c.canon + self.post_values[c.post as usize];
            if q > best + 1e-12 * (1.0 + libm::fabs(q)) {
                best = q;
                arg = i;
            }
        }
        (arg, best)
    }

    /// One damped Bellman sweep. Returns the bounds `min(TV - V)` and
    /// `max(TV - V)` on the optimal gain.
    pub fn sweep(&mut self, rho: f64, aperiodicity: f64) -> (f64, f64) {
        self.update_posts(rho);
        let step = 1.0 - aperiodicity;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in 0..self.values.len() {
            let (_, tv) = self.best_choice(s, rho);
            let d = tv - self.values[s];
            lo = lo.min(d);
            hi = hi.max(d);
            self.values[s] += step * d;
        }
        let anchor = self.values[self.mdp.initial as usize];
        for v in &mut self.values {
            *v -= anchor;
        }
        self.sweeps += 1;
        (lo, hi)
    }

    /// Iterates until the gain bounds exclude zero or shrink below
    /// `vi_tol`.
    pub fn gain_sign(&mut self, rho: f64, opts: &SolverOptions) -> Result<(GainSign, (f64, f64))> {
        self.iterate(rho, opts, true)
    }

    /// Iterates until the gain bounds shrink below `vi_tol`.
    pub fn gain(&mut self, rho: f64, opts: &SolverOptions) -> Result<(f64, f64)> {
        self.iterate(rho, opts, false).map(|(_, b)| b)
    }

    fn iterate(&mut self, rho: f64, opts: &SolverOptions, early: bool) -> Result<(GainSign, (f64, f64))> {
        let mut last = (f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..opts.max_sweeps {
            let (lo, hi) = self.sweep(rho, opts.aperiodicity);
            last = (lo, hi);
            if early && lo > 0.0 {
                return Ok((GainSign::Positive, last));
            }
            if early && hi < 0.0 {
                return Ok((GainSign::Negative, last));
            }
            if hi - lo < opts.vi_tol {
                let sign = if lo > 0.0 {
                    GainSign::Positive
                } else if hi < 0.0 {
                    GainSign::Negative
                } else {
                    GainSign::Zero
                };
                return Ok((sign, last));
            }
        }
        Err(Error::NonConvergence {
            iterations: opts.max_sweeps,
            residual: last.1 - last.0,
        })
    }

    /// Greedy policy with respect to the current values.
    pub fn greedy_policy(&mut self, rho: f64) -> Policy {
        self.update_posts(rho);
        let choice = (0..self.values.len())
            .map(|s| self.best_choice(s, rho).0 as u8)
            .collect();
        Policy { choice }
    }
}

/// Optimal ratio and a policy attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub rho: f64,
    pub policy: Policy,
    /// Bounds on the optimal linearised gain at `rho`.
    pub gain_bounds: (f64, f64),
    pub sweeps: usize,
}

/// Maximises the long-run ratio `reward / canon` by bisection on the ratio
/// inside `bracket`.
pub fn solve_average_reward(mdp: &Mdp, bracket: (f64, f64), opts: &SolverOptions) -> Result<Solution> {
    let (mut lo, mut hi) = bracket;
    if !(lo <= hi) {
        return Err(domain(format!("empty ratio bracket [{lo}, {hi}]")));
    }
    let mut vi = ValueIteration::new(mdp);
    let mut bounds = (0.0, 0.0);
    let mut rho = 0.5 * (lo + hi);
    while hi - lo > opts.rho_tol {
        rho = 0.5 * (lo + hi);
        let (sign, b) = vi.gain_sign(rho, opts)?;
        bounds = b;
        match sign {
            GainSign::Positive => lo = rho,
            GainSign::Negative => hi = rho,
            GainSign::Zero => break,
        }
    }
    if hi - lo <= opts.rho_tol {
        rho = 0.5 * (lo + hi);
        bounds = vi.gain(rho, opts)?;
    }
    let policy = vi.greedy_policy(rho);
    Ok(Solution {
        rho,
        policy,
        gain_bounds: bounds,
        sweeps: vi.sweeps(),
    })
}

/// Whether the optimal ratio is at least `rho`, decided by the sign of the
/// optimal linearised gain. A gain indistinguishable from zero counts as
/// reaching `rho`.
pub fn optimal_ratio_reaches(mdp: &Mdp, rho: f64, opts: &SolverOptions) -> Result<bool> {
    let mut vi = ValueIteration::new(mdp);
    let (sign, _) = vi.gain_sign(rho, opts)?;
    Ok(sign != GainSign::Negative)
}

/// Long-run rates of a fixed policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyRates {
    /// Adversary reward per decision step.
    pub reward: f64,
    /// Canonical blocks per decision step.
    pub canon: f64,
}

impl PolicyRates {
    pub fn ratio(&self) -> f64 {
        self.reward / self.canon
    }
}

/// Stationary distribution of the chain induced by `policy`, started from the
/// initial state, by damped power iteration.
pub fn stationary_distribution(mdp: &Mdp, policy: &Policy, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = mdp.num_states();
    let mut pi = vec![0.0; n];
    pi[mdp.initial()] = 1.0;
    let mut next = vec![0.0; n];
    let damp = 0.1;
    for _ in 0..max_iter {
        for x in next.iter_mut() {
            *x = 0.0;
        }
        for s in 0..n {
            let mass = pi[s];
            if mass == 0.0 {
                continue;
            }
            next[s] += damp * mass;
            let c = mdp.choices(s)[policy.choice[s] as usize];
            for o in mdp.outcomes(c.post as usize) {
                next[o.next as usize] += (1.0 - damp) * mass * o.prob;
            }
        }
        let diff: f64 = pi.iter().zip(&next).map(|(a, b)| libm::fabs(a - b)).sum();
        core::mem::swap(&mut pi, &mut next);
        if diff < tol {
            return Ok(pi);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: f64::NAN,
    })
}

/// Exact long-run reward and canonical-block rates of `policy`.
pub fn evaluate_policy(mdp: &Mdp, policy: &Policy) -> Result<PolicyRates> {
    let pi = stationary_distribution(mdp, policy, 1e-14, 10_000_000)?;
    let mut reward = 0.0;
    let mut canon = 0.0;
    for (s, &mass) in pi.iter().enumerate() {
        if mass > 0.0 {
            let (r, c) = mdp.expected_step(s, policy.choice[s] as usize);
            reward += mass * r;
            canon += mass * c;
        }
    }
    Ok(PolicyRates { reward, canon })
}

/// Totals of a Monte-Carlo rollout with per-batch sums for error estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub steps: u64,
    pub reward: f64,
    pub canon: f64,
    pub batch_reward: Vec<f64>,
    pub batch_canon: Vec<f64>,
}

impl Rollout {
    pub fn ratio(&self) -> f64 {
        self.reward / self.canon
    }

    /// Batch-means standard error of [`Rollout::ratio`].
    pub fn ratio_std_error(&self) -> f64 {
        crate::stats::ratio_std_error(&self.batch_reward, &self.batch_canon)
    }
}

/// Simulates `policy` for `steps` decision steps from the initial state.
pub fn rollout<R: Rng + ?Sized>(mdp: &Mdp, policy: &Policy, steps: u64, batches: usize, rng: &mut R) -> Rollout {
    let batches = batches.max(1);
    let per_batch = (steps / batches as u64).max(1);
    let mut out = Rollout {
        steps,
        reward: 0.0,
        canon: 0.0,
        batch_reward: vec![0.0; batches],
        batch_canon: vec![0.0; batches],
    };
    let mut s = mdp.initial();
    for t in 0..steps {
        let c = mdp.choices(s)[policy.choice[s] as usize];
        let outs = mdp.outcomes(c.post as usize);
        let u = uniform(rng);
        let mut acc = 0.0;
        let mut pick = outs[outs.len() - 1];
        for o in outs {
            acc += o.prob;
            if u < acc {
                pick = *o;
                break;
            }
        }
        let r = c.reward + pick.reward;
        let n = c.canon + pick.canon;
        let b = ((t / per_batch) as usize).min(batches - 1);
        out.batch_reward[b] += r;
        out.batch_canon[b] += n;
        out.reward += r;
        out.canon += n;
        s = pick.next as usize;
    }
    out
}
