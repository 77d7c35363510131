use std::collections::{HashMap, HashSet, VecDeque};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use volmine_core::mdp::{self, Mdp, SolverOptions, Transition};
use volmine_core::stats::BatchRatio;
use volmine_core::werlman::{
    build_mdp, enumerate_states, honest_action, legal_actions, solve, transition_outcomes, werlman_threshold, Caps,
    ThresholdOptions, Variant, WerlmanAction, WerlmanEnv, WerlmanParams, WerlmanState,
};
use volmine_core::{threshold_search, MiningConfig};

fn cfg(alpha: f64, gamma: f64, k: usize) -> MiningConfig {
    MiningConfig {
        max_fork_len: k,
        ..MiningConfig::new(alpha, gamma)
    }
}

fn variant() -> impl Strategy<Value = Variant> {
    prop_oneof![Just(Variant::Original), Just(Variant::NonPredictable)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outcome_probabilities_sum_to_one(
        alpha in 0.01f64..0.49,
        gamma in 0.0f64..=1.0,
        p in 0.0f64..=1.0,
        f in 0.0f64..10.0,
        v in variant(),
        pick in any::<prop::sample::Index>(),
    ) {
        let states = enumerate_states(4, 2);
        let s = states[pick.index(states.len())];
        let params = WerlmanParams::new(f, p, v);
        let c = cfg(alpha, gamma, 4);
        for a in legal_actions(&s, 4) {
            let outs = transition_outcomes(&s, a, &params, &c, 2).unwrap();
            let total: f64 = outs.iter().map(|o| o.prob).sum();
            prop_assert!((total - 1.0).abs() < 1e-12, "{:?} {:?}: {}", s, a, total);
            for o in &outs {
                prop_assert!(o.prob >= 0.0);
                prop_assert!(o.next.is_valid(4, 2), "{:?} -> {:?}", s, o.next);
            }
        }
    }

    #[test]
    fn illegal_actions_are_rejected(pick in any::<prop::sample::Index>()) {
        let states = enumerate_states(3, 1);
        let s = states[pick.index(states.len())];
        let legal = legal_actions(&s, 3);
        let params = WerlmanParams::new(1.0, 0.1, Variant::Original);
        for a in WerlmanAction::ALL {
            let r = transition_outcomes(&s, a, &params, &cfg(0.3, 0.5, 3), 1);
            prop_assert_eq!(r.is_ok(), legal.contains(&a));
        }
    }
}

#[test]
fn reachable_states_are_enumerated() {
    let (k, pool) = (2, 1);
    let enumerated: HashSet<WerlmanState> = enumerate_states(k, pool).into_iter().collect();
    for v in [Variant::Original, Variant::NonPredictable] {
        let params = WerlmanParams::new(3.2, 0.3, v);
        let c = cfg(0.3, 0.5, k);
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([WerlmanState::INITIAL]);
        seen.insert(WerlmanState::INITIAL);
        while let Some(s) = queue.pop_front() {
            assert!(enumerated.contains(&s), "{v:?}: reachable state {s:?} not enumerated");
            for a in legal_actions(&s, k) {
                for o in transition_outcomes(&s, a, &params, &c, pool).unwrap() {
                    if o.prob > 0.0 && seen.insert(o.next) {
                        queue.push_back(o.next);
                    }
                }
            }
        }
        assert!(seen.len() > 10, "{v:?}: only {} states reached", seen.len());
    }
}

#[test]
fn state_carries_no_pool_preview() {
    let json = serde_json::to_value(WerlmanState::INITIAL).unwrap();
    let mut keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["a", "fork", "h", "l", "pool", "t_a", "t_h"]);
}

#[test]
fn variants_coincide_without_whales() {
    let c = cfg(0.3, 0.5, 5);
    let caps = Caps::default();
    let orig = build_mdp(&WerlmanParams::new(3.2, 0.0, Variant::Original), &c, &caps).unwrap();
    let np = build_mdp(&WerlmanParams::new(3.2, 0.0, Variant::NonPredictable), &c, &caps).unwrap();
    assert_eq!(orig.states, np.states);
    for s in 0..orig.mdp.num_states() {
        let (a, b) = (orig.mdp.choices(s), np.mdp.choices(s));
        assert_eq!(a.len(), b.len());
        for i in 0..a.len() {
            let mut x: Vec<_> = orig
                .mdp
                .transitions(s, i)
                .map(|t| (t.next, t.reward, t.canon, t.prob))
                .collect();
            let mut y: Vec<_> = np
                .mdp
                .transitions(s, i)
                .map(|t| (t.next, t.reward, t.canon, t.prob))
                .collect();
            x.sort_by(|p, q| p.partial_cmp(q).unwrap());
            y.sort_by(|p, q| p.partial_cmp(q).unwrap());
            assert_eq!(x.len(), y.len());
            for (p, q) in x.iter().zip(&y) {
                assert_eq!((p.0, p.1, p.2), (q.0, q.1, q.2));
                assert!((p.3 - q.3).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn honest_restriction_earns_honest_profit() {
    for v in [Variant::Original, Variant::NonPredictable] {
        let params = WerlmanParams::new(3.2, 0.01, v);
        let c = cfg(0.3, 0.5, 4);
        let model = build_mdp(&params, &c, &Caps::default()).unwrap();
        let honest = model.honest_restricted().unwrap();
        let sol = mdp::solve_average_reward(&honest, (0.0, 5.0), &SolverOptions::default()).unwrap();
        let want = params.honest_profit(0.3);
        assert!((sol.rho - want).abs() < 1e-6, "{v:?}: {} vs {}", sol.rho, want);
    }
}

#[test]
fn honest_agent_in_env_matches_formula() {
    let params = WerlmanParams::new(3.2, 0.05, Variant::NonPredictable);
    let mut env = WerlmanEnv::new(params, cfg(0.3, 0.5, 8), 2).unwrap();
    let seed: u64 = std::env::var("SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(11);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = BatchRatio::new(2_000);
    for _ in 0..2_000_000 {
        let a = honest_action(&env.state);
        let info = env.step(a, &mut rng).unwrap();
        acc.push(info.reward_adv, info.canonical_blocks as f64);
    }
    let want = params.honest_profit(0.3);
    assert!(
        (acc.ratio() - want).abs() <= 3.0 * acc.std_error(),
        "{} ± {} vs {}",
        acc.ratio(),
        acc.std_error(),
        want
    );
}

#[test]
fn optimal_policy_rollout_in_env_matches_solver() {
    let params = WerlmanParams::new(2.0, 0.05, Variant::Original);
    let c = cfg(0.35, 0.5, 6);
    let (model, sol) = solve(&params, &c, &Caps::default(), &SolverOptions::default()).unwrap();
    assert!(sol.rho > params.honest_profit(0.35));
    let index: HashMap<WerlmanState, usize> = model.states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut env = WerlmanEnv::new(params, c, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut acc = BatchRatio::new(10_000);
    for _ in 0..1_000_000 {
        let s = index[&env.state];
        let a = WerlmanAction::from_index(sol.policy.action(&model.mdp, s)).unwrap();
        let info = env.step(a, &mut rng).unwrap();
        acc.push(info.reward_adv, info.canonical_blocks as f64);
    }
    assert!(
        (acc.ratio() - sol.rho).abs() <= 3.0 * acc.std_error(),
        "rollout {} ± {} vs solver {}",
        acc.ratio(),
        acc.std_error(),
        sol.rho
    );
}

/// Textbook fixed-reward selfish-mining model on `(a, h, fork)` with fork
/// 0 = irrelevant, 1 = relevant, 2 = active.
fn fixed_reward_oracle(alpha: f64, gamma: f64, k: u8) -> Mdp {
    let mut ids = HashMap::new();
    let mut states = Vec::new();
    for a in 0..=k {
        for h in 0..=k {
            for f in 0..3u8 {
                ids.insert((a, h, f), states.len());
                states.push((a, h, f));
            }
        }
    }
    let id = |s: (u8, u8, u8)| ids[&s];
    let t = |next, prob, reward: u8, canon: u8| Transition {
        next,
        prob,
        reward: reward as f64,
        canon: canon as f64,
    };
    let block = |a: u8, h: u8, active: bool, r0: u8, c0: u8| -> Vec<Transition> {
        if active {
            vec![
                t(id((a + 1, h, 2)), alpha, r0, c0),
                t(id((a - h, 1, 1)), gamma * (1.0 - alpha), r0 + h, c0 + h),
                t(id((a, h + 1, 1)), (1.0 - gamma) * (1.0 - alpha), r0, c0),
            ]
        } else {
            vec![
                t(id((a + 1, h, 0)), alpha, r0, c0),
                t(id((a, h + 1, 1)), 1.0 - alpha, r0, c0),
            ]
        }
    };
    let mut table = Vec::new();
    for &(a, h, f) in &states {
        let below = a < k && h < k;
        let mut acts = vec![(0u8, block(0, 0, false, 0, h))];
        if a > h {
            acts.push((1, block(a - h - 1, 0, false, h + 1, h + 1)));
        }
        if below && f == 1 && h >= 1 && a >= h {
            acts.push((2, block(a, h, true, 0, 0)));
        }
        if below {
            acts.push((3, block(a, h, f == 2 && a >= h && h >= 1, 0, 0)));
        }
        table.push(acts);
    }
    let names = WerlmanAction::NAMES.iter().map(|s| s.to_string()).collect();
    Mdp::from_transitions(names, id((0, 0, 0)), &table).unwrap()
}

#[test]
fn zero_whale_fee_reduces_to_fixed_reward_selfish_mining() {
    let k = 8;
    let opts = ThresholdOptions::default();
    for gamma in [0.0, 0.5] {
        let oracle = threshold_search(
            |alpha| {
                let m = fixed_reward_oracle(alpha, gamma, k as u8);
                mdp::optimal_ratio_reaches(&m, alpha + 1e-6, &opts.solver)
            },
            opts.bracket,
            opts.tol,
        )
        .unwrap()
        .alpha()
        .unwrap();
        for v in [Variant::Original, Variant::NonPredictable] {
            let got = werlman_threshold(
                &WerlmanParams::new(0.0, 0.001, v),
                &cfg(0.3, gamma, k),
                &Caps::default(),
                &opts,
            )
            .unwrap()
            .alpha()
            .unwrap();
            assert!(
                (got - oracle).abs() <= 2.0 * opts.tol,
                "gamma {gamma} {v:?}: {got} vs oracle {oracle}"
            );
        }
    }
}

#[test]
fn fixed_reward_optimum_matches_oracle_at_fixed_share() {
    let opts = SolverOptions::default();
    let oracle = mdp::solve_average_reward(&fixed_reward_oracle(0.35, 0.5, 6), (0.0, 1.0), &opts).unwrap();
    let params = WerlmanParams::new(0.0, 0.2, Variant::NonPredictable);
    let (_, sol) = solve(&params, &cfg(0.35, 0.5, 6), &Caps::default(), &opts).unwrap();
    assert!((sol.rho - oracle.rho).abs() < 1e-6, "{} vs {}", sol.rho, oracle.rho);
}

#[test]
fn optimum_dominates_closed_form_strategies() {
    use volmine_core::closed_form::{eval, Strategy};
    let opts = SolverOptions::default();
    for f in [0.45, 3.2] {
        for alpha in [0.15, 0.22] {
            let c = cfg(alpha, 0.5, 10);
            let rho = |v| {
                solve(&WerlmanParams::new(f, 0.001, v), &c, &Caps::default(), &opts)
                    .unwrap()
                    .1
                    .rho
            };
            let (orig, np) = (rho(Variant::Original), rho(Variant::NonPredictable));
            let pi = |s| eval(s, alpha, 0.5, 0.001, f).unwrap().profit;
            let slack = 1e-6;
            assert!(
                orig >= pi(Strategy::Pi1Werlman) - slack,
                "F {f} alpha {alpha}: {orig} < pi1w"
            );
            assert!(
                np >= pi(Strategy::Pi1NonPredictable) - slack,
                "F {f} alpha {alpha}: {np} < pi1np"
            );
            assert!(
                np >= pi(Strategy::Pi2NonPredictable) - slack,
                "F {f} alpha {alpha}: {np} < pi2np"
            );
        }
    }
}
