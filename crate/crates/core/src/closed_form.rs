//! Closed-form evaluation of three whale-stealing strategies.
//!
//! * `Pi1Werlman`: in the original environment, keep a fresh block private
//!   when a whale is seen in the mempool and try to orphan the honest block
//!   that takes it.
//! * `Pi1NonPredictable`: keep every whale-less block private and race.
//! * `Pi2NonPredictable`: never withhold; when an honest block carries a
//!   whale, keep mining on its parent to steal it.
//!
//! Counts and rewards are expected values per chain transition; the ratio
//! `R_A / (N_A + N_H)` is the profit per canonical block.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::threshold::{security_threshold, Threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "pi1w")]
    Pi1Werlman,
    #[serde(rename = "pi1np")]
    Pi1NonPredictable,
    #[serde(rename = "pi2np")]
    Pi2NonPredictable,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::Pi1Werlman,
        Strategy::Pi1NonPredictable,
        Strategy::Pi2NonPredictable,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Strategy::Pi1Werlman => "pi1w",
            Strategy::Pi1NonPredictable => "pi1np",
            Strategy::Pi2NonPredictable => "pi2np",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.id() == id)
    }
}

/// Long-run quantities of a strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyEval {
    #[serde(rename = "N_H")]
    pub n_h: f64,
    #[serde(rename = "N_A")]
    pub n_a: f64,
    #[serde(rename = "R_A")]
    pub r_a: f64,
    pub profit: f64,
    /// Stationary probability per state label.
    pub stationary: Vec<(String, f64)>,
}

impl StrategyEval {
    fn new(n_h: f64, n_a: f64, r_a: f64, stationary: Vec<(String, f64)>) -> Self {
        StrategyEval {
            n_h,
            n_a,
            r_a,
            profit: r_a / (n_a + n_h),
            stationary,
        }
    }

    pub fn stationary_total(&self) -> f64 {
        self.stationary.iter().map(|(_, p)| p).sum()
    }
}

fn check_common(g: f64, p: f64, f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&g) {
        return Err(domain(format!("g must lie in [0, 1], got {g}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("p must lie in [0, 1], got {p}")));
    }
    if !(f >= 0.0) {
        return Err(domain(format!("F must be non-negative, got {f}")));
    }
    Ok(())
}

fn check_escape_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(domain(format!("alpha must be positive, got {alpha}")));
    }
    if alpha >= 0.5 {
        return Err(domain(format!(
            "alpha = {alpha} >= 0.5: the expected escape length alpha/(1-2 alpha) diverges"
        )));
    }
    Ok(())
}

fn label(s: &str) -> String {
    String::from(s)
}

/// Strategy exploiting predictive capability in the original environment.
pub fn eval_pi1_werlman(alpha: f64, g: f64, p: f64, f: f64) -> Result<StrategyEval> {
    check_common(g, p, f)?;
    check_escape_alpha(alpha)?;
    let a = alpha;
    let e = a / (1.0 - 2.0 * a);
    let p00 = (1.0 - p) / (1.0 + p * (1.0 - p) * a * (1.0 - a));
    let p10 = a * p * p00;
    let p11 = (1.0 - a) * p10;
    let p00w = 1.0 - p00 - p10 - p11;
    let n_h = p00 * (1.0 - a) + 2.0 * p11 * (1.0 - a) * (1.0 - g) + p11 * (1.0 - a) * g + p00w * (1.0 - a);
    let n_a = p00 * a * (1.0 - p) + (2.0 + e) * p10 * a + 2.0 * p11 * a + p11 * (1.0 - a) * g + p00w * a;
    let r_a = p00 * a * (1.0 - p)
        + p00w * a * (1.0 + f)
        + p11 * a * (2.0 + f)
        + p11 * (1.0 - a) * g
        + p10 * a * (2.0 + f)
        + p10 * a * e * (1.0 + p * f);
    Ok(StrategyEval::new(
        n_h,
        n_a,
        r_a,
        alloc::vec![
            (label("S_{0,0}"), p00),
            (label("S_{0,0}'"), p00w),
            (label("S_{1,0}"), p10),
            (label("S_{1,1}"), p11),
        ],
    ))
}

/// Withholding strategy without predictive capability.
pub fn eval_pi1_nonpredictable(alpha: f64, g: f64, p: f64, f: f64) -> Result<StrategyEval> {
    check_common(g, p, f)?;
    check_escape_alpha(alpha)?;
    let a = alpha;
    let e = a / (1.0 - 2.0 * a);
    let p00 = 1.0 / (1.0 + (1.0 - p) * a * (2.0 - a));
    let p10 = a * (1.0 - p) * p00;
    let p11 = (1.0 - a) * p10;
    let n_h = p00 * (1.0 - a) + p11 * (1.0 - a) * g + 2.0 * p11 * (1.0 - a) * (1.0 - g);
    let n_a = p00 * a * p + p10 * a * (2.0 + e) + 2.0 * p11 * a + p11 * (1.0 - a) * g;
    let r_a = p00 * a * p * (1.0 + f)
        + p10 * a * (1.0 + (1.0 + p * f) * (1.0 + e))
        + p11 * (1.0 - a) * g
        + p11 * a * (2.0 + p * f);
    Ok(StrategyEval::new(
        n_h,
        n_a,
        r_a,
        alloc::vec![
            (label("S_{0,0}"), p00),
            (label("S_{1,0}"), p10),
            (label("S_{1,1}"), p11),
        ],
    ))
}

/// Whale-undercutting strategy without predictive capability.
pub fn eval_pi2_nonpredictable(alpha: f64, g: f64, p: f64, f: f64) -> Result<StrategyEval> {
    check_common(g, p, f)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let a = alpha;
    let q = 1.0 - a * (1.0 - a);
    let d = 1.0 - (1.0 - p) * a * (1.0 - a);
    let p00 = (1.0 - (1.0 - a) * (a + p)) / d;
    let p01 = (1.0 - a) * p * q / d;
    let n_h = p00 * (1.0 - a) * (1.0 - p)
        + p01 * (1.0 - a) * p
        + 2.0 * p01 * (1.0 - a) * (1.0 - p)
        + p01 * a * (1.0 - a) * (1.0 - a) / (q * q)
        + p01 * (2.0 - p) * a * (1.0 - a) * (1.0 - a) / q;
    let head = p01 * a * a / q;
    let n_a = head * (1.0 / q + 1.0) + p00 * a;
    let r_a = head * ((1.0 + p * f) / q + (1.0 + f)) + p00 * a * (1.0 + p * f);

    let mut stationary = alloc::vec![(label("S_{0,0}"), p00), (label("S_{0,1}"), p01)];
    // P_{i,i} = alpha P_{0,1} (alpha (1 - alpha))^{i-1}, P_{i,i+1} = (1 - alpha) P_{i,i}.
    let ratio = a * (1.0 - a);
    let mut pii = a * p01;
    let mut i = 1usize;
    while pii > 1e-18 && i <= 10_000 {
        stationary.push((format!("S_{{{i},{i}}}"), pii));
        stationary.push((format!("S_{{{i},{}}}", i + 1), (1.0 - a) * pii));
        pii *= ratio;
        i += 1;
    }
    Ok(StrategyEval::new(n_h, n_a, r_a, stationary))
}

pub fn eval(strategy: Strategy, alpha: f64, g: f64, p: f64, f: f64) -> Result<StrategyEval> {
    match strategy {
        Strategy::Pi1Werlman => eval_pi1_werlman(alpha, g, p, f),
        Strategy::Pi1NonPredictable => eval_pi1_nonpredictable(alpha, g, p, f),
        Strategy::Pi2NonPredictable => eval_pi2_nonpredictable(alpha, g, p, f),
    }
}

/// Share bracket searched by [`strategy_threshold`]; it stays inside the
/// domain of every evaluator.
pub const THRESHOLD_BRACKET: (f64, f64) = (1e-6, 0.4999);

/// Smallest share at which `strategy` beats honest mining by `epsilon`.
pub fn strategy_threshold(strategy: Strategy, g: f64, p: f64, f: f64, epsilon: f64, tol: f64) -> Result<Threshold> {
    check_common(g, p, f)?;
    security_threshold(
        |alpha| Ok(eval(strategy, alpha, g, p, f)?.profit - alpha * (1.0 + f * p)),
        epsilon,
        THRESHOLD_BRACKET,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi1w_without_whales_is_honest() {
        let ev = eval_pi1_werlman(0.3, 0.5, 0.0, 3.2).unwrap();
        assert_eq!(ev.stationary[0].1, 1.0);
        assert!((ev.profit - 0.3).abs() < 1e-15);
    }

    #[test]
    fn pi1np_all_whales_publishes_immediately() {
        let ev = eval_pi1_nonpredictable(0.3, 0.5, 1.0, 3.2).unwrap();
        assert!((ev.profit - 0.3 * 4.2).abs() < 1e-12);
    }

    #[test]
    fn pi2np_without_whales_is_honest() {
        let ev = eval_pi2_nonpredictable(0.3, 0.5, 0.0, 3.2).unwrap();
        assert!((ev.profit - 0.3).abs() < 1e-15);
    }

    #[test]
    fn stationary_sums_to_one() {
        for s in Strategy::ALL {
            let ev = eval(s, 0.25, 0.5, 0.01, 1.0).unwrap();
            assert!((ev.stationary_total() - 1.0).abs() < 1e-10, "{s:?}");
            let ev = eval(s, 0.3, 0.5, 0.001, 3.2).unwrap();
            assert!((ev.stationary_total() - 1.0).abs() < 1e-10, "{s:?}");
        }
    }

    #[test]
    fn escape_term_domain() {
        let err = eval_pi1_werlman(0.5, 0.5, 0.001, 1.0).unwrap_err();
        assert!(format!("{err}").contains("alpha/(1-2 alpha)"));
        assert!(eval_pi1_nonpredictable(0.6, 0.5, 0.001, 1.0).is_err());
        assert!(eval_pi2_nonpredictable(0.6, 0.5, 0.001, 1.0).is_ok());
    }

    #[test]
    fn small_share_limit() {
        // A vanishing adversary publishes whale blocks at once and wins the
        // race for a withheld block only through the g share of honest power.
        let (a, g, p, f) = (1e-7, 0.5, 0.001, 3.2);
        let ev = eval_pi1_nonpredictable(a, g, p, f).unwrap();
        let limit = a * (p * (1.0 + f) + (1.0 - p) * g);
        assert!((ev.profit / limit - 1.0).abs() < 1e-5);
    }

    #[test]
    fn pi2np_without_fee_premium_only_pays_for_large_shares() {
        for alpha in [0.05, 0.15, 0.25, 0.35, 0.4] {
            let ev = eval_pi2_nonpredictable(alpha, 0.5, 0.001, 0.0).unwrap();
            assert!(ev.profit < alpha, "{alpha}");
        }
        let t = strategy_threshold(Strategy::Pi2NonPredictable, 0.5, 0.001, 0.0, 1e-6, 1e-4).unwrap();
        assert!(t.alpha().unwrap() > 0.4);
    }
}
