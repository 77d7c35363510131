use alloc::format;

use crate::config::StepInfo;
use crate::error::{domain, Result};

/// Total adversary reward divided by elapsed time measured in units of
/// `normalization`.
pub fn time_averaged_profit(steps: &[StepInfo], normalization: f64) -> Result<f64> {
    if steps.is_empty() {
        return Err(domain("time-averaged profit of an empty step sequence"));
    }
    if !(normalization > 0.0) {
        return Err(domain(format!("normalization must be positive, got {normalization}")));
    }
    let (reward, elapsed) = steps
        .iter()
        .fold((0.0, 0.0), |(r, t), s| (r + s.reward_adv, t + s.elapsed));
    if elapsed <= 0.0 {
        return Err(domain("total elapsed time is zero"));
    }
    Ok(reward / (elapsed / normalization))
}

/// Relative profit gain over honest mining, in percent.
pub fn percentage_increase(profit: f64, honest_profit: f64) -> Result<f64> {
    if !(honest_profit > 0.0) {
        return Err(domain(format!("honest profit must be positive, got {honest_profit}")));
    }
    Ok(100.0 * (profit - honest_profit) / honest_profit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(r: f64, t: f64) -> StepInfo {
        StepInfo {
            reward_adv: r,
            canonical_blocks: 1,
            total_blocks: 1,
            elapsed: t,
        }
    }

    #[test]
    fn one_block_per_unit() {
        assert_eq!(time_averaged_profit(&[step(1.0, 10.0)], 10.0).unwrap(), 1.0);
    }

    #[test]
    fn zero_reward_gives_zero() {
        let steps = [step(0.0, 10.0); 7];
        assert_eq!(time_averaged_profit(&steps, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(time_averaged_profit(&[], 1.0).is_err());
        assert!(time_averaged_profit(&[step(1.0, 0.0)], 1.0).is_err());
        assert!(time_averaged_profit(&[step(1.0, 1.0)], 0.0).is_err());
    }

    #[test]
    fn percentage_examples() {
        assert_eq!(percentage_increase(1.0, 1.0).unwrap(), 0.0);
        assert!((percentage_increase(1.1, 1.0).unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(percentage_increase(0.5, 1.0).unwrap(), -50.0);
        assert!(percentage_increase(1.0, 0.0).is_err());
    }
}
