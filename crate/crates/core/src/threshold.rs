use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Result of a security-threshold search over a bracket of mining shares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Threshold {
    /// Smallest share (within tolerance) at which the deviation pays off.
    Found { alpha: f64 },
    /// The deviation never pays off inside the bracket.
    AboveBracket,
    /// The deviation already pays off at the lower end of the bracket.
    AtOrBelowLower { alpha: f64 },
}

impl Threshold {
    /// Threshold value, reporting "above bracket" as `None`.
    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Threshold::Found { alpha } | Threshold::AtOrBelowLower { alpha } => Some(alpha),
            Threshold::AboveBracket => None,
        }
    }

    /// Threshold value with "above bracket" mapped to the bracket's upper end.
    pub fn alpha_or(&self, upper: f64) -> f64 {
        self.alpha().unwrap_or(upper)
    }
}

/// Bisection for the smallest share `alpha` in `bracket` with `gain(alpha) >= epsilon`.
///
/// `gain` must be deterministic and non-decreasing in `alpha`. The returned
/// share `a` satisfies `gain(a) >= epsilon` while a share at most `tol`
/// smaller was evaluated below `epsilon`.
pub fn security_threshold<G>(mut gain: G, epsilon: f64, bracket: (f64, f64), tol: f64) -> Result<Threshold>
where
    G: FnMut(f64) -> Result<f64>,
{
    threshold_search(|a| Ok(gain(a)? >= epsilon), bracket, tol)
}

/// Bisection on a monotone predicate: finds the smallest share at which
/// `exceeds` turns true.
pub fn threshold_search<P>(mut exceeds: P, bracket: (f64, f64), tol: f64) -> Result<Threshold>
where
    P: FnMut(f64) -> Result<bool>,
{
    let (mut lo, mut hi) = bracket;
    if !(tol > 0.0) {
        return Err(domain(format!("bisection tolerance must be positive, got {tol}")));
    }
    if !(lo < hi) {
        return Err(domain(format!("empty bracket [{lo}, {hi}]")));
    }
    if !exceeds(hi)? {
        return Ok(Threshold::AboveBracket);
    }
    if exceeds(lo)? {
        return Ok(Threshold::AtOrBelowLower { alpha: lo });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if exceeds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Threshold::Found { alpha: hi })
}
