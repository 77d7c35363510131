//! Exhaustive block packing over whole units of weight.

use rand::Rng;

/// Pool of `weights[j]` units in band `j` paying `rates[j]` sat/vB.
#[derive(Debug, Clone)]
pub struct UnitPool {
    pub rates: Vec<u64>,
    pub weights: Vec<u64>,
}

/// Highest total fee in sats over every fill of at most `limit` units, each
/// unit being `unit_vb` vBytes, optionally capped at `cap_sat`.
pub fn best_fee_sat(pool: &UnitPool, limit: u64, unit_vb: u64, cap_sat: Option<u64>) -> u64 {
    fn go(j: usize, pool: &UnitPool, left: u64, unit_vb: u64, cap: Option<u64>, fee: u64, best: &mut u64) {
        if j == pool.rates.len() {
            if cap.map_or(true, |c| fee <= c) && fee > *best {
                *best = fee;
            }
            return;
        }
        for x in 0..=pool.weights[j].min(left) {
            go(
                j + 1,
                pool,
                left - x,
                unit_vb,
                cap,
                fee + x * unit_vb * pool.rates[j],
                best,
            );
        }
    }
    let mut best = 0;
    go(0, pool, limit, unit_vb, cap_sat, 0, &mut best);
    best
}

/// Random pool with 1 to 4 strictly ascending integer bands and up to
/// `max_units` units per band.
pub fn random_pool<R: Rng>(rng: &mut R, max_units: u64) -> UnitPool {
    let n = rng.random_range(1..=4usize);
    let mut rates: Vec<u64> = Vec::with_capacity(n);
    while rates.len() < n {
        let r = rng.random_range(1..=500u64);
        if !rates.contains(&r) {
            rates.push(r);
        }
    }
    rates.sort_unstable();
    let weights = (0..n).map(|_| rng.random_range(0..=max_units)).collect();
    UnitPool { rates, weights }
}
