//! Fee-band mempool: weight-time growth per fee band, block packing under
//! the 1 vMB limit, base-fee extraction and the time-fee regressions used
//! to calibrate the simpler models from block data.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::lstsq;

/// Block weight limit in vBytes.
pub const BLOCK_VBYTES: f64 = 1_000_000.0;

/// Satoshis per BTC.
pub const SAT_PER_BTC: f64 = 1e8;

/// Cumulative arriving weight (vBytes) as a function of elapsed minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthFn {
    Linear {
        intercept: f64,
        slope: f64,
    },
    /// Coefficients in ascending powers, at most cubic.
    Poly {
        coeffs: Vec<f64>,
    },
    /// `a ln(t + b) + c`.
    Log {
        a: f64,
        b: f64,
        c: f64,
    },
}

impl GrowthFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            GrowthFn::Linear { intercept, slope } => intercept + slope * t,
            GrowthFn::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            GrowthFn::Log { a, b, c } => a * libm::log(t + b) + c,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            GrowthFn::Linear { slope, .. } => *slope,
            GrowthFn::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, c)| acc * t + i as f64 * c),
            GrowthFn::Log { a, b, .. } => a / (t + b),
        }
    }

    /// Checks that the function is non-negative and non-decreasing on
    /// `[0, horizon]`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        match self {
            GrowthFn::Poly { coeffs } if coeffs.is_empty() || coeffs.len() > 4 => {
                return Err(domain(format!(
                    "polynomial growth needs 1 to 4 coefficients, got {}",
                    coeffs.len()
                )))
            }
            GrowthFn::Log { b, .. } if !(*b > 0.0) => return Err(domain(format!("log growth needs b > 0, got {b}"))),
            _ => {}
        }
        const GRID: usize = 64;
        for i in 0..=GRID {
            let t = horizon * i as f64 / GRID as f64;
            if self.eval(t) < -1e-9 || self.derivative(t) < -1e-9 {
                return Err(domain(format!("growth function decreases or is negative at t = {t}")));
            }
        }
        Ok(())
    }
}

/// Fee bands in ascending sat/vByte with one growth function per band.
/// Band 0 is the base fee and is never exhausted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeeBandModel {
    pub bands: Vec<f64>,
    pub growth: Vec<GrowthFn>,
    #[serde(default = "default_true")]
    pub base_band_unlimited: bool,
}

fn default_true() -> bool {
    true
}

impl FeeBandModel {
    pub fn new(bands: Vec<f64>, growth: Vec<GrowthFn>) -> Result<Self> {
        let m = FeeBandModel {
            bands,
            growth,
            base_band_unlimited: true,
        };
        m.validate(120.0)?;
        Ok(m)
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        if self.bands.is_empty() || self.bands.len() != self.growth.len() {
            return Err(domain(format!(
                "{} bands but {} growth functions",
                self.bands.len(),
                self.growth.len()
            )));
        }
        if !(self.bands[0] >= 0.0) || self.bands.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("fee bands must be non-negative and strictly ascending"));
        }
        for g in &self.growth {
            g.validate(horizon)?;
        }
        Ok(())
    }

    pub fn base_fee(&self) -> f64 {
        self.bands[0]
    }

    /// Mempool at the reference time: each band holds `growth_j(0)`.
    pub fn initial_pool(&self) -> PoolState {
        PoolState {
            weights: self.growth.iter().map(|g| g.eval(0.0).max(0.0)).collect(),
            clock: 0.0,
        }
    }

    /// Synthetic five-band day: base fee `base` sat/vB, concave growth in the
    /// lower bands and convex growth in the top band. Weights are in vBytes
    /// over minutes since the last block.
    pub fn synthetic(base: f64) -> Result<Self> {
        let bands = vec![base, 250.0, 320.0, 450.0, 700.0];
        let growth = vec![
            GrowthFn::Linear {
                intercept: 0.0,
                slope: 0.0,
            },
            GrowthFn::Log {
                a: 250_000.0,
                b: 5.0,
                c: -250_000.0 * libm::log(5.0),
            },
            GrowthFn::Log {
                a: 120_000.0,
                b: 8.0,
                c: -120_000.0 * libm::log(8.0),
            },
            GrowthFn::Linear {
                intercept: 0.0,
                slope: 6_000.0,
            },
            GrowthFn::Poly {
                coeffs: vec![0.0, 1_000.0, 60.0],
            },
        ];
        if !(base < bands[1]) {
            return Err(domain(format!(
                "base fee {base} must lie below the next band {}",
                bands[1]
            )));
        }
        Self::new(bands, growth)
    }
}

/// Weights per band (vBytes) and minutes since the reference time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolState {
    pub weights: Vec<f64>,
    pub clock: f64,
}

/// Adds the weight that arrives between `clock` and `clock + dt`.
pub fn advance_pool(pool: &PoolState, model: &FeeBandModel, dt: f64) -> PoolState {
    let dt = dt.max(0.0);
    let end = pool.clock + dt;
    PoolState {
        weights: pool
            .weights
            .iter()
            .zip(&model.growth)
            .map(|(w, g)| w + (g.eval(end) - g.eval(pool.clock)).max(0.0))
            .collect(),
        clock: end,
    }
}

/// Result of filling one block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedBlock {
    /// Total fee in BTC.
    pub fee: f64,
    /// Total fee in satoshis.
    pub fee_sat: f64,
    /// vBytes taken from each band.
    pub weight_by_band: Vec<f64>,
}

impl PackedBlock {
    pub fn weight(&self) -> f64 {
        self.weight_by_band.iter().sum()
    }
}

/// Fills a block from the highest band down, up to `limit` vBytes. With a
/// fee cap (BTC) the fill stops before the total fee would exceed the cap,
/// in whole vBytes, so the block may be underweight.
pub fn pack_block_with_limit(
    pool: &PoolState,
    model: &FeeBandModel,
    limit: f64,
    fee_cap: Option<f64>,
) -> Result<(PackedBlock, PoolState)> {
    if let Some(cap) = fee_cap {
        if !(cap >= 0.0) {
            return Err(domain(format!("fee cap must be non-negative, got {cap}")));
        }
    }
    if pool.weights.len() != model.bands.len() {
        return Err(domain("pool and model band counts differ"));
    }
    let cap_sat = fee_cap.map(|c| c * SAT_PER_BTC);
    let mut left = limit;
    let mut fee_sat = 0.0;
    let mut taken = vec![0.0; pool.weights.len()];
    let mut after = pool.clone();
    for j in (0..pool.weights.len()).rev() {
        if left <= 0.0 {
            break;
        }
        let rate = model.bands[j];
        let avail = if j == 0 && model.base_band_unlimited {
            f64::INFINITY
        } else {
            pool.weights[j]
        };
        let mut take = avail.min(left);
        if let Some(cap) = cap_sat {
            if rate > 0.0 {
                let room = libm::floor((cap - fee_sat) / rate + 1e-9).max(0.0);
                take = take.min(room);
            }
        }
        if take <= 0.0 {
            continue;
        }
        taken[j] = take;
        fee_sat += take * rate;
        left -= take;
        if !(j == 0 && model.base_band_unlimited) {
            after.weights[j] -= take;
        }
    }
    Ok((
        PackedBlock {
            fee: fee_sat / SAT_PER_BTC,
            fee_sat,
            weight_by_band: taken,
        },
        after,
    ))
}

/// [`pack_block_with_limit`] with the 1 vMB limit.
pub fn pack_block(pool: &PoolState, model: &FeeBandModel, fee_cap: Option<f64>) -> Result<(PackedBlock, PoolState)> {
    pack_block_with_limit(pool, model, BLOCK_VBYTES, fee_cap)
}

/// Weight observed in one band at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandWeight {
    pub band: f64,
    pub weight: f64,
}

/// Mempool snapshot: weight per fee level at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub bands: Vec<BandWeight>,
}

impl Snapshot {
    /// Weight paying at least `fee` sat/vB.
    pub fn weight_at_or_above(&self, fee: f64) -> f64 {
        self.bands.iter().filter(|b| b.band >= fee).map(|b| b.weight).sum()
    }
}

/// Highest fee level such that every snapshot holds at least 1 vMB paying
/// that fee or more; the lowest observed level when none qualifies.
pub fn extract_base_fee(snapshots: &[Snapshot]) -> f64 {
    let mut levels: Vec<f64> = snapshots.iter().flat_map(|s| s.bands.iter().map(|b| b.band)).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    for &f in &levels {
        if snapshots.iter().all(|s| s.weight_at_or_above(f) >= BLOCK_VBYTES) {
            return f;
        }
    }
    levels.last().copied().unwrap_or(0.0)
}

/// One mined block from historical data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub height: u64,
    pub timestamp: i64,
    /// Minutes since the parent block.
    #[serde(rename = "gen_time")]
    pub generation_time: f64,
    /// Total transaction fee in BTC.
    #[serde(rename = "fee")]
    pub total_fee: f64,
    #[serde(rename = "parent_gen_time", default)]
    pub parent_generation_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub fee0: f64,
    pub r_fee: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r_squared: f64,
}

impl LogFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.a * libm::log(t + self.b) + self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
    /// Whether the block's own generation time carries the larger slope.
    pub own_time_dominates: bool,
}

fn r_squared(y: &[f64], fitted: impl Iterator<Item = f64>) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ss_res: f64 = y.iter().zip(fitted).map(|(v, f)| (v - f) * (v - f)).sum();
    if ss_tot <= 0.0 {
        return if ss_res <= 1e-24 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

/// Least-squares polynomial of the given degree through `(t, y)` points.
pub fn fit_poly(points: &[(f64, f64)], degree: usize) -> Result<(Vec<f64>, f64)> {
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|&(t, _)| (0..=degree).map(|d| libm::pow(t, d as f64)).collect())
        .collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let coeffs = lstsq(&rows, &y)?;
    let g = GrowthFn::Poly { coeffs: coeffs.clone() };
    let r2 = r_squared(&y, points.iter().map(|p| g.eval(p.0)));
    Ok((coeffs, r2))
}

/// Ordinary least squares `fee = fee0 + r_fee t` on generation times.
pub fn fit_linear(blocks: &[BlockRecord]) -> Result<LinearFit> {
    let points: Vec<(f64, f64)> = blocks.iter().map(|b| (b.generation_time, b.total_fee)).collect();
    let (c, r2) = fit_poly(&points, 1)?;
    Ok(LinearFit {
        fee0: c[0],
        r_fee: c[1],
        r_squared: r2,
    })
}

/// `a ln(t + b) + c` by Gauss-Newton with backtracking, started from the
/// best grid value of `b` with `a` and `c` solved exactly.
pub fn fit_log_points(points: &[(f64, f64)]) -> Result<LogFit> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("log fit needs 3 points, got {}", points.len())));
    }
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let t_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let t_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let spread = (t_max - t_min).max(1.0);
    let b_floor = -t_min;
    let sse = |a: f64, b: f64, c: f64| -> f64 {
        points
            .iter()
            .map(|&(t, v)| {
                let e = v - (a * libm::log(t + b) + c);
                e * e
            })
            .sum()
    };
    let profile = |b: f64| -> Option<(f64, f64)> {
        let rows: Vec<Vec<f64>> = points.iter().map(|&(t, _)| vec![libm::log(t + b), 1.0]).collect();
        lstsq(&rows, &y).ok().map(|c| (c[0], c[1]))
    };

    let mut best: Option<(f64, f64, f64, f64)> = None;
    for k in 0..=120 {
        let off = 1e-3 * libm::pow(1e4 * spread, k as f64 / 120.0);
        let b = b_floor + off;
        if let Some((a, c)) = profile(b) {
            let s = sse(a, b, c);
            if best.map_or(true, |x| s < x.3) {
                best = Some((a, b, c, s));
            }
        }
    }
    let (mut a, mut b, mut c, mut s) = match best {
        Some(x) => x,
        None => {
            return Ok(LogFit {
                a: 0.0,
                b: 1.0 + b_floor,
                c: mean,
                r_squared: r_squared(&y, points.iter().map(|_| mean)),
            })
        }
    };
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    if a.abs() * libm::log1p(spread) <= 1e-12 * scale {
        return Ok(LogFit {
            a: 0.0,
            b,
            c: mean,
            r_squared: r_squared(&y, points.iter().map(|_| mean)),
        });
    }

    const MAX_ITER: usize = 200;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let rows: Vec<Vec<f64>> = points
            .iter()
            .map(|&(t, _)| vec![libm::log(t + b), a / (t + b), 1.0])
            .collect();
        let resid: Vec<f64> = points.iter().map(|&(t, v)| v - (a * libm::log(t + b) + c)).collect();
        let step = match lstsq(&rows, &resid) {
            Ok(s) => s,
            Err(_) => {
                converged = true;
                break;
            }
        };
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-10 {
            let (na, nb, nc) = (a + lambda * step[0], b + lambda * step[1], c + lambda * step[2]);
            if nb > b_floor {
                let ns = sse(na, nb, nc);
                if ns < s {
                    let small = (lambda * step[1]).abs() <= 1e-13 * (1.0 + b.abs()) && (s - ns) <= 1e-15 * s;
                    a = na;
                    b = nb;
                    c = nc;
                    s = ns;
                    improved = true;
                    if small {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved || converged || s <= 1e-30 * scale * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: MAX_ITER,
            residual: s,
        });
    }
    Ok(LogFit {
        a,
        b,
        c,
        r_squared: r_squared(&y, points.iter().map(|&(t, _)| a * libm::log(t + b) + c)),
    })
}

pub fn fit_log(blocks: &[BlockRecord]) -> Result<LogFit> {
    let points: Vec<(f64, f64)> = blocks.iter().map(|b| (b.generation_time, b.total_fee)).collect();
    fit_log_points(&points)
}

/// Plane `fee = c0 + c1 t + c2 t_parent`.
pub fn fit_bivariate(blocks: &[BlockRecord]) -> Result<BivariateFit> {
    let mut rows = Vec::with_capacity(blocks.len());
    let mut y = Vec::with_capacity(blocks.len());
    for b in blocks {
        let tp = b
            .parent_generation_time
            .ok_or_else(|| Error::Fit(format!("block {} has no parent generation time", b.height)))?;
        rows.push(vec![1.0, b.generation_time, tp]);
        y.push(b.total_fee);
    }
    let c = lstsq(&rows, &y)?;
    let r2 = r_squared(&y, rows.iter().map(|r| c[0] + c[1] * r[1] + c[2] * r[2]));
    Ok(BivariateFit {
        c0: c[0],
        c1: c[1],
        c2: c[2],
        r_squared: r2,
        own_time_dominates: c[1] > c[2],
    })
}

/// Best growth function by R² among linear, quadratic, cubic and
/// logarithmic fits that are non-negative and non-decreasing over the
/// observed time range.
pub fn fit_growth(points: &[(f64, f64)]) -> Result<(GrowthFn, f64)> {
    let horizon = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let mut best: Option<(GrowthFn, f64)> = None;
    let mut consider = |g: GrowthFn, r2: f64| {
        if g.validate(horizon).is_ok() && best.as_ref().map_or(true, |b| r2 > b.1) {
            best = Some((g, r2));
        }
    };
    for degree in 1..=3 {
        if let Ok((c, r2)) = fit_poly(points, degree) {
            let g = if degree == 1 {
                GrowthFn::Linear {
                    intercept: c[0],
                    slope: c[1],
                }
            } else {
                GrowthFn::Poly { coeffs: c }
            };
            consider(g, r2);
        }
    }
    if let Ok(f) = fit_log_points(points) {
        if f.b > 0.0 {
            consider(GrowthFn::Log { a: f.a, b: f.b, c: f.c }, f.r_squared);
        }
    }
    best.ok_or_else(|| Error::Fit("no growth family is non-decreasing on the data".into()))
}

/// Fits one growth function per band from `(minutes, weight)` series.
pub fn fit_band_model(bands: Vec<f64>, series: &[Vec<(f64, f64)>]) -> Result<FeeBandModel> {
    if bands.len() != series.len() {
        return Err(domain("one weight series per band is required"));
    }
    let growth = series
        .iter()
        .map(|s| fit_growth(s).map(|g| g.0))
        .collect::<Result<Vec<_>>>()?;
    FeeBandModel::new(bands, growth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(f: impl Fn(f64) -> f64, ts: &[f64]) -> Vec<BlockRecord> {
        ts.iter()
            .enumerate()
            .map(|(i, &t)| BlockRecord {
                height: i as u64,
                timestamp: 0,
                generation_time: t,
                total_fee: f(t),
                parent_generation_time: None,
            })
            .collect()
    }

    #[test]
    fn linear_exact() {
        let f = fit_linear(&blocks(|t| 0.1 + 0.01 * t, &[1.0, 4.0, 9.0, 16.0])).unwrap();
        assert!((f.fee0 - 0.1).abs() < 1e-12 && (f.r_fee - 0.01).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let two = fit_linear(&blocks(|t| t / 10.0, &[10.0, 20.0])).unwrap();
        assert!(two.fee0.abs() < 1e-12 && (two.r_fee - 0.1).abs() < 1e-12);
        assert!(fit_linear(&blocks(|_| 1.0, &[5.0, 5.0, 5.0])).is_err());
    }

    #[test]
    fn log_recovers_generator() {
        let ts: Vec<f64> = (0..60).map(|i| 0.5 + i as f64).collect();
        let f = fit_log(&blocks(|t| 0.6414 * libm::log(t + 6.5209) - 0.8419, &ts)).unwrap();
        assert!((f.a - 0.6414).abs() < 1e-4, "{f:?}");
        assert!((f.b - 6.5209).abs() < 1e-4, "{f:?}");
        assert!((f.c + 0.8419).abs() < 1e-4, "{f:?}");
    }

    #[test]
    fn log_constant_data_degenerates_to_mean() {
        let f = fit_log(&blocks(|_| 2.5, &[1.0, 2.0, 3.0, 7.0])).unwrap();
        assert_eq!(f.a, 0.0);
        assert!((f.c - 2.5).abs() < 1e-12);
    }

    #[test]
    fn bivariate_plane() {
        let bs: Vec<BlockRecord> = (0..20)
            .map(|i| {
                let t1 = (i * 7 % 13) as f64;
                let t2 = (i * 5 % 11) as f64;
                BlockRecord {
                    height: i,
                    timestamp: 0,
                    generation_time: t1,
                    total_fee: 0.1697 + 0.0079 * t1 + 0.0046 * t2,
                    parent_generation_time: Some(t2),
                }
            })
            .collect();
        let f = fit_bivariate(&bs).unwrap();
        assert!((f.c0 - 0.1697).abs() < 1e-6 && (f.c1 - 0.0079).abs() < 1e-6 && (f.c2 - 0.0046).abs() < 1e-6);
        assert!(f.own_time_dominates);
    }

    #[test]
    fn packing_examples() {
        let flat = FeeBandModel::new(
            vec![200.0],
            vec![GrowthFn::Linear {
                intercept: 0.0,
                slope: 0.0,
            }],
        )
        .unwrap();
        let (b, _) = pack_block(&flat.initial_pool(), &flat, None).unwrap();
        assert!((b.fee - 2.0).abs() < 1e-12);

        let model = FeeBandModel::new(
            vec![100.0, 300.0],
            vec![
                GrowthFn::Linear {
                    intercept: 0.0,
                    slope: 0.0,
                },
                GrowthFn::Linear {
                    intercept: 400_000.0,
                    slope: 0.0,
                },
            ],
        )
        .unwrap();
        let (b, after) = pack_block(&model.initial_pool(), &model, None).unwrap();
        assert!((b.fee - 1.8).abs() < 1e-12);
        assert_eq!(after.weights[1], 0.0);

        let (capped, _) = pack_block(&model.initial_pool(), &model, Some(0.5)).unwrap();
        assert!(capped.fee <= 0.5 && capped.fee > 0.5 - 300e-8);
        assert!(pack_block(&model.initial_pool(), &model, Some(-1.0)).is_err());
    }

    #[test]
    fn base_fee_extraction() {
        let snap = |t: f64, rows: &[(f64, f64)]| Snapshot {
            t,
            bands: rows.iter().map(|&(band, weight)| BandWeight { band, weight }).collect(),
        };
        let s = [
            snap(0.0, &[(1.0, 5e6), (80.0, 2e6), (120.0, 3e5)]),
            snap(1.0, &[(1.0, 5e6), (80.0, 2e6), (150.0, 1e5)]),
        ];
        assert_eq!(extract_base_fee(&s), 80.0);
        let sparse = [s[0].clone(), snap(2.0, &[(1.0, 2e5), (80.0, 1e5)])];
        assert_eq!(extract_base_fee(&sparse), 1.0);
    }

    #[test]
    fn advance_examples() {
        let m = FeeBandModel::synthetic(200.0).unwrap();
        let p = m.initial_pool();
        assert_eq!(advance_pool(&p, &m, 0.0), p);
        let lin = FeeBandModel::new(
            vec![1.0, 5.0],
            vec![
                GrowthFn::Linear {
                    intercept: 0.0,
                    slope: 0.0,
                },
                GrowthFn::Linear {
                    intercept: 0.0,
                    slope: 100.0,
                },
            ],
        )
        .unwrap();
        assert!((advance_pool(&lin.initial_pool(), &lin, 10.0).weights[1] - 1000.0).abs() < 1e-9);
        let top = m.bands.len() - 1;
        let first = advance_pool(&p, &m, 10.0);
        let second = advance_pool(&first, &m, 10.0);
        assert!(second.weights[top] - first.weights[top] > first.weights[top] - p.weights[top]);
    }
}
