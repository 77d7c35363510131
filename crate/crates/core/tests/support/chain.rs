//! Block-level simulation of the three whale-stealing strategies, one
//! strategy-table transition per step. Long private races are played out
//! block by block instead of using their expected values.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Pi1Werlman,
    Pi1NonPredictable,
    Pi2NonPredictable,
}

#[derive(Debug, Clone, Copy)]
pub struct Params {
    pub alpha: f64,
    pub g: f64,
    pub p: f64,
    pub f: f64,
}

/// Per-transition means with standard errors from batch means.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub n_h: (f64, f64),
    pub n_a: (f64, f64),
    pub r_a: (f64, f64),
    pub profit: (f64, f64),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum St {
    S00,
    S00Whale,
    S10,
    S11,
    S01,
    Race(u32),
    Behind(u32),
}

struct Ctx<'a, R: Rng> {
    rng: &'a mut R,
    prm: Params,
}

impl<R: Rng> Ctx<'_, R> {
    fn u(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn adv(&mut self) -> bool {
        self.u() < self.prm.alpha
    }

    fn whale(&mut self) -> bool {
        self.u() < self.prm.p
    }

    /// Plays a private race from lead 2 until the lead falls back to 1;
    /// returns the extra adversarial blocks and their total reward.
    fn lead_race(&mut self) -> (f64, f64) {
        let mut lead = 2;
        let (mut extra, mut reward) = (0.0, 0.0);
        while lead > 1 {
            if self.adv() {
                lead += 1;
                extra += 1.0;
                reward += 1.0 + if self.whale() { self.prm.f } else { 0.0 };
            } else {
                lead -= 1;
            }
        }
        (extra, reward)
    }
}

/// One transition: (next, honest canonical, adversarial canonical, reward).
fn transition<R: Rng>(which: Which, s: St, c: &mut Ctx<'_, R>) -> (St, f64, f64, f64) {
    let f = c.prm.f;
    match (which, s) {
        (Which::Pi1Werlman, St::S00) => {
            let adv = c.adv();
            let whale = c.whale();
            match (adv, whale) {
                (true, true) => (St::S10, 0.0, 0.0, 0.0),
                (true, false) => (St::S00, 0.0, 1.0, 1.0),
                (false, true) => (St::S00Whale, 1.0, 0.0, 0.0),
                (false, false) => (St::S00, 1.0, 0.0, 0.0),
            }
        }
        (Which::Pi1Werlman, St::S00Whale) => {
            let adv = c.adv();
            let next = if c.whale() { St::S00Whale } else { St::S00 };
            if adv {
                (next, 0.0, 1.0, 1.0 + f)
            } else {
                (next, 1.0, 0.0, 0.0)
            }
        }
        (Which::Pi1Werlman, St::S10) => {
            if c.adv() {
                let (extra, reward) = c.lead_race();
                let next = if c.whale() { St::S00Whale } else { St::S00 };
                (next, 0.0, 2.0 + extra, 2.0 + f + reward)
            } else {
                (St::S11, 0.0, 0.0, 0.0)
            }
        }
        (Which::Pi1Werlman, St::S11) => {
            let u = c.u();
            let a = c.prm.alpha;
            let next = if c.whale() { St::S00Whale } else { St::S00 };
            if u < a {
                (next, 0.0, 2.0, 2.0 + f)
            } else if u < a + (1.0 - a) * c.prm.g {
                (next, 1.0, 1.0, 1.0)
            } else {
                (next, 2.0, 0.0, 0.0)
            }
        }
        (Which::Pi1NonPredictable, St::S00) => {
            if c.adv() {
                if c.whale() {
                    (St::S00, 0.0, 1.0, 1.0 + f)
                } else {
                    (St::S10, 0.0, 0.0, 0.0)
                }
            } else {
                (St::S00, 1.0, 0.0, 0.0)
            }
        }
        (Which::Pi1NonPredictable, St::S10) => {
            if c.adv() {
                let second = 1.0 + if c.whale() { f } else { 0.0 };
                let (extra, reward) = c.lead_race();
                (St::S00, 0.0, 2.0 + extra, 1.0 + second + reward)
            } else {
                (St::S11, 0.0, 0.0, 0.0)
            }
        }
        (Which::Pi1NonPredictable, St::S11) => {
            let u = c.u();
            let a = c.prm.alpha;
            if u < a {
                let second = 1.0 + if c.whale() { f } else { 0.0 };
                (St::S00, 0.0, 2.0, 1.0 + second)
            } else if u < a + (1.0 - a) * c.prm.g {
                (St::S00, 1.0, 1.0, 1.0)
            } else {
                (St::S00, 2.0, 0.0, 0.0)
            }
        }
        (Which::Pi2NonPredictable, St::S00) => {
            let adv = c.adv();
            let whale = c.whale();
            match (adv, whale) {
                (true, true) => (St::S00, 0.0, 1.0, 1.0 + f),
                (true, false) => (St::S00, 0.0, 1.0, 1.0),
                (false, true) => (St::S01, 0.0, 0.0, 0.0),
                (false, false) => (St::S00, 1.0, 0.0, 0.0),
            }
        }
        (Which::Pi2NonPredictable, St::S01) | (Which::Pi2NonPredictable, St::Behind(_)) => {
            let i = if let St::Behind(i) = s { i } else { 0 };
            if c.adv() {
                (St::Race(i + 1), 0.0, 0.0, 0.0)
            } else if c.whale() {
                // Keep the new whale block, adopt everything below it.
                (St::S01, (i + 1) as f64, 0.0, 0.0)
            } else {
                (St::S00, (i + 2) as f64, 0.0, 0.0)
            }
        }
        (Which::Pi2NonPredictable, St::Race(i)) => {
            if c.adv() {
                let mut reward = 1.0 + f;
                for _ in 0..i {
                    reward += 1.0 + if c.whale() { f } else { 0.0 };
                }
                (St::S00, 0.0, (i + 1) as f64, reward)
            } else {
                (St::Behind(i), 0.0, 0.0, 0.0)
            }
        }
        _ => unreachable!("state not used by this strategy"),
    }
}

/// Runs `steps` transitions from the empty race.
pub fn simulate<R: Rng>(which: Which, prm: Params, steps: u64, batches: u64, rng: &mut R) -> Estimate {
    let mut c = Ctx { rng, prm };
    let mut s = St::S00;
    let per = steps / batches;
    let mut bh = Vec::with_capacity(batches as usize);
    let mut ba = Vec::with_capacity(batches as usize);
    let mut br = Vec::with_capacity(batches as usize);
    for _ in 0..batches {
        let (mut h, mut a, mut r) = (0.0, 0.0, 0.0);
        for _ in 0..per {
            let (next, dh, da, dr) = transition(which, s, &mut c);
            h += dh;
            a += da;
            r += dr;
            s = next;
        }
        bh.push(h / per as f64);
        ba.push(a / per as f64);
        br.push(r / per as f64);
    }
    let mean_se = |xs: &[f64]| {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    };
    let (h, a, r) = (mean_se(&bh), mean_se(&ba), mean_se(&br));
    let canon: Vec<f64> = bh.iter().zip(&ba).map(|(x, y)| x + y).collect();
    let ratio = r.0 / (h.0 + a.0);
    let resid: Vec<f64> = br.iter().zip(&canon).map(|(x, d)| x - ratio * d).collect();
    let (_, se_resid) = mean_se(&resid);
    Estimate {
        n_h: h,
        n_a: a,
        r_a: r,
        profit: (ratio, se_resid / (h.0 + a.0)),
    }
}
