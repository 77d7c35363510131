//! Batch-means error estimates for Monte-Carlo ratios and means.

/// Standard error of `Σ num / Σ den` estimated from equally sized batches
/// with the delta method.
pub fn ratio_std_error(num: &[f64], den: &[f64]) -> f64 {
    let b = num.len().min(den.len());
    if b < 2 {
        return f64::INFINITY;
    }
    let total_num: f64 = num[..b].iter().sum();
    let total_den: f64 = den[..b].iter().sum();
    if total_den == 0.0 {
        return f64::INFINITY;
    }
    let ratio = total_num / total_den;
    let mean_den = total_den / b as f64;
    let ss: f64 = num[..b]
        .iter()
        .zip(&den[..b])
        .map(|(n, d)| {
            let e = n - ratio * d;
            e * e
        })
        .sum();
    libm::sqrt(ss / (b as f64 * (b as f64 - 1.0))) / mean_den
}

/// Sample mean and its standard error.
pub fn mean_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, libm::sqrt(var / n as f64))
}

/// Running batch sums for a ratio estimate over a stream of unknown length
/// with a fixed batch size.
#[derive(Debug, Clone, Default)]
pub struct BatchRatio {
    batch_size: u64,
    count: u64,
    cur_num: f64,
    cur_den: f64,
    pub num: alloc::vec::Vec<f64>,
    pub den: alloc::vec::Vec<f64>,
}

impl BatchRatio {
    pub fn new(batch_size: u64) -> Self {
        BatchRatio {
            batch_size: batch_size.max(1),
            ..Default::default()
        }
    }

    pub fn push(&mut self, num: f64, den: f64) {
        self.cur_num += num;
        self.cur_den += den;
        self.count += 1;
        if self.count == self.batch_size {
            self.num.push(self.cur_num);
            self.den.push(self.cur_den);
            self.cur_num = 0.0;
            self.cur_den = 0.0;
            self.count = 0;
        }
    }

    /// Ratio over completed batches.
    pub fn ratio(&self) -> f64 {
        self.num.iter().sum::<f64>() / self.den.iter().sum::<f64>()
    }

    pub fn std_error(&self) -> f64 {
        ratio_std_error(&self.num, &self.den)
    }
}
