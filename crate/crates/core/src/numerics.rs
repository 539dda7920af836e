//! Small numerical helpers: compensated summation, running moments and a
//! least-squares line fit.

/// Neumaier-compensated sum. Keeps long accumulations accurate enough for the
/// 1e-12 invariants on large grids.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Sum an iterator of f64 with compensation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Running mean / variance accumulator (Welford), with a numerically stable
/// pairwise merge so partitioned sample sets can be combined.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    /// Chan et al. parallel merge of (count, mean, M2) triples.
    pub fn merge(&mut self, other: RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / total as f64;
        self.count = total;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; NaN with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Standard error of the mean of a correlated series, estimated from batch
/// means. The series is split into `batches` contiguous blocks; block means of
/// a mixing process decorrelate once blocks are longer than the correlation
/// time, so their scatter gives an honest error bar for the global mean.
pub fn batch_means_std_error(series: &[f64], batches: usize) -> f64 {
    let batches = batches.clamp(2, series.len().max(2));
    if series.len() < batches {
        // Too short to batch: fall back to the i.i.d. estimate.
        let mut stats = RunningStats::new();
        for &v in series {
            stats.push(v);
        }
        return stats.std_error();
    }
    let block = series.len() / batches;
    let mut stats = RunningStats::new();
    for chunk in series.chunks_exact(block).take(batches) {
        stats.push(chunk.iter().sum::<f64>() / block as f64);
    }
    stats.std_error()
}

/// Ordinary least-squares fit y = slope * x + intercept.
/// Panics if fewer than two points are supplied.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len(), "linear_fit: mismatched lengths");
    assert!(xs.len() >= 2, "linear_fit: need at least two points");
    let n = xs.len() as f64;
    let mean_x = compensated_sum(xs.iter().copied()) / n;
    let mean_y = compensated_sum(ys.iter().copied()) / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let slope = sxy / sxx;
    (slope, mean_y - slope * mean_x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive_on_adversarial_input() {
        // 1 + 1e-16 repeated: naive summation drops every tiny term.
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..1_000_000 {
            acc.add(1e-16);
        }
        let expected = 1.0 + 1e-10;
        assert!((acc.value() - expected).abs() < 1e-13);
    }

    #[test]
    fn running_stats_matches_direct_formulas() {
        let data = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        let mut stats = RunningStats::new();
        for &v in &data {
            stats.push(v);
        }
        assert!((stats.mean() - 5.0).abs() < 1e-12);
        // Unbiased variance of this classic data set is 32/7.
        assert!((stats.variance() - 32.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn merge_equals_sequential() {
        let data: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut whole = RunningStats::new();
        for &v in &data {
            whole.push(v);
        }
        let mut left = RunningStats::new();
        let mut right = RunningStats::new();
        for &v in &data[..321] {
            left.push(v);
        }
        for &v in &data[321..] {
            right.push(v);
        }
        left.merge(right);
        assert_eq!(left.count(), whole.count());
        assert!((left.mean() - whole.mean()).abs() < 1e-12);
        assert!((left.variance() - whole.variance()).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -2.5 * x + 1.25).collect();
        let (slope, intercept) = linear_fit(&xs, &ys);
        assert!((slope + 2.5).abs() < 1e-12);
        assert!((intercept - 1.25).abs() < 1e-12);
    }

    #[test]
    fn batch_means_error_shrinks_with_length() {
        // AR(1) series with known decorrelation; the batch estimate for the
        // longer series should be clearly smaller.
        let make = |n: usize| -> Vec<f64> {
            let mut x = 0.0f64;
            let mut out = Vec::with_capacity(n);
            let mut state = 0x12345678u64;
            for _ in 0..n {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                x = 0.9 * x + u;
                out.push(x);
            }
            out
        };
        let short = batch_means_std_error(&make(1_000), 20);
        let long = batch_means_std_error(&make(100_000), 20);
        assert!(long < short);
    }
}
