//! Compensated floating-point reductions shared across the crate.
//!
//! Every statistic that feeds a premium, a report or a persisted file goes
//! through these helpers so that results are independent of thread count and
//! accurate enough for the tight tolerances used by the test suite.

/// Neumaier (improved Kahan) summation over a slice, left to right.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Prefix sums `p[0] = 0, p[i] = x[0] + ... + x[i-1]` with a Neumaier
/// accumulator carried along, so each stored entry is a compensated snapshot.
pub fn compensated_prefix_sums(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len() + 1);
    out.push(0.0);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    compensated_sum(values) / values.len() as f64
}

/// Population standard deviation (divides by `n`).
pub fn std_dev(values: &[f64]) -> f64 {
    variance(values).sqrt()
}

/// Population variance about the sample mean.
pub fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let mut sq = 0.0;
    let mut comp = 0.0;
    for &x in values {
        let d = x - m;
        let e = d * d;
        let t = sq + e;
        if sq.abs() >= e.abs() {
            comp += (sq - t) + e;
        } else {
            comp += (e - t) + sq;
        }
        sq = t;
    }
    (sq + comp) / values.len() as f64
}

/// Excess kurtosis `m4 / m2^2 - 3` from population central moments.
/// Returns 0 for degenerate (constant or near-empty) input.
pub fn excess_kurtosis(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &x in values {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    let n = values.len() as f64;
    m2 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return 0.0;
    }
    m4 / (m2 * m2) - 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        // 1 + 1e-16 repeated: naive summation loses the small terms entirely.
        let mut xs = vec![1.0];
        xs.extend(std::iter::repeat_n(1e-16, 10_000));
        let got = compensated_sum(&xs);
        assert!((got - (1.0 + 1e-12)).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn prefix_sums_match_direct_sums() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.013 - 0.6).collect();
        let p = compensated_prefix_sums(&xs);
        assert_eq!(p.len(), xs.len() + 1);
        for (i, window) in [(0usize, 10usize), (100, 900), (37, 500)] {
            let direct = compensated_sum(&xs[i..i + window]);
            let via_prefix = p[i + window] - p[i];
            assert!((direct - via_prefix).abs() < 1e-12, "{direct} vs {via_prefix}");
        }
    }

    #[test]
    fn moments_on_known_data() {
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert!((mean(&xs) - 5.0).abs() < 1e-15);
        assert!((std_dev(&xs) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kurtosis_of_two_point_distribution_is_minimal() {
        // Symmetric +-1 has excess kurtosis exactly -2.
        let xs: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((excess_kurtosis(&xs) + 2.0).abs() < 1e-12);
    }
}
