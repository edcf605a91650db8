//! Two-sample Kolmogorov-Smirnov test and sample moments.

/// Result of a two-sample KS test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsOutcome {
    /// `sup |F_x - F_y|` over the pooled sample.
    pub statistic: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
}

/// Two-sample KS test. Ties between and within samples are handled by
/// stepping over every copy of a value before comparing the two empirical
/// distribution functions.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> KsOutcome {
    assert!(!x.is_empty() && !y.is_empty(), "KS test needs two non-empty samples");
    let mut x = x.to_vec();
    let mut y = y.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = if x[i] <= y[j] { x[i] } else { y[j] };
        while i < n && x[i] == v {
            i += 1;
        }
        while j < m && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    KsOutcome {
        statistic: d,
        p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d),
    }
}

/// `Q(lambda) = 2 sum_{j >= 1} (-1)^{j-1} exp(-2 j^2 lambda^2)`, the
/// Kolmogorov survival function.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub count: usize,
}

pub fn mean_estimate(xs: &[f64]) -> MeanEstimate {
    let n = xs.len();
    if n == 0 {
        return MeanEstimate {
            mean: 0.0,
            standard_error: 0.0,
            count: 0,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    MeanEstimate {
        mean,
        standard_error: (var / n as f64).sqrt(),
        count: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_have_zero_distance() {
        let x = [1.0, 2.0, 2.0, 3.0];
        let out = ks_two_sample(&x, &x);
        assert_eq!(out.statistic, 0.0);
        assert_eq!(out.p_value, 1.0);
    }

    #[test]
    fn disjoint_samples_have_distance_one() {
        let x: Vec<f64> = (0..100).map(f64::from).collect();
        let y: Vec<f64> = (200..300).map(f64::from).collect();
        let out = ks_two_sample(&x, &y);
        assert_eq!(out.statistic, 1.0);
        assert!(out.p_value < 1e-20);
    }

    #[test]
    fn statistic_by_hand() {
        // F_x jumps at 1, 3; F_y at 2, 4: largest gap 1/2 at t in [1, 2) and [3, 4)
        let out = ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]);
        assert_eq!(out.statistic, 0.5);
        // ties across samples do not count as a gap
        let out = ks_two_sample(&[0.0, 0.0, 1.0], &[0.0, 1.0, 1.0]);
        assert!((out.statistic - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // standard table: Q(1.36) ~ 0.049, Q(1.63) ~ 0.010, Q(1.95) ~ 0.001
        assert!((kolmogorov_q(1.36) - 0.0495).abs() < 1e-3);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 5e-4);
        assert!((kolmogorov_q(1.95) - 0.0010).abs() < 1e-4);
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn mean_and_standard_error() {
        let m = mean_estimate(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.standard_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
    }
}
