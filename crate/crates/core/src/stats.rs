//! Small statistical validation helpers used by the test and acceptance
//! suites: Kolmogorov-Smirnov distances and chi-square uniformity checks.

/// One-sample KS statistic of sorted samples against a CDF.
pub fn ks_statistic_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// Asymptotic one-sample KS critical value at α = 0.01.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.62762 / (n as f64).sqrt()
}

/// Chi-square statistic of observed counts against a uniform expectation.
pub fn chi2_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum()
}

/// Upper 1% chi-square quantile by the Wilson-Hilferty approximation
/// (accurate to well under a percent for df ≥ 10).
pub fn chi2_critical_1pct(df: usize) -> f64 {
    let k = df as f64;
    let z = 2.326_347_874; // Φ⁻¹(0.99)
    let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_exact_cdf_is_small() {
        let sorted: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic_sorted(&sorted, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.0005 + 1e-12, "D = {d}");
    }

    #[test]
    fn chi2_uniform_counts() {
        let counts = vec![100u64; 50];
        assert_eq!(chi2_uniform(&counts), 0.0);
    }

    #[test]
    fn chi2_critical_reference_values() {
        // Table values: χ²₀.₉₉(50) = 76.154, χ²₀.₉₉(100) = 135.807.
        assert!((chi2_critical_1pct(50) - 76.154).abs() < 0.4);
        assert!((chi2_critical_1pct(100) - 135.807).abs() < 0.5);
    }
}
