//! Least-squares fits used to read growth rates off measurements.

/// Fit `y = c * x^k` by least squares on logarithms; returns `(k, c)`.
///
/// Panics unless there are at least two points with distinct positive `x`
/// and positive `y`.
pub fn power_law(points: &[(f64, f64)]) -> (f64, f64) {
    assert!(points.len() >= 2, "need two points");
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| {
            assert!(x > 0.0 && y > 0.0, "power-law fit needs positive data");
            (x.ln(), y.ln())
        })
        .collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    assert!(sxx > 0.0, "x values must differ");
    let k = sxy / sxx;
    (k, (my - k * mx).exp())
}

/// Ratio of the largest to the smallest value.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    max / min
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power() {
        let pts: Vec<_> = (1..6).map(|i| (i as f64, 3.0 * (i as f64).powf(1.5))).collect();
        let (k, c) = power_law(&pts);
        assert!((k - 1.5).abs() < 1e-9);
        assert!((c - 3.0).abs() < 1e-9);
    }

    #[test]
    fn spread_of_constant_is_one() {
        assert_eq!(spread(&[2.0, 2.0]), 1.0);
    }
}
