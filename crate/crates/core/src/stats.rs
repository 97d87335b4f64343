//! Reproducible reductions and sample-mean estimators.

/// Pairwise (cascade) summation. The result depends only on the order of
/// `values`, never on how they were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MeanEstimate {
    /// Uses the unbiased variance; a single value has zero standard error.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanEstimate { mean: f64::NAN, std_error: f64::NAN, n };
        }
        let mean = pairwise_sum(values) / n as f64;
        if n == 1 {
            return MeanEstimate { mean, std_error: 0.0, n };
        }
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        MeanEstimate { mean, std_error: (var / n as f64).sqrt(), n }
    }

    /// `(mean − target)/SE`; zero when both the deviation and the error vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        z_score(self.mean - target, self.std_error)
    }
}

pub(crate) fn z_score(deviation: f64, std_error: f64) -> f64 {
    if deviation == 0.0 {
        0.0
    } else if std_error == 0.0 {
        deviation.signum() * f64::INFINITY
    } else {
        deviation / std_error
    }
}

/// Standard error of the difference of two independent estimates.
pub fn combined_std_error(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn mean_estimate_small_sample() {
        let e = MeanEstimate::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // var = 5/3, se = sqrt(5/12)
        assert!((e.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        let one = MeanEstimate::from_values(&[7.0]);
        assert_eq!((one.mean, one.std_error), (7.0, 0.0));
    }

    #[test]
    fn z_score_degenerate_cases() {
        let e = MeanEstimate::from_values(&[1.0; 10]);
        assert_eq!(e.z_score(1.0), 0.0);
        assert_eq!(e.z_score(0.0), f64::INFINITY);
    }
}
