use serde::Serialize;

/// Monte-Carlo estimate with its standard error, sample count and seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    pub fn exact(value: f64) -> Self {
        MCEstimate { value, std_error: 0.0, samples: 0, seed: 0 }
    }

    /// Proportion estimate. With no hits (or all hits) the error is reported as
    /// `1/N`, the resolution of the estimator.
    pub fn proportion(hits: u64, samples: u64, seed: u64) -> Self {
        let n = samples.max(1) as f64;
        let p = hits as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt().max(if hits == 0 || hits == samples { 1.0 / n } else { 0.0 });
        MCEstimate { value: p, std_error: se, samples, seed }
    }

    /// Sample mean with the usual standard error.
    pub fn mean_of(values: &[f64], seed: u64) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MCEstimate { value: mean, std_error: (var / n).sqrt(), samples: values.len() as u64, seed }
    }

    pub fn scaled(self, s: f64) -> Self {
        MCEstimate { value: self.value * s, std_error: self.std_error * s.abs(), ..self }
    }

    /// `value ≥ other.value − k·(σ + σ')`
    pub fn dominates(&self, other: &MCEstimate, k: f64) -> bool {
        self.value >= other.value - k * (self.std_error + other.std_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportion_errors() {
        let e = MCEstimate::proportion(25, 100, 1);
        assert_eq!(e.value, 0.25);
        assert!((e.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert_eq!(MCEstimate::proportion(0, 1000, 1).std_error, 1e-3);
    }

    #[test]
    fn mean_of_constant_has_zero_error() {
        let e = MCEstimate::mean_of(&[2.0; 10], 0);
        assert_eq!((e.value, e.std_error), (2.0, 0.0));
    }
}
