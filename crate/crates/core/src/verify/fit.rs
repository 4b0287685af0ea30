//! Least-squares power-law fits on log-log pairs.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Slope and coefficient of determination of `ln y = c + p ln x`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, r_squared))
}

/// Error against spacing under refinement. Zero errors make the fit
/// degenerate; the order is then absent rather than infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    pub fitted_order: Option<f64>,
    pub r_squared: Option<f64>,
    pub degenerate: bool,
}

impl ConvergenceFit {
    pub fn new(spacings: Vec<f64>, errors: Vec<f64>) -> Result<Self> {
        if spacings.len() != errors.len() {
            return Err(LabError::DimensionMismatch {
                expected: spacings.len(),
                found: errors.len(),
            });
        }
        if spacings.len() < 2 {
            return Err(LabError::TooFewLevels {
                needed: 2,
                got: spacings.len(),
            });
        }
        if spacings.windows(2).any(|w| !(w[1] < w[0])) || spacings.iter().any(|s| !(*s > 0.0)) {
            return Err(LabError::InvalidConfig(
                "spacings must be positive and strictly decreasing".into(),
            ));
        }
        if errors.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(LabError::InvalidConfig(
                "errors must be finite and non-negative".into(),
            ));
        }
        let fit = log_log_fit(&spacings, &errors);
        Ok(Self {
            degenerate: fit.is_none(),
            fitted_order: fit.map(|f| f.0),
            r_squared: fit.map(|f| f.1),
            spacings,
            errors,
        })
    }

    /// `order ≥ min_order` and `r² ≥ min_r_squared`; degenerate fits fail.
    pub fn meets(&self, min_order: f64, min_r_squared: f64) -> bool {
        matches!(
            (self.fitted_order, self.r_squared),
            (Some(p), Some(r2)) if p >= min_order && r2 >= min_r_squared
        )
    }

    /// Orders between consecutive levels.
    pub fn pairwise_orders(&self) -> Vec<f64> {
        self.spacings
            .windows(2)
            .zip(self.errors.windows(2))
            .map(|(s, e)| (e[0] / e[1]).ln() / (s[0] / s[1]).ln())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let a = vec![0.5, 0.25, 0.125, 0.0625];
        let e: Vec<f64> = a.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        let fit = ConvergenceFit::new(a, e).unwrap();
        assert!((fit.fitted_order.unwrap() - 2.0).abs() < 1e-12);
        assert!((fit.r_squared.unwrap() - 1.0).abs() < 1e-12);
        assert!(fit.meets(1.9, 0.99));
        assert!(fit.pairwise_orders().iter().all(|p| (p - 2.0).abs() < 1e-12));
    }

    #[test]
    fn zero_errors_are_degenerate() {
        let fit = ConvergenceFit::new(vec![0.5, 0.25, 0.125], vec![0.0; 3]).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.fitted_order, None);
        assert!(!fit.meets(0.0, 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ConvergenceFit::new(vec![0.25, 0.5], vec![1.0, 1.0]).is_err());
        assert!(ConvergenceFit::new(vec![0.5, 0.25], vec![1.0, -1.0]).is_err());
        assert!(ConvergenceFit::new(vec![0.5], vec![1.0]).is_err());
        assert!(ConvergenceFit::new(vec![0.5, 0.25], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_order_of_noiseless_data(p in 0.2f64..4.0, c in 1e-3f64..1e3) {
            let a: Vec<f64> = (0..5).map(|i| 0.5 / 2f64.powi(i)).collect();
            let e: Vec<f64> = a.iter().map(|x| c * x.powf(p)).collect();
            let fit = ConvergenceFit::new(a, e).unwrap();
            prop_assert!((fit.fitted_order.unwrap() - p).abs() < 1e-9);
        }
    }
}
