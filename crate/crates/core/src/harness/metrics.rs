//! Error metrics on redimensionalized states.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("MAPE undefined: truth value is zero at index {0}")]
    ZeroTruth(usize),
    #[error("R^2 needs at least two points")]
    TooFewPoints,
    #[error("R^2 undefined: truth variance is zero")]
    ZeroVariance,
    #[error("length mismatch: {preds} predictions vs {truths} truths")]
    LengthMismatch { preds: usize, truths: usize },
}

/// Mean absolute percentage error, `100 mean(|p - t| / |t|)`.
pub fn mape(predictions: &[f64], truths: &[f64]) -> Result<f64, MetricsError> {
    if predictions.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            preds: predictions.len(),
            truths: truths.len(),
        });
    }
    let mut acc = 0.0;
    for (i, (p, t)) in predictions.iter().zip(truths).enumerate() {
        if *t == 0.0 {
            return Err(MetricsError::ZeroTruth(i));
        }
        acc += ((p - t) / t).abs();
    }
    Ok(100.0 * acc / predictions.len() as f64)
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r2(predictions: &[f64], truths: &[f64]) -> Result<f64, MetricsError> {
    if predictions.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            preds: predictions.len(),
            truths: truths.len(),
        });
    }
    if truths.len() < 2 {
        return Err(MetricsError::TooFewPoints);
    }
    let mean = truths.iter().sum::<f64>() / truths.len() as f64;
    let ss_tot: f64 = truths.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let ss_res: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateMetrics {
    /// Mean over test trajectories of the per-trajectory MAPE, percent.
    pub mape_pct: f64,
    /// Pooled over all test points of the split.
    pub r2: f64,
}

pub fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mape_trivials() {
        assert_eq!(mape(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mape(&[2.0], &[1.0]).unwrap(), 100.0);
        assert!((mape(&[1.0, 3.0], &[2.0, 2.0]).unwrap() - 50.0).abs() < 1e-12);
    }

    #[test]
    fn mape_zero_truth_is_metric_error() {
        assert!(matches!(
            mape(&[1.0], &[0.0]),
            Err(MetricsError::ZeroTruth(0))
        ));
    }

    #[test]
    fn r2_trivials() {
        assert_eq!(r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        // constant prediction at the truth mean
        assert_eq!(r2(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(r2(&[0.0, 0.0], &[-1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn r2_errors() {
        assert!(matches!(r2(&[1.0], &[1.0]), Err(MetricsError::TooFewPoints)));
        assert!(matches!(
            r2(&[1.0, 2.0], &[3.0, 3.0]),
            Err(MetricsError::ZeroVariance)
        ));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
