//! Inlet drop-size distribution: a self-similar volume-based log-normal,
//! discretized into diameter classes.
//!
//! The spread is the standard deviation of the volume-weighted distribution
//! normalized by the Sauter mean diameter. With log-variance s2 this pins
//! exp(s2) * sqrt(exp(s2) - 1) = spread, and the log-median follows from
//! requiring the continuous distribution's Sauter diameter to equal the
//! requested d32 exactly: mu3 = ln(d32) + s2/2.

use super::SeparatorError;
use statrs::function::erf::erfc;

#[derive(Debug, Clone)]
pub struct InletDsd {
    pub diameters: Vec<f64>,
    /// Number fractions, summing to 1.
    pub number_fractions: Vec<f64>,
}

impl InletDsd {
    pub fn sauter_diameter(&self) -> f64 {
        let s3: f64 = self
            .number_fractions
            .iter()
            .zip(&self.diameters)
            .map(|(n, d)| n * d.powi(3))
            .sum();
        let s2: f64 = self
            .number_fractions
            .iter()
            .zip(&self.diameters)
            .map(|(n, d)| n * d.powi(2))
            .sum();
        s3 / s2
    }
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Acklam's rational approximation of the inverse normal CDF, sharpened by
/// one Halley step; good to ~1e-15 over (0, 1).
fn norm_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let plow = 0.02425;
    let mut x = if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = norm_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x -= u / (1.0 + x * u / 2.0);
    x
}

/// Discretizes the volume-based log-normal into `n_classes` classes,
/// log-spaced over the [0.1%, 99.9%] volume quantiles, and converts volume
/// fractions into number fractions.
pub fn inlet_dsd(d32: f64, spread: f64, n_classes: usize) -> Result<InletDsd, SeparatorError> {
    if d32 <= 0.0 {
        return Err(SeparatorError::InvalidArgument(format!(
            "d32 {d32} must be > 0"
        )));
    }
    if n_classes < 2 {
        return Err(SeparatorError::InvalidArgument(
            "need at least 2 drop classes".into(),
        ));
    }
    if spread < 0.0 {
        return Err(SeparatorError::InvalidArgument("spread must be >= 0".into()));
    }
    if spread < 1e-12 {
        // Degenerate distribution: all volume in a single class at d32; a
        // second empty class keeps the class-count contract.
        let mut diameters = vec![d32; n_classes];
        let mut fractions = vec![0.0; n_classes];
        diameters[0] = d32;
        fractions[0] = 1.0;
        return Ok(InletDsd {
            diameters,
            number_fractions: fractions,
        });
    }

    // exp(s2) sqrt(exp(s2)-1) = spread  <=>  w^3 - w^2 = spread^2, w = exp(s2)
    let target = spread * spread;
    let mut w = 1.0 + spread;
    for _ in 0..200 {
        let f = w * w * w - w * w - target;
        let fp = 3.0 * w * w - 2.0 * w;
        let step = f / fp;
        w -= step;
        if step.abs() < 1e-16 * w {
            break;
        }
    }
    let s2 = w.ln();
    let s = s2.sqrt();
    let mu3 = d32.ln() + 0.5 * s2;

    let lo = mu3 + s * norm_quantile(0.001);
    let hi = mu3 + s * norm_quantile(0.999);
    let edges: Vec<f64> = (0..=n_classes)
        .map(|k| (lo + (hi - lo) * k as f64 / n_classes as f64).exp())
        .collect();
    let diameters: Vec<f64> = (0..n_classes)
        .map(|k| (edges[k] * edges[k + 1]).sqrt())
        .collect();
    let mut volume: Vec<f64> = (0..n_classes)
        .map(|k| {
            norm_cdf((edges[k + 1].ln() - mu3) / s) - norm_cdf((edges[k].ln() - mu3) / s)
        })
        .collect();
    let vtot: f64 = volume.iter().sum();
    for v in &mut volume {
        *v /= vtot;
    }
    let mut number: Vec<f64> = volume
        .iter()
        .zip(&diameters)
        .map(|(v, d)| v / d.powi(3))
        .collect();
    let ntot: f64 = number.iter().sum();
    for n in &mut number {
        *n /= ntot;
    }
    Ok(InletDsd {
        diameters,
        number_fractions: number,
    })
}
