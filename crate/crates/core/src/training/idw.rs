//! Inverse-Dirichlet weighting: each term's weight is set so its weighted
//! parameter-gradient standard deviation matches a common reference,
//! smoothed by an exponential moving average. The data term's weight is
//! pinned to one by the loss definition, so it is the reference: weighting
//! physics and init by std(g_data)/std(g_k) equalizes all three spreads.

use super::loss::LossParts;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdwConfig {
    pub enabled: bool,
    pub update_period: usize,
    /// EMA factor on the raw ratio: 1 takes it outright, 0 freezes weights.
    pub smoothing: f64,
}

impl Default for IdwConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            update_period: 10,
            smoothing: 0.5,
        }
    }
}

fn grad_std(g: &[f64]) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    let n = g.len() as f64;
    let mean = g.iter().sum::<f64>() / n;
    let var = g.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    var.max(0.0).sqrt()
}

/// New (lambda1, lambda2) from this period's raw gradient statistics.
/// A term with zero gradient spread keeps its previous weight, as does
/// everything when the reference (data) spread vanishes.
pub fn idw_update(
    parts: &LossParts,
    has_physics: bool,
    has_init: bool,
    lambda1: f64,
    lambda2: f64,
    smoothing: f64,
) -> (f64, f64) {
    let s_data = grad_std(&parts.g_data);
    let s_phys = if has_physics { grad_std(&parts.g_physics) } else { 0.0 };
    let s_init = if has_init { grad_std(&parts.g_init) } else { 0.0 };
    if s_data <= 0.0 {
        return (lambda1, lambda2);
    }
    let blend = |prev: f64, std: f64| {
        if std > 0.0 {
            (1.0 - smoothing) * prev + smoothing * (s_data / std)
        } else {
            prev
        }
    };
    (blend(lambda1, s_phys), blend(lambda2, s_init))
}
