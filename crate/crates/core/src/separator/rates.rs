//! Lumped axial march of the heavy phase and dense-packed zone: swarm
//! sedimentation per drop class, droplet-interface coalescence with the
//! film-drainage correlation, and the trapped-water balance.

use super::dsd::inlet_dsd;
use super::{SeparatorError, SeparatorParams};

/// Circular-segment cross-section area at fill height h in a cylinder of
/// radius r: `A_x(h) = r^2 acos(1 - h/r) - (r - h) sqrt(2 r h - h^2)`.
pub fn segment_area(h: f64, r: f64) -> Result<f64, SeparatorError> {
    if !(0.0..=2.0 * r).contains(&h) {
        return Err(SeparatorError::Domain(format!(
            "height {h} outside [0, {}]",
            2.0 * r
        )));
    }
    Ok(r * r * (1.0 - h / r).acos() - (r - h) * (2.0 * r * h - h * h).sqrt())
}

/// Swarm sedimentation velocity `g d^2 drho / (18 eta_c) (1 - eps)^(n-1)`;
/// Stokes' law at vanishing hold-up. The continuous phase is aqueous.
pub fn swarm_velocity(d: f64, eps: f64, p: &SeparatorParams) -> Result<f64, SeparatorError> {
    if !(0.0..1.0).contains(&eps) {
        return Err(SeparatorError::Domain(format!(
            "hold-up {eps} outside [0, 1)"
        )));
    }
    if d <= 0.0 {
        return Err(SeparatorError::Domain(format!("diameter {d} must be > 0")));
    }
    Ok(p.g * d * d * p.delta_rho / (18.0 * p.eta_aq) * (1.0 - eps).powf(p.swarm_exponent - 1.0))
}

#[derive(Debug, Clone)]
pub struct SegmentDiag {
    pub hold_up: f64,
    pub flow: f64,
    pub d32_dpz: f64,
    pub v_s: f64,
    pub v_c: f64,
}

/// Totals of the march plus per-segment diagnostics.
#[derive(Debug, Clone)]
pub struct Rates {
    pub v_s: f64,
    pub v_c: f64,
    pub v_w: f64,
    pub segments: Vec<SegmentDiag>,
}

/// Marches segment by segment along the separator length. Droplet counts are
/// absolute number flows scaled so the dispersed volume flow at the inlet is
/// `eps_in * v_in`; a class sediments entirely once its vertical residence
/// time is exhausted within the segment.
pub fn rates(
    h_aq: f64,
    h_dpz: f64,
    v_in: f64,
    eps_in: f64,
    d32_in: f64,
    r_v: f64,
    p: &SeparatorParams,
) -> Result<Rates, SeparatorError> {
    if h_dpz <= h_aq {
        return Err(SeparatorError::Domain(format!(
            "DPZ height {h_dpz} must exceed aqueous height {h_aq}"
        )));
    }
    if !(0.0..1.0).contains(&eps_in) {
        return Err(SeparatorError::Domain(format!(
            "inlet hold-up {eps_in} outside [0, 1)"
        )));
    }
    if v_in <= 0.0 {
        return Err(SeparatorError::Domain(format!(
            "inlet flow {v_in} must be > 0"
        )));
    }
    let n_seg = p.n_segments;
    let n_cls = p.n_classes;
    let dsd = inlet_dsd(d32_in, p.dsd_spread, n_cls)?;

    let vol_of = |d: f64| std::f64::consts::PI / 6.0 * d * d * d;
    let frac_volume: f64 = dsd
        .number_fractions
        .iter()
        .zip(&dsd.diameters)
        .map(|(n, d)| n * vol_of(*d))
        .sum();
    let count_scale = if eps_in > 0.0 {
        eps_in * v_in / frac_volume
    } else {
        0.0
    };
    let mut counts: Vec<f64> = dsd
        .number_fractions
        .iter()
        .map(|f| count_scale * f)
        .collect();
    let mut risen = vec![0.0f64; n_cls];

    let v_aq = segment_area(h_aq, p.radius)? * p.length;
    let dx = p.length / n_seg as f64;
    let a_y = 2.0 * dx * (2.0 * p.radius * h_dpz - h_dpz * h_dpz).sqrt();

    let mut flow = v_in;
    let mut eps = eps_in;
    let mut dpz_flow = 0.0f64;
    let mut dpz_counts = vec![0.0f64; n_cls];
    let mut total_s = 0.0;
    let mut total_c = 0.0;
    let mut segments = Vec::with_capacity(n_seg);

    for _ in 0..n_seg {
        if flow <= 0.0 {
            return Err(SeparatorError::Internal(format!(
                "convective flow fell to {flow} during the march"
            )));
        }
        let tau_x = (v_aq / n_seg as f64) / flow;
        let mut v_s_i = 0.0;
        let mut sedimented = vec![0.0f64; n_cls];
        for j in 0..n_cls {
            if counts[j] <= 0.0 {
                continue;
            }
            let v_sed = swarm_velocity(dsd.diameters[j], eps, p)?;
            let remaining = h_aq - risen[j];
            if remaining <= 0.0 {
                sedimented[j] = counts[j];
                continue;
            }
            let tau_y = remaining / v_sed;
            if tau_x >= tau_y {
                sedimented[j] = counts[j];
                risen[j] = h_aq;
            } else {
                sedimented[j] = counts[j] * tau_x * v_sed / remaining;
                risen[j] += v_sed * tau_x;
            }
            if sedimented[j] < 0.0 {
                return Err(SeparatorError::Internal(format!(
                    "negative sedimented count {}",
                    sedimented[j]
                )));
            }
            v_s_i += sedimented[j] * vol_of(dsd.diameters[j]);
        }

        // DPZ drop bookkeeping: accumulate while the DPZ convects, otherwise
        // the zone holds only the freshly sedimented drops.
        if dpz_flow > 0.0 {
            for j in 0..n_cls {
                dpz_counts[j] += sedimented[j];
            }
        } else {
            dpz_counts.copy_from_slice(&sedimented);
        }
        let s3: f64 = dpz_counts
            .iter()
            .zip(&dsd.diameters)
            .map(|(n, d)| n * d.powi(3))
            .sum();
        let s2: f64 = dpz_counts
            .iter()
            .zip(&dsd.diameters)
            .map(|(n, d)| n * d.powi(2))
            .sum();
        let (d32_dpz, v_c_i) = if s2 > 0.0 {
            let d32 = s3 / s2;
            let la = (p.delta_rho * p.g / p.sigma).powf(0.6) * (h_dpz - h_aq).powf(0.2) * d32;
            let root = (1.0 - 4.7 / (la + 4.7)).sqrt();
            let r_f = 0.5239 * d32 * root;
            let r_a = 0.5 * d32 * (1.0 - root);
            let tau_di = (6.0 * std::f64::consts::PI).powf(7.0 / 6.0) * p.eta_aq
                * r_a.powf(7.0 / 3.0)
                / (4.0 * p.sigma.powf(5.0 / 6.0) * p.hamaker.powf(1.0 / 6.0) * r_f * r_v);
            (d32, 2.0 * a_y * d32 / (3.0 * tau_di))
        } else {
            (0.0, 0.0)
        };

        let v_w_i = (v_s_i - v_c_i) * (1.0 - p.dpz_hold_up) / p.dpz_hold_up;
        dpz_flow = (dpz_flow + (v_s_i - v_c_i) / p.dpz_hold_up).max(0.0);
        let flow_next = flow - v_s_i - v_w_i;
        if flow_next <= 0.0 {
            return Err(SeparatorError::Internal(format!(
                "convective flow fell to {flow_next} during the march"
            )));
        }
        eps = (eps * flow - v_s_i) / flow_next;
        for j in 0..n_cls {
            counts[j] -= sedimented[j];
        }
        segments.push(SegmentDiag {
            hold_up: eps,
            flow: flow_next,
            d32_dpz,
            v_s: v_s_i,
            v_c: v_c_i,
        });
        flow = flow_next;
        total_s += v_s_i;
        total_c += v_c_i;
    }

    Ok(Rates {
        v_s: total_s,
        v_c: total_c,
        v_w: (total_s - total_c) * (1.0 - p.dpz_hold_up) / p.dpz_hold_up,
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> SeparatorParams {
        SeparatorParams::default()
    }

    #[test]
    fn segment_area_exact_points() {
        let r = 0.1;
        assert_eq!(segment_area(0.0, r).unwrap(), 0.0);
        assert_relative_eq!(
            segment_area(r, r).unwrap(),
            std::f64::consts::PI * r * r / 2.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            segment_area(2.0 * r, r).unwrap(),
            std::f64::consts::PI * r * r,
            max_relative = 1e-12
        );
        assert!(segment_area(-0.01, r).is_err());
        assert!(segment_area(0.21, r).is_err());
    }

    #[test]
    fn stokes_limit_frozen_value() {
        // 9.81 * (1e-3)^2 * 115 / (18 * 1.012e-3), 40-digit evaluation.
        let v = swarm_velocity(1e-3, 0.0, &params()).unwrap();
        assert_relative_eq!(v, 0.06193181818181818, max_relative = 1e-14);
    }

    #[test]
    fn swarm_velocity_linear_in_one_minus_holdup() {
        let p = params();
        let v0 = swarm_velocity(1e-3, 0.0, &p).unwrap();
        for eps in [0.1, 0.3, 0.6] {
            let v = swarm_velocity(1e-3, eps, &p).unwrap();
            assert_relative_eq!(v, v0 * (1.0 - eps), max_relative = 1e-13);
        }
    }

    #[test]
    fn holdup_of_one_is_domain_error() {
        assert!(swarm_velocity(1e-3, 1.0, &params()).is_err());
    }

    #[test]
    fn no_dispersed_phase_means_no_rates() {
        let r = rates(0.1, 0.12, 9e-4, 0.0, 1e-3, 0.0383, &params()).unwrap();
        assert_eq!(r.v_s, 0.0);
        assert_eq!(r.v_c, 0.0);
        assert_eq!(r.v_w, 0.0);
    }

    #[test]
    fn water_flow_vanishes_when_rates_balance() {
        // Directly from the DPZ balance: v_w = (v_s - v_c)(1-eps_p)/eps_p.
        let r = rates(0.1, 0.12, 9e-4, 0.1, 1e-3, 0.0383, &params()).unwrap();
        let reconstructed = (r.v_s - r.v_c) * (1.0 - 0.9) / 0.9;
        assert_relative_eq!(r.v_w, reconstructed, max_relative = 1e-12);
    }

    #[test]
    fn collapsed_dpz_is_domain_error() {
        assert!(rates(0.12, 0.12, 9e-4, 0.1, 1e-3, 0.0383, &params()).is_err());
    }

    #[test]
    fn golden_rates_match_independent_recurrence_oracle() {
        // Frozen from a straightforward independent transcription of the
        // marching recurrences at Ns = 200, Nd = 50 (the paper-scale grid).
        let mut p = params();
        p.n_segments = 200;
        p.n_classes = 50;
        let r = rates(0.1, 0.12, 9e-4, 0.1, 1e-3, 0.0383, &p).unwrap();
        assert_relative_eq!(r.v_s, 9.000000000000001e-05, max_relative = 1e-10);
        assert_relative_eq!(r.v_c, 9.095455788438219e-05, max_relative = 1e-10);

        // Partial-sedimentation point (small droplets rise slowly).
        let r = rates(0.1, 0.12, 9e-4, 0.1, 3e-4, 0.0383, &p).unwrap();
        assert_relative_eq!(r.v_s, 8.765949180912273e-05, max_relative = 1e-10);
        assert_relative_eq!(r.v_c, 1.354883025373770e-04, max_relative = 1e-10);

        // Off-center operating point with a different coalescence affinity.
        let r = rates(0.095, 0.125, 7.3e-4, 0.1, 9.5e-4, 0.040, &p).unwrap();
        assert_relative_eq!(r.v_s, 7.299999999999997e-05, max_relative = 1e-10);
        assert_relative_eq!(r.v_c, 7.343113000182098e-05, max_relative = 1e-10);
    }

    #[test]
    fn axial_volume_conservation_is_exact() {
        let p = params();
        let v_in = 8.7e-4;
        let r = rates(0.104, 0.118, v_in, 0.1, 9.3e-4, 0.037, &p).unwrap();
        let mut flow = v_in;
        let mut removed = 0.0;
        for seg in &r.segments {
            let v_w = (seg.v_s - seg.v_c) * (1.0 - p.dpz_hold_up) / p.dpz_hold_up;
            let expect = flow - seg.v_s - v_w;
            assert!(
                (seg.flow - expect).abs() <= 1e-15 * flow,
                "flow {} vs {expect}",
                seg.flow
            );
            removed += seg.v_s + v_w;
            flow = seg.flow;
        }
        assert_relative_eq!(v_in - flow, removed, max_relative = 1e-12);
    }

    #[test]
    fn higher_holdup_slows_every_class() {
        let p = params();
        for d in [3e-4, 1e-3, 2e-3] {
            let lo = swarm_velocity(d, 0.05, &p).unwrap();
            let hi = swarm_velocity(d, 0.4, &p).unwrap();
            assert!(hi < lo);
        }
    }

    #[test]
    fn dispersed_phase_never_grows_along_the_axis() {
        // Sedimentation only removes drops, so the dispersed volume flow
        // (hold-up times convective flow) is non-increasing segment to
        // segment even where trapped water returns to the aqueous phase.
        let p = params();
        let v_in = 9e-4;
        let eps_in = 0.15;
        let r = rates(0.1, 0.125, v_in, eps_in, 6e-4, 0.0383, &p).unwrap();
        let mut prev = eps_in * v_in;
        for seg in &r.segments {
            assert!(seg.v_s >= 0.0);
            assert!(seg.hold_up >= 0.0 && seg.hold_up < 1.0);
            let dispersed = seg.hold_up * seg.flow;
            assert!(dispersed <= prev * (1.0 + 1e-12));
            assert!((prev - dispersed - seg.v_s).abs() <= 1e-15 * v_in);
            prev = dispersed;
        }
    }

    #[test]
    fn rates_deterministic_and_continuous_in_dpz_height() {
        let p = params();
        let a = rates(0.1, 0.12, 9e-4, 0.1, 1e-3, 0.0383, &p).unwrap();
        let b = rates(0.1, 0.12, 9e-4, 0.1, 1e-3, 0.0383, &p).unwrap();
        assert_eq!(a.v_c.to_bits(), b.v_c.to_bits());
        let c = rates(0.1, 0.12 + 1e-9, 9e-4, 0.1, 1e-3, 0.0383, &p).unwrap();
        assert!((c.v_c - a.v_c).abs() / a.v_c < 1e-6);
    }
}
