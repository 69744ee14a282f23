//! Adaptive Dormand-Prince RK5(4) with the pair's standard quartic dense
//! output, uniform-grid sampling, and event-based early termination.

use super::DatagenError;

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// 5th-order weights (same as the last A row; the pair is FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded 4th-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
/// Dense-output weights for the 5th interpolation coefficient.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub grid_size: usize,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            grid_size: 101,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub truncated: bool,
    pub t_end: f64,
}

/// Quartic interpolant over one accepted step.
struct DenseSeg {
    t0: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseSeg {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + theta1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + theta1 * self.rcont[4][i])));
        }
    }
}

fn rms_scaled(err: &[f64], y0: &[f64], y1: &[f64], rtol: f64, atol: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..err.len() {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        sum += r * r;
    }
    (sum / err.len() as f64).sqrt()
}

/// Hairer's starting-step heuristic for a 5th-order method.
fn initial_step<F>(rhs: &F, t0: f64, y0: &[f64], f0: &[f64], span: f64, rtol: f64, atol: f64) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
{
    let n = y0.len();
    let sc: Vec<f64> = y0.iter().map(|y| atol + rtol * y.abs()).collect();
    let d0 = (y0.iter().zip(&sc).map(|(y, s)| (y / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(f, s)| (f / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6 * span
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; n];
    rhs(t0 + h0, &y1, &mut f1);
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (1e-6 * span).max(h0 * 1e-3)
    } else {
        (0.01 / dmax).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `rhs` over `t_span`, emitting the solution on a uniform grid of
/// `grid_size` points via dense output. If `stop` fires, the event time is
/// located by bisection on the interpolant and the trajectory is re-gridded
/// so the point count stays `grid_size`.
pub fn integrate<F, P>(
    rhs: &F,
    x0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    stop: Option<&P>,
) -> Result<GridSolution, DatagenError>
where
    F: Fn(f64, &[f64], &mut [f64]) + ?Sized,
    P: Fn(f64, &[f64]) -> bool + ?Sized,
{
    let (t0, t1) = t_span;
    let span = t1 - t0;
    let n = x0.len();
    if !(span > 0.0) || cfg.grid_size < 2 {
        return Err(DatagenError::InvalidArgument(
            "need t1 > t0 and grid_size >= 2".into(),
        ));
    }
    if !(cfg.rtol > 0.0 && cfg.atol > 0.0) {
        return Err(DatagenError::InvalidArgument("rtol, atol must be > 0".into()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(DatagenError::InvalidArgument("non-finite initial state".into()));
    }
    if let Some(p) = stop {
        if p(t0, x0) {
            return Err(DatagenError::StoppedAtStart);
        }
    }

    let mut k = vec![vec![0.0; n]; 7];
    let mut t = t0;
    let mut y = x0.to_vec();
    rhs(t, &y, &mut k[0]);
    check_finite(&k[0], t)?;
    let mut h = initial_step(rhs, t, &y, &k[0], span, cfg.rtol, cfg.atol);

    let mut segments: Vec<DenseSeg> = Vec::new();
    let mut truncated = false;
    let mut t_final = t1;
    let mut ytmp = vec![0.0; n];
    let mut steps = 0usize;

    'outer: while t < t1 {
        if steps >= cfg.max_steps {
            return Err(DatagenError::Stiffness { t });
        }
        if h < 1e-14 * span {
            return Err(DatagenError::Stiffness { t });
        }
        h = h.min(t1 - t);
        // Stage sweep; k[0] holds f(t, y) from FSAL. A non-finite stage means
        // the trial step left the model's domain (e.g. just past an event
        // boundary): reject and shrink rather than abort, unless the step has
        // already collapsed.
        let mut stages_ok = true;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            let ks = &mut k[s];
            rhs(t + C[s] * h, &ytmp, ks);
            if ks.iter().any(|v| !v.is_finite()) {
                stages_ok = false;
                break;
            }
        }
        if !stages_ok {
            if h < 1e-12 * span {
                return Err(DatagenError::NonFiniteRhs { t });
            }
            h *= 0.25;
            steps += 1;
            continue;
        }
        let mut y_new = vec![0.0; n];
        let mut err = vec![0.0; n];
        for i in 0..n {
            let mut acc5 = 0.0;
            let mut acc_err = 0.0;
            for s in 0..7 {
                acc5 += B5[s] * k[s][i];
                acc_err += (B5[s] - B4[s]) * k[s][i];
            }
            y_new[i] = y[i] + h * acc5;
            err[i] = h * acc_err;
        }
        let err_norm = rms_scaled(&err, &y, &y_new, cfg.rtol, cfg.atol);
        if err_norm <= 1.0 {
            // Accept; build the dense interpolant for this step.
            let mut rcont: [Vec<f64>; 5] = [
                y.clone(),
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
            ];
            for i in 0..n {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k[6][i] - bspl;
                let mut acc = 0.0;
                for s in 0..7 {
                    acc += D[s] * k[s][i];
                }
                rcont[4][i] = h * acc;
            }
            let seg = DenseSeg { t0: t, h, rcont };

            if let Some(p) = stop {
                if p(t + h, &y_new) {
                    // Earliest crossing inside this step via bisection.
                    let mut lo = 0.0f64;
                    let mut hi = 1.0f64;
                    let mut buf = vec![0.0; n];
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        seg.eval(t + mid * h, &mut buf);
                        if p(t + mid * h, &buf) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                        if (hi - lo) * h < 1e-13 * span {
                            break;
                        }
                    }
                    t_final = t + hi * h;
                    truncated = true;
                    segments.push(seg);
                    break 'outer;
                }
            }

            segments.push(seg);
            t += h;
            y = y_new;
            k[0] = k[6].clone(); // FSAL
            let scale = (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0);
            h *= scale;
        } else {
            let scale = (0.9 * err_norm.powf(-0.2)).clamp(0.2, 1.0);
            h *= scale;
        }
        steps += 1;
    }

    // Uniform grid over [t0, t_final] sampled from the stored interpolants.
    let m = cfg.grid_size;
    let dt = (t_final - t0) / (m - 1) as f64;
    let mut times = Vec::with_capacity(m);
    let mut states = Vec::with_capacity(m);
    let mut seg_idx = 0usize;
    for g in 0..m {
        let tg = if g == m - 1 { t_final } else { t0 + g as f64 * dt };
        while seg_idx + 1 < segments.len() && tg > segments[seg_idx].t0 + segments[seg_idx].h {
            seg_idx += 1;
        }
        let mut row = vec![0.0; n];
        if g == 0 {
            row.copy_from_slice(x0);
        } else {
            segments[seg_idx].eval(tg, &mut row);
        }
        times.push(tg);
        states.push(row);
    }
    Ok(GridSolution {
        times,
        states,
        truncated,
        t_end: t_final,
    })
}

fn check_finite(v: &[f64], t: f64) -> Result<(), DatagenError> {
    if v.iter().any(|x| !x.is_finite()) {
        Err(DatagenError::NonFiniteRhs { t })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn decay(_t: f64, x: &[f64], dx: &mut [f64]) {
        dx[0] = -x[0];
    }

    type NoStop = fn(f64, &[f64]) -> bool;

    #[test]
    fn exponential_decay_hits_analytic_value() {
        let cfg = IntegratorConfig {
            rtol: 1e-12,
            atol: 1e-14,
            grid_size: 11,
            max_steps: 100_000,
        };
        let sol = integrate(&decay, &[1.0], (0.0, 1.0), &cfg, None::<&NoStop>).unwrap();
        assert!((sol.states[10][0] - 0.36787944117144233).abs() < 1e-10);
    }

    #[test]
    fn zero_dynamics_is_exactly_constant() {
        let cfg = IntegratorConfig::default();
        let sol = integrate(
            &|_t: f64, _x: &[f64], dx: &mut [f64]| dx[0] = 0.0,
            &[2.5],
            (0.0, 3.0),
            &cfg,
            None::<&NoStop>,
        )
        .unwrap();
        assert!(sol.states.iter().all(|row| row[0] == 2.5));
    }

    #[test]
    fn sm5_system_matches_closed_form() {
        // x1' = x1 x2 + x3, x2' = 0, x3' = 0 from (1, 1, 2): x1(t) = 3 e^t - 2.
        let rhs = |_t: f64, x: &[f64], dx: &mut [f64]| {
            dx[0] = x[0] * x[1] + x[2];
            dx[1] = 0.0;
            dx[2] = 0.0;
        };
        let cfg = IntegratorConfig {
            rtol: 1e-12,
            atol: 1e-14,
            grid_size: 101,
            max_steps: 100_000,
        };
        let sol = integrate(&rhs, &[1.0, 1.0, 2.0], (0.0, 1.0), &cfg, None::<&NoStop>).unwrap();
        let x1_end = sol.states[100][0];
        assert!((x1_end - 6.154845485377136).abs() < 1e-9);
        assert_eq!(sol.states[100][1], 1.0);
        assert_eq!(sol.states[100][2], 2.0);
    }

    #[test]
    fn tolerance_sweep_shows_fifth_order_control() {
        // Tightening rtol by 32x should cut the error by at least 16x once
        // tolerance proportionality kicks in.
        let mut errs = Vec::new();
        for k in 0..4 {
            let rtol = 1e-4 * 32.0_f64.powi(-k);
            let cfg = IntegratorConfig {
                rtol,
                atol: 1e-16,
                grid_size: 3,
                max_steps: 100_000,
            };
            let sol = integrate(&decay, &[1.0], (0.0, 1.0), &cfg, None::<&NoStop>).unwrap();
            errs.push((sol.states[2][0] - (-1.0f64).exp()).abs());
        }
        for w in errs.windows(2) {
            assert!(
                w[0] / w[1].max(1e-17) >= 16.0,
                "error ratio too small: {errs:?}"
            );
        }
    }

    #[test]
    fn dense_output_consistent_with_direct_integration() {
        let rtol = 1e-10;
        let cfg = IntegratorConfig {
            rtol,
            atol: 1e-14,
            grid_size: 7,
            max_steps: 100_000,
        };
        let rhs = |t: f64, x: &[f64], dx: &mut [f64]| {
            dx[0] = -x[0] + (2.0 * t).sin();
            dx[1] = x[0] - 0.5 * x[1];
        };
        let sol = integrate(&rhs, &[1.0, 0.0], (0.0, 2.0), &cfg, None::<&NoStop>).unwrap();
        for g in 1..7 {
            let tg = sol.times[g];
            let direct = integrate(&rhs, &[1.0, 0.0], (0.0, tg), &cfg, None::<&NoStop>).unwrap();
            for i in 0..2 {
                let a = sol.states[g][i];
                let b = direct.states[6][i];
                assert!(
                    (a - b).abs() <= 10.0 * rtol * b.abs().max(1.0),
                    "grid point {g} state {i}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn event_truncates_and_regrids() {
        // x' = 1 crossing x = 0.5 at t = 0.5 from x0 = 0.
        let cfg = IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-12,
            grid_size: 11,
            max_steps: 10_000,
        };
        let stop = |_t: f64, x: &[f64]| x[0] >= 0.5;
        let sol = integrate(
            &|_t: f64, _x: &[f64], dx: &mut [f64]| dx[0] = 1.0,
            &[0.0],
            (0.0, 2.0),
            &cfg,
            Some(&stop),
        )
        .unwrap();
        assert!(sol.truncated);
        assert_eq!(sol.times.len(), 11);
        assert_relative_eq!(sol.t_end, 0.5, max_relative = 1e-9);
        // grid stays uniform with the adjusted step
        let dt = sol.times[1] - sol.times[0];
        for w in sol.times.windows(2) {
            assert_relative_eq!(w[1] - w[0], dt, max_relative = 1e-9);
        }
    }

    #[test]
    fn predicate_true_at_start_is_rejected() {
        let cfg = IntegratorConfig::default();
        let stop = |_t: f64, x: &[f64]| x[0] >= -1.0;
        let r = integrate(
            &|_t: f64, _x: &[f64], dx: &mut [f64]| dx[0] = 1.0,
            &[0.0],
            (0.0, 1.0),
            &cfg,
            Some(&stop),
        );
        assert!(matches!(r, Err(DatagenError::StoppedAtStart)));
    }

    #[test]
    fn nonfinite_rhs_is_evaluation_error() {
        let cfg = IntegratorConfig::default();
        let r = integrate(
            &|_t: f64, x: &[f64], dx: &mut [f64]| dx[0] = (x[0] - 1.0).ln(),
            &[0.5],
            (0.0, 1.0),
            &cfg,
            None::<&NoStop>,
        );
        assert!(matches!(r, Err(DatagenError::NonFiniteRhs { .. })));
    }

    #[test]
    fn oscillator_too_fast_for_budget_is_stiffness_error() {
        let cfg = IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-12,
            grid_size: 3,
            max_steps: 200,
        };
        let r = integrate(
            &|t: f64, _x: &[f64], dx: &mut [f64]| dx[0] = (1e8 * t).sin(),
            &[0.0],
            (0.0, 1.0),
            &cfg,
            None::<&NoStop>,
        );
        assert!(matches!(r, Err(DatagenError::Stiffness { .. })));
    }
}
