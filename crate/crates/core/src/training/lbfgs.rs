//! Limited-memory BFGS with two-loop recursion and a strong-Wolfe line
//! search. A failed line search returns the best iterate found so far with a
//! status flag rather than an error.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LbfgsConfig {
    pub max_iters: usize,
    pub history: usize,
    /// Sufficient-decrease constant of the Wolfe conditions.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub grad_tol: f64,
    pub max_line_search_evals: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            max_iters: 300,
            history: 50,
            c1: 1e-4,
            c2: 0.9,
            grad_tol: 1e-9,
            max_line_search_evals: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LbfgsStatus {
    IterationBudget,
    GradientConverged,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct LbfgsTrace {
    pub f_per_iteration: Vec<f64>,
    pub status: LbfgsStatus,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// H_k * g via the two-loop recursion with the standard gamma scaling.
fn two_loop(gradient: &[f64], pairs: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = gradient.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for p in pairs.iter().rev() {
        let a = p.rho * dot(&p.s, &q);
        for (qi, yi) in q.iter_mut().zip(&p.y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(last) = pairs.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for (p, a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = p.rho * dot(&p.y, &q);
        for (qi, si) in q.iter_mut().zip(&p.s) {
            *qi += (a - b) * si;
        }
    }
    q
}

struct LineSearchResult {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    x: Vec<f64>,
}

/// Strong-Wolfe bracketing plus bisection zoom (Nocedal & Wright, Alg. 3.5
/// and 3.6). Returns None if the eval budget runs out without satisfying
/// both conditions.
fn strong_wolfe<F, E>(
    f: &mut F,
    x0: &[f64],
    f0: f64,
    g0: &[f64],
    direction: &[f64],
    cfg: &LbfgsConfig,
) -> Result<Option<LineSearchResult>, E>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>), E>,
{
    let dphi0 = dot(g0, direction);
    if dphi0 >= 0.0 {
        return Ok(None);
    }
    let probe = |alpha: f64, x0: &[f64]| -> Vec<f64> {
        x0.iter()
            .zip(direction)
            .map(|(x, d)| x + alpha * d)
            .collect()
    };
    let mut evals = 0usize;
    let eval = |alpha: f64, f: &mut F, evals: &mut usize| -> Result<(f64, Vec<f64>, Vec<f64>), E> {
        *evals += 1;
        let x = probe(alpha, x0);
        let (fv, gv) = f(&x)?;
        Ok((fv, gv, x))
    };

    let zoom = |mut lo: f64,
                    mut f_lo: f64,
                    mut hi: f64,
                    f: &mut F,
                    evals: &mut usize|
     -> Result<Option<LineSearchResult>, E> {
        while *evals < cfg.max_line_search_evals {
            let alpha = 0.5 * (lo + hi);
            let (fa, ga, xa) = eval(alpha, f, evals)?;
            if fa > f0 + cfg.c1 * alpha * dphi0 || fa >= f_lo {
                hi = alpha;
            } else {
                let dphi = dot(&ga, direction);
                if dphi.abs() <= -cfg.c2 * dphi0 {
                    return Ok(Some(LineSearchResult {
                        alpha,
                        f: fa,
                        g: ga,
                        x: xa,
                    }));
                }
                if dphi * (hi - lo) >= 0.0 {
                    hi = lo;
                }
                lo = alpha;
                f_lo = fa;
            }
            if (hi - lo).abs() < 1e-16 {
                break;
            }
        }
        Ok(None)
    };

    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut alpha = 1.0;
    let alpha_max = 1e3;
    let mut first = true;
    while evals < cfg.max_line_search_evals {
        let (fa, ga, xa) = eval(alpha, f, &mut evals)?;
        if fa > f0 + cfg.c1 * alpha * dphi0 || (!first && fa >= f_prev) {
            return zoom(alpha_prev, f_prev, alpha, f, &mut evals);
        }
        let dphi = dot(&ga, direction);
        if dphi.abs() <= -cfg.c2 * dphi0 {
            return Ok(Some(LineSearchResult {
                alpha,
                f: fa,
                g: ga,
                x: xa,
            }));
        }
        if dphi >= 0.0 {
            return zoom(alpha, fa, alpha_prev, f, &mut evals);
        }
        alpha_prev = alpha;
        f_prev = fa;
        alpha = (2.0 * alpha).min(alpha_max);
        first = false;
    }
    Ok(None)
}

/// Minimizes `f`, calling `on_iterate(iter, x, f)` after each accepted step.
pub fn lbfgs_minimize<F, E>(
    f: &mut F,
    x0: Vec<f64>,
    cfg: &LbfgsConfig,
    mut on_iterate: impl FnMut(usize, &[f64], f64),
) -> Result<(Vec<f64>, LbfgsTrace), E>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>), E>,
{
    let mut x = x0;
    let (mut fx, mut gx) = f(&x)?;
    let mut trace = LbfgsTrace {
        f_per_iteration: Vec::new(),
        status: LbfgsStatus::IterationBudget,
    };
    if norm(&gx) < cfg.grad_tol {
        trace.status = LbfgsStatus::GradientConverged;
        return Ok((x, trace));
    }
    let mut pairs: VecDeque<Pair> = VecDeque::new();
    for iter in 0..cfg.max_iters {
        let mut direction = two_loop(&gx, &pairs);
        for d in direction.iter_mut() {
            *d = -*d;
        }
        let result = match strong_wolfe(f, &x, fx, &gx, &direction, cfg)? {
            Some(r) => r,
            None => {
                trace.status = LbfgsStatus::LineSearchFailed;
                return Ok((x, trace));
            }
        };
        let s: Vec<f64> = result.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = result.g.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * norm(&s) * norm(&y) {
            if pairs.len() == cfg.history {
                pairs.pop_front();
            }
            let rho = 1.0 / sy;
            pairs.push_back(Pair { s, y, rho });
        }
        x = result.x;
        fx = result.f;
        gx = result.g;
        let _ = result.alpha;
        trace.f_per_iteration.push(fx);
        on_iterate(iter, &x, fx);
        if norm(&gx) < cfg.grad_tol {
            trace.status = LbfgsStatus::GradientConverged;
            return Ok((x, trace));
        }
    }
    Ok((x, trace))
}
