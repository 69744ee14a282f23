//! Van de Vusse CSTR: full-order reference dynamics, dimensionless residual
//! evaluators for the three PINN variants, and the dataset model.
//!
//! The reference right-hand side works in per-hour units (the rate constants
//! are per hour) while trajectory grids are specified in seconds; the
//! conversion happens exactly once, in the dataset model. Dimensionless
//! states divide concentrations by the feed concentration and temperatures
//! by the feed temperature; rates divide by the reference rate constant.

use crate::autodiff::Algebra;
use crate::datagen::{self, DatagenError, DatasetModel, SimConfig, Trajectory};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Error)]
pub enum CstrError {
    #[error("temperature {0} K must be > 0")]
    NonPositiveTemperature(f64),
    #[error("variant expects {expected} outputs, got {got}")]
    OutputArity { expected: usize, got: usize },
}

/// Reactor parameters. The activation energies carry their sign inside the
/// value and the Arrhenius law divides by T without an extra minus sign,
/// exactly as tabulated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CstrParams {
    pub c_a_in: f64,
    pub t_in: f64,
    pub k10: f64,
    pub k20: f64,
    pub k30: f64,
    pub ea1: f64,
    pub ea2: f64,
    pub ea3: f64,
    pub dh_ab: f64,
    pub dh_bc: f64,
    pub dh_ad: f64,
    pub rho: f64,
    pub cp: f64,
    pub cp_k: f64,
    pub kw: f64,
    pub ar: f64,
    /// Reactor volume in cubic meters; the energy balance needs liters.
    pub vr_m3: f64,
    pub m_k: f64,
}

impl Default for CstrParams {
    fn default() -> Self {
        Self {
            c_a_in: 5.10,
            t_in: 378.1,
            k10: 1.287e12,
            k20: 1.287e12,
            k30: 9.043e9,
            ea1: -9758.3,
            ea2: -9758.3,
            ea3: -8560.0,
            dh_ab: 4.2,
            dh_bc: -11.0,
            dh_ad: -41.85,
            rho: 0.9342,
            cp: 3.01,
            cp_k: 2.0,
            kw: 4032.0,
            ar: 0.215,
            vr_m3: 0.01,
            m_k: 5.0,
        }
    }
}

impl CstrParams {
    pub fn vr_liters(&self) -> f64 {
        self.vr_m3 * 1000.0
    }
}

/// Normalization constants for the dimensionless formulation plus the four
/// derived coefficients of the scaled energy balances, recomputed from the
/// parameters rather than hard-coded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CstrScaling {
    /// Horizon, seconds.
    pub tau_s: f64,
    /// Flow normalization, 1/h.
    pub q_f: f64,
    /// Cooling duty normalization, kJ/h (negative).
    pub q_dot_k_f: f64,
    /// Rate-constant normalization, 1/h.
    pub k_f: f64,
    /// -dH_AB k_f c_A,in / (rho Cp T_in); heats the tank per unit k1* cA*.
    pub reaction_heat: f64,
    /// kw A_R / (rho Cp V_R), jacket-to-tank exchange, 1/h.
    pub exchange_tank: f64,
    /// kw A_R / (m_K Cp_K), tank-to-jacket exchange, 1/h.
    pub exchange_jacket: f64,
    /// Qdot_K,f / (m_K Cp_K T_in), cooling input coefficient, 1/h.
    pub cooling_input: f64,
}

impl CstrScaling {
    pub fn from_params(p: &CstrParams) -> Self {
        Self {
            tau_s: 60.0,
            q_f: 28.4,
            q_dot_k_f: -2227.0,
            k_f: 36.0,
            reaction_heat: -p.dh_ab * 36.0 * p.c_a_in / (p.rho * p.cp * p.t_in),
            exchange_tank: p.kw * p.ar / (p.rho * p.cp * p.vr_liters()),
            exchange_jacket: p.kw * p.ar / (p.m_k * p.cp_k),
            cooling_input: -2227.0 / (p.m_k * p.cp_k * p.t_in),
        }
    }

    pub fn tau_hours(&self) -> f64 {
        self.tau_s / SECONDS_PER_HOUR
    }

    /// (cA, cB, T, TK) -> (cA*, cB*, T*, TK*).
    pub fn state_to_dimless(&self, p: &CstrParams, x: &[f64; 4]) -> [f64; 4] {
        [
            x[0] / p.c_a_in,
            x[1] / p.c_a_in,
            x[2] / p.t_in,
            x[3] / p.t_in,
        ]
    }

    /// (Vdot/VR, QdotK) -> dimensionless, both in [0, 1] over the ranges.
    pub fn controls_to_dimless(&self, u: &[f64; 2]) -> [f64; 2] {
        [u[0] / self.q_f, u[1] / self.q_dot_k_f]
    }

    /// (k1, k2, k3) -> (k1*, k2*, k3*) with k3 carrying the feed concentration.
    pub fn rates_to_dimless(&self, p: &CstrParams, k: &[f64; 3]) -> [f64; 3] {
        [k[0] / self.k_f, k[1] / self.k_f, p.c_a_in * k[2] / self.k_f]
    }
}

/// Arrhenius rate constants, per hour. `k_i = k_i0 exp(Ea_i / T)`.
pub fn arrhenius(t_kelvin: f64, p: &CstrParams) -> Result<(f64, f64, f64), CstrError> {
    if t_kelvin <= 0.0 {
        return Err(CstrError::NonPositiveTemperature(t_kelvin));
    }
    Ok((
        p.k10 * (p.ea1 / t_kelvin).exp(),
        p.k20 * (p.ea2 / t_kelvin).exp(),
        p.k30 * (p.ea3 / t_kelvin).exp(),
    ))
}

/// Full-order reference dynamics, per-hour units.
/// State (cA, cB, T, TK), controls (Vdot/VR in 1/h, QdotK in kJ/h).
pub fn full_rhs(
    x: &[f64; 4],
    u: &[f64; 2],
    p: &CstrParams,
) -> Result<[f64; 4], CstrError> {
    let (k1, k2, k3) = arrhenius(x[2], p)?;
    Ok(rhs_with_rates(x, u, &[k1, k2, k3], p))
}

/// The balances with externally supplied rate constants; shared by the
/// reference model and the dimensional-consistency checks.
pub fn rhs_with_rates(x: &[f64; 4], u: &[f64; 2], k: &[f64; 3], p: &CstrParams) -> [f64; 4] {
    let (c_a, c_b, t, t_k) = (x[0], x[1], x[2], x[3]);
    let (q, q_dot_k) = (u[0], u[1]);
    let dc_a = q * (p.c_a_in - c_a) - k[0] * c_a - k[2] * c_a * c_a;
    let dc_b = -q * c_b + k[0] * c_a - k[1] * c_b;
    let dt = q * (p.t_in - t)
        - (k[0] * c_a * p.dh_ab + k[1] * c_b * p.dh_bc + k[2] * c_a * c_a * p.dh_ad)
            / (p.rho * p.cp)
        + p.kw * p.ar / (p.rho * p.cp * p.vr_liters()) * (t_k - t);
    let dt_k = (q_dot_k + p.kw * p.ar * (t - t_k)) / (p.m_k * p.cp_k);
    [dc_a, dc_b, dt, dt_k]
}

/// Physics-knowledge variants. The output vector always starts with the four
/// dimensionless states (cA*, cB*, T*, TK*) followed by the variant's
/// unmeasured algebraic states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CstrVariant {
    /// Mole balances with net reaction rates (rA*, rB*).
    PinnA,
    /// Mole and energy balances with individual rates (r1*, r2*, r3*).
    PinnB,
    /// Mole and energy balances with rate constants (k1*, k2*, k3*);
    /// the Arrhenius law itself is never supplied.
    PinnC,
}

impl CstrVariant {
    pub fn n_outputs(self) -> usize {
        match self {
            CstrVariant::PinnA => 6,
            CstrVariant::PinnB | CstrVariant::PinnC => 7,
        }
    }

    pub fn n_residuals(self) -> usize {
        match self {
            CstrVariant::PinnA => 2,
            CstrVariant::PinnB | CstrVariant::PinnC => 4,
        }
    }

    pub fn output_names(self) -> Vec<String> {
        let mut names = vec!["c_A".into(), "c_B".into(), "T".into(), "T_K".into()];
        match self {
            CstrVariant::PinnA => names.extend(["r_A".into(), "r_B".into()]),
            CstrVariant::PinnB => names.extend(["r_1".into(), "r_2".into(), "r_3".into()]),
            CstrVariant::PinnC => names.extend(["k_1".into(), "k_2".into(), "k_3".into()]),
        }
        names
    }
}

/// Dimensionless residuals, `(1/tau) d(state*)/dt* - RHS*`, per hour.
///
/// `outputs` and `output_dots` follow the variant ordering; `controls` are
/// the dimensionless pair ((Vdot/VR)*, QdotK*). Written against [`Algebra`]
/// so the same expressions serve tape graphs and plain-number checks.
pub fn residuals<A: Algebra>(
    alg: &mut A,
    variant: CstrVariant,
    outputs: &[A::V],
    output_dots: &[A::V],
    controls: &[A::V],
    scaling: &CstrScaling,
    params: &CstrParams,
) -> Result<Vec<A::V>, CstrError> {
    if outputs.len() != variant.n_outputs() || output_dots.len() != variant.n_outputs() {
        return Err(CstrError::OutputArity {
            expected: variant.n_outputs(),
            got: outputs.len(),
        });
    }
    let inv_tau = 1.0 / scaling.tau_hours();
    let (ca, cb, t, tk) = (outputs[0], outputs[1], outputs[2], outputs[3]);
    let (q, qk) = (controls[0], controls[1]);
    let qf = scaling.q_f;
    let kf = scaling.k_f;

    // Flow terms shared by every variant.
    let one = alg.constant(1.0);
    let one_m_ca = alg.sub(one, ca);
    let qv = alg.scale(q, qf);
    let flow_a = alg.mul(qv, one_m_ca); // qf q* (1 - cA*)
    let flow_b = {
        let m = alg.mul(qv, cb);
        alg.neg(m) // -qf q* cB*
    };

    // Reaction contributions to the two mole balances, per variant.
    let (rate_a, rate_b) = match variant {
        CstrVariant::PinnA => {
            let ra = alg.scale(outputs[4], kf);
            let rb = alg.scale(outputs[5], kf);
            (ra, rb)
        }
        CstrVariant::PinnB => {
            let r1 = outputs[4];
            let r2 = outputs[5];
            let r3 = outputs[6];
            let sum13 = alg.add(r1, r3);
            let neg13 = alg.neg(sum13);
            let ra = alg.scale(neg13, kf); // -(r1* + r3*) kf
            let diff12 = alg.sub(r1, r2);
            let rb = alg.scale(diff12, kf); // (r1* - r2*) kf
            (ra, rb)
        }
        CstrVariant::PinnC => {
            let k1 = outputs[4];
            let k2 = outputs[5];
            let k3 = outputs[6];
            let k1ca = alg.mul(k1, ca);
            let ca2 = alg.mul(ca, ca);
            let k3ca2 = alg.mul(k3, ca2);
            let sum = alg.add(k1ca, k3ca2);
            let neg = alg.neg(sum);
            let ra = alg.scale(neg, kf); // -(k1* cA* + k3* cA*^2) kf
            let k2cb = alg.mul(k2, cb);
            let diff = alg.sub(k1ca, k2cb);
            let rb = alg.scale(diff, kf); // (k1* cA* - k2* cB*) kf
            (ra, rb)
        }
    };

    let rhs_a = alg.add(flow_a, rate_a);
    let rhs_b = alg.add(flow_b, rate_b);
    let res_a = {
        let lhs = alg.scale(output_dots[0], inv_tau);
        alg.sub(lhs, rhs_a)
    };
    let res_b = {
        let lhs = alg.scale(output_dots[1], inv_tau);
        alg.sub(lhs, rhs_b)
    };
    if variant == CstrVariant::PinnA {
        return Ok(vec![res_a, res_b]);
    }

    // Energy balances (PINN-B / PINN-C). The heat generation term uses the
    // variant's rate outputs; enthalpy ratios fold into constants.
    let heat = match variant {
        CstrVariant::PinnB => {
            let r1 = outputs[4];
            let r2s = alg.scale(outputs[5], params.dh_bc / params.dh_ab);
            let r3s = alg.scale(outputs[6], params.dh_ad / params.dh_ab);
            let s = alg.add(r1, r2s);
            let s = alg.add(s, r3s);
            alg.scale(s, scaling.reaction_heat)
        }
        CstrVariant::PinnC => {
            let k1ca = alg.mul(outputs[4], ca);
            let k2cb = alg.mul(outputs[5], cb);
            let ca2 = alg.mul(ca, ca);
            let k3ca2 = alg.mul(outputs[6], ca2);
            let r2s = alg.scale(k2cb, params.dh_bc / params.dh_ab);
            let r3s = alg.scale(k3ca2, params.dh_ad / params.dh_ab);
            let s = alg.add(k1ca, r2s);
            let s = alg.add(s, r3s);
            alg.scale(s, scaling.reaction_heat)
        }
        CstrVariant::PinnA => unreachable!(),
    };
    let one_m_t = alg.sub(one, t);
    let flow_t = alg.mul(qv, one_m_t);
    let tk_m_t = alg.sub(tk, t);
    let exch_t = alg.scale(tk_m_t, scaling.exchange_tank);
    let rhs_t = alg.add(flow_t, heat);
    let rhs_t = alg.add(rhs_t, exch_t);
    let res_t = {
        let lhs = alg.scale(output_dots[2], inv_tau);
        alg.sub(lhs, rhs_t)
    };

    let t_m_tk = alg.sub(t, tk);
    let exch_k = alg.scale(t_m_tk, scaling.exchange_jacket);
    let duty = alg.scale(qk, scaling.cooling_input);
    let rhs_tk = alg.add(exch_k, duty);
    let res_tk = {
        let lhs = alg.scale(output_dots[3], inv_tau);
        alg.sub(lhs, rhs_tk)
    };

    Ok(vec![res_a, res_b, res_t, res_tk])
}

/// Operating ranges of the initial states and controls (lb, ub):
/// cA, cB (mol/L), T, TK (K), Vdot/VR (1/h), QdotK (kJ/h).
pub fn operating_ranges() -> [(f64, f64); 6] {
    [
        (2.14, 2.57),
        (0.87, 1.09),
        (387.0, 403.0),
        (371.0, 386.0),
        (5.0, 28.4),
        (-2227.0, 0.0),
    ]
}

/// Extreme-value envelope any generated trajectory must respect
/// (minimum and maximum over whole trajectories).
pub fn extreme_ranges() -> [(f64, f64); 4] {
    [(1.74, 2.74), (0.87, 1.28), (385.0, 403.0), (371.0, 395.0)]
}

/// Initial-state range of the extrapolation split: the feed-side
/// concentration window below the training range.
pub fn extrapolation_ca0_range() -> (f64, f64) {
    (1.71, 2.14)
}

/// Dataset model: states recorded in mol/L and K on a seconds grid.
pub struct CstrDataset {
    pub params: CstrParams,
    /// Per-dimension bounds for (cA0, cB0, T0, TK0, q, QK).
    pub bounds: [(f64, f64); 6],
}

impl Default for CstrDataset {
    fn default() -> Self {
        Self {
            params: CstrParams::default(),
            bounds: operating_ranges(),
        }
    }
}

impl CstrDataset {
    /// Same operating point but with the extrapolation cA0 window.
    pub fn extrapolation() -> Self {
        let mut bounds = operating_ranges();
        bounds[0] = extrapolation_ca0_range();
        Self {
            params: CstrParams::default(),
            bounds,
        }
    }
}

impl DatasetModel for CstrDataset {
    fn name(&self) -> String {
        "cstr".into()
    }
    fn state_names(&self) -> Vec<String> {
        vec!["c_A".into(), "c_B".into(), "T".into(), "T_K".into()]
    }
    fn control_names(&self) -> Vec<String> {
        vec!["q".into(), "Qdot_K".into()]
    }
    fn extra_names(&self) -> Vec<String> {
        vec![]
    }
    fn n_initial(&self) -> usize {
        4
    }
    fn draw_bounds(&self) -> Vec<(f64, f64)> {
        self.bounds.to_vec()
    }
    fn simulate(&self, draw: &[f64], sim: &SimConfig) -> Result<Trajectory, DatagenError> {
        let x0 = [draw[0], draw[1], draw[2], draw[3]];
        let u = [draw[4], draw[5]];
        let p = self.params.clone();
        // Integrate in hours; the grid is written back in seconds.
        let rhs = move |_t: f64, x: &[f64], dx: &mut [f64]| {
            let state = [x[0], x[1], x[2], x[3]];
            match full_rhs(&state, &u, &p) {
                Ok(d) => dx.copy_from_slice(&d),
                Err(_) => dx.fill(f64::NAN),
            }
        };
        let sol = datagen::integrate(
            &rhs,
            &x0,
            (0.0, sim.t_end / SECONDS_PER_HOUR),
            &datagen::IntegratorConfig {
                rtol: sim.rtol,
                atol: sim.atol,
                grid_size: sim.grid_size,
                max_steps: 1_000_000,
            },
            None::<&fn(f64, &[f64]) -> bool>,
        )?;
        Ok(Trajectory {
            times: sol.times.iter().map(|t| t * SECONDS_PER_HOUR).collect(),
            states: sol.states,
            controls: u.to_vec(),
            extras: vec![],
            initial: x0.to_vec(),
            truncated: sol.truncated,
        })
    }
    fn provenance(&self) -> serde_json::Value {
        serde_json::json!({
            "params": self.params,
            "scaling": CstrScaling::from_params(&self.params),
        })
    }
}
