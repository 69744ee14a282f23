//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them). Training-based criteria share
//! lazily-trained bundles so the expensive runs happen once.

use pinndae::autodiff::Tape;
use pinndae::cstr::CstrVariant;
use pinndae::datagen::{integrate, IntegratorConfig};
use pinndae::harness::counterexample::{sm5_demo, CounterexampleBudget};
use pinndae::harness::experiment::{run_experiment, ExperimentConfig, Overrides, RunReport};
use pinndae::harness::incidence::incidence_report;
use pinndae::harness::metrics::median;
use pinndae::net::{Activation, Network, NetworkSpec, OutputActivation, ScalingSpec};
use pinndae::separator::{inlet_dsd, rates, SeparatorParams};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::LazyLock;
use std::time::Instant;

fn verdict(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion:2} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

// ---------------------------------------------------------------- 1: AD --

#[test]
fn criterion_01_autodiff_derivatives_match_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked_params = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let input_dim = rng.random_range(1..5usize);
        let widths = vec![rng.random_range(4..17usize), rng.random_range(4..17usize)];
        let spec = NetworkSpec {
            input_dim,
            hidden_widths: widths,
            output_dim: rng.random_range(1..4usize),
            hidden_activation: if rng.random_range(0..2) == 0 {
                Activation::Tanh
            } else {
                Activation::Sigmoid
            },
            output_activation: OutputActivation::Identity,
            seed: rng.random_range(0..u64::MAX / 2),
        };
        let scaling = ScalingSpec {
            input_lo: vec![-1.0; input_dim],
            input_hi: vec![1.0; input_dim],
            output_scale: vec![1.0; spec.output_dim],
        };
        let net = Network::init(spec, scaling).unwrap();
        let mut tape = Tape::new();
        let graph = net.build_graph(&mut tape, None);
        for id in &graph.outputs {
            tape.mark_output(*id);
        }
        let inputs: Vec<f64> = (0..input_dim).map(|_| rng.random_range(-0.9..0.9)).collect();

        // Reverse mode vs central differences on a parameter subsample.
        tape.forward(&inputs, &net.params).unwrap();
        let grad = tape.backward(graph.outputs[0]).unwrap();
        let h = 1e-6;
        for k in (0..net.params.len()).step_by(net.params.len() / 12 + 1) {
            let mut p = net.params.clone();
            p[k] += h;
            let up = tape.forward(&inputs, &p).unwrap()[0];
            p[k] = net.params[k] - h;
            let dn = tape.forward(&inputs, &p).unwrap()[0];
            let fd = (up - dn) / (2.0 * h);
            let rel = (grad[k] - fd).abs() / grad[k].abs().max(fd.abs()).max(1e-3);
            worst = worst.max(rel);
            checked_params += 1;
        }

        // Forward-mode time derivative vs central differences in the input.
        let d_fwd = tape.time_derivative(&inputs, &net.params, 0).unwrap()[0];
        let mut shifted = inputs.clone();
        shifted[0] += h;
        let up = tape.forward(&shifted, &net.params).unwrap()[0];
        shifted[0] = inputs[0] - h;
        let dn = tape.forward(&shifted, &net.params).unwrap()[0];
        let fd = (up - dn) / (2.0 * h);
        let rel = (d_fwd - fd).abs() / d_fwd.abs().max(fd.abs()).max(1e-3);
        worst = worst.max(rel);
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        1,
        "autodiff gradients",
        worst < 1e-6 && elapsed < 10.0,
        &format!("worst relative error {worst:.2e} over 100 MLPs ({checked_params} params), {elapsed:.1} s"),
    );
}

// -------------------------------------------------------- 2: integrator --

#[test]
fn criterion_02_integrator_accuracy() {
    let start = Instant::now();
    let cfg = IntegratorConfig {
        rtol: 1e-12,
        atol: 1e-14,
        grid_size: 11,
        max_steps: 200_000,
    };
    type NoStop = fn(f64, &[f64]) -> bool;
    let decay = integrate(
        &|_t: f64, x: &[f64], dx: &mut [f64]| dx[0] = -x[0],
        &[1.0],
        (0.0, 1.0),
        &cfg,
        None::<&NoStop>,
    )
    .unwrap();
    let err_decay = (decay.states[10][0] - (-1.0f64).exp()).abs();

    let sm5 = integrate(
        &|_t: f64, x: &[f64], dx: &mut [f64]| {
            dx[0] = x[0] * x[1] + x[2];
            dx[1] = 0.0;
            dx[2] = 0.0;
        },
        &[1.0, 1.0, 2.0],
        (0.0, 1.0),
        &cfg,
        None::<&NoStop>,
    )
    .unwrap();
    let err_sm5 = (sm5.states[10][0] - (3.0 * std::f64::consts::E - 2.0)).abs();
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        2,
        "integrator accuracy",
        err_decay < 1e-10 && err_sm5 < 1e-9 && elapsed < 1.0,
        &format!("decay error {err_decay:.2e}, three-state error {err_sm5:.2e}, {elapsed:.2} s"),
    );
}

// ---------------------------------------------------- 3: incidence suite --

#[test]
fn criterion_03_incidence_golden_suite() {
    let start = Instant::now();
    let cases: &[(&str, &str, usize, bool, &[(usize, usize)])] = &[
        ("demo", "", 0, true, &[(0, 0), (2, 0), (2, 1)]),
        ("cstr", "pinn-a", 0, true, &[(0, 0), (1, 1)]),
        (
            "cstr",
            "pinn-b",
            0,
            true,
            &[(0, 0), (0, 2), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2)],
        ),
        (
            "cstr",
            "pinn-c",
            0,
            true,
            &[(0, 0), (0, 2), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2)],
        ),
        (
            "cstr",
            "pinn-c",
            1,
            false,
            &[
                (0, 0),
                (0, 1),
                (0, 3),
                (1, 0),
                (1, 1),
                (1, 2),
                (2, 0),
                (2, 1),
                (2, 2),
                (2, 3),
            ],
        ),
        (
            "cstr",
            "pinn-c",
            2,
            true,
            &[
                (0, 1),
                (0, 3),
                (1, 1),
                (1, 2),
                (2, 0),
                (2, 1),
                (2, 2),
                (2, 3),
                (3, 0),
            ],
        ),
        (
            "cstr",
            "pinn-c",
            3,
            true,
            &[
                (0, 1),
                (0, 3),
                (1, 1),
                (1, 2),
                (2, 0),
                (2, 1),
                (2, 2),
                (2, 3),
                (3, 0),
            ],
        ),
        ("separator", "pinn-base", 0, true, &[(1, 0), (2, 0), (2, 1)]),
        ("counterexample-sm5", "", 0, false, &[(0, 0), (0, 1)]),
        (
            "counterexample-sm6",
            "",
            0,
            true,
            &[(0, 0), (0, 1), (1, 0), (1, 1)],
        ),
    ];
    let mut all_ok = true;
    let mut failures = Vec::new();
    for (model, variant, setting, expect_rank, expect_crosses) in cases {
        let a = incidence_report(model, variant, *setting).unwrap();
        let b = incidence_report(model, variant, *setting).unwrap();
        let ok = a.full_column_rank == *expect_rank
            && a.crosses == *expect_crosses
            && a.rendered == b.rendered;
        if !ok {
            all_ok = false;
            failures.push(format!("{model}/{variant}/s{setting}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        3,
        "incidence golden suite",
        all_ok && elapsed < 1.0,
        &format!(
            "10 matrices checked, {} mismatch(es) {:?}, {elapsed:.2} s",
            failures.len(),
            failures
        ),
    );
}

// ------------------------------------------------------------- 4: SM5 --

#[test]
fn criterion_04_sm5_counterexample_end_to_end() {
    let start = Instant::now();
    let report = sm5_demo(1, &CounterexampleBudget::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = !report.full_column_rank
        && report.mape_x2_pct < 5.0
        && report.mape_x3_pct < 5.0
        && elapsed < 120.0;
    verdict(
        4,
        "rank-deficient system still estimated",
        pass,
        &format!(
            "x2 MAPE {:.3}%, x3 MAPE {:.3}%, total loss {:.2e}, {elapsed:.0} s",
            report.mape_x2_pct, report.mape_x3_pct, report.final_total_loss
        ),
    );
}

// --------------------------------------------- shared training bundles --

struct CstrBundle {
    pinn_c: Vec<RunReport>,
    vanilla: Vec<RunReport>,
}

fn cstr_config(variant: &str, setting: usize, out: &str) -> ExperimentConfig {
    ExperimentConfig {
        model: "cstr".into(),
        variant: variant.into(),
        setting,
        regime: "low".into(),
        dataset_seeds: vec![0],
        runs_per_dataset: 2,
        out_dir: std::env::temp_dir().join("pinndae-acceptance").join(out),
        overrides: Overrides::default(),
        ..ExperimentConfig::default()
    }
}

static CSTR: LazyLock<CstrBundle> = LazyLock::new(|| {
    let pinn = run_experiment(&cstr_config("pinn-c", 0, "cstr-pinn-c")).unwrap();
    let vanilla = run_experiment(&cstr_config("vanilla", 0, "cstr-vanilla")).unwrap();
    CstrBundle {
        pinn_c: pinn.runs,
        vanilla: vanilla.runs,
    }
});

fn median_metric(runs: &[RunReport], state: &str, mape: bool, extrapolation: bool) -> f64 {
    let mut vals: Vec<f64> = runs
        .iter()
        .filter(|r| !r.diverged)
        .filter_map(|r| {
            let split = if extrapolation {
                r.extrapolation.as_ref()?
            } else {
                &r.test
            };
            split.get(state).map(|m| if mape { m.mape_pct } else { m.r2 })
        })
        .collect();
    median(&mut vals)
}

// ------------------------------------- 5: algebraic state estimation --

#[test]
fn criterion_05_cstr_rate_constant_estimation() {
    let start = Instant::now();
    let k1 = median_metric(&CSTR.pinn_c, "k_1", true, false);
    let k2 = median_metric(&CSTR.pinn_c, "k_2", true, false);
    let k3 = median_metric(&CSTR.pinn_c, "k_3", true, false);
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        5,
        "rate constants estimated without their law",
        k1 < 15.0 && k2 < 15.0 && k3 < 15.0,
        &format!("k1 {k1:.2}%, k2 {k2:.2}%, k3 {k3:.2}% (median over 2 runs), {elapsed:.0} s"),
    );
}

// ------------------------------------------- 6: PINN beats vanilla ANN --

#[test]
fn criterion_06_pinn_beats_vanilla_on_measured_states() {
    let mut detail = String::new();
    let mut pass = true;
    for state in ["c_A", "c_B", "T", "T_K"] {
        let p = median_metric(&CSTR.pinn_c, state, true, false);
        let v = median_metric(&CSTR.vanilla, state, true, false);
        detail.push_str(&format!("{state}: {p:.3}% vs {v:.3}%; "));
        if !(p < v) {
            pass = false;
        }
    }
    verdict(6, "physics regularization helps every state", pass, &detail);
}

// ----------------------------- 7: differential estimation dichotomy --

#[test]
fn criterion_07_differential_estimation_dichotomy() {
    let start = Instant::now();
    let s2 = run_experiment(&cstr_config("pinn-c", 2, "cstr-pinn-c-s2")).unwrap();
    let s1 = run_experiment(&cstr_config("pinn-c", 1, "cstr-pinn-c-s1")).unwrap();
    let r2_t = median_metric(&s2.runs, "T", false, false);
    let r2_ca = median_metric(&s1.runs, "c_A", false, false);
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        7,
        "full-rank setting works, rank-deficient fails",
        r2_t >= 0.85 && r2_ca < 0.5 && elapsed < 3600.0,
        &format!("R2(T | setting 2) = {r2_t:.3}, R2(c_A | setting 1) = {r2_ca:.3}, {elapsed:.0} s"),
    );
}

// ------------------------------------------- 8: extrapolation ordering --

#[test]
fn criterion_08_extrapolation_ordering() {
    let p = median_metric(&CSTR.pinn_c, "c_A", true, true);
    let v = median_metric(&CSTR.vanilla, "c_A", true, true);
    verdict(
        8,
        "physics helps out of distribution",
        p < v,
        &format!("extrapolation c_A MAPE: {p:.3}% (PINN-C) vs {v:.3}% (vanilla)"),
    );
}

// -------------------------------------------- 9: separator estimation --

#[test]
fn criterion_09_separator_estimation() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        model: "separator".into(),
        variant: "pinn-base".into(),
        regime: "low".into(),
        dataset_seeds: vec![0],
        runs_per_dataset: 2,
        out_dir: std::env::temp_dir().join("pinndae-acceptance").join("separator-base"),
        overrides: Overrides {
            n_segments: Some(100),
            ..Overrides::default()
        },
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg).unwrap();
    let h_dpz = median_metric(&report.runs, "h_DPZ", true, false);
    let v_s = median_metric(&report.runs, "Vdot_s", true, false);
    let v_c = median_metric(&report.runs, "Vdot_c", true, false);
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        9,
        "separator heights and hidden rates",
        h_dpz < 2.0 && v_s < 5.0 && v_c < 15.0 && elapsed < 3600.0,
        &format!("h_DPZ {h_dpz:.3}%, Vdot_s {v_s:.3}%, Vdot_c {v_c:.3}%, {elapsed:.0} s"),
    );
}

// --------------------------------------- 10: separator physics suite --

#[test]
fn criterion_10_separator_physics_properties() {
    let start = Instant::now();
    let params = SeparatorParams::default();

    // Axial volume conservation along the march.
    let v_in = 8.5e-4;
    let march = rates(0.102, 0.121, v_in, 0.12, 9.7e-4, 0.039, &params).unwrap();
    let mut flow = v_in;
    let mut removed = 0.0;
    let mut conservation_ok = true;
    for seg in &march.segments {
        let v_w = (seg.v_s - seg.v_c) * (1.0 - params.dpz_hold_up) / params.dpz_hold_up;
        removed += seg.v_s + v_w;
        flow = seg.flow;
    }
    if ((v_in - flow) - removed).abs() > 1e-12 * v_in {
        conservation_ok = false;
    }

    // No dispersed phase, no rates.
    let empty = rates(0.1, 0.12, 9e-4, 0.0, 1e-3, 0.0383, &params).unwrap();
    let zero_ok = empty.v_s == 0.0 && empty.v_c == 0.0 && empty.v_w == 0.0;

    // Inlet DSD reconstructs its Sauter diameter.
    let dsd = inlet_dsd(1e-3, 0.32, 50).unwrap();
    let d32 = dsd.sauter_diameter();
    let dsd_ok = (d32 - 1e-3).abs() / 1e-3 < 0.01;

    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        10,
        "separator physics identities",
        conservation_ok && zero_ok && dsd_ok && elapsed < 10.0,
        &format!(
            "conservation gap {:.1e}, zero-inlet rates ({}, {}, {}), d32 {d32:.4e}, {elapsed:.1} s",
            ((v_in - flow) - removed).abs(),
            empty.v_s,
            empty.v_c,
            empty.v_w
        ),
    );
}
