//! Command-line workbench: dataset builds, training/evaluation of the
//! experiment matrix, incidence reports, and the counter-example demos.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use pinndae::harness::counterexample::{sm5_demo, sm6_demo, CounterexampleBudget};
use pinndae::harness::experiment::{generate_data, run_experiment, ExperimentConfig};
use pinndae::harness::incidence::incidence_report;
use pinndae::separator::{rates, SeparatorParams};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "pinndae",
    about = "Physics-informed neural network workbench for partially-known DAE process models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build reference datasets from a config file and write CSVs + manifest.
    GenData {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train the (data set x run) matrix of an experiment config and write
    /// checkpoints, histories, predictions, and metrics.json.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Run the paper-scale protocol (5x5 matrix, N_e = 10000).
        #[arg(long)]
        paper_scale: bool,
    },
    /// Re-evaluate and print aggregate metrics for a config (trains if no
    /// artifacts exist; training is deterministic, so this reproduces them).
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Also score the extrapolation split (CSTR only; on by default
        /// during training).
        #[arg(long)]
        extrapolation: bool,
    },
    /// Render the incidence matrix and matching verdict for a model variant.
    Incidence {
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "")]
        variant: String,
        #[arg(long, default_value_t = 0)]
        setting: usize,
        #[arg(long)]
        json: bool,
    },
    /// Run a counter-example demo (sm5 or sm6).
    Counterexample {
        which: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 9)]
        second_seed: u64,
    },
    /// Print the aggregate table of an existing metrics.json.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Dump per-segment separator diagnostics as CSV for one operating point.
    SeparatorDiag {
        #[arg(long, default_value_t = 0.10)]
        h_aq: f64,
        #[arg(long, default_value_t = 0.12)]
        h_dpz: f64,
        #[arg(long, default_value_t = 9e-4)]
        v_in: f64,
        #[arg(long, default_value_t = 0.1)]
        eps_in: f64,
        #[arg(long, default_value_t = 1e-3)]
        d32: f64,
        #[arg(long, default_value_t = 0.0383)]
        r_v: f64,
    },
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).context("parsing config JSON")?;
    cfg.apply_env();
    Ok(cfg)
}

fn print_aggregate(report: &serde_json::Value) {
    let Some(agg) = report.get("aggregate_test").and_then(|v| v.as_object()) else {
        println!("no aggregate metrics present");
        return;
    };
    println!("{:<12} {:>10} {:>10}", "state", "MAPE[%]", "R2");
    for (state, m) in agg {
        println!(
            "{:<12} {:>10.4} {:>10.4}",
            state,
            m["mape_pct"].as_f64().unwrap_or(f64::NAN),
            m["r2"].as_f64().unwrap_or(f64::NAN)
        );
    }
    if let Some(extra) = report.get("aggregate_extrapolation").and_then(|v| v.as_object()) {
        println!("-- extrapolation split --");
        for (state, m) in extra {
            println!(
                "{:<12} {:>10.4} {:>10.4}",
                state,
                m["mape_pct"].as_f64().unwrap_or(f64::NAN),
                m["r2"].as_f64().unwrap_or(f64::NAN)
            );
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenData { config } => {
            let cfg = load_config(&config)?;
            let dir = generate_data(&cfg)?;
            println!("datasets written under {}", dir.display());
        }
        Command::Train { config, paper_scale } => {
            let mut cfg = load_config(&config)?;
            if paper_scale {
                cfg.paper_scale = true;
            }
            let report = run_experiment(&cfg)?;
            let n_ok = report.runs.iter().filter(|r| !r.diverged).count();
            println!(
                "trained {} runs ({} converged); metrics at {}/metrics.json",
                report.runs.len(),
                n_ok,
                cfg.out_dir.display()
            );
            print_aggregate(&serde_json::to_value(&report)?);
        }
        Command::Eval { config, extrapolation } => {
            let cfg = load_config(&config)?;
            let metrics_path = cfg.out_dir.join("metrics.json");
            let value: serde_json::Value = if metrics_path.exists() {
                serde_json::from_str(&std::fs::read_to_string(&metrics_path)?)?
            } else {
                serde_json::to_value(run_experiment(&cfg)?)?
            };
            if extrapolation && value.get("aggregate_extrapolation").is_none() {
                bail!("no extrapolation split in this experiment (CSTR only)");
            }
            print_aggregate(&value);
        }
        Command::Incidence {
            model,
            variant,
            setting,
            json,
        } => {
            let report = incidence_report(&model, &variant, setting)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.rendered);
            }
        }
        Command::Counterexample {
            which,
            seed,
            second_seed,
        } => match which.as_str() {
            "sm5" => {
                let report = sm5_demo(seed, &CounterexampleBudget::default())?;
                print!("{}", report.rendered_matrix);
                println!(
                    "estimated constant states: x_2 MAPE {:.3}%, x_3 MAPE {:.3}%",
                    report.mape_x2_pct, report.mape_x3_pct
                );
                println!(
                    "final loss {:.3e} (data {:.3e}, physics {:.3e}, init {:.3e})",
                    report.final_total_loss,
                    report.final_mse_data,
                    report.final_mse_physics,
                    report.final_mse_init
                );
                println!("rank-deficient matrix, yet the states are recovered: the heuristic is not necessary.");
            }
            "sm6" => {
                let report = sm6_demo((seed, second_seed), &CounterexampleBudget::default())?;
                print!("{}", report.rendered_matrix);
                println!(
                    "two seeds fit y (MAPE {:.3}% / {:.3}%) and satisfy the physics (worst gap {:.2e} / {:.2e})",
                    report.y_mape_pct[0],
                    report.y_mape_pct[1],
                    report.physics_gap[0],
                    report.physics_gap[1]
                );
                println!(
                    "yet disagree on the unmeasured states: mean |dx_1| = {:.3}, mean |dx_2| = {:.3}",
                    report.x1_disagreement, report.x2_disagreement
                );
                println!("full column rank, yet no unique estimate: the heuristic is not sufficient.");
            }
            other => bail!("unknown counter-example '{other}' (use sm5 or sm6)"),
        },
        Command::Report { dir } => {
            let value: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(dir.join("metrics.json"))?)?;
            println!(
                "{} / {} / setting {} / {} regime",
                value["model"].as_str().unwrap_or("?"),
                value["variant"].as_str().unwrap_or("?"),
                value["setting"],
                value["regime"].as_str().unwrap_or("?")
            );
            print_aggregate(&value);
        }
        Command::SeparatorDiag {
            h_aq,
            h_dpz,
            v_in,
            eps_in,
            d32,
            r_v,
        } => {
            let params = SeparatorParams::default();
            let result = rates(h_aq, h_dpz, v_in, eps_in, d32, r_v, &params)?;
            println!("segment,hold_up,flow,d32_dpz,v_s,v_c");
            for (i, seg) in result.segments.iter().enumerate() {
                println!(
                    "{i},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                    seg.hold_up, seg.flow, seg.d32_dpz, seg.v_s, seg.v_c
                );
            }
            eprintln!(
                "totals: Vdot_s = {:.6e}, Vdot_c = {:.6e}, Vdot_w = {:.6e}",
                result.v_s, result.v_c, result.v_w
            );
        }
    }
    Ok(())
}
