use pinndae::harness::experiment::{run_experiment, ExperimentConfig, Overrides};

fn main() {
    let t0 = std::time::Instant::now();
    let cfg = ExperimentConfig {
        model: "cstr".into(),
        variant: "pinn-c".into(),
        regime: "low".into(),
        dataset_seeds: vec![0],
        runs_per_dataset: 1,
        out_dir: "/tmp/probe-cstr3".into(),
        overrides: Overrides {
            lbfgs_epochs: Some(2500),
            ..Overrides::default()
        },
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg).unwrap();
    let run = &report.runs[0];
    for (name, m) in &run.test {
        println!("  {name}: MAPE {:.3}%  R2 {:.4}", m.mape_pct, m.r2);
    }
    println!("elapsed {:.0}s", t0.elapsed().as_secs_f64());
}
