use pinndae::harness::counterexample::{sm5_demo, CounterexampleBudget};

fn main() {
    let budget = CounterexampleBudget {
        adam_epochs: 2000,
        lbfgs_iters: 600,
        collocation: 200,
    };
    for seed in 0u64..6 {
        let t0 = std::time::Instant::now();
        let r = sm5_demo(seed, &budget).unwrap();
        println!(
            "seed {seed}: x2 {:.3}% x3 {:.3}% total {:.3e} ({:.0}s)",
            r.mape_x2_pct, r.mape_x3_pct, r.final_total_loss,
            t0.elapsed().as_secs_f64()
        );
    }
}
