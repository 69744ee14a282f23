use pinndae::autodiff::Tape;
use pinndae::net::{unit_scaling, Activation, Network, NetworkSpec, OutputActivation};

fn main() {
    let net = Network::init(
        NetworkSpec {
            input_dim: 7,
            hidden_widths: vec![32, 32],
            output_dim: 7,
            hidden_activation: Activation::Tanh,
            output_activation: OutputActivation::Identity,
            seed: 1,
        },
        unit_scaling(7, 7),
    )
    .unwrap();
    let mut tape = Tape::new();
    let g = net.build_graph(&mut tape, Some(0));
    let dots = g.output_dots.unwrap();
    let mut loss = tape.constant(0.0);
    for (&v, &d) in g.outputs.iter().zip(&dots) {
        let q = tape.mul(v, d);
        loss = tape.add(loss, q);
    }
    tape.mark_output(loss);
    println!("nodes: {}", tape.len());
    let x = [0.3, 0.4, 0.5, 0.6, 0.7, 0.2, 0.1];
    let t0 = std::time::Instant::now();
    let mut acc = 0.0;
    let n = 3000;
    for _ in 0..n {
        tape.forward(&x, &net.params).unwrap();
        let g = tape.backward(loss).unwrap();
        acc += g[0];
    }
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "fwd+bwd: {:.2} us/point  ({:.1} ns/node-visit)  [{acc:.3e}]",
        dt / n as f64 * 1e6,
        dt / n as f64 / (2.0 * tape.len() as f64) * 1e9
    );
}
