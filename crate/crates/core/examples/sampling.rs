//! Shot sampling with real mid-circuit measurements and classically
//! controlled pooling, compared with the exact deferred-measurement marginal.

use dqml::circuit::sampling::sample_outcomes;
use dqml::circuit::{assemble, evaluate, CircuitConfig, CircuitInput};
use dqml::qsim::init_bell;
use dqml::train::init_params;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dqml::Result<()> {
    let config = CircuitConfig { qubits_per_proc: 4, n_bell: 1, conv_depth: 2, ..Default::default() };
    let template = assemble(&config)?;
    let params = init_params(template.param_count(), 3);
    let initial = init_bell(config.n_bell, config.qubits_per_proc)?;
    let x = [0.9, -0.2, 1.4, 0.3, -1.0, 0.6, 2.2, -0.8];
    let input = CircuitInput::Features(&x);

    let exact = evaluate(&template, &params, &initial, input)?;
    let shots = 200_000;
    let counts = sample_outcomes(&template, &params, &initial, input, shots, &mut ChaCha8Rng::seed_from_u64(1))?;
    println!("outcome  exact     sampled   z-score");
    for (y, &c) in counts.iter().enumerate() {
        let p = exact.probs()[y];
        let f = c as f64 / shots as f64;
        let se = (p * (1.0 - p) / shots as f64).sqrt();
        println!("{:02b}       {p:.5}   {f:.5}   {:+.2}", y, (f - p) / se);
    }
    Ok(())
}
