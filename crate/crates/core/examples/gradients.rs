//! Adjoint gradients of the readout distribution against central finite
//! differences on a full two-processor circuit.

use dqml::circuit::{assemble, CircuitConfig, CircuitInput};
use dqml::grad::{adjoint_gradient, finite_diff_gradient};
use dqml::qsim::init_bell;
use dqml::train::init_params;

fn main() -> dqml::Result<()> {
    let config = CircuitConfig { n_bell: 2, conv_depth: 3, mixing_depth: 1, ..Default::default() };
    let template = assemble(&config)?;
    let params = init_params(template.param_count(), 5);
    let initial = init_bell(config.n_bell, config.qubits_per_proc)?;
    let x = [0.3, 1.1, -0.4, 2.0, 0.7, -1.2, 0.05, 1.6];

    let (dist, adj) = adjoint_gradient(&template, &params, &initial, CircuitInput::Features(&x))?;
    let fd = finite_diff_gradient(&template, &params, &initial, CircuitInput::Features(&x), 1e-5)?;
    println!("P = {}, {} gates", template.param_count(), template.gates().len());
    println!("P(a, b) = {:.5?}", dist.probs());
    println!("max |adjoint − finite difference| = {:.2e}", adj.max_abs_diff(&fd));
    println!("column sums (should vanish): max {:.1e}", adj.column_sums().iter().fold(0.0f64, |m, v| m.max(v.abs())));
    Ok(())
}
