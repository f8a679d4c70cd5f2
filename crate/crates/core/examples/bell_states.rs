//! Bell pairs shared between the processors and the CHSH correlators they
//! reach under the textbook measurement settings.

use dqml::model::{analytic_chsh_reference, chsh_correlator};
use dqml::qsim::init_bell;

fn main() -> dqml::Result<()> {
    // Two qubits per processor: A holds 0..2, B holds 2..4.
    for n_pairs in 0..=2 {
        let psi = init_bell(n_pairs, 2)?;
        let joint = psi.marginal_probs(&[0, 2])?;
        println!("Bell-{n_pairs}: P(a0, b0) over (00, 01, 10, 11) = {joint:.3?}");
    }

    let c = analytic_chsh_reference();
    let score = chsh_correlator(&c)?;
    println!("correlators {c:.4?}");
    println!("S = {:.6} (2√2 = {:.6}), P_win = {:.6}", score.s, 2.0 * 2f64.sqrt(), score.p_win);
    Ok(())
}
