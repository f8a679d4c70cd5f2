//! Extended CHSH game: a shared Bell pair lifts the mean success
//! probability from the classical 0.75 to cos²(π/8).

use dqml::campaign::{run_chsh_cell, ChshCampaign};
use dqml::datasets::ChshEmbedding;
use dqml::train::LossKind;

fn main() -> dqml::Result<()> {
    let campaign = ChshCampaign::default();
    for bell in [0, 1] {
        let run = run_chsh_cell(&campaign, bell, ChshEmbedding::Optimal, LossKind::Product, 0)?;
        println!(
            "Bell-{bell}: success {:.5}, S = {:.4}, accuracy {:.3}",
            run.success, run.s, run.accuracy
        );
    }
    println!("bounds: classical 0.75, quantum {:.5}", (std::f64::consts::PI / 8.0).cos().powi(2));
    Ok(())
}
