//! Haar-random local unitaries: unitarity and the first moment E|U_00|² = 1/d.

use dqml::qsim::haar_unitary;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dqml::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for dim in [2, 4, 16] {
        let n = 2000;
        let mut worst: f64 = 0.0;
        let mut moment = 0.0;
        for _ in 0..n {
            let u = haar_unitary(dim, &mut rng)?.into_matrix();
            worst = worst.max(u.unitarity_error());
            moment += u.get(0, 0).norm_sqr();
        }
        println!(
            "d = {dim:2}: max ‖U†U − I‖ = {worst:.1e}, mean |U_00|² = {:.4} (1/d = {:.4})",
            moment / n as f64,
            1.0 / dim as f64
        );
    }
    Ok(())
}
