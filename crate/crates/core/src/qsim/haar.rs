use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::gates::GateMatrix;
use crate::error::{arg_err, Result};

/// A unitary drawn from the Haar measure on U(dim).
#[derive(Clone, Debug, PartialEq)]
pub struct HaarUnitary(GateMatrix);

impl HaarUnitary {
    pub fn matrix(&self) -> &GateMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> GateMatrix {
        self.0
    }
}

impl AsRef<GateMatrix> for HaarUnitary {
    fn as_ref(&self) -> &GateMatrix {
        &self.0
    }
}

/// Ginibre matrix -> QR -> fix column phases by the diagonal of R.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<HaarUnitary> {
    if dim < 2 {
        return arg_err(format!("Haar dimension must be at least 2, got {dim}"));
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre = DMatrix::<C64>::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let qr = ginibre.qr();
    let q = qr.q();
    let r = qr.r();
    let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
    for col in 0..dim {
        let d = r[(col, col)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..dim {
            entries[row * dim + col] = q[(row, col)] * phase;
        }
    }
    Ok(HaarUnitary(GateMatrix::from_rows(dim, entries)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_to_machine_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(16, &mut rng).unwrap();
        assert!(u.matrix().unitarity_error() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = haar_unitary(16, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = haar_unitary(16, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_dimension_one() {
        assert!(haar_unitary(1, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn first_moment_dim_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| haar_unitary(2, &mut rng).unwrap().matrix().get(0, 0).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn second_moment_dim_four() {
        // E|U_00|^4 = 2 / (d (d + 1)) for Haar U(d). Without the phase fix the
        // QR output is biased and this moment drifts.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40_000;
        let m: f64 = (0..n)
            .map(|_| haar_unitary(4, &mut rng).unwrap().matrix().get(0, 0).norm_sqr().powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((m - 0.1).abs() < 0.005, "moment {m}");
    }

    #[test]
    fn invariant_under_left_multiplication() {
        // |(V U)_00|^2 has the same first moment as |U_00|^2.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = haar_unitary(4, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let n = 40_000;
        let mean: f64 = (0..n)
            .map(|_| {
                let u = haar_unitary(4, &mut rng).unwrap();
                v.matrix().matmul(u.matrix()).unwrap().get(0, 0).norm_sqr()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.25).abs() < 0.005, "mean {mean}");
    }
}
