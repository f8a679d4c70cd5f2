//! The distributed classifier on top of the readout distribution: weighted
//! expectation, sign prediction, losses, accuracy and CHSH metrics.

use serde::{Deserialize, Serialize};

use crate::circuit::OutcomeDistribution;
use crate::error::{arg_err, Result};
use crate::qsim::GateMatrix;

/// Sign pattern `m(a) m(b)` with `m(bit) = 1 - 2 bit`, ordered
/// (0,0), (0,1), (1,0), (1,1).
pub const PARITY: [f64; 4] = [1.0, -1.0, -1.0, 1.0];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Four unconstrained weights.
    #[default]
    Free,
    /// `ω · PARITY` with a trainable scale `ω > 0`.
    ParityTrainable,
    /// `PARITY` with `ω = 1`.
    ParityFixedUnit,
}

/// Outcome weights `ω_ab`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub mode: WeightMode,
    pub values: [f64; 4],
}

impl WeightVector {
    pub fn parity(scale: f64) -> Self {
        Self { mode: WeightMode::ParityTrainable, values: PARITY.map(|s| s * scale) }
    }

    pub fn parity_unit() -> Self {
        Self { mode: WeightMode::ParityFixedUnit, values: PARITY }
    }

    pub fn free(values: [f64; 4]) -> Self {
        Self { mode: WeightMode::Free, values }
    }

    /// Starting point for training: parity with unit scale in every mode.
    pub fn initial(mode: WeightMode) -> Self {
        Self { mode, values: PARITY }
    }

    /// Positive scale for parity modes; for free weights, the largest
    /// magnitude (so `E / scale` stays in `[-1, 1]`).
    pub fn scale(&self) -> f64 {
        match self.mode {
            WeightMode::Free => self.values.iter().map(|v| v.abs()).fold(0.0, f64::max),
            _ => self.values[0],
        }
    }

    /// Number of trainable weight parameters.
    pub fn trainable_len(&self) -> usize {
        match self.mode {
            WeightMode::Free => 4,
            WeightMode::ParityTrainable => 1,
            WeightMode::ParityFixedUnit => 0,
        }
    }

    pub fn trainable(&self) -> Vec<f64> {
        match self.mode {
            WeightMode::Free => self.values.to_vec(),
            WeightMode::ParityTrainable => vec![self.values[0]],
            WeightMode::ParityFixedUnit => Vec::new(),
        }
    }

    /// Chain rule from `dL/dω_ab` onto the trainable parameters.
    pub fn project_gradient(&self, d_values: &[f64; 4]) -> Vec<f64> {
        match self.mode {
            WeightMode::Free => d_values.to_vec(),
            WeightMode::ParityTrainable => {
                vec![d_values.iter().zip(PARITY).map(|(g, s)| g * s).sum()]
            }
            WeightMode::ParityFixedUnit => Vec::new(),
        }
    }

    /// Writes trainable parameters back. Parity scales are kept positive.
    pub fn set_trainable(&mut self, t: &[f64]) {
        match self.mode {
            WeightMode::Free => self.values.copy_from_slice(&t[..4]),
            WeightMode::ParityTrainable => {
                let w = t[0].max(1e-6);
                self.values = PARITY.map(|s| s * w);
            }
            WeightMode::ParityFixedUnit => {}
        }
    }
}

/// `E = Σ_ab ω_ab P(a,b)`.
pub fn expectation(dist: &OutcomeDistribution, weights: &WeightVector) -> f64 {
    dist.0.iter().zip(&weights.values).map(|(p, w)| p * w).sum()
}

/// Sign of `E`, with `E = 0` mapped to `+1`.
pub fn predict(e: f64) -> i8 {
    if e >= 0.0 {
        1
    } else {
        -1
    }
}

/// A labelled model output `(L^g, E)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scored {
    pub label: i8,
    pub expectation: f64,
}

impl Scored {
    pub fn new(label: i8, expectation: f64) -> Self {
        Self { label, expectation }
    }
}

/// Loss value and `dLoss/dE` per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub d_expectation: Vec<f64>,
}

fn nonempty(batch: &[Scored]) -> Result<f64> {
    if batch.is_empty() {
        return arg_err("empty batch");
    }
    Ok(batch.len() as f64)
}

/// `-(1/N) Σ L^g E`.
pub fn loss_product(batch: &[Scored]) -> Result<LossEval> {
    let n = nonempty(batch)?;
    let value = -batch.iter().map(|s| s.label as f64 * s.expectation).sum::<f64>() / n;
    let d_expectation = batch.iter().map(|s| -(s.label as f64) / n).collect();
    Ok(LossEval { value, d_expectation })
}

/// `(1/N) Σ |L^g - E|²`.
pub fn loss_mse(batch: &[Scored]) -> Result<LossEval> {
    let n = nonempty(batch)?;
    let value = batch
        .iter()
        .map(|s| (s.label as f64 - s.expectation).powi(2))
        .sum::<f64>()
        / n;
    let d_expectation = batch
        .iter()
        .map(|s| 2.0 * (s.expectation - s.label as f64) / n)
        .collect();
    Ok(LossEval { value, d_expectation })
}

pub fn accuracy(batch: &[Scored]) -> Result<f64> {
    let n = nonempty(batch)?;
    let hits = batch.iter().filter(|s| predict(s.expectation) == s.label).count();
    Ok(hits as f64 / n)
}

/// Per-input CHSH success probability `(1 + L^g E/ω) / 2`, clamped to
/// `[0, 1]` after allowing `1e-9` of round-off in `|E/ω| ≤ 1`.
pub fn chsh_success(e: f64, label: i8, scale: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return arg_err(format!("weight scale must be positive, got {scale}"));
    }
    let r = e / scale;
    if r.abs() > 1.0 + 1e-9 {
        return arg_err(format!("|E/ω| = {} exceeds 1", r.abs()));
    }
    Ok((0.5 * (1.0 + label as f64 * r)).clamp(0.0, 1.0))
}

/// `⟨A_s B_t⟩` for `s, t ∈ {0, 1}`, indexed `[s][t]`.
pub type Correlators = [[f64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshScore {
    pub s: f64,
    pub p_win: f64,
}

/// `S = ⟨A₀B₀⟩ + ⟨A₀B₁⟩ + ⟨A₁B₀⟩ − ⟨A₁B₁⟩`, `P_win = 1/2 + S/8`.
pub fn chsh_correlator(c: &Correlators) -> Result<ChshScore> {
    if c.iter().flatten().any(|v| !(v.abs() <= 1.0 + 1e-12)) {
        return arg_err("correlators must lie in [-1, 1]");
    }
    let s = c[0][0] + c[0][1] + c[1][0] - c[1][1];
    Ok(ChshScore { s, p_win: 0.5 + s / 8.0 })
}

/// `⟨A_s ⊗ B_t⟩` on |Φ⁺⟩ with `A₀ = Z`, `A₁ = X`, `B₀ = (X+Z)/√2`,
/// `B₁ = (Z−X)/√2`, computed by explicit 4×4 matrix algebra.
pub fn analytic_chsh_reference() -> Correlators {
    use num_complex::Complex64 as C64;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (x, z) = (GateMatrix::x(), GateMatrix::z());
    let b0 = x.add(&z).expect("2x2").scale(C64::new(r, 0.0));
    let b1 = z.add(&x.scale(C64::new(-1.0, 0.0))).expect("2x2").scale(C64::new(r, 0.0));
    let alice = [z, x];
    let bob = [b0, b1];
    // |Φ⁺⟩ with Alice on the low bit: amplitudes at |00⟩ and |11⟩.
    let phi = [C64::new(r, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(r, 0.0)];
    let mut out = [[0.0; 2]; 2];
    for (s, a) in alice.iter().enumerate() {
        for (t, b) in bob.iter().enumerate() {
            let op = b.kron(a);
            let mut e = C64::new(0.0, 0.0);
            for row in 0..4 {
                for col in 0..4 {
                    e += phi[row].conj() * op.get(row, col) * phi[col];
                }
            }
            out[s][t] = e.re;
        }
    }
    out
}
