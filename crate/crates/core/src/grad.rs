//! Reverse-mode (adjoint) differentiation of readout probabilities.
//!
//! Every trainable gate is `exp(-iθG/2)` for a Hermitian generator `G`: a
//! Pauli for plain rotations and `|c⟩⟨c|_control ⊗ Pauli` for the controlled
//! rotations produced by pooling. For `E = ⟨ψ|O|ψ⟩` with `O` diagonal in the
//! computational basis, `dE/dθ_k = Im⟨λ_k|G_k|ψ_k⟩` where `ψ_k` is the state
//! right after gate `k` and `λ_k = U_{>k}† O ψ_final`. One backward sweep
//! serves every parameter.

use num_complex::Complex64 as C64;

use crate::circuit::{
    apply_spec, evaluate, forward_amplitudes, CircuitInput, CircuitTemplate, GateSpec,
    OutcomeDistribution,
};
use crate::error::{arg_err, Result};
use crate::qsim::{kernels, outcome_index, Statevector};

/// `dP(y)/dθ_k` for the four readout outcomes `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbGradient {
    rows: [Vec<f64>; 4],
}

impl ProbGradient {
    pub fn zeros(param_count: usize) -> Self {
        Self { rows: std::array::from_fn(|_| vec![0.0; param_count]) }
    }

    pub fn param_count(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, outcome: usize) -> &[f64] {
        &self.rows[outcome]
    }

    pub fn get(&self, outcome: usize, param: usize) -> f64 {
        self.rows[outcome][param]
    }

    /// Sum over outcomes for each parameter; zero up to round-off.
    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.param_count())
            .map(|k| self.rows.iter().map(|r| r[k]).sum())
            .collect()
    }

    /// Gradient of `Σ_y w_y P(y)`.
    pub fn weighted(&self, weights: &[f64; 4]) -> Vec<f64> {
        (0..self.param_count())
            .map(|k| (0..4).map(|y| weights[y] * self.rows[y][k]).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

fn generator_overlap(lambda: &[C64], psi: &[C64], gate: &GateSpec) -> f64 {
    match gate {
        GateSpec::Rx { qubit, .. } => kernels::im_overlap_x(lambda, psi, *qubit),
        GateSpec::Rz { qubit, .. } => kernels::im_overlap_z(lambda, psi, *qubit),
        GateSpec::Rzz { qubits, .. } => kernels::im_overlap_zz(lambda, psi, qubits[0], qubits[1]),
        GateSpec::ControlledRx { control, control_value, target, .. } => {
            kernels::im_overlap_x_controlled(lambda, psi, *control, *control_value == 1, *target)
        }
        GateSpec::ControlledRz { control, control_value, target, .. } => {
            kernels::im_overlap_z_controlled(lambda, psi, *control, *control_value == 1, *target)
        }
        _ => 0.0,
    }
}

/// Forward pass, then one backward sweep carrying one adjoint state per
/// diagonal observable. `observables` maps the forward distribution to the
/// outcome weights of each observable.
pub(crate) fn adjoint_sweep<F>(
    template: &CircuitTemplate,
    params: &[f64],
    initial: &Statevector,
    input: CircuitInput,
    observables: F,
) -> Result<(OutcomeDistribution, Vec<Vec<f64>>)>
where
    F: FnOnce(&OutcomeDistribution) -> Vec<[f64; 4]>,
{
    let mut psi = forward_amplitudes(template, params, initial, &input)?;
    let outputs = template.output_qubits();
    let dist = crate::circuit::OutcomeDistribution({
        let mut p = [0.0; 4];
        for (i, a) in psi.iter().enumerate() {
            p[outcome_index(i, &outputs)] += a.norm_sqr();
        }
        p
    });
    let weights = observables(&dist);
    let mut lambdas: Vec<Vec<C64>> = weights
        .iter()
        .map(|w| {
            psi.iter()
                .enumerate()
                .map(|(i, a)| a * w[outcome_index(i, &outputs)])
                .collect()
        })
        .collect();
    let mut grads = vec![vec![0.0; template.param_count()]; weights.len()];
    for gate in template.gates().iter().rev() {
        if let Some(k) = gate.param() {
            for (lambda, g) in lambdas.iter().zip(grads.iter_mut()) {
                g[k] += generator_overlap(lambda, &psi, gate);
            }
        }
        apply_spec(&mut psi, gate, params, &input, true);
        for lambda in lambdas.iter_mut() {
            apply_spec(lambda, gate, params, &input, true);
        }
    }
    Ok((dist, grads))
}

/// Exact gradient of all four readout probabilities.
pub fn adjoint_gradient(
    template: &CircuitTemplate,
    params: &[f64],
    initial: &Statevector,
    input: CircuitInput,
) -> Result<(OutcomeDistribution, ProbGradient)> {
    let unit = |y: usize| std::array::from_fn(|k| if k == y { 1.0 } else { 0.0 });
    let (dist, grads) =
        adjoint_sweep(template, params, initial, input, |_| (0..4).map(unit).collect())?;
    let mut it = grads.into_iter();
    let rows = std::array::from_fn(|_| it.next().expect("four observables"));
    Ok((dist, ProbGradient { rows }))
}

/// Gradient of the single diagonal observable `Σ_y w_y P(y)`, with weights
/// chosen after seeing the forward distribution.
pub fn observable_gradient<F>(
    template: &CircuitTemplate,
    params: &[f64],
    initial: &Statevector,
    input: CircuitInput,
    weights: F,
) -> Result<(OutcomeDistribution, Vec<f64>)>
where
    F: FnOnce(&OutcomeDistribution) -> [f64; 4],
{
    let (dist, mut grads) =
        adjoint_sweep(template, params, initial, input, |d| vec![weights(d)])?;
    Ok((dist, grads.pop().expect("one observable")))
}

/// Central finite differences of [`evaluate`]; a test oracle.
pub fn finite_diff_gradient(
    template: &CircuitTemplate,
    params: &[f64],
    initial: &Statevector,
    input: CircuitInput,
    step: f64,
) -> Result<ProbGradient> {
    if !(step > 0.0) {
        return arg_err("finite-difference step must be positive");
    }
    let mut out = ProbGradient::zeros(params.len());
    let mut shifted = params.to_vec();
    for k in 0..params.len() {
        shifted[k] = params[k] + step;
        let plus = evaluate(template, &shifted, initial, input)?;
        shifted[k] = params[k] - step;
        let minus = evaluate(template, &shifted, initial, input)?;
        shifted[k] = params[k];
        for y in 0..4 {
            out.rows[y][k] = (plus.0[y] - minus.0[y]) / (2.0 * step);
        }
    }
    if params.is_empty() {
        // Still validate shapes.
        evaluate(template, params, initial, input)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{assemble, Angle, CircuitConfig};
    use crate::qsim::init_bell;
    use std::f64::consts::PI;

    fn single_rx() -> CircuitTemplate {
        let gates = vec![GateSpec::Rx { qubit: 0, angle: Angle::Param(0) }];
        CircuitTemplate::from_gates(2, gates, [0, 1], vec![]).unwrap()
    }

    #[test]
    fn single_rx_analytic() {
        let t = single_rx();
        let init = Statevector::zero(2).unwrap();
        let (_, g) = adjoint_gradient(&t, &[PI / 2.0], &init, CircuitInput::None).unwrap();
        // P(a=1,b=0) = sin²(θ/2); derivative sin(θ)/2.
        assert!((g.get(2, 0) - 0.5).abs() < 1e-14);
        assert!((g.get(0, 0) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn rz_before_z_readout_has_no_gradient() {
        let gates = vec![
            GateSpec::H { qubit: 0 },
            GateSpec::Rx { qubit: 0, angle: Angle::Param(0) },
            GateSpec::Rz { qubit: 0, angle: Angle::Param(1) },
        ];
        let t = CircuitTemplate::from_gates(2, gates, [0, 1], vec![]).unwrap();
        let init = Statevector::zero(2).unwrap();
        let params = [0.4, 1.3];
        let (_, g) = adjoint_gradient(&t, &params, &init, CircuitInput::None).unwrap();
        let fd = finite_diff_gradient(&t, &params, &init, CircuitInput::None, 1e-4).unwrap();
        for y in 0..4 {
            assert!(g.get(y, 1).abs() < 1e-14);
            assert!(fd.get(y, 1).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_after_readout_is_exactly_zero() {
        // θ[1] only touches qubit 2, which is never read out.
        let gates = vec![
            GateSpec::Rx { qubit: 0, angle: Angle::Param(0) },
            GateSpec::Cz { qubits: [0, 1] },
            GateSpec::Rx { qubit: 2, angle: Angle::Param(1) },
        ];
        let t = CircuitTemplate::from_gates(3, gates, [0, 1], vec![2]).unwrap();
        let init = Statevector::zero(3).unwrap();
        let (_, g) = adjoint_gradient(&t, &[0.3, 0.8], &init, CircuitInput::None).unwrap();
        for y in 0..4 {
            assert_eq!(g.get(y, 1), 0.0);
        }
    }

    #[test]
    fn matches_finite_differences_on_assembled_circuit() {
        let c = CircuitConfig { qubits_per_proc: 4, conv_depth: 2, n_bell: 2, ..Default::default() };
        let t = assemble(&c).unwrap();
        let params: Vec<f64> = (0..t.param_count()).map(|k| (k as f64 * 0.731).sin() * 3.0).collect();
        let init = init_bell(2, 4).unwrap();
        let x = [0.2, -0.4, 1.0, 0.7, -1.3, 0.05, 0.6, -0.9];
        let input = CircuitInput::Features(&x);
        let (dist, g) = adjoint_gradient(&t, &params, &init, input).unwrap();
        let fd = finite_diff_gradient(&t, &params, &init, input, 1e-4).unwrap();
        assert!(g.max_abs_diff(&fd) < 1e-6, "diff {}", g.max_abs_diff(&fd));
        assert!(g.column_sums().iter().all(|s| s.abs() < 1e-9));
        assert!((dist.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn observable_gradient_is_weighted_rows() {
        let c = CircuitConfig { qubits_per_proc: 2, conv_depth: 3, n_bell: 1, ..Default::default() };
        let t = assemble(&c).unwrap();
        let params: Vec<f64> = (0..t.param_count()).map(|k| 0.1 * k as f64).collect();
        let init = init_bell(1, 2).unwrap();
        let x = [PI / 2.0, -PI / 2.0, 0.0, PI / 2.0];
        let w = [0.7, -0.7, -0.7, 0.7];
        let (_, full) = adjoint_gradient(&t, &params, &init, CircuitInput::Features(&x)).unwrap();
        let (_, single) =
            observable_gradient(&t, &params, &init, CircuitInput::Features(&x), |_| w).unwrap();
        for (a, b) in full.weighted(&w).iter().zip(&single) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_nonpositive_step() {
        let t = single_rx();
        let init = Statevector::zero(2).unwrap();
        assert!(finite_diff_gradient(&t, &[0.1], &init, CircuitInput::None, 0.0).is_err());
    }
}
