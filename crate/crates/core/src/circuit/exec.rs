use num_complex::Complex64 as C64;

use super::{Angle, CircuitTemplate, GateSpec};
use crate::error::{arg_err, Result};
use crate::qsim::{kernels, marginal_from_amps, GateMatrix, Statevector};

/// Per-evaluation data bound into the embedding gates.
#[derive(Clone, Copy, Debug)]
pub enum CircuitInput<'a> {
    None,
    /// Features for processor A followed by processor B.
    Features(&'a [f64]),
    /// One Haar unitary per processor, A then B.
    Haar(&'a [GateMatrix]),
}

impl<'a> CircuitInput<'a> {
    fn features(&self) -> &'a [f64] {
        match self {
            CircuitInput::Features(f) => f,
            _ => &[],
        }
    }
}

/// Joint distribution of the two readout bits, ordered
/// (0,0), (0,1), (1,0), (1,1) for (a, b).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeDistribution(pub [f64; 4]);

impl OutcomeDistribution {
    pub fn p(&self, a: u8, b: u8) -> f64 {
        self.0[2 * a as usize + b as usize]
    }

    pub fn probs(&self) -> &[f64; 4] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

pub(crate) fn resolve_angle(angle: &Angle, params: &[f64], input: &CircuitInput) -> f64 {
    angle.resolve(params, input.features())
}

/// Applies one gate (or its inverse) in place.
pub(crate) fn apply_spec(
    amps: &mut [C64],
    gate: &GateSpec,
    params: &[f64],
    input: &CircuitInput,
    inverse: bool,
) {
    let sign = if inverse { -1.0 } else { 1.0 };
    match gate {
        GateSpec::H { qubit } => kernels::apply_h(amps, *qubit),
        GateSpec::Cz { qubits } => kernels::apply_cz(amps, qubits[0], qubits[1]),
        GateSpec::Rx { qubit, angle } => {
            kernels::apply_rx(amps, *qubit, sign * resolve_angle(angle, params, input))
        }
        GateSpec::Rz { qubit, angle } => {
            kernels::apply_rz(amps, *qubit, sign * resolve_angle(angle, params, input))
        }
        GateSpec::Rzz { qubits, angle } => kernels::apply_rzz(
            amps,
            qubits[0],
            qubits[1],
            sign * resolve_angle(angle, params, input),
        ),
        GateSpec::ControlledRx { control, control_value, target, angle } => {
            kernels::apply_rx_controlled(
                amps,
                *control,
                *control_value == 1,
                *target,
                sign * resolve_angle(angle, params, input),
            )
        }
        GateSpec::ControlledRz { control, control_value, target, angle } => {
            kernels::apply_rz_controlled(
                amps,
                *control,
                *control_value == 1,
                *target,
                sign * resolve_angle(angle, params, input),
            )
        }
        GateSpec::HaarBlock { processor, qubits } => {
            let CircuitInput::Haar(blocks) = input else {
                unreachable!("input validated before execution")
            };
            let u = &blocks[*processor];
            if inverse {
                kernels::apply_dense(amps, qubits, u.dagger().entries());
            } else {
                kernels::apply_dense(amps, qubits, u.entries());
            }
        }
    }
}

pub(crate) fn check_inputs(
    template: &CircuitTemplate,
    params: &[f64],
    initial: &Statevector,
    input: &CircuitInput,
) -> Result<()> {
    if params.len() != template.param_count() {
        return arg_err(format!(
            "expected {} parameters, got {}",
            template.param_count(),
            params.len()
        ));
    }
    if initial.num_qubits() != template.num_qubits() {
        return arg_err(format!(
            "initial state has {} qubits, template needs {}",
            initial.num_qubits(),
            template.num_qubits()
        ));
    }
    let nf = template.feature_count();
    if nf > 0 {
        match input {
            CircuitInput::Features(f) if f.len() == nf => {}
            _ => return arg_err(format!("template needs exactly {nf} features")),
        }
    }
    if let Some(dim) = template.haar_dim() {
        let needed = template
            .gates()
            .iter()
            .filter_map(|g| match g {
                GateSpec::HaarBlock { processor, .. } => Some(processor + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        match input {
            CircuitInput::Haar(blocks)
                if blocks.len() >= needed && blocks.iter().all(|b| b.dim() == dim) => {}
            _ => return arg_err(format!("template needs {needed} Haar blocks of dimension {dim}")),
        }
    }
    Ok(())
}

pub(crate) fn forward_amplitudes(
    template: &CircuitTemplate,
    params: &[f64],
    initial: &Statevector,
    input: &CircuitInput,
) -> Result<Vec<C64>> {
    check_inputs(template, params, initial, input)?;
    let mut amps = initial.amplitudes().to_vec();
    for g in template.gates() {
        apply_spec(&mut amps, g, params, input, false);
    }
    Ok(amps)
}

pub(crate) fn distribution_of(template: &CircuitTemplate, amps: &[C64]) -> OutcomeDistribution {
    let p = marginal_from_amps(amps, &template.output_qubits());
    OutcomeDistribution([p[0], p[1], p[2], p[3]])
}

/// Exact joint distribution of the two readout bits, marginalizing every
/// other qubit (pooled qubits included).
pub fn evaluate(
    template: &CircuitTemplate,
    params: &[f64],
    initial: &Statevector,
    input: CircuitInput,
) -> Result<OutcomeDistribution> {
    let amps = forward_amplitudes(template, params, initial, &input)?;
    Ok(distribution_of(template, &amps))
}
