//! Shot-based reference simulation with explicit mid-circuit measurement.
//!
//! A controlled gate whose control qubit has not been read yet triggers a
//! projective measurement of that qubit; the gate is then applied as a plain
//! rotation only if the recorded bit equals its control value. Post-measurement
//! branches are memoized by their outcome prefix, so each shot costs a handful
//! of random draws once the (at most `2^pooled`) branches have been simulated.

use num_complex::Complex64 as C64;
use rand::Rng;
use std::collections::HashMap;

use super::exec::{apply_spec, check_inputs, resolve_angle};
use super::{CircuitInput, CircuitTemplate, GateSpec};
use crate::error::Result;
use crate::qsim::{kernels, marginal_from_amps, Statevector};

enum Node {
    /// Waiting on a measurement of `qubit`; post-measurement states for
    /// outcome 0 and 1 with the probability of reading 1.
    Measure { qubit: usize, p1: f64, next_gate: usize, branches: [Vec<C64>; 2] },
    Done { probs: [f64; 4] },
}

struct Sampler<'a> {
    template: &'a CircuitTemplate,
    params: &'a [f64],
    input: CircuitInput<'a>,
}

impl Sampler<'_> {
    /// Runs from `start` with the outcomes in `known` until an unread control
    /// qubit or the end of the circuit.
    fn advance(&self, mut amps: Vec<C64>, start: usize, known: &HashMap<usize, u8>) -> Node {
        let gates = self.template.gates();
        for (offset, g) in gates[start..].iter().enumerate() {
            let idx = start + offset;
            match g {
                GateSpec::ControlledRx { control, control_value, target, angle }
                | GateSpec::ControlledRz { control, control_value, target, angle } => {
                    let Some(&bit) = known.get(control) else {
                        let mask = 1usize << control;
                        let p1: f64 = amps
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| i & mask != 0)
                            .map(|(_, a)| a.norm_sqr())
                            .sum();
                        let project = |keep_one: bool, p: f64| -> Vec<C64> {
                            let scale = if p > 0.0 { 1.0 / p.sqrt() } else { 0.0 };
                            amps.iter()
                                .enumerate()
                                .map(|(i, a)| {
                                    if (i & mask != 0) == keep_one { a * scale } else { C64::new(0.0, 0.0) }
                                })
                                .collect()
                        };
                        let branches = [project(false, 1.0 - p1), project(true, p1)];
                        return Node::Measure { qubit: *control, p1, next_gate: idx, branches };
                    };
                    if bit == *control_value {
                        let theta = resolve_angle(angle, self.params, &self.input);
                        if matches!(g, GateSpec::ControlledRx { .. }) {
                            kernels::apply_rx(&mut amps, *target, theta);
                        } else {
                            kernels::apply_rz(&mut amps, *target, theta);
                        }
                    }
                }
                other => apply_spec(&mut amps, other, self.params, &self.input, false),
            }
        }
        let p = marginal_from_amps(&amps, &self.template.output_qubits());
        Node::Done { probs: [p[0], p[1], p[2], p[3]] }
    }
}

/// Draws `shots` samples of the readout pair `(a, b)` and returns counts in
/// the order (0,0), (0,1), (1,0), (1,1).
pub fn sample_outcomes<R: Rng + ?Sized>(
    template: &CircuitTemplate,
    params: &[f64],
    initial: &Statevector,
    input: CircuitInput,
    shots: u64,
    rng: &mut R,
) -> Result<[u64; 4]> {
    check_inputs(template, params, initial, &input)?;
    let sampler = Sampler { template, params, input };
    // Key: sequence of (qubit, outcome) read so far.
    let mut cache: HashMap<Vec<(usize, u8)>, Node> = HashMap::new();
    cache.insert(Vec::new(), sampler.advance(initial.amplitudes().to_vec(), 0, &HashMap::new()));
    let mut counts = [0u64; 4];
    for _ in 0..shots {
        let mut prefix: Vec<(usize, u8)> = Vec::new();
        loop {
            let node = cache.get(&prefix).expect("prefix inserted before lookup");
            match node {
                Node::Done { probs } => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = 3;
                    for (k, p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = k;
                            break;
                        }
                    }
                    counts[pick] += 1;
                    break;
                }
                Node::Measure { qubit, p1, next_gate, branches } => {
                    let bit = u8::from(rng.random::<f64>() < *p1);
                    let (qubit, next_gate) = (*qubit, *next_gate);
                    let mut child = prefix.clone();
                    child.push((qubit, bit));
                    if !cache.contains_key(&child) {
                        let known: HashMap<usize, u8> = child.iter().copied().collect();
                        let state = branches[bit as usize].clone();
                        let n = sampler.advance(state, next_gate, &known);
                        cache.insert(child.clone(), n);
                    }
                    prefix = child;
                }
            }
        }
    }
    Ok(counts)
}
