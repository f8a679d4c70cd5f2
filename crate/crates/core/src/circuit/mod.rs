//! Two-processor model circuits: layer builders, template assembly with a
//! named parameter layout, exact evaluation and a mid-circuit-measurement
//! sampling oracle.
//!
//! Pooling is lowered by deferred measurement: a measured qubit becomes the
//! control of outcome-conditioned rotations and is then left untouched, so the
//! exact marginal over the output qubits equals the statistics of the
//! measure-and-feed-forward circuit.

mod build;
mod dump;
mod exec;
pub mod sampling;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::Range;

pub use build::{
    assemble, build_conv_layer, build_embedding, build_mixing, build_pool, conv_pairs,
};
pub use exec::{evaluate, CircuitInput, OutcomeDistribution};
pub(crate) use exec::{apply_spec, forward_amplitudes};

/// Where a rotation angle comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Fixed(f64),
    /// Trainable parameter index.
    Param(usize),
    /// Raw feature `x_i`.
    Feature(usize),
    /// `(π - x_i)(π - x_j) / 2`, the ZZ embedding angle.
    FeaturePair(usize, usize),
}

impl Angle {
    pub fn resolve(&self, params: &[f64], features: &[f64]) -> f64 {
        match *self {
            Angle::Fixed(v) => v,
            Angle::Param(k) => params[k],
            Angle::Feature(i) => features[i],
            Angle::FeaturePair(i, j) => zz_angle(features[i], features[j]),
        }
    }

    pub fn param(&self) -> Option<usize> {
        match *self {
            Angle::Param(k) => Some(k),
            _ => None,
        }
    }
}

pub fn zz_angle(xi: f64, xj: f64) -> f64 {
    0.5 * (PI - xi) * (PI - xj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    Cz,
    Rx,
    Rz,
    Rzz,
    ControlledRx,
    ControlledRz,
    HaarBlock,
}

/// One gate of a template. Angles are symbolic until evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum GateSpec {
    H { qubit: usize },
    Cz { qubits: [usize; 2] },
    Rx { qubit: usize, angle: Angle },
    Rz { qubit: usize, angle: Angle },
    Rzz { qubits: [usize; 2], angle: Angle },
    ControlledRx { control: usize, control_value: u8, target: usize, angle: Angle },
    ControlledRz { control: usize, control_value: u8, target: usize, angle: Angle },
    /// Per-processor Haar unitary supplied at evaluation time; `qubits[0]` is
    /// the least significant bit of the block.
    HaarBlock { processor: usize, qubits: Vec<usize> },
}

impl GateSpec {
    pub fn kind(&self) -> GateKind {
        match self {
            GateSpec::H { .. } => GateKind::H,
            GateSpec::Cz { .. } => GateKind::Cz,
            GateSpec::Rx { .. } => GateKind::Rx,
            GateSpec::Rz { .. } => GateKind::Rz,
            GateSpec::Rzz { .. } => GateKind::Rzz,
            GateSpec::ControlledRx { .. } => GateKind::ControlledRx,
            GateSpec::ControlledRz { .. } => GateKind::ControlledRz,
            GateSpec::HaarBlock { .. } => GateKind::HaarBlock,
        }
    }

    /// Every qubit the gate touches, control first for controlled kinds.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            GateSpec::H { qubit } | GateSpec::Rx { qubit, .. } | GateSpec::Rz { qubit, .. } => {
                vec![*qubit]
            }
            GateSpec::Cz { qubits } | GateSpec::Rzz { qubits, .. } => qubits.to_vec(),
            GateSpec::ControlledRx { control, target, .. }
            | GateSpec::ControlledRz { control, target, .. } => vec![*control, *target],
            GateSpec::HaarBlock { qubits, .. } => qubits.clone(),
        }
    }

    pub fn angle(&self) -> Option<Angle> {
        match self {
            GateSpec::Rx { angle, .. }
            | GateSpec::Rz { angle, .. }
            | GateSpec::Rzz { angle, .. }
            | GateSpec::ControlledRx { angle, .. }
            | GateSpec::ControlledRz { angle, .. } => Some(*angle),
            _ => None,
        }
    }

    pub fn control_value(&self) -> Option<u8> {
        match self {
            GateSpec::ControlledRx { control_value, .. }
            | GateSpec::ControlledRz { control_value, .. } => Some(*control_value),
            _ => None,
        }
    }

    pub fn param(&self) -> Option<usize> {
        self.angle().and_then(|a| a.param())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingScope {
    #[default]
    Global,
    Local,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    #[default]
    FeatureMap,
    HaarRandom,
}

impl EmbeddingKind {
    pub fn uses_features(self) -> bool {
        !matches!(self, EmbeddingKind::HaarRandom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZzConnectivity {
    #[default]
    Linear,
    AllPairs,
}

/// Order of the two outcome-conditioned rotations inside a pooling block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolOrder {
    /// Z rotation, then X rotation. Every pooling angle stays identifiable.
    #[default]
    ZThenX,
    /// X rotation, then Z rotation. The Z rotation feeding a Z-basis readout
    /// or control is then a no-op.
    XThenZ,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitConfig {
    pub qubits_per_proc: usize,
    pub n_bell: usize,
    /// Convolutional layers on the full processor register.
    pub conv_depth: usize,
    /// Convolutional layers on the two qubits left after the first pooling
    /// (4-qubit processors only). `None` repeats `conv_depth`.
    pub second_stage_depth: Option<usize>,
    pub mixing_depth: usize,
    pub mixing_scope: MixingScope,
    pub embedding: EmbeddingKind,
    pub zz_connectivity: ZzConnectivity,
    /// Hadamard on every local qubit before the Z/ZZ feature rotations.
    pub hadamard_layer: bool,
    pub pool_order: PoolOrder,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            qubits_per_proc: 4,
            n_bell: 0,
            conv_depth: 1,
            second_stage_depth: None,
            mixing_depth: 0,
            mixing_scope: MixingScope::Global,
            embedding: EmbeddingKind::FeatureMap,
            zz_connectivity: ZzConnectivity::Linear,
            hadamard_layer: true,
            pool_order: PoolOrder::ZThenX,
        }
    }
}

impl CircuitConfig {
    pub fn num_qubits(&self) -> usize {
        2 * self.qubits_per_proc
    }

    /// Resolved second-stage depth; always 0 for 2-qubit processors.
    pub fn stage2_depth(&self) -> usize {
        if self.qubits_per_proc == 4 {
            self.second_stage_depth.unwrap_or(self.conv_depth)
        } else {
            0
        }
    }

    /// Closed-form parameter count of the assembled template.
    pub fn param_count(&self) -> usize {
        let q = self.qubits_per_proc;
        let mixing = 2 * q * self.mixing_depth;
        let pools = if q == 4 { 8 + 4 } else { 4 };
        let conv = q * self.conv_depth + 2 * self.stage2_depth();
        mixing + 2 * (conv + pools)
    }
}

/// A named, contiguous range of parameter indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub params: Range<usize>,
}

/// Assembled circuit: gate list plus parameter layout and readout qubits.
#[derive(Clone, Debug)]
pub struct CircuitTemplate {
    num_qubits: usize,
    gates: Vec<GateSpec>,
    /// Index into `segments` for each gate.
    gate_segment: Vec<usize>,
    segments: Vec<Segment>,
    param_count: usize,
    feature_count: usize,
    output_qubits: [usize; 2],
    pooled_qubits: Vec<usize>,
    haar_dim: Option<usize>,
}

impl CircuitTemplate {
    /// Builds a template from an explicit gate list. Every gate is placed in a
    /// single segment named `custom`. Parameter indices must be dense in
    /// `0..P`.
    pub fn from_gates(
        num_qubits: usize,
        gates: Vec<GateSpec>,
        output_qubits: [usize; 2],
        pooled_qubits: Vec<usize>,
    ) -> crate::Result<Self> {
        let n = gates.len();
        let param_count = gates.iter().filter_map(|g| g.param()).map(|k| k + 1).max().unwrap_or(0);
        let t = Self::new_unchecked(
            num_qubits,
            gates,
            vec![0; n],
            vec![Segment { name: "custom".into(), params: 0..param_count }],
            output_qubits,
            pooled_qubits,
        );
        t.validate()?;
        Ok(t)
    }

    pub(crate) fn new_unchecked(
        num_qubits: usize,
        gates: Vec<GateSpec>,
        gate_segment: Vec<usize>,
        segments: Vec<Segment>,
        output_qubits: [usize; 2],
        pooled_qubits: Vec<usize>,
    ) -> Self {
        let param_count = gates.iter().filter_map(|g| g.param()).map(|k| k + 1).max().unwrap_or(0);
        let feature_count = gates
            .iter()
            .filter_map(|g| g.angle())
            .filter_map(|a| match a {
                Angle::Feature(i) => Some(i + 1),
                Angle::FeaturePair(i, j) => Some(i.max(j) + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        let haar_dim = gates.iter().find_map(|g| match g {
            GateSpec::HaarBlock { qubits, .. } => Some(1usize << qubits.len()),
            _ => None,
        });
        Self {
            num_qubits,
            gates,
            gate_segment,
            segments,
            param_count,
            feature_count,
            output_qubits,
            pooled_qubits,
            haar_dim,
        }
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        use crate::error::arg_err;
        if self.num_qubits > crate::qsim::MAX_QUBITS {
            return arg_err("template exceeds qubit limit");
        }
        let mut seen = vec![false; self.param_count];
        for g in &self.gates {
            let qs = g.qubits();
            for (i, &q) in qs.iter().enumerate() {
                if q >= self.num_qubits || qs[..i].contains(&q) {
                    return arg_err(format!("gate {g:?} has invalid qubits"));
                }
            }
            if let Some(cv) = g.control_value() {
                if cv > 1 {
                    return arg_err("control value must be 0 or 1");
                }
            }
            if let Some(k) = g.param() {
                seen[k] = true;
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return arg_err(format!("parameter index {k} unused; indices must be dense"));
        }
        if self.output_qubits[0] == self.output_qubits[1]
            || self.output_qubits.iter().any(|&q| q >= self.num_qubits)
        {
            return arg_err("invalid output qubits");
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Number of feature values an evaluation must supply.
    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Dimension of each per-processor Haar block, if the template has any.
    pub fn haar_dim(&self) -> Option<usize> {
        self.haar_dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn gate_segment(&self, gate_index: usize) -> &Segment {
        &self.segments[self.gate_segment[gate_index]]
    }

    /// Readout qubit of processor A, then processor B.
    pub fn output_qubits(&self) -> [usize; 2] {
        self.output_qubits
    }

    pub fn pooled_qubits(&self) -> &[usize] {
        &self.pooled_qubits
    }

    pub fn dump(&self) -> String {
        dump::render(self)
    }
}
