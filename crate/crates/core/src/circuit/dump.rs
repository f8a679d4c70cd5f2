use std::fmt::Write;

use super::{Angle, CircuitTemplate, GateSpec};

fn angle_str(a: &Angle) -> String {
    match a {
        Angle::Fixed(v) => format!("{v}"),
        Angle::Param(k) => format!("θ[{k}]"),
        Angle::Feature(i) => format!("x[{i}]"),
        Angle::FeaturePair(i, j) => format!("(π-x[{i}])(π-x[{j}])/2"),
    }
}

pub(super) fn render(t: &CircuitTemplate) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# qubits={} params={} outputs={:?} pooled={:?}",
        t.num_qubits(),
        t.param_count(),
        t.output_qubits(),
        t.pooled_qubits()
    );
    for s in t.segments() {
        let _ = writeln!(out, "# segment {} {}..{}", s.name, s.params.start, s.params.end);
    }
    for (i, g) in t.gates().iter().enumerate() {
        let body = match g {
            GateSpec::H { qubit } => format!("H q{qubit}"),
            GateSpec::Cz { qubits } => format!("CZ q{} q{}", qubits[0], qubits[1]),
            GateSpec::Rx { qubit, angle } => format!("RX q{qubit} {}", angle_str(angle)),
            GateSpec::Rz { qubit, angle } => format!("RZ q{qubit} {}", angle_str(angle)),
            GateSpec::Rzz { qubits, angle } => {
                format!("RZZ q{} q{} {}", qubits[0], qubits[1], angle_str(angle))
            }
            GateSpec::ControlledRx { control, control_value, target, angle } => {
                format!("CRX q{control}={control_value} q{target} {}", angle_str(angle))
            }
            GateSpec::ControlledRz { control, control_value, target, angle } => {
                format!("CRZ q{control}={control_value} q{target} {}", angle_str(angle))
            }
            GateSpec::HaarBlock { processor, qubits } => {
                format!("HAAR proc{processor} {qubits:?}")
            }
        };
        let _ = writeln!(out, "{i:04} {body:<40} [{}]", t.gate_segment(i).name);
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::circuit::{assemble, CircuitConfig};

    #[test]
    fn golden_two_qubit_depth_one() {
        let c = CircuitConfig { qubits_per_proc: 2, conv_depth: 1, ..Default::default() };
        let dump = assemble(&c).unwrap().dump();
        let expected = "\
# qubits=4 params=12 outputs=[1, 3] pooled=[0, 2]
# segment embedding 0..0
# segment convA.s1 0..2
# segment convB.s1 2..4
# segment poolA.s1 4..8
# segment poolB.s1 8..12
0000 H q0                                     [embedding]
0001 H q1                                     [embedding]
0002 RZ q0 x[0]                               [embedding]
0003 RZ q1 x[1]                               [embedding]
0004 RZZ q0 q1 (π-x[0])(π-x[1])/2             [embedding]
0005 H q2                                     [embedding]
0006 H q3                                     [embedding]
0007 RZ q2 x[2]                               [embedding]
0008 RZ q3 x[3]                               [embedding]
0009 RZZ q2 q3 (π-x[2])(π-x[3])/2             [embedding]
0010 H q0                                     [convA.s1]
0011 H q1                                     [convA.s1]
0012 CZ q0 q1                                 [convA.s1]
0013 RX q0 θ[0]                               [convA.s1]
0014 RX q1 θ[1]                               [convA.s1]
0015 H q2                                     [convB.s1]
0016 H q3                                     [convB.s1]
0017 CZ q2 q3                                 [convB.s1]
0018 RX q2 θ[2]                               [convB.s1]
0019 RX q3 θ[3]                               [convB.s1]
0020 CRZ q0=0 q1 θ[4]                         [poolA.s1]
0021 CRX q0=0 q1 θ[5]                         [poolA.s1]
0022 CRZ q0=1 q1 θ[6]                         [poolA.s1]
0023 CRX q0=1 q1 θ[7]                         [poolA.s1]
0024 CRZ q2=0 q3 θ[8]                         [poolB.s1]
0025 CRX q2=0 q3 θ[9]                         [poolB.s1]
0026 CRZ q2=1 q3 θ[10]                        [poolB.s1]
0027 CRX q2=1 q3 θ[11]                        [poolB.s1]
";
        assert_eq!(dump, expected);
    }
}
