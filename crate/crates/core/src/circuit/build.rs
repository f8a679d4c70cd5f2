use super::{
    Angle, CircuitConfig, CircuitTemplate, EmbeddingKind, GateSpec, MixingScope, PoolOrder,
    Segment, ZzConnectivity,
};
use crate::error::{arg_err, Result};

/// Local qubit pairs of one brick-wall layer. Two qubits give a single block;
/// larger registers form a closed chain with blocks on `(0,1),(2,3),...` at odd
/// (1-based) depth indices and `(1,2),...,(n-1,0)` at even ones.
pub fn conv_pairs(num_local: usize, depth_index: usize) -> Vec<(usize, usize)> {
    match num_local {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        n => {
            let start = if depth_index % 2 == 1 { 0 } else { 1 };
            (0..n / 2)
                .map(|b| ((start + 2 * b) % n, (start + 2 * b + 1) % n))
                .collect()
        }
    }
}

/// Brick-wall layer on `qubits` (chain order). Each block is H⊗H, CZ,
/// RX⊗RX with two fresh parameters starting at `param_offset`.
fn conv_on(qubits: &[usize], depth_index: usize, param_offset: usize) -> Vec<GateSpec> {
    let mut gates = Vec::new();
    let mut k = param_offset;
    for (i, j) in conv_pairs(qubits.len(), depth_index) {
        let (a, b) = (qubits[i], qubits[j]);
        gates.push(GateSpec::H { qubit: a });
        gates.push(GateSpec::H { qubit: b });
        gates.push(GateSpec::Cz { qubits: [a, b] });
        gates.push(GateSpec::Rx { qubit: a, angle: Angle::Param(k) });
        gates.push(GateSpec::Rx { qubit: b, angle: Angle::Param(k + 1) });
        k += 2;
    }
    gates
}

fn local_qubits(processor: usize, qubits_per_proc: usize) -> Vec<usize> {
    (0..qubits_per_proc).map(|i| processor * qubits_per_proc + i).collect()
}

/// One convolutional depth on both processors. Processor A takes parameters
/// `param_offset..param_offset+q`, processor B the next `q`.
pub fn build_conv_layer(
    qubits_per_proc: usize,
    depth_index: usize,
    param_offset: usize,
) -> Vec<GateSpec> {
    let mut gates = conv_on(&local_qubits(0, qubits_per_proc), depth_index, param_offset);
    gates.extend(conv_on(
        &local_qubits(1, qubits_per_proc),
        depth_index,
        param_offset + qubits_per_proc,
    ));
    gates
}

/// Outcome-conditioned rotations for each `(measured, remaining)` pair; four
/// parameters per pair.
fn pool_on(pairs: &[(usize, usize)], param_offset: usize, order: PoolOrder) -> Vec<GateSpec> {
    let mut gates = Vec::new();
    let mut k = param_offset;
    for &(m, r) in pairs {
        for cv in 0..2u8 {
            let z = GateSpec::ControlledRz {
                control: m,
                control_value: cv,
                target: r,
                angle: Angle::Param(k),
            };
            let x = GateSpec::ControlledRx {
                control: m,
                control_value: cv,
                target: r,
                angle: Angle::Param(k + 1),
            };
            match order {
                PoolOrder::ZThenX => gates.extend([z, x]),
                PoolOrder::XThenZ => gates.extend([x, z]),
            }
            k += 2;
        }
    }
    gates
}

/// First-stage pooling pairs in local indices: the 1st and 3rd qubits are
/// measured on a 4-qubit processor, the 1st on a 2-qubit one.
fn first_pool_pairs(qubits_per_proc: usize) -> Vec<(usize, usize)> {
    if qubits_per_proc == 4 {
        vec![(0, 1), (2, 3)]
    } else {
        vec![(0, 1)]
    }
}

fn globalize(pairs: &[(usize, usize)], processor: usize, q: usize) -> Vec<(usize, usize)> {
    pairs.iter().map(|&(m, r)| (processor * q + m, processor * q + r)).collect()
}

/// First pooling stage on both processors.
pub fn build_pool(qubits_per_proc: usize, param_offset: usize, order: PoolOrder) -> Vec<GateSpec> {
    let local = first_pool_pairs(qubits_per_proc);
    let per_proc = 4 * local.len();
    let mut gates = pool_on(&globalize(&local, 0, qubits_per_proc), param_offset, order);
    gates.extend(pool_on(
        &globalize(&local, 1, qubits_per_proc),
        param_offset + per_proc,
        order,
    ));
    gates
}

/// Entanglement mixing layers applied to the shared register before the
/// embedding. Both scopes add `2 * qubits_per_proc` parameters per depth.
pub fn build_mixing(
    qubits_per_proc: usize,
    mixing_depth: usize,
    scope: MixingScope,
    param_offset: usize,
) -> Vec<GateSpec> {
    let per_depth = 2 * qubits_per_proc;
    let all: Vec<usize> = (0..per_depth).collect();
    (1..=mixing_depth)
        .flat_map(|t| {
            let off = param_offset + (t - 1) * per_depth;
            match scope {
                MixingScope::Global => conv_on(&all, t, off),
                MixingScope::Local => build_conv_layer(qubits_per_proc, t, off),
            }
        })
        .collect()
}

/// Symbolic embedding. Feature `i` of processor `p` is feature index
/// `p * q + i` and lands on qubit `p * q + i`.
pub fn build_embedding(config: &CircuitConfig) -> Vec<GateSpec> {
    let q = config.qubits_per_proc;
    let mut gates = Vec::new();
    for p in 0..2 {
        let base = p * q;
        if config.embedding == EmbeddingKind::HaarRandom {
            gates.push(GateSpec::HaarBlock { processor: p, qubits: local_qubits(p, q) });
            continue;
        }
        if config.hadamard_layer {
            gates.extend((0..q).map(|i| GateSpec::H { qubit: base + i }));
        }
        gates.extend((0..q).map(|i| GateSpec::Rz {
            qubit: base + i,
            angle: Angle::Feature(base + i),
        }));
        let pairs: Vec<(usize, usize)> = match config.zz_connectivity {
            ZzConnectivity::Linear => (0..q.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
            ZzConnectivity::AllPairs => {
                (0..q).flat_map(|i| (i + 1..q).map(move |j| (i, j))).collect()
            }
        };
        gates.extend(pairs.into_iter().map(|(i, j)| GateSpec::Rzz {
            qubits: [base + i, base + j],
            angle: Angle::FeaturePair(base + i, base + j),
        }));
    }
    gates
}

fn validate_config(config: &CircuitConfig) -> Result<()> {
    let q = config.qubits_per_proc;
    if q != 2 && q != 4 {
        return arg_err(format!("qubits_per_proc must be 2 or 4, got {q}"));
    }
    if config.n_bell > q {
        return arg_err(format!("n_bell {} exceeds qubits_per_proc {q}", config.n_bell));
    }
    if q == 2 && config.second_stage_depth.is_some_and(|d| d != 0) {
        return arg_err("second_stage_depth requires 4 qubits per processor");
    }
    Ok(())
}

struct Layout {
    gates: Vec<GateSpec>,
    gate_segment: Vec<usize>,
    segments: Vec<Segment>,
    next_param: usize,
}

impl Layout {
    fn segment(&mut self, name: &str, size: usize) -> usize {
        let start = self.next_param;
        self.next_param += size;
        self.segments.push(Segment { name: name.to_string(), params: start..start + size });
        self.segments.len() - 1
    }

    fn push(&mut self, seg: usize, gates: Vec<GateSpec>) {
        self.gate_segment.extend(std::iter::repeat_n(seg, gates.len()));
        self.gates.extend(gates);
    }

    fn start(&self, seg: usize) -> usize {
        self.segments[seg].params.start
    }
}

/// mixing → embedding → conv×d → pool → (4-qubit) conv×d₂ on the two
/// remaining qubits → pool.
pub fn assemble(config: &CircuitConfig) -> Result<CircuitTemplate> {
    validate_config(config)?;
    let q = config.qubits_per_proc;
    let n = 2 * q;
    let mut l = Layout { gates: Vec::new(), gate_segment: Vec::new(), segments: Vec::new(), next_param: 0 };

    if config.mixing_depth > 0 {
        let seg = l.segment("mixing", 2 * q * config.mixing_depth);
        let g = build_mixing(q, config.mixing_depth, config.mixing_scope, l.start(seg));
        l.push(seg, g);
    }
    let emb = l.segment("embedding", 0);
    l.push(emb, build_embedding(config));

    let stage1 = first_pool_pairs(q);
    let conv_a = l.segment("convA.s1", q * config.conv_depth);
    let conv_b = l.segment("convB.s1", q * config.conv_depth);
    let pool_a = l.segment("poolA.s1", 4 * stage1.len());
    let pool_b = l.segment("poolB.s1", 4 * stage1.len());
    for t in 1..=config.conv_depth {
        let off_a = l.start(conv_a) + (t - 1) * q;
        let off_b = l.start(conv_b) + (t - 1) * q;
        l.push(conv_a, conv_on(&local_qubits(0, q), t, off_a));
        l.push(conv_b, conv_on(&local_qubits(1, q), t, off_b));
    }
    let (sa, sb) = (l.start(pool_a), l.start(pool_b));
    l.push(pool_a, pool_on(&globalize(&stage1, 0, q), sa, config.pool_order));
    l.push(pool_b, pool_on(&globalize(&stage1, 1, q), sb, config.pool_order));

    let mut pooled: Vec<usize> = (0..2)
        .flat_map(|p| stage1.iter().map(move |&(m, _)| p * q + m))
        .collect();
    let outputs;
    if q == 4 {
        // Remaining local qubits 1 and 3 form the two-qubit stage.
        let remaining = [1usize, 3];
        let d2 = config.stage2_depth();
        let conv_a = l.segment("convA.s2", 2 * d2);
        let conv_b = l.segment("convB.s2", 2 * d2);
        let pool_a = l.segment("poolA.s2", 4);
        let pool_b = l.segment("poolB.s2", 4);
        for t in 1..=d2 {
            let off_a = l.start(conv_a) + (t - 1) * 2;
            let off_b = l.start(conv_b) + (t - 1) * 2;
            l.push(conv_a, conv_on(&remaining, t, off_a));
            l.push(conv_b, conv_on(&[q + remaining[0], q + remaining[1]], t, off_b));
        }
        let (sa, sb) = (l.start(pool_a), l.start(pool_b));
        let [r0, r1] = remaining;
        l.push(pool_a, pool_on(&[(r0, r1)], sa, config.pool_order));
        l.push(pool_b, pool_on(&[(q + r0, q + r1)], sb, config.pool_order));
        pooled.extend([r0, q + r0]);
        outputs = [r1, q + r1];
    } else {
        outputs = [1, q + 1];
    }

    let t = CircuitTemplate::new_unchecked(n, l.gates, l.gate_segment, l.segments, outputs, pooled);
    debug_assert_eq!(t.param_count(), config.param_count());
    t.validate()?;
    Ok(t)
}
