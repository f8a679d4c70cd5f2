use num_complex::Complex64 as C64;

use super::gates::GateMatrix;
use super::kernels;
use crate::error::{arg_err, Result};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 10;

/// Dense statevector. Basis index bit `k` is qubit `k` (qubit 0 least
/// significant).
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// |0...0⟩ on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return arg_err(format!("{num_qubits} qubits exceeds limit {MAX_QUBITS}"));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return arg_err(format!("amplitude count {len} is not a power of two"));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return arg_err(format!("{num_qubits} qubits exceeds limit {MAX_QUBITS}"));
        }
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.num_qubits {
                return arg_err(format!(
                    "qubit {q} out of range for {} qubits",
                    self.num_qubits
                ));
            }
            if qubits[..i].contains(&q) {
                return arg_err(format!("qubit {q} repeated"));
            }
        }
        Ok(())
    }

    /// Applies `gate` to `targets`; `targets[0]` is the least significant bit
    /// of the gate's local index.
    pub fn apply_gate(&mut self, gate: &GateMatrix, targets: &[usize]) -> Result<()> {
        self.check_qubits(targets)?;
        if targets.is_empty() || gate.dim() != 1 << targets.len() {
            return arg_err(format!(
                "gate of dimension {} does not fit {} targets",
                gate.dim(),
                targets.len()
            ));
        }
        match gate.as_mat2() {
            Some(m) => kernels::apply_1q(&mut self.amps, targets[0], &m),
            None => kernels::apply_dense(&mut self.amps, targets, gate.entries()),
        }
        Ok(())
    }

    /// Applies a single-qubit `gate` on `target` only where `control` reads
    /// `control_value`.
    pub fn apply_controlled(
        &mut self,
        control: usize,
        control_value: u8,
        gate: &GateMatrix,
        target: usize,
    ) -> Result<()> {
        if control == target {
            return arg_err("control and target coincide");
        }
        if control_value > 1 {
            return arg_err(format!("control value {control_value} is not a bit"));
        }
        self.check_qubits(&[control, target])?;
        let Some(m) = gate.as_mat2() else {
            return arg_err("controlled gate must be single-qubit");
        };
        kernels::apply_1q_controlled(&mut self.amps, control, control_value == 1, target, &m);
        Ok(())
    }

    /// Marginal distribution over `qubits`. Outcome index uses `qubits[0]` as
    /// the most significant bit, so `[a, b]` yields the order
    /// (0,0), (0,1), (1,0), (1,1).
    pub fn marginal_probs(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        self.check_qubits(qubits)?;
        Ok(marginal_from_amps(&self.amps, qubits))
    }
}

pub(crate) fn marginal_from_amps(amps: &[C64], qubits: &[usize]) -> Vec<f64> {
    let k = qubits.len();
    let mut probs = vec![0.0; 1 << k];
    for (i, a) in amps.iter().enumerate() {
        let idx = outcome_index(i, qubits);
        probs[idx] += a.norm_sqr();
    }
    probs
}

#[inline]
pub(crate) fn outcome_index(basis: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .fold(0, |acc, &q| (acc << 1) | ((basis >> q) & 1))
}

/// |Bell-n⟩ on two processors of `qubits_per_proc` qubits each: pair `j < n`
/// is |Φ⁺⟩ on qubits `(j, qubits_per_proc + j)`, all others |0⟩.
pub fn init_bell(n_pairs: usize, qubits_per_proc: usize) -> Result<Statevector> {
    if qubits_per_proc == 0 || 2 * qubits_per_proc > MAX_QUBITS {
        return arg_err(format!("unsupported processor size {qubits_per_proc}"));
    }
    if n_pairs > qubits_per_proc {
        return arg_err(format!(
            "{n_pairs} Bell pairs exceed {qubits_per_proc} qubits per processor"
        ));
    }
    let n = 2 * qubits_per_proc;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    let amp = C64::new((0.5f64).powf(n_pairs as f64 / 2.0), 0.0);
    for sel in 0..1usize << n_pairs {
        let idx = (0..n_pairs)
            .filter(|j| sel >> j & 1 == 1)
            .map(|j| (1usize << j) | (1usize << (qubits_per_proc + j)))
            .sum::<usize>();
        amps[idx] = amp;
    }
    Statevector::from_amplitudes(amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn bell_zero_is_product_zero() {
        let s = init_bell(0, 4).unwrap();
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn bell_one_indices() {
        let s = init_bell(1, 4).unwrap();
        for (i, a) in s.amplitudes().iter().enumerate() {
            let want = if i == 0 || i == 17 { FRAC_1_SQRT_2 } else { 0.0 };
            assert!((a.re - want).abs() < 1e-15 && a.im == 0.0, "index {i}");
        }
    }

    #[test]
    fn bell_four_matches_kronecker_construction() {
        // Oracle: build |Φ⁺⟩^{⊗4} by explicit Kronecker products over the
        // 8-qubit index, pair j on bits (j, 4+j).
        let mut oracle = vec![C64::new(1.0, 0.0)];
        let mut qubit_of_slot: Vec<usize> = Vec::new();
        for j in 0..4 {
            let phi = [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]; // index = bA + 2 bB
            let mut next = vec![C64::new(0.0, 0.0); oracle.len() * 4];
            for (i, a) in oracle.iter().enumerate() {
                for (k, p) in phi.iter().enumerate() {
                    next[i + oracle.len() * k] = a * p;
                }
            }
            oracle = next;
            qubit_of_slot.push(j);
            qubit_of_slot.push(4 + j);
        }
        let mut permuted = vec![C64::new(0.0, 0.0); 256];
        for (i, a) in oracle.iter().enumerate() {
            let mut idx = 0;
            for (slot, &q) in qubit_of_slot.iter().enumerate() {
                idx |= (i >> slot & 1) << q;
            }
            permuted[idx] = *a;
        }
        let s = init_bell(4, 4).unwrap();
        let nonzero: Vec<usize> = (0..256).filter(|&i| s.amplitudes()[i].norm() > 0.0).collect();
        assert_eq!(nonzero.len(), 16);
        for &i in &nonzero {
            assert!((s.amplitudes()[i].re - 0.25).abs() < 1e-15);
            assert_eq!(i & 0xF, i >> 4);
        }
        for i in 0..256 {
            assert!(close(s.amplitudes()[i], permuted[i]));
        }
    }

    #[test]
    fn bell_rejects_too_many_pairs() {
        assert!(init_bell(3, 2).is_err());
        assert!(init_bell(5, 4).is_err());
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = Statevector::zero(1).unwrap();
        s.apply_gate(&GateMatrix::h(), &[0]).unwrap();
        assert!(close(s.amplitudes()[0], C64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(s.amplitudes()[1], C64::new(FRAC_1_SQRT_2, 0.0)));
    }

    #[test]
    fn cz_on_11() {
        let mut amps = vec![C64::new(0.0, 0.0); 4];
        amps[3] = C64::new(1.0, 0.0);
        let mut s = Statevector::from_amplitudes(amps).unwrap();
        s.apply_gate(&GateMatrix::cz(), &[0, 1]).unwrap();
        assert!(close(s.amplitudes()[3], C64::new(-1.0, 0.0)));
    }

    #[test]
    fn rx_pi_on_zero() {
        let mut s = Statevector::zero(1).unwrap();
        s.apply_gate(&GateMatrix::rx(PI), &[0]).unwrap();
        assert!(close(s.amplitudes()[1], C64::new(0.0, -1.0)));
        assert!(s.amplitudes()[0].norm() < 1e-15);
    }

    #[test]
    fn apply_gate_rejects_bad_targets() {
        let mut s = Statevector::zero(2).unwrap();
        assert!(s.apply_gate(&GateMatrix::cz(), &[1, 1]).is_err());
        assert!(s.apply_gate(&GateMatrix::h(), &[2]).is_err());
        assert!(s.apply_gate(&GateMatrix::cz(), &[0]).is_err());
    }

    #[test]
    fn controlled_not_satisfied_leaves_state() {
        let mut s = Statevector::zero(2).unwrap();
        let before = s.clone();
        s.apply_controlled(0, 1, &GateMatrix::rx(0.7), 1).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn controlled_on_zero_value_flips_target() {
        let mut s = Statevector::zero(2).unwrap();
        s.apply_controlled(0, 0, &GateMatrix::x(), 1).unwrap();
        assert!(close(s.amplitudes()[2], C64::new(1.0, 0.0)));
    }

    #[test]
    fn controlled_matches_full_matrix_embedding() {
        // (|00⟩ + |01⟩)/√2: qubit 0 in |+⟩, qubit 1 in |0⟩.
        let r = FRAC_1_SQRT_2;
        let amps = vec![C64::new(r, 0.0), C64::new(r, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        let mut s = Statevector::from_amplitudes(amps.clone()).unwrap();
        let g = GateMatrix::rx(PI / 2.0);
        s.apply_controlled(0, 1, &g, 1).unwrap();

        // Oracle: |0⟩⟨0|_c ⊗ I + |1⟩⟨1|_c ⊗ G as a 4x4 with index c + 2t.
        let mut full = [[C64::new(0.0, 0.0); 4]; 4];
        for t_in in 0..2 {
            full[2 * t_in][2 * t_in] = C64::new(1.0, 0.0);
            for t_out in 0..2 {
                full[1 + 2 * t_out][1 + 2 * t_in] = g.get(t_out, t_in);
            }
        }
        for row in 0..4 {
            let want: C64 = (0..4).map(|c| full[row][c] * amps[c]).sum();
            assert!(close(s.amplitudes()[row], want), "row {row}");
        }
        assert!(close(s.amplitudes()[1], C64::new(r * (PI / 4.0).cos(), 0.0)));
    }

    #[test]
    fn controlled_rejects_same_qubit() {
        let mut s = Statevector::zero(2).unwrap();
        assert!(s.apply_controlled(1, 1, &GateMatrix::x(), 1).is_err());
    }

    #[test]
    fn marginals() {
        let phi = init_bell(1, 1).unwrap();
        let p = phi.marginal_probs(&[0, 1]).unwrap();
        for (got, want) in p.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
        let s = init_bell(1, 4).unwrap();
        let p = s.marginal_probs(&[3, 7]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1..].iter().all(|&x| x == 0.0));
        let all: Vec<usize> = (0..8).collect();
        let full = s.marginal_probs(&all).unwrap();
        // qubits[0] is most significant: reverse the basis index.
        for (i, a) in s.amplitudes().iter().enumerate() {
            let rev = (0..8).fold(0, |acc, q| (acc << 1) | (i >> q & 1));
            assert!((full[rev] - a.norm_sqr()).abs() < 1e-15);
        }
    }

    #[test]
    fn marginal_order_is_a_then_b() {
        // qubit 1 set, qubit 0 clear: outcome (a=q1, b=q0) = (1,0) -> index 2.
        let mut amps = vec![C64::new(0.0, 0.0); 4];
        amps[2] = C64::new(1.0, 0.0);
        let s = Statevector::from_amplitudes(amps).unwrap();
        assert_eq!(s.marginal_probs(&[1, 0]).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
    }
}
