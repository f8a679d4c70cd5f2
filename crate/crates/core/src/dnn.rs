//! Classical distributed baseline: two independent 4-8-8-1 tanh branches,
//! one per half of the input, and a combiner over `(a, b, ab)`.
//!
//! Flat parameter layout: branch A, branch B, then `[w_a, w_b, w_ab, bias]`.
//! Each branch stores `W1 (8×4), b1, W2 (8×8), b2, W3 (1×8), b3` with
//! row-major weight matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{arg_err, Result};
use crate::train::{Example, LossKind, Trainable};

pub const INPUTS: usize = 4;
pub const HIDDEN: usize = 8;
pub const BRANCH_PARAMS: usize = (INPUTS * HIDDEN + HIDDEN) + (HIDDEN * HIDDEN + HIDDEN) + (HIDDEN + 1);
pub const COMBINER_PARAMS: usize = 4;
pub const DNN_PARAMS: usize = 2 * BRANCH_PARAMS + COMBINER_PARAMS;

pub fn dnn_param_count() -> usize {
    DNN_PARAMS
}

const W1: usize = 0;
const B1: usize = W1 + INPUTS * HIDDEN;
const W2: usize = B1 + HIDDEN;
const B2: usize = W2 + HIDDEN * HIDDEN;
const W3: usize = B2 + HIDDEN;
const B3: usize = W3 + HIDDEN;
const COMBINER: usize = 2 * BRANCH_PARAMS;

/// Activations of one branch, kept for backprop.
struct BranchTrace {
    h1: [f64; HIDDEN],
    h2: [f64; HIDDEN],
    out: f64,
}

fn branch_forward(p: &[f64], x: &[f64]) -> BranchTrace {
    let mut h1 = [0.0; HIDDEN];
    for (j, h) in h1.iter_mut().enumerate() {
        let z = p[B1 + j] + (0..INPUTS).map(|i| p[W1 + j * INPUTS + i] * x[i]).sum::<f64>();
        *h = z.tanh();
    }
    let mut h2 = [0.0; HIDDEN];
    for (j, h) in h2.iter_mut().enumerate() {
        let z = p[B2 + j] + (0..HIDDEN).map(|i| p[W2 + j * HIDDEN + i] * h1[i]).sum::<f64>();
        *h = z.tanh();
    }
    let z = p[B3] + (0..HIDDEN).map(|i| p[W3 + i] * h2[i]).sum::<f64>();
    BranchTrace { h1, h2, out: z.tanh() }
}

/// Accumulates `scale · d out / d p` into `grad` (both branch-local).
fn branch_backward(p: &[f64], x: &[f64], t: &BranchTrace, scale: f64, grad: &mut [f64]) {
    let d3 = scale * (1.0 - t.out * t.out);
    grad[B3] += d3;
    let mut d2 = [0.0; HIDDEN];
    for i in 0..HIDDEN {
        grad[W3 + i] += d3 * t.h2[i];
        d2[i] = d3 * p[W3 + i] * (1.0 - t.h2[i] * t.h2[i]);
    }
    let mut d1 = [0.0; HIDDEN];
    for j in 0..HIDDEN {
        grad[B2 + j] += d2[j];
        for i in 0..HIDDEN {
            grad[W2 + j * HIDDEN + i] += d2[j] * t.h1[i];
            d1[i] += d2[j] * p[W2 + j * HIDDEN + i];
        }
    }
    for j in 0..HIDDEN {
        let dz = d1[j] * (1.0 - t.h1[j] * t.h1[j]);
        grad[B1 + j] += dz;
        for i in 0..INPUTS {
            grad[W1 + j * INPUTS + i] += dz * x[i];
        }
    }
}

/// Output of one forward pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DnnOutput {
    pub a: f64,
    pub b: f64,
    pub f: f64,
}

fn check(params: &[f64], x: &[f64]) -> Result<()> {
    if params.len() != DNN_PARAMS {
        return arg_err(format!("expected {DNN_PARAMS} parameters, got {}", params.len()));
    }
    if x.len() != 2 * INPUTS {
        return arg_err(format!("expected {} features, got {}", 2 * INPUTS, x.len()));
    }
    Ok(())
}

/// `f = w_a a + w_b b + w_ab ab + bias`.
pub fn forward(params: &[f64], x: &[f64]) -> Result<DnnOutput> {
    check(params, x)?;
    let a = branch_forward(&params[..BRANCH_PARAMS], &x[..INPUTS]).out;
    let b = branch_forward(&params[BRANCH_PARAMS..COMBINER], &x[INPUTS..]).out;
    let c = &params[COMBINER..];
    Ok(DnnOutput { a, b, f: c[0] * a + c[1] * b + c[2] * a * b + c[3] })
}

/// Batch loss and exact gradient over all parameters.
pub fn backprop(params: &[f64], batch: &[&Example], loss: LossKind) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return arg_err("empty batch");
    }
    let mut grad = vec![0.0; DNN_PARAMS];
    let mut scored = Vec::with_capacity(batch.len());
    let (pa, rest) = params.split_at(BRANCH_PARAMS);
    let (pb, c) = rest.split_at(BRANCH_PARAMS);
    for ex in batch {
        check(params, &ex.features)?;
        let (xa, xb) = ex.features.split_at(INPUTS);
        let ta = branch_forward(pa, xa);
        let tb = branch_forward(pb, xb);
        let (a, b) = (ta.out, tb.out);
        let f = c[0] * a + c[1] * b + c[2] * a * b + c[3];
        scored.push(crate::model::Scored::new(ex.label, f));
        let df = match loss {
            LossKind::Mse => 2.0 * (f - ex.label as f64) / batch.len() as f64,
            LossKind::Product => -(ex.label as f64) / batch.len() as f64,
        };
        let (ga, rest) = grad.split_at_mut(BRANCH_PARAMS);
        let (gb, gc) = rest.split_at_mut(BRANCH_PARAMS);
        gc[0] += df * a;
        gc[1] += df * b;
        gc[2] += df * a * b;
        gc[3] += df;
        branch_backward(pa, xa, &ta, df * (c[0] + c[2] * b), ga);
        branch_backward(pb, xb, &tb, df * (c[1] + c[2] * a), gb);
    }
    Ok((loss.eval(&scored)?.value, grad))
}

/// Glorot-uniform weights, zero biases.
pub fn init_dnn(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = vec![0.0; DNN_PARAMS];
    let mut fill = |p: &mut [f64], fan_in: usize, fan_out: usize| {
        let r = (6.0 / (fan_in + fan_out) as f64).sqrt();
        p.iter_mut().for_each(|w| *w = rng.random_range(-r..r));
    };
    for base in [0, BRANCH_PARAMS] {
        fill(&mut p[base + W1..base + B1], INPUTS, HIDDEN);
        fill(&mut p[base + W2..base + B2], HIDDEN, HIDDEN);
        fill(&mut p[base + W3..base + B3], HIDDEN, 1);
    }
    fill(&mut p[COMBINER..COMBINER + 3], 3, 1);
    p
}

/// The baseline as a [`Trainable`] model.
#[derive(Clone, Copy, Debug, Default)]
pub struct DistributedDnn;

impl Trainable for DistributedDnn {
    fn param_count(&self) -> usize {
        DNN_PARAMS
    }

    fn initial_params(&self, seed: u64) -> Vec<f64> {
        init_dnn(seed)
    }

    fn loss_grad(&self, params: &[f64], batch: &[&Example], loss: LossKind) -> Result<(f64, Vec<f64>)> {
        backprop(params, batch, loss)
    }

    fn score(&self, params: &[f64], example: &Example) -> Result<f64> {
        Ok(forward(params, &example.features)?.f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::gen_synthetic;
    use crate::train::{train, Task, TrainConfig};

    /// Independent forward pass with explicit per-layer matrices.
    fn oracle_forward(params: &[f64], x: &[f64]) -> f64 {
        let branch = |p: &[f64], x: &[f64]| -> f64 {
            let mut off = 0;
            let mut take = |n: usize| {
                let s = p[off..off + n].to_vec();
                off += n;
                s
            };
            let layers = [(4usize, 8usize), (8, 8), (8, 1)];
            let mut act = x.to_vec();
            let mut mats = Vec::new();
            for (fi, fo) in layers {
                let w = take(fi * fo);
                let b = take(fo);
                mats.push((fi, fo, w, b));
            }
            for (fi, fo, w, b) in mats {
                act = (0..fo)
                    .map(|r| (b[r] + (0..fi).map(|c| w[r * fi + c] * act[c]).sum::<f64>()).tanh())
                    .collect();
            }
            act[0]
        };
        let a = branch(&params[0..121], &x[0..4]);
        let b = branch(&params[121..242], &x[4..8]);
        let c = &params[242..246];
        c[0] * a + c[1] * b + c[2] * a * b + c[3]
    }

    fn random_params(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..DNN_PARAMS).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn random_example(rng: &mut ChaCha8Rng) -> Example {
        Example {
            features: (0..8).map(|_| rng.random_range(-1.5..1.5)).collect(),
            label: if rng.random::<bool>() { 1 } else { -1 },
        }
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(dnn_param_count(), 246);
        assert_eq!(BRANCH_PARAMS, 121);
        assert_eq!(COMBINER_PARAMS, 4);
    }

    #[test]
    fn zero_weights_give_bias() {
        let mut p = vec![0.0; DNN_PARAMS];
        p[COMBINER + 3] = 0.37;
        assert_eq!(forward(&p, &[0.4; 8]).unwrap().f, 0.37);
    }

    #[test]
    fn mirrored_branches_agree() {
        let p0 = random_params(1);
        let mut p = p0.clone();
        p.copy_within(0..BRANCH_PARAMS, BRANCH_PARAMS);
        let x = [0.1, -0.5, 0.9, 0.3, 0.1, -0.5, 0.9, 0.3];
        let o = forward(&p, &x).unwrap();
        assert_eq!(o.a, o.b);
        assert!(o.a.abs() <= 1.0 && o.b.abs() <= 1.0);
    }

    #[test]
    fn forward_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in 0..10 {
            let p = random_params(s);
            let ex = random_example(&mut rng);
            let f = forward(&p, &ex.features).unwrap().f;
            assert!((f - oracle_forward(&p, &ex.features)).abs() < 1e-14);
        }
    }

    #[test]
    fn no_cross_branch_dependence() {
        let p = random_params(2);
        let x = [0.2, 0.4, -0.1, 0.8, -0.3, 0.5, 0.6, -0.9];
        let base = forward(&p, &x).unwrap();
        let mut q = p.clone();
        for w in &mut q[BRANCH_PARAMS..COMBINER] {
            *w += 0.3;
        }
        assert_eq!(forward(&q, &x).unwrap().a, base.a);
        let mut y = x;
        y[0] += 1.0;
        assert_eq!(forward(&p, &y).unwrap().b, base.b);
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst: f64 = 0.0;
        for s in 0..20 {
            let p = random_params(100 + s);
            let exs: Vec<Example> = (0..4).map(|_| random_example(&mut rng)).collect();
            let batch: Vec<&Example> = exs.iter().collect();
            for loss in [LossKind::Mse, LossKind::Product] {
                let (_, g) = backprop(&p, &batch, loss).unwrap();
                for k in 0..DNN_PARAMS {
                    let h = 1e-6;
                    let mut up = p.clone();
                    up[k] += h;
                    let mut dn = p.clone();
                    dn[k] -= h;
                    let fd = (backprop(&up, &batch, loss).unwrap().0 - backprop(&dn, &batch, loss).unwrap().0)
                        / (2.0 * h);
                    worst = worst.max((fd - g[k]).abs());
                }
            }
        }
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn zero_error_gives_zero_gradient() {
        let mut p = vec![0.0; DNN_PARAMS];
        p[COMBINER + 3] = 1.0;
        let ex = Example { features: vec![0.3; 8], label: 1 };
        let (l, g) = backprop(&p, &[&ex], LossKind::Mse).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bias_gradient_single_sample() {
        let p = random_params(5);
        let ex = Example { features: vec![0.1, 0.2, 0.3, 0.4, -0.1, -0.2, -0.3, -0.4], label: -1 };
        let f = forward(&p, &ex.features).unwrap().f;
        let (_, g) = backprop(&p, &[&ex], LossKind::Mse).unwrap();
        assert!((g[COMBINER + 3] - 2.0 * (f + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn short_training_beats_constant_classifier() {
        let d = gen_synthetic(1);
        let task = Task::from_dataset(&d);
        let cfg = TrainConfig { iterations: 100, log_every: 100, seed: 2, ..Default::default() };
        let a = train(&DistributedDnn, &task, &cfg).unwrap();
        let b = train(&DistributedDnn, &task, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert!(a.last().unwrap().train_acc >= 0.5);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(forward(&[0.0; 10], &[0.0; 8]).is_err());
        assert!(forward(&vec![0.0; DNN_PARAMS], &[0.0; 7]).is_err());
    }
}
