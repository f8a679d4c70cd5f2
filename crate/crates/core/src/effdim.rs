//! Fisher information of the readout distribution and the rank-based
//! effective dimension.
//!
//! `F(θ) = (1/N) Σ_n Σ_y ∂P_y ∂P_yᵀ / P_y` over the four joint outcomes
//! `y = (a, b)`. The effective dimension is the largest numerical rank of
//! `F(θ)` over random parameter sets, with the data embedding replaced by
//! per-processor Haar-random unitaries.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Write;

use crate::circuit::{assemble, CircuitConfig, CircuitInput, CircuitTemplate, EmbeddingKind};
use crate::error::{arg_err, Error, Result};
use crate::grad::adjoint_gradient;
use crate::qsim::{haar_unitary, init_bell, GateMatrix, Statevector};

/// Outcomes with probability below this contribute nothing.
pub const MIN_PROB: f64 = 1e-14;

/// Input-averaged Fisher matrix.
#[derive(Clone, Debug)]
pub struct FisherMatrix {
    matrix: DMatrix<f64>,
    n_inputs: usize,
    eigenvalues: Vec<f64>,
}

impl FisherMatrix {
    pub fn from_matrix(matrix: DMatrix<f64>, n_inputs: usize) -> Result<Self> {
        if !matrix.is_square() {
            return arg_err("Fisher matrix must be square");
        }
        let mut eigenvalues = if matrix.nrows() == 0 {
            Vec::new()
        } else {
            SymmetricEigen::new(matrix.clone()).eigenvalues.iter().copied().collect()
        };
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { matrix, n_inputs, eigenvalues })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).abs().max()
    }

    pub fn rank(&self, tol_rel: f64) -> RankReport {
        rank_of_spectrum(&self.eigenvalues, tol_rel)
    }
}

/// Numerical rank with the spectral gap around the cut.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub lambda_max: f64,
    pub threshold: f64,
    /// Smallest kept eigenvalue over largest dropped magnitude. Infinite when
    /// nothing is dropped or the dropped eigenvalues are exactly zero.
    pub gap: f64,
}

fn rank_of_spectrum(desc: &[f64], tol_rel: f64) -> RankReport {
    let lambda_max = desc.first().copied().unwrap_or(0.0).max(0.0);
    let threshold = tol_rel * lambda_max.max(1e-300);
    let rank = desc.iter().filter(|&&l| l > threshold).count();
    let kept = if rank > 0 { desc[rank - 1] } else { threshold };
    let dropped = desc[rank..].iter().map(|l| l.abs()).fold(0.0, f64::max);
    let gap = if dropped == 0.0 { f64::INFINITY } else { kept / dropped };
    RankReport { rank, lambda_max, threshold, gap }
}

/// Count of eigenvalues above `tol_rel · max(λ_max, 1e-300)`.
pub fn numerical_rank(f: &DMatrix<f64>, tol_rel: f64) -> Result<RankReport> {
    Ok(FisherMatrix::from_matrix(f.clone(), 0)?.rank(tol_rel))
}

fn accumulate(f: &mut DMatrix<f64>, probs: &[f64; 4], rows: [&[f64]; 4]) {
    let p = f.nrows();
    for (y, row) in rows.iter().enumerate() {
        if probs[y] < MIN_PROB {
            continue;
        }
        let inv = 1.0 / probs[y];
        for i in 0..p {
            let gi = row[i] * inv;
            if gi == 0.0 {
                continue;
            }
            for j in 0..p {
                f[(i, j)] += gi * row[j];
            }
        }
    }
}

/// Fisher matrix averaged over `inputs`. Per-input contributions are computed
/// in parallel and summed in input order.
pub fn fisher_matrix(
    template: &CircuitTemplate,
    params: &[f64],
    initial: &Statevector,
    inputs: &[CircuitInput],
) -> Result<FisherMatrix> {
    if inputs.is_empty() {
        return arg_err("Fisher matrix needs at least one input");
    }
    let p = template.param_count();
    let parts: Vec<DMatrix<f64>> = inputs
        .par_iter()
        .map(|input| {
            let (dist, g) = adjoint_gradient(template, params, initial, *input)?;
            let mut f = DMatrix::zeros(p, p);
            accumulate(&mut f, &dist.0, [g.row(0), g.row(1), g.row(2), g.row(3)]);
            Ok(f)
        })
        .collect::<Result<_>>()?;
    let mut total = DMatrix::zeros(p, p);
    for part in &parts {
        total += part;
    }
    total /= inputs.len() as f64;
    if total.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Fisher entry".into()));
    }
    FisherMatrix::from_matrix(total, inputs.len())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EDProtocolConfig {
    pub n_haar: usize,
    pub n_paramsets: usize,
    pub rank_tol_rel: f64,
    /// Stop drawing parameter sets once the rank reaches `min(P, 3 N)`.
    pub stop_at_cap: bool,
}

impl Default for EDProtocolConfig {
    fn default() -> Self {
        Self { n_haar: 100, n_paramsets: 20, rank_tol_rel: 1e-10, stop_at_cap: true }
    }
}

impl EDProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_haar == 0 || self.n_paramsets == 0 {
            return Err(Error::Config("n_haar and n_paramsets must be positive".into()));
        }
        if !(self.rank_tol_rel > 0.0 && self.rank_tol_rel < 1.0) {
            return Err(Error::Config(format!("rank_tol_rel {} outside (0, 1)", self.rank_tol_rel)));
        }
        Ok(())
    }
}

/// Outcome of [`effective_dimension`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EDResult {
    pub ed: usize,
    pub param_count: usize,
    /// Rank report for each parameter set drawn.
    pub ranks: Vec<RankReport>,
    /// Gap of the parameter set that attained `ed`.
    pub gap: f64,
}

/// Draws `n` pairs of per-processor Haar unitaries of dimension `dim`.
pub fn haar_ensemble<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Result<Vec<[GateMatrix; 2]>> {
    (0..n)
        .map(|_| Ok([haar_unitary(dim, rng)?.into_matrix(), haar_unitary(dim, rng)?.into_matrix()]))
        .collect()
}

/// Max over random parameter sets of the rank of the Haar-averaged Fisher
/// matrix. The Haar ensemble is drawn once and shared by all parameter sets.
pub fn effective_dimension<R: Rng + ?Sized>(
    config: &CircuitConfig,
    protocol: &EDProtocolConfig,
    rng: &mut R,
) -> Result<EDResult> {
    protocol.validate()?;
    if config.embedding != EmbeddingKind::HaarRandom {
        return Err(Error::Config("effective dimension requires the haar_random embedding".into()));
    }
    let template = assemble(config)?;
    let initial = init_bell(config.n_bell, config.qubits_per_proc)?;
    let dim = template.haar_dim().expect("haar embedding");
    let ensemble = haar_ensemble(protocol.n_haar, dim, rng)?;
    let inputs: Vec<CircuitInput> = ensemble.iter().map(|u| CircuitInput::Haar(u)).collect();
    let p = template.param_count();
    let cap = p.min(3 * protocol.n_haar);
    let mut ranks = Vec::new();
    let mut best: Option<RankReport> = None;
    for _ in 0..protocol.n_paramsets {
        let params: Vec<f64> = (0..p).map(|_| rng.random::<f64>() * TAU).collect();
        let report = fisher_matrix(&template, &params, &initial, &inputs)?.rank(protocol.rank_tol_rel);
        ranks.push(report);
        if best.is_none_or(|b| report.rank > b.rank) {
            best = Some(report);
        }
        if protocol.stop_at_cap && report.rank == cap {
            break;
        }
    }
    let best = best.expect("at least one parameter set");
    Ok(EDResult { ed: best.rank, param_count: p, ranks, gap: best.gap })
}

/// One row of a depth sweep. `depth` counts mixing plus convolutional layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub depth: usize,
    pub conv_depth: usize,
    pub n_bell: usize,
    pub mixing_depth: usize,
    pub ed: usize,
    pub param_count: usize,
    pub gap: f64,
}

/// Effective dimension for `conv_depth = 1..=d_max`, stopping after three
/// consecutive depths without an increase. Depth `d` uses its own RNG stream
/// derived from `seed`.
pub fn depth_sweep(
    base: &CircuitConfig,
    protocol: &EDProtocolConfig,
    d_max: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if d_max == 0 {
        return Err(Error::Config("d_max must be at least 1".into()));
    }
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut stale = 0;
    for d in 1..=d_max {
        let config = CircuitConfig { conv_depth: d, ..base.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(d as u64);
        let r = effective_dimension(&config, protocol, &mut rng)?;
        let prev = rows.last().map(|row| row.ed);
        rows.push(SweepRow {
            depth: d + base.mixing_depth,
            conv_depth: d,
            n_bell: base.n_bell,
            mixing_depth: base.mixing_depth,
            ed: r.ed,
            param_count: r.param_count,
            gap: r.gap,
        });
        if prev.is_some_and(|p| r.ed <= p) {
            stale += 1;
            if stale == 3 {
                break;
            }
        } else {
            stale = 0;
        }
    }
    Ok(rows)
}

pub const SWEEP_HEADER: &str = "depth,conv_depth,n_bell,mixing_depth,ed,param_count,gap";

pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{:e}",
            r.depth, r.conv_depth, r.n_bell, r.mixing_depth, r.ed, r.param_count, r.gap
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Angle, GateSpec};
    use crate::grad::finite_diff_gradient;

    #[test]
    fn single_rx_fisher_is_one() {
        let gates = vec![GateSpec::Rx { qubit: 0, angle: Angle::Param(0) }];
        let t = CircuitTemplate::from_gates(2, gates, [0, 1], vec![]).unwrap();
        let init = Statevector::zero(2).unwrap();
        for theta in [0.3, 1.2, 2.0, 4.0] {
            let f = fisher_matrix(&t, &[theta], &init, &[CircuitInput::None]).unwrap();
            assert!((f.get(0, 0) - 1.0).abs() < 1e-12, "θ={theta}: {}", f.get(0, 0));
        }
    }

    #[test]
    fn dead_parameter_gives_zero_row() {
        let gates = vec![
            GateSpec::Rx { qubit: 0, angle: Angle::Param(0) },
            GateSpec::Rx { qubit: 2, angle: Angle::Param(1) },
        ];
        let t = CircuitTemplate::from_gates(3, gates, [0, 1], vec![2]).unwrap();
        let init = Statevector::zero(3).unwrap();
        let f = fisher_matrix(&t, &[0.7, 0.4], &init, &[CircuitInput::None]).unwrap();
        for k in 0..2 {
            assert_eq!(f.get(1, k), 0.0);
            assert_eq!(f.get(k, 1), 0.0);
        }
        assert_eq!(f.rank(1e-10).rank, 1);
    }

    #[test]
    fn matches_finite_difference_scores() {
        let c = CircuitConfig {
            qubits_per_proc: 2,
            n_bell: 1,
            conv_depth: 2,
            embedding: EmbeddingKind::HaarRandom,
            ..Default::default()
        };
        let t = assemble(&c).unwrap();
        let init = init_bell(1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ens = haar_ensemble(3, 4, &mut rng).unwrap();
        let inputs: Vec<CircuitInput> = ens.iter().map(|u| CircuitInput::Haar(u)).collect();
        let params: Vec<f64> = (0..t.param_count()).map(|_| rng.random::<f64>() * TAU).collect();
        let f = fisher_matrix(&t, &params, &init, &inputs).unwrap();
        let p = t.param_count();
        let mut oracle = vec![vec![0.0; p]; p];
        for input in &inputs {
            let probs = crate::circuit::evaluate(&t, &params, &init, *input).unwrap().0;
            let g = finite_diff_gradient(&t, &params, &init, *input, 1e-5).unwrap();
            for y in 0..4 {
                for i in 0..p {
                    for j in 0..p {
                        let si = g.get(y, i) / probs[y];
                        let sj = g.get(y, j) / probs[y];
                        oracle[i][j] += probs[y] * si * sj / inputs.len() as f64;
                    }
                }
            }
        }
        for i in 0..p {
            for j in 0..p {
                assert!((f.get(i, j) - oracle[i][j]).abs() < 1e-5);
            }
        }
        assert!(f.asymmetry() < 1e-10);
        let lmax = f.eigenvalues()[0];
        assert!(f.eigenvalues().iter().all(|&l| l >= -1e-9 * lmax));
    }

    #[test]
    fn rank_threshold_semantics() {
        assert_eq!(numerical_rank(&DMatrix::identity(10, 10), 1e-10).unwrap().rank, 10);
        assert_eq!(numerical_rank(&DMatrix::zeros(4, 4), 1e-10).unwrap().rank, 0);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-16]));
        let r = numerical_rank(&d, 1e-10).unwrap();
        assert_eq!(r.rank, 1);
        assert!((r.gap - 1e16).abs() < 1e4);
    }

    #[test]
    fn small_ed_bounded_by_params_and_inputs() {
        let c = CircuitConfig {
            qubits_per_proc: 2,
            n_bell: 1,
            conv_depth: 1,
            embedding: EmbeddingKind::HaarRandom,
            ..Default::default()
        };
        let protocol = EDProtocolConfig { n_haar: 2, n_paramsets: 3, ..Default::default() };
        let r = effective_dimension(&c, &protocol, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(r.ed <= r.param_count.min(6));
        assert!(r.ed > 0);
    }

    #[test]
    fn rejects_feature_embedding() {
        let c = CircuitConfig::default();
        let r = effective_dimension(&c, &EDProtocolConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn sweep_csv_layout() {
        let rows = vec![SweepRow { depth: 4, conv_depth: 1, n_bell: 2, mixing_depth: 3, ed: 80, param_count: 80, gap: 1e9 }];
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{SWEEP_HEADER}\n4,1,2,3,80,80,1e9\n"));
    }
}
