//! Extended-CHSH inputs and the clustered synthetic dataset.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::Path;

use crate::error::{Error, Result};

pub const N_FEATURES: usize = 8;
pub const N_SAMPLES: usize = 4096;
pub const N_CLUSTERS: usize = 64;

/// One of the 16 extended-CHSH inputs: `s1, t1 ∈ {0,1}`, `s2, t2 ∈ {-1,1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChshInput {
    pub s1: u8,
    pub s2: i8,
    pub t1: u8,
    pub t2: i8,
}

impl ChshInput {
    /// `s2 t2 (-1)^{s1 t1}`.
    pub fn label(&self) -> i8 {
        let sign = if self.s1 * self.t1 == 1 { -1 } else { 1 };
        self.s2 * self.t2 * sign
    }
}

pub fn chsh_inputs() -> Vec<ChshInput> {
    let mut out = Vec::with_capacity(16);
    for s1 in 0..2u8 {
        for s2 in [-1i8, 1] {
            for t1 in 0..2u8 {
                for t2 in [-1i8, 1] {
                    out.push(ChshInput { s1, s2, t1, t2 });
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChshEmbedding {
    /// `π/2 (s1, s2, t1, t2)`.
    #[default]
    Optimal,
    /// `π/2 (s2, s1, t2, t1)`.
    Alternative,
}

/// Features for processor A (first two) and B (last two).
pub fn embed_chsh(input: &ChshInput, kind: ChshEmbedding) -> [f64; 4] {
    let (s1, s2, t1, t2) = (input.s1 as f64, input.s2 as f64, input.t1 as f64, input.t2 as f64);
    let v = match kind {
        ChshEmbedding::Optimal => [s1, s2, t1, t2],
        ChshEmbedding::Alternative => [s2, s1, t2, t1],
    };
    v.map(|x| FRAC_PI_2 * x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub features: [f64; N_FEATURES],
    pub label: i8,
    pub cluster: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// One corner of `{-π/4, π/4}^8` per cluster.
    pub shift_vectors: Vec<[f64; N_FEATURES]>,
    pub cluster_labels: Vec<i8>,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn split_of(&self, i: usize) -> Split {
        if self.train.binary_search(&i).is_ok() {
            Split::Train
        } else {
            Split::Validation
        }
    }

    pub fn train_samples(&self) -> impl Iterator<Item = &Sample> {
        self.train.iter().map(|&i| &self.samples[i])
    }

    pub fn validation_samples(&self) -> impl Iterator<Item = &Sample> {
        self.validation.iter().map(|&i| &self.samples[i])
    }

    pub fn label_counts(&self) -> (usize, usize) {
        let pos = self.samples.iter().filter(|s| s.label > 0).count();
        (pos, self.samples.len() - pos)
    }
}

/// Uniform point in the `dim`-ball: Gaussian direction, radius `r U^{1/dim}`.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        let r = radius * u.powf(1.0 / dim as f64);
        return g.into_iter().map(|x| x * r / norm).collect();
    }
}

fn corner(bits: usize) -> [f64; N_FEATURES] {
    std::array::from_fn(|i| if bits >> i & 1 == 1 { FRAC_PI_4 } else { -FRAC_PI_4 })
}

/// 3:1 split within each label class. Index lists come back sorted.
pub fn stratified_split<R: Rng + ?Sized>(labels: &[i8], rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let n_train = (idx.len() * 3).div_ceil(4);
        train.extend_from_slice(&idx[..n_train]);
        val.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// 4096 ball samples grouped into 64 clusters of 64, each cluster shifted to
/// a distinct corner and given a label (32 clusters per label), then split
/// 3:1 per label.
pub fn gen_synthetic(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..N_SAMPLES)
        .map(|_| sample_ball(&mut rng, N_FEATURES, FRAC_PI_4))
        .collect();
    let mut order: Vec<usize> = (0..N_SAMPLES).collect();
    order.shuffle(&mut rng);
    let mut cluster_of = vec![0usize; N_SAMPLES];
    let per_cluster = N_SAMPLES / N_CLUSTERS;
    for (pos, &i) in order.iter().enumerate() {
        cluster_of[i] = pos / per_cluster;
    }
    let shift_vectors: Vec<[f64; N_FEATURES]> = index::sample(&mut rng, 1 << N_FEATURES, N_CLUSTERS)
        .into_iter()
        .map(corner)
        .collect();
    let mut cluster_labels: Vec<i8> = (0..N_CLUSTERS).map(|c| if c < N_CLUSTERS / 2 { 1 } else { -1 }).collect();
    cluster_labels.shuffle(&mut rng);
    let samples: Vec<Sample> = points
        .iter()
        .zip(&cluster_of)
        .map(|(x, &c)| Sample {
            features: std::array::from_fn(|i| x[i] + shift_vectors[c][i]),
            label: cluster_labels[c],
            cluster: Some(c),
        })
        .collect();
    let labels: Vec<i8> = samples.iter().map(|s| s.label).collect();
    let (train, validation) = stratified_split(&labels, &mut rng);
    Dataset { samples, shift_vectors, cluster_labels, train, validation, seed: Some(seed) }
}

const FEATURE_HEADERS: [&str; N_FEATURES] = ["x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8"];

/// Columns `x1..x8,label,cluster,split`.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = FEATURE_HEADERS.to_vec();
    header.extend(["label", "cluster", "split"]);
    w.write_record(&header)?;
    for (i, s) in dataset.samples.iter().enumerate() {
        let mut rec: Vec<String> = s.features.iter().map(|x| format!("{x:?}")).collect();
        rec.push(s.label.to_string());
        rec.push(s.cluster.map(|c| c.to_string()).unwrap_or_default());
        rec.push(match dataset.split_of(i) {
            Split::Train => "train".into(),
            Split::Validation => "val".into(),
        });
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `x1..x8,label` with optional `cluster` and `split` columns. Without a
/// split column the 3:1 stratified split is drawn with seed 0.
pub fn read_csv(path: &Path) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    let ok_prefix = cols.len() >= 9
        && cols[..8] == FEATURE_HEADERS
        && cols[8] == "label"
        && cols[9..].iter().all(|c| *c == "cluster" || *c == "split");
    if !ok_prefix {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header x1..x8,label[,cluster][,split], got {cols:?}"),
        });
    }
    let cluster_col = cols.iter().position(|c| *c == "cluster");
    let split_col = cols.iter().position(|c| *c == "split");
    let mut samples = Vec::new();
    let mut splits = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let bad = |message: String| Error::Parse { line, message };
        if rec.len() != cols.len() {
            return Err(bad(format!("expected {} fields, found {}", cols.len(), rec.len())));
        }
        let mut features = [0.0; N_FEATURES];
        for (i, f) in features.iter_mut().enumerate() {
            *f = rec[i].trim().parse().map_err(|e| bad(format!("x{}: {e}", i + 1)))?;
        }
        let label: i8 = rec[8].trim().parse().map_err(|e| bad(format!("label: {e}")))?;
        if label != 1 && label != -1 {
            return Err(bad(format!("label must be -1 or 1, got {label}")));
        }
        let cluster = match cluster_col.map(|c| rec[c].trim()) {
            Some("") | None => None,
            Some(v) => Some(v.parse().map_err(|e| bad(format!("cluster: {e}")))?),
        };
        if let Some(c) = split_col {
            splits.push(match rec[c].trim() {
                "train" => Split::Train,
                "val" => Split::Validation,
                other => return Err(bad(format!("unknown split {other:?}"))),
            });
        }
        samples.push(Sample { features, label, cluster });
    }
    let (train, validation) = if split_col.is_some() {
        let train = (0..samples.len()).filter(|&i| splits[i] == Split::Train).collect();
        let val = (0..samples.len()).filter(|&i| splits[i] == Split::Validation).collect();
        (train, val)
    } else {
        let labels: Vec<i8> = samples.iter().map(|s| s.label).collect();
        stratified_split(&labels, &mut ChaCha8Rng::seed_from_u64(0))
    };
    Ok(Dataset {
        samples,
        shift_vectors: Vec::new(),
        cluster_labels: Vec::new(),
        train,
        validation,
        seed: None,
    })
}

/// Provenance record written next to a dataset CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: Option<u64>,
    pub n_samples: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub shift_vectors: Vec<[f64; N_FEATURES]>,
    pub cluster_labels: Vec<i8>,
}

impl DatasetManifest {
    pub fn of(d: &Dataset) -> Self {
        let (pos, neg) = d.label_counts();
        Self {
            seed: d.seed,
            n_samples: d.samples.len(),
            n_train: d.train.len(),
            n_validation: d.validation.len(),
            n_positive: pos,
            n_negative: neg,
            shift_vectors: d.shift_vectors.clone(),
            cluster_labels: d.cluster_labels.clone(),
        }
    }
}

/// Smallest Euclidean distance between two shift vectors.
pub fn min_shift_separation(d: &Dataset) -> f64 {
    let v = &d.shift_vectors;
    let mut best = f64::INFINITY;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let dist = v[i].iter().zip(&v[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            best = best.min(dist);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use std::f64::consts::PI;

    #[test]
    fn chsh_labels() {
        assert_eq!(ChshInput { s1: 0, s2: 1, t1: 0, t2: 1 }.label(), 1);
        assert_eq!(ChshInput { s1: 1, s2: -1, t1: 1, t2: 1 }.label(), 1);
        let all = chsh_inputs();
        assert_eq!(all.len(), 16);
        assert_eq!(all.iter().collect::<HashSet<_>>().len(), 16);
        assert_eq!(all.iter().filter(|i| i.label() == 1).count(), 8);
    }

    #[test]
    fn chsh_embeddings() {
        let h = PI / 2.0;
        let i = ChshInput { s1: 1, s2: 1, t1: 1, t2: 1 };
        assert_eq!(embed_chsh(&i, ChshEmbedding::Optimal), [h; 4]);
        let i = ChshInput { s1: 0, s2: -1, t1: 0, t2: -1 };
        assert_eq!(embed_chsh(&i, ChshEmbedding::Alternative), [-h, 0.0, -h, 0.0]);
        let i = ChshInput { s1: 1, s2: -1, t1: 0, t2: 1 };
        assert_eq!(embed_chsh(&i, ChshEmbedding::Optimal), [h, -h, 0.0, h]);
        let i = ChshInput { s1: 1, s2: 1, t1: 0, t2: -1 };
        assert_eq!(embed_chsh(&i, ChshEmbedding::Optimal), [h, h, 0.0, -h]);
    }

    #[test]
    fn synthetic_structure() {
        let d = gen_synthetic(17);
        assert_eq!(d.samples.len(), 4096);
        assert_eq!(d.label_counts(), (2048, 2048));
        assert_eq!(d.train.len(), 3072);
        assert_eq!(d.validation.len(), 1024);
        let train_pos = d.train_samples().filter(|s| s.label > 0).count();
        assert!((train_pos as i64 - 1536).abs() <= 1);
        let distinct: HashSet<Vec<u64>> =
            d.shift_vectors.iter().map(|v| v.iter().map(|x| x.to_bits()).collect()).collect();
        assert_eq!(distinct.len(), 64);
        assert_eq!(d.cluster_labels.iter().filter(|&&l| l > 0).count(), 32);
        for s in &d.samples {
            let c = s.cluster.unwrap();
            let dist = s
                .features
                .iter()
                .zip(&d.shift_vectors[c])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(dist <= FRAC_PI_4 + 1e-12);
            assert!(s.features.iter().all(|x| x.abs() <= FRAC_PI_2 + 1e-12));
            assert_eq!(s.label, d.cluster_labels[c]);
        }
        let sizes = d.samples.iter().fold(vec![0; 64], |mut acc, s| {
            acc[s.cluster.unwrap()] += 1;
            acc
        });
        assert!(sizes.iter().all(|&n| n == 64));
        assert!(min_shift_separation(&d) >= FRAC_PI_2 - 1e-12);
    }

    #[test]
    fn synthetic_deterministic() {
        assert_eq!(gen_synthetic(3), gen_synthetic(3));
        assert_ne!(gen_synthetic(3).samples[0], gen_synthetic(4).samples[0]);
    }

    #[test]
    fn ball_mean_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| sample_ball(&mut rng, 8, FRAC_PI_4).iter().map(|x| x * x).sum::<f64>().sqrt())
            .sum::<f64>()
            / n as f64;
        let want = FRAC_PI_4 * 8.0 / 9.0;
        assert!((mean / want - 1.0).abs() < 0.01, "mean {mean} want {want}");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = gen_synthetic(9);
        write_csv(&d, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.samples, d.samples);
        assert_eq!(back.train, d.train);
        assert_eq!(back.validation, d.validation);
    }

    #[test]
    fn csv_minimal_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "x1,x2,x3,x4,x5,x6,x7,x8,label\n0.1,0,0,0,0,0,0,0,1\n0,0,0,0,0,0,0,0.5,-1\n").unwrap();
        let d = read_csv(&path).unwrap();
        assert_eq!(d.samples.len(), 2);
        assert_eq!(d.samples[0].features[0], 0.1);
        assert_eq!(d.samples[1].label, -1);
        assert_eq!(d.train.len() + d.validation.len(), 2);
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b,c\n1,2,3\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Parse { line: 1, .. })));
        std::fs::write(&path, "x1,x2,x3,x4,x5,x6,x7,x8,label\n0,0,0,0,0,0,0,0,1\n0,0,0,zz,0,0,0,0,1\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Parse { line: 3, .. })));
        std::fs::write(&path, "x1,x2,x3,x4,x5,x6,x7,x8,label\n0,0,0,0,0,0,0,0,2\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Parse { line: 2, .. })));
    }
}
