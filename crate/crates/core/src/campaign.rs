//! Configured experiment campaigns behind the `dqml` subcommands.
//!
//! Each campaign reads a JSON config (unknown keys rejected), applies CLI
//! overrides, runs its grid of independent cells on the rayon pool and
//! writes CSV tables plus a `manifest.json`. Every CSV starts with a
//! `# config=<json>` line holding the resolved config; the manifest keeps
//! the wall-clock timestamp so table files are reproducible byte for byte.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitConfig, EmbeddingKind};
use crate::datasets::{
    chsh_inputs, embed_chsh, gen_synthetic, read_csv, ChshEmbedding, ChshInput, Dataset, DatasetManifest,
};
use crate::dnn::{dnn_param_count, DistributedDnn};
use crate::effdim::{depth_sweep, write_sweep_csv, EDProtocolConfig, SweepRow};
use crate::error::{Error, Result};
use crate::model::{accuracy, chsh_correlator, chsh_success, WeightMode};
use crate::train::{
    advance, train, write_metrics, Example, LossKind, QuantumClassifier, Task, TrainConfig, TrainState, Trainable,
};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "DQML_WORKERS";

/// Values given on the command line; each one replaces the file's key.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub workers: Option<usize>,
    pub depth: Vec<usize>,
    pub bell: Vec<usize>,
    pub loss: Vec<LossKind>,
    pub embedding: Vec<String>,
    pub mixing_depth: Option<usize>,
    pub second_stage_depth: Option<usize>,
}

impl Overrides {
    fn single_depth(&self) -> Result<Option<usize>> {
        match self.depth.as_slice() {
            [] => Ok(None),
            [d] => Ok(Some(*d)),
            _ => Err(Error::Config("this command takes a single --depth".into())),
        }
    }

    fn apply_circuit(&self, c: &mut CircuitConfig) {
        if let Some(m) = self.mixing_depth {
            c.mixing_depth = m;
        }
        if let Some(d) = self.second_stage_depth {
            c.second_stage_depth = Some(d);
        }
    }

    fn embeddings<T: DeserializeOwned>(&self) -> Result<Vec<T>> {
        self.embedding.iter().map(|s| parse_name(s, "embedding")).collect()
    }
}

/// Parses a snake_case enum name such as `"haar_random"`.
pub fn parse_name<T: DeserializeOwned>(s: &str, what: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::Config(format!("unknown {what} '{s}'")))
}

/// Reads a config file, or returns the default when `path` is `None`.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

fn check_repeats(repeats: usize) -> Result<()> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    Ok(())
}

fn check_nonempty<T>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{what} list is empty")));
    }
    Ok(())
}

/// Training seed of repeat `r`.
pub fn repeat_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64)
}

/// Output directory with the resolved config baked into every file.
pub struct RunDir {
    path: PathBuf,
    command: String,
    config: serde_json::Value,
    seed: u64,
    files: Vec<String>,
}

impl RunDir {
    pub fn create<C: Serialize>(path: &Path, command: &str, config: &C, seed: u64) -> Result<Self> {
        fs::create_dir_all(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn config_line(&self) -> String {
        format!("# config={}", self.config)
    }

    /// Opens `name` and writes the config line.
    pub fn table(&mut self, name: &str) -> Result<BufWriter<File>> {
        let full = self.path.join(name);
        if let Some(parent) = full.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = BufWriter::new(File::create(&full)?);
        writeln!(w, "{}", self.config_line())?;
        self.files.push(name.to_string());
        Ok(w)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        fs::write(self.path.join(name), serde_json::to_string_pretty(value)? + "\n")?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish(self) -> Result<PathBuf> {
        let manifest = serde_json::json!({
            "tool": "dqml",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "files": self.files,
            "created": chrono::Utc::now().to_rfc3339(),
        });
        let path = self.path.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(path)
    }
}

// ---------------------------------------------------------------------------
// Aggregation shared by the campaigns and `report`.

/// Known table layouts: header, grouping columns, aggregated columns.
struct Schema {
    name: &'static str,
    header: &'static [&'static str],
    keys: &'static [&'static str],
    metrics: &'static [&'static str],
}

pub const CHSH_RUNS_HEADER: &[&str] =
    &["bell", "embedding", "loss", "repeat", "seed", "final_loss", "accuracy", "success", "s", "p_win", "omega"];
pub const RUNS_HEADER: &[&str] = &[
    "model",
    "bell",
    "depth",
    "mixing_depth",
    "repeat",
    "seed",
    "param_count",
    "final_loss",
    "train_acc",
    "val_acc",
];

const SCHEMAS: &[Schema] = &[
    Schema {
        name: "chsh",
        header: CHSH_RUNS_HEADER,
        keys: &["bell", "embedding", "loss"],
        metrics: &["final_loss", "accuracy", "success", "s", "p_win", "omega"],
    },
    Schema {
        name: "classifier",
        header: RUNS_HEADER,
        keys: &["model", "bell", "depth", "mixing_depth", "param_count"],
        metrics: &["final_loss", "train_acc", "val_acc"],
    },
];

/// Rows of a runs table, as strings keyed by column.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunsTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RunsTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
        let header = rdr.headers()?.iter().map(str::to_string).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(out, "{}", r.join(","))?;
        }
        Ok(())
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups runs by their key columns (first-seen order) and reports
/// `runs, <metric>_mean, <metric>_std`.
pub fn aggregate(tables: &[RunsTable]) -> Result<RunsTable> {
    let first = tables.first().ok_or_else(|| Error::Config("no runs to aggregate".into()))?;
    if let Some(t) = tables.iter().find(|t| t.header != first.header) {
        return Err(Error::Config(format!(
            "mixed schemas: [{}] vs [{}]",
            first.header.join(","),
            t.header.join(",")
        )));
    }
    let schema = SCHEMAS
        .iter()
        .find(|s| s.header.iter().copied().eq(first.header.iter().map(String::as_str)))
        .ok_or_else(|| Error::Config(format!("unrecognised runs header [{}]", first.header.join(","))))?;
    let col = |name: &str| first.header.iter().position(|h| h == name).expect("schema column");
    let key_cols: Vec<usize> = schema.keys.iter().map(|k| col(k)).collect();
    let metric_cols: Vec<usize> = schema.metrics.iter().map(|m| col(m)).collect();

    let mut order: Vec<Vec<String>> = Vec::new();
    let mut groups: BTreeMap<Vec<String>, Vec<Vec<f64>>> = BTreeMap::new();
    for (line, row) in tables.iter().flat_map(|t| &t.rows).enumerate() {
        if row.len() != first.header.len() {
            return Err(Error::Parse { line: line + 2, message: format!("expected {} fields", first.header.len()) });
        }
        let key: Vec<String> = key_cols.iter().map(|&c| row[c].clone()).collect();
        let values = metric_cols
            .iter()
            .map(|&c| {
                row[c].parse::<f64>().map_err(|_| Error::Parse {
                    line: line + 2,
                    message: format!("non-numeric {} '{}'", first.header[c], row[c]),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(values);
    }
    if order.is_empty() {
        return Err(Error::Config(format!("{} runs tables contain no rows", schema.name)));
    }

    let mut header: Vec<String> = schema.keys.iter().map(|k| k.to_string()).collect();
    header.push("runs".into());
    for m in schema.metrics {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    let rows = order
        .into_iter()
        .map(|key| {
            let runs = &groups[&key];
            let mut row = key.clone();
            row.push(runs.len().to_string());
            for j in 0..metric_cols.len() {
                let xs: Vec<f64> = runs.iter().map(|r| r[j]).collect();
                let (m, s) = mean_std(&xs);
                row.push(format!("{m:.6}"));
                row.push(format!("{s:.6}"));
            }
            row
        })
        .collect();
    Ok(RunsTable { header, rows })
}

fn runs_table(header: &[&str], rows: Vec<Vec<String>>) -> RunsTable {
    RunsTable { header: header.iter().map(|h| h.to_string()).collect(), rows }
}

fn name_of<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

// ---------------------------------------------------------------------------
// chsh

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChshCampaign {
    pub seed: u64,
    pub repeats: usize,
    pub workers: Option<usize>,
    pub bells: Vec<usize>,
    pub embeddings: Vec<ChshEmbedding>,
    pub losses: Vec<LossKind>,
    /// Outcome weights used with each loss.
    pub mse_weights: WeightMode,
    pub product_weights: WeightMode,
    pub circuit: CircuitConfig,
    pub train: TrainConfig,
}

impl Default for ChshCampaign {
    fn default() -> Self {
        Self {
            seed: 0,
            repeats: 10,
            workers: None,
            bells: vec![0, 1],
            embeddings: vec![ChshEmbedding::Optimal, ChshEmbedding::Alternative],
            losses: vec![LossKind::Mse, LossKind::Product],
            mse_weights: WeightMode::ParityTrainable,
            product_weights: WeightMode::ParityFixedUnit,
            circuit: CircuitConfig { qubits_per_proc: 2, conv_depth: 10, ..Default::default() },
            train: TrainConfig { batch_fraction: 1.0, log_every: 100, ..Default::default() },
        }
    }
}

impl ChshCampaign {
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        self.seed = o.seed.unwrap_or(self.seed);
        self.repeats = o.repeats.unwrap_or(self.repeats);
        self.workers = o.workers.or(self.workers);
        if let Some(d) = o.single_depth()? {
            self.circuit.conv_depth = d;
        }
        if !o.bell.is_empty() {
            self.bells = o.bell.clone();
        }
        if !o.loss.is_empty() {
            self.losses = o.loss.clone();
        }
        if !o.embedding.is_empty() {
            self.embeddings = o.embeddings()?;
        }
        o.apply_circuit(&mut self.circuit);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        check_repeats(self.repeats)?;
        check_nonempty(&self.bells, "bells")?;
        check_nonempty(&self.embeddings, "embeddings")?;
        check_nonempty(&self.losses, "losses")?;
        if self.circuit.qubits_per_proc != 2 {
            return Err(Error::Config("the CHSH task uses 2 qubits per processor".into()));
        }
        if self.circuit.embedding != EmbeddingKind::FeatureMap {
            return Err(Error::Config("the CHSH task needs the feature-map embedding".into()));
        }
        self.train.validate()
    }

    pub fn weight_mode(&self, loss: LossKind) -> WeightMode {
        match loss {
            LossKind::Mse => self.mse_weights,
            LossKind::Product => self.product_weights,
        }
    }
}

pub fn chsh_task(kind: ChshEmbedding) -> Task {
    let ex: Vec<Example> = chsh_inputs()
        .iter()
        .map(|i| Example { features: embed_chsh(i, kind).to_vec(), label: i.label() })
        .collect();
    Task { train: ex.clone(), validation: ex }
}

/// Per-input outcome of a trained CHSH model.
#[derive(Clone, Debug, PartialEq)]
pub struct ChshInputScore {
    pub input: ChshInput,
    pub expectation: f64,
    /// `L · E / ω`.
    pub normalized: f64,
}

/// One trained CHSH cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ChshRun {
    pub bell: usize,
    pub embedding: ChshEmbedding,
    pub loss: LossKind,
    pub repeat: usize,
    pub seed: u64,
    pub final_loss: f64,
    pub accuracy: f64,
    /// Mean per-input success probability `(1 + L E/ω) / 2`.
    pub success: f64,
    pub s: f64,
    pub p_win: f64,
    pub omega: f64,
    pub inputs: Vec<ChshInputScore>,
}

/// Trains one CHSH cell and scores all 16 inputs.
pub fn run_chsh_cell(
    campaign: &ChshCampaign,
    bell: usize,
    embedding: ChshEmbedding,
    loss: LossKind,
    repeat: usize,
) -> Result<ChshRun> {
    let mode = campaign.weight_mode(loss);
    let circuit = CircuitConfig { n_bell: bell, ..campaign.circuit.clone() };
    let model = QuantumClassifier::new(&circuit, mode)?;
    let seed = repeat_seed(campaign.seed, repeat);
    let cfg = TrainConfig { seed, loss, weight_mode: mode, ..campaign.train.clone() };
    let task = chsh_task(embedding);
    let state = train(&model, &task, &cfg)?;
    let scored = model.scores(&state.params, &task.train)?;
    let omega = model.split(&state.params).1.scale();

    let mut inputs = Vec::with_capacity(16);
    let mut success = 0.0;
    let mut corr = [[0.0; 2]; 2];
    for (input, sc) in chsh_inputs().into_iter().zip(&scored) {
        success += chsh_success(sc.expectation, sc.label, omega)?;
        let normalized = sc.label as f64 * sc.expectation / omega;
        // Undo the output sign flips to recover <A_s B_t>.
        corr[input.s1 as usize][input.t1 as usize] += (input.s2 * input.t2) as f64 * sc.expectation / omega / 4.0;
        inputs.push(ChshInputScore { input, expectation: sc.expectation, normalized });
    }
    let score = chsh_correlator(&corr.map(|r| r.map(|c: f64| c.clamp(-1.0, 1.0))))?;
    Ok(ChshRun {
        bell,
        embedding,
        loss,
        repeat,
        seed,
        final_loss: state.last().map_or(f64::NAN, |r| r.loss),
        accuracy: accuracy(&scored)?,
        success: success / 16.0,
        s: score.s,
        p_win: score.p_win,
        omega,
        inputs,
    })
}

/// Runs the whole grid in parallel; results come back in grid order.
pub fn run_chsh(campaign: &ChshCampaign) -> Result<Vec<ChshRun>> {
    campaign.validate()?;
    let mut cells = Vec::new();
    for &bell in &campaign.bells {
        for &emb in &campaign.embeddings {
            for &loss in &campaign.losses {
                for r in 0..campaign.repeats {
                    cells.push((bell, emb, loss, r));
                }
            }
        }
    }
    cells.into_par_iter().map(|(b, e, l, r)| run_chsh_cell(campaign, b, e, l, r)).collect()
}

pub fn chsh_runs_table(runs: &[ChshRun]) -> RunsTable {
    let rows = runs
        .iter()
        .map(|r| {
            vec![
                r.bell.to_string(),
                name_of(&r.embedding),
                name_of(&r.loss),
                r.repeat.to_string(),
                r.seed.to_string(),
                format!("{:?}", r.final_loss),
                format!("{:?}", r.accuracy),
                format!("{:?}", r.success),
                format!("{:?}", r.s),
                format!("{:?}", r.p_win),
                format!("{:?}", r.omega),
            ]
        })
        .collect();
    runs_table(CHSH_RUNS_HEADER, rows)
}

pub fn cmd_chsh(campaign: &ChshCampaign, out: &Path) -> Result<PathBuf> {
    let runs = run_chsh(campaign)?;
    let mut dir = RunDir::create(out, "chsh", campaign, campaign.seed)?;
    let table = chsh_runs_table(&runs);
    table.write(&mut dir.table("chsh_runs.csv")?)?;
    aggregate(&[table])?.write(&mut dir.table("chsh_summary.csv")?)?;
    let mut w = dir.table("chsh_inputs.csv")?;
    writeln!(w, "bell,embedding,loss,repeat,s1,s2,t1,t2,label,expectation,normalized")?;
    for r in &runs {
        for x in &r.inputs {
            let i = x.input;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{:?},{:?}",
                r.bell,
                name_of(&r.embedding),
                name_of(&r.loss),
                r.repeat,
                i.s1,
                i.s2,
                i.t1,
                i.t2,
                i.label(),
                x.expectation,
                x.normalized
            )?;
        }
    }
    w.flush()?;
    dir.finish()
}

// ---------------------------------------------------------------------------
// synth and dnn

/// Where the classification data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSource {
    /// Generator seed, used when `path` is unset.
    pub seed: u64,
    /// CSV written by [`crate::datasets::write_csv`].
    pub path: Option<PathBuf>,
}

impl Default for DataSource {
    fn default() -> Self {
        Self { seed: 1, path: None }
    }
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match &self.path {
            Some(p) => read_csv(p),
            None => Ok(gen_synthetic(self.seed)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthCampaign {
    pub seed: u64,
    pub repeats: usize,
    pub workers: Option<usize>,
    pub dataset: DataSource,
    pub bells: Vec<usize>,
    pub depths: Vec<usize>,
    pub circuit: CircuitConfig,
    pub train: TrainConfig,
    /// Iterations between checkpoints; 0 disables checkpointing.
    pub checkpoint_every: usize,
}

impl Default for SynthCampaign {
    fn default() -> Self {
        Self {
            seed: 0,
            repeats: 10,
            workers: None,
            dataset: DataSource::default(),
            bells: vec![0, 1, 2, 3, 4],
            depths: vec![10],
            circuit: CircuitConfig::default(),
            train: TrainConfig { log_every: 100, ..Default::default() },
            checkpoint_every: 100,
        }
    }
}

impl SynthCampaign {
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        self.seed = o.seed.unwrap_or(self.seed);
        self.repeats = o.repeats.unwrap_or(self.repeats);
        self.workers = o.workers.or(self.workers);
        if !o.depth.is_empty() {
            self.depths = o.depth.clone();
        }
        if !o.bell.is_empty() {
            self.bells = o.bell.clone();
        }
        match o.loss.as_slice() {
            [] => {}
            [l] => self.train.loss = *l,
            _ => return Err(Error::Config("synth takes a single --loss".into())),
        }
        match o.embeddings::<EmbeddingKind>()?.as_slice() {
            [] => {}
            [e] => self.circuit.embedding = *e,
            _ => return Err(Error::Config("synth takes a single --embedding".into())),
        }
        o.apply_circuit(&mut self.circuit);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        check_repeats(self.repeats)?;
        check_nonempty(&self.bells, "bells")?;
        check_nonempty(&self.depths, "depths")?;
        if self.circuit.embedding != EmbeddingKind::FeatureMap {
            return Err(Error::Config("classification needs the feature-map embedding".into()));
        }
        self.train.validate()
    }
}

/// Final metrics of one classifier run.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierRun {
    pub model: &'static str,
    pub bell: Option<usize>,
    pub depth: Option<usize>,
    pub mixing_depth: Option<usize>,
    pub repeat: usize,
    pub seed: u64,
    pub param_count: usize,
    pub state: TrainState,
}

impl ClassifierRun {
    pub fn cell_name(&self) -> String {
        cell_name(self.model, self.bell, self.depth, self.mixing_depth, self.repeat)
    }
}

fn cell_name(model: &str, bell: Option<usize>, depth: Option<usize>, mix: Option<usize>, repeat: usize) -> String {
    let mut s = model.to_string();
    if let Some(b) = bell {
        s += &format!("_bell{b}");
    }
    if let Some(d) = depth {
        s += &format!("_d{d}");
    }
    if let Some(m) = mix {
        s += &format!("_mix{m}");
    }
    s + &format!("_r{repeat}")
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    config: serde_json::Value,
    state: TrainState,
}

/// Trains with periodic checkpoints under `ckpt_dir`, continuing from an
/// existing checkpoint written with the same config.
pub fn train_checkpointed<M: Trainable + ?Sized>(
    model: &M,
    task: &Task,
    config: &TrainConfig,
    every: usize,
    ckpt: Option<&Path>,
) -> Result<TrainState> {
    let Some(path) = ckpt.filter(|_| every > 0) else {
        return train(model, task, config);
    };
    let key = serde_json::to_value(config)?;
    let mut state = if path.exists() {
        let c: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        if c.config != key {
            return Err(Error::Config(format!("checkpoint {} was written by a different config", path.display())));
        }
        c.state
    } else {
        TrainState::new(model, config)
    };
    while state.iteration < config.iterations {
        let next = (state.iteration / every + 1) * every;
        state = advance(model, task, config, state, next)?;
        let c = Checkpoint { config: key.clone(), state };
        fs::write(path, serde_json::to_string(&c)?)?;
        state = c.state;
    }
    Ok(state)
}

fn classifier_rows(runs: &[ClassifierRun]) -> RunsTable {
    let opt = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
    let rows = runs
        .iter()
        .map(|r| {
            let last = r.state.last();
            vec![
                r.model.to_string(),
                opt(r.bell),
                opt(r.depth),
                opt(r.mixing_depth),
                r.repeat.to_string(),
                r.seed.to_string(),
                r.param_count.to_string(),
                format!("{:?}", last.map_or(f64::NAN, |m| m.loss)),
                format!("{:?}", last.map_or(f64::NAN, |m| m.train_acc)),
                format!("{:?}", last.map_or(f64::NAN, |m| m.val_acc)),
            ]
        })
        .collect();
    runs_table(RUNS_HEADER, rows)
}

fn write_classifier_outputs(dir: &mut RunDir, prefix: &str, dataset: &Dataset, runs: &[ClassifierRun]) -> Result<()> {
    dir.write_json("dataset_manifest.json", &DatasetManifest::of(dataset))?;
    let table = classifier_rows(runs);
    table.write(&mut dir.table(&format!("{prefix}_runs.csv"))?)?;
    aggregate(&[table])?.write(&mut dir.table(&format!("{prefix}_table.csv"))?)?;
    for r in runs {
        let mut w = dir.table(&format!("metrics/{}.csv", r.cell_name()))?;
        write_metrics(&mut w, &r.state.history)?;
        w.flush()?;
    }
    Ok(())
}

/// Trains every `(depth, bell, repeat)` cell. Checkpoints go to
/// `ckpt_dir` when given.
pub fn run_synth(campaign: &SynthCampaign, dataset: &Dataset, ckpt_dir: Option<&Path>) -> Result<Vec<ClassifierRun>> {
    campaign.validate()?;
    let task = Task::from_dataset(dataset);
    if let Some(d) = ckpt_dir {
        fs::create_dir_all(d)?;
    }
    let mut cells = Vec::new();
    for &depth in &campaign.depths {
        for &bell in &campaign.bells {
            for r in 0..campaign.repeats {
                cells.push((depth, bell, r));
            }
        }
    }
    let mix = campaign.circuit.mixing_depth;
    cells
        .into_par_iter()
        .map(|(depth, bell, repeat)| {
            let circuit = CircuitConfig { n_bell: bell, conv_depth: depth, ..campaign.circuit.clone() };
            let model = QuantumClassifier::new(&circuit, campaign.train.weight_mode)?;
            let seed = repeat_seed(campaign.seed, repeat);
            let cfg = TrainConfig { seed, ..campaign.train.clone() };
            let name = cell_name("qcnn", Some(bell), Some(depth), Some(mix), repeat);
            let ckpt = ckpt_dir.map(|d| d.join(format!("{name}.json")));
            let state = train_checkpointed(&model, &task, &cfg, campaign.checkpoint_every, ckpt.as_deref())?;
            Ok(ClassifierRun {
                model: "qcnn",
                bell: Some(bell),
                depth: Some(depth),
                mixing_depth: Some(mix),
                repeat,
                seed,
                param_count: model.param_count(),
                state,
            })
        })
        .collect()
}

pub fn cmd_synth(campaign: &SynthCampaign, out: &Path) -> Result<PathBuf> {
    campaign.validate()?;
    let dataset = campaign.dataset.load()?;
    let mut dir = RunDir::create(out, "synth", campaign, campaign.seed)?;
    let runs = run_synth(campaign, &dataset, Some(&out.join("checkpoints")))?;
    write_classifier_outputs(&mut dir, "synth", &dataset, &runs)?;
    dir.finish()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DnnCampaign {
    pub seed: u64,
    pub repeats: usize,
    pub workers: Option<usize>,
    pub dataset: DataSource,
    pub train: TrainConfig,
    pub checkpoint_every: usize,
}

impl Default for DnnCampaign {
    fn default() -> Self {
        Self {
            seed: 0,
            repeats: 10,
            workers: None,
            dataset: DataSource::default(),
            train: TrainConfig { log_every: 100, ..Default::default() },
            checkpoint_every: 0,
        }
    }
}

impl DnnCampaign {
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        self.seed = o.seed.unwrap_or(self.seed);
        self.repeats = o.repeats.unwrap_or(self.repeats);
        self.workers = o.workers.or(self.workers);
        if !o.bell.is_empty() || !o.depth.is_empty() || !o.embedding.is_empty() {
            return Err(Error::Config("--bell, --depth and --embedding do not apply to dnn".into()));
        }
        if o.mixing_depth.is_some() || o.second_stage_depth.is_some() {
            return Err(Error::Config("circuit flags do not apply to dnn".into()));
        }
        match o.loss.as_slice() {
            [] => {}
            [l] => self.train.loss = *l,
            _ => return Err(Error::Config("dnn takes a single --loss".into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        check_repeats(self.repeats)?;
        self.train.validate()
    }
}

pub fn run_dnn(campaign: &DnnCampaign, dataset: &Dataset, ckpt_dir: Option<&Path>) -> Result<Vec<ClassifierRun>> {
    campaign.validate()?;
    let task = Task::from_dataset(dataset);
    if let Some(d) = ckpt_dir {
        fs::create_dir_all(d)?;
    }
    (0..campaign.repeats)
        .into_par_iter()
        .map(|repeat| {
            let seed = repeat_seed(campaign.seed, repeat);
            let cfg = TrainConfig { seed, ..campaign.train.clone() };
            let ckpt = ckpt_dir.map(|d| d.join(format!("{}.json", cell_name("dnn", None, None, None, repeat))));
            let state = train_checkpointed(&DistributedDnn, &task, &cfg, campaign.checkpoint_every, ckpt.as_deref())?;
            Ok(ClassifierRun {
                model: "dnn",
                bell: None,
                depth: None,
                mixing_depth: None,
                repeat,
                seed,
                param_count: dnn_param_count(),
                state,
            })
        })
        .collect()
}

pub fn cmd_dnn(campaign: &DnnCampaign, out: &Path) -> Result<PathBuf> {
    campaign.validate()?;
    let dataset = campaign.dataset.load()?;
    let mut dir = RunDir::create(out, "dnn", campaign, campaign.seed)?;
    let runs = run_dnn(campaign, &dataset, Some(&out.join("checkpoints")))?;
    write_classifier_outputs(&mut dir, "dnn", &dataset, &runs)?;
    dir.finish()
}

// ---------------------------------------------------------------------------
// effdim

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EffdimCampaign {
    pub seed: u64,
    pub workers: Option<usize>,
    pub bells: Vec<usize>,
    pub mixing_depths: Vec<usize>,
    /// Largest convolutional depth swept.
    pub max_depth: usize,
    pub circuit: CircuitConfig,
    pub protocol: EDProtocolConfig,
}

impl Default for EffdimCampaign {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: None,
            bells: vec![0, 1, 2, 3, 4],
            mixing_depths: vec![0],
            max_depth: 12,
            circuit: CircuitConfig { embedding: EmbeddingKind::HaarRandom, ..Default::default() },
            protocol: EDProtocolConfig::default(),
        }
    }
}

impl EffdimCampaign {
    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        self.seed = o.seed.unwrap_or(self.seed);
        self.workers = o.workers.or(self.workers);
        if let Some(d) = o.single_depth()? {
            self.max_depth = d;
        }
        if !o.bell.is_empty() {
            self.bells = o.bell.clone();
        }
        if let Some(m) = o.mixing_depth {
            self.mixing_depths = vec![m];
        }
        if let Some(d) = o.second_stage_depth {
            self.circuit.second_stage_depth = Some(d);
        }
        match o.embeddings::<EmbeddingKind>()?.as_slice() {
            [] => {}
            [e] => self.circuit.embedding = *e,
            _ => return Err(Error::Config("effdim takes a single --embedding".into())),
        }
        if o.repeats.is_some() || !o.loss.is_empty() {
            return Err(Error::Config("--repeats and --loss do not apply to effdim".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        check_nonempty(&self.bells, "bells")?;
        check_nonempty(&self.mixing_depths, "mixing_depths")?;
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        if self.circuit.embedding != EmbeddingKind::HaarRandom {
            return Err(Error::Config("effective dimension needs the haar_random embedding".into()));
        }
        self.protocol.validate()
    }
}

/// One sweep per `(mixing_depth, bell)`; each uses its own seed stream.
pub fn run_effdim(campaign: &EffdimCampaign) -> Result<Vec<SweepRow>> {
    campaign.validate()?;
    let mut rows = Vec::new();
    for &mix in &campaign.mixing_depths {
        for &bell in &campaign.bells {
            let base = CircuitConfig { n_bell: bell, mixing_depth: mix, ..campaign.circuit.clone() };
            let seed = campaign.seed.wrapping_add((1000 * mix + bell) as u64);
            rows.extend(depth_sweep(&base, &campaign.protocol, campaign.max_depth, seed)?);
        }
    }
    Ok(rows)
}

pub fn cmd_effdim(campaign: &EffdimCampaign, out: &Path) -> Result<PathBuf> {
    let rows = run_effdim(campaign)?;
    let mut dir = RunDir::create(out, "effdim", campaign, campaign.seed)?;
    let mut w = dir.table("effdim.csv")?;
    write_sweep_csv(&mut w, &rows)?;
    w.flush()?;
    dir.finish()
}

// ---------------------------------------------------------------------------
// report

/// Merges runs tables into `report.csv` and `report.json` under `out`.
pub fn cmd_report(paths: &[PathBuf], out: &Path) -> Result<PathBuf> {
    if paths.is_empty() {
        return Err(Error::Config("report needs at least one runs CSV".into()));
    }
    let tables = paths
        .iter()
        .map(|p| RunsTable::read(p).map_err(|e| Error::Config(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<_>>>()?;
    let summary = aggregate(&tables)?;
    let inputs: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    let mut dir = RunDir::create(out, "report", &serde_json::json!({ "inputs": inputs }), 0)?;
    summary.write(&mut dir.table("report.csv")?)?;
    let json: Vec<BTreeMap<&str, &str>> = summary
        .rows
        .iter()
        .map(|r| summary.header.iter().map(String::as_str).zip(r.iter().map(String::as_str)).collect())
        .collect();
    dir.write_json("report.json", &json)?;
    dir.finish()
}
