//! Optimizers, batching and the training loop shared by the quantum
//! classifier and the classical baseline.
//!
//! Batches are drawn without replacement from a per-epoch permutation seeded
//! by `(seed, epoch)`, so a run resumed from a checkpoint (parameters,
//! optimizer moments, iteration counter) continues bit-for-bit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use crate::circuit::{assemble, CircuitConfig, CircuitInput, CircuitTemplate, EmbeddingKind};
use crate::error::{Error, Result};
use crate::grad::observable_gradient;
use crate::model::{accuracy, loss_mse, loss_product, LossEval, Scored, WeightMode, WeightVector};
use crate::qsim::{init_bell, Statevector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Mse,
    Product,
}

impl LossKind {
    pub fn eval(self, batch: &[Scored]) -> Result<LossEval> {
        match self {
            LossKind::Mse => loss_mse(batch),
            LossKind::Product => loss_product(batch),
        }
    }

    /// `dLoss/dE` for one sample of a batch of `n`.
    fn d_expectation(self, label: i8, e: f64, n: usize) -> f64 {
        let y = label as f64;
        match self {
            LossKind::Mse => 2.0 * (e - y) / n as f64,
            LossKind::Product => -y / n as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub iterations: usize,
    pub batch_fraction: f64,
    pub seed: u64,
    pub loss: LossKind,
    pub weight_mode: WeightMode,
    /// Metrics are recorded every `log_every` iterations and after the last.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 0.05,
            iterations: 2000,
            batch_fraction: 0.25,
            seed: 0,
            loss: LossKind::Mse,
            weight_mode: WeightMode::Free,
            log_every: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            return Err(Error::Config(format!("batch_fraction {} outside (0, 1]", self.batch_fraction)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Uniform `[0, 2π)` per parameter.
pub fn init_params(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    (0..count).map(|_| rng.random::<f64>() * TAU).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(lr: f64, n: usize) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, (p, g)) in params.iter_mut().zip(grad).enumerate() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Adam(Adam),
    Sgd { lr: f64 },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, n: usize) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(lr, n)),
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != grad.len() {
            return Err(Error::Argument(format!(
                "gradient length {} does not match {} parameters",
                grad.len(),
                params.len()
            )));
        }
        match self {
            Optimizer::Adam(a) => a.step(params, grad),
            Optimizer::Sgd { lr } => params.iter_mut().zip(grad).for_each(|(p, g)| *p -= *lr * g),
        }
        Ok(())
    }
}

/// A labelled input.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: i8,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Task {
    pub train: Vec<Example>,
    pub validation: Vec<Example>,
}

impl Task {
    pub fn from_dataset(d: &crate::datasets::Dataset) -> Self {
        let ex = |s: &crate::datasets::Sample| Example { features: s.features.to_vec(), label: s.label };
        Self {
            train: d.train_samples().map(ex).collect(),
            validation: d.validation_samples().map(ex).collect(),
        }
    }
}

/// A model trained by [`train`]: a flat parameter vector, batch loss with
/// gradient, and a real-valued score whose sign is the prediction.
pub trait Trainable: Sync {
    fn param_count(&self) -> usize;

    fn initial_params(&self, seed: u64) -> Vec<f64>;

    /// Batch loss and its gradient with respect to every parameter.
    fn loss_grad(&self, params: &[f64], batch: &[&Example], loss: LossKind) -> Result<(f64, Vec<f64>)>;

    fn score(&self, params: &[f64], example: &Example) -> Result<f64>;

    /// Maps raw optimizer output back into the feasible set.
    fn project(&self, _params: &mut [f64]) {}

    fn scores(&self, params: &[f64], examples: &[Example]) -> Result<Vec<Scored>> {
        examples
            .par_iter()
            .map(|ex| Ok(Scored::new(ex.label, self.score(params, ex)?)))
            .collect()
    }
}

/// Circuit parameters followed by the trainable outcome weights.
pub struct QuantumClassifier {
    pub config: CircuitConfig,
    pub template: CircuitTemplate,
    pub initial: Statevector,
    pub weight_mode: WeightMode,
}

impl QuantumClassifier {
    pub fn new(config: &CircuitConfig, weight_mode: WeightMode) -> Result<Self> {
        if config.embedding == EmbeddingKind::HaarRandom {
            return Err(Error::Config("training needs a feature embedding".into()));
        }
        Ok(Self {
            config: config.clone(),
            template: assemble(config)?,
            initial: init_bell(config.n_bell, config.qubits_per_proc)?,
            weight_mode,
        })
    }

    pub fn circuit_params(&self) -> usize {
        self.template.param_count()
    }

    /// Splits a flat vector into circuit angles and outcome weights.
    pub fn split<'p>(&self, params: &'p [f64]) -> (&'p [f64], WeightVector) {
        let (theta, w) = params.split_at(self.template.param_count());
        let mut weights = WeightVector::initial(self.weight_mode);
        if !w.is_empty() {
            weights.set_trainable(w);
        }
        (theta, weights)
    }

    pub fn distribution(&self, params: &[f64], features: &[f64]) -> Result<crate::circuit::OutcomeDistribution> {
        let (theta, _) = self.split(params);
        crate::circuit::evaluate(&self.template, theta, &self.initial, CircuitInput::Features(features))
    }
}

impl Trainable for QuantumClassifier {
    fn param_count(&self) -> usize {
        self.template.param_count() + WeightVector::initial(self.weight_mode).trainable_len()
    }

    fn initial_params(&self, seed: u64) -> Vec<f64> {
        let mut p = init_params(self.template.param_count(), seed);
        p.extend(WeightVector::initial(self.weight_mode).trainable());
        p
    }

    fn loss_grad(&self, params: &[f64], batch: &[&Example], loss: LossKind) -> Result<(f64, Vec<f64>)> {
        let (theta, weights) = self.split(params);
        let n = batch.len();
        let per_sample: Vec<(f64, [f64; 4], Vec<f64>)> = batch
            .par_iter()
            .map(|ex| {
                let mut d_e = 0.0;
                let mut e = 0.0;
                let (dist, g) = observable_gradient(
                    &self.template,
                    theta,
                    &self.initial,
                    CircuitInput::Features(&ex.features),
                    |dist| {
                        e = dist.0.iter().zip(&weights.values).map(|(p, w)| p * w).sum();
                        d_e = loss.d_expectation(ex.label, e, n);
                        weights.values.map(|w| w * d_e)
                    },
                )?;
                Ok((e, dist.0.map(|p| p * d_e), g))
            })
            .collect::<Result<_>>()?;
        let mut grad = vec![0.0; theta.len()];
        let mut d_weights = [0.0; 4];
        let mut scored = Vec::with_capacity(n);
        for ((e, dw, g), ex) in per_sample.iter().zip(batch) {
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            d_weights.iter_mut().zip(dw).for_each(|(a, b)| *a += b);
            scored.push(Scored::new(ex.label, *e));
        }
        grad.extend(weights.project_gradient(&d_weights));
        Ok((loss.eval(&scored)?.value, grad))
    }

    fn score(&self, params: &[f64], example: &Example) -> Result<f64> {
        let (_, weights) = self.split(params);
        let dist = self.distribution(params, &example.features)?;
        Ok(crate::model::expectation(&dist, &weights))
    }

    fn project(&self, params: &mut [f64]) {
        if self.weight_mode == WeightMode::ParityTrainable {
            let last = params.len() - 1;
            params[last] = params[last].max(1e-6);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub iteration: usize,
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

/// Everything needed to continue a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub params: Vec<f64>,
    pub optimizer: Optimizer,
    pub iteration: usize,
    pub history: Vec<MetricRow>,
}

impl TrainState {
    pub fn new<M: Trainable + ?Sized>(model: &M, config: &TrainConfig) -> Self {
        let params = model.initial_params(config.seed);
        let optimizer = Optimizer::new(config.optimizer, config.learning_rate, params.len());
        Self { params, optimizer, iteration: 0, history: Vec::new() }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn last(&self) -> Option<&MetricRow> {
        self.history.last()
    }
}

pub fn batch_size(n_train: usize, fraction: f64) -> usize {
    ((n_train as f64 * fraction).round() as usize).clamp(1, n_train.max(1))
}

/// Training indices used at `iteration`.
pub fn batch_indices(n_train: usize, batch: usize, seed: u64, iteration: usize) -> Vec<usize> {
    let per_epoch = (n_train / batch).max(1);
    let epoch = iteration / per_epoch;
    let slot = iteration % per_epoch;
    let mut perm: Vec<usize> = (0..n_train).collect();
    if batch < n_train {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(epoch as u64);
        perm.shuffle(&mut rng);
    }
    perm[slot * batch..(slot + 1) * batch].to_vec()
}

fn check_finite(loss: f64, grad: &[f64], iteration: usize) -> Result<()> {
    if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!("non-finite loss or gradient at iteration {iteration}")));
    }
    Ok(())
}

/// Runs `state` forward until `config.iterations`.
pub fn resume<M: Trainable + ?Sized>(
    model: &M,
    task: &Task,
    config: &TrainConfig,
    state: TrainState,
) -> Result<TrainState> {
    advance(model, task, config, state, config.iterations)
}

/// Runs `state` forward until `min(until, config.iterations)`. Stopping
/// early and continuing later gives the same state and history as one call.
pub fn advance<M: Trainable + ?Sized>(
    model: &M,
    task: &Task,
    config: &TrainConfig,
    mut state: TrainState,
    until: usize,
) -> Result<TrainState> {
    config.validate()?;
    if task.train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if state.params.len() != model.param_count() {
        return Err(Error::Config(format!(
            "checkpoint has {} parameters, model needs {}",
            state.params.len(),
            model.param_count()
        )));
    }
    let bs = batch_size(task.train.len(), config.batch_fraction);
    while state.iteration < until.min(config.iterations) {
        let idx = batch_indices(task.train.len(), bs, config.seed, state.iteration);
        let batch: Vec<&Example> = idx.iter().map(|&i| &task.train[i]).collect();
        let (loss, grad) = model.loss_grad(&state.params, &batch, config.loss)?;
        check_finite(loss, &grad, state.iteration)?;
        state.optimizer.step(&mut state.params, &grad)?;
        model.project(&mut state.params);
        state.iteration += 1;
        if state.iteration.is_multiple_of(config.log_every) || state.iteration == config.iterations {
            let train_acc = accuracy(&model.scores(&state.params, &task.train)?)?;
            let val_acc = if task.validation.is_empty() {
                f64::NAN
            } else {
                accuracy(&model.scores(&state.params, &task.validation)?)?
            };
            state.history.push(MetricRow { iteration: state.iteration, loss, train_acc, val_acc });
        }
    }
    Ok(state)
}

pub fn train<M: Trainable + ?Sized>(model: &M, task: &Task, config: &TrainConfig) -> Result<TrainState> {
    resume(model, task, config, TrainState::new(model, config))
}

pub const METRIC_HEADER: &str = "iteration,loss,train_acc,val_acc";

pub fn write_metrics<W: Write>(out: &mut W, history: &[MetricRow]) -> Result<()> {
    writeln!(out, "{METRIC_HEADER}")?;
    for r in history {
        writeln!(out, "{},{:?},{:?},{:?}", r.iteration, r.loss, r.train_acc, r.val_acc)?;
    }
    Ok(())
}
