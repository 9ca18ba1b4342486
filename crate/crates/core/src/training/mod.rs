//! Learning a post-processing matrix by per-sample ADAM updates.

mod loss;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::circuit::{generate_periodic_function, Distribution, PeriodicFunction};
use crate::error::{Error, Result};
use crate::linalg::{seeded_rng, ComplexMatrix};
use crate::optim::{adam_update, AdamConfig};

pub use loss::{
    loss, loss_gradient, penalty_term, target_distribution, LossConfig, LossTerms, TargetKind, TrainingSample,
};

/// Loss above which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Parameters of the candidate matrix plus ADAM state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    /// Interleaved `(re, im)` entries of `M`, row-major.
    pub w: Vec<f64>,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub t: u64,
}

impl TrainState {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let w = m.to_interleaved();
        let len = w.len();
        TrainState {
            w,
            adam_m: vec![0.0; len],
            adam_v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn dim(&self) -> usize {
        ((self.w.len() / 2) as f64).sqrt().round() as usize
    }

    pub fn matrix(&self) -> Result<ComplexMatrix> {
        ComplexMatrix::from_interleaved(self.dim(), &self.w)
    }

    pub fn adam_step(&mut self, grad: &[f64], cfg: &AdamConfig) {
        adam_update(&mut self.w, &mut self.adam_m, &mut self.adam_v, &mut self.t, grad, cfg);
    }
}

/// Random starting point on `qubits` qubits: i.i.d. normal real and
/// imaginary parts with standard deviation `2^{-qubits/2}`.
pub fn initialize_parameters(qubits: u32, seed: u64) -> TrainState {
    assert!(qubits >= 1, "need at least one qubit");
    let dim = 1usize << qubits;
    let normal = Normal::new(0.0, initial_scale(qubits)).expect("positive scale");
    let mut rng = seeded_rng(seed);
    let w: Vec<f64> = (0..2 * dim * dim).map(|_| normal.sample(&mut rng)).collect();
    let len = w.len();
    TrainState {
        w,
        adam_m: vec![0.0; len],
        adam_v: vec![0.0; len],
        t: 0,
    }
}

pub fn initial_scale(qubits: u32) -> f64 {
    (1.0 / (1u64 << qubits) as f64).sqrt()
}

/// Training-set size used when none is given: 6, 8, 10, 15 and 20
/// functions for 3 to 7 qubits.
pub fn default_dataset_size(n: u32) -> usize {
    match n {
        0..=2 => 2 * n.max(1) as usize,
        3 => 6,
        4 => 8,
        5 => 10,
        6 => 15,
        _ => 20,
    }
}

/// Periods for a training set: successive random permutations of
/// `2..=max_period`, so every admissible period appears once before any
/// repeats. With `max_period < 2` only the constant function is possible.
pub fn dataset_periods(size: usize, max_period: usize, seed: u64) -> Vec<usize> {
    let lo = if max_period >= 2 { 2 } else { 1 };
    let pool: Vec<usize> = (lo..=max_period.max(1)).collect();
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let mut block = pool.clone();
        block.shuffle(&mut rng);
        out.extend(block.into_iter().take(size - out.len()));
    }
    out
}

/// Random periodic functions for training, periods per [`dataset_periods`].
pub fn generate_functions(n: u32, m: u32, size: usize, max_period: usize, seed: u64) -> Result<Vec<PeriodicFunction>> {
    let periods = dataset_periods(size, max_period, seed);
    let mut rng = seeded_rng(seed ^ 0x5eed_f00d_u64);
    periods
        .into_iter()
        .map(|r| generate_periodic_function(n, m, r, rng.gen()))
        .collect()
}

/// Training functions with their targets.
#[derive(Clone, Debug)]
pub struct TrainingDataset {
    n: u32,
    m: u32,
    ancilla: u32,
    functions: Vec<PeriodicFunction>,
    samples: Vec<TrainingSample>,
}

impl TrainingDataset {
    pub fn new(functions: Vec<PeriodicFunction>, loss_cfg: &LossConfig, ancilla: u32) -> Result<Self> {
        let first = functions
            .first()
            .ok_or_else(|| Error::InvalidArgument("training set is empty".into()))?;
        let (n, m) = (first.n(), first.m());
        if let Some(f) = functions.iter().find(|f| f.n() != n || f.m() != m) {
            return Err(Error::InvalidArgument(format!(
                "mixed register sizes in training set: ({n}, {m}) and ({}, {})",
                f.n(),
                f.m()
            )));
        }
        loss_cfg.validate()?;
        let samples = functions
            .iter()
            .map(|f| {
                let target = target_distribution(loss_cfg.target, f, loss_cfg.gaussian_sigma)?;
                TrainingSample::new(f, target, ancilla)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainingDataset {
            n,
            m,
            ancilla,
            functions,
            samples,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn ancilla(&self) -> u32 {
        self.ancilla
    }

    pub fn qubits(&self) -> u32 {
        self.n + self.ancilla
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[PeriodicFunction] {
        &self.functions
    }

    pub fn samples(&self) -> &[TrainingSample] {
        &self.samples
    }

    pub fn targets(&self) -> impl Iterator<Item = &Distribution> {
        self.samples.iter().map(|s| s.target())
    }

    /// Mean loss of a fixed matrix over the set.
    pub fn mean_loss(&self, m3: &ComplexMatrix, k: f64) -> Result<f64> {
        let mut total = 0.0;
        for s in &self.samples {
            total += s.evaluate(m3, k, None)?.total();
        }
        Ok(total / self.samples.len() as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub loss: LossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5000,
            seed: 0,
            adam: AdamConfig::default(),
            loss: LossConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub matrix: ComplexMatrix,
    /// Mean per-sample loss of each epoch, measured before each update.
    pub loss_history: Vec<f64>,
    pub state: TrainState,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        self.loss_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Trains from a random start drawn with `cfg.seed`.
pub fn train(dataset: &TrainingDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let state = initialize_parameters(dataset.qubits(), cfg.seed);
    train_from(dataset, cfg, state, |_, _| {})
}

/// Trains from `state`, reporting `(epoch, mean loss)` after every epoch.
pub fn train_from(
    dataset: &TrainingDataset,
    cfg: &TrainConfig,
    mut state: TrainState,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    if cfg.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    cfg.adam.validate()?;
    cfg.loss.validate()?;
    let dim = 1usize << dataset.qubits();
    if state.w.len() != 2 * dim * dim {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} parameters, the {}-qubit stage needs {}",
            state.w.len(),
            dataset.qubits(),
            2 * dim * dim
        )));
    }
    let mut grad = vec![0.0; state.w.len()];
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut total = 0.0;
        for (i, sample) in dataset.samples.iter().enumerate() {
            let m3 = ComplexMatrix::from_interleaved(dim, &state.w).map_err(|_| Error::Diverged {
                epoch,
                sample: i,
                loss: f64::NAN,
            })?;
            let value = sample.evaluate(&m3, cfg.loss.k, Some(&mut grad))?.total();
            if !value.is_finite() || value > DIVERGENCE_LIMIT {
                return Err(Error::Diverged {
                    epoch,
                    sample: i,
                    loss: value,
                });
            }
            total += value;
            state.adam_step(&grad, &cfg.adam);
        }
        let mean = total / dataset.len() as f64;
        history.push(mean);
        on_epoch(epoch, mean);
    }
    Ok(TrainOutcome {
        matrix: state.matrix()?,
        loss_history: history,
        state,
    })
}
