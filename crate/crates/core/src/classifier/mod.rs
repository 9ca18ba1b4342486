//! Telling learned post-processing matrices from Haar-random ones with a
//! small fully connected network.

mod corpus;
mod mlp;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{seeded_rng, ComplexMatrix};
use crate::optim::{adam_update, AdamConfig};

pub use corpus::{
    build_corpus, max_test_loss, split_corpus, split_sizes, train_learned, CorpusConfig, Example, LabeledUnitary,
    LabeledUnitaryCorpus, LearnedRun, Source, Split, LEARNED, RANDOM,
};
pub use mlp::{bce_derivative, bce_loss, Mlp, MlpConfig, P_MIN};

/// `2^{2n+1}` reals: row-major entries, real part then imaginary part.
pub fn flatten_unitary(u: &ComplexMatrix) -> Vec<f64> {
    u.to_interleaved()
}

/// Inverse of [`flatten_unitary`].
pub fn unflatten_unitary(features: &[f64]) -> Result<ComplexMatrix> {
    let dim = ((features.len() / 2) as f64).sqrt().round() as usize;
    if 2 * dim * dim != features.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} features do not form a square complex matrix",
            features.len()
        )));
    }
    ComplexMatrix::from_interleaved(dim, features)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierTrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a new best validation loss before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        ClassifierTrainConfig {
            adam: AdamConfig::default(),
            batch_size: 32,
            max_epochs: 50,
            patience: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub mean_loss: f64,
    pub scores: Vec<f64>,
}

/// A score above 0.5 means "learned"; exactly 0.5 counts as random.
pub fn predicted_label(score: f64) -> u8 {
    u8::from(score > 0.5)
}

pub fn evaluate(net: &Mlp, examples: &[Example]) -> Result<Evaluation> {
    let mut scores = Vec::with_capacity(examples.len());
    let mut correct = 0usize;
    let mut loss = 0.0;
    for e in examples {
        let s = net.forward(&e.features)?;
        correct += usize::from(predicted_label(s) == e.label);
        loss += bce_loss(s, e.label);
        scores.push(s);
    }
    let n = examples.len().max(1) as f64;
    Ok(Evaluation {
        accuracy: correct as f64 / n,
        mean_loss: loss / n,
        scores,
    })
}

/// Mini-batch ADAM on mean BCE. After every epoch the train and validation
/// sets are scored; training stops once the validation loss has not
/// improved for `patience` epochs and the best-validation parameters are
/// returned.
pub fn train_classifier(
    mut net: Mlp,
    train: &[Example],
    validation: &[Example],
    cfg: &ClassifierTrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<(Mlp, Vec<EpochMetrics>)> {
    if train.is_empty() {
        return Err(Error::Corpus("training split is empty".into()));
    }
    if cfg.batch_size == 0 || cfg.max_epochs == 0 {
        return Err(Error::InvalidArgument("batch size and epochs must be positive".into()));
    }
    cfg.adam.validate()?;
    let len = net.params().len();
    let (mut m, mut v, mut t) = (vec![0.0; len], vec![0.0; len], 0u64);
    let mut grad = vec![0.0; len];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = seeded_rng(cfg.seed);
    let mut history = Vec::new();
    let mut best: Option<(f64, Mlp)> = None;
    let mut stale = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.fill(0.0);
            for &i in batch {
                let l = net.accumulate_gradient(&train[i].features, train[i].label, &mut grad)?;
                if !l.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        sample: i,
                        loss: l,
                    });
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam_update(net.params_mut(), &mut m, &mut v, &mut t, &grad, &cfg.adam);
        }
        if net.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                sample: 0,
                loss: f64::NAN,
            });
        }
        let tr = evaluate(&net, train)?;
        let va = if validation.is_empty() {
            tr.clone()
        } else {
            evaluate(&net, validation)?
        };
        let metrics = EpochMetrics {
            epoch,
            train_loss: tr.mean_loss,
            train_accuracy: tr.accuracy,
            validation_loss: va.mean_loss,
            validation_accuracy: va.accuracy,
        };
        on_epoch(&metrics);
        history.push(metrics);
        match &best {
            Some((b, _)) if va.mean_loss >= *b => {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
            _ => {
                best = Some((va.mean_loss, net.clone()));
                stale = 0;
            }
        }
    }
    let net = best.map(|(_, n)| n).unwrap_or(net);
    Ok((net, history))
}
