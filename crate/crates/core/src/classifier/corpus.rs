use std::path::PathBuf;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::generate_periodic_function;
use crate::error::{Error, Result};
use crate::linalg::{derive_seed, haar_random_unitary, seeded_rng, ComplexMatrix};
use crate::training::{generate_functions, loss, target_distribution, train, TrainConfig, TrainingDataset};

use super::flatten_unitary;

pub const LEARNED: u8 = 1;
pub const RANDOM: u8 = 0;

/// Where a corpus matrix came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Haar,
    /// A training run; the manifest path is known once the run is persisted.
    Trained {
        manifest: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledUnitary {
    pub matrix: ComplexMatrix,
    pub label: u8,
    pub seed: u64,
    pub source: Source,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledUnitaryCorpus {
    pub entries: Vec<LabeledUnitary>,
}

/// One classifier input.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: u8,
}

impl LabeledUnitaryCorpus {
    pub fn new(entries: Vec<LabeledUnitary>) -> Result<Self> {
        let corpus = LabeledUnitaryCorpus { entries };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.entries.first() else {
            return Ok(());
        };
        let dim = first.matrix.rows();
        for (i, e) in self.entries.iter().enumerate() {
            if e.label > 1 {
                return Err(Error::Corpus(format!("entry {i} has label {}", e.label)));
            }
            if !e.matrix.is_square() || e.matrix.rows() != dim {
                return Err(Error::Corpus(format!(
                    "entry {i} is {}x{}, expected {dim}x{dim}",
                    e.matrix.rows(),
                    e.matrix.cols()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(random, learned)` counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let learned = self.entries.iter().filter(|e| e.label == LEARNED).count();
        (self.entries.len() - learned, learned)
    }

    pub fn is_balanced(&self) -> bool {
        let (a, b) = self.class_counts();
        a.abs_diff(b) <= 1
    }

    pub fn labels(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn examples(&self, indices: &[usize]) -> Vec<Example> {
        indices
            .iter()
            .map(|&i| Example {
                features: flatten_unitary(&self.entries[i].matrix),
                label: self.entries[i].label,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n: u32,
    pub per_class: usize,
    pub dataset_size: usize,
    pub train: TrainConfig,
    /// Both the training loss and every test-function loss must end at or
    /// below this, and so must the unitarity defect.
    pub threshold: f64,
    pub max_retries: usize,
    pub seed: u64,
}

impl CorpusConfig {
    pub fn new(n: u32, per_class: usize, seed: u64) -> Self {
        CorpusConfig {
            n,
            per_class,
            dataset_size: crate::training::default_dataset_size(n),
            train: TrainConfig::default(),
            threshold: 1e-6,
            max_retries: 5,
            seed,
        }
    }
}

/// A learned matrix that passed the gate, with the numbers it was judged on.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnedRun {
    pub matrix: ComplexMatrix,
    pub seed: u64,
    pub functions_seed: u64,
    pub final_loss: f64,
    pub defect: f64,
    pub max_test_loss: f64,
    pub loss_history: Vec<f64>,
}

/// Worst loss over one fresh test function for each period `2..=2^{n-1}`.
pub fn max_test_loss(m3: &ComplexMatrix, n: u32, k: f64, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for r in 2..=(1usize << (n - 1)) {
        let f = generate_periodic_function(n, n, r, derive_seed(seed, r as u64))?;
        let target = target_distribution(crate::training::TargetKind::QftReference, &f, 1.0)?;
        worst = worst.max(loss(m3, &f, &target, k)?);
    }
    Ok(worst)
}

/// Trains one learned matrix for corpus slot `index`, retrying with fresh
/// seeds until it passes the gate.
pub fn train_learned(cfg: &CorpusConfig, index: usize) -> Result<LearnedRun> {
    let mut last = String::new();
    for attempt in 0..=cfg.max_retries {
        let seed = derive_seed(cfg.seed, ((index as u64) << 16) | attempt as u64);
        let functions_seed = derive_seed(seed, 1);
        let functions = generate_functions(cfg.n, cfg.n, cfg.dataset_size, 1 << (cfg.n - 1), functions_seed)?;
        let dataset = TrainingDataset::new(functions, &cfg.train.loss, 0)?;
        let train_cfg = TrainConfig { seed, ..cfg.train };
        let outcome = match train(&dataset, &train_cfg) {
            Ok(o) => o,
            Err(Error::Diverged { .. }) => {
                last = format!("seed {seed} diverged");
                continue;
            }
            Err(e) => return Err(e),
        };
        let final_loss = dataset.mean_loss(&outcome.matrix, cfg.train.loss.k)?;
        let defect = outcome.matrix.unitarity_defect()?;
        let test = max_test_loss(&outcome.matrix, cfg.n, cfg.train.loss.k, derive_seed(seed, 2))?;
        if final_loss <= cfg.threshold && defect <= cfg.threshold && test <= cfg.threshold {
            return Ok(LearnedRun {
                matrix: outcome.matrix,
                seed,
                functions_seed,
                final_loss,
                defect,
                max_test_loss: test,
                loss_history: outcome.loss_history,
            });
        }
        last = format!("seed {seed}: loss {final_loss:.3e}, defect {defect:.3e}, test loss {test:.3e}");
    }
    Err(Error::Corpus(format!(
        "slot {index} failed the {:.0e} gate after {} attempts (last: {last})",
        cfg.threshold,
        cfg.max_retries + 1
    )))
}

/// `per_class` learned matrices (independent runs, in parallel) and
/// `per_class` Haar matrices, learned first.
pub fn build_corpus(cfg: &CorpusConfig) -> Result<(LabeledUnitaryCorpus, Vec<LearnedRun>)> {
    if cfg.per_class == 0 {
        return Err(Error::InvalidArgument("per_class must be at least 1".into()));
    }
    let runs = (0..cfg.per_class)
        .into_par_iter()
        .map(|i| train_learned(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let mut entries: Vec<LabeledUnitary> = runs
        .iter()
        .map(|run| LabeledUnitary {
            matrix: run.matrix.clone(),
            label: LEARNED,
            seed: run.seed,
            source: Source::Trained { manifest: None },
        })
        .collect();
    let haar_base = derive_seed(cfg.seed, u64::MAX);
    entries.extend((0..cfg.per_class).map(|i| {
        let seed = derive_seed(haar_base, i as u64);
        LabeledUnitary {
            matrix: haar_random_unitary(cfg.n, seed),
            label: RANDOM,
            seed,
            source: Source::Haar,
        }
    }));
    Ok((LabeledUnitaryCorpus::new(entries)?, runs))
}

/// Indices into a corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Sizes after the 25% test cut and the 10% validation cut of the
/// remainder, both rounded up.
pub fn split_sizes(total: usize) -> (usize, usize, usize) {
    let test = total.div_ceil(4);
    let pool = total - test;
    let validation = pool.div_ceil(10);
    (pool - validation, validation, test)
}

/// Share `total` among classes in proportion to `class_sizes`, largest
/// remainder first, ties to the lower class.
fn apportion(total: usize, class_sizes: &[usize]) -> Vec<usize> {
    let all: usize = class_sizes.iter().sum();
    if all == 0 {
        return vec![0; class_sizes.len()];
    }
    let mut shares: Vec<usize> = class_sizes.iter().map(|&c| total * c / all).collect();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by_key(|&k| (std::cmp::Reverse((total * class_sizes[k]) % all), k));
    let mut left = total - shares.iter().sum::<usize>();
    for k in order {
        if left == 0 {
            break;
        }
        if shares[k] < class_sizes[k] {
            shares[k] += 1;
            left -= 1;
        }
    }
    shares
}

/// Stratified train / validation / test split, deterministic in `seed`.
pub fn split_corpus(labels: &[u8], seed: u64) -> Result<Split> {
    if labels.len() < 10 {
        return Err(Error::Corpus(format!(
            "need at least 10 entries to split, got {}",
            labels.len()
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        classes
            .get_mut(l as usize)
            .ok_or_else(|| Error::Corpus(format!("entry {i} has label {l}")))?
            .push(i);
    }
    for c in &mut classes {
        c.shuffle(&mut rng);
    }
    let (_, n_val, n_test) = split_sizes(labels.len());
    let sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
    let test_shares = apportion(n_test, &sizes);
    let pool: Vec<usize> = sizes.iter().zip(&test_shares).map(|(s, t)| s - t).collect();
    let val_shares = apportion(n_val, &pool);

    let mut split = Split::default();
    for (k, members) in classes.iter().enumerate() {
        let (t, v) = (test_shares[k], val_shares[k]);
        split.test.extend(&members[..t]);
        split.validation.extend(&members[t..t + v]);
        split.train.extend(&members[t + v..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
