//! Comparing a learned post-processing matrix with a reference: Loschmidt
//! echoes, outcome-distribution distances and eigenphase histograms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::Distribution;
use crate::error::{Error, Result};
use crate::linalg::{eigenphases, ComplexMatrix, StateVector};

pub const PHASE_BINS: usize = 20;

/// `|⟨ψ|U1†U2|ψ⟩|²`.
pub fn loschmidt_echo(u1: &ComplexMatrix, u2: &ComplexMatrix, psi: &StateVector) -> Result<f64> {
    if u1.rows() != u2.rows() || u1.cols() != u2.cols() {
        return Err(Error::DimensionMismatch(format!(
            "echo between {}x{} and {}x{} matrices",
            u1.rows(),
            u1.cols(),
            u2.rows(),
            u2.cols()
        )));
    }
    let a = u1.apply(psi)?;
    let b = u2.apply(psi)?;
    Ok(a.inner(&b)?.norm_sqr())
}

/// `Σ(p_i − q_i)² / len(p)`.
pub fn distribution_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.distance(q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchoReport {
    #[serde(rename = "subject_path")]
    pub subject: String,
    pub reference: String,
    pub echo_zero: f64,
    pub echo_uniform: f64,
}

impl EchoReport {
    pub fn labelled(mut self, subject: impl Into<String>, reference: impl Into<String>) -> Self {
        self.subject = subject.into();
        self.reference = reference.into();
        self
    }
}

/// Echoes of `subject` against `reference` on `|0…0⟩` and on the uniform
/// superposition over `n` qubits.
pub fn echo_report(subject: &ComplexMatrix, reference: &ComplexMatrix, n: u32) -> Result<EchoReport> {
    let dim = 1usize << n;
    if subject.rows() != dim || reference.rows() != dim {
        return Err(Error::DimensionMismatch(format!(
            "echo report on {n} qubits needs {dim}x{dim} matrices, got {} and {} rows",
            subject.rows(),
            reference.rows()
        )));
    }
    Ok(EchoReport {
        subject: String::new(),
        reference: String::new(),
        echo_zero: loschmidt_echo(reference, subject, &StateVector::basis(dim, 0))?,
        echo_uniform: loschmidt_echo(reference, subject, &StateVector::uniform(dim))?,
    })
}

/// Equal-width histogram. `bin_edges` has one more entry than `counts`;
/// bins are half-open except the last, which also takes its upper edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
}

impl Histogram {
    pub fn empty(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi > lo, "histogram needs bins > 0 and hi > lo");
        let width = (hi - lo) / bins as f64;
        let mut bin_edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
        bin_edges[bins] = hi;
        Histogram {
            bin_edges,
            counts: vec![0; bins],
        }
    }

    /// The 20-bin layout over `[−π, π]`.
    pub fn phases() -> Self {
        Self::empty(-PI, PI, PHASE_BINS)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn lo(&self) -> f64 {
        self.bin_edges[0]
    }

    pub fn hi(&self) -> f64 {
        self.bin_edges[self.bins()]
    }

    /// Bin holding `x`, or `None` when it lies outside `[lo, hi]`.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(self.lo()..=self.hi()).contains(&x) {
            return None;
        }
        let scaled = (x - self.lo()) / (self.hi() - self.lo()) * self.bins() as f64;
        Some((scaled.floor() as usize).min(self.bins() - 1))
    }

    pub fn add(&mut self, x: f64) -> Result<()> {
        let bin = self.bin_of(x).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{x} lies outside the histogram range [{}, {}]",
                self.lo(),
                self.hi()
            ))
        })?;
        self.counts[bin] += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.bin_edges != other.bin_edges {
            return Err(Error::DimensionMismatch("histograms have different bins".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> Vec<HistogramRow> {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, &count)| HistogramRow {
                bin_lo: self.bin_edges[k],
                bin_hi: self.bin_edges[k + 1],
                count,
            })
            .collect()
    }

    /// Largest deviation of any count from the uniform expectation, in
    /// binomial standard deviations.
    pub fn max_uniform_deviation(&self) -> f64 {
        let total = self.total() as f64;
        let p = 1.0 / self.bins() as f64;
        let expected = total * p;
        let sigma = (total * p * (1.0 - p)).sqrt();
        if sigma == 0.0 {
            return 0.0;
        }
        self.counts
            .iter()
            .map(|&c| (c as f64 - expected).abs() / sigma)
            .fold(0.0, f64::max)
    }
}

/// Eigenphases of a near-unitary matrix binned into 20 bins over `[−π, π]`.
pub fn eigenphase_histogram(u: &ComplexMatrix) -> Result<Histogram> {
    let mut hist = Histogram::phases();
    for theta in eigenphases(u)? {
        hist.add(theta)?;
    }
    Ok(hist)
}

/// Histogram of distribution distances over `[0, max]` (the largest value
/// when `max` is `None`).
pub fn distance_histogram(distances: &[f64], bins: usize, max: Option<f64>) -> Result<Histogram> {
    if let Some(bad) = distances.iter().find(|d| !d.is_finite() || **d < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance {bad} is not a nonnegative number"
        )));
    }
    let top = max.unwrap_or_else(|| distances.iter().copied().fold(0.0, f64::max));
    let mut hist = Histogram::empty(0.0, if top > 0.0 { top } else { 1.0 }, bins.max(1));
    for &d in distances {
        hist.add(d)?;
    }
    Ok(hist)
}
