//! Classical post-processing: recovering `r` from the `X` outcome distribution.
//!
//! Each outcome `q` above the peak threshold is expanded as a continued
//! fraction of `q / 2^n`; the convergent denominators, the least common
//! multiple of the exact (fully reduced) denominators and the pairwise
//! least common multiples form the candidate set. Because `r` may be as
//! large as `2^{n-1}`, a single outcome does not pin down the period, so
//! each candidate `d` is scored against the ideal period-`d` distribution
//! and the closest one wins, ties going to the smaller denominator.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use super::Distribution;
use crate::error::{Error, Result};

/// Convergents `h/k` of `num/den`, in order of increasing denominator.
pub fn continued_fraction_convergents(num: u64, den: u64) -> Vec<(u64, u64)> {
    assert!(den > 0, "denominator must be positive");
    let (mut a, mut b) = (num, den);
    let (mut h_prev, mut h) = (0u64, 1u64);
    let (mut k_prev, mut k) = (1u64, 0u64);
    let mut out = Vec::new();
    while b != 0 {
        let t = a / b;
        (a, b) = (b, a - t * b);
        (h_prev, h) = (h, t * h + h_prev);
        (k_prev, k) = (k, t * k + k_prev);
        out.push((h, k));
    }
    out
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Exact outcome distribution of the textbook circuit for any function of
/// period `r` on `n` qubits, from closed-form geometric sums.
pub fn period_signature(n: u32, r: usize) -> Distribution {
    let dim = 1usize << n;
    let r = r.clamp(1, dim);
    let long = dim.div_ceil(r);
    let n_long = dim - (long - 1) * r;
    let n_short = r - n_long;
    let short = long - 1;
    let norm = 1.0 / (dim as f64 * dim as f64);
    let probs = (0..dim)
        .map(|q| {
            let turns = (q * r) % dim;
            let kernel = |len: usize| {
                if turns == 0 {
                    (len * len) as f64
                } else {
                    let half = PI * turns as f64 / dim as f64;
                    let s = (len as f64 * half).sin() / half.sin();
                    s * s
                }
            };
            norm * (n_long as f64 * kernel(long) + n_short as f64 * kernel(short))
        })
        .collect();
    Distribution::unnormalized(probs)
}

/// Estimates the period from an outcome distribution over `n` qubits.
pub fn estimate_period(p: &Distribution, n: u32) -> Result<usize> {
    let dim = 1usize << n;
    if p.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "distribution of length {} for a {n}-qubit register",
            p.len()
        )));
    }
    let threshold = 1.0 / (2.0 * dim as f64);
    let peaks: Vec<u64> = p
        .probabilities()
        .iter()
        .enumerate()
        .filter(|(_, &prob)| prob > threshold)
        .map(|(q, _)| q as u64)
        .collect();
    if peaks.is_empty() {
        return Err(Error::Estimation(format!(
            "no outcome has probability above {threshold:.3e}"
        )));
    }

    let cap = dim as u64;
    let mut candidates = BTreeSet::new();
    let mut exact_lcm = 1u64;
    for &q in &peaks {
        let convergents = continued_fraction_convergents(q, cap);
        candidates.extend(convergents.iter().map(|&(_, k)| k).filter(|&k| k <= cap));
        let exact = convergents.last().map_or(1, |&(_, k)| k);
        exact_lcm = lcm(exact_lcm, exact).min(cap + 1);
    }
    if exact_lcm <= cap {
        candidates.insert(exact_lcm);
    }
    let base: Vec<u64> = candidates.iter().copied().collect();
    for (i, &a) in base.iter().enumerate() {
        for &b in &base[i + 1..] {
            let l = lcm(a, b);
            if l <= cap {
                candidates.insert(l);
            }
        }
    }

    let mut best: Option<(f64, u64)> = None;
    for d in candidates {
        if d == 0 {
            continue;
        }
        let distance = p.distance(&period_signature(n, d as usize))?;
        match best {
            Some((b, _)) if distance >= b - 1e-15 => {}
            _ => best = Some((distance, d)),
        }
    }
    best.map(|(_, d)| d as usize)
        .ok_or_else(|| Error::Estimation("no candidate period".into()))
}
