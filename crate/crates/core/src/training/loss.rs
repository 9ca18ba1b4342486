//! Training objective and its closed-form gradient.
//!
//! ```text
//! loss = (1/2^n) Σ_i [P_a(i) − P_d(i)]²  +  (k/D²) Σ_ij |M†M − I|²_ij
//! ```
//!
//! `P_a` is the register-`X` distribution produced by the candidate `M`
//! (of size `D = 2^{n+ancilla}`), `P_d` the target. Gradients are taken with
//! respect to the interleaved `(re, im)` parameters of `M` in row-major order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{reference_distribution, Distribution, PeriodicFunction};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    /// The distribution of the textbook circuit.
    QftReference,
    /// All probability on outcome `r`.
    SinglePeak,
    /// Uniform on `r..2^n`.
    Step,
    /// Discretised normal centred on `r`, truncated to the register.
    Gaussian,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetKind::QftReference => "qft-reference",
            TargetKind::SinglePeak => "single-peak",
            TargetKind::Step => "step",
            TargetKind::Gaussian => "gaussian",
        })
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qft" | "qft-reference" => Ok(TargetKind::QftReference),
            "single-peak" => Ok(TargetKind::SinglePeak),
            "step" => Ok(TargetKind::Step),
            "gaussian" => Ok(TargetKind::Gaussian),
            other => Err(Error::InvalidArgument(format!(
                "unknown target kind '{other}' (expected qft, single-peak, step or gaussian)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Weight of the unitarity penalty.
    pub k: f64,
    pub target: TargetKind,
    /// Width of the Gaussian target, in outcome units.
    pub gaussian_sigma: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            k: 1.0,
            target: TargetKind::QftReference,
            gaussian_sigma: 1.0,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "penalty weight k = {} must be positive",
                self.k
            )));
        }
        if self.target == TargetKind::Gaussian && (self.gaussian_sigma.is_nan() || self.gaussian_sigma <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gaussian sigma = {} must be positive",
                self.gaussian_sigma
            )));
        }
        Ok(())
    }
}

/// The distribution a candidate is trained to reproduce for `f`.
pub fn target_distribution(kind: TargetKind, f: &PeriodicFunction, sigma: f64) -> Result<Distribution> {
    let dim = f.domain_size();
    let r = f.period();
    match kind {
        TargetKind::QftReference => Ok(reference_distribution(f)),
        TargetKind::SinglePeak => {
            if r >= dim {
                return Err(Error::InvalidArgument(format!(
                    "single-peak target at {r} lies outside a register of {dim} outcomes"
                )));
            }
            Ok(Distribution::point_mass(dim, r))
        }
        TargetKind::Step => {
            if r >= dim {
                return Err(Error::InvalidArgument(format!(
                    "step target starting at {r} is empty for {dim} outcomes"
                )));
            }
            let height = 1.0 / (dim - r) as f64;
            Distribution::new((0..dim).map(|i| if i >= r { height } else { 0.0 }).collect())
        }
        TargetKind::Gaussian => {
            if sigma.is_nan() || sigma <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "gaussian sigma = {sigma} must be positive"
                )));
            }
            let weights: Vec<f64> = (0..dim)
                .map(|i| {
                    let z = (i as f64 - r as f64) / sigma;
                    (-0.5 * z * z).exp()
                })
                .collect();
            let total: f64 = weights.iter().sum();
            Distribution::new(weights.into_iter().map(|w| w / total).collect())
        }
    }
}

/// The oracle output for one function, reduced to what the loss needs: for
/// each occupied `F` value, the rows of the post-processing input that carry
/// amplitude `2^{-n/2}`.
#[derive(Clone, Debug)]
pub struct TrainingSample {
    n: u32,
    ancilla: u32,
    columns: Vec<Vec<usize>>,
    target: Distribution,
}

impl TrainingSample {
    pub fn new(f: &PeriodicFunction, target: Distribution, ancilla: u32) -> Result<Self> {
        if target.len() != f.domain_size() {
            return Err(Error::DimensionMismatch(format!(
                "target of length {} for a function on {} points",
                target.len(),
                f.domain_size()
            )));
        }
        // classes of x sharing one value of f, in order of first occurrence
        let r = f.period();
        let columns = (0..r)
            .map(|c| (c..f.domain_size()).step_by(r).map(|x| x << ancilla).collect())
            .collect();
        Ok(TrainingSample {
            n: f.n(),
            ancilla,
            columns,
            target,
        })
    }

    pub fn target(&self) -> &Distribution {
        &self.target
    }

    pub fn matrix_dim(&self) -> usize {
        1 << (self.n + self.ancilla)
    }

    /// Loss split into its distribution and penalty parts. When `grad` is
    /// given, the gradient of the total is written into it.
    pub fn evaluate(&self, m3: &ComplexMatrix, k: f64, grad: Option<&mut [f64]>) -> Result<LossTerms> {
        let d = self.matrix_dim();
        if m3.rows() != d || m3.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} candidate for a {}-qubit post-processing stage",
                m3.rows(),
                m3.cols(),
                self.n + self.ancilla
            )));
        }
        let mut grad = grad;
        if let Some(g) = grad.as_deref_mut() {
            if g.len() != 2 * d * d {
                return Err(Error::DimensionMismatch(format!(
                    "gradient buffer of {} for {} parameters",
                    g.len(),
                    2 * d * d
                )));
            }
            g.fill(0.0);
        }
        let distribution = self.distribution_term(m3, grad.as_deref_mut());
        let penalty = penalty_term(m3, k, grad);
        Ok(LossTerms { distribution, penalty })
    }

    fn distribution_term(&self, m3: &ComplexMatrix, grad: Option<&mut [f64]>) -> f64 {
        let d = self.matrix_dim();
        let nx = 1usize << self.n;
        let amp = 1.0 / (nx as f64).sqrt();
        let nc = self.columns.len();
        let mut projected = vec![C64::new(0.0, 0.0); d * nc];
        let mut p_actual = vec![0.0; nx];
        for p in 0..d {
            let row = m3.row(p);
            let mut weight = 0.0;
            for (c, rows) in self.columns.iter().enumerate() {
                let s: C64 = rows.iter().map(|&q| row[q]).sum::<C64>() * amp;
                weight += s.norm_sqr();
                projected[p * nc + c] = s;
            }
            p_actual[p >> self.ancilla] += weight;
        }
        let diff: Vec<f64> = p_actual
            .iter()
            .zip(self.target.probabilities())
            .map(|(a, t)| a - t)
            .collect();
        let value = diff.iter().map(|x| x * x).sum::<f64>() / nx as f64;

        if let Some(g) = grad {
            for p in 0..d {
                let coef = 2.0 * diff[p >> self.ancilla] / nx as f64 * 2.0 * amp;
                if coef == 0.0 {
                    continue;
                }
                for (c, rows) in self.columns.iter().enumerate() {
                    let s = projected[p * nc + c] * coef;
                    for &q in rows {
                        let idx = 2 * (p * d + q);
                        g[idx] += s.re;
                        g[idx + 1] += s.im;
                    }
                }
            }
        }
        value
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossTerms {
    pub distribution: f64,
    pub penalty: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.distribution + self.penalty
    }
}

/// `(k/D²) Σ |M†M − I|²`, accumulating its gradient `(4k/D²) M (M†M − I)`.
pub fn penalty_term(m3: &ComplexMatrix, k: f64, grad: Option<&mut [f64]>) -> f64 {
    let d = m3.rows();
    let scale = k / (d * d) as f64;
    let mut excess = m3.gram();
    for i in 0..d {
        excess[(i, i)] -= 1.0;
    }
    let value = scale * excess.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>();
    if let Some(g) = grad {
        let me = m3.matmul(&excess).expect("square matrices of equal size");
        for (i, z) in me.as_slice().iter().enumerate() {
            g[2 * i] += 4.0 * scale * z.re;
            g[2 * i + 1] += 4.0 * scale * z.im;
        }
    }
    value
}

/// Loss of `m3` against target `p_d` for function `f`. A matrix wider than
/// register `X` is treated as acting on ancillas appended in `|0⟩`.
pub fn loss(m3: &ComplexMatrix, f: &PeriodicFunction, p_d: &Distribution, k: f64) -> Result<f64> {
    let sample = TrainingSample::new(f, p_d.clone(), ancilla_for(m3, f)?)?;
    Ok(sample.evaluate(m3, k, None)?.total())
}

/// Gradient of [`loss`] with respect to the interleaved parameters of `m3`.
pub fn loss_gradient(m3: &ComplexMatrix, f: &PeriodicFunction, p_d: &Distribution, k: f64) -> Result<Vec<f64>> {
    let sample = TrainingSample::new(f, p_d.clone(), ancilla_for(m3, f)?)?;
    let mut grad = vec![0.0; 2 * m3.rows() * m3.cols()];
    sample.evaluate(m3, k, Some(&mut grad))?;
    Ok(grad)
}

fn ancilla_for(m3: &ComplexMatrix, f: &PeriodicFunction) -> Result<u32> {
    match m3.qubits() {
        Some(q) if q >= f.n() => Ok(q - f.n()),
        _ => Err(Error::DimensionMismatch(format!(
            "{}x{} candidate cannot post-process a {}-qubit register",
            m3.rows(),
            m3.cols(),
            f.n()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_periodic_function, inverse_qft_matrix, output_distribution};
    use crate::linalg::{haar_random_unitary, seeded_rng};
    use rand::Rng;

    fn random_matrix(dim: usize, seed: u64) -> ComplexMatrix {
        let mut rng = seeded_rng(seed);
        ComplexMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6))
        })
    }

    /// Central differences of the loss in every real parameter.
    fn finite_difference(m3: &ComplexMatrix, f: &PeriodicFunction, p_d: &Distribution, k: f64) -> Vec<f64> {
        let h = 1e-5;
        let base = m3.to_interleaved();
        let d = m3.rows();
        (0..base.len())
            .map(|i| {
                let mut plus = base.clone();
                plus[i] += h;
                let mut minus = base.clone();
                minus[i] -= h;
                let lp = loss(&ComplexMatrix::from_interleaved(d, &plus).unwrap(), f, p_d, k).unwrap();
                let lm = loss(&ComplexMatrix::from_interleaved(d, &minus).unwrap(), f, p_d, k).unwrap();
                (lp - lm) / (2.0 * h)
            })
            .collect()
    }

    fn relative_error(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        diff / norm.max(1e-300)
    }

    #[test]
    fn target_kinds() {
        let f = generate_periodic_function(5, 5, 5, 1).unwrap();
        let peak = target_distribution(TargetKind::SinglePeak, &f, 1.0).unwrap();
        assert_eq!(peak, Distribution::point_mass(32, 5));

        let f8 = generate_periodic_function(5, 5, 8, 1).unwrap();
        let step = target_distribution(TargetKind::Step, &f8, 1.0).unwrap();
        for (i, p) in step.probabilities().iter().enumerate() {
            let expected = if i >= 8 { 1.0 / 24.0 } else { 0.0 };
            assert!((p - expected).abs() < 1e-15);
        }
        let qft = target_distribution(TargetKind::QftReference, &f8, 1.0).unwrap();
        assert!((qft.probabilities()[4] - 0.125).abs() < 1e-10);

        let g = target_distribution(TargetKind::Gaussian, &f8, 2.0).unwrap();
        assert!((g.total() - 1.0).abs() < 1e-12);
        let argmax = g
            .probabilities()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, 8);
        assert!("bogus".parse::<TargetKind>().is_err());
        assert_eq!("qft".parse::<TargetKind>().unwrap(), TargetKind::QftReference);
    }

    #[test]
    fn qft_is_a_global_minimum() {
        for r in [1, 3, 8, 13] {
            let f = generate_periodic_function(5, 5, r, r as u64).unwrap();
            let p_d = reference_distribution(&f);
            let q = inverse_qft_matrix(5);
            assert!(loss(&q, &f, &p_d, 1.0).unwrap() < 1e-20);
            let g = loss_gradient(&q, &f, &p_d, 1.0).unwrap();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm < 1e-8, "gradient norm {norm}");
        }
    }

    #[test]
    fn zero_matrix_costs_distribution_plus_k_over_dim() {
        let f = generate_periodic_function(3, 3, 2, 0).unwrap();
        let p_d = reference_distribution(&f);
        let k = 0.7;
        let expected = p_d.probabilities().iter().map(|p| p * p).sum::<f64>() / 8.0 + k / 8.0;
        let got = loss(&ComplexMatrix::zeros(8, 8), &f, &p_d, k).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn identity_matrix_leaves_uniform_distribution() {
        let f = generate_periodic_function(5, 5, 8, 0).unwrap();
        let p_d = reference_distribution(&f);
        let expected: f64 = p_d
            .probabilities()
            .iter()
            .map(|p| (1.0 / 32.0 - p) * (1.0 / 32.0 - p))
            .sum::<f64>()
            / 32.0;
        let got = loss(&ComplexMatrix::identity(32), &f, &p_d, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn distribution_term_matches_circuit_pipeline() {
        for (n, r, a, seed) in [(3, 3, 0, 1), (3, 2, 1, 2), (2, 3, 2, 3)] {
            let f = generate_periodic_function(n, n, r, seed).unwrap();
            let m3 = random_matrix(1 << (n + a), seed + 10);
            let p_d = reference_distribution(&f);
            let sample = TrainingSample::new(&f, p_d.clone(), a).unwrap();
            let terms = sample.evaluate(&m3, 1.0, None).unwrap();
            let p_a = output_distribution(&m3, &f).unwrap();
            let direct = p_a.distance(&p_d).unwrap();
            assert!((terms.distribution - direct).abs() < 1e-14);
            let defect = m3.unitarity_defect().unwrap();
            assert!((terms.penalty - defect).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        for (n, r, seed) in [(2, 2, 1), (2, 3, 2), (3, 3, 3), (3, 4, 4)] {
            let f = generate_periodic_function(n, n, r, seed).unwrap();
            let p_d = reference_distribution(&f);
            let m3 = random_matrix(1 << n, seed);
            let g = loss_gradient(&m3, &f, &p_d, 1.3).unwrap();
            let fd = finite_difference(&m3, &f, &p_d, 1.3);
            assert!(relative_error(&g, &fd) < 1e-5, "n={n} r={r}");
        }
    }

    #[test]
    fn gradient_with_ancilla_matches_central_differences() {
        let f = generate_periodic_function(2, 2, 3, 8).unwrap();
        let p_d = target_distribution(TargetKind::SinglePeak, &f, 1.0).unwrap();
        let m3 = random_matrix(8, 9);
        let g = loss_gradient(&m3, &f, &p_d, 1.0).unwrap();
        let fd = finite_difference(&m3, &f, &p_d, 1.0);
        assert!(relative_error(&g, &fd) < 1e-5);
    }

    #[test]
    fn penalty_gradient_at_twice_identity() {
        let m3 = ComplexMatrix::identity(4).scale(C64::new(2.0, 0.0));
        let k = 1.0;
        let mut g = vec![0.0; 32];
        penalty_term(&m3, k, Some(&mut g));
        let base = m3.to_interleaved();
        let h = 1e-5;
        let fd: Vec<f64> = (0..base.len())
            .map(|i| {
                let mut p = base.clone();
                p[i] += h;
                let mut q = base.clone();
                q[i] -= h;
                let lp = k * ComplexMatrix::from_interleaved(4, &p)
                    .unwrap()
                    .unitarity_defect()
                    .unwrap();
                let lq = k * ComplexMatrix::from_interleaved(4, &q)
                    .unwrap()
                    .unitarity_defect()
                    .unwrap();
                (lp - lq) / (2.0 * h)
            })
            .collect();
        assert!(relative_error(&g, &fd) < 1e-5);
        // diagonal real entries: 4k/16 · 2 · (4 − 1) = 1.5
        assert!((g[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn haar_candidate_is_not_a_minimum() {
        let f = generate_periodic_function(3, 3, 2, 0).unwrap();
        let p_d = reference_distribution(&f);
        let u = haar_random_unitary(3, 4);
        assert!(loss(&u, &f, &p_d, 1.0).unwrap() > 1e-4);
    }
}
