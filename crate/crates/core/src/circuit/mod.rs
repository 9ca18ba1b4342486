//! The three-stage period-finding circuit.
//!
//! Register `X` holds `n` qubits and register `F` holds `m`; a joint basis
//! state `|i⟩|j⟩` lives at index `i · 2^m + j`. The oracle is only ever
//! applied to states supported on `|·⟩|0⟩`, so it is simulated as an
//! amplitude relocation rather than as a full permutation matrix.

mod function;
mod period;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, StateVector, C64};

pub use function::{generate_periodic_function, PeriodicFunction};
pub use period::{continued_fraction_convergents, estimate_period, period_signature};

/// Probability vector over the computational basis of register `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Wraps a probability vector; entries must be finite and nonnegative
    /// and sum to one within `1e-10`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "probability {} at index {i} is not a nonnegative number",
                probs[i]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Distribution { probs })
    }

    /// No normalisation check; used for the output of non-unitary candidates.
    pub fn unnormalized(probs: Vec<f64>) -> Self {
        Distribution { probs }
    }

    pub fn point_mass(len: usize, at: usize) -> Self {
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Distribution { probs }
    }

    pub fn uniform(len: usize) -> Self {
        Distribution {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `Σ (p_i − q_i)² / len`.
    pub fn distance(&self, other: &Distribution) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "distributions of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        let sum: f64 = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| (p - q) * (p - q))
            .sum();
        Ok(sum / self.len() as f64)
    }

    /// Sums consecutive blocks of `2^low_bits` outcomes, i.e. traces out the
    /// least significant qubits of the register.
    pub fn trace_low_qubits(&self, low_bits: u32) -> Distribution {
        let block = 1usize << low_bits;
        Distribution {
            probs: self.probs.chunks(block).map(|c| c.iter().sum()).collect(),
        }
    }
}

/// Joint amplitudes of registers `X` and `F`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    x_qubits: u32,
    f_qubits: u32,
    state: StateVector,
}

impl JointState {
    pub fn from_amplitudes(x_qubits: u32, f_qubits: u32, amps: Vec<C64>) -> Result<Self> {
        let dim = 1usize << (x_qubits + f_qubits);
        if amps.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a {}+{} qubit state",
                amps.len(),
                x_qubits,
                f_qubits
            )));
        }
        Ok(JointState {
            x_qubits,
            f_qubits,
            state: StateVector::new(amps),
        })
    }

    pub fn x_qubits(&self) -> u32 {
        self.x_qubits
    }

    pub fn f_qubits(&self) -> u32 {
        self.f_qubits
    }

    pub fn x_dim(&self) -> usize {
        1 << self.x_qubits
    }

    pub fn f_dim(&self) -> usize {
        1 << self.f_qubits
    }

    pub fn amplitude(&self, i: usize, j: usize) -> C64 {
        self.state.amplitudes()[i * self.f_dim() + j]
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn norm_sqr(&self) -> f64 {
        self.state.norm_sqr()
    }

    /// Applies the oracle `|i⟩|0⟩ → |i⟩|f(i)⟩`.
    pub fn apply_oracle(&self, f: &PeriodicFunction) -> Result<JointState> {
        if f.n() != self.x_qubits || f.m() != self.f_qubits {
            return Err(Error::DimensionMismatch(format!(
                "oracle for {}+{} qubits applied to a {}+{} qubit state",
                f.n(),
                f.m(),
                self.x_qubits,
                self.f_qubits
            )));
        }
        let fd = self.f_dim();
        let amps = self.state.amplitudes();
        for i in 0..self.x_dim() {
            for j in 1..fd {
                if amps[i * fd + j] != C64::new(0.0, 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "oracle input has support on |{i}⟩|{j}⟩; only |·⟩|0⟩ is simulated"
                    )));
                }
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        for i in 0..self.x_dim() {
            out[i * fd + f.eval(i) as usize] = amps[i * fd];
        }
        Ok(JointState {
            x_qubits: self.x_qubits,
            f_qubits: self.f_qubits,
            state: StateVector::new(out),
        })
    }

    /// Applies `m3 ⊗ I_F`.
    pub fn apply_post_unitary(&self, m3: &ComplexMatrix) -> Result<JointState> {
        let xd = self.x_dim();
        if m3.rows() != xd || m3.cols() != xd {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} post-processing matrix on a {}-qubit register",
                m3.rows(),
                m3.cols(),
                self.x_qubits
            )));
        }
        let fd = self.f_dim();
        let amps = self.state.amplitudes();
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        let mut column = vec![C64::new(0.0, 0.0); xd];
        for j in 0..fd {
            let mut nonzero = false;
            for (i, c) in column.iter_mut().enumerate() {
                *c = amps[i * fd + j];
                nonzero |= *c != C64::new(0.0, 0.0);
            }
            if !nonzero {
                continue;
            }
            for i in 0..xd {
                out[i * fd + j] = m3.row(i).iter().zip(&column).map(|(a, b)| a * b).sum();
            }
        }
        Ok(JointState {
            x_qubits: self.x_qubits,
            f_qubits: self.f_qubits,
            state: StateVector::new(out),
        })
    }

    /// Appends `ancilla` qubits in `|0⟩` as the low bits of register `X`.
    pub fn with_ancilla(&self, ancilla: u32) -> JointState {
        let fd = self.f_dim();
        let amps = self.state.amplitudes();
        let x_qubits = self.x_qubits + ancilla;
        let mut out = vec![C64::new(0.0, 0.0); (1usize << x_qubits) * fd];
        for i in 0..self.x_dim() {
            for j in 0..fd {
                out[((i << ancilla) * fd) + j] = amps[i * fd + j];
            }
        }
        JointState {
            x_qubits,
            f_qubits: self.f_qubits,
            state: StateVector::new(out),
        }
    }

    /// `P(i) = Σ_j |α_ij|²`.
    pub fn marginal_distribution(&self) -> Distribution {
        let fd = self.f_dim();
        let probs = self
            .state
            .amplitudes()
            .chunks(fd)
            .map(|row| row.iter().map(|a| a.norm_sqr()).sum())
            .collect();
        Distribution { probs }
    }

    /// Distribution of `X` after register `F` has been measured as `j`.
    pub fn conditional_distribution(&self, j: usize) -> Result<Distribution> {
        let fd = self.f_dim();
        if j >= fd {
            return Err(Error::InvalidArgument(format!(
                "F outcome {j} outside a {}-qubit register",
                self.f_qubits
            )));
        }
        let weights: Vec<f64> = (0..self.x_dim())
            .map(|i| self.state.amplitudes()[i * fd + j].norm_sqr())
            .collect();
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            return Err(Error::InvalidArgument(format!("F outcome {j} has probability zero")));
        }
        Ok(Distribution {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }
}

/// `|ψ¹⟩ = 2^{-n/2} Σ_i |i⟩|0⟩`.
pub fn prepare_superposition(n: u32, m: u32) -> JointState {
    assert!(n >= 1 && m >= 1, "both registers need at least one qubit");
    let fd = 1usize << m;
    let xd = 1usize << n;
    let a = C64::new(1.0 / (xd as f64).sqrt(), 0.0);
    let mut amps = vec![C64::new(0.0, 0.0); xd * fd];
    for i in 0..xd {
        amps[i * fd] = a;
    }
    JointState {
        x_qubits: n,
        f_qubits: m,
        state: StateVector::new(amps),
    }
}

/// Inverse QFT on `n` qubits: entry `(j, k)` is `exp(−2πi jk / 2^n) / 2^{n/2}`.
pub fn inverse_qft_matrix(n: u32) -> ComplexMatrix {
    let dim = 1usize << n;
    let norm = 1.0 / (dim as f64).sqrt();
    ComplexMatrix::from_fn(dim, dim, |j, k| {
        // reduce jk mod 2^n first so the angle stays small
        let phase = ((j * k) & (dim - 1)) as f64 / dim as f64;
        C64::from_polar(norm, -2.0 * PI * phase)
    })
}

/// Register-`X` outcome distribution when `m3` post-processes the oracle
/// output for `f`. If `m3` is wider than register `X`, the surplus low
/// qubits are ancillas prepared in `|0⟩` and traced out with `F`.
pub fn output_distribution(m3: &ComplexMatrix, f: &PeriodicFunction) -> Result<Distribution> {
    let qubits = m3.qubits().ok_or_else(|| {
        Error::DimensionMismatch(format!(
            "post-processing matrix must be a square power of two, got {}x{}",
            m3.rows(),
            m3.cols()
        ))
    })?;
    if qubits < f.n() {
        return Err(Error::DimensionMismatch(format!(
            "{qubits}-qubit matrix cannot post-process a {}-qubit register",
            f.n()
        )));
    }
    let ancilla = qubits - f.n();
    let state = prepare_superposition(f.n(), f.m())
        .apply_oracle(f)?
        .with_ancilla(ancilla)
        .apply_post_unitary(m3)?;
    Ok(state.marginal_distribution().trace_low_qubits(ancilla))
}

/// Outcome distribution of the textbook circuit (inverse QFT post-processing).
pub fn reference_distribution(f: &PeriodicFunction) -> Distribution {
    output_distribution(&inverse_qft_matrix(f.n()), f).expect("inverse QFT always matches the function's register")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn superposition_amplitudes() {
        let s = prepare_superposition(1, 1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [h, 0.0, h, 0.0];
        for (a, e) in s.state().amplitudes().iter().zip(expected) {
            assert!(approx(a.re, e, 1e-15) && a.im == 0.0);
        }
        let s5 = prepare_superposition(5, 5);
        for i in 0..32 {
            assert!(approx(s5.amplitude(i, 0).re, 1.0 / 32f64.sqrt(), 1e-15));
        }
        for p in s5.marginal_distribution().probabilities() {
            assert!(approx(*p, 1.0 / 32.0, 1e-15));
        }
    }

    #[test]
    fn oracle_relocates_amplitudes() {
        let f = generate_periodic_function(5, 5, 8, 3).unwrap();
        let psi2 = prepare_superposition(5, 5).apply_oracle(&f).unwrap();
        assert_eq!(psi2.norm_sqr(), prepare_superposition(5, 5).norm_sqr());
        let mut nonzero = 0;
        for i in 0..32 {
            for j in 0..32 {
                let a = psi2.amplitude(i, j);
                if j as u64 == f.eval(i) {
                    assert_eq!(a.re, 1.0 / 32f64.sqrt());
                    nonzero += 1;
                } else {
                    assert_eq!(a, C64::new(0.0, 0.0));
                }
            }
        }
        assert_eq!(nonzero, 32);
        for p in psi2.marginal_distribution().probabilities() {
            assert!(approx(*p, 1.0 / 32.0, 1e-15));
        }
    }

    #[test]
    fn oracle_rejects_support_off_zero_slice() {
        let f = generate_periodic_function(1, 1, 1, 0).unwrap();
        let s = JointState::from_amplitudes(
            1,
            1,
            vec![
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        assert!(s.apply_oracle(&f).is_err());
    }

    #[test]
    fn qft_on_one_qubit_is_hadamard() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = inverse_qft_matrix(1);
        let expected = [h, h, h, -h];
        for (z, e) in q.as_slice().iter().zip(expected) {
            assert!(approx(z.re, e, 1e-15) && approx(z.im, 0.0, 1e-15));
        }
        for n in 1..=7 {
            assert!(inverse_qft_matrix(n).unitarity_defect().unwrap() < 1e-12);
        }
    }

    #[test]
    fn identity_post_unitary_leaves_state() {
        let f = generate_periodic_function(3, 3, 3, 1).unwrap();
        let psi2 = prepare_superposition(3, 3).apply_oracle(&f).unwrap();
        let same = psi2.apply_post_unitary(&ComplexMatrix::identity(8)).unwrap();
        assert_eq!(same, psi2);
        assert!(psi2.apply_post_unitary(&ComplexMatrix::identity(4)).is_err());
    }

    #[test]
    fn product_state_marginal_is_point_mass() {
        let mut amps = vec![C64::new(0.0, 0.0); 16];
        amps[2 * 4 + 3] = C64::new(0.0, 1.0);
        let s = JointState::from_amplitudes(2, 2, amps).unwrap();
        assert_eq!(s.marginal_distribution(), Distribution::point_mass(4, 2));
    }

    #[test]
    fn constant_function_gives_point_mass_at_zero() {
        let f = generate_periodic_function(3, 3, 1, 9).unwrap();
        let p = reference_distribution(&f);
        assert!(approx(p.probabilities()[0], 1.0, 1e-12));
        assert!(p.probabilities()[1..].iter().all(|&x| x < 1e-12));
    }

    #[test]
    fn four_peaks_for_period_eight() {
        let f = generate_periodic_function(5, 5, 8, 0).unwrap();
        let p = reference_distribution(&f);
        for (i, &pi) in p.probabilities().iter().enumerate() {
            let expected = if i % 4 == 0 { 0.125 } else { 0.0 };
            assert!(approx(pi, expected, 1e-10), "P({i}) = {pi}");
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        let d = Distribution::new(vec![0.25, 0.25, 0.5, 0.0]).unwrap();
        assert_eq!(d.trace_low_qubits(1).probabilities(), &[0.5, 0.5]);
    }
}
