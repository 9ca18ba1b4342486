//! Dense complex linear algebra.
//!
//! Matrices are stored row-major. Every operator in this crate acts on a
//! register of qubits, so most constructors expect power-of-two dimensions,
//! but the arithmetic itself works for any shape.

mod eigen;
mod qr;
mod random;

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eigen::{eigen_decomposition, eigenphases, schur, EigenPair, Schur};
pub use qr::{householder_qr, QrDecomposition};
pub use random::{derive_seed, haar_random_unitary, seeded_rng};

pub type C64 = Complex64;

/// Maximum defect accepted by routines that assume a unitary input.
pub const UNITARY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries. Non-finite entries are rejected.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Reads a matrix from interleaved `(re, im)` pairs in row-major order.
    pub fn from_interleaved(dim: usize, params: &[f64]) -> Result<Self> {
        if params.len() != 2 * dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} reals cannot fill a {dim}x{dim} complex matrix",
                params.len()
            )));
        }
        let data = params.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
        Self::from_row_major(dim, dim, data)
    }

    /// Row-major `(re, im)` pairs, the inverse of [`ComplexMatrix::from_interleaved`].
    pub fn to_interleaved(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.data.len());
        for z in &self.data {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Number of qubits if the matrix is a square power-of-two operator.
    pub fn qubits(&self) -> Option<u32> {
        (self.is_square() && self.rows.is_power_of_two()).then(|| self.rows.trailing_zeros())
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// `self† · self`, computed without materialising the adjoint.
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.cols;
        let mut out = ComplexMatrix::zeros(n, n);
        for k in 0..self.rows {
            let row = self.row(k);
            for (i, a) in row.iter().enumerate() {
                let a = a.conj();
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (o, b) in out_row.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape(other)?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape(other)?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn frobenius_distance(&self, other: &ComplexMatrix) -> Result<f64> {
        Ok(self.sub(other)?.frobenius_norm())
    }

    /// Mean squared deviation of `M†M` from the identity,
    /// `(1/d²) Σ_ij |M†M − I|²_ij` for a `d × d` matrix.
    pub fn unitarity_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "unitarity defect needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let d = self.rows;
        if d == 0 {
            return Ok(0.0);
        }
        let gram = self.gram();
        let mut sum = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut e = gram[(i, j)];
                if i == j {
                    e -= 1.0;
                }
                sum += e.norm_sqr();
            }
        }
        Ok(sum / (d * d) as f64)
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.dim() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix applied to a vector of length {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let amps = (0..self.rows)
            .map(|i| self.row(i).iter().zip(v.amplitudes()).map(|(a, b)| a * b).sum())
            .collect();
        Ok(StateVector { amps })
    }

    fn check_same_shape(&self, other: &ComplexMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.4}{:+.4}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A vector of complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Self {
        StateVector { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        StateVector {
            amps: vec![C64::new(0.0, 0.0); dim],
        }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amps[index] = C64::new(1.0, 0.0);
        v
    }

    /// Equal superposition `H^{⊗n}|0⟩` over `dim` basis states.
    pub fn uniform(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        StateVector {
            amps: vec![C64::new(a, 0.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "inner product of lengths {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = seeded_rng(seed);
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn hadamard() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_row_major(
            2,
            2,
            vec![C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn identity_products() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.matmul(&i2).unwrap(), i2);
        let hh = hadamard().matmul(&hadamard()).unwrap();
        assert!(hh.frobenius_distance(&i2).unwrap() < 1e-15);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let a = random_matrix(4, 4, 1);
        let b = random_matrix(4, 4, 2);
        let c = a.matmul(&b).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..4 {
                    acc += a[(i, k)] * b[(k, j)];
                }
                assert!((acc - c[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(ComplexMatrix::identity(4).adjoint(), ComplexMatrix::identity(4));
        let d = ComplexMatrix::from_diagonal(&[C64::i(), -C64::i()]);
        assert_eq!(d.adjoint(), ComplexMatrix::from_diagonal(&[-C64::i(), C64::i()]));
        let a = random_matrix(3, 5, 9);
        assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn gram_matches_adjoint_product() {
        let a = random_matrix(4, 4, 3);
        let g = a.adjoint().matmul(&a).unwrap();
        assert!(a.gram().frobenius_distance(&g).unwrap() < 1e-13);
    }

    #[test]
    fn defect_examples() {
        for d in [1, 2, 8] {
            assert_eq!(ComplexMatrix::identity(d).unitarity_defect().unwrap(), 0.0);
        }
        let two = ComplexMatrix::from_diagonal(&[C64::new(2.0, 0.0)]);
        assert_eq!(two.unitarity_defect().unwrap(), 9.0);
        assert!(ComplexMatrix::zeros(2, 3).unitarity_defect().is_err());
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let r = ComplexMatrix::from_row_major(1, 1, vec![C64::new(f64::NAN, 0.0)]);
        assert!(r.is_err());
    }

    #[test]
    fn interleaved_round_trip() {
        let a = random_matrix(4, 4, 4);
        let back = ComplexMatrix::from_interleaved(4, &a.to_interleaved()).unwrap();
        assert_eq!(a, back);
    }
}
