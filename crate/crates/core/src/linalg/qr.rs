use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// `A = Q R` with `Q` unitary and `R` upper triangular.
#[derive(Clone, Debug)]
pub struct QrDecomposition {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
}

/// Householder reflector `I − 2 v v†` mapping `x` onto `alpha · e₀`.
///
/// Returns `(v, alpha)`; `v` is empty when `x` is already zero.
pub(crate) fn householder_vector(x: &[C64]) -> (Vec<C64>, C64) {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (Vec::new(), C64::new(0.0, 0.0));
    }
    let phase = if x[0].norm() == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        x[0] / x[0].norm()
    };
    let alpha = -phase * norm;
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if vnorm == 0.0 {
        return (Vec::new(), alpha);
    }
    for z in &mut v {
        *z /= vnorm;
    }
    (v, alpha)
}

/// Applies `I − 2 v v†` from the left to rows `offset..` of `a`, columns `col_start..`.
pub(crate) fn reflect_rows(a: &mut ComplexMatrix, v: &[C64], offset: usize, col_start: usize) {
    let cols = a.cols();
    for j in col_start..cols {
        let mut dot = C64::new(0.0, 0.0);
        for (k, vk) in v.iter().enumerate() {
            dot += vk.conj() * a[(offset + k, j)];
        }
        dot *= 2.0;
        for (k, vk) in v.iter().enumerate() {
            a[(offset + k, j)] -= vk * dot;
        }
    }
}

/// Applies `I − 2 v v†` from the right to columns `offset..` of `a`.
pub(crate) fn reflect_cols(a: &mut ComplexMatrix, v: &[C64], offset: usize) {
    for i in 0..a.rows() {
        let mut dot = C64::new(0.0, 0.0);
        for (k, vk) in v.iter().enumerate() {
            dot += a[(i, offset + k)] * vk;
        }
        dot *= 2.0;
        for (k, vk) in v.iter().enumerate() {
            a[(i, offset + k)] -= dot * vk.conj();
        }
    }
}

/// Householder QR of a square matrix.
pub fn householder_qr(a: &ComplexMatrix) -> Result<QrDecomposition> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "QR implemented for square matrices, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut r = a.clone();
    let mut q = ComplexMatrix::identity(n);
    for k in 0..n.saturating_sub(1) {
        let x: Vec<C64> = (k..n).map(|i| r[(i, k)]).collect();
        let (v, alpha) = householder_vector(&x);
        if v.is_empty() {
            continue;
        }
        reflect_rows(&mut r, &v, k, k);
        reflect_cols(&mut q, &v, k);
        r[(k, k)] = alpha;
        for i in k + 1..n {
            r[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    Ok(QrDecomposition { q, r })
}
