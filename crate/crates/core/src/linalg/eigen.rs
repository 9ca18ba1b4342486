//! Complex Schur decomposition and eigenpairs.
//!
//! Householder reduction to upper Hessenberg form followed by single-shift
//! QR sweeps with Wilkinson shifts, applied with Givens rotations. The
//! accumulated unitary `Z` satisfies `A = Z T Z†` with `T` upper triangular.

use std::f64::consts::PI;

use super::qr::{householder_vector, reflect_cols, reflect_rows};
use super::{ComplexMatrix, C64, UNITARY_TOLERANCE};
use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

#[derive(Clone, Debug)]
pub struct Schur {
    /// Unitary basis change.
    pub z: ComplexMatrix,
    /// Upper triangular factor; eigenvalues on the diagonal.
    pub t: ComplexMatrix,
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: C64,
    /// Unit-norm eigenvector.
    pub vector: Vec<C64>,
}

pub fn schur(a: &ComplexMatrix) -> Result<Schur> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Schur decomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut t = a.clone();
    let mut z = ComplexMatrix::identity(n);
    hessenberg_in_place(&mut t, &mut z);
    qr_iterate(&mut t, &mut z)?;
    Ok(Schur { z, t })
}

fn hessenberg_in_place(a: &mut ComplexMatrix, z: &mut ComplexMatrix) {
    let n = a.rows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let (v, alpha) = householder_vector(&x);
        if v.is_empty() {
            continue;
        }
        reflect_rows(a, &v, k + 1, 0);
        reflect_cols(a, &v, k + 1);
        reflect_cols(z, &v, k + 1);
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

/// Rotation `[[c, s], [−s̄, c]]` sending `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let r = (na * na + b.norm_sqr()).sqrt();
    if r == 0.0 {
        (1.0, C64::new(0.0, 0.0))
    } else if na == 0.0 {
        (0.0, b.conj() / b.norm())
    } else {
        (na / r, (a / na) * b.conj() / r)
    }
}

fn wilkinson_shift(t: &ComplexMatrix, hi: usize) -> C64 {
    let a = t[(hi - 1, hi - 1)];
    let b = t[(hi - 1, hi)];
    let c = t[(hi, hi - 1)];
    let d = t[(hi, hi)];
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mu1 = (a + d) * 0.5 + disc;
    let mu2 = (a + d) * 0.5 - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

fn qr_iterate(t: &mut ComplexMatrix, z: &mut ComplexMatrix) -> Result<()> {
    let n = t.rows();
    if n < 2 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut total = 0usize;
    let budget = MAX_SWEEPS_PER_EIGENVALUE * n;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = t[(lo, lo - 1)].norm();
            let scale = t[(lo, lo)].norm() + t[(lo - 1, lo - 1)].norm();
            if sub <= eps * scale.max(f64::MIN_POSITIVE) {
                t[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            sweeps = 0;
            continue;
        }
        total += 1;
        sweeps += 1;
        if total > budget {
            return Err(Error::NoConvergence(total));
        }
        let mu = if sweeps % 11 == 0 {
            // exceptional shift to break cycles
            t[(hi, hi)] + C64::new(t[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(t, hi)
        };
        for k in lo..=hi {
            t[(k, k)] -= mu;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(t[(k, k)], t[(k + 1, k)]);
            for j in k..n {
                let x = t[(k, j)];
                let y = t[(k + 1, j)];
                t[(k, j)] = x * c + s * y;
                t[(k + 1, j)] = -s.conj() * x + y * c;
            }
            rotations.push((c, s));
        }
        for (offset, &(c, s)) in rotations.iter().enumerate() {
            let k = lo + offset;
            let last_row = (k + 1).min(hi);
            for i in 0..=last_row {
                let x = t[(i, k)];
                let y = t[(i, k + 1)];
                t[(i, k)] = x * c + y * s.conj();
                t[(i, k + 1)] = -x * s + y * c;
            }
            for i in 0..n {
                let x = z[(i, k)];
                let y = z[(i, k + 1)];
                z[(i, k)] = x * c + y * s.conj();
                z[(i, k + 1)] = -x * s + y * c;
            }
        }
        for k in lo..=hi {
            t[(k, k)] += mu;
        }
    }
    Ok(())
}

/// Eigenvalues with unit-norm eigenvectors, in Schur order.
pub fn eigen_decomposition(a: &ComplexMatrix) -> Result<Vec<EigenPair>> {
    let Schur { z, t } = schur(a)?;
    let n = t.rows();
    let tiny = f64::EPSILON * t.frobenius_norm().max(1.0);
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        // back substitution for (T − λI) y = 0 with y_k = 1
        let mut y = vec![C64::new(0.0, 0.0); n];
        y[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in i + 1..=k {
                acc += t[(i, j)] * y[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < tiny {
                denom = C64::new(tiny, 0.0);
            }
            y[i] = -acc / denom;
        }
        let mut v: Vec<C64> = (0..n).map(|i| (0..=k).map(|j| z[(i, j)] * y[j]).sum()).collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut v {
            *c /= norm;
        }
        pairs.push(EigenPair {
            value: lambda,
            vector: v,
        });
    }
    Ok(pairs)
}

/// Arguments of the eigenvalues of a (near-)unitary matrix, in `(−π, π]`.
pub fn eigenphases(u: &ComplexMatrix) -> Result<Vec<f64>> {
    let defect = u.unitarity_defect()?;
    if defect > UNITARY_TOLERANCE {
        return Err(Error::NotUnitary {
            defect,
            threshold: UNITARY_TOLERANCE,
        });
    }
    let Schur { t, .. } = schur(u)?;
    Ok((0..t.rows())
        .map(|k| {
            let theta = t[(k, k)].arg();
            if theta <= -PI {
                theta + 2.0 * PI
            } else {
                theta
            }
        })
        .collect())
}
