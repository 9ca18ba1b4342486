//! C ABI over `qperiod`.
//!
//! Objects cross the boundary as opaque handles, released with the
//! matching `qp_*_free`. Every fallible call returns a [`QpStatus`]; on
//! failure a description is available from [`qp_last_error`] on the same
//! thread until the next failing call.
//! Buffers are caller-owned: a call that fills one takes its length in
//! elements and fails with `QP_STATUS_BUFFER_TOO_SMALL` when it is short.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qperiod::analysis::loschmidt_echo;
use qperiod::circuit::{
    estimate_period, generate_periodic_function, inverse_qft_matrix, output_distribution, reference_distribution,
    Distribution, PeriodicFunction,
};
use qperiod::classifier::{flatten_unitary, Mlp};
use qperiod::io::{read_mlp, read_unitary, write_unitary};
use qperiod::linalg::{eigenphases, haar_random_unitary, ComplexMatrix, StateVector, C64};
use qperiod::training::{default_dataset_size, generate_functions, train, LossConfig, TrainConfig, TrainingDataset};
use qperiod::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotUnitary = 4,
    NoConvergence = 5,
    Diverged = 6,
    Estimation = 7,
    Format = 8,
    Io = 9,
    Corpus = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// A dense complex matrix.
pub struct QpMatrix {
    inner: ComplexMatrix,
}

/// A tabulated periodic function.
pub struct QpFunction {
    inner: PeriodicFunction,
}

/// A trained classifier network.
pub struct QpMlp {
    inner: Mlp,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: QpStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch(_) => QpStatus::DimensionMismatch,
            Error::InvalidArgument(_) => QpStatus::InvalidArgument,
            Error::NotUnitary { .. } => QpStatus::NotUnitary,
            Error::NoConvergence(_) => QpStatus::NoConvergence,
            Error::Diverged { .. } => QpStatus::Diverged,
            Error::Estimation(_) => QpStatus::Estimation,
            Error::Format { .. } | Error::Json(_) | Error::Csv(_) => QpStatus::Format,
            Error::Io { .. } => QpStatus::Io,
            Error::Corpus(_) => QpStatus::Corpus,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

fn fail(status: QpStatus, message: impl Into<String>) -> Failure {
    Failure {
        status,
        message: message.into(),
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> QpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QpStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            QpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(QpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(QpStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, needed: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len < needed {
        return Err(fail(
            QpStatus::BufferTooSmall,
            format!("{what} holds {len} elements, {needed} needed"),
        ));
    }
    if p.is_null() {
        return Err(fail(QpStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(QpStatus::NullPointer, "output handle pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(fail(QpStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(QpStatus::InvalidArgument, "path is not valid UTF-8"))?;
    Ok(Path::new(s))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Square matrix from `2 * dim * dim` doubles, row-major, real then
/// imaginary part per entry.
///
/// # Safety
/// `data` must point to `len` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qp_matrix_from_interleaved(
    dim: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut QpMatrix,
) -> QpStatus {
    guard(|| {
        let values = slice(data, len, "data")?;
        if dim == 0 || len != 2 * dim * dim {
            return Err(fail(
                QpStatus::DimensionMismatch,
                format!("{len} doubles cannot fill a {dim}x{dim} complex matrix"),
            ));
        }
        let inner = ComplexMatrix::from_interleaved(dim, values)?;
        store(out, QpMatrix { inner })
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qp_matrix_inverse_qft(n_qubits: u32, out: *mut *mut QpMatrix) -> QpStatus {
    guard(|| {
        if !(1..=12).contains(&n_qubits) {
            return Err(fail(
                QpStatus::InvalidArgument,
                format!("{n_qubits} qubits out of range"),
            ));
        }
        store(
            out,
            QpMatrix {
                inner: inverse_qft_matrix(n_qubits),
            },
        )
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qp_matrix_haar(n_qubits: u32, seed: u64, out: *mut *mut QpMatrix) -> QpStatus {
    guard(|| {
        if !(1..=12).contains(&n_qubits) {
            return Err(fail(
                QpStatus::InvalidArgument,
                format!("{n_qubits} qubits out of range"),
            ));
        }
        store(
            out,
            QpMatrix {
                inner: haar_random_unitary(n_qubits, seed),
            },
        )
    })
}

/// # Safety
/// `file` must be a NUL-terminated path and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_matrix_read(file: *const c_char, out: *mut *mut QpMatrix) -> QpStatus {
    guard(|| {
        let inner = read_unitary(path(file)?)?;
        store(out, QpMatrix { inner })
    })
}

/// # Safety
/// `m` must be a live handle and `file` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn qp_matrix_write(m: *const QpMatrix, file: *const c_char) -> QpStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        write_unitary(path(file)?, &m.inner)?;
        Ok(())
    })
}

/// Row count of a matrix handle; 0 for null.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qp_matrix_dim(m: *const QpMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.rows())
}

/// # Safety
/// `m` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qp_matrix_to_interleaved(m: *const QpMatrix, out: *mut f64, len: usize) -> QpStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        let values = m.inner.to_interleaved();
        slice_mut(out, len, values.len(), "output buffer")?[..values.len()].copy_from_slice(&values);
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_matrix_unitarity_defect(m: *const QpMatrix, out: *mut f64) -> QpStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        let d = m.inner.unitarity_defect()?;
        *slice_mut(out, 1, 1, "output")?.first_mut().expect("one element") = d;
        Ok(())
    })
}

/// Eigenphases in `(−π, π]`, one per row.
///
/// # Safety
/// `m` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qp_matrix_eigenphases(m: *const QpMatrix, out: *mut f64, len: usize) -> QpStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        let buf = slice_mut(out, len, m.inner.rows(), "output buffer")?;
        let phases = eigenphases(&m.inner)?;
        buf[..phases.len()].copy_from_slice(&phases);
        Ok(())
    })
}

/// `|⟨ψ|U1†U2|ψ⟩|²` with `ψ` given as interleaved `(re, im)` pairs.
///
/// # Safety
/// Both handles must be live, `psi` must hold `len` doubles and `out` be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn qp_loschmidt_echo(
    u1: *const QpMatrix,
    u2: *const QpMatrix,
    psi: *const f64,
    len: usize,
    out: *mut f64,
) -> QpStatus {
    guard(|| {
        let (u1, u2) = (deref(u1, "u1")?, deref(u2, "u2")?);
        let raw = slice(psi, len, "psi")?;
        if len % 2 != 0 {
            return Err(fail(QpStatus::DimensionMismatch, "psi needs (re, im) pairs"));
        }
        let state = StateVector::new(raw.chunks(2).map(|c| C64::new(c[0], c[1])).collect());
        let e = loschmidt_echo(&u1.inner, &u2.inner, &state)?;
        *slice_mut(out, 1, 1, "output")?.first_mut().expect("one element") = e;
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qp_matrix_free(m: *mut QpMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Random function on `n` qubits into `m` qubits with period `r`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qp_function_generate(
    n: u32,
    m: u32,
    r: usize,
    seed: u64,
    out: *mut *mut QpFunction,
) -> QpStatus {
    guard(|| {
        let inner = generate_periodic_function(n, m, r, seed)?;
        store(out, QpFunction { inner })
    })
}

/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qp_function_period(f: *const QpFunction) -> usize {
    f.as_ref().map_or(0, |f| f.inner.period())
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qp_function_free(f: *mut QpFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Register-`X` outcome distribution when `m` post-processes `f`; `out`
/// receives `2^n` probabilities.
///
/// # Safety
/// Both handles must be live and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qp_output_distribution(
    m: *const QpMatrix,
    f: *const QpFunction,
    out: *mut f64,
    len: usize,
) -> QpStatus {
    guard(|| {
        let (m, f) = (deref(m, "matrix")?, deref(f, "function")?);
        let buf = slice_mut(out, len, f.inner.domain_size(), "output buffer")?;
        let p = output_distribution(&m.inner, &f.inner)?;
        buf[..p.len()].copy_from_slice(p.probabilities());
        Ok(())
    })
}

/// Outcome distribution with the inverse QFT as post-processing.
///
/// # Safety
/// `f` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qp_reference_distribution(f: *const QpFunction, out: *mut f64, len: usize) -> QpStatus {
    guard(|| {
        let f = deref(f, "function")?;
        let buf = slice_mut(out, len, f.inner.domain_size(), "output buffer")?;
        let p = reference_distribution(&f.inner);
        buf[..p.len()].copy_from_slice(p.probabilities());
        Ok(())
    })
}

/// Period estimate from `2^n` outcome probabilities.
///
/// # Safety
/// `probs` must hold `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn qp_estimate_period(probs: *const f64, len: usize, n: u32, out: *mut usize) -> QpStatus {
    guard(|| {
        let p = slice(probs, len, "probabilities")?;
        if !(1..=20).contains(&n) {
            return Err(fail(QpStatus::InvalidArgument, format!("{n} qubits out of range")));
        }
        let r = estimate_period(&Distribution::unnormalized(p.to_vec()), n)?;
        *slice_mut(out, 1, 1, "output")?.first_mut().expect("one element") = r;
        Ok(())
    })
}

/// Trains a post-processing matrix with the default settings (ADAM
/// 0.001/0.9/0.99/1e-8, inverse-QFT targets, penalty weight 1). A
/// `dataset_size` of 0 picks the default for `n`. `final_loss` may be null.
///
/// # Safety
/// `out` must be writable; `final_loss` null or writable.
#[no_mangle]
pub unsafe extern "C" fn qp_train(
    n: u32,
    dataset_size: usize,
    epochs: usize,
    seed: u64,
    out: *mut *mut QpMatrix,
    final_loss: *mut f64,
) -> QpStatus {
    guard(|| {
        if !(1..=10).contains(&n) {
            return Err(fail(QpStatus::InvalidArgument, format!("{n} qubits out of range")));
        }
        let size = if dataset_size == 0 {
            default_dataset_size(n)
        } else {
            dataset_size
        };
        let functions = generate_functions(n, n, size, 1 << (n - 1), qperiod::linalg::derive_seed(seed, 1))?;
        let dataset = TrainingDataset::new(functions, &LossConfig::default(), 0)?;
        let cfg = TrainConfig {
            epochs,
            seed,
            ..TrainConfig::default()
        };
        let outcome = train(&dataset, &cfg)?;
        if !final_loss.is_null() {
            *final_loss = dataset.mean_loss(&outcome.matrix, cfg.loss.k)?;
        }
        store(out, QpMatrix { inner: outcome.matrix })
    })
}

/// # Safety
/// `file` must be a NUL-terminated path and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_mlp_read(file: *const c_char, out: *mut *mut QpMlp) -> QpStatus {
    guard(|| {
        let inner = read_mlp(path(file)?)?;
        store(out, QpMlp { inner })
    })
}

/// Classifier score of a matrix: above 0.5 means "learned".
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_mlp_score(net: *const QpMlp, m: *const QpMatrix, out: *mut f64) -> QpStatus {
    guard(|| {
        let (net, m) = (deref(net, "network")?, deref(m, "matrix")?);
        let s = net.inner.forward(&flatten_unitary(&m.inner))?;
        *slice_mut(out, 1, 1, "output")?.first_mut().expect("one element") = s;
        Ok(())
    })
}

/// # Safety
/// `net` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qp_mlp_free(net: *mut QpMlp) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}
