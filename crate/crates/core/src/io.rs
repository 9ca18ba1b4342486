//! On-disk formats: binary matrices and networks, JSON manifests, CSV rows.
//!
//! Matrix file (`UMAT0001`), all integers little-endian `u32`:
//!
//! ```text
//! 0   magic "UMAT0001"
//! 8   n_qubits
//! 12  rows   (= 2^n_qubits)
//! 16  cols   (= rows)
//! 20  reserved, zero
//! 24  rows·cols entries, row-major, each (re, im) as little-endian f64
//! ```
//!
//! Network file (`MLPC0001`): magic, layer count `L` as `u32`, then `L + 1`
//! layer widths as `u32`, then for each layer its weights (row-major, one
//! row per output unit) followed by its biases, all little-endian f64.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{LabeledUnitary, LabeledUnitaryCorpus, Mlp, Source};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

pub const UNITARY_MAGIC: &[u8; 8] = b"UMAT0001";
pub const MLP_MAGIC: &[u8; 8] = b"MLPC0001";
pub const UNITARY_HEADER_LEN: usize = 24;

struct Reader<'a> {
    kind: &'static str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(kind: &'static str, bytes: &'a [u8]) -> Self {
        Reader { kind, bytes, pos: 0 }
    }

    fn fail<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Format {
            kind: self.kind,
            offset,
            message: message.into(),
        })
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < len {
            return self.fail(
                self.bytes.len(),
                format!("file ends inside {what} (needs {len} bytes at offset {})", self.pos),
            );
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn magic(&mut self, expected: &[u8; 8]) -> Result<()> {
        let got = self.take(8, "the magic header")?;
        if got != expected {
            return self.fail(
                0,
                format!(
                    "expected magic {:?}, found {:?}",
                    String::from_utf8_lossy(expected),
                    String::from_utf8_lossy(got)
                ),
            );
        }
        Ok(())
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("four bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let at = self.pos;
        let b = self.take(8, what)?;
        let v = f64::from_le_bytes(b.try_into().expect("eight bytes"));
        if !v.is_finite() {
            return self.fail(at, format!("{what} is not finite ({v})"));
        }
        Ok(v)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return self.fail(
                self.pos,
                format!("{} trailing bytes after the payload", self.bytes.len() - self.pos),
            );
        }
        Ok(())
    }
}

pub fn encode_unitary(m: &ComplexMatrix) -> Result<Vec<u8>> {
    let n = m.qubits().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "only 2^n x 2^n matrices can be stored, got {}x{}",
            m.rows(),
            m.cols()
        ))
    })?;
    let mut out = Vec::with_capacity(UNITARY_HEADER_LEN + 16 * m.rows() * m.cols());
    out.extend_from_slice(UNITARY_MAGIC);
    for v in [n, m.rows() as u32, m.cols() as u32, 0] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for z in m.as_slice() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_unitary(bytes: &[u8]) -> Result<ComplexMatrix> {
    let mut r = Reader::new("unitary", bytes);
    r.magic(UNITARY_MAGIC)?;
    let n = r.u32("n_qubits")?;
    if !(1..=15).contains(&n) {
        return r.fail(8, format!("n_qubits = {n} is out of range"));
    }
    let dim = 1usize << n;
    let rows = r.u32("rows")? as usize;
    if rows != dim {
        return r.fail(12, format!("rows = {rows}, expected 2^{n} = {dim}"));
    }
    let cols = r.u32("cols")? as usize;
    if cols != dim {
        return r.fail(16, format!("cols = {cols}, expected {dim}"));
    }
    if r.u32("reserved word")? != 0 {
        return r.fail(20, "reserved word is not zero");
    }
    let expected = UNITARY_HEADER_LEN + 16 * dim * dim;
    if bytes.len() != expected {
        return r.fail(
            bytes.len().min(expected),
            format!("file is {} bytes, a {dim}x{dim} matrix needs {expected}", bytes.len()),
        );
    }
    let mut data = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        let re = r.f64("matrix entry")?;
        let im = r.f64("matrix entry")?;
        data.push(C64::new(re, im));
    }
    r.finish()?;
    ComplexMatrix::from_row_major(dim, dim, data)
}

pub fn encode_mlp(net: &Mlp) -> Vec<u8> {
    let dims = net.dims();
    let mut out = Vec::with_capacity(16 + 4 * dims.len() + 8 * net.params().len());
    out.extend_from_slice(MLP_MAGIC);
    out.extend_from_slice(&(net.layers() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode_mlp(bytes: &[u8]) -> Result<Mlp> {
    let mut r = Reader::new("classifier", bytes);
    r.magic(MLP_MAGIC)?;
    let layers = r.u32("layer count")? as usize;
    if !(1..=64).contains(&layers) {
        return r.fail(8, format!("layer count {layers} is out of range"));
    }
    let mut dims = Vec::with_capacity(layers + 1);
    for l in 0..=layers {
        let at = r.pos;
        let d = r.u32("layer width")? as usize;
        if d == 0 || d > 1 << 24 {
            return r.fail(at, format!("layer {l} has width {d}"));
        }
        dims.push(d);
    }
    if dims[layers] != 1 {
        return r.fail(r.pos - 4, format!("output width is {}, expected 1", dims[layers]));
    }
    let count: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    let expected = r.pos + 8 * count;
    if bytes.len() != expected {
        return r.fail(
            bytes.len().min(expected),
            format!("file is {} bytes, layer widths {dims:?} need {expected}", bytes.len()),
        );
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        params.push(r.f64("network parameter")?);
    }
    r.finish()?;
    Mlp::from_parts(dims, params)
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary sibling and renames, creating parent
/// directories as needed.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("partial");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_unitary(path: &Path) -> Result<ComplexMatrix> {
    decode_unitary(&read_bytes(path)?)
}

pub fn write_unitary(path: &Path, m: &ComplexMatrix) -> Result<()> {
    write_bytes(path, &encode_unitary(m)?)
}

pub fn read_mlp(path: &Path) -> Result<Mlp> {
    decode_mlp(&read_bytes(path)?)
}

pub fn write_mlp(path: &Path, net: &Mlp) -> Result<()> {
    write_bytes(path, &encode_mlp(net))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&read_bytes(path)?)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

/// CSV with a header row taken from the field names of `T`.
pub fn write_csv_to<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    write_csv_to(&mut buf, rows)?;
    write_bytes(path, &buf)
}

/// Everything needed to repeat a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub n: u32,
    pub m: u32,
    pub ancilla: u32,
    pub target: String,
    pub k: f64,
    pub gaussian_sigma: f64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub seed: u64,
    pub dataset_seed: u64,
    pub dataset_size: usize,
    pub periods: Vec<usize>,
    pub dataset_path: String,
    pub matrix_path: String,
    pub loss_history_path: String,
    pub final_loss: f64,
    pub unitarity_defect: f64,
    pub loss_threshold: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// Path of the training-run manifest, or `"haar"`.
    pub training: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub matrix_path: String,
    pub label: u8,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub n: u32,
    pub entries: Vec<CorpusEntry>,
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads every matrix named by a corpus manifest; relative paths are taken
/// from the manifest's directory.
pub fn load_corpus(manifest_path: &Path) -> Result<(CorpusManifest, LabeledUnitaryCorpus)> {
    let manifest: CorpusManifest = read_json(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let dim = 1usize << manifest.n;
    let mut entries = Vec::with_capacity(manifest.entries.len());
    for (i, e) in manifest.entries.iter().enumerate() {
        if e.label > 1 {
            return Err(Error::Corpus(format!("entry {i} has label {}", e.label)));
        }
        let matrix = read_unitary(&resolve(base, &e.matrix_path))?;
        if matrix.rows() != dim {
            return Err(Error::Corpus(format!(
                "entry {i} ({}) is {}x{}, the manifest says n = {}",
                e.matrix_path,
                matrix.rows(),
                matrix.cols(),
                manifest.n
            )));
        }
        let source = match e.provenance.training.as_str() {
            "haar" => Source::Haar,
            path => Source::Trained {
                manifest: Some(PathBuf::from(path)),
            },
        };
        if (source == Source::Haar) != (e.label == 0) {
            return Err(Error::Corpus(format!(
                "entry {i} has label {} but provenance {:?}",
                e.label, e.provenance.training
            )));
        }
        entries.push(LabeledUnitary {
            matrix,
            label: e.label,
            seed: e.provenance.seed,
            source,
        });
    }
    Ok((manifest, LabeledUnitaryCorpus::new(entries)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::inverse_qft_matrix;
    use crate::classifier::MlpConfig;
    use crate::linalg::haar_random_unitary;
    use proptest::prelude::*;

    fn offset_of(err: Error) -> usize {
        match err {
            Error::Format { offset, .. } => offset,
            other => panic!("expected a format error, got {other}"),
        }
    }

    #[test]
    fn unitary_layout() {
        let bytes = encode_unitary(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(bytes.len(), 16 + 8 + 4 * 16);
        assert_eq!(&bytes[..8], b"UMAT0001");
        assert_eq!(&bytes[8..24], &[1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[24..32], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[32..40], &0.0f64.to_le_bytes());
    }

    #[test]
    fn unitary_errors_name_offsets() {
        let good = encode_unitary(&inverse_qft_matrix(2)).unwrap();
        let mut bad = good.clone();
        bad[3] = b'X';
        let err = decode_unitary(&bad).unwrap_err();
        assert!(err.to_string().contains("byte offset 0"), "{err}");
        let mut bad = good.clone();
        bad[12] = 5;
        assert_eq!(offset_of(decode_unitary(&bad).unwrap_err()), 12);
        let mut bad = good.clone();
        bad[20] = 1;
        assert_eq!(offset_of(decode_unitary(&bad).unwrap_err()), 20);
        assert_eq!(offset_of(decode_unitary(&good[..30]).unwrap_err()), 30);
        assert_eq!(offset_of(decode_unitary(&good[..5]).unwrap_err()), 5);
        let mut long = good.clone();
        long.push(0);
        assert_eq!(offset_of(decode_unitary(&long).unwrap_err()), good.len());
        let mut nan = good.clone();
        nan[40..48].copy_from_slice(&f64::NAN.to_le_bytes());
        assert_eq!(offset_of(decode_unitary(&nan).unwrap_err()), 40);
        assert!(encode_unitary(&ComplexMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn mlp_round_trip_and_layout() {
        let net = Mlp::new(&MlpConfig {
            input_dim: 4,
            hidden_dims: vec![3],
            seed: 1,
        })
        .unwrap();
        let bytes = encode_mlp(&net);
        assert_eq!(&bytes[..8], b"MLPC0001");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 12 + 3 * 4 + 8 * (4 * 3 + 3 + 3 + 1));
        let back = decode_mlp(&bytes).unwrap();
        assert_eq!(back, net);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(offset_of(decode_mlp(&bad).unwrap_err()), 0);
        assert!(decode_mlp(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = std::env::temp_dir().join(format!("qperiod-io-{}", std::process::id()));
        let path = dir.join("m.umat");
        let u = haar_random_unitary(3, 11);
        write_unitary(&path, &u).unwrap();
        assert_eq!(read_unitary(&path).unwrap(), u);
        assert_eq!(fs::metadata(&path).unwrap().len(), 24 + 64 * 16);
        let missing = read_unitary(&dir.join("nope.umat")).unwrap_err();
        assert!(matches!(missing, Error::Io { .. }));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn csv_has_header() {
        #[derive(Serialize)]
        struct Row {
            a: u32,
            b: f64,
        }
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &[Row { a: 1, b: 0.5 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,0.5\n");
    }

    proptest! {
        #[test]
        fn unitary_encoding_is_bit_exact(
            n in 1u32..4,
            raw in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 128),
        ) {
            let dim = 1usize << n;
            let m = ComplexMatrix::from_fn(dim, dim, |i, j| {
                let k = 2 * (i * dim + j);
                C64::new(raw[k % raw.len()], raw[(k + 1) % raw.len()])
            });
            let back = decode_unitary(&encode_unitary(&m).unwrap()).unwrap();
            for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}
