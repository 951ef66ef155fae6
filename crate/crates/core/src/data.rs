//! Dataset ingestion, normalization, masking and synthetic benchmarks.
//!
//! Two on-disk layouts are supported:
//!
//! * **dcmx**: `b"DCMX"`, version byte `0x01`, little-endian `u32` rows, `u32`
//!   cols, then `rows × cols` little-endian `f32` values in row-major order.
//!   Values are widened to `f64` on load and narrowed on save, so a matrix of
//!   `f32`-representable values round-trips bit-exactly.
//! * **csv**: comma-separated decimal numbers, one sample per line, no header.
//!
//! Labels live next to the data in `<stem>.labels.csv`, one integer per line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::LabelVector;
use crate::rng::{self, Stream};

pub const DCMX_MAGIC: &[u8; 4] = b"DCMX";
pub const DCMX_VERSION: u8 = 0x01;
pub const DCMX_HEADER_LEN: usize = 4 + 1 + 4 + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Dcmx,
}

impl DataFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(DataFormat::Csv),
            "dcmx" => Some(DataFormat::Dcmx),
            _ => None,
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "dcmx" => Ok(DataFormat::Dcmx),
            other => Err(Error::InvalidConfig(format!("unknown data format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    MinmaxPerBand,
    ZscorePerBand,
}

impl FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minmax" | "minmax_per_band" => Ok(NormalizeMode::MinmaxPerBand),
            "zscore" | "zscore_per_band" => Ok(NormalizeMode::ZscorePerBand),
            other => Err(Error::InvalidConfig(format!("unknown normalization '{other}'"))),
        }
    }
}

/// Per-column affine map `x' = (x − offset) / scale`; a zero scale marks a
/// constant column that was mapped to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mode: NormalizeMode,
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    /// Image shape of the unmasked data, when known.
    pub height: Option<usize>,
    pub width: Option<usize>,
    /// Row count before masking.
    pub original_len: Option<usize>,
    pub normalization: Option<Normalization>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `N × D`, one row per pixel or sample.
    pub features: Matrix,
    pub labels: Option<LabelVector>,
    /// Original row index of every retained row.
    pub mask: Option<Vec<usize>>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(features: Matrix) -> Self {
        Dataset {
            features,
            labels: None,
            mask: None,
            meta: DatasetMeta::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }
}

pub fn encode_dcmx(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(DCMX_HEADER_LEN + 4 * m.as_slice().len());
    out.extend_from_slice(DCMX_MAGIC);
    out.push(DCMX_VERSION);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for &v in m.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

/// Decodes one dcmx block from the front of `bytes`, returning the matrix and
/// the number of bytes consumed. `path` only labels errors.
pub fn decode_dcmx_prefix(bytes: &[u8], path: &Path) -> Result<(Matrix, usize)> {
    let parse_err = |offset: usize, message: String| Error::ParseBinary {
        path: path.to_path_buf(),
        offset,
        message,
    };
    if bytes.len() < DCMX_HEADER_LEN {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: DCMX_HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != DCMX_MAGIC {
        return Err(parse_err(0, format!("bad magic {:?}, expected \"DCMX\"", &bytes[..4])));
    }
    if bytes[4] != DCMX_VERSION {
        return Err(parse_err(4, format!("unsupported version {:#04x}", bytes[4])));
    }
    let rows = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[9..13].try_into().expect("4 bytes")) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(DCMX_HEADER_LEN))
        .ok_or_else(|| parse_err(5, format!("shape {rows}x{cols} overflows")))?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len(),
        });
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, chunk) in bytes[DCMX_HEADER_LEN..expected].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(parse_err(DCMX_HEADER_LEN + 4 * i, format!("non-finite value {v}")));
        }
        data.push(v as f64);
    }
    Ok((Matrix::from_vec(rows, cols, data)?, expected))
}

/// Decodes a buffer holding exactly one dcmx block.
pub fn decode_dcmx(bytes: &[u8], path: &Path) -> Result<Matrix> {
    let (m, used) = decode_dcmx_prefix(bytes, path)?;
    if used != bytes.len() {
        return Err(Error::ParseBinary {
            path: path.to_path_buf(),
            offset: used,
            message: format!("{} trailing bytes after payload", bytes.len() - used),
        });
    }
    Ok(m)
}

pub fn save_dcmx(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, encode_dcmx(m)).map_err(|e| Error::io(path, e))
}

pub fn load_dcmx(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dcmx(&bytes, path)
}

pub fn parse_csv_matrix(text: &str, path: &Path) -> Result<Matrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::ParseLine {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let before = data.len();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field
                .parse()
                .map_err(|_| err(format!("'{field}' is not a number")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite value '{field}'")));
            }
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => return Err(err(format!("expected {c} columns, found {width}"))),
            _ => {}
        }
        rows += 1;
    }
    Matrix::from_vec(rows, cols.unwrap_or(0), data)
}

pub fn load_csv_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_matrix(&text, path)
}

pub fn format_csv_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn save_csv_matrix(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, format_csv_matrix(m)).map_err(|e| Error::io(path, e))
}

pub fn parse_labels(text: &str, path: &Path) -> Result<LabelVector> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: usize = line.parse().map_err(|_| Error::ParseLine {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("'{line}' is not a non-negative integer label"),
        })?;
        out.push(v);
    }
    Ok(LabelVector::new(out))
}

pub fn load_labels(path: &Path) -> Result<LabelVector> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, path)
}

pub fn format_labels(labels: &[usize]) -> String {
    let mut out = String::with_capacity(labels.len() * 2);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    out
}

pub fn save_labels(path: &Path, labels: &[usize]) -> Result<()> {
    fs::write(path, format_labels(labels)).map_err(|e| Error::io(path, e))
}

/// `<dir>/<stem>.labels.csv` for a data file `<dir>/<stem>.<ext>`.
pub fn companion_labels_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.labels.csv"))
}

/// Loads features and, when present, the companion label file.
pub fn load(path: &Path, format: DataFormat) -> Result<Dataset> {
    let features = match format {
        DataFormat::Csv => load_csv_matrix(path)?,
        DataFormat::Dcmx => load_dcmx(path)?,
    };
    let label_path = companion_labels_path(path);
    let labels = if label_path.is_file() {
        let labels = load_labels(&label_path)?;
        if labels.len() != features.rows() {
            return Err(Error::LengthMismatch {
                left: features.rows(),
                right: labels.len(),
            });
        }
        Some(labels)
    } else {
        None
    };
    Ok(Dataset {
        features,
        labels,
        mask: None,
        meta: DatasetMeta {
            name: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            ..DatasetMeta::default()
        },
    })
}

/// Writes features in `format` and labels (if any) to the companion file.
pub fn save(path: &Path, format: DataFormat, dataset: &Dataset) -> Result<()> {
    match format {
        DataFormat::Csv => save_csv_matrix(path, &dataset.features)?,
        DataFormat::Dcmx => save_dcmx(path, &dataset.features)?,
    }
    if let Some(labels) = &dataset.labels {
        save_labels(&companion_labels_path(path), labels)?;
    }
    Ok(())
}

/// Rescales every column independently and records the transform in `meta`.
pub fn normalize(dataset: &Dataset, mode: NormalizeMode) -> Dataset {
    let x = &dataset.features;
    let (n, d) = x.shape();
    let mut offsets = Vec::with_capacity(d);
    let mut scales = Vec::with_capacity(d);
    for c in 0..d {
        let col = x.column(c);
        let (offset, scale) = match mode {
            NormalizeMode::MinmaxPerBand => {
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi - lo)
            }
            NormalizeMode::ZscorePerBand => {
                let mean = col.iter().sum::<f64>() / n as f64;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                (mean, var.sqrt())
            }
        };
        offsets.push(if offset.is_finite() { offset } else { 0.0 });
        scales.push(if scale.is_finite() && scale > 0.0 { scale } else { 0.0 });
    }
    let features = Matrix::from_fn(n, d, |r, c| {
        if scales[c] == 0.0 {
            0.0
        } else {
            (x.get(r, c) - offsets[c]) / scales[c]
        }
    });
    let mut meta = dataset.meta.clone();
    meta.normalization = Some(Normalization { mode, offsets, scales });
    Dataset {
        features,
        labels: dataset.labels.clone(),
        mask: dataset.mask.clone(),
        meta,
    }
}

/// Inverts [`normalize`]; constant columns come back as their recorded offset.
pub fn denormalize(features: &Matrix, norm: &Normalization) -> Result<Matrix> {
    if features.cols() != norm.offsets.len() {
        return Err(Error::Shape {
            op: "denormalize",
            left: features.shape(),
            right: (features.rows(), norm.offsets.len()),
        });
    }
    Ok(Matrix::from_fn(features.rows(), features.cols(), |r, c| {
        features.get(r, c) * norm.scales[c] + norm.offsets[c]
    }))
}

/// Drops rows labeled 0 (background) and renumbers the remaining labels to
/// `0..c` in increasing order of their original value.
pub fn mask_unlabeled(dataset: &Dataset) -> Result<Dataset> {
    let labels = dataset
        .labels
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("masking unlabeled rows needs labels".into()))?;
    let keep: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 0).collect();
    if keep.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut distinct: Vec<usize> = keep.iter().map(|&i| labels[i]).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let dense: Vec<usize> = keep
        .iter()
        .map(|&i| distinct.binary_search(&labels[i]).expect("label collected above"))
        .collect();
    let mask: Vec<usize> = match &dataset.mask {
        Some(prev) => keep.iter().map(|&i| prev[i]).collect(),
        None => keep.clone(),
    };
    let mut meta = dataset.meta.clone();
    meta.original_len.get_or_insert(dataset.len());
    Ok(Dataset {
        features: dataset.features.select_rows(&keep),
        labels: Some(LabelVector::new(dense)),
        mask: Some(mask),
        meta,
    })
}

/// Places each predicted label at its original row; removed rows stay `None`.
pub fn scatter_labels(predicted: &[usize], mask: &[usize], original_len: usize) -> Result<Vec<Option<usize>>> {
    if predicted.len() != mask.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: mask.len(),
        });
    }
    let mut full = vec![None; original_len];
    for (&p, &i) in predicted.iter().zip(mask) {
        let slot = full.get_mut(i).ok_or_else(|| {
            Error::InvalidConfig(format!("mask index {i} exceeds original length {original_len}"))
        })?;
        *slot = Some(p);
    }
    Ok(full)
}

/// Synthetic isotropic Gaussian clusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_per_cluster: usize,
    pub k: usize,
    pub dim: usize,
    pub separation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

const PLACEMENT_ATTEMPTS: usize = 1000;

/// Like [`synth_blobs`] but also returns the `k × dim` true centers.
pub fn synth_blobs_with_centers(spec: &BlobSpec) -> Result<(Dataset, Matrix)> {
    let BlobSpec {
        n_per_cluster,
        k,
        dim,
        separation,
        noise_sigma,
        seed,
    } = *spec;
    if k < 2 {
        return Err(Error::InvalidConfig(format!("synth_blobs needs k >= 2, got {k}")));
    }
    if !(separation > 0.0 && separation.is_finite()) {
        return Err(Error::InvalidConfig(format!("separation must be > 0, got {separation}")));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise sigma must be >= 0, got {noise_sigma}")));
    }
    if dim == 0 || n_per_cluster == 0 {
        return Err(Error::InvalidConfig("synth_blobs needs dim >= 1 and n_per_cluster >= 1".into()));
    }

    let mut rng = rng::stream(seed, Stream::Synth);
    // a box wide enough that k points fit comfortably at the requested spacing
    let side = 2.0 * separation * (k as f64).powf(1.0 / dim as f64);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    while centers.len() < k {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let cand: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..side)).collect();
            let clear = centers.iter().all(|c| {
                c.iter().zip(&cand).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() >= separation
            });
            if clear {
                centers.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::InfeasiblePlacement {
                k,
                separation,
                attempts: PLACEMENT_ATTEMPTS,
            });
        }
    }

    let noise = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE)).expect("sigma validated above");
    let mut rows: Vec<(Vec<f64>, usize)> = Vec::with_capacity(k * n_per_cluster);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..n_per_cluster {
            let point = center
                .iter()
                .map(|&c| if noise_sigma == 0.0 { c } else { c + noise.sample(&mut rng) })
                .collect();
            rows.push((point, label));
        }
    }
    rows.shuffle(&mut rng);

    let features = Matrix::from_rows(&rows.iter().map(|(p, _)| p.as_slice()).collect::<Vec<_>>())?;
    let labels = LabelVector::new(rows.iter().map(|&(_, l)| l).collect());
    let center_matrix = Matrix::from_rows(&centers)?;
    Ok((
        Dataset {
            features,
            labels: Some(labels),
            mask: None,
            meta: DatasetMeta {
                name: format!("blobs-k{k}-d{dim}-s{seed}"),
                ..DatasetMeta::default()
            },
        },
        center_matrix,
    ))
}

/// `k` Gaussian clusters of `n_per_cluster` points each, centers at mutual
/// distance at least `separation`, rows shuffled, labels attached.
pub fn synth_blobs(
    n_per_cluster: usize,
    k: usize,
    dim: usize,
    separation: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    synth_blobs_with_centers(&BlobSpec {
        n_per_cluster,
        k,
        dim,
        separation,
        noise_sigma,
        seed,
    })
    .map(|(d, _)| d)
}

/// Writes an 8-bit binary PGM whose gray level is `label + 1`, with 0 for
/// pixels that have no label.
pub fn write_label_pgm(path: &Path, labels: &[Option<usize>], height: usize, width: usize) -> Result<()> {
    if labels.len() != height * width {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: height * width,
        });
    }
    let max_label = labels.iter().flatten().max().copied().unwrap_or(0);
    if max_label + 1 > 255 {
        return Err(Error::InvalidConfig(format!(
            "{} clusters do not fit an 8-bit gray map",
            max_label + 1
        )));
    }
    let maxval = (max_label + 1).max(1);
    let mut out = Vec::with_capacity(labels.len() + 32);
    write!(out, "P5\n{width} {height}\n{maxval}\n").expect("writing to a Vec");
    out.extend(labels.iter().map(|l| l.map_or(0, |v| (v + 1) as u8)));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> PathBuf {
        PathBuf::from("mem")
    }

    #[test]
    fn csv_parses_rows() {
        let m = parse_csv_matrix("1,2\n3.5, -4\n\n5e-1,6\n", &p()).unwrap();
        assert_eq!(m, Matrix::from_rows(&[[1.0, 2.0], [3.5, -4.0], [0.5, 6.0]]).unwrap());
    }

    #[test]
    fn csv_reports_line_numbers() {
        match parse_csv_matrix("1,2\n3,x\n", &p()) {
            Err(Error::ParseLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_csv_matrix("1,2\n3\n", &p()) {
            Err(Error::ParseLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_csv_matrix("1,NaN\n", &p()).is_err());
        assert!(parse_csv_matrix("inf,1\n", &p()).is_err());
    }

    #[test]
    fn dcmx_layout_is_exact() {
        let m = Matrix::from_rows(&[[1.0, -2.0]]).unwrap();
        let bytes = encode_dcmx(&m);
        let mut expected = b"DCMX\x01".to_vec();
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-2.0f32).to_le_bytes());
        assert_eq!(bytes, expected);
        assert_eq!(decode_dcmx(&bytes, &p()).unwrap(), m);
    }

    #[test]
    fn truncated_dcmx_names_byte_counts() {
        let bytes = encode_dcmx(&Matrix::filled(2, 3, 0.5));
        match decode_dcmx(&bytes[..bytes.len() - 3], &p()) {
            Err(Error::Truncated { expected, actual, .. }) => {
                assert_eq!(expected, 13 + 24);
                assert_eq!(actual, 13 + 21);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(decode_dcmx(&bytes[..7], &p()), Err(Error::Truncated { .. })));
    }

    #[test]
    fn dcmx_rejects_bad_magic_version_and_nan() {
        let mut bytes = encode_dcmx(&Matrix::filled(1, 1, 1.0));
        bytes[0] = b'X';
        assert!(matches!(decode_dcmx(&bytes, &p()), Err(Error::ParseBinary { offset: 0, .. })));
        let mut bytes = encode_dcmx(&Matrix::filled(1, 1, 1.0));
        bytes[4] = 2;
        assert!(matches!(decode_dcmx(&bytes, &p()), Err(Error::ParseBinary { offset: 4, .. })));
        let mut bytes = encode_dcmx(&Matrix::filled(1, 2, 1.0));
        bytes[17..21].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_dcmx(&bytes, &p()), Err(Error::ParseBinary { offset: 17, .. })));
        let mut bytes = encode_dcmx(&Matrix::filled(1, 1, 1.0));
        bytes.push(0);
        assert!(decode_dcmx(&bytes, &p()).is_err());
    }

    #[test]
    fn minmax_maps_to_unit_interval() {
        let ds = Dataset::new(Matrix::from_rows(&[[0.0, 7.0], [5.0, 7.0], [10.0, 7.0]]).unwrap());
        let n = normalize(&ds, NormalizeMode::MinmaxPerBand);
        assert_eq!(n.features.column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(n.features.column(1), vec![0.0, 0.0, 0.0]);
        let back = denormalize(&n.features, n.meta.normalization.as_ref().unwrap()).unwrap();
        assert_eq!(back, ds.features);
    }

    #[test]
    fn mask_filters_and_densifies() {
        let mut ds = Dataset::new(Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap());
        ds.labels = Some(LabelVector::new(vec![0, 1, 0, 2]));
        let m = mask_unlabeled(&ds).unwrap();
        assert_eq!(m.features, Matrix::from_rows(&[[1.0], [3.0]]).unwrap());
        assert_eq!(&*m.labels.unwrap(), &[0, 1]);
        assert_eq!(m.mask.unwrap(), vec![1, 3]);
        assert_eq!(m.meta.original_len, Some(4));
    }

    #[test]
    fn mask_without_background_only_relabels() {
        let mut ds = Dataset::new(Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap());
        ds.labels = Some(LabelVector::new(vec![3, 5, 3]));
        let m = mask_unlabeled(&ds).unwrap();
        assert_eq!(m.features, ds.features);
        assert_eq!(&*m.labels.unwrap(), &[0, 1, 0]);
    }

    #[test]
    fn mask_everything_is_an_error() {
        let mut ds = Dataset::new(Matrix::from_rows(&[[0.0], [1.0]]).unwrap());
        ds.labels = Some(LabelVector::new(vec![0, 0]));
        assert!(matches!(mask_unlabeled(&ds), Err(Error::EmptyDataset)));
        assert!(mask_unlabeled(&Dataset::new(Matrix::zeros(1, 1))).is_err());
    }

    #[test]
    fn scatter_restores_original_positions() {
        let mut ds = Dataset::new(Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0]]).unwrap());
        ds.labels = Some(LabelVector::new(vec![2, 0, 1, 0, 2]));
        let m = mask_unlabeled(&ds).unwrap();
        let pred = vec![7, 8, 9];
        let full = scatter_labels(&pred, m.mask.as_ref().unwrap(), 5).unwrap();
        assert_eq!(full, vec![Some(7), None, Some(8), None, Some(9)]);
        // gathering the scattered map through the mask gives back the prediction
        let gathered: Vec<usize> = m.mask.unwrap().iter().map(|&i| full[i].unwrap()).collect();
        assert_eq!(gathered, pred);
    }

    #[test]
    fn blobs_without_noise_sit_on_centers() {
        let (ds, centers) = synth_blobs_with_centers(&BlobSpec {
            n_per_cluster: 5,
            k: 3,
            dim: 4,
            separation: 2.0,
            noise_sigma: 0.0,
            seed: 1,
        })
        .unwrap();
        let labels = ds.labels.unwrap();
        for (row, &l) in ds.features.row_iter().zip(labels.iter()) {
            assert_eq!(row, centers.row(l));
        }
    }

    #[test]
    fn blobs_are_deterministic() {
        let a = synth_blobs(10, 3, 5, 3.0, 0.5, 9).unwrap();
        let b = synth_blobs(10, 3, 5, 3.0, 0.5, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_blobs(10, 3, 5, 3.0, 0.5, 10).unwrap());
    }

    #[test]
    fn blob_preconditions() {
        assert!(synth_blobs(10, 1, 5, 3.0, 0.5, 9).is_err());
        assert!(synth_blobs(10, 3, 5, 0.0, 0.5, 9).is_err());
        assert!(synth_blobs(10, 3, 5, 3.0, -0.5, 9).is_err());
    }

    #[test]
    fn blob_centers_respect_separation() {
        let (_, c) = synth_blobs_with_centers(&BlobSpec {
            n_per_cluster: 1,
            k: 6,
            dim: 3,
            separation: 4.0,
            noise_sigma: 1.0,
            seed: 5,
        })
        .unwrap();
        for i in 0..6 {
            for j in 0..i {
                let d: f64 = c.row(i).iter().zip(c.row(j)).map(|(a, b)| (a - b).powi(2)).sum();
                assert!(d.sqrt() >= 4.0);
            }
        }
    }

    #[test]
    fn format_guessing() {
        assert_eq!(DataFormat::from_path(Path::new("a/b.dcmx")), Some(DataFormat::Dcmx));
        assert_eq!(DataFormat::from_path(Path::new("a/b.CSV")), Some(DataFormat::Csv));
        assert_eq!(DataFormat::from_path(Path::new("a/b")), None);
        assert_eq!(
            companion_labels_path(Path::new("dir/blobs.dcmx")),
            PathBuf::from("dir/blobs.labels.csv")
        );
    }
}
