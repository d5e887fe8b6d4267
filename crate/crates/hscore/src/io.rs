//! Data ingestion: CSV feature matrices, label files, and the XFT1 tensor
//! container.
//!
//! ## XFT1 layout
//!
//! ```text
//! offset   size       field
//! ------   --------   -----------------------------------------------
//! 0        4          magic bytes "XFT1"
//! 4        1          dtype code: 0 = f32, 1 = f64, 2 = u8, 3 = i64
//! 5        1          rank r (1..=8)
//! 6        8 * r      dims, little-endian u64, outermost dimension first
//! 6 + 8r   n * size   payload, row-major, little-endian
//! ```
//!
//! Reads and writes round-trip bit-exactly for every dtype. Readers validate
//! the magic, dtype code, rank, and exact payload length before touching the
//! data, and report distinct errors for each failure so a bad file can be
//! diagnosed from the message alone.
//!
//! CSV ingestion accepts '.'-decimal numeric text, comma separators, an
//! optional header row (auto-detected: a first row with any non-numeric cell
//! is treated as a header), and both UNIX and DOS line endings. Label files
//! carry one non-negative integer per line; non-contiguous label values are
//! remapped to 0..C-1 and the mapping is recorded.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::{Array2, Array4};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// core wrapper types
// ---------------------------------------------------------------------------

/// A dense m x k matrix of finite feature values, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
}

impl FeatureMatrix {
    /// Wraps a matrix, enforcing m >= 2, k >= 1, and finiteness.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (m, k) = values.dim();
        if m < 2 || k < 1 {
            return Err(Error::Shape {
                context: "FeatureMatrix".into(),
                message: format!("need at least 2 rows and 1 column, got {m}x{k}"),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "feature matrix".into(),
            });
        }
        Ok(Self { values })
    }

    /// Number of samples (rows).
    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    /// Feature dimension (columns).
    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    /// The underlying matrix.
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Consumes the wrapper.
    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }
}

/// Class labels for m samples, remapped to the contiguous range 0..C-1.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    labels: Vec<usize>,
    class_count: usize,
    /// `original_values[c]` is the raw label that was remapped to class `c`;
    /// `None` when the input was already contiguous from zero.
    original_values: Option<Vec<i64>>,
}

impl LabelVector {
    /// Builds a label vector from raw integer labels, remapping
    /// non-contiguous values and recording the mapping.
    pub fn from_raw(raw: &[i64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Shape {
                context: "LabelVector".into(),
                message: "no labels".into(),
            });
        }
        if let Some(&bad) = raw.iter().find(|&&v| v < 0) {
            return Err(Error::InvalidParameter {
                message: format!("labels must be non-negative, got {bad}"),
            });
        }
        let mut distinct: Vec<i64> = raw.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let contiguous = distinct
            .iter()
            .enumerate()
            .all(|(i, &v)| v == i as i64);
        let labels: Vec<usize> = raw
            .iter()
            .map(|v| distinct.binary_search(v).expect("value seen above"))
            .collect();
        Ok(Self {
            labels,
            class_count: distinct.len(),
            original_values: if contiguous { None } else { Some(distinct) },
        })
    }

    /// Builds from already-contiguous class indices (every class in
    /// 0..=max(labels) must occur).
    pub fn from_classes(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Shape {
                context: "LabelVector".into(),
                message: "no labels".into(),
            });
        }
        let class_count = labels.iter().max().unwrap() + 1;
        let mut seen = vec![false; class_count];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(class) = seen.iter().position(|&s| !s) {
            return Err(Error::EmptyClass { class });
        }
        Ok(Self {
            labels,
            class_count,
            original_values: None,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct classes C; every class in 0..C occurs.
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Raw label value for each class, when the input was remapped.
    pub fn original_values(&self) -> Option<&[i64]> {
        self.original_values.as_deref()
    }

    /// Per-class sample counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// A stack of m images, shape m x H x W x channels, channels 1 or 3.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageLabelSet {
    pixels: Array4<f64>,
}

impl ImageLabelSet {
    pub fn new(pixels: Array4<f64>) -> Result<Self> {
        let (m, h, w, ch) = pixels.dim();
        if m < 2 || h == 0 || w == 0 {
            return Err(Error::Shape {
                context: "ImageLabelSet".into(),
                message: format!("need at least 2 images with nonzero extent, got {m}x{h}x{w}x{ch}"),
            });
        }
        if ch != 1 && ch != 3 {
            return Err(Error::Shape {
                context: "ImageLabelSet".into(),
                message: format!("channels must be 1 or 3, got {ch}"),
            });
        }
        if !pixels.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "image tensor".into(),
            });
        }
        Ok(Self { pixels })
    }

    pub fn pixels(&self) -> &Array4<f64> {
        &self.pixels
    }

    /// (m, height, width, channels)
    pub fn dim(&self) -> (usize, usize, usize, usize) {
        self.pixels.dim()
    }
}

// ---------------------------------------------------------------------------
// XFT1 tensor container
// ---------------------------------------------------------------------------

const MAGIC: [u8; 4] = *b"XFT1";
const MAX_RANK: u8 = 8;

/// Element storage of a [`Tensor`].
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    U8(Vec<u8>),
    I64(Vec<i64>),
}

impl TensorData {
    fn dtype_code(&self) -> u8 {
        match self {
            TensorData::F32(_) => 0,
            TensorData::F64(_) => 1,
            TensorData::U8(_) => 2,
            TensorData::I64(_) => 3,
        }
    }

    fn elem_size(&self) -> usize {
        match self {
            TensorData::F32(_) => 4,
            TensorData::F64(_) => 8,
            TensorData::U8(_) => 1,
            TensorData::I64(_) => 8,
        }
    }

    fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
            TensorData::U8(v) => v.len(),
            TensorData::I64(v) => v.len(),
        }
    }
}

/// A rank-1..8 dense tensor in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: TensorData,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: TensorData) -> Result<Self> {
        if shape.is_empty() || shape.len() > MAX_RANK as usize {
            return Err(Error::Shape {
                context: "Tensor".into(),
                message: format!("rank must be 1..=8, got {}", shape.len()),
            });
        }
        let elems = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Shape {
                context: "Tensor".into(),
                message: "dimension product overflows".into(),
            })?;
        if elems != data.len() {
            return Err(Error::Shape {
                context: "Tensor".into(),
                message: format!("shape {:?} implies {} elements, data has {}", shape, elems, data.len()),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    /// Converts a rank-2 tensor to a feature matrix (integers widen to f64).
    pub fn into_feature_matrix(self) -> Result<FeatureMatrix> {
        if self.shape.len() != 2 {
            return Err(Error::Shape {
                context: "feature tensor".into(),
                message: format!("expected rank 2, got rank {}", self.shape.len()),
            });
        }
        let (m, k) = (self.shape[0], self.shape[1]);
        let flat: Vec<f64> = match self.data {
            TensorData::F32(v) => v.into_iter().map(f64::from).collect(),
            TensorData::F64(v) => v,
            TensorData::U8(v) => v.into_iter().map(f64::from).collect(),
            TensorData::I64(v) => v.into_iter().map(|x| x as f64).collect(),
        };
        let arr = Array2::from_shape_vec((m, k), flat).expect("length checked at construction");
        FeatureMatrix::new(arr)
    }

    /// Converts a rank-4 tensor (m, H, W, channels) to an image set.
    pub fn into_image_set(self) -> Result<ImageLabelSet> {
        if self.shape.len() != 4 {
            return Err(Error::Shape {
                context: "image tensor".into(),
                message: format!("expected rank 4 (m, H, W, channels), got rank {}", self.shape.len()),
            });
        }
        let dims = (self.shape[0], self.shape[1], self.shape[2], self.shape[3]);
        let flat: Vec<f64> = match self.data {
            TensorData::F32(v) => v.into_iter().map(f64::from).collect(),
            TensorData::F64(v) => v,
            TensorData::U8(v) => v.into_iter().map(f64::from).collect(),
            TensorData::I64(v) => v.into_iter().map(|x| x as f64).collect(),
        };
        let arr = Array4::from_shape_vec(dims, flat).expect("length checked at construction");
        ImageLabelSet::new(arr)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads an XFT1 tensor file.
pub fn read_tensor_binary(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    decode_tensor(&bytes, &path.display().to_string())
}

/// Decodes an XFT1 byte stream; `origin` names the source in errors.
pub fn decode_tensor(bytes: &[u8], origin: &str) -> Result<Tensor> {
    let header_err = |found: usize| Error::Truncated {
        path: origin.to_string(),
        expected: 6,
        found,
    };
    if bytes.len() < 6 {
        return Err(header_err(bytes.len()));
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic {
            path: origin.to_string(),
            found: magic,
        });
    }
    let dtype = bytes[4];
    let rank = bytes[5];
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::UnsupportedRank {
            path: origin.to_string(),
            rank,
        });
    }
    let elem_size: usize = match dtype {
        0 => 4,
        1 => 8,
        2 => 1,
        3 => 8,
        code => {
            return Err(Error::UnsupportedDtype {
                path: origin.to_string(),
                code,
            })
        }
    };
    let dims_end = 6 + 8 * rank as usize;
    if bytes.len() < dims_end {
        return Err(Error::Truncated {
            path: origin.to_string(),
            expected: dims_end,
            found: bytes.len(),
        });
    }
    let mut shape = Vec::with_capacity(rank as usize);
    for i in 0..rank as usize {
        let off = 6 + 8 * i;
        let dim = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        shape.push(usize::try_from(dim).map_err(|_| Error::Shape {
            context: origin.to_string(),
            message: format!("dimension {dim} does not fit in usize"),
        })?);
    }
    let elems = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Shape {
            context: origin.to_string(),
            message: "dimension product overflows".into(),
        })?;
    let payload_len = elems.checked_mul(elem_size).ok_or_else(|| Error::Shape {
        context: origin.to_string(),
        message: "payload size overflows".into(),
    })?;
    let expected_total = dims_end + payload_len;
    if bytes.len() < expected_total {
        return Err(Error::Truncated {
            path: origin.to_string(),
            expected: expected_total,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected_total {
        return Err(Error::TrailingBytes {
            path: origin.to_string(),
            extra: bytes.len() - expected_total,
        });
    }
    let payload = &bytes[dims_end..];
    let data = match dtype {
        0 => TensorData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        1 => TensorData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        2 => TensorData::U8(payload.to_vec()),
        3 => TensorData::I64(
            payload
                .chunks_exact(8)
                .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        _ => unreachable!("dtype validated above"),
    };
    Tensor::new(shape, data)
}

/// Serializes a tensor to the XFT1 byte layout.
pub fn encode_tensor(tensor: &Tensor) -> Vec<u8> {
    let elem_size = tensor.data.elem_size();
    let mut out = Vec::with_capacity(6 + 8 * tensor.shape.len() + tensor.data.len() * elem_size);
    out.extend_from_slice(&MAGIC);
    out.push(tensor.data.dtype_code());
    out.push(tensor.shape.len() as u8);
    for &d in &tensor.shape {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    match &tensor.data {
        TensorData::F32(v) => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        TensorData::F64(v) => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        TensorData::U8(v) => out.extend_from_slice(v),
        TensorData::I64(v) => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

/// Writes an XFT1 tensor file.
pub fn write_tensor_binary(path: &Path, tensor: &Tensor) -> Result<()> {
    let bytes = encode_tensor(tensor);
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(&bytes).map_err(|e| io_err(path, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// CSV and label text files
// ---------------------------------------------------------------------------

/// Reads a numeric CSV into a feature matrix.
///
/// Rows must all have the same number of cells; blank lines are skipped. A
/// first row containing any cell that does not parse as a finite number is
/// treated as a header and skipped.
pub fn read_feature_csv(path: &Path) -> Result<FeatureMatrix> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_feature_csv(&text, &path.display().to_string())
}

/// CSV parser behind [`read_feature_csv`]; `origin` names the source in errors.
pub fn parse_feature_csv(text: &str, origin: &str) -> Result<FeatureMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut saw_data_row = false;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let mut parsed = Vec::with_capacity(cells.len());
        let mut bad_cell: Option<(usize, &str)> = None;
        for (col, cell) in cells.iter().enumerate() {
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => parsed.push(v),
                _ => {
                    bad_cell = Some((col + 1, cell.trim()));
                    break;
                }
            }
        }
        if let Some((col, cell)) = bad_cell {
            if !saw_data_row && width.is_none() {
                // Header row: remember the width it implies but keep no data.
                width = Some(cells.len());
                continue;
            }
            return Err(Error::Parse {
                path: origin.to_string(),
                line: line_no,
                message: format!("column {col}: cannot parse {cell:?} as a finite number"),
            });
        }
        if let Some(w) = width {
            if parsed.len() != w {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: line_no,
                    message: format!("row has {} cells, expected {}", parsed.len(), w),
                });
            }
        } else {
            width = Some(parsed.len());
        }
        saw_data_row = true;
        rows.push(parsed);
    }
    let k = width.unwrap_or(0);
    if rows.is_empty() || k == 0 {
        return Err(Error::Parse {
            path: origin.to_string(),
            line: 1,
            message: "no data rows".into(),
        });
    }
    let m = rows.len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let arr = Array2::from_shape_vec((m, k), flat).expect("ragged rows rejected above");
    FeatureMatrix::new(arr)
}

/// Reads a label file: one non-negative integer per line, blank lines skipped.
pub fn read_labels(path: &Path) -> Result<LabelVector> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_labels(&text, &path.display().to_string())
}

/// Parser behind [`read_labels`].
pub fn parse_labels(text: &str, origin: &str) -> Result<LabelVector> {
    let mut raw = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        let value: i64 = line.parse().map_err(|_| Error::Parse {
            path: origin.to_string(),
            line: line_no,
            message: format!("cannot parse {line:?} as an integer label"),
        })?;
        if value < 0 {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: line_no,
                message: format!("labels must be non-negative, got {value}"),
            });
        }
        raw.push(value);
    }
    if raw.is_empty() {
        return Err(Error::Parse {
            path: origin.to_string(),
            line: 1,
            message: "no labels".into(),
        });
    }
    LabelVector::from_raw(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tensor_f64(shape: Vec<usize>, data: Vec<f64>) -> Tensor {
        Tensor::new(shape, TensorData::F64(data)).unwrap()
    }

    #[test]
    fn xft1_round_trip_is_bit_exact_for_every_dtype() {
        let cases = vec![
            Tensor::new(vec![3], TensorData::F32(vec![1.5, -0.0, f32::MIN_POSITIVE])).unwrap(),
            tensor_f64(vec![2, 2], vec![1.0, -2.25, 1e-300, 0.1]),
            Tensor::new(vec![2, 1, 2], TensorData::U8(vec![0, 255, 7, 128])).unwrap(),
            Tensor::new(vec![1, 2, 1, 2], TensorData::I64(vec![i64::MIN, -1, 0, i64::MAX]))
                .unwrap(),
        ];
        for t in cases {
            let bytes = encode_tensor(&t);
            let back = decode_tensor(&bytes, "mem").unwrap();
            assert_eq!(t, back);
            // Bit-exact: re-encoding reproduces the same bytes.
            assert_eq!(bytes, encode_tensor(&back));
        }
    }

    #[test]
    fn xft1_rejects_bad_magic() {
        let mut bytes = encode_tensor(&tensor_f64(vec![1], vec![1.0]));
        bytes[0] = b'Y';
        assert!(matches!(
            decode_tensor(&bytes, "mem").unwrap_err(),
            Error::BadMagic { .. }
        ));
    }

    #[test]
    fn xft1_rejects_unknown_dtype() {
        let mut bytes = encode_tensor(&tensor_f64(vec![1], vec![1.0]));
        bytes[4] = 9;
        assert!(matches!(
            decode_tensor(&bytes, "mem").unwrap_err(),
            Error::UnsupportedDtype { code: 9, .. }
        ));
    }

    #[test]
    fn xft1_rejects_truncation_and_trailing_bytes() {
        let bytes = encode_tensor(&tensor_f64(vec![2], vec![1.0, 2.0]));
        assert!(matches!(
            decode_tensor(&bytes[..bytes.len() - 3], "mem").unwrap_err(),
            Error::Truncated { .. }
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(
            decode_tensor(&extra, "mem").unwrap_err(),
            Error::TrailingBytes { extra: 1, .. }
        ));
    }

    #[test]
    fn xft1_rejects_rank_zero_and_rank_nine() {
        let mut bytes = encode_tensor(&tensor_f64(vec![1], vec![1.0]));
        bytes[5] = 0;
        assert!(matches!(
            decode_tensor(&bytes, "mem").unwrap_err(),
            Error::UnsupportedRank { rank: 0, .. }
        ));
        bytes[5] = 9;
        assert!(matches!(
            decode_tensor(&bytes, "mem").unwrap_err(),
            Error::UnsupportedRank { rank: 9, .. }
        ));
    }

    #[test]
    fn csv_parses_header_dos_endings_and_blank_lines() {
        let text = "a,b\r\n1.5,2\r\n\r\n-0.25,3e-2\n";
        let fm = parse_feature_csv(text, "mem").unwrap();
        assert_eq!(fm.n_samples(), 2);
        assert_eq!(fm.n_features(), 2);
        assert_eq!(fm.values()[[0, 0]], 1.5);
        assert_eq!(fm.values()[[1, 1]], 3e-2);
    }

    #[test]
    fn csv_rejects_ragged_rows_with_line_number() {
        let text = "1,2\n3\n";
        match parse_feature_csv(text, "mem").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_non_numeric_cell_past_header() {
        let text = "1,2\n3,oops\n";
        match parse_feature_csv(text, "mem").unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("column 2"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_nan_token() {
        let text = "1,2\nnan,3\n";
        assert!(parse_feature_csv(text, "mem").is_err());
    }

    #[test]
    fn csv_and_binary_agree_within_one_ulp_of_f32() {
        // The same decimal values stored as f32 binary and as CSV text.
        let decimals = ["0.1", "3.14159", "-2.5e-3", "1234.5678"];
        let f32s: Vec<f32> = decimals.iter().map(|s| s.parse().unwrap()).collect();
        let tensor = Tensor::new(vec![2, 2], TensorData::F32(f32s.clone())).unwrap();
        let bytes = encode_tensor(&tensor);
        let fm_bin = decode_tensor(&bytes, "mem")
            .unwrap()
            .into_feature_matrix()
            .unwrap();
        let csv = format!(
            "{},{}\n{},{}\n",
            decimals[0], decimals[1], decimals[2], decimals[3]
        );
        let fm_csv = parse_feature_csv(&csv, "mem").unwrap();
        for (a, b) in fm_bin.values().iter().zip(fm_csv.values().iter()) {
            let ulp = (*a as f32).to_bits().abs_diff((*b as f32).to_bits());
            assert!(ulp <= 1, "binary {a} vs csv {b} differ by {ulp} f32 ulps");
        }
    }

    #[test]
    fn labels_remap_non_contiguous_and_record_mapping() {
        let lv = parse_labels("5\n2\n5\n9\n2\n", "mem").unwrap();
        assert_eq!(lv.class_count(), 3);
        assert_eq!(lv.labels(), &[1, 0, 1, 2, 0]);
        assert_eq!(lv.original_values().unwrap(), &[2, 5, 9]);
    }

    #[test]
    fn contiguous_labels_record_no_mapping() {
        let lv = parse_labels("0\n1\n1\n0\n", "mem").unwrap();
        assert_eq!(lv.class_count(), 2);
        assert!(lv.original_values().is_none());
    }

    #[test]
    fn labels_reject_negative_with_line_number() {
        match parse_labels("0\n-3\n", "mem").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn feature_matrix_rejects_non_finite_and_tiny_shapes() {
        assert!(FeatureMatrix::new(array![[1.0, f64::NAN], [0.0, 1.0]]).is_err());
        assert!(FeatureMatrix::new(array![[1.0, 2.0]]).is_err());
    }

    #[test]
    fn image_set_validates_channels() {
        use ndarray::Array4;
        let ok = Array4::<f64>::zeros((2, 2, 2, 3));
        assert!(ImageLabelSet::new(ok).is_ok());
        let bad = Array4::<f64>::zeros((2, 2, 2, 2));
        assert!(ImageLabelSet::new(bad).is_err());
    }
}
