//! File ingestion for the CLI: content sniffing, fixture formats, and the
//! provenance records that go with every file read.
//!
//! Feature inputs may be numeric CSV or XFT1 tensors; the two are told apart
//! by the magic bytes, not the file extension. Every loader returns the raw
//! bytes' hash alongside the parsed value so reports can cite their inputs.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde::Deserialize;

use hscore::curriculum::CurriculumTask;
use hscore::exponent::LocalPair;
use hscore::io::{decode_tensor, parse_feature_csv, parse_labels};
use hscore::{Error, FeatureMatrix, LabelVector};

use crate::json::{sha256_hex, InputRecord};

const XFT1_MAGIC: &[u8] = b"XFT1";

fn read_bytes(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn record(role: impl Into<String>, path: &Path, bytes: &[u8]) -> InputRecord {
    InputRecord {
        role: role.into(),
        path: path.display().to_string(),
        sha256: sha256_hex(bytes),
    }
}

fn utf8<'a>(bytes: &'a [u8], path: &Path) -> Result<&'a str, Error> {
    std::str::from_utf8(bytes).map_err(|_| Error::Parse {
        path: path.display().to_string(),
        line: 1,
        message: "file is not valid UTF-8".into(),
    })
}

/// Loads a feature matrix from CSV or XFT1, sniffed by magic bytes.
pub fn load_features(role: &str, path: &Path) -> Result<(FeatureMatrix, InputRecord), Error> {
    let bytes = read_bytes(path)?;
    let rec = record(role, path, &bytes);
    let origin = path.display().to_string();
    let features = if bytes.starts_with(XFT1_MAGIC) {
        decode_tensor(&bytes, &origin)?.into_feature_matrix()?
    } else {
        parse_feature_csv(utf8(&bytes, path)?, &origin)?
    };
    Ok((features, rec))
}

/// Loads a label vector (one non-negative integer per line).
pub fn load_labels(role: &str, path: &Path) -> Result<(LabelVector, InputRecord), Error> {
    let bytes = read_bytes(path)?;
    let rec = record(role, path, &bytes);
    let labels = parse_labels(utf8(&bytes, path)?, &path.display().to_string())?;
    Ok((labels, rec))
}

/// Loads discrete input symbols; reuses the label format and its remap rule.
/// Symbol identity is irrelevant downstream (joints are invariant to
/// relabeling), so the remapped indices are returned.
pub fn load_symbols(role: &str, path: &Path) -> Result<(Vec<usize>, InputRecord), Error> {
    let (labels, rec) = load_labels(role, path)?;
    Ok((labels.labels().to_vec(), rec))
}

/// Loads an image label set from an XFT1 rank-4 tensor.
pub fn load_images(role: &str, path: &Path) -> Result<(hscore::io::ImageLabelSet, InputRecord), Error> {
    let bytes = read_bytes(path)?;
    if !bytes.starts_with(XFT1_MAGIC) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "image input must be an XFT1 tensor of shape (m, H, W, channels)".into(),
        });
    }
    let rec = record(role, path, &bytes);
    let images = decode_tensor(&bytes, &path.display().to_string())?.into_image_set()?;
    Ok((images, rec))
}

#[derive(Debug, Deserialize)]
struct LocalPairFile {
    p0: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    epsilon: f64,
}

fn json_parse_error(path: &Path, e: &serde_json::Error) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    }
}

/// Loads a local hypothesis pair from `{"p0": [...], "p1": [...], "p2": [...],
/// "epsilon": ...}`.
pub fn load_local_pair(role: &str, path: &Path) -> Result<(LocalPair, InputRecord), Error> {
    let bytes = read_bytes(path)?;
    let rec = record(role, path, &bytes);
    let parsed: LocalPairFile =
        serde_json::from_slice(&bytes).map_err(|e| json_parse_error(path, &e))?;
    let pair = LocalPair::new(
        Array1::from_vec(parsed.p0),
        Array1::from_vec(parsed.p1),
        Array1::from_vec(parsed.p2),
        parsed.epsilon,
    )?;
    Ok((pair, rec))
}

#[derive(Debug, Deserialize)]
struct ManifestFile {
    tasks: Vec<ManifestTask>,
}

#[derive(Debug, Deserialize)]
struct ManifestTask {
    id: String,
    features: PathBuf,
    labels: PathBuf,
}

/// Loads a curriculum manifest: `{"tasks": [{"id", "features", "labels"}]}`.
///
/// Task file paths are resolved relative to the manifest's directory, so a
/// fixture directory can be moved as a unit.
pub fn load_manifest(path: &Path) -> Result<(Vec<CurriculumTask>, Vec<InputRecord>), Error> {
    let bytes = read_bytes(path)?;
    let mut records = vec![record("manifest", path, &bytes)];
    let parsed: ManifestFile =
        serde_json::from_slice(&bytes).map_err(|e| json_parse_error(path, &e))?;
    if parsed.tasks.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "manifest lists no tasks".into(),
        });
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tasks = Vec::with_capacity(parsed.tasks.len());
    for t in &parsed.tasks {
        let fpath = base.join(&t.features);
        let lpath = base.join(&t.labels);
        let (features, frec) = load_features(format!("task:{}:features", t.id).as_str(), &fpath)?;
        let (labels, lrec) = load_labels(format!("task:{}:labels", t.id).as_str(), &lpath)?;
        records.push(frec);
        records.push(lrec);
        tasks.push(CurriculumTask {
            id: t.id.clone(),
            features,
            labels,
        });
    }
    Ok((tasks, records))
}

/// Parses one `id=path` candidate specification.
pub fn parse_candidate_spec(spec: &str) -> Result<(String, PathBuf), String> {
    match spec.split_once('=') {
        Some((id, path)) if !id.is_empty() && !path.is_empty() => {
            Ok((id.to_string(), PathBuf::from(path)))
        }
        _ => Err(format!(
            "candidate `{spec}` must have the form id=path (e.g. resnet=feats.csv)"
        )),
    }
}
