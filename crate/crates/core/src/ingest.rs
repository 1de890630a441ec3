//! Dataset loading: a line-delimited JSON manifest of image records plus a
//! dense `SIMVEC01` binary file of feature vectors.
//!
//! The manifest holds one JSON object per line:
//!
//! ```text
//! {"image_id":"img-0001","account_id":"a17","country":"china"}
//! {"image_id":"img-0002","country":"iran"}
//! ```
//!
//! Line order defines the row order of the feature matrix.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Magic bytes opening every vector file.
pub const VECTOR_MAGIC: &[u8; 8] = b"SIMVEC01";
/// Magic (8) + dim as u32 (4) + count as u64 (8).
pub const VECTOR_HEADER_LEN: usize = 20;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: missing field `{field}`")]
    MissingField { field: &'static str, line: usize },
    #[error("duplicate image_id {0:?}")]
    DuplicateImageId(String),
    #[error("vector file does not start with SIMVEC01")]
    BadMagic,
    #[error("vector file is {actual} bytes, header declares {expected}")]
    HeaderMismatch { expected: u128, actual: u128 },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("invalid matrix shape: {0}")]
    InvalidShape(String),
    #[error("manifest has {records} records but the vector file has {rows} rows")]
    CountMismatch { records: usize, rows: usize },
}

impl IngestError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One image of the dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    /// Anonymized account token. Images without one take part in image
    /// networks but not in account folding.
    pub account_id: Option<String>,
    /// Lowercased country label.
    pub country: String,
    /// Row of this image in the feature matrix.
    pub row: usize,
}

/// Dense row-major `count × dim` matrix of embedding vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    count: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major data. Every value must be finite.
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self, IngestError> {
        if dim == 0 {
            return Err(IngestError::InvalidShape("dim must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(IngestError::InvalidShape(format!(
                "{} values do not divide into rows of {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(IngestError::NonFiniteValue {
                row: pos / dim,
                col: pos % dim,
            });
        }
        let count = data.len() / dim;
        Ok(FeatureMatrix { dim, count, data })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self, IngestError> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != dim {
                return Err(IngestError::InvalidShape(format!(
                    "row {i} has {} values, expected {dim}",
                    r.as_ref().len()
                )));
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            dim: self.dim,
            count: rows.len(),
            data,
        }
    }
}

/// Records and vectors checked against each other.
#[derive(Debug, Clone)]
pub struct DatasetHandle {
    pub records: Vec<ImageRecord>,
    pub matrix: FeatureMatrix,
    pub countries: BTreeSet<String>,
    pub per_country_counts: BTreeMap<String, usize>,
}

impl DatasetHandle {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Rows (in ascending order) belonging to `country`.
    pub fn rows_of_country(&self, country: &str) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| r.country == country)
            .map(|r| r.row)
            .collect()
    }

    /// Restricts the dataset to `rows`, renumbering them 0.. in the given order.
    pub fn restrict(&self, rows: &[usize]) -> DatasetHandle {
        let records = rows
            .iter()
            .enumerate()
            .map(|(new_row, &old)| ImageRecord {
                row: new_row,
                ..self.records[old].clone()
            })
            .collect();
        let matrix = self.matrix.select_rows(rows);
        assemble(records, matrix).expect("restriction preserves dataset invariants")
    }
}

#[derive(Deserialize)]
struct ManifestLine {
    image_id: Option<String>,
    #[serde(default)]
    account_id: Option<String>,
    country: Option<String>,
}

#[derive(Serialize)]
struct ManifestLineOut<'a> {
    image_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    account_id: Option<&'a str>,
    country: &'a str,
}

/// Parses manifest text. Line numbers in errors are 1-based.
pub fn parse_manifest(text: &str) -> Result<Vec<ImageRecord>, IngestError> {
    parse_manifest_lines(text.lines().map(|l| Ok(l.to_string())), Path::new("<memory>"))
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ImageRecord>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    parse_manifest_lines(BufReader::new(file).lines(), path)
}

fn parse_manifest_lines<I>(lines: I, path: &Path) -> Result<Vec<ImageRecord>, IngestError>
where
    I: Iterator<Item = std::io::Result<String>>,
{
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| IngestError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            return Err(IngestError::MalformedLine {
                line: line_no,
                reason: "empty line".into(),
            });
        }
        let parsed: ManifestLine =
            serde_json::from_str(trimmed).map_err(|e| IngestError::MalformedLine {
                line: line_no,
                reason: e.to_string(),
            })?;
        let image_id = parsed
            .image_id
            .filter(|s| !s.is_empty())
            .ok_or(IngestError::MissingField {
                field: "image_id",
                line: line_no,
            })?;
        let country = parsed
            .country
            .map(|c| c.trim().to_lowercase())
            .filter(|s| !s.is_empty())
            .ok_or(IngestError::MissingField {
                field: "country",
                line: line_no,
            })?;
        if !seen.insert(image_id.clone()) {
            return Err(IngestError::DuplicateImageId(image_id));
        }
        records.push(ImageRecord {
            image_id,
            account_id: parsed.account_id.filter(|a| !a.is_empty()),
            country,
            row: records.len(),
        });
    }
    Ok(records)
}

/// Serializes records in the manifest format; absent account ids are omitted.
pub fn manifest_to_string(records: &[ImageRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let line = ManifestLineOut {
            image_id: &r.image_id,
            account_id: r.account_id.as_deref(),
            country: &r.country,
        };
        out.push_str(&serde_json::to_string(&line).expect("manifest line serializes"));
        out.push('\n');
    }
    out
}

pub fn write_manifest(records: &[ImageRecord], path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    std::fs::write(path, manifest_to_string(records)).map_err(|e| IngestError::io(path, e))
}

/// Encodes a matrix in the `SIMVEC01` format.
pub fn encode_vectors(matrix: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(VECTOR_HEADER_LEN + 4 * matrix.data.len());
    out.extend_from_slice(VECTOR_MAGIC);
    out.extend_from_slice(&(matrix.dim as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.count as u64).to_le_bytes());
    for v in &matrix.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decodes a `SIMVEC01` buffer. The buffer length must match the header exactly.
pub fn decode_vectors(bytes: &[u8]) -> Result<FeatureMatrix, IngestError> {
    if bytes.len() < VECTOR_MAGIC.len() || &bytes[..8] != VECTOR_MAGIC {
        return Err(IngestError::BadMagic);
    }
    if bytes.len() < VECTOR_HEADER_LEN {
        return Err(IngestError::HeaderMismatch {
            expected: VECTOR_HEADER_LEN as u128,
            actual: bytes.len() as u128,
        });
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let expected = VECTOR_HEADER_LEN as u128 + 4 * dim as u128 * count as u128;
    if expected != bytes.len() as u128 {
        return Err(IngestError::HeaderMismatch {
            expected,
            actual: bytes.len() as u128,
        });
    }
    if dim == 0 || count == 0 {
        return Err(IngestError::InvalidShape(format!(
            "header declares dim={dim}, count={count}"
        )));
    }
    let data: Vec<f32> = bytes[VECTOR_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(dim, data)
}

pub fn load_vectors(path: impl AsRef<Path>) -> Result<FeatureMatrix, IngestError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| IngestError::io(path, e))?;
    decode_vectors(&bytes)
}

pub fn write_vectors(matrix: &FeatureMatrix, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    File::create(path)
        .and_then(|mut f| f.write_all(&encode_vectors(matrix)))
        .map_err(|e| IngestError::io(path, e))
}

/// Pairs records with matrix rows and derives the per-country tallies.
pub fn assemble(
    records: Vec<ImageRecord>,
    matrix: FeatureMatrix,
) -> Result<DatasetHandle, IngestError> {
    if records.len() != matrix.count() {
        return Err(IngestError::CountMismatch {
            records: records.len(),
            rows: matrix.count(),
        });
    }
    let mut seen = HashSet::with_capacity(records.len());
    let mut per_country_counts = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if r.row != i {
            return Err(IngestError::InvalidShape(format!(
                "record {:?} has row {} at position {i}",
                r.image_id, r.row
            )));
        }
        if !seen.insert(r.image_id.as_str()) {
            return Err(IngestError::DuplicateImageId(r.image_id.clone()));
        }
        *per_country_counts.entry(r.country.clone()).or_insert(0) += 1;
    }
    let countries = per_country_counts.keys().cloned().collect();
    Ok(DatasetHandle {
        records,
        matrix,
        countries,
        per_country_counts,
    })
}

/// Loads and assembles a manifest + vector file pair.
pub fn load_dataset(
    manifest: impl AsRef<Path>,
    vectors: impl AsRef<Path>,
) -> Result<DatasetHandle, IngestError> {
    let records = load_manifest(manifest)?;
    let matrix = load_vectors(vectors)?;
    assemble(records, matrix)
}
