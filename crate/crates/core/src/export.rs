//! On-disk formats for sequence matrices and the schema manifest.
//!
//! Binary layout (`.pwm`), all integers little-endian:
//!
//! ```text
//! magic     8 bytes  "PWMATRIX"
//! version   u32      1
//! rows      u64
//! cols      u32
//! meta_len  u32
//! meta      meta_len bytes of JSON (MatrixMeta)
//! data      rows * cols f64, column-major
//! ```

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{schema, FeatureGroup, LEVEL1_LEN};
use crate::matching::layer::{column_names, LEVEL2_FUNCTIONS};
use crate::matching::{Scenario, SequenceMatrix, MATRIX_COLS};
use crate::signal::Label;

pub const MAGIC: &[u8; 8] = b"PWMATRIX";
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "schema.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub id: String,
    pub label: Label,
    pub manifest: String,
    pub scenario: Scenario,
    pub event_threshold: Option<f64>,
    pub imputed_per_feature: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFeature {
    pub index: usize,
    pub name: String,
    pub group: FeatureGroup,
    pub starred: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestColumn {
    pub index: usize,
    pub name: String,
    /// Level-1 feature the column derives from.
    pub source: usize,
    /// `None` for level-1 columns.
    pub function: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaManifest {
    pub format_version: u32,
    pub level1_len: usize,
    pub starred_count: usize,
    pub unstarred_count: usize,
    pub column_count: usize,
    pub level2_functions: Vec<String>,
    pub level1: Vec<ManifestFeature>,
    pub columns: Vec<ManifestColumn>,
}

impl SchemaManifest {
    pub fn current() -> Self {
        let s = schema();
        let level1: Vec<ManifestFeature> = s
            .iter()
            .enumerate()
            .map(|(index, f)| ManifestFeature {
                index,
                name: f.name.clone(),
                group: f.group,
                starred: f.starred,
            })
            .collect();
        let names = column_names();
        let mut columns: Vec<ManifestColumn> = (0..LEVEL1_LEN)
            .map(|i| ManifestColumn {
                index: i,
                name: names[i].clone(),
                source: i,
                function: None,
            })
            .collect();
        for &k in crate::features::unstarred_indices() {
            for f in LEVEL2_FUNCTIONS {
                let index = columns.len();
                columns.push(ManifestColumn {
                    index,
                    name: names[index].clone(),
                    source: k,
                    function: Some(f.to_string()),
                });
            }
        }
        let starred_count = s.iter().filter(|f| f.starred).count();
        SchemaManifest {
            format_version: FORMAT_VERSION,
            level1_len: LEVEL1_LEN,
            starred_count,
            unstarred_count: LEVEL1_LEN - starred_count,
            column_count: columns.len(),
            level2_functions: LEVEL2_FUNCTIONS.iter().map(|s| s.to_string()).collect(),
            level1,
            columns,
        }
    }
}

pub fn write_manifest(dir: &Path) -> Result<std::path::PathBuf> {
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&SchemaManifest::current())
        .map_err(|e| Error::Structural(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<SchemaManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn meta_of(m: &SequenceMatrix) -> MatrixMeta {
    MatrixMeta {
        id: m.id.clone(),
        label: m.label.clone(),
        manifest: MANIFEST_FILE.to_string(),
        scenario: m.scenario,
        event_threshold: m.event_threshold,
        imputed_per_feature: m.imputed_per_feature.clone(),
    }
}

fn check_shape(m: &SequenceMatrix) -> Result<()> {
    if let Some(r) = m.rows.iter().find(|r| r.len() != MATRIX_COLS) {
        return Err(Error::Structural(format!(
            "matrix {} has a row of {} values, expected {MATRIX_COLS}",
            m.id,
            r.len()
        )));
    }
    Ok(())
}

pub fn encode_binary(m: &SequenceMatrix) -> Result<Vec<u8>> {
    check_shape(m)?;
    let meta = serde_json::to_vec(&meta_of(m)).map_err(|e| Error::Structural(e.to_string()))?;
    let mut out = Vec::with_capacity(28 + meta.len() + 8 * m.rows.len() * MATRIX_COLS);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows.len() as u64).to_le_bytes());
    out.extend_from_slice(&(MATRIX_COLS as u32).to_le_bytes());
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta);
    for j in 0..MATRIX_COLS {
        for r in &m.rows {
            out.extend_from_slice(&r[j].to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_binary(bytes: &[u8], path: &Path) -> Result<SequenceMatrix> {
    let bad = |message: String| Error::Malformed {
        path: path.to_path_buf(),
        line: 0,
        message,
    };
    let mut r = bytes;
    let mut take = |n: usize| -> Result<&[u8]> {
        if r.len() < n {
            return Err(bad("truncated matrix file".into()));
        }
        let (head, tail) = r.split_at(n);
        r = tail;
        Ok(head)
    };
    if take(8)? != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let rows = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    if cols != MATRIX_COLS {
        return Err(bad(format!("{cols} columns, expected {MATRIX_COLS}")));
    }
    let meta_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let meta: MatrixMeta =
        serde_json::from_slice(take(meta_len)?).map_err(|e| bad(format!("metadata: {e}")))?;
    let data = take(rows * cols * 8)?;
    let mut out = vec![vec![0.0; cols]; rows];
    for (k, chunk) in data.chunks_exact(8).enumerate() {
        let (j, i) = (k / rows, k % rows);
        out[i][j] = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    if bytes.len() != 28 + meta_len + data.len() {
        return Err(bad("trailing bytes after matrix data".into()));
    }
    Ok(SequenceMatrix {
        id: meta.id,
        label: meta.label,
        scenario: meta.scenario,
        event_threshold: meta.event_threshold,
        rows: out,
        imputed_per_feature: meta.imputed_per_feature,
    })
}

pub fn write_binary(m: &SequenceMatrix, path: &Path) -> Result<()> {
    let bytes = encode_binary(m)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_binary(path: &Path) -> Result<SequenceMatrix> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_binary(&bytes, path)
}

/// CSV fallback: a `# ` comment line carrying the metadata JSON, a header
/// of column names, then one line per piece. Values use Rust's shortest
/// round-trip formatting.
pub fn write_csv(m: &SequenceMatrix, path: &Path) -> Result<()> {
    check_shape(m)?;
    let io_err = |e: io::Error| Error::io(path, e);
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    let meta = serde_json::to_string(&meta_of(m)).map_err(|e| Error::Structural(e.to_string()))?;
    writeln!(w, "# {meta}").map_err(io_err)?;
    writeln!(w, "{}", column_names().join(",")).map_err(io_err)?;
    for r in &m.rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_csv(path: &Path) -> Result<SequenceMatrix> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let malformed = |line: usize, message: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut next = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((i, l)) => l.map(|l| Some((i + 1, l))).map_err(|e| Error::io(path, e)),
        }
    };
    let (_, first) = next()?.ok_or_else(|| malformed(1, "empty file".into()))?;
    let meta_json = first
        .strip_prefix("# ")
        .ok_or_else(|| malformed(1, "missing metadata line".into()))?;
    let meta: MatrixMeta =
        serde_json::from_str(meta_json).map_err(|e| malformed(1, e.to_string()))?;
    let (_, header) = next()?.ok_or_else(|| malformed(2, "missing header".into()))?;
    if header.split(',').count() != MATRIX_COLS {
        return Err(malformed(2, format!("header must list {MATRIX_COLS} columns")));
    }
    let mut rows = Vec::new();
    while let Some((no, line)) = next()? {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| malformed(no, e.to_string()))?;
        if row.len() != MATRIX_COLS {
            return Err(malformed(no, format!("{} values, expected {MATRIX_COLS}", row.len())));
        }
        rows.push(row);
    }
    Ok(SequenceMatrix {
        id: meta.id,
        label: meta.label,
        scenario: meta.scenario,
        event_threshold: meta.event_threshold,
        rows,
        imputed_per_feature: meta.imputed_per_feature,
    })
}
