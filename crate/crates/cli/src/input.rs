use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use piecewise_core::signal::{load_recording, Label, Recording, RecordingFormat};
use piecewise_core::wfdb::{load_wfdb, read_reference, REFERENCE_FILE};

use crate::{data_err, CliResult};

/// Recording files in `dir`, sorted: WFDB `.hea` headers, `.hdr` headers,
/// and (when a sample rate is given) bare `.csv` sample files without a
/// header sibling.
pub fn discover(dir: &Path, rate: Option<f64>) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| data_err(anyhow::anyhow!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| data_err(anyhow::anyhow!("{}: {e}", dir.display())))?
            .path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let keep = match ext {
            "hea" | "hdr" => true,
            "csv" => {
                rate.is_some()
                    && path.file_name().and_then(|n| n.to_str()) != Some(REFERENCE_FILE)
                    && !path.with_extension("hdr").exists()
            }
            _ => false,
        };
        if keep {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Reference labels shipped alongside WFDB records, if any.
pub fn reference_for(dir: &Path) -> CliResult<Option<BTreeMap<String, Label>>> {
    let p = dir.join(REFERENCE_FILE);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(read_reference(&p)?))
}

pub fn load(
    path: &Path,
    rate: Option<f64>,
    reference: Option<&BTreeMap<String, Label>>,
) -> piecewise_core::Result<Recording> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("hea") => load_wfdb(path, reference),
        Some("hdr") => load_recording(path, &RecordingFormat::HeaderCsv),
        _ => match rate {
            Some(sample_rate) => load_recording(path, &RecordingFormat::Csv { sample_rate }),
            None => Err(piecewise_core::Error::Config(format!(
                "{}: bare CSV input needs --rate",
                path.display()
            ))),
        },
    }
}
