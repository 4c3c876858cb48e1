//! Reader for PhysioNet WFDB records stored in format 16.
//!
//! Covers the challenge datasets: a `.hea` header whose signal lines point
//! at a `.mat` (or `.dat`) file holding interleaved little-endian 16-bit
//! samples after a byte offset (`16+24`). Labels come from header comments
//! (`#Asystole`, `#False alarm`) or from a `REFERENCE.csv` next to the
//! header (`A00001,N`).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::{Arrhythmia, Label, Lead, Recording, RhythmClass};

/// Digital value WFDB uses for a missing sample.
pub const WFDB_INVALID: i16 = i16::MIN;
pub const REFERENCE_FILE: &str = "REFERENCE.csv";

#[derive(Debug, Clone, PartialEq)]
struct SignalSpec {
    file: String,
    offset: usize,
    gain: f64,
    baseline: f64,
    name: String,
}

#[derive(Debug, Clone, PartialEq)]
struct WfdbHeader {
    record: String,
    rate: f64,
    samples: Option<usize>,
    signals: Vec<SignalSpec>,
    comments: Vec<String>,
}

fn parse_header(path: &Path, text: &str) -> Result<WfdbHeader> {
    let malformed = |line: usize, message: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut comments = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim().to_string());
        } else if !line.is_empty() {
            lines.push((i + 1, line));
        }
    }
    let (no, record_line) = *lines.first().ok_or_else(|| malformed(1, "empty header".into()))?;
    let fields: Vec<&str> = record_line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(malformed(no, "record line needs a name and a signal count".into()));
    }
    let record = fields[0].split('/').next().unwrap_or("").to_string();
    let nsig: usize = fields[1]
        .parse()
        .map_err(|_| malformed(no, format!("bad signal count `{}`", fields[1])))?;
    let rate = match fields.get(2) {
        Some(f) => f
            .split(['/', '('])
            .next()
            .unwrap_or("")
            .parse::<f64>()
            .map_err(|_| malformed(no, format!("bad sampling frequency `{f}`")))?,
        None => 250.0,
    };
    let samples = fields.get(3).and_then(|s| s.parse().ok());

    if lines.len() < 1 + nsig {
        return Err(malformed(no, format!("header declares {nsig} signals but lists {}", lines.len() - 1)));
    }
    let mut signals = Vec::with_capacity(nsig);
    for &(no, line) in &lines[1..=nsig] {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 2 {
            return Err(malformed(no, "signal line needs a file name and format".into()));
        }
        let (format, offset) = match f[1].split_once('+') {
            Some((fmt, off)) => (
                fmt,
                off.parse()
                    .map_err(|_| malformed(no, format!("bad byte offset `{off}`")))?,
            ),
            None => (f[1], 0usize),
        };
        let format = format.split([':', 'x']).next().unwrap_or("");
        if format != "16" {
            return Err(malformed(no, format!("unsupported WFDB format `{format}` (only 16)")));
        }
        let adc_zero: f64 = f.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.0);
        let (gain, baseline) = match f.get(2) {
            Some(g) => {
                let g = g.split('/').next().unwrap_or("");
                let (gain, base) = match g.split_once('(') {
                    Some((gain, rest)) => {
                        let base = rest.trim_end_matches(')');
                        let base: f64 = base
                            .parse()
                            .map_err(|_| malformed(no, format!("bad baseline `{base}`")))?;
                        (gain, Some(base))
                    }
                    None => (g, None),
                };
                let gain: f64 = gain
                    .parse()
                    .map_err(|_| malformed(no, format!("bad gain `{gain}`")))?;
                (if gain == 0.0 { 200.0 } else { gain }, base.unwrap_or(adc_zero))
            }
            None => (200.0, adc_zero),
        };
        let name = if f.len() > 8 {
            f[8..].join(" ")
        } else {
            format!("ch{}", signals.len() + 1)
        };
        signals.push(SignalSpec {
            file: f[0].to_string(),
            offset,
            gain,
            baseline,
            name,
        });
    }
    Ok(WfdbHeader {
        record,
        rate,
        samples,
        signals,
        comments,
    })
}

fn label_from_comments(comments: &[String]) -> Option<Label> {
    let arrhythmia = comments.iter().find_map(|c| c.parse::<Arrhythmia>().ok())?;
    let alarm = comments.iter().find_map(|c| match c.to_ascii_lowercase().as_str() {
        "true alarm" => Some(true),
        "false alarm" => Some(false),
        _ => None,
    })?;
    Some(Label::Alarm { arrhythmia, alarm })
}

/// `record -> label` from a reference CSV (`A00001,N`).
pub fn read_reference(path: &Path) -> Result<BTreeMap<String, Label>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id, label) = line.split_once(',').ok_or_else(|| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message: "expected `record,label`".into(),
        })?;
        let label: RhythmClass = label.parse().map_err(|message| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        })?;
        out.insert(id.trim().to_string(), Label::Rhythm(label));
    }
    Ok(out)
}

/// Loads a WFDB record from its `.hea` path. Missing samples are replaced
/// by the previous valid value of the same signal (0 before the first).
pub fn load_wfdb(path: &Path, reference: Option<&BTreeMap<String, Label>>) -> Result<Recording> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = parse_header(path, &text)?;

    // Signals sharing a file are interleaved in declaration order.
    let mut by_file: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (k, s) in header.signals.iter().enumerate() {
        by_file.entry(s.file.as_str()).or_default().push(k);
    }
    let mut leads: Vec<Option<Lead>> = vec![None; header.signals.len()];
    for (file, members) in by_file {
        let data_path = path.with_file_name(file);
        let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
        let offset = header.signals[members[0]].offset;
        let body = bytes.get(offset..).ok_or_else(|| {
            Error::Structural(format!("{}: shorter than its byte offset", data_path.display()))
        })?;
        let width = members.len();
        let mut frames = body.len() / (2 * width);
        if let Some(n) = header.samples {
            frames = frames.min(n);
        }
        for (col, &k) in members.iter().enumerate() {
            let spec = &header.signals[k];
            let mut last = 0.0;
            let samples = (0..frames)
                .map(|i| {
                    let at = 2 * (i * width + col);
                    let d = i16::from_le_bytes([body[at], body[at + 1]]);
                    if d != WFDB_INVALID {
                        last = (d as f64 - spec.baseline) / spec.gain;
                    }
                    last
                })
                .collect();
            leads[k] = Some(Lead {
                name: spec.name.clone(),
                samples,
            });
        }
    }
    let label = label_from_comments(&header.comments)
        .or_else(|| reference.and_then(|r| r.get(&header.record).copied()))
        .unwrap_or_default();
    Recording::new(
        header.record,
        header.rate,
        leads.into_iter().map(|l| l.expect("every signal read")).collect(),
        label,
    )
}
