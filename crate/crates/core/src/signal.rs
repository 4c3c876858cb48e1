//! Recording model, on-disk format and lead selection.
//!
//! A recording is stored as two or three sibling files sharing a stem:
//!
//! ```text
//! a103l.hdr     key=value lines: sample_rate, leads (comma separated), label
//! a103l.csv     one sample per row, one column per lead, no header row
//! a103l.label   optional; used when the header carries no label
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Alarm types of the false-alarm (2015-style) dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Arrhythmia {
    /// Asystole
    #[serde(rename = "ASY")]
    Asy,
    /// Extreme bradycardia
    #[serde(rename = "EBR")]
    Ebr,
    /// Extreme tachycardia
    #[serde(rename = "ET")]
    Et,
    /// Ventricular flutter / fibrillation
    #[serde(rename = "VF")]
    Vf,
    /// Ventricular tachycardia
    #[serde(rename = "VT")]
    Vt,
}

impl Arrhythmia {
    pub const ALL: [Arrhythmia; 5] = [
        Arrhythmia::Asy,
        Arrhythmia::Ebr,
        Arrhythmia::Et,
        Arrhythmia::Vf,
        Arrhythmia::Vt,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Arrhythmia::Asy => "ASY",
            Arrhythmia::Ebr => "EBR",
            Arrhythmia::Et => "ET",
            Arrhythmia::Vf => "VF",
            Arrhythmia::Vt => "VT",
        }
    }
}

impl FromStr for Arrhythmia {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ASY" | "ASYSTOLE" => Ok(Arrhythmia::Asy),
            "EBR" | "BRADYCARDIA" => Ok(Arrhythmia::Ebr),
            "ET" | "TACHYCARDIA" => Ok(Arrhythmia::Et),
            "VF" | "VFB" | "VENTRICULAR_FLUTTER_FIB" => Ok(Arrhythmia::Vf),
            "VT" | "VTA" | "VENTRICULAR_TACHYCARDIA" => Ok(Arrhythmia::Vt),
            other => Err(format!("unknown arrhythmia type `{other}`")),
        }
    }
}

/// Rhythm classes of the AF (2017-style) dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RhythmClass {
    Normal,
    AFib,
    Other,
    Noise,
}

impl RhythmClass {
    pub const ALL: [RhythmClass; 4] = [
        RhythmClass::Normal,
        RhythmClass::AFib,
        RhythmClass::Other,
        RhythmClass::Noise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RhythmClass::Normal => "Normal",
            RhythmClass::AFib => "AFib",
            RhythmClass::Other => "Other",
            RhythmClass::Noise => "Noise",
        }
    }
}

impl FromStr for RhythmClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        // PhysioNet 2017 reference files use the single-letter codes.
        match s.trim() {
            "Normal" | "normal" | "N" => Ok(RhythmClass::Normal),
            "AFib" | "afib" | "AF" | "A" => Ok(RhythmClass::AFib),
            "Other" | "other" | "O" => Ok(RhythmClass::Other),
            "Noise" | "noise" | "~" => Ok(RhythmClass::Noise),
            other => Err(format!("unknown rhythm class `{other}`")),
        }
    }
}

/// Class tag attached to a recording.
///
/// Text form: `VT:true` / `ASY:false` for alarm records (true = real alarm),
/// `Normal` / `AFib` / `Other` / `Noise` for rhythm records, empty when unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Label {
    Alarm { arrhythmia: Arrhythmia, alarm: bool },
    Rhythm(RhythmClass),
    #[default]
    Unlabeled,
}

impl Label {
    pub fn is_labeled(&self) -> bool {
        !matches!(self, Label::Unlabeled)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Alarm { arrhythmia, alarm } => write!(f, "{}:{}", arrhythmia.code(), alarm),
            Label::Rhythm(class) => f.write_str(class.name()),
            Label::Unlabeled => Ok(()),
        }
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Label::Unlabeled);
        }
        if let Some((kind, alarm)) = s.split_once(':') {
            let arrhythmia = kind.parse()?;
            let alarm = match alarm.trim().to_ascii_lowercase().as_str() {
                "true" | "1" | "t" => true,
                "false" | "0" | "f" => false,
                other => return Err(format!("alarm flag must be true/false, got `{other}`")),
            };
            return Ok(Label::Alarm { arrhythmia, alarm });
        }
        s.parse().map(Label::Rhythm)
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lead {
    pub name: String,
    pub samples: Vec<f64>,
}

/// A multi-lead recording. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    id: String,
    sample_rate: f64,
    leads: Vec<Lead>,
    label: Label,
}

impl Recording {
    pub fn new(id: impl Into<String>, sample_rate: f64, leads: Vec<Lead>, label: Label) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::Structural(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        let Some(first) = leads.first() else {
            return Err(Error::Structural("recording has no leads".into()));
        };
        let len = first.samples.len();
        if len == 0 {
            return Err(Error::Structural("recording has no samples".into()));
        }
        if let Some(bad) = leads.iter().find(|l| l.samples.len() != len) {
            return Err(Error::Structural(format!(
                "lead `{}` has {} samples, expected {len}",
                bad.name,
                bad.samples.len()
            )));
        }
        Ok(Recording {
            id: id.into(),
            sample_rate,
            leads,
            label,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn leads(&self) -> &[Lead] {
        &self.leads
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn len(&self) -> usize {
        self.leads[0].samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lead(&self, name: &str) -> Option<&Lead> {
        self.leads.iter().find(|l| l.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeadSelection {
    pub chosen_lead: String,
    /// 0 = II, 1 = I, 2 = aVF, 3 = V, 4 = first lead in file order.
    pub fallback_rank: u8,
}

const LEAD_PRIORITY: [&str; 4] = ["II", "I", "aVF", "V"];

/// Picks the working ECG lead: II, then I, aVF, V, then whatever comes first.
pub fn select_lead(rec: &Recording) -> LeadSelection {
    for (rank, wanted) in LEAD_PRIORITY.iter().enumerate() {
        if let Some(lead) = rec
            .leads
            .iter()
            .find(|l| l.name.trim().eq_ignore_ascii_case(wanted))
        {
            return LeadSelection {
                chosen_lead: lead.name.clone(),
                fallback_rank: rank as u8,
            };
        }
    }
    LeadSelection {
        chosen_lead: rec.leads[0].name.clone(),
        fallback_rank: LEAD_PRIORITY.len() as u8,
    }
}

/// How to interpret the path given to [`load_recording`].
#[derive(Debug, Clone, PartialEq)]
pub enum RecordingFormat {
    /// `path` is a `.hdr` file; samples live in the sibling `.csv`.
    HeaderCsv,
    /// `path` is a bare samples CSV. Leads are named `ch1..chN`.
    Csv { sample_rate: f64 },
}

#[derive(Debug, Default)]
struct Header {
    sample_rate: Option<f64>,
    leads: Option<Vec<String>>,
    label: Option<Label>,
    samples: Option<String>,
}

fn parse_header(path: &Path, text: &str) -> Result<Header> {
    let mut header = Header::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |message: String| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| malformed(format!("expected key=value, got `{line}`")))?;
        let value = value.trim();
        match key.trim() {
            "sample_rate" => {
                let rate: f64 = value
                    .parse()
                    .map_err(|_| malformed(format!("bad sample_rate `{value}`")))?;
                header.sample_rate = Some(rate);
            }
            "leads" => {
                header.leads = Some(value.split(',').map(|s| s.trim().to_string()).collect());
            }
            "label" => header.label = Some(value.parse().map_err(malformed)?),
            "samples" => header.samples = Some(value.to_string()),
            // Unknown keys are tolerated so headers can carry provenance notes.
            _ => {}
        }
    }
    Ok(header)
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses a samples CSV into per-lead columns. Every row must have the same
/// number of columns.
pub fn parse_samples_csv(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        match width {
            None => {
                width = Some(fields.len());
                columns = vec![Vec::new(); fields.len()];
            }
            Some(w) if w != fields.len() => {
                return Err(Error::Structural(format!(
                    "{}:{}: row has {} columns, expected {w}",
                    path.display(),
                    i + 1,
                    fields.len()
                )));
            }
            Some(_) => {}
        }
        for (col, field) in columns.iter_mut().zip(&fields) {
            let v: f64 = field.trim().parse().map_err(|_| Error::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("not a number: `{}`", field.trim()),
            })?;
            col.push(v);
        }
    }
    if columns.is_empty() {
        return Err(Error::Structural(format!("{}: no samples", path.display())));
    }
    Ok(columns)
}

fn stem_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn sidecar_label(path: &Path) -> Result<Option<Label>> {
    let label_path = path.with_extension("label");
    if !label_path.exists() {
        return Ok(None);
    }
    let text = read_to_string(&label_path)?;
    let first = text.lines().next().unwrap_or("");
    first
        .parse()
        .map(Some)
        .map_err(|message| Error::Malformed {
            path: label_path,
            line: 1,
            message,
        })
}

pub fn load_recording(path: &Path, format: &RecordingFormat) -> Result<Recording> {
    match format {
        RecordingFormat::HeaderCsv => {
            let header = parse_header(path, &read_to_string(path)?)?;
            let samples_path = match &header.samples {
                Some(name) => path.with_file_name(name),
                None => path.with_extension("csv"),
            };
            let columns = parse_samples_csv(&samples_path, &read_to_string(&samples_path)?)?;
            let rate = header.sample_rate.ok_or_else(|| {
                Error::Structural(format!("{}: missing sample_rate", path.display()))
            })?;
            let names = header
                .leads
                .unwrap_or_else(|| (1..=columns.len()).map(|i| format!("ch{i}")).collect());
            if names.len() != columns.len() {
                return Err(Error::Structural(format!(
                    "{}: header names {} leads but samples have {} columns",
                    path.display(),
                    names.len(),
                    columns.len()
                )));
            }
            let label = match header.label {
                Some(label) => label,
                None => sidecar_label(path)?.unwrap_or_default(),
            };
            let leads = names
                .into_iter()
                .zip(columns)
                .map(|(name, samples)| Lead { name, samples })
                .collect();
            Recording::new(stem_id(path), rate, leads, label)
        }
        RecordingFormat::Csv { sample_rate } => {
            let columns = parse_samples_csv(path, &read_to_string(path)?)?;
            let leads = columns
                .into_iter()
                .enumerate()
                .map(|(i, samples)| Lead {
                    name: format!("ch{}", i + 1),
                    samples,
                })
                .collect();
            let label = sidecar_label(path)?.unwrap_or_default();
            Recording::new(stem_id(path), *sample_rate, leads, label)
        }
    }
}

/// Writes `<dir>/<id>.hdr` and `<dir>/<id>.csv`. Returns the header path.
///
/// Samples are written with Rust's shortest round-trip float formatting, so
/// [`load_recording`] reproduces them exactly.
pub fn write_recording(dir: &Path, rec: &Recording) -> Result<PathBuf> {
    let hdr = dir.join(format!("{}.hdr", rec.id));
    let csv = dir.join(format!("{}.csv", rec.id));
    let names: Vec<&str> = rec.leads.iter().map(|l| l.name.as_str()).collect();
    let header = format!(
        "sample_rate={}\nleads={}\nlabel={}\n",
        rec.sample_rate,
        names.join(","),
        rec.label
    );
    fs::write(&hdr, header).map_err(|e| Error::io(&hdr, e))?;

    let mut body = String::with_capacity(rec.len() * 12 * rec.leads.len());
    for i in 0..rec.len() {
        for (k, lead) in rec.leads.iter().enumerate() {
            if k > 0 {
                body.push(',');
            }
            body.push_str(&lead.samples[i].to_string());
        }
        body.push('\n');
    }
    fs::write(&csv, body).map_err(|e| Error::io(&csv, e))?;
    Ok(hdr)
}
