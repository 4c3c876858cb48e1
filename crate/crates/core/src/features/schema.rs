use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Morphological,
    Statistical,
    Frequency,
}

/// One level-1 feature. Starred features pass through the matching layer
/// unchanged; the rest also get receptive-field statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub group: FeatureGroup,
    pub starred: bool,
}

pub const LEVEL1_LEN: usize = 103;
pub const STARRED_LEN: usize = 44;
pub const UNSTARRED_LEN: usize = LEVEL1_LEN - STARRED_LEN;

const WAVES: [&str; 5] = ["p", "q", "r", "s", "t"];
const INTERVALS: [&str; 5] = ["pp", "qq", "rr", "ss", "tt"];

fn build() -> Vec<FeatureSpec> {
    use FeatureGroup::*;
    let mut out = Vec::with_capacity(LEVEL1_LEN);
    let mut add = |name: String, group, starred| {
        out.push(FeatureSpec {
            name,
            group,
            starred,
        })
    };

    for w in WAVES {
        add(format!("amp_{w}"), Morphological, false);
    }
    for i in INTERVALS {
        add(format!("interval_{i}"), Morphological, false);
    }
    for i in INTERVALS {
        add(format!("interval_diff_{i}"), Morphological, false);
    }
    add("rr_energy".into(), Morphological, false);
    add("amp_diff_sq".into(), Morphological, false);
    for r in ["sr", "sr_wrt_q", "tr", "qr"] {
        add(format!("ratio_{r}"), Morphological, false);
    }
    for w in ["qs", "qr", "qt", "pq"] {
        add(format!("width_diff_{w}"), Morphological, false);
    }
    for s in ["st", "qr", "rs", "sx", "pq"] {
        add(format!("slope_{s}"), Morphological, false);
    }
    add("st_neg_slope".into(), Morphological, true);
    add("st_zero_crossing_ms".into(), Morphological, true);
    add("qt_bazett".into(), Morphological, false);
    add("qt_fridericia".into(), Morphological, false);
    add("qt_sagie_ms".into(), Morphological, false);
    for k in 1..=3 {
        add(format!("rr_cluster_dist_{k}"), Morphological, true);
    }
    add("pprr_ratio".into(), Morphological, false);

    for w in WAVES {
        add(format!("wavelet_entropy_{w}"), Statistical, false);
    }
    for w in WAVES {
        for h in ["activity", "mobility", "complexity"] {
            add(format!("hjorth_{h}_{w}"), Statistical, false);
        }
    }
    for w in WAVES {
        for e in ["shannon", "tsallis", "renyi"] {
            add(format!("{e}_entropy_{w}"), Statistical, true);
        }
    }
    add("zero_crossing_ratio".into(), Statistical, false);
    for k in 1..=10 {
        add(format!("lpc_a{k}"), Statistical, true);
    }
    add("lpc_gain".into(), Statistical, true);

    for f in ["centroid", "rolloff", "kurtosis", "skewness"] {
        add(format!("fft_{f}"), Frequency, true);
    }
    for f in [
        "energy",
        "centroid",
        "kurtosis",
        "rolloff",
        "mode",
        "skewness",
        "energy80",
        "trimmed_mean",
        "top2_gap",
    ] {
        add(format!("stft_{f}"), Frequency, true);
    }
    for (lo, hi) in [(0, 2), (2, 4), (4, 10), (10, 150)] {
        add(format!("psd_{lo}_{hi}hz"), Frequency, false);
    }
    out
}

static SCHEMA: LazyLock<Vec<FeatureSpec>> = LazyLock::new(build);
static UNSTARRED: LazyLock<Vec<usize>> = LazyLock::new(|| {
    SCHEMA
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.starred)
        .map(|(i, _)| i)
        .collect()
});

/// The ordered level-1 schema.
pub fn schema() -> &'static [FeatureSpec] {
    &SCHEMA
}

/// Level-1 indices of the unstarred features, in schema order.
pub fn unstarred_indices() -> &'static [usize] {
    &UNSTARRED
}

pub fn index_of(name: &str) -> Option<usize> {
    SCHEMA.iter().position(|f| f.name == name)
}
