use std::path::Path;

use clap::{Args, ValueEnum};
use piecewise_core::matching::field::DEFAULT_EVENT_WARMUP;
use piecewise_core::{DatasetStyle, PipelineConfig, Scenario};

use crate::{usage_err, CliResult};

pub fn load(path: Option<&Path>) -> CliResult<PipelineConfig> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage_err(anyhow::anyhow!("{}: {e}", path.display())))?;
    let cfg: PipelineConfig = toml::from_str(&text)
        .map_err(|e| usage_err(anyhow::anyhow!("{}: {e}", path.display())))?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScenarioKind {
    Offline,
    Incremental,
    Fixed,
    Event,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Style {
    Alarm2015,
    Afib2017,
}

impl From<Style> for DatasetStyle {
    fn from(s: Style) -> Self {
        match s {
            Style::Alarm2015 => DatasetStyle::Alarm2015,
            Style::Afib2017 => DatasetStyle::Afib2017,
        }
    }
}

/// Pipeline flags shared by `featurize` and `stream`.
#[derive(Args, Debug, Clone, Default)]
pub struct ScenarioArgs {
    /// Receptive-field scenario.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioKind>,
    /// Window length in pieces for the fixed scenario.
    #[arg(long)]
    pub e: Option<usize>,
    /// DTW threshold for the event scenario (default: derived per recording).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Pieces used to derive the event threshold.
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Dataset conventions (invalid-region excision, label handling).
    #[arg(long, value_enum)]
    pub style: Option<Style>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ScenarioArgs {
    /// Applies the flags on top of `cfg`.
    pub fn apply(&self, mut cfg: PipelineConfig) -> CliResult<PipelineConfig> {
        if let Some(style) = self.style {
            cfg.dataset_style = style.into();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        let (cur_e, cur_t, cur_w) = match cfg.scenario {
            Scenario::Fixed { e } => (Some(e), None, None),
            Scenario::Event { threshold, warmup } => (None, threshold, Some(warmup)),
            _ => (None, None, None),
        };
        let kind = self.scenario.unwrap_or(match cfg.scenario {
            Scenario::Offline => ScenarioKind::Offline,
            Scenario::Incremental => ScenarioKind::Incremental,
            Scenario::Fixed { .. } => ScenarioKind::Fixed,
            Scenario::Event { .. } => ScenarioKind::Event,
        });
        cfg.scenario = match kind {
            ScenarioKind::Offline => Scenario::Offline,
            ScenarioKind::Incremental => Scenario::Incremental,
            ScenarioKind::Fixed => Scenario::Fixed {
                e: self.e.or(cur_e).unwrap_or(4),
            },
            ScenarioKind::Event => Scenario::Event {
                threshold: self.threshold.or(cur_t),
                warmup: self.warmup.or(cur_w).unwrap_or(DEFAULT_EVENT_WARMUP),
            },
        };
        if self.e.is_some() && !matches!(cfg.scenario, Scenario::Fixed { .. }) {
            return Err(usage_err(anyhow::anyhow!("--e only applies to the fixed scenario")));
        }
        if (self.threshold.is_some() || self.warmup.is_some())
            && !matches!(cfg.scenario, Scenario::Event { .. })
        {
            return Err(usage_err(anyhow::anyhow!(
                "--threshold/--warmup only apply to the event scenario"
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_overrides() {
        let cfg: PipelineConfig = toml::from_str(
            "dataset_style = \"alarm2015\"\nseed = 3\n[scenario]\nkind = \"event\"\nthreshold = 2.5\n",
        )
        .unwrap();
        assert_eq!(
            cfg.scenario,
            Scenario::Event {
                threshold: Some(2.5),
                warmup: 8
            }
        );
        let args = ScenarioArgs {
            warmup: Some(5),
            ..Default::default()
        };
        let cfg = args.apply(cfg).unwrap();
        assert_eq!(
            cfg.scenario,
            Scenario::Event {
                threshold: Some(2.5),
                warmup: 5
            }
        );
        let args = ScenarioArgs {
            scenario: Some(ScenarioKind::Fixed),
            e: Some(1),
            ..Default::default()
        };
        assert!(args.apply(cfg).is_err());
    }
}
