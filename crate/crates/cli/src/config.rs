//! Sweep configuration from a JSON file, overridden by flags.

use std::fs;
use std::path::{Path, PathBuf};

use bifrost::grid::Axis;
use serde::Deserialize;

use crate::{CliError, Format, ProbeArg};

/// An axis as written in the config file: `0.5`, `"0:1:11"` or
/// `{"min": 0, "max": 1, "steps": 11}`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AxisSpec {
    Value(f64),
    Text(String),
    Range { min: f64, max: f64, steps: usize },
}

impl AxisSpec {
    pub fn to_axis(&self, log: bool) -> Result<Axis, CliError> {
        let axis = match self {
            AxisSpec::Value(v) => Axis::Value { value: *v },
            AxisSpec::Text(s) => Axis::parse(s, log)?,
            AxisSpec::Range { min, max, steps } => {
                let (min, max, steps) = (*min, *max, *steps);
                if log {
                    Axis::Log { min, max, steps }
                } else {
                    Axis::Linear { min, max, steps }
                }
            }
        };
        axis.values()?;
        Ok(axis)
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub eta1: Option<AxisSpec>,
    pub n_s: Option<AxisSpec>,
    pub n_th: Option<AxisSpec>,
    pub probe: Option<ProbeArg>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub log_nth: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: invalid config: {e}", path.display())))
    }
}

/// Fully resolved sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub eta1: Vec<f64>,
    pub n_s: Vec<f64>,
    pub n_th: Vec<f64>,
    pub probe: ProbeArg,
    pub output: Option<PathBuf>,
    pub format: Format,
}

/// Flag values for a sweep; `None` falls back to the file, then defaults.
#[derive(Clone, Debug, Default)]
pub struct SweepFlags {
    pub eta1: Option<String>,
    pub n_s: Option<String>,
    pub n_th: Option<String>,
    pub probe: Option<ProbeArg>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub log_nth: bool,
}

impl SweepConfig {
    pub fn resolve(flags: SweepFlags, file: FileConfig) -> Result<Self, CliError> {
        let log_nth = flags.log_nth || file.log_nth.unwrap_or(false);
        let pick = |flag: Option<String>, from_file: Option<AxisSpec>, name: &str, log: bool| {
            let spec = match flag {
                Some(s) => AxisSpec::Text(s),
                None => from_file.ok_or_else(|| CliError::Usage(format!("missing --{name}")))?,
            };
            spec.to_axis(log)?.values().map_err(CliError::from)
        };
        Ok(Self {
            eta1: pick(flags.eta1, file.eta1, "eta1", false)?,
            n_s: pick(flags.n_s, file.n_s, "ns", false)?,
            n_th: pick(flags.n_th, file.n_th, "nth", log_nth)?,
            probe: flags.probe.or(file.probe).unwrap_or(ProbeArg::Both),
            output: flags.output.or(file.output),
            format: flags.format.or(file.format).unwrap_or(Format::Csv),
        })
    }
}
