//! JSON run configuration shared by every subcommand.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::calibration::{Sample, CROSSINGS_PATH0, CROSSINGS_PATH1, INTERFEROMETER_LOSS};
use crate::analysis::jsi::JsiConfig;
use crate::analysis::rates::{RateRow, DUAL_PUMP, SINGLE_PUMP_1545, SINGLE_PUMP_1557};
use crate::circuit::{preset, CircuitSpec};
use crate::error::{Error, Result};
use crate::sources::SourceModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CircuitChoice {
    Preset(String),
    Inline(CircuitSpec),
}

impl Default for CircuitChoice {
    fn default() -> Self {
        CircuitChoice::Preset("dicke4".into())
    }
}

impl CircuitChoice {
    pub fn resolve(&self) -> Result<CircuitSpec> {
        match self {
            CircuitChoice::Preset(name) => preset(name),
            CircuitChoice::Inline(spec) => {
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub start: f64,
    #[serde(default = "default_stop")]
    pub stop: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Explicit grid; overrides `start`, `stop` and `points`.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

fn default_stop() -> f64 {
    PI
}
fn default_points() -> usize {
    21
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { start: 0.0, stop: PI, points: default_points(), values: None }
    }
}

impl SweepConfig {
    pub fn grid(&self) -> std::result::Result<Vec<f64>, String> {
        let g = match &self.values {
            Some(v) => v.clone(),
            None => match self.points {
                0 => Vec::new(),
                1 => vec![self.start],
                n => (0..n)
                    .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                    .collect(),
            },
        };
        if g.is_empty() {
            return Err("phase grid is empty".into());
        }
        if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
            return Err("phase grid must be finite and strictly increasing".into());
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    #[serde(default = "default_shots")]
    pub shots_per_setting: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_shots() -> f64 {
    1000.0
}
fn default_trials() -> usize {
    100
}

impl Default for TomographyConfig {
    fn default() -> Self {
        TomographyConfig { shots_per_setting: default_shots(), trials: default_trials() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectionConfig {
    Ideal,
    Threshold { eta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeConfig {
    #[serde(default = "default_fringe_points")]
    pub points: usize,
    #[serde(default = "default_detection")]
    pub detection: DetectionConfig,
    /// Detector pairs; every pair of port modes when absent.
    #[serde(default)]
    pub pairs: Option<Vec<(String, String)>>,
    /// Report extremum visibilities instead of the sinusoid fit.
    #[serde(default)]
    pub raw: bool,
}

fn default_fringe_points() -> usize {
    41
}
fn default_detection() -> DetectionConfig {
    DetectionConfig::Ideal
}

impl Default for FringeConfig {
    fn default() -> Self {
        FringeConfig { points: default_fringe_points(), detection: default_detection(), pairs: None, raw: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub p: f64,
    pub rep_rate: f64,
    /// Signal and idler channel losses in dB.
    pub loss_signal_db: f64,
    pub loss_idler_db: f64,
    /// Pump resonance linewidth for the pulse-overlap curve, Hz.
    pub linewidth_hz: f64,
    #[serde(default = "default_delay_ps")]
    pub max_delay_ps: f64,
    #[serde(default = "default_delay_points")]
    pub delay_points: usize,
}

fn default_delay_ps() -> f64 {
    100.0
}
fn default_delay_points() -> usize {
    201
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig {
            p: 0.003,
            rep_rate: 5e8,
            loss_signal_db: 15.0,
            loss_idler_db: 16.0,
            linewidth_hz: 5.5e9,
            max_delay_ps: default_delay_ps(),
            delay_points: default_delay_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KlyshkoConfig {
    pub dual: RateRow,
    pub single_a: RateRow,
    pub single_b: RateRow,
}

impl Default for KlyshkoConfig {
    fn default() -> Self {
        KlyshkoConfig { dual: DUAL_PUMP, single_a: SINGLE_PUMP_1545, single_b: SINGLE_PUMP_1557 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitLossConfig {
    /// Samples to fit, inline.
    #[serde(default)]
    pub samples: Vec<Sample>,
    /// CSV with columns `phi1,phi2,value`, relative to the config file.
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default = "default_losses")]
    pub losses: Vec<f64>,
    #[serde(default = "default_path0")]
    pub crossings_path0: Vec<u32>,
    #[serde(default = "default_path1")]
    pub crossings_path1: Vec<u32>,
}

fn default_losses() -> Vec<f64> {
    INTERFEROMETER_LOSS.to_vec()
}
fn default_path0() -> Vec<u32> {
    CROSSINGS_PATH0.to_vec()
}
fn default_path1() -> Vec<u32> {
    CROSSINGS_PATH1.to_vec()
}

impl Default for FitLossConfig {
    fn default() -> Self {
        FitLossConfig {
            samples: Vec::new(),
            csv: None,
            losses: default_losses(),
            crossings_path0: default_path0(),
            crossings_path1: default_path1(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub fringe: FringeConfig,
    #[serde(default)]
    pub jsi: Option<JsiConfig>,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub klyshko: KlyshkoConfig,
    #[serde(default)]
    pub fitloss: FitLossConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub json: bool,
    #[serde(default = "yes")]
    pub csv: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir(), json: true, csv: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Multimode source; the ideal single-mode source when absent.
    #[serde(default)]
    pub source: Option<SourceModel>,
    #[serde(default)]
    pub circuit: CircuitChoice,
    #[serde(default)]
    pub phi: f64,
    /// Named reference state; the analytic ideal at `phi` when absent.
    #[serde(default)]
    pub reference: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub tomography: TomographyConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Parsed configuration with the raw bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub raw: Vec<u8>,
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &[u8], path: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_slice(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            let message = if field == "." {
                inner.to_string()
            } else {
                format!("field `{field}`: {inner}")
            };
            Error::Config { path: path.to_path_buf(), message }
        })?;
        cfg.validate(path)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let raw = std::fs::read(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: format!("cannot read config: {e}"),
        })?;
        let config = RunConfig::parse(&raw, path)?;
        Ok(LoadedConfig { config, raw, path: Some(path.to_path_buf()) })
    }

    fn validate(&self, path: &Path) -> Result<()> {
        let wrap = |field: &str, e: Error| Error::Config {
            path: path.to_path_buf(),
            message: format!("field `{field}`: {e}"),
        };
        self.circuit.resolve().map_err(|e| wrap("circuit", e))?;
        if let Some(s) = &self.source {
            s.validate().map_err(|e| wrap("source", e))?;
        }
        if let Some(r) = &self.reference {
            crate::qubits::reference_state(r).map_err(|e| wrap("reference", e))?;
        }
        self.sweep.grid().map_err(|m| Error::Config {
            path: path.to_path_buf(),
            message: format!("field `sweep`: {m}"),
        })?;
        if let Some(j) = &self.analysis.jsi {
            j.validate().map_err(|e| wrap("analysis.jsi", e))?;
        }
        if !self.phi.is_finite() {
            return Err(wrap("phi", crate::error::spec_err("must be finite")));
        }
        Ok(())
    }
}

impl Default for LoadedConfig {
    fn default() -> Self {
        LoadedConfig { config: RunConfig::default(), raw: b"{}".to_vec(), path: None }
    }
}
