//! Experiment configuration: JSON file, flag overrides, validation.

use std::path::{Path, PathBuf};

use fpt_core::model::{DetectorParams, SignalModel};
use fpt_core::montecarlo::{NoiseStreams, RunConfig};
use serde::{Deserialize, Serialize};

use crate::error::{core_error, CliError};

/// Configuration as read from a file; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub detector: DetectorSection,
    pub second_detector: Option<DetectorSection>,
    pub signal: Option<SignalModel>,
    pub run: RunSection,
    pub n: Option<usize>,
    pub analytic: AnalyticSection,
    pub pde: PdeSection,
    pub coincide: CoincideSection,
    pub output: OutputSection,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub threshold_energy: Option<f64>,
    pub noise_scale: Option<f64>,
    pub area: Option<f64>,
    pub dead_time: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticSection {
    pub t_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSection {
    pub n_cells: Option<usize>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub snapshots: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoincideSection {
    pub window: Option<f64>,
    pub delay: Option<f64>,
    pub surrogates: Option<usize>,
    pub noise: Option<NoiseStreams>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub data: Option<PathBuf>,
    pub train_json: Option<PathBuf>,
    pub paths: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Schema {
                path: if path == "." { "config".into() } else { path },
                message: e.into_inner().to_string(),
            }
        })
    }
}

/// Fully resolved configuration, echoed into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub detector: ResolvedDetector,
    pub second_detector: ResolvedDetector,
    pub signal: SignalModel,
    pub run: ResolvedRun,
    pub n: usize,
    pub analytic: ResolvedAnalytic,
    pub pde: ResolvedPde,
    pub coincide: ResolvedCoincide,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedDetector {
    pub threshold_energy: f64,
    pub noise_scale: f64,
    pub area: f64,
    pub dead_time: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedRun {
    pub seed: u64,
    pub step: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedAnalytic {
    pub t_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedPde {
    pub n_cells: usize,
    pub dt: f64,
    pub t_max: f64,
    pub snapshots: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedCoincide {
    pub window: f64,
    pub delay: f64,
    pub surrogates: usize,
    pub noise: NoiseStreams,
}

impl DetectorSection {
    fn resolve(&self) -> ResolvedDetector {
        ResolvedDetector {
            threshold_energy: self.threshold_energy.unwrap_or(1.0),
            noise_scale: self.noise_scale.unwrap_or(1.0),
            area: self.area.unwrap_or(1.0),
            dead_time: self.dead_time.unwrap_or(0.0),
        }
    }
}

impl FileConfig {
    pub fn resolve(self) -> Resolved {
        let detector = self.detector.resolve();
        let second_detector = self.second_detector.map_or(detector, |d| d.resolve());
        let signal = self
            .signal
            .unwrap_or_else(|| SignalModel::constant(1.0).expect("valid default"));
        Resolved {
            detector,
            second_detector,
            signal,
            run: ResolvedRun {
                seed: self.run.seed.unwrap_or(1),
                step: self.run.step.unwrap_or(1e-3),
                horizon: self.run.horizon.unwrap_or(1e4),
            },
            n: self.n.unwrap_or(1000),
            analytic: ResolvedAnalytic {
                t_max: self.analytic.t_max.unwrap_or(5.0),
                points: self.analytic.points.unwrap_or(500),
            },
            pde: ResolvedPde {
                n_cells: self.pde.n_cells.unwrap_or(2048),
                dt: self.pde.dt.unwrap_or(1e-3),
                t_max: self.pde.t_max.unwrap_or(5.0),
                snapshots: self.pde.snapshots.unwrap_or(50),
            },
            coincide: ResolvedCoincide {
                window: self.coincide.window.unwrap_or(0.1),
                delay: self.coincide.delay.unwrap_or(0.0),
                surrogates: self.coincide.surrogates.unwrap_or(8),
                noise: self.coincide.noise.unwrap_or_default(),
            },
        }
    }
}

impl ResolvedDetector {
    pub fn params(&self, section: &str) -> Result<DetectorParams, CliError> {
        DetectorParams::new(self.threshold_energy, self.noise_scale)
            .and_then(|p| p.with_area(self.area))
            .and_then(|p| p.with_dead_time(self.dead_time))
            .map_err(|e| core_error(section, e))
    }
}

impl ResolvedRun {
    pub fn config(&self) -> Result<RunConfig, CliError> {
        RunConfig::new(self.seed, self.step, self.horizon).map_err(|e| core_error("run", e))
    }
}

/// Constant intensity of the signal, for the subcommands that need a
/// time-homogeneous law.
pub fn constant_intensity(signal: &SignalModel) -> Result<f64, CliError> {
    match signal {
        SignalModel::Constant(c) => Ok(c.intensity()),
        _ => Err(CliError::Schema {
            path: "signal.kind".into(),
            message: "this subcommand needs a constant signal".into(),
        }),
    }
}
