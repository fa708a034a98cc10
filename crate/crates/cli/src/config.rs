//! JSON experiment configuration. Every section and field is optional; unknown
//! keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use gauge_dirac::grid::Grid;
use gauge_dirac::{make_gaussian_packet, make_plane_wave, Branch, DiracParams, SpinorField};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub packet: PacketConfig,
    pub pulse: PulseConfig,
    pub integrator: IntegratorSection,
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Unset means 1024, or [`VERIFY_POINTS`] for `verify`.
    pub n_points: Option<usize>,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_points: None, length: 64.0 }
    }
}

pub const DEFAULT_POINTS: usize = 1024;
/// Largest grid the dense oracle accepts, used by `verify` when N is unset.
pub const VERIFY_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub mass: f64,
    pub charge: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self { mass: 1.0, charge: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PacketKind {
    Plane,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum BranchName {
    #[serde(rename = "+", alias = "positive")]
    Positive,
    #[serde(rename = "-", alias = "negative")]
    Negative,
}

impl From<BranchName> for Branch {
    fn from(b: BranchName) -> Self {
        match b {
            BranchName::Positive => Branch::Positive,
            BranchName::Negative => Branch::Negative,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketConfig {
    pub kind: PacketKind,
    pub k0: f64,
    pub sigma_x: f64,
    /// Defaults to the box centre.
    pub x0: Option<f64>,
    pub branch: BranchName,
}

impl Default for PacketConfig {
    fn default() -> Self {
        Self { kind: PacketKind::Gaussian, k0: 1.0, sigma_x: 4.0, x0: None, branch: BranchName::Positive }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub t_a: f64,
    pub t_b: f64,
    pub f: Option<f64>,
    pub f_list: Option<Vec<f64>>,
    pub delta_target: Option<f64>,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self { t_a: 1.0, t_b: 2.0, f: None, f_list: None, delta_target: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub enabled: bool,
    pub n_steps: usize,
    pub step_counts: Option<Vec<usize>>,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { enabled: false, n_steps: 256, step_counts: None }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub csv_path: Option<PathBuf>,
    pub svg_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
}

/// How the pulse strength is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Drive {
    Strength(f64),
    Scan(Vec<f64>),
    Target(f64),
}

pub const DEFAULT_STEP_COUNTS: [usize; 4] = [64, 128, 256, 512];

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = serde_json::from_str(text).map_err(|e| config_err(format!("invalid config: {e}")))?;
        config.check_times()?;
        config.drive()?;
        Ok(config)
    }

    fn check_times(&self) -> Result<(), CliError> {
        let (t_a, t_b) = (self.pulse.t_a, self.pulse.t_b);
        if !(t_a.is_finite() && t_b.is_finite() && t_a > 0.0 && t_b >= t_a) {
            return Err(config_err(format!("need 0 < t_a <= t_b, got t_a = {t_a}, t_b = {t_b}")));
        }
        Ok(())
    }

    /// At most one of `f`, `f_list`, `delta_target`; with none given, `f = 1`.
    pub fn drive(&self) -> Result<Drive, CliError> {
        let p = &self.pulse;
        match (p.f, &p.f_list, p.delta_target) {
            (Some(f), None, None) => {
                if !f.is_finite() {
                    return Err(config_err("pulse.f must be finite"));
                }
                Ok(Drive::Strength(f))
            }
            (None, Some(list), None) => {
                if list.is_empty() {
                    return Err(config_err("pulse.f_list must not be empty"));
                }
                if list.iter().any(|f| !f.is_finite()) || list.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(config_err("pulse.f_list must be finite and strictly ascending"));
                }
                Ok(Drive::Scan(list.clone()))
            }
            (None, None, Some(d)) => {
                if !d.is_finite() || d > 0.0 {
                    return Err(config_err("pulse.delta_target must be finite and non-positive"));
                }
                Ok(Drive::Target(d))
            }
            (None, None, None) => Ok(Drive::Strength(1.0)),
            _ => Err(config_err("give exactly one of pulse.f, pulse.f_list, pulse.delta_target")),
        }
    }

    pub fn params(&self) -> Result<DiracParams, CliError> {
        Ok(DiracParams::new(self.physics.mass, self.physics.charge)?)
    }

    pub fn grid(&self) -> Result<Arc<Grid<f64>>, CliError> {
        self.grid_with_default(DEFAULT_POINTS)
    }

    pub fn grid_with_default(&self, n_points: usize) -> Result<Arc<Grid<f64>>, CliError> {
        Ok(Grid::new(self.grid.n_points.unwrap_or(n_points), self.grid.length)?)
    }

    pub fn x0(&self) -> f64 {
        self.packet.x0.unwrap_or(self.grid.length / 2.0)
    }

    /// The initial state. A plane wave uses the box mode nearest `k0`.
    pub fn initial_state(&self, grid: &Arc<Grid<f64>>) -> Result<SpinorField, CliError> {
        let params = self.params()?;
        let pk = &self.packet;
        let state = match pk.kind {
            PacketKind::Gaussian => make_gaussian_packet(grid, pk.k0, pk.sigma_x, self.x0(), pk.branch.into(), &params)?,
            PacketKind::Plane => make_plane_wave(grid, self.plane_mode(), pk.branch.into(), &params)?,
        };
        Ok(state)
    }

    pub fn plane_mode(&self) -> i64 {
        (self.packet.k0 * self.grid.length / (2.0 * std::f64::consts::PI)).round() as i64
    }

    pub fn step_counts(&self) -> Vec<usize> {
        self.integrator.step_counts.clone().unwrap_or_else(|| DEFAULT_STEP_COUNTS.to_vec())
    }

    /// Configured path, or `default_name`; `out_dir` keeps only the file name.
    pub fn resolve(configured: &Option<PathBuf>, default_name: &str, out_dir: Option<&Path>) -> PathBuf {
        let path = configured.clone().unwrap_or_else(|| PathBuf::from(default_name));
        match out_dir {
            Some(dir) => dir.join(path.file_name().unwrap_or(default_name.as_ref())),
            None => path,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_uses_defaults() {
        let c = ExperimentConfig::parse("{}").unwrap();
        assert_eq!(c.grid.n_points, None);
        assert_eq!(c.grid().unwrap().n_points(), DEFAULT_POINTS);
        assert_eq!(c.x0(), 32.0);
        assert_eq!(c.drive().unwrap(), Drive::Strength(1.0));
        assert_eq!(c.step_counts(), DEFAULT_STEP_COUNTS.to_vec());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::parse(r#"{"grid": {"n_point": 64}}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"extra": 1}"#).is_err());
    }

    #[test]
    fn drive_must_be_unique() {
        assert!(ExperimentConfig::parse(r#"{"pulse": {"f": 1, "delta_target": -1}}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"pulse": {"f_list": [2, 1]}}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"pulse": {"delta_target": 3}}"#).is_err());
    }

    #[test]
    fn times_are_checked() {
        assert!(ExperimentConfig::parse(r#"{"pulse": {"t_a": 2, "t_b": 1}}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"pulse": {"t_a": 0}}"#).is_err());
    }

    #[test]
    fn branch_names() {
        let c = ExperimentConfig::parse(r#"{"packet": {"branch": "negative", "kind": "plane"}}"#).unwrap();
        assert_eq!(c.packet.branch, BranchName::Negative);
        assert_eq!(c.packet.kind, PacketKind::Plane);
        assert_eq!(ExperimentConfig::parse(r#"{"packet": {"branch": "-"}}"#).unwrap().packet.branch, BranchName::Negative);
    }

    #[test]
    fn out_dir_overrides_directory() {
        let p = ExperimentConfig::resolve(&Some("a/b/run.csv".into()), "x.csv", Some(Path::new("out")));
        assert_eq!(p, PathBuf::from("out/run.csv"));
        assert_eq!(ExperimentConfig::resolve(&None, "x.csv", None), PathBuf::from("x.csv"));
    }
}
