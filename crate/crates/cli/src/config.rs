//! Run configuration: one JSON document, strictly parsed.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use ndicke::dynamics::{EnsembleSpec, IntegratorControls};
use ndicke::params::{RB87_D2_WAVELENGTH, RB87_MASS};
use ndicke::stationary::{JacobianKind, RootOptions, SearchRegion, Subspace, DEFAULT_DEDUP_RADIUS};
use ndicke::PhysicalParams;
use serde::{Deserialize, Serialize};

use crate::units::{Duration, Frequency};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!(
                "unknown format {other:?} (expected csv, json or svg)"
            )),
        }
    }
}

/// Model parameters in laboratory units. Missing entries take the values of
/// the four-group reference set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub n: usize,
    pub nu: usize,
    pub omega_pump: Frequency,
    pub delta_pa: Frequency,
    pub delta_pc: Frequency,
    pub kappa: Frequency,
    pub omega_z: Frequency,
    pub g0: Frequency,
    /// Pump wavelength (m).
    pub wavelength: f64,
    /// Atomic mass (kg).
    pub mass: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let mhz = |x: f64| Frequency::from_hz(x * 1e6);
        Self {
            n: 4,
            nu: 30,
            omega_pump: mhz(20.0),
            delta_pa: mhz(-100.0),
            delta_pc: mhz(-4.0),
            kappa: mhz(0.5),
            omega_z: Frequency::from_hz(70e3),
            g0: mhz(3.0),
            wavelength: RB87_D2_WAVELENGTH,
            mass: RB87_MASS,
        }
    }
}

impl ParamsConfig {
    pub fn physical(&self) -> PhysicalParams {
        PhysicalParams {
            n: self.n,
            nu: self.nu,
            omega_pump: self.omega_pump.rad_per_s(),
            delta_pa: self.delta_pa.rad_per_s(),
            delta_pc: self.delta_pc.rad_per_s(),
            kappa: self.kappa.rad_per_s(),
            omega_z: self.omega_z.rad_per_s(),
            g0: self.g0.rad_per_s(),
            k_pump: 2.0 * PI / self.wavelength,
            mass: self.mass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Physical integration time.
    pub duration: Duration,
    /// Physical spacing of output samples.
    pub sample_every: Duration,
    /// Step cap in trap periods / 2π (dimensionless time).
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            duration: Duration(6e-3),
            sample_every: Duration(10e-6),
            max_step: 1.0,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn controls(&self, omega_z: f64) -> IntegratorControls {
        IntegratorControls {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            t_end: self.duration.0 * omega_z,
            max_step: self.max_step,
            sample_every: self.sample_every.0 * omega_z,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub count: usize,
    /// Standard deviation of initial positions (radians of k z).
    pub position_scale: f64,
    pub momentum_scale: f64,
    /// Clustering radius as a fraction of the largest endpoint |α|.
    pub cluster_fraction: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            count: 16,
            position_scale: 1e-3 * PI,
            momentum_scale: 0.0,
            cluster_fraction: 0.1,
        }
    }
}

impl EnsembleConfig {
    pub fn spec(&self, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            count: self.count,
            seed,
            position_scale: self.position_scale,
            momentum_scale: self.momentum_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Half-width of the search box in units of the pump wavelength.
    pub half_width_lambda: f64,
    pub grid_per_dim: usize,
    pub dedup_radius: f64,
    /// Defaults to antipodal pairs for even n and the full space otherwise.
    pub subspace: Option<Subspace>,
    pub jacobian: JacobianKind,
    pub tol: f64,
    pub stability_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            half_width_lambda: 0.25,
            grid_per_dim: 21,
            dedup_radius: DEFAULT_DEDUP_RADIUS,
            subspace: None,
            jacobian: JacobianKind::Full,
            tol: 1e-11,
            stability_tol: 1e-9,
        }
    }
}

impl SearchConfig {
    pub fn subspace_for(&self, n: usize) -> Subspace {
        self.subspace.unwrap_or(if n % 2 == 0 {
            Subspace::AntipodalPairs
        } else {
            Subspace::Full
        })
    }

    pub fn region(&self, n: usize) -> Result<SearchRegion, ConfigError> {
        let subspace = self.subspace_for(n);
        let dim = subspace
            .free_dim(n)
            .map_err(|e| invalid("search.subspace", e.to_string()))?;
        let h = 2.0 * PI * self.half_width_lambda;
        let region = SearchRegion {
            dedup_radius: self.dedup_radius,
            ..SearchRegion::cube(dim, -h, h, self.grid_per_dim, subspace)
        };
        region
            .validate(n)
            .map_err(|e| invalid("search", e.to_string()))?;
        Ok(region)
    }

    pub fn root_options(&self, n: usize) -> RootOptions {
        RootOptions {
            tol: self.tol,
            jacobian: self.jacobian,
            stability_tol: self.stability_tol,
            subspace: self.subspace_for(n),
            ..RootOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovConfig {
    pub starts: usize,
    /// Starts are uniform in (−w, w)^n with w in units of the wavelength.
    pub half_width_lambda: f64,
    pub tol: f64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            starts: 400,
            half_width_lambda: 0.25,
            tol: 1e-10,
        }
    }
}

/// Evenly spaced frequency axis, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: Frequency,
    pub stop: Frequency,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        ndicke::contour::linspace(self.start.rad_per_s(), self.stop.rad_per_s(), self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourRequest {
    pub omega_pump: Frequency,
    pub delta_pc: Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseConfig {
    pub omega_axis: Option<Axis>,
    pub delta_axis: Option<Axis>,
    pub line_cuts: Vec<Frequency>,
    pub line_cut_axis: Axis,
    pub jump_threshold: f64,
    pub contours: Vec<ContourRequest>,
    pub contour_points: usize,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        let mhz = |x: f64| Frequency::from_hz(x * 1e6);
        Self {
            omega_axis: None,
            delta_axis: None,
            line_cuts: vec![],
            line_cut_axis: Axis {
                start: mhz(0.5),
                stop: mhz(80.0),
                count: 160,
            },
            jump_threshold: ndicke::phase::JUMP_THRESHOLD,
            contours: vec![],
            contour_points: 161,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeffConfig {
    /// Relative phase for the two-group matrix; defaults to the decoupling phase.
    pub two_group_phase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: ParamsConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    pub integrator: IntegratorConfig,
    pub ensemble: EnsembleConfig,
    pub search: SearchConfig,
    pub lyapunov: LyapunovConfig,
    pub phase: PhaseConfig,
    pub heff: HeffConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ParamsConfig::default(),
            seed: 0,
            output_dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
            integrator: IntegratorConfig::default(),
            ensemble: EnsembleConfig::default(),
            search: SearchConfig::default(),
            lyapunov: LyapunovConfig::default(),
            phase: PhaseConfig::default(),
            heff: HeffConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params
            .physical()
            .validate()
            .map_err(|e| invalid("params", e.to_string()))?;
        if !(self.params.wavelength > 0.0) {
            return Err(invalid("params.wavelength", "must be positive"));
        }
        self.integrator
            .controls(self.params.omega_z.rad_per_s())
            .validate()
            .map_err(|e| invalid("integrator", e.to_string()))?;
        self.ensemble
            .spec(self.seed)
            .validate()
            .map_err(|e| invalid("ensemble", e.to_string()))?;
        if !(self.ensemble.cluster_fraction > 0.0) {
            return Err(invalid("ensemble.cluster_fraction", "must be positive"));
        }
        if !(self.search.half_width_lambda > 0.0) {
            return Err(invalid("search.half_width_lambda", "must be positive"));
        }
        self.search.region(self.params.n)?;
        if self.lyapunov.starts == 0 {
            return Err(invalid("lyapunov.starts", "must be at least 1"));
        }
        for (name, axis) in [
            ("phase.omega_axis", self.phase.omega_axis.as_ref()),
            ("phase.delta_axis", self.phase.delta_axis.as_ref()),
            ("phase.line_cut_axis", Some(&self.phase.line_cut_axis)),
        ] {
            if let Some(a) = axis {
                if a.count == 0 {
                    return Err(invalid(name, "count must be at least 1"));
                }
            }
        }
        let cut = self.phase.line_cut_axis.values();
        if cut.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid(
                "phase.line_cut_axis",
                "must be strictly increasing",
            ));
        }
        if self.phase.contour_points < 2 {
            return Err(invalid("phase.contour_points", "must be at least 2"));
        }
        Ok(())
    }
}
