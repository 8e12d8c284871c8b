//! Experiment configuration: a TOML document with one section per stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::DiagnosticsSpec;
use crate::discretization::{build_constraints, build_mesh, BcError, BoundarySpec, Constraints, MeshError, Profile, ReferenceKind, StripMesh};
use crate::gas::GasMode;
use crate::geometry::{DomainSpec, GeometryError, StripGeometry};
use crate::solver::SolveConfig;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{key}: {message}")]
pub struct ConfigError {
    /// Dotted path of the offending setting.
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub ell_min: f64,
    pub ell_max: f64,
    pub n_ell: usize,
    pub n_lam: usize,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
}

fn default_quad_order() -> usize {
    2
}

/// Output locations, relative to the config file unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub field: PathBuf,
    pub report: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            field: PathBuf::from("field.dat"),
            report: PathBuf::from("report.txt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub gas: GasMode,
    pub mesh: MeshSpec,
    pub bcs: BoundarySpec,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Mesh, geometry and constraints built from a validated config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub mesh: StripMesh,
    pub constraints: Constraints,
}

fn geometry_key(e: &GeometryError) -> String {
    match e {
        GeometryError::ExcludedAngle(_) => "domain.theta".into(),
        GeometryError::InvalidParameter { name, .. } => format!("domain.{name}"),
        _ => "domain".into(),
    }
}

fn mesh_key(e: &MeshError) -> String {
    match e {
        MeshError::EmptyRange { .. } | MeshError::BeforeStart { .. } => "mesh.ell_min".into(),
        MeshError::TooFewCells { name, .. } => format!("mesh.{name}"),
        MeshError::QuadOrder(_) => "mesh.quad_order".into(),
        MeshError::Folded { .. } | MeshError::Geometry(_) => "domain".into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let key = e
                .span()
                .map(|s| key_at(text, s.start))
                .unwrap_or_else(|| "config".into());
            ConfigError::new(key, e.message().trim().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.output.field = base.join(&cfg.output.field);
        cfg.output.report = base.join(&cfg.output.report);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types serialize to TOML")
    }

    /// Builds the mesh and constraints, reporting the first invalid setting.
    pub fn prepare(&self) -> Result<Prepared, ConfigError> {
        let geometry = StripGeometry::from_spec(&self.domain).map_err(|e| ConfigError::new(geometry_key(&e), e.to_string()))?;
        self.solve
            .validate()
            .map_err(|m| ConfigError::new(m.split(' ').next().unwrap_or("solve"), m.clone()))?;
        self.diagnostics
            .validate()
            .map_err(|m| ConfigError::new(m.split(' ').next().unwrap_or("diagnostics"), m.clone()))?;
        let m = &self.mesh;
        let mesh = build_mesh(geometry, m.ell_min, m.ell_max, m.n_ell, m.n_lam, m.quad_order)
            .map_err(|e| ConfigError::new(mesh_key(&e), e.to_string()))?;
        let constraints = build_constraints(&mesh, &self.bcs).map_err(|e: BcError| ConfigError::new("bcs.profile", e.to_string()))?;
        Ok(Prepared { mesh, constraints })
    }

    /// Copy with one sweep parameter replaced: `L` moves `mesh.ell_max`
    /// keeping the cell size, `amplitude` rescales the boundary profile and
    /// `mesh` multiplies both cell counts.
    pub fn with_sweep_value(&self, key: SweepKey, value: f64) -> Result<Self, ConfigError> {
        let mut c = self.clone();
        match key {
            SweepKey::L => {
                let h = (c.mesh.ell_max - c.mesh.ell_min) / c.mesh.n_ell as f64;
                if !(value > c.mesh.ell_min) {
                    return Err(ConfigError::new("mesh.ell_max", format!("sweep value {value} must exceed mesh.ell_min")));
                }
                c.mesh.ell_max = value;
                c.mesh.n_ell = ((value - c.mesh.ell_min) / h).round().max(2.0) as usize;
            }
            SweepKey::Amplitude => {
                c.bcs.profile = match c.bcs.profile {
                    Profile::UniformFlux { .. } => Profile::UniformFlux { m_inf: value },
                    Profile::Mode { k, .. } => Profile::Mode { k, amplitude: value },
                    Profile::Exact {
                        reference: ReferenceKind::WedgeMode { k, .. },
                    } => Profile::Exact {
                        reference: ReferenceKind::WedgeMode { k, amplitude: value },
                    },
                    Profile::Exact {
                        reference: ReferenceKind::Example,
                    } => {
                        return Err(ConfigError::new("bcs.profile", "the example reference field has no amplitude to sweep"));
                    }
                };
            }
            SweepKey::Mesh => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(ConfigError::new("mesh", format!("refinement factor {value} must be a positive integer")));
                }
                c.mesh.n_ell *= value as usize;
                c.mesh.n_lam *= value as usize;
            }
        }
        Ok(c)
    }
}

/// Best-effort dotted key for a byte offset: the enclosing `[section]` and
/// the assignment on that line.
fn key_at(text: &str, offset: usize) -> String {
    let offset = offset.min(text.len());
    let line_start = text[..offset].rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[line_start..].find('\n').map_or(text.len(), |i| line_start + i);
    let header = |l: &str| {
        let t = l.trim();
        (t.starts_with('[') && t.ends_with(']')).then(|| t.trim_matches(|c| c == '[' || c == ']').to_string())
    };
    let section = text[..line_end].lines().rev().find_map(header);
    let line = &text[line_start..line_end];
    let field = if header(line).is_some() {
        None
    } else {
        line.split_once('=').map(|(k, _)| k.trim().to_string())
    };
    match (section, field) {
        (Some(s), Some(f)) => format!("{s}.{f}"),
        (Some(s), None) => s,
        (None, Some(f)) => f,
        (None, None) => "config".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKey {
    L,
    Amplitude,
    Mesh,
}

impl std::str::FromStr for SweepKey {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L" | "l" | "ell_max" => Ok(SweepKey::L),
            "amplitude" => Ok(SweepKey::Amplitude),
            "mesh" => Ok(SweepKey::Mesh),
            other => Err(ConfigError::new("--key", format!("unknown sweep key `{other}`; expected L, amplitude or mesh"))),
        }
    }
}

impl SweepKey {
    pub fn label(self) -> &'static str {
        match self {
            SweepKey::L => "L",
            SweepKey::Amplitude => "amplitude",
            SweepKey::Mesh => "mesh",
        }
    }
}
