//! Boundary data: `psi = 0` on connected walls plus Dirichlet or natural
//! conditions on the two truncation arcs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mesh::StripMesh;
use crate::fields::exact::{ExampleField, ReferenceField, WedgeMode};
use crate::geometry::{DomainSpec, StripGeometry, StripPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BcError {
    #[error("profile is nonzero ({value:e}) on the wall at ell = {ell}, lam = {lam}; walls carry psi = 0")]
    NonzeroAtWall { ell: f64, lam: f64, value: f64 },
    #[error("reference field {field} needs a {needs} domain")]
    WrongDomain {
        field: &'static str,
        needs: &'static str,
    },
    #[error("mode index must be at least 1")]
    ModeIndex,
    #[error("profile value is not finite at ell = {ell}, lam = {lam}")]
    NonFinite { ell: f64, lam: f64 },
}

/// Exact fields usable as boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "snake_case")]
pub enum ReferenceKind {
    /// `psi = r^{2/3} cos(2 theta / 3) - 1` on the protruding example domain.
    Example,
    /// Harmonic wedge mode `amplitude r^{k pi/Theta} sin(k pi (theta - theta0)/Theta)`.
    WedgeMode { k: u32, amplitude: f64 },
}

/// Far-field data on the truncation arcs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// Corner: `m_inf (S/pi) sin(pi lam)` with `S` the arc length of the
    /// cross-section, so the slope at each wall is `m_inf`. Channel: `m_inf y`.
    UniformFlux { m_inf: f64 },
    /// `amplitude r^{k pi/Theta} sin(k pi lam)`.
    Mode { k: u32, amplitude: f64 },
    Exact { reference: ReferenceKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCondition {
    #[default]
    Dirichlet,
    /// Zero conormal flux.
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub profile: Profile,
    #[serde(default)]
    pub inner: EndCondition,
    #[serde(default)]
    pub outer: EndCondition,
}

/// Which nodes are fixed and their values.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    pub fixed: Vec<bool>,
    pub values: Vec<f64>,
}

impl Constraints {
    pub fn n_free(&self) -> usize {
        self.fixed.iter().filter(|f| !**f).count()
    }

    /// Same constraint set with all prescribed values multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Constraints {
        Constraints {
            fixed: self.fixed.clone(),
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    /// Overwrites fixed entries of `psi` with their prescribed values.
    pub fn impose(&self, psi: &mut [f64]) {
        for ((p, f), v) in psi.iter_mut().zip(&self.fixed).zip(&self.values) {
            if *f {
                *p = *v;
            }
        }
    }

    /// Largest prescribed magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.fixed)
            .filter(|(_, f)| **f)
            .fold(0.0, |m, (v, _)| m.max(v.abs()))
    }
}

impl ReferenceKind {
    pub fn build(&self, geometry: &StripGeometry) -> Result<Box<dyn ReferenceField>, BcError> {
        match *self {
            ReferenceKind::Example => match geometry.corner().and_then(|d| d.spec()) {
                Some(DomainSpec::Example) => Ok(Box::new(ExampleField)),
                _ => Err(BcError::WrongDomain {
                    field: "example",
                    needs: "example",
                }),
            },
            ReferenceKind::WedgeMode { k, amplitude } => {
                if k == 0 {
                    return Err(BcError::ModeIndex);
                }
                match geometry.corner() {
                    Some(d) if matches!(d.spec(), Some(DomainSpec::Wedge { .. })) => {
                        Ok(Box::new(WedgeMode {
                            theta: d.opening(),
                            theta0: d.theta_lo().limit(),
                            k,
                            amplitude,
                        }))
                    }
                    _ => Err(BcError::WrongDomain {
                        field: "wedge_mode",
                        needs: "wedge",
                    }),
                }
            }
        }
    }
}

impl Profile {
    pub fn label(&self) -> &'static str {
        match self {
            Profile::UniformFlux { .. } => "uniform_flux",
            Profile::Mode { .. } => "mode",
            Profile::Exact { .. } => "exact",
        }
    }

    /// Evaluator of the profile at strip points of `mesh`.
    pub fn evaluator<'a>(
        &self,
        mesh: &'a StripMesh,
    ) -> Result<Box<dyn Fn(usize) -> f64 + 'a>, BcError> {
        let geometry = mesh.geometry();
        Ok(match (*self, geometry) {
            (Profile::UniformFlux { m_inf }, StripGeometry::Corner(d)) => {
                let d = d.clone();
                Box::new(move |k| {
                    let p = mesh.node(k);
                    let span = d.theta_hi().ell_derivatives(p.ell)[0]
                        - d.theta_lo().ell_derivatives(p.ell)[0];
                    let arc = p.ell.exp() * span;
                    m_inf * arc / PI * (PI * p.lam).sin()
                })
            }
            (Profile::UniformFlux { m_inf }, StripGeometry::Channel(c)) => {
                let w = c.width;
                Box::new(move |k| m_inf * mesh.node(k).lam * w)
            }
            (Profile::Mode { k: mode, amplitude }, g) => {
                if mode == 0 {
                    return Err(BcError::ModeIndex);
                }
                let kpi = mode as f64 * PI;
                match g {
                    StripGeometry::Corner(d) => {
                        let theta = d.opening();
                        Box::new(move |k| {
                            let p: StripPoint = mesh.node(k);
                            amplitude * (kpi / theta * p.ell).exp() * (kpi * p.lam).sin()
                        })
                    }
                    StripGeometry::Channel(c) => {
                        let w = c.width;
                        Box::new(move |k| {
                            let p = mesh.node(k);
                            amplitude * (kpi / w * p.ell).exp() * (kpi * p.lam).sin()
                        })
                    }
                }
            }
            (Profile::Exact { reference }, g) => {
                let field = reference.build(g)?;
                Box::new(move |k| field.psi(mesh.node_x(k)))
            }
        })
    }
}

/// Fixes walls and Dirichlet arcs of `mesh` from `spec`.
pub fn build_constraints(mesh: &StripMesh, spec: &BoundarySpec) -> Result<Constraints, BcError> {
    let eval = spec.profile.evaluator(mesh)?;
    let n = mesh.n_nodes();
    let (ne, nl) = (mesh.n_ell(), mesh.n_lam());
    let mut fixed = vec![false; n];
    let mut values = vec![0.0; n];
    let connected = mesh.geometry().walls_connected();

    let mut scale: f64 = 1.0;
    let mut wall_check = Vec::new();
    for i in 0..=ne {
        let dirichlet_arc = (i == 0 && spec.inner == EndCondition::Dirichlet)
            || (i == ne && spec.outer == EndCondition::Dirichlet);
        for j in 0..=nl {
            let k = mesh.node_index(i, j);
            let wall = j == 0 || j == nl;
            if !(wall || dirichlet_arc) {
                continue;
            }
            let v = eval(k);
            if !v.is_finite() {
                let p = mesh.node(k);
                return Err(BcError::NonFinite { ell: p.ell, lam: p.lam });
            }
            fixed[k] = true;
            if wall && connected {
                wall_check.push((k, v));
                values[k] = 0.0;
            } else {
                scale = scale.max(v.abs());
                values[k] = v;
            }
        }
    }
    for (k, v) in wall_check {
        if v.abs() > 1e-9 * scale {
            let p = mesh.node(k);
            return Err(BcError::NonzeroAtWall {
                ell: p.ell,
                lam: p.lam,
                value: v,
            });
        }
    }
    Ok(Constraints { fixed, values })
}
