//! A rotational steady flow in a protruding corner: uniform flow on one side of
//! a straight vortex sheet, fluid at rest on the other, equal pressure across.

use thiserror::Error;

use super::integrate_split;
use crate::discretization::StripMesh;
use crate::gas::{GasError, GasMode};
use crate::geometry::{CornerDomain, StripPoint};
use crate::mat2::{self, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VortexError {
    #[error("v_inf = ({0}, {1}) is not tangent to the sheet; the normal velocity must vanish on both sides")]
    NotTangent(f64, f64),
    #[error("the sheet at angle {angle} leaves the domain; a protruding corner (opening > pi) is needed")]
    SheetOutside { angle: f64 },
    #[error(transparent)]
    Gas(#[from] GasError),
}

/// Pointwise density, velocity and pressure of a (possibly discontinuous) flow.
pub trait FlowSampler: Sync {
    fn sample(&self, x: Vec2) -> (f64, Vec2, f64);

    /// Function whose zero set carries the discontinuities, if any.
    fn level_set(&self, _x: Vec2) -> Option<f64> {
        None
    }
}

/// Uniform state everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformFlow {
    pub rho: f64,
    pub v: Vec2,
    pub p: f64,
}

impl FlowSampler for UniformFlow {
    fn sample(&self, _x: Vec2) -> (f64, Vec2, f64) {
        (self.rho, self.v, self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexSheetFlow {
    pub v_inf: Vec2,
    /// Unit vector along the sheet, which passes through the origin.
    pub sheet_dir: Vec2,
    pub sheet_angle: f64,
    pub rho_above: f64,
    pub rho_below: f64,
    pub p_above: f64,
    pub p_below: f64,
    /// `|v|^2/2 + enthalpy` on each side; the sides need not agree.
    pub bernoulli_above: f64,
    pub bernoulli_below: f64,
}

/// Sheet along `theta_hi(inf) - pi + offset`: the continuation of the flow
/// that runs along the upper wall into the corner.
pub fn vortex_sheet_field(
    v_inf: Vec2,
    domain: &CornerDomain,
    mode: &GasMode,
    offset: f64,
) -> Result<VortexSheetFlow, VortexError> {
    let angle = domain.theta_hi().limit() - std::f64::consts::PI + offset;
    let lo = domain.theta_lo().limit();
    let hi = domain.theta_hi().limit();
    if !(angle > lo && angle < hi) {
        return Err(VortexError::SheetOutside { angle });
    }
    let dir = [angle.cos(), angle.sin()];
    let speed = mat2::norm(&v_inf);
    let cross = dir[0] * v_inf[1] - dir[1] * v_inf[0];
    if cross.abs() > 1e-12 * speed.max(1.0) {
        return Err(VortexError::NotTangent(v_inf[0], v_inf[1]));
    }
    let (rho, p, enthalpy) = match mode {
        GasMode::Incompressible => (1.0, 0.0, 0.0),
        GasMode::Compressible(g) => {
            let rho = g.density_from_speed(speed)?;
            let s = g.state_from_density(rho)?;
            (rho, s.pressure, s.enthalpy)
        }
    };
    Ok(VortexSheetFlow {
        v_inf,
        sheet_dir: dir,
        sheet_angle: angle,
        rho_above: rho,
        rho_below: rho,
        p_above: p,
        p_below: p,
        bernoulli_above: 0.5 * speed * speed + enthalpy,
        bernoulli_below: enthalpy,
    })
}

impl VortexSheetFlow {
    /// Copy with prescribed side densities and polytropic pressures
    /// `rho^gamma / gamma`; unequal densities break pressure continuity.
    pub fn with_densities(&self, gamma: f64, rho_above: f64, rho_below: f64) -> Self {
        VortexSheetFlow {
            rho_above,
            rho_below,
            p_above: rho_above.powf(gamma) / gamma,
            p_below: rho_below.powf(gamma) / gamma,
            ..*self
        }
    }

    /// Signed distance to the sheet line, positive on the flowing side.
    pub fn signed_distance(&self, x: Vec2) -> f64 {
        self.sheet_dir[0] * x[1] - self.sheet_dir[1] * x[0]
    }

    /// Stream function: `rho |v| n` above the sheet, zero below.
    pub fn psi(&self, x: Vec2) -> f64 {
        let n = self.signed_distance(x);
        if n > 0.0 {
            let sign = mat2::dot(&self.v_inf, &self.sheet_dir).signum();
            sign * self.rho_above * mat2::norm(&self.v_inf) * n
        } else {
            0.0
        }
    }
}

impl FlowSampler for VortexSheetFlow {
    fn sample(&self, x: Vec2) -> (f64, Vec2, f64) {
        if self.signed_distance(x) > 0.0 {
            (self.rho_above, self.v_inf, self.p_above)
        } else {
            (self.rho_below, [0.0, 0.0], self.p_below)
        }
    }

    fn level_set(&self, x: Vec2) -> Option<f64> {
        Some(self.signed_distance(x))
    }
}

/// Square `[-half_width, half_width]^2` in coordinates `(s, n)` along `axis` and
/// its left normal, centred at `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakRegion {
    pub center: Vec2,
    pub axis: Vec2,
    pub half_width: f64,
}

impl WeakRegion {
    fn to_x(self, s: f64, n: f64) -> Vec2 {
        let nrm = mat2::perp(&self.axis);
        [
            self.center[0] + s * self.axis[0] + n * nrm[0],
            self.center[1] + s * self.axis[1] + n * nrm[1],
        ]
    }
}

/// Largest absolute residuals over the test-function battery.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakResidual {
    pub mass: f64,
    pub momentum: f64,
    pub tests: usize,
}

fn bump(t: f64) -> (f64, f64) {
    if t.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let d = 1.0 - t * t;
    let b = (-1.0 / d).exp();
    (b, -2.0 * t / (d * d) * b)
}

/// Tensor bumps at scales `{0.2, 0.4, 0.6} * half_width` centred on a 3 x 3
/// grid `{-0.4, 0, 0.4} * half_width`.
pub fn test_battery(half_width: f64) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(27);
    for scale in [0.2, 0.4, 0.6] {
        for cs in [-0.4, 0.0, 0.4] {
            for cn in [-0.4, 0.0, 0.4] {
                out.push((scale * half_width, cs * half_width, cn * half_width));
            }
        }
    }
    out
}

/// `int rho v . grad phi` and `int (rho v v^T + p I) grad phi` for each test
/// bump, by composite Gauss-4 on `panels x panels` squares covering the bump's
/// support. Panels crossed by
/// the sampler's level set are split along the normal coordinate, which is
/// exact when the discontinuity is a line of constant `n`.
pub fn weak_euler_residual(
    flow: &dyn FlowSampler,
    region: &WeakRegion,
    panels: usize,
) -> WeakResidual {
    let hw = region.half_width;
    let nrm = mat2::perp(&region.axis);
    let battery = test_battery(hw);
    let level_n = |n: f64| flow.level_set(region.to_x(0.0, n));
    let has_level = level_n(0.0).is_some();

    let mut mass: f64 = 0.0;
    let mut momentum: f64 = 0.0;
    for &(a, cs, cn) in &battery {
        let integrand = |s: f64, n: f64, which: usize| -> f64 {
            let (bs, dbs) = bump((s - cs) / a);
            let (bn, dbn) = bump((n - cn) / a);
            if bs == 0.0 || bn == 0.0 {
                return 0.0;
            }
            let ds = dbs / a * bn;
            let dn = bs * dbn / a;
            let grad = [
                ds * region.axis[0] + dn * nrm[0],
                ds * region.axis[1] + dn * nrm[1],
            ];
            let (rho, v, p) = flow.sample(region.to_x(s, n));
            let vg = mat2::dot(&v, &grad);
            match which {
                0 => rho * vg,
                k => rho * v[k - 1] * vg + p * grad[k - 1],
            }
        };
        for which in 0..3 {
            let inner = |n: f64| {
                let f = |s: f64| integrand(s, n, which);
                integrate_split(&f, None, cs - a, cs + a, panels)
            };
            let lv = |n: f64| level_n(n).unwrap_or(1.0);
            let level: Option<&dyn Fn(f64) -> f64> = if has_level { Some(&lv) } else { None };
            let val = integrate_split(&inner, level, cn - a, cn + a, panels);
            if which == 0 {
                mass = mass.max(val.abs());
            } else {
                momentum = momentum.max(val.abs());
            }
        }
    }
    WeakResidual {
        mass,
        momentum,
        tests: battery.len(),
    }
}

/// Circulation of the sampled velocity around the circle of given centre and
/// radius, counterclockwise.
pub fn circle_circulation(flow: &dyn FlowSampler, center: Vec2, radius: f64, panels: usize) -> f64 {
    let at = |t: f64| [center[0] + radius * t.cos(), center[1] + radius * t.sin()];
    let f = |t: f64| {
        let v = flow.sample(at(t)).1;
        radius * (-v[0] * t.sin() + v[1] * t.cos())
    };
    let level = |t: f64| flow.level_set(at(t)).unwrap_or(1.0);
    integrate_split(&f, Some(&level), 0.0, 2.0 * std::f64::consts::PI, panels)
}

/// Circulation per cell of the sampled velocity, with edge integrals split at
/// the sampler's discontinuity. Divided by cell area this is the discrete
/// vorticity.
pub fn sampled_cell_circulation(mesh: &StripMesh, flow: &dyn FlowSampler, panels: usize) -> Vec<f64> {
    let vel = |_p: StripPoint, x: Vec2| flow.sample(x).1;
    let level = |x: Vec2| flow.level_set(x).unwrap_or(1.0);
    (0..mesh.n_cells())
        .map(|c| super::cell_circulation(mesh, c, &vel, Some(&level), panels))
        .collect()
}

/// Vorticity line density on cells crossed by the sheet: total circulation of
/// those cells divided by the sheet length they cover.
#[derive(Debug, Clone, PartialEq)]
pub struct SheetVorticity {
    pub sheet_cells: usize,
    pub circulation: f64,
    pub sheet_length: f64,
    pub line_density: f64,
    /// Largest `|circulation|` over cells not touching the sheet.
    pub off_sheet_max: f64,
}

pub fn sheet_vorticity(mesh: &StripMesh, flow: &VortexSheetFlow, panels: usize) -> SheetVorticity {
    let circ = sampled_cell_circulation(mesh, flow, panels);
    let mut on = 0;
    let mut total = 0.0;
    let mut off: f64 = 0.0;
    for (c, g) in circ.iter().enumerate() {
        let ids = mesh.cell_nodes(c);
        let signs: Vec<f64> = ids.iter().map(|k| flow.signed_distance(mesh.node_x(*k))).collect();
        let crosses = signs.iter().any(|s| *s > 0.0) && signs.iter().any(|s| *s <= 0.0);
        if crosses {
            on += 1;
            total += g;
        } else {
            off = off.max(g.abs());
        }
    }
    // the sheet is a ray from the origin: its length inside the strip is the
    // radial extent of the mesh along the sheet angle
    let length = mesh.ell_max().exp() - mesh.ell_min().exp();
    SheetVorticity {
        sheet_cells: on,
        circulation: total,
        sheet_length: length,
        line_density: total.abs() / length,
        off_sheet_max: off,
    }
}

/// Same measure from the discrete vorticity of the velocity sampled at the
/// nodes (contour circulation of its bilinear interpolant).
pub fn nodal_sheet_vorticity(mesh: &StripMesh, flow: &VortexSheetFlow) -> SheetVorticity {
    let vel: Vec<Vec2> = (0..mesh.n_nodes()).map(|k| flow.sample(mesh.node_x(k)).1).collect();
    let omega = super::nodal_vorticity(mesh, &vel);
    let mut on = 0;
    let mut total = 0.0;
    let mut off: f64 = 0.0;
    for (c, w) in omega.iter().enumerate() {
        let area: f64 = mesh.cell_qps(c).iter().map(|q| q.wdet).sum();
        let g = w * area;
        let ids = mesh.cell_nodes(c);
        let above = ids.iter().filter(|k| flow.signed_distance(mesh.node_x(**k)) > 0.0).count();
        if above > 0 && above < 4 {
            on += 1;
            total += g;
        } else {
            off = off.max(g.abs());
        }
    }
    let length = mesh.ell_max().exp() - mesh.ell_min().exp();
    SheetVorticity {
        sheet_cells: on,
        circulation: total,
        sheet_length: length,
        line_density: total.abs() / length,
        off_sheet_max: off,
    }
}
