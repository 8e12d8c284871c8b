//! End-to-end runs: config to mesh, constraints, solve, diagnostics, field
//! file and report; sweeps over one parameter; reference-field emission.

use crate::config::{ConfigError, ExperimentConfig, SweepKey};
use crate::diagnostics::{diagnose, geometric_limit, DiagnosticsReport};
use crate::discretization::{Profile, StripMesh};
use crate::fields::exact::ReferenceField;
use crate::fields::vortex::{vortex_sheet_field, VortexError};
use crate::fields::{state_from_gradient, NodalDerivatives};
use crate::gas::{GasMode, GasModel};
use crate::geometry::{CornerDomain, DomainSpec, StripGeometry};
use crate::io::{FieldFile, Report, FIELD_FORMAT_VERSION};
use crate::mat2::{self, Vec2};
use crate::solver::{solve, SolveError, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Converged with every quadrature state below the cutoff threshold.
    Certified,
    /// Converged, but only for the modified (cutoff) equation.
    CutoffActive,
    Diverged,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Certified => 0,
            RunStatus::CutoffActive => 2,
            RunStatus::Diverged => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RunStatus::Certified => "certified",
            RunStatus::CutoffActive => "cutoff_active",
            RunStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub mesh: StripMesh,
    pub psi: Vec<f64>,
    pub solve: Option<SolveReport>,
    pub solve_error: Option<String>,
    pub exact_error: Option<f64>,
    pub diagnostics: DiagnosticsReport,
    pub field: FieldFile,
    pub report: Report,
}

fn domain_kind(d: &DomainSpec) -> &'static str {
    match d {
        DomainSpec::Wedge { .. } => "wedge",
        DomainSpec::SmoothedWedge { .. } => "smoothed_wedge",
        DomainSpec::Example => "example",
        DomainSpec::Channel { .. } => "channel",
    }
}

/// Relative L2 error of the bilinear interpolant of `psi` against `exact`,
/// by quadrature with the physical area element.
pub fn relative_l2_error(mesh: &StripMesh, psi: &[f64], exact: &dyn ReferenceField) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for c in 0..mesh.n_cells() {
        let ids = mesh.cell_nodes(c);
        for qp in mesh.cell_qps(c) {
            let uh: f64 = (0..4).map(|a| qp.basis[a] * psi[ids[a]]).sum();
            let u = exact.psi(qp.x);
            num += qp.wdet * (uh - u).powi(2);
            den += qp.wdet * u * u;
        }
    }
    (num / den).sqrt()
}

/// Nodal rows `ell lam x y psi vx vy rho mach` from recovered gradients.
pub fn field_rows(mesh: &StripMesh, mode: &GasMode, psi: &[f64]) -> Vec<[f64; 9]> {
    let d = NodalDerivatives::recover(mesh, psi);
    (0..mesh.n_nodes())
        .map(|k| {
            let p = mesh.node(k);
            let x = mesh.node_x(k);
            let s = state_from_gradient(mode, p, x, d.grad[k]);
            [p.ell, p.lam, x[0], x[1], psi[k], s.v[0], s.v[1], s.rho, s.mach]
        })
        .collect()
}

fn field_header(mesh: &StripMesh, domain: &str, gas: &str, source: &str) -> Vec<(String, String)> {
    vec![
        ("format_version".into(), FIELD_FORMAT_VERSION.to_string()),
        ("source".into(), source.into()),
        ("domain_kind".into(), domain.into()),
        ("gas_mode".into(), gas.into()),
        ("n_ell".into(), mesh.n_ell().to_string()),
        ("n_lam".into(), mesh.n_lam().to_string()),
        ("ell_min".into(), crate::io::fmt_f64(mesh.ell_min())),
        ("ell_max".into(), crate::io::fmt_f64(mesh.ell_max())),
    ]
}

pub fn solve_report(r: &SolveReport) -> Report {
    let mut out = Report::new();
    out.flag("converged", r.converged)
        .int("iterations", r.iterations)
        .num("residual_norm", r.residual_norm)
        .num("energy", r.energy)
        .num("max_q", r.max_q)
        .num("q_bar", r.q_bar)
        .flag("cutoff_active", r.cutoff_active)
        .num("max_mach", r.max_mach);
    match &r.certificate {
        Some(c) => {
            out.num("certificate.raw_residual_norm", c.raw_residual_norm)
                .flag("certificate.identical", c.identical);
        }
        None => {
            out.text("certificate.raw_residual_norm", "none")
                .text("certificate.identical", "none");
        }
    }
    out.list("residual_history", &r.residual_history)
        .list("energy_history", &r.energy_history);
    out
}

pub fn diagnostics_report(d: &DiagnosticsReport) -> Report {
    let mut out = Report::new();
    out.num("total_dirichlet", d.total_dirichlet).num("wall_trace", d.wall_trace);
    match &d.decay {
        Ok(f) => {
            out.num("decay.alpha", f.alpha)
                .num("decay.residual", f.residual)
                .int("decay.samples", f.samples);
        }
        Err(e) => {
            out.text("decay.error", e.to_string());
        }
    }
    out.num("qc.k_max", d.qc.k_max)
        .num("qc.bound", d.qc.bound)
        .int("qc.valid", d.qc.valid)
        .int("qc.degenerate", d.qc.degenerate)
        .num("qc.violation_fraction", d.qc.violation_fraction)
        .num("qc.excess_p99", d.qc.excess_p99);
    match &d.farfield {
        Ok(ff) => {
            out.int("farfield.bands", ff.bands.len());
            for (n, b) in ff.bands.iter().enumerate() {
                out.num(&format!("farfield.band.{n}.lo"), b.lo)
                    .num(&format!("farfield.band.{n}.hi"), b.hi)
                    .num(&format!("farfield.band.{n}.mean_speed"), b.mean_speed)
                    .num(&format!("farfield.band.{n}.max_speed"), b.max_speed);
            }
            out.num("farfield.extrapolated", ff.extrapolated);
        }
        Err(e) => {
            out.text("farfield.error", e.to_string());
        }
    }
    out.flag("farfield.vanishes", d.farfield_vanishes);
    match &d.slip {
        Ok(s) => {
            out.num("slip.s0", s[0]).num("slip.s1", s[1]);
        }
        Err(e) => {
            out.text("slip.error", e.to_string());
        }
    }
    match &d.holder {
        Ok(h) => {
            out.num("holder.alpha", h.alpha)
                .num("holder.estimate", h.estimate)
                .int("holder.pairs", h.pairs);
        }
        Err(e) => {
            out.text("holder.error", e.to_string());
        }
    }
    match d.midline_slope {
        Some(s) => out.num("midline_slope", s),
        None => out.text("midline_slope", "none"),
    };
    out.list("j_profile.ell", &d.profile.ell).list("j_profile.j", &d.profile.j);
    out
}

fn header_report(cfg: &ExperimentConfig) -> Report {
    let mut out = Report::new();
    out.text("domain.kind", domain_kind(&cfg.domain))
        .text("gas.mode", cfg.gas.label())
        .num("mesh.ell_min", cfg.mesh.ell_min)
        .num("mesh.ell_max", cfg.mesh.ell_max)
        .int("mesh.n_ell", cfg.mesh.n_ell)
        .int("mesh.n_lam", cfg.mesh.n_lam)
        .text("bcs.profile", cfg.bcs.profile.label());
    out
}

fn exact_reference(cfg: &ExperimentConfig, mesh: &StripMesh) -> Option<Box<dyn ReferenceField>> {
    match cfg.bcs.profile {
        Profile::Exact { reference } => reference.build(mesh.geometry()).ok(),
        _ => None,
    }
}

/// Config through to field file and report; only configuration problems are
/// errors, solver failure is a status.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, ConfigError> {
    let prepared = cfg.prepare()?;
    let mesh = prepared.mesh;
    let (status, psi, solve_rep, solve_error) = match solve(&mesh, &cfg.gas, &prepared.constraints, &cfg.solve) {
        Ok(sol) => {
            let r = sol.report;
            let certified = !r.cutoff_active && (cfg.gas.gas().is_none() || r.certificate.is_some_and(|c| c.identical));
            let status = if certified {
                RunStatus::Certified
            } else {
                RunStatus::CutoffActive
            };
            (status, sol.psi, Some(r), None)
        }
        Err(SolveError::Singular { fixed, nodes }) => {
            return Err(ConfigError::new(
                "bcs",
                format!("boundary conditions leave the system singular ({fixed} of {nodes} nodes constrained)"),
            ))
        }
        Err(e) => {
            let psi = match &e {
                SolveError::Divergence { psi, .. } => psi.clone(),
                SolveError::Continuation { source, .. } => match source.as_ref() {
                    SolveError::Divergence { psi, .. } => psi.clone(),
                    _ => vec![0.0; mesh.n_nodes()],
                },
                _ => vec![0.0; mesh.n_nodes()],
            };
            (RunStatus::Diverged, psi, None, Some(e.to_string()))
        }
    };
    let exact_error = exact_reference(cfg, &mesh).map(|r| relative_l2_error(&mesh, &psi, r.as_ref()));
    let diagnostics = diagnose(&mesh, &cfg.gas, &psi, &cfg.diagnostics, cfg.solve.execution);

    let mut report = Report::new();
    report.text("run.status", status.label());
    report.extend("", &header_report(cfg));
    match &solve_rep {
        Some(r) => {
            report.extend("solve.", &solve_report(r));
        }
        None => {
            report.text("solve.error", solve_error.clone().unwrap_or_default());
        }
    }
    match exact_error {
        Some(e) => report.num("exact.relative_l2_error", e),
        None => report.text("exact.relative_l2_error", "none"),
    };
    report.extend("diagnostics.", &diagnostics_report(&diagnostics));

    let field = FieldFile {
        header: field_header(&mesh, domain_kind(&cfg.domain), cfg.gas.label(), "solve"),
        rows: field_rows(&mesh, &cfg.gas, &psi),
    };
    Ok(RunOutcome {
        status,
        mesh,
        psi,
        solve: solve_rep,
        solve_error,
        exact_error,
        diagnostics,
        field,
        report,
    })
}

/// Diagnostics of a stored field on the mesh described by `cfg`.
pub fn diagnose_field(cfg: &ExperimentConfig, field: &FieldFile) -> Result<Report, ConfigError> {
    let mesh = cfg.prepare()?.mesh;
    let mismatch = |what: &str| ConfigError::new("mesh", format!("field file {what} does not match the config mesh"));
    let dims = (field.header_usize("n_ell"), field.header_usize("n_lam"));
    match dims {
        (Ok(a), Ok(b)) if a == mesh.n_ell() && b == mesh.n_lam() => {}
        _ => return Err(mismatch("dimensions")),
    }
    let same = |key: &str, v: f64| field.header_f64(key).is_ok_and(|h| (h - v).abs() <= 1e-12 * v.abs().max(1.0));
    if !same("ell_min", mesh.ell_min()) || !same("ell_max", mesh.ell_max()) {
        return Err(mismatch("ell range"));
    }
    let psi = field.column("psi").expect("psi column exists");
    let d = diagnose(&mesh, &cfg.gas, &psi, &cfg.diagnostics, cfg.solve.execution);
    let mut report = Report::new();
    report.text("source", field.header_value("source").unwrap_or("unknown"));
    report.extend("", &header_report(cfg));
    report.extend("diagnostics.", &diagnostics_report(&d));
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct SweepCase {
    pub value: f64,
    pub config: ExperimentConfig,
    pub outcome: RunOutcome,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub key: SweepKey,
    pub cases: Vec<SweepCase>,
    pub summary: Report,
}

impl SweepOutcome {
    /// Worst exit code over the cases.
    pub fn exit_code(&self) -> i32 {
        self.cases.iter().map(|c| c.outcome.status.exit_code()).max().unwrap_or(0)
    }
}

/// Least-squares slope of `log y` against `log x`.
fn log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(_, v)| **v > 0.0).map(|(a, b)| (*a, *b)).collect();
    crate::diagnostics::log_log_slope(&pts, 0.0, f64::INFINITY)
}

/// Independent runs over `values` of one parameter, in value order.
pub fn run_sweep(cfg: &ExperimentConfig, key: SweepKey, values: &[f64]) -> Result<SweepOutcome, ConfigError> {
    if values.is_empty() {
        return Err(ConfigError::new("--values", "at least one value is needed"));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ConfigError::new("--values", "sweep values must be strictly ascending"));
    }
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|v| cfg.with_sweep_value(key, *v))
        .collect::<Result<_, _>>()?;
    let exec = cfg.solve.execution;
    let outcomes = exec.try_map(configs.len(), |n| run(&configs[n]))?;
    let cases: Vec<SweepCase> = configs
        .into_iter()
        .zip(outcomes)
        .zip(values)
        .map(|((config, outcome), value)| SweepCase {
            value: *value,
            config,
            outcome,
        })
        .collect();

    let mut s = Report::new();
    s.text("sweep.key", key.label()).list("sweep.values", values).int("sweep.cases", cases.len());
    let mut interior = Vec::new();
    let mut errors = Vec::new();
    for (n, c) in cases.iter().enumerate() {
        let o = &c.outcome;
        let p = format!("case.{n}.");
        s.num(&format!("{p}value"), c.value).text(&format!("{p}status"), o.status.label());
        match &o.solve {
            Some(r) => s.num(&format!("{p}max_mach"), r.max_mach).int(&format!("{p}iterations"), r.iterations),
            None => s.text(&format!("{p}max_mach"), "none").text(&format!("{p}iterations"), "none"),
        };
        match &o.diagnostics.farfield {
            Ok(ff) => {
                let maxima: Vec<f64> = ff.bands.iter().map(|b| b.max_speed).collect();
                let last = *maxima.last().expect("nonempty bands");
                s.list(&format!("{p}band_max"), &maxima)
                    .num(&format!("{p}interior_band_max"), last)
                    .num(&format!("{p}extrapolated"), ff.extrapolated);
                interior.push(last);
            }
            Err(e) => {
                s.text(&format!("{p}farfield_error"), e.to_string());
                interior.push(f64::NAN);
            }
        }
        match &o.diagnostics.decay {
            Ok(f) => s.num(&format!("{p}decay_alpha"), f.alpha),
            Err(_) => s.text(&format!("{p}decay_alpha"), "none"),
        };
        match o.exact_error {
            Some(e) => {
                s.num(&format!("{p}exact_error"), e);
                errors.push(e);
            }
            None => {
                s.text(&format!("{p}exact_error"), "none");
            }
        }
    }
    s.list("sweep.interior_band_max", &interior);
    s.flag(
        "sweep.interior_decreasing",
        interior.windows(2).all(|w| w[1] < w[0]),
    );
    s.num("sweep.interior_extrapolated", geometric_limit(&interior));
    if key == SweepKey::Mesh && errors.len() == cases.len() && errors.len() >= 2 {
        // error ~ h^p with h proportional to 1 / value
        let h: Vec<f64> = values.iter().map(|v| 1.0 / v).collect();
        match log_slope(&h, &errors) {
            Some(p) => s.num("sweep.l2_order", p),
            None => s.text("sweep.l2_order", "none"),
        };
    }
    Ok(SweepOutcome {
        key,
        cases,
        summary: s,
    })
}

/// Exact fields sampled on a strip grid.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceRequest {
    Example {
        ell_max: f64,
        n_ell: usize,
        n_lam: usize,
    },
    Mode {
        theta: f64,
        k: u32,
        amplitude: f64,
        ell_max: f64,
        n_ell: usize,
        n_lam: usize,
    },
    VortexSheet {
        theta: f64,
        v_inf: Vec2,
        /// Sheet offset from `theta_hi - pi`; aligned with `v_inf` when absent.
        offset: Option<f64>,
        gas: Option<GasModel>,
        ell_min: f64,
        ell_max: f64,
        n_ell: usize,
        n_lam: usize,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum ReferenceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Vortex(#[from] VortexError),
}

fn grid_mesh(domain: DomainSpec, ell_min: f64, ell_max: f64, n_ell: usize, n_lam: usize) -> Result<StripMesh, ConfigError> {
    let g = StripGeometry::from_spec(&domain).map_err(|e| ConfigError::new("domain", e.to_string()))?;
    crate::discretization::build_mesh(g, ell_min, ell_max, n_ell, n_lam, 2).map_err(|e| ConfigError::new("mesh", e.to_string()))
}

pub fn reference_field(req: &ReferenceRequest) -> Result<FieldFile, ReferenceError> {
    let exact_rows = |mesh: &StripMesh, f: &dyn ReferenceField| -> Vec<[f64; 9]> {
        (0..mesh.n_nodes())
            .map(|k| {
                let p = mesh.node(k);
                let x = mesh.node_x(k);
                let v = f.velocity(x);
                [p.ell, p.lam, x[0], x[1], f.psi(x), v[0], v[1], 1.0, 0.0]
            })
            .collect()
    };
    match *req {
        ReferenceRequest::Example { ell_max, n_ell, n_lam } => {
            let mesh = grid_mesh(DomainSpec::Example, 2f64.ln(), ell_max, n_ell, n_lam)?;
            let f = crate::fields::exact::ExampleField;
            Ok(FieldFile {
                header: field_header(&mesh, "example", "incompressible", "reference:example"),
                rows: exact_rows(&mesh, &f),
            })
        }
        ReferenceRequest::Mode {
            theta,
            k,
            amplitude,
            ell_max,
            n_ell,
            n_lam,
        } => {
            let mesh = grid_mesh(DomainSpec::Wedge { theta, r_min: 1.0 }, 0.0, ell_max, n_ell, n_lam)?;
            let f = crate::fields::exact::WedgeMode {
                theta,
                theta0: -0.5 * theta,
                k,
                amplitude,
            };
            let mut header = field_header(&mesh, "wedge", "incompressible", "reference:mode");
            header.push(("theta".into(), crate::io::fmt_f64(theta)));
            Ok(FieldFile {
                header,
                rows: exact_rows(&mesh, &f),
            })
        }
        ReferenceRequest::VortexSheet {
            theta,
            v_inf,
            offset,
            gas,
            ell_min,
            ell_max,
            n_ell,
            n_lam,
        } => {
            let domain = CornerDomain::wedge(theta, 1.0).map_err(|e| ConfigError::new("theta", e.to_string()))?;
            let base = 0.5 * theta - std::f64::consts::PI;
            let offset = offset.unwrap_or_else(|| {
                // sheet along v_inf or against it, whichever lies in the wedge
                let a = v_inf[1].atan2(v_inf[0]);
                let wrap = |t: f64| (t + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
                let along = wrap(a);
                let against = wrap(a + std::f64::consts::PI);
                let inside = |t: f64| t.abs() < 0.5 * theta;
                let target = if inside(along) { along } else { against };
                target - base
            });
            let mode = gas.map_or(GasMode::Incompressible, GasMode::Compressible);
            let flow = vortex_sheet_field(v_inf, &domain, &mode, offset)?;
            let mesh = grid_mesh(DomainSpec::Wedge { theta, r_min: 1.0 }, ell_min, ell_max, n_ell, n_lam)?;
            let rows = (0..mesh.n_nodes())
                .map(|k| {
                    let p = mesh.node(k);
                    let x = mesh.node_x(k);
                    let (rho, v, _) = crate::fields::vortex::FlowSampler::sample(&flow, x);
                    let mach = match &gas {
                        Some(g) => mat2::norm(&v) / rho.powf(0.5 * (g.gamma() - 1.0)),
                        None => 0.0,
                    };
                    [p.ell, p.lam, x[0], x[1], flow.psi(x), v[0], v[1], rho, mach]
                })
                .collect();
            let mut header = field_header(&mesh, "wedge", mode.label(), "reference:vortex_sheet");
            header.push(("theta".into(), crate::io::fmt_f64(theta)));
            header.push(("sheet_angle".into(), crate::io::fmt_f64(flow.sheet_angle)));
            Ok(FieldFile { header, rows })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str = r#"
[domain]
kind = "wedge"
theta = 4.71238898038469
r_min = 1.0

[gas]
mode = "compressible"
gamma = 1.4
mach_cap = 0.8

[mesh]
ell_min = 0.0
ell_max = 4.0
n_ell = 32
n_lam = 8

[bcs]
inner = "dirichlet"
outer = "natural"

[bcs.profile]
kind = "uniform_flux"
m_inf = 0.25
"#;

    #[test]
    fn run_is_certified_and_deterministic() {
        let cfg = ExperimentConfig::from_toml(CFG).unwrap();
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.status, RunStatus::Certified);
        assert_eq!(a.report.render(), b.report.render());
        assert_eq!(a.field.render(), b.field.render());
        assert_eq!(a.report.get("run.status"), Some("certified"));
        assert_eq!(a.report.get("solve.certificate.identical"), Some("true"));
    }

    #[test]
    fn zero_amplitude_is_rest_state() {
        let cfg = ExperimentConfig::from_toml(&CFG.replace("m_inf = 0.25", "m_inf = 0.0")).unwrap();
        let o = run(&cfg).unwrap();
        assert_eq!(o.status, RunStatus::Certified);
        assert!(o.psi.iter().all(|v| *v == 0.0));
        assert_eq!(o.report.get_f64("diagnostics.total_dirichlet"), Some(0.0));
        assert_eq!(o.report.get_f64("solve.max_mach"), Some(0.0));
    }

    #[test]
    fn stored_field_diagnoses_like_the_run() {
        let cfg = ExperimentConfig::from_toml(CFG).unwrap();
        let o = run(&cfg).unwrap();
        let back = FieldFile::parse(&o.field.render()).unwrap();
        let r = diagnose_field(&cfg, &back).unwrap();
        for (k, v) in r.entries().iter().filter(|(k, _)| k.starts_with("diagnostics.")) {
            assert_eq!(o.report.get(k), Some(v.as_str()), "{k}");
        }
        let other = cfg.with_sweep_value(SweepKey::Mesh, 2.0).unwrap();
        assert!(diagnose_field(&other, &back).is_err());
    }

    #[test]
    fn l_sweep_summary() {
        let cfg = ExperimentConfig::from_toml(CFG).unwrap();
        let s = run_sweep(&cfg, SweepKey::L, &[3.0, 4.0]).unwrap();
        assert_eq!(s.cases.len(), 2);
        assert_eq!(s.cases[1].config.mesh.n_ell, 32);
        assert_eq!(s.cases[0].config.mesh.n_ell, 24);
        assert!(s.summary.get("sweep.interior_band_max").is_some());
        assert_eq!(s.exit_code(), 0);
        assert!(run_sweep(&cfg, SweepKey::L, &[4.0, 3.0]).is_err());
        let single = run_sweep(&cfg, SweepKey::L, &[4.0]).unwrap();
        assert_eq!(single.cases[0].outcome.report.render(), run(&cfg).unwrap().report.render());
    }

    #[test]
    fn reference_example_has_zero_walls() {
        let f = reference_field(&ReferenceRequest::Example {
            ell_max: 5.0,
            n_ell: 64,
            n_lam: 64,
        })
        .unwrap();
        for r in &f.rows {
            if r[1] == 0.0 || r[1] == 1.0 {
                assert!(r[4].abs() < 1e-12, "{r:?}");
            }
        }
        let back = FieldFile::parse(&f.render()).unwrap();
        let direct = crate::fields::exact::ExampleField;
        for r in &back.rows {
            assert_eq!(r[4], direct.psi([r[2], r[3]]));
        }
    }

    #[test]
    fn reference_vortex_sheet_sides() {
        let f = reference_field(&ReferenceRequest::VortexSheet {
            theta: 1.5 * std::f64::consts::PI,
            v_inf: [0.3, 0.0],
            offset: None,
            gas: None,
            ell_min: 0.0,
            ell_max: 3.0,
            n_ell: 12,
            n_lam: 12,
        })
        .unwrap();
        let mut above = 0;
        let mut below = 0;
        for r in &f.rows {
            if r[5] == 0.3 {
                above += 1;
                assert!(r[3] > 0.0);
            } else {
                below += 1;
                assert_eq!([r[5], r[6]], [0.0, 0.0]);
            }
        }
        assert!(above > 0 && below > 0);
    }
}
