//! Damped Newton on the cutoff stream-function system, with continuation in
//! the boundary amplitude and a re-assembly certificate for subsonic results.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{assemble, Assembled, AssemblyError, Constraints, Problem, StencilMatrix, StripMesh};
use crate::gas::{Closure, GasMode, GasModel};
use crate::linalg::{pcg, BandedCholesky, LinalgError};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    #[default]
    Direct,
    Pcg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Bound on `|R_free|_2 / sqrt(n_free)`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Line-search step reduction factor.
    pub backtrack: f64,
    pub min_step: f64,
    /// Number of amplitude stages when ramping the boundary data.
    pub continuation_steps: usize,
    pub linear_solver: LinearSolver,
    pub linear_tol: f64,
    pub execution: Execution,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            newton_tol: 1e-9,
            max_newton: 60,
            backtrack: 0.5,
            min_step: 2f64.powi(-20),
            continuation_steps: 1,
            linear_solver: LinearSolver::Direct,
            linear_tol: 1e-12,
            execution: Execution::default(),
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.newton_tol > 0.0) {
            return Err(format!("solve.newton_tol = {} must be positive", self.newton_tol));
        }
        if !(self.linear_tol > 0.0) {
            return Err(format!("solve.linear_tol = {} must be positive", self.linear_tol));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(format!("solve.backtrack = {} must lie in (0, 1)", self.backtrack));
        }
        if !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(format!("solve.min_step = {} must lie in (0, 1]", self.min_step));
        }
        if self.max_newton == 0 {
            return Err("solve.max_newton must be at least 1".into());
        }
        if self.continuation_steps == 0 {
            return Err("solve.continuation_steps must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("linear solve failed: {0}")]
    Linear(#[from] LinalgError),
    #[error("system is singular with {fixed} constrained of {nodes} nodes; pin at least one node per connected wall or end")]
    Singular { fixed: usize, nodes: usize },
    #[error("Newton stalled after {iterations} iterations at residual {residual:e}")]
    Divergence {
        iterations: usize,
        residual: f64,
        psi: Vec<f64>,
    },
    #[error("continuation failed at amplitude {amplitude}: {source}")]
    Continuation {
        amplitude: f64,
        #[source]
        source: Box<SolveError>,
    },
}

/// Raw-closure re-assembly of a converged cutoff solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub raw_residual_norm: f64,
    /// Raw and cutoff residual vectors agree bit for bit.
    pub identical: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
    pub residual_history: Vec<f64>,
    pub energy_history: Vec<f64>,
    pub energy: f64,
    pub energy_scale: f64,
    pub max_q: f64,
    /// `+inf` for incompressible runs.
    pub q_bar: f64,
    pub cutoff_active: bool,
    /// Zero for incompressible runs by convention.
    pub max_mach: f64,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub psi: Vec<f64>,
    pub report: SolveReport,
}

pub fn residual_norm(r: &[f64], constraints: &Constraints) -> f64 {
    let n = constraints.n_free().max(1) as f64;
    r.iter()
        .zip(&constraints.fixed)
        .filter(|(_, f)| !**f)
        .map(|(v, _)| v * v)
        .sum::<f64>()
        .sqrt()
        / n.sqrt()
}

fn linear_solve(a: &StencilMatrix, rhs: &[f64], config: &SolveConfig, constraints: &Constraints) -> Result<Vec<f64>, SolveError> {
    let singular = |e: LinalgError| match e {
        LinalgError::NotPositiveDefinite { .. } => SolveError::Singular {
            fixed: constraints.fixed.iter().filter(|f| **f).count(),
            nodes: constraints.fixed.len(),
        },
        e => SolveError::Linear(e),
    };
    match config.linear_solver {
        LinearSolver::Direct => {
            let f = BandedCholesky::factor(a).map_err(singular)?;
            let scale = a.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
            if f.min_pivot() <= 1e-14 * scale {
                return Err(singular(LinalgError::NotPositiveDefinite {
                    row: 0,
                    pivot: f.min_pivot(),
                }));
            }
            Ok(f.solve(rhs)?)
        }
        LinearSolver::Pcg => Ok(pcg(a, rhs, config.linear_tol, 20 * a.dim().max(50)).map_err(singular)?.0),
    }
}

fn newton(
    problem: &Problem<'_>,
    constraints: &Constraints,
    mut psi: Vec<f64>,
    config: &SolveConfig,
) -> Result<(Vec<f64>, Assembled, SolveReport), SolveError> {
    constraints.impose(&mut psi);
    let mut residual_history = Vec::new();
    let mut energy_history = Vec::new();
    let mut iterations = 0;
    loop {
        let a = assemble(problem, &psi, true)?;
        let norm = residual_norm(&a.residual, constraints);
        residual_history.push(norm);
        energy_history.push(a.energy);
        if norm <= config.newton_tol {
            let report = SolveReport {
                converged: true,
                iterations,
                residual_norm: norm,
                residual_history,
                energy_history,
                energy: a.energy,
                energy_scale: a.energy_scale,
                max_q: a.max_q,
                q_bar: f64::INFINITY,
                cutoff_active: false,
                max_mach: 0.0,
                certificate: None,
            };
            return Ok((psi, a, report));
        }
        if iterations == config.max_newton {
            return Err(SolveError::Divergence {
                iterations,
                residual: norm,
                psi,
            });
        }
        let rhs: Vec<f64> = a.residual.iter().map(|r| -r).collect();
        let jac = a.jacobian.as_ref().expect("jacobian requested");
        let delta = linear_solve(jac, &rhs, config, constraints)?;
        let slack = 1e-12 * a.energy_scale.max(f64::MIN_POSITIVE);
        let mut t = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = psi.iter().zip(&delta).map(|(p, d)| p + t * d).collect();
            if let Ok(b) = assemble(problem, &trial, false) {
                let trial_norm = residual_norm(&b.residual, constraints);
                if trial_norm < norm && b.energy <= a.energy + slack {
                    break Some(trial);
                }
            }
            t *= config.backtrack;
            if t < config.min_step {
                break None;
            }
        };
        match accepted {
            Some(next) => psi = next,
            None => {
                return Err(SolveError::Divergence {
                    iterations,
                    residual: norm,
                    psi,
                })
            }
        }
        iterations += 1;
    }
}

/// Harmonic stream function with the given boundary values.
pub fn solve_incompressible(
    mesh: &StripMesh,
    constraints: &Constraints,
    config: &SolveConfig,
) -> Result<Solution, SolveError> {
    config.validate().map_err(SolveError::Config)?;
    if !constraints.fixed.iter().any(|f| *f) {
        return Err(SolveError::Singular {
            fixed: 0,
            nodes: constraints.fixed.len(),
        });
    }
    let problem = Problem::new(mesh, Closure::Incompressible)
        .with_constraints(constraints)
        .with_execution(config.execution);
    let (psi, _, report) = newton(&problem, constraints, vec![0.0; mesh.n_nodes()], config)?;
    Ok(Solution { psi, report })
}

/// Re-assembles with the uncut coefficient law. `None` when the raw law cannot
/// be evaluated (some quadrature point is sonic or beyond).
pub fn certify(
    mesh: &StripMesh,
    gas: &GasModel,
    constraints: &Constraints,
    psi: &[f64],
    cutoff_residual: &[f64],
    execution: Execution,
) -> Option<Certificate> {
    let raw = Problem::new(mesh, Closure::Raw(*gas))
        .with_constraints(constraints)
        .with_execution(execution);
    let r = assemble(&raw, psi, false).ok()?.residual;
    let identical = r.len() == cutoff_residual.len()
        && r.iter().zip(cutoff_residual).all(|(a, b)| a.to_bits() == b.to_bits());
    Some(Certificate {
        raw_residual_norm: residual_norm(&r, constraints),
        identical,
    })
}

fn finish_compressible(
    mesh: &StripMesh,
    gas: &GasModel,
    constraints: &Constraints,
    psi: &[f64],
    a: &Assembled,
    mut report: SolveReport,
    execution: Execution,
) -> SolveReport {
    report.q_bar = gas.q_bar();
    report.cutoff_active = a.max_q > gas.q_bar();
    report.max_mach = gas.mach_from_momentum(a.max_q).unwrap_or(1.0);
    if !report.cutoff_active {
        report.certificate = certify(mesh, gas, constraints, psi, &a.residual, execution);
    }
    report
}

/// Cutoff system by damped Newton from `initial` (default: the incompressible
/// solution), ramping the boundary data over `continuation_steps` stages.
pub fn solve_compressible(
    mesh: &StripMesh,
    gas: &GasModel,
    constraints: &Constraints,
    config: &SolveConfig,
    initial: Option<&[f64]>,
) -> Result<Solution, SolveError> {
    config.validate().map_err(SolveError::Config)?;
    let steps = config.continuation_steps;
    let mut psi: Option<Vec<f64>> = initial.map(|p| p.to_vec());
    let mut prev_scale = 0.0;
    let mut total_iterations = 0;
    let mut histories = (Vec::new(), Vec::new());
    for k in 1..=steps {
        let scale = k as f64 / steps as f64;
        let stage = constraints.scaled(scale);
        let start = match psi.take() {
            Some(p) if initial.is_some() && k == 1 => p,
            Some(p) if prev_scale > 0.0 => p.iter().map(|v| v * scale / prev_scale).collect(),
            _ => solve_incompressible(mesh, &stage, config)?.psi,
        };
        let problem = Problem::new(mesh, Closure::Cutoff(*gas))
            .with_constraints(&stage)
            .with_execution(config.execution);
        let (next, a, report) = newton(&problem, &stage, start, config).map_err(|e| {
            if steps > 1 {
                SolveError::Continuation {
                    amplitude: scale,
                    source: Box::new(e),
                }
            } else {
                e
            }
        })?;
        total_iterations += report.iterations;
        histories.0.extend_from_slice(&report.residual_history);
        histories.1.extend_from_slice(&report.energy_history);
        if k == steps {
            let mut report = finish_compressible(mesh, gas, &stage, &next, &a, report, config.execution);
            report.iterations = total_iterations;
            report.residual_history = histories.0;
            report.energy_history = histories.1;
            return Ok(Solution { psi: next, report });
        }
        psi = Some(next);
        prev_scale = scale;
    }
    unreachable!("continuation_steps >= 1 is validated")
}

pub fn solve(
    mesh: &StripMesh,
    mode: &GasMode,
    constraints: &Constraints,
    config: &SolveConfig,
) -> Result<Solution, SolveError> {
    match mode {
        GasMode::Incompressible => solve_incompressible(mesh, constraints, config),
        GasMode::Compressible(g) => solve_compressible(mesh, g, constraints, config, None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStop {
    /// Every amplitude was solved.
    Completed,
    MachCap,
    CutoffActive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub amplitude: f64,
    pub solution: Solution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub runs: Vec<SweepRun>,
    pub stop: SweepStop,
    /// Largest amplitude solved.
    pub reached: f64,
}

/// Solves `amplitude * base` for ascending amplitudes, each warm-started from
/// the previous result, stopping after the first run beyond the Mach cap or
/// with the cutoff active.
pub fn continuation_sweep(
    mesh: &StripMesh,
    gas: &GasModel,
    base: &Constraints,
    amplitudes: &[f64],
    config: &SolveConfig,
) -> Result<Sweep, SolveError> {
    if amplitudes.windows(2).any(|w| !(w[1] > w[0])) || amplitudes.first().is_some_and(|a| *a < 0.0) {
        return Err(SolveError::Config(
            "sweep amplitudes must be nonnegative and strictly ascending".into(),
        ));
    }
    let mut runs: Vec<SweepRun> = Vec::new();
    let mut stop = SweepStop::Completed;
    for &amp in amplitudes {
        let c = base.scaled(amp);
        let warm: Option<Vec<f64>> = runs.last().and_then(|r| {
            (r.amplitude > 0.0).then(|| r.solution.psi.iter().map(|v| v * amp / r.amplitude).collect())
        });
        let mut cfg = *config;
        if warm.is_some() {
            cfg.continuation_steps = 1;
        }
        let sol = solve_compressible(mesh, gas, &c, &cfg, warm.as_deref()).map_err(|e| SolveError::Continuation {
            amplitude: amp,
            source: Box::new(e),
        })?;
        let over_cap = sol.report.max_mach > gas.mach_cap();
        let cut = sol.report.cutoff_active;
        runs.push(SweepRun {
            amplitude: amp,
            solution: sol,
        });
        if cut {
            stop = SweepStop::CutoffActive;
            break;
        }
        if over_cap {
            stop = SweepStop::MachCap;
            break;
        }
    }
    let reached = runs.last().map_or(0.0, |r| r.amplitude);
    Ok(Sweep { runs, stop, reached })
}
