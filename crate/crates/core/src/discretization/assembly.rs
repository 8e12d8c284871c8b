//! Residual, Newton Jacobian and discrete energy of the stream-function equation.
//!
//! Cell contributions are computed independently (in parallel when enabled)
//! and scattered into global storage in ascending cell order, so the result
//! does not depend on the execution mode.

use thiserror::Error;

use super::bcs::Constraints;
use super::mesh::StripMesh;
use crate::gas::{Closure, GasError};
use crate::mat2::{self, Vec2};
use crate::par::Execution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("psi has {got} entries but the mesh has {want} nodes")]
    Length { got: usize, want: usize },
    #[error("psi is not finite at node {0}")]
    NonFinite(usize),
    #[error("coefficient evaluation failed in cell {cell}: {source}")]
    Gas { cell: usize, source: GasError },
}

/// Sparse matrix with the 9-point connectivity of the strip grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilMatrix {
    rows: usize,
    stride: usize,
    vals: Vec<f64>,
}

#[inline]
fn slot(di: isize, dj: isize) -> usize {
    ((di + 1) * 3 + (dj + 1)) as usize
}

impl StencilMatrix {
    /// Zero matrix for a grid with `n_i x n_j` nodes.
    pub fn zeros(n_i: usize, n_j: usize) -> Self {
        StencilMatrix {
            rows: n_i * n_j,
            stride: n_j,
            vals: vec![0.0; n_i * n_j * 9],
        }
    }

    pub fn dim(&self) -> usize {
        self.rows
    }

    /// Half bandwidth in the natural node ordering.
    pub fn half_bandwidth(&self) -> usize {
        self.stride + 1
    }

    fn offset(&self, row: usize, col: usize) -> Option<usize> {
        let s = self.stride as isize;
        let (ri, rj) = ((row / self.stride) as isize, (row % self.stride) as isize);
        let (ci, cj) = ((col / self.stride) as isize, (col % self.stride) as isize);
        let (di, dj) = (ci - ri, cj - rj);
        if di.abs() > 1 || dj.abs() > 1 || col >= self.rows || cj >= s {
            return None;
        }
        Some(row * 9 + slot(di, dj))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.offset(row, col).map_or(0.0, |o| self.vals[o])
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let o = self.offset(row, col).expect("entry outside the stencil");
        self.vals[o] += v;
    }

    /// Column indices and values of the stored entries of `row`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (ri, rj) = ((row / self.stride) as isize, (row % self.stride) as isize);
        let n_i = (self.rows / self.stride) as isize;
        let s = self.stride as isize;
        (0..9).filter_map(move |k| {
            let (di, dj) = (k as isize / 3 - 1, k as isize % 3 - 1);
            let (ci, cj) = (ri + di, rj + dj);
            if ci < 0 || ci >= n_i || cj < 0 || cj >= s {
                None
            } else {
                Some(((ci * s + cj) as usize, self.vals[row * 9 + k]))
            }
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.vals[r * 9 + 4]).collect()
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                m = m.max((v - self.get(c, r)).abs());
            }
        }
        m
    }

    /// Replaces row and column `k` by the identity.
    fn pin(&mut self, k: usize) {
        let cols: Vec<usize> = self.row(k).map(|(c, _)| c).collect();
        for c in cols {
            let a = self.offset(k, c).expect("stencil");
            self.vals[a] = 0.0;
            let b = self.offset(c, k).expect("stencil");
            self.vals[b] = 0.0;
        }
        let d = self.offset(k, k).expect("stencil");
        self.vals[d] = 1.0;
    }
}

/// Everything needed to evaluate the discrete equations.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub mesh: &'a StripMesh,
    pub closure: Closure,
    pub constraints: Option<&'a Constraints>,
    /// Right-hand side `f` of `-div(h grad psi) = f`; absent for the flow problem.
    pub source: Option<&'a (dyn Fn(Vec2) -> f64 + Sync)>,
    pub execution: Execution,
}

impl<'a> Problem<'a> {
    pub fn new(mesh: &'a StripMesh, closure: Closure) -> Self {
        Problem {
            mesh,
            closure,
            constraints: None,
            source: None,
            execution: Execution::default(),
        }
    }

    pub fn with_constraints(mut self, c: &'a Constraints) -> Self {
        self.constraints = Some(c);
        self
    }

    pub fn with_source(mut self, f: &'a (dyn Fn(Vec2) -> f64 + Sync)) -> Self {
        self.source = Some(f);
        self
    }

    pub fn with_execution(mut self, e: Execution) -> Self {
        self.execution = e;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub residual: Vec<f64>,
    pub jacobian: Option<StencilMatrix>,
    pub energy: f64,
    /// Sum of absolute energy contributions; sets the rounding scale of `energy`.
    pub energy_scale: f64,
    /// Largest `q = |grad psi|^2 / 2` over quadrature points.
    pub max_q: f64,
}

struct CellLocal {
    r: [f64; 4],
    k: [[f64; 4]; 4],
    e: f64,
    e_abs: f64,
    max_q: f64,
}

fn cell_local(
    p: &Problem<'_>,
    psi: &[f64],
    c: usize,
    jacobian: bool,
) -> Result<CellLocal, AssemblyError> {
    let ids = p.mesh.cell_nodes(c);
    let u = ids.map(|k| psi[k]);
    let mut out = CellLocal {
        r: [0.0; 4],
        k: [[0.0; 4]; 4],
        e: 0.0,
        e_abs: 0.0,
        max_q: 0.0,
    };
    for qp in p.mesh.cell_qps(c) {
        let mut g = [0.0; 2];
        for a in 0..4 {
            g[0] += u[a] * qp.grad[a][0];
            g[1] += u[a] * qp.grad[a][1];
        }
        let q = 0.5 * mat2::dot(&g, &g);
        out.max_q = out.max_q.max(q);
        let (coef, pot) = p
            .closure
            .values(q)
            .map_err(|source| AssemblyError::Gas { cell: c, source })?;
        let mut e = qp.wdet * pot;
        let gdot: [f64; 4] = std::array::from_fn(|a| mat2::dot(&g, &qp.grad[a]));
        let src = p.source.map(|f| f(qp.x));
        for a in 0..4 {
            out.r[a] += qp.wdet * coef.h * gdot[a];
        }
        if let Some(f) = src {
            let uh: f64 = (0..4).map(|a| u[a] * qp.basis[a]).sum();
            e -= qp.wdet * f * uh;
            for a in 0..4 {
                out.r[a] -= qp.wdet * f * qp.basis[a];
            }
        }
        out.e += e;
        out.e_abs += e.abs();
        if jacobian {
            for a in 0..4 {
                for b in a..4 {
                    let v = qp.wdet
                        * (coef.h * mat2::dot(&qp.grad[a], &qp.grad[b])
                            + coef.dh * gdot[a] * gdot[b]);
                    out.k[a][b] += v;
                }
            }
        }
    }
    if jacobian {
        for a in 0..4 {
            for b in 0..a {
                out.k[a][b] = out.k[b][a];
            }
        }
    }
    Ok(out)
}

fn check_input(mesh: &StripMesh, psi: &[f64]) -> Result<(), AssemblyError> {
    if psi.len() != mesh.n_nodes() {
        return Err(AssemblyError::Length {
            got: psi.len(),
            want: mesh.n_nodes(),
        });
    }
    if let Some(k) = psi.iter().position(|v| !v.is_finite()) {
        return Err(AssemblyError::NonFinite(k));
    }
    Ok(())
}

/// Residual (and optionally the Jacobian) at `psi`. Fixed rows become
/// `psi - value` with identity rows and columns in the Jacobian.
pub fn assemble(p: &Problem<'_>, psi: &[f64], jacobian: bool) -> Result<Assembled, AssemblyError> {
    let mesh = p.mesh;
    check_input(mesh, psi)?;
    let locals = p
        .execution
        .try_map(mesh.n_cells(), |c| cell_local(p, psi, c, jacobian))?;

    let n = mesh.n_nodes();
    let mut residual = vec![0.0; n];
    let mut jac = jacobian.then(|| StencilMatrix::zeros(mesh.n_ell() + 1, mesh.n_lam() + 1));
    let (mut energy, mut energy_scale, mut max_q) = (0.0, 0.0, 0.0f64);
    for (c, loc) in locals.iter().enumerate() {
        let ids = mesh.cell_nodes(c);
        for a in 0..4 {
            residual[ids[a]] += loc.r[a];
        }
        if let Some(m) = jac.as_mut() {
            for a in 0..4 {
                for b in 0..4 {
                    m.add(ids[a], ids[b], loc.k[a][b]);
                }
            }
        }
        energy += loc.e;
        energy_scale += loc.e_abs;
        max_q = max_q.max(loc.max_q);
    }

    if let Some(cons) = p.constraints {
        for k in 0..n {
            if cons.fixed[k] {
                residual[k] = psi[k] - cons.values[k];
                if let Some(m) = jac.as_mut() {
                    m.pin(k);
                }
            }
        }
    }

    Ok(Assembled {
        residual,
        jacobian: jac,
        energy,
        energy_scale,
        max_q,
    })
}

/// Residual only.
pub fn assemble_residual(p: &Problem<'_>, psi: &[f64]) -> Result<Vec<f64>, AssemblyError> {
    Ok(assemble(p, psi, false)?.residual)
}

/// Discrete energy `sum w |det J| H(q)` (minus the source work, if any).
pub fn energy(p: &Problem<'_>, psi: &[f64]) -> Result<f64, AssemblyError> {
    Ok(assemble(p, psi, false)?.energy)
}
