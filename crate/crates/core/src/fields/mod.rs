//! Physical flow quantities reconstructed from the stream function, exact
//! reference flows and the vortex-sheet alternative.

pub mod exact;
pub mod vortex;

use crate::discretization::quadrature::gauss_unit;
use crate::discretization::StripMesh;
use crate::gas::GasMode;
use crate::geometry::StripPoint;
use crate::mat2::{self, Mat2, Vec2};

/// Flow quantities at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub point: StripPoint,
    pub x: Vec2,
    /// Momentum `rho v = -grad_perp psi`.
    pub m: Vec2,
    pub q: f64,
    pub rho: f64,
    pub v: Vec2,
    pub mach: f64,
    /// `q` exceeds the sonic threshold; `rho` then comes from the cutoff law.
    pub beyond_sonic: bool,
}

/// Local flow state from a stream-function gradient.
pub fn state_from_gradient(mode: &GasMode, point: StripPoint, x: Vec2, g: Vec2) -> FlowSample {
    let m = [g[1], -g[0]];
    let q = 0.5 * mat2::dot(&m, &m);
    let (rho, mach, beyond_sonic) = match mode {
        GasMode::Incompressible => (1.0, 0.0, false),
        GasMode::Compressible(gas) => {
            let (h, beyond) = match gas.h(q) {
                Ok(h) => (h, false),
                Err(_) => (gas.h_cutoff(q), true),
            };
            let rho = 1.0 / h;
            let c = rho.powf(0.5 * (gas.gamma() - 1.0));
            (rho, mat2::norm(&m) / rho / c, beyond)
        }
    };
    FlowSample {
        point,
        x,
        m,
        q,
        rho,
        v: [m[0] / rho, m[1] / rho],
        mach,
        beyond_sonic,
    }
}

/// Per-quadrature-point flow with per-cell vorticity.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub samples: Vec<FlowSample>,
    pub vorticity: Vec<f64>,
}

impl FlowState {
    pub fn max_mach(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.mach))
    }

    pub fn max_q(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.q))
    }
}

/// Samples at quadrature points use the element gradient (the quantity the
/// solver sees); vorticity uses the recovered nodal velocity.
pub fn reconstruct(mesh: &StripMesh, mode: &GasMode, psi: &[f64]) -> FlowState {
    let mut samples = Vec::with_capacity(mesh.quad_points().len());
    for c in 0..mesh.n_cells() {
        let ids = mesh.cell_nodes(c);
        for qp in mesh.cell_qps(c) {
            let mut g = [0.0; 2];
            for a in 0..4 {
                g[0] += psi[ids[a]] * qp.grad[a][0];
                g[1] += psi[ids[a]] * qp.grad[a][1];
            }
            samples.push(state_from_gradient(mode, qp.point, qp.x, g));
        }
    }
    let nodal = NodalDerivatives::recover(mesh, psi);
    let vel: Vec<Vec2> = (0..mesh.n_nodes())
        .map(|k| state_from_gradient(mode, mesh.node(k), mesh.node_x(k), nodal.grad[k]).v)
        .collect();
    FlowState {
        samples,
        vorticity: nodal_vorticity(mesh, &vel),
    }
}

/// Nodal first and second derivatives of a grid function, by second-order
/// finite differences in strip coordinates (one-sided at the edges).
#[derive(Debug, Clone, PartialEq)]
pub struct NodalDerivatives {
    /// `(psi_ell, psi_lam)`.
    pub strip_grad: Vec<Vec2>,
    /// `[[psi_ell_ell, psi_ell_lam], [psi_ell_lam, psi_lam_lam]]`.
    pub strip_hess: Vec<Mat2>,
    pub grad: Vec<Vec2>,
    pub hess: Vec<Mat2>,
}

fn d1(u: &[f64], i: usize, h: f64) -> f64 {
    let n = u.len() - 1;
    if i == 0 {
        (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
    } else if i == n {
        (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h)
    } else {
        (u[i + 1] - u[i - 1]) / (2.0 * h)
    }
}

fn d2(u: &[f64], i: usize, h: f64) -> f64 {
    let n = u.len() - 1;
    let h2 = h * h;
    if n >= 3 && i == 0 {
        (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2
    } else if n >= 3 && i == n {
        (2.0 * u[n] - 5.0 * u[n - 1] + 4.0 * u[n - 2] - u[n - 3]) / h2
    } else {
        let c = i.clamp(1, n - 1);
        (u[c + 1] - 2.0 * u[c] + u[c - 1]) / h2
    }
}

impl NodalDerivatives {
    pub fn recover(mesh: &StripMesh, psi: &[f64]) -> Self {
        let (ne, nl) = (mesh.n_ell(), mesh.n_lam());
        let (he, hl) = (mesh.h_ell(), mesh.h_lam());
        let n = mesh.n_nodes();
        let line_lam = |i: usize, f: &[f64]| -> Vec<f64> {
            (0..=nl).map(|j| f[mesh.node_index(i, j)]).collect()
        };
        let line_ell = |j: usize, f: &[f64]| -> Vec<f64> {
            (0..=ne).map(|i| f[mesh.node_index(i, j)]).collect()
        };
        let mut pe = vec![0.0; n];
        let mut pl = vec![0.0; n];
        let mut pee = vec![0.0; n];
        let mut pll = vec![0.0; n];
        for i in 0..=ne {
            let u = line_lam(i, psi);
            for j in 0..=nl {
                let k = mesh.node_index(i, j);
                pl[k] = d1(&u, j, hl);
                pll[k] = d2(&u, j, hl);
            }
        }
        for j in 0..=nl {
            let u = line_ell(j, psi);
            for i in 0..=ne {
                let k = mesh.node_index(i, j);
                pe[k] = d1(&u, i, he);
                pee[k] = d2(&u, i, he);
            }
        }
        let mut pel = vec![0.0; n];
        for j in 0..=nl {
            let u = line_ell(j, &pl);
            for i in 0..=ne {
                pel[mesh.node_index(i, j)] = d1(&u, i, he);
            }
        }

        let mut strip_grad = Vec::with_capacity(n);
        let mut strip_hess = Vec::with_capacity(n);
        let mut grad = Vec::with_capacity(n);
        let mut hess = Vec::with_capacity(n);
        for k in 0..n {
            let m = mesh.mapped(k);
            let sg = [pe[k], pl[k]];
            let sh = [[pee[k], pel[k]], [pel[k], pll[k]]];
            let jinv = mat2::inverse(&m.jac).expect("mesh Jacobians are invertible");
            let jinv_t = mat2::transpose(&jinv);
            let g = mat2::mul_vec(&jinv_t, &sg);
            // H_Lambda = J^T H_x J + sum_i psi_{x_i} d^2 x_i
            let corr = mat2::add(&mat2::scale(&m.second[0], g[0]), &mat2::scale(&m.second[1], g[1]));
            let inner = mat2::add(&sh, &mat2::scale(&corr, -1.0));
            let h = mat2::mul(&jinv_t, &mat2::mul(&inner, &jinv));
            strip_grad.push(sg);
            strip_hess.push(sh);
            grad.push(g);
            hess.push(h);
        }
        NodalDerivatives {
            strip_grad,
            strip_hess,
            grad,
            hess,
        }
    }
}

/// Local coordinates `(s, t)` of strip point `p` in cell `c`.
pub fn local_coords(mesh: &StripMesh, c: usize, p: StripPoint) -> (f64, f64) {
    let k0 = mesh.cell_nodes(c)[0];
    let o = mesh.node(k0);
    ((p.ell - o.ell) / mesh.h_ell(), (p.lam - o.lam) / mesh.h_lam())
}

/// Bilinear weights for local coordinates.
#[inline]
pub fn bilinear(s: f64, t: f64) -> [f64; 4] {
    [(1.0 - s) * (1.0 - t), (1.0 - s) * t, s * (1.0 - t), s * t]
}

/// Integral of `f` over `[a, b]` with Gauss-4 panels, splitting panels at sign
/// changes of `level` so that jumps across its zero set are integrated exactly.
pub fn integrate_split(
    f: &dyn Fn(f64) -> f64,
    level: Option<&dyn Fn(f64) -> f64>,
    a: f64,
    b: f64,
    panels: usize,
) -> f64 {
    let (gx, gw) = gauss_unit(4).expect("order 4 exists");
    let gauss = |lo: f64, hi: f64| -> f64 {
        let w = hi - lo;
        gx.iter().zip(&gw).map(|(x, g)| g * w * f(lo + x * w)).sum()
    };
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + (b - a) * p as f64 / panels as f64;
        let hi = a + (b - a) * (p + 1) as f64 / panels as f64;
        let cut = level.and_then(|g| {
            let (gl, gh) = (g(lo), g(hi));
            if gl == 0.0 || gh == 0.0 || gl.signum() == gh.signum() {
                return None;
            }
            let (mut l, mut h) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (l + h);
                if m <= l || m >= h {
                    break;
                }
                if g(m).signum() == gl.signum() {
                    l = m;
                } else {
                    h = m;
                }
            }
            Some(0.5 * (l + h))
        });
        total += match cut {
            Some(m) => gauss(lo, m) + gauss(m, hi),
            None => gauss(lo, hi),
        };
    }
    total
}

/// Counterclockwise circulation of `velocity` around the mapped boundary of
/// cell `c`. `velocity` receives the strip point and its physical image.
pub fn cell_circulation(
    mesh: &StripMesh,
    c: usize,
    velocity: &dyn Fn(StripPoint, Vec2) -> Vec2,
    level: Option<&dyn Fn(Vec2) -> f64>,
    panels: usize,
) -> f64 {
    let o = mesh.node(mesh.cell_nodes(c)[0]);
    let (he, hl) = (mesh.h_ell(), mesh.h_lam());
    let g = mesh.geometry();
    // corners in counterclockwise order of the strip
    let corners = [
        (o.ell, o.lam),
        (o.ell + he, o.lam),
        (o.ell + he, o.lam + hl),
        (o.ell, o.lam + hl),
    ];
    let mut total = 0.0;
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let at = |t: f64| {
            let p = StripPoint::new(a.0 + t * (b.0 - a.0), (a.1 + t * (b.1 - a.1)).clamp(0.0, 1.0));
            let m = g.strip_map(p).expect("cell edges lie in the strip");
            let tangent = mat2::mul_vec(&m.jac, &[b.0 - a.0, b.1 - a.1]);
            (p, m.x, tangent)
        };
        let f = |t: f64| {
            let (p, x, tan) = at(t);
            mat2::dot(&velocity(p, x), &tan)
        };
        let lv = level.map(|l| move |t: f64| l(at(t).1));
        total += match &lv {
            Some(l) => integrate_split(&f, Some(l), 0.0, 1.0, panels),
            None => integrate_split(&f, None, 0.0, 1.0, panels),
        };
    }
    total
}

/// Cell-averaged curl of a nodal velocity field: contour circulation of its
/// bilinear interpolant divided by cell area.
pub fn nodal_vorticity(mesh: &StripMesh, vel: &[Vec2]) -> Vec<f64> {
    (0..mesh.n_cells())
        .map(|c| {
            let ids = mesh.cell_nodes(c);
            let interp = |p: StripPoint, _x: Vec2| {
                let (s, t) = local_coords(mesh, c, p);
                let w = bilinear(s, t);
                let mut v = [0.0; 2];
                for a in 0..4 {
                    v[0] += w[a] * vel[ids[a]][0];
                    v[1] += w[a] * vel[ids[a]][1];
                }
                v
            };
            let area: f64 = mesh.cell_qps(c).iter().map(|q| q.wdet).sum();
            cell_circulation(mesh, c, &interp, None, 1) / area
        })
        .collect()
}
