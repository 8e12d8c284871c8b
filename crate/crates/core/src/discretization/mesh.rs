//! Uniform tensor grids on `[ell_min, ell_max] x [0, 1]`.
//!
//! Nodes are numbered `k = i * (n_lam + 1) + j` with `i` along `ell` and `j`
//! along `lam`. Cells are numbered `c = i * n_lam + j`; the local node order of
//! a cell is `(i, j), (i, j+1), (i+1, j), (i+1, j+1)`.

use thiserror::Error;

use super::quadrature::gauss_unit;
use crate::geometry::{GeometryError, MappedPoint, StripGeometry, StripPoint};
use crate::mat2::{self, Mat2, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("ell_min = {ell_min} must be below ell_max = {ell_max}")]
    EmptyRange { ell_min: f64, ell_max: f64 },
    #[error("ell_min = {ell_min} lies before the domain start {start}")]
    BeforeStart { ell_min: f64, start: f64 },
    #[error("{name} = {value} must be at least {min}")]
    TooFewCells {
        name: &'static str,
        value: usize,
        min: usize,
    },
    #[error("quadrature order {0} is not one of 2, 3, 4")]
    QuadOrder(usize),
    #[error("map Jacobian is not positive at ell = {ell}, lam = {lam} (det = {det})")]
    Folded { ell: f64, lam: f64, det: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Cached data at one quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub point: StripPoint,
    pub x: Vec2,
    /// Quadrature weight times `|det dx/dLambda|` times the cell size.
    pub wdet: f64,
    /// Strip-coordinate weight `w_ell w_lam h_ell h_lam` (no metric factor).
    pub wstrip: f64,
    pub basis: [f64; 4],
    /// Physical gradients of the four cell basis functions.
    pub grad: [Vec2; 4],
    pub jac: Mat2,
}

#[derive(Debug, Clone)]
pub struct StripMesh {
    geometry: StripGeometry,
    ell_min: f64,
    ell_max: f64,
    n_ell: usize,
    n_lam: usize,
    quad_order: usize,
    nodes: Vec<StripPoint>,
    mapped: Vec<MappedPoint>,
    qps: Vec<QuadPoint>,
}

pub fn build_mesh(
    geometry: StripGeometry,
    ell_min: f64,
    ell_max: f64,
    n_ell: usize,
    n_lam: usize,
    quad_order: usize,
) -> Result<StripMesh, MeshError> {
    if !(ell_min < ell_max) {
        return Err(MeshError::EmptyRange { ell_min, ell_max });
    }
    let start = geometry.ell_start();
    if ell_min < start - 1e-12 * start.abs().max(1.0) {
        return Err(MeshError::BeforeStart { ell_min, start });
    }
    for (name, value) in [("n_ell", n_ell), ("n_lam", n_lam)] {
        if value < 2 {
            return Err(MeshError::TooFewCells { name, value, min: 2 });
        }
    }
    let (gx, gw) = gauss_unit(quad_order).ok_or(MeshError::QuadOrder(quad_order))?;

    let h_ell = (ell_max - ell_min) / n_ell as f64;
    let h_lam = 1.0 / n_lam as f64;
    let ell_at = |i: usize| {
        if i == n_ell {
            ell_max
        } else {
            ell_min + i as f64 * h_ell
        }
    };
    let lam_at = |j: usize| {
        if j == n_lam {
            1.0
        } else {
            j as f64 * h_lam
        }
    };

    let mut nodes = Vec::with_capacity((n_ell + 1) * (n_lam + 1));
    let mut mapped = Vec::with_capacity(nodes.capacity());
    for i in 0..=n_ell {
        for j in 0..=n_lam {
            let p = StripPoint::new(ell_at(i), lam_at(j));
            let m = geometry.strip_map(p)?;
            let det = mat2::det(&m.jac);
            if !(det > 0.0) {
                return Err(MeshError::Folded {
                    ell: p.ell,
                    lam: p.lam,
                    det,
                });
            }
            nodes.push(p);
            mapped.push(m);
        }
    }

    let nq = quad_order * quad_order;
    let mut qps = Vec::with_capacity(n_ell * n_lam * nq);
    for i in 0..n_ell {
        let (e0, e1) = (ell_at(i), ell_at(i + 1));
        for j in 0..n_lam {
            let (l0, l1) = (lam_at(j), lam_at(j + 1));
            let (he, hl) = (e1 - e0, l1 - l0);
            for a in 0..quad_order {
                for b in 0..quad_order {
                    let (s, t) = (gx[a], gx[b]);
                    let point = StripPoint::new(e0 + s * he, l0 + t * hl);
                    let m = geometry.strip_map(point)?;
                    let det = mat2::det(&m.jac);
                    if !(det > 0.0) {
                        return Err(MeshError::Folded {
                            ell: point.ell,
                            lam: point.lam,
                            det,
                        });
                    }
                    let jinv_t = mat2::transpose(&mat2::inverse(&m.jac).expect("det > 0"));
                    let basis = [(1.0 - s) * (1.0 - t), (1.0 - s) * t, s * (1.0 - t), s * t];
                    let dstrip: [Vec2; 4] = [
                        [-(1.0 - t) / he, -(1.0 - s) / hl],
                        [-t / he, (1.0 - s) / hl],
                        [(1.0 - t) / he, -s / hl],
                        [t / he, s / hl],
                    ];
                    let grad = dstrip.map(|g| mat2::mul_vec(&jinv_t, &g));
                    let wstrip = gw[a] * gw[b] * he * hl;
                    qps.push(QuadPoint {
                        point,
                        x: m.x,
                        wdet: wstrip * det,
                        wstrip,
                        basis,
                        grad,
                        jac: m.jac,
                    });
                }
            }
        }
    }

    Ok(StripMesh {
        geometry,
        ell_min,
        ell_max,
        n_ell,
        n_lam,
        quad_order,
        nodes,
        mapped,
        qps,
    })
}

impl StripMesh {
    pub fn geometry(&self) -> &StripGeometry {
        &self.geometry
    }

    pub fn ell_min(&self) -> f64 {
        self.ell_min
    }

    pub fn ell_max(&self) -> f64 {
        self.ell_max
    }

    pub fn n_ell(&self) -> usize {
        self.n_ell
    }

    pub fn n_lam(&self) -> usize {
        self.n_lam
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn h_ell(&self) -> f64 {
        (self.ell_max - self.ell_min) / self.n_ell as f64
    }

    pub fn h_lam(&self) -> f64 {
        1.0 / self.n_lam as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_ell * self.n_lam
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        i * (self.n_lam + 1) + j
    }

    /// `(i, j)` of node `k`.
    #[inline]
    pub fn node_ij(&self, k: usize) -> (usize, usize) {
        (k / (self.n_lam + 1), k % (self.n_lam + 1))
    }

    pub fn nodes(&self) -> &[StripPoint] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> StripPoint {
        self.nodes[k]
    }

    pub fn mapped(&self, k: usize) -> &MappedPoint {
        &self.mapped[k]
    }

    pub fn node_x(&self, k: usize) -> Vec2 {
        self.mapped[k].x
    }

    /// Global node indices of cell `c` in local order.
    #[inline]
    pub fn cell_nodes(&self, c: usize) -> [usize; 4] {
        let (i, j) = (c / self.n_lam, c % self.n_lam);
        let k = self.node_index(i, j);
        let up = self.n_lam + 1;
        [k, k + 1, k + up, k + up + 1]
    }

    pub fn qps_per_cell(&self) -> usize {
        self.quad_order * self.quad_order
    }

    pub fn cell_qps(&self, c: usize) -> &[QuadPoint] {
        let nq = self.qps_per_cell();
        &self.qps[c * nq..(c + 1) * nq]
    }

    pub fn quad_points(&self) -> &[QuadPoint] {
        &self.qps
    }

    /// Physical area of the truncated domain, by quadrature.
    pub fn area(&self) -> f64 {
        self.qps.iter().map(|q| q.wdet).sum()
    }

    pub fn is_wall(&self, k: usize) -> bool {
        let j = k % (self.n_lam + 1);
        j == 0 || j == self.n_lam
    }

    /// Largest cell side in strip coordinates.
    pub fn max_cell_diameter(&self) -> f64 {
        self.h_ell().hypot(self.h_lam())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ChannelDomain, CornerDomain};
    use std::f64::consts::PI;

    fn wedge() -> StripGeometry {
        StripGeometry::Corner(CornerDomain::wedge(1.5 * PI, 1.0).unwrap())
    }

    #[test]
    fn node_and_cell_counts() {
        let m = build_mesh(wedge(), 0.0, 1.0, 4, 2, 2).unwrap();
        assert_eq!(m.n_nodes(), 15);
        assert_eq!(m.n_cells(), 8);
        assert_eq!(m.quad_points().len(), 32);
        assert_eq!(m.cell_nodes(0), [0, 1, 3, 4]);
        assert_eq!(m.node_ij(m.node_index(3, 2)), (3, 2));
    }

    #[test]
    fn wedge_area_matches_closed_form() {
        let theta = 1.5 * PI;
        for order in 2..=4 {
            let m = build_mesh(wedge(), 0.5, 3.0, 40, 6, order).unwrap();
            let exact = theta * ((6.0f64).exp() - (1.0f64).exp()) / 2.0;
            // Gauss in ell on e^{2 ell}: error shrinks rapidly with order
            let tol = [0.0, 0.0, 1e-7, 1e-10, 1e-13][order];
            assert!(((m.area() - exact) / exact).abs() < tol, "order {order}: {}", m.area());
        }
    }

    #[test]
    fn channel_area_is_exact() {
        let g = StripGeometry::Channel(ChannelDomain { width: 2.0 });
        let m = build_mesh(g, -1.0, 4.0, 10, 4, 2).unwrap();
        assert!((m.area() - 10.0).abs() < 1e-13);
    }

    #[test]
    fn basis_gradients_reproduce_linear_functions() {
        let g = StripGeometry::Corner(CornerDomain::example());
        let m = build_mesh(g, 0.5, 2.0, 5, 4, 3).unwrap();
        // bilinear interpolation reproduces ell and lam exactly in the strip
        for c in 0..m.n_cells() {
            let ids = m.cell_nodes(c);
            for q in m.cell_qps(c) {
                let mut g_ell = [0.0; 2];
                for a in 0..4 {
                    let e = m.node(ids[a]).ell;
                    g_ell[0] += e * q.grad[a][0];
                    g_ell[1] += e * q.grad[a][1];
                }
                // grad ell = J^{-T} (1, 0)
                let jt = mat2::transpose(&mat2::inverse(&q.jac).unwrap());
                let want = mat2::mul_vec(&jt, &[1.0, 0.0]);
                assert!((g_ell[0] - want[0]).abs() < 1e-12 && (g_ell[1] - want[1]).abs() < 1e-12);
                let s: f64 = q.basis.iter().sum();
                assert!((s - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn refinement_halves_diameter() {
        let a = build_mesh(wedge(), 0.0, 2.0, 8, 4, 2).unwrap();
        let b = build_mesh(wedge(), 0.0, 2.0, 16, 8, 2).unwrap();
        assert!((a.max_cell_diameter() - 2.0 * b.max_cell_diameter()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(build_mesh(wedge(), -0.5, 1.0, 4, 4, 2), Err(MeshError::BeforeStart { .. })));
        assert!(matches!(build_mesh(wedge(), 1.0, 1.0, 4, 4, 2), Err(MeshError::EmptyRange { .. })));
        assert!(matches!(build_mesh(wedge(), 0.0, 1.0, 1, 4, 2), Err(MeshError::TooFewCells { .. })));
        assert!(matches!(build_mesh(wedge(), 0.0, 1.0, 4, 4, 5), Err(MeshError::QuadOrder(5))));
    }
}
