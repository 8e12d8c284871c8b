//! Measured quantities on computed fields: the boundary-adapted gradient map
//! and its Dirichlet integrals, quasiconformality of the gradient map,
//! far-field velocity statistics and a weighted Hölder seminorm at infinity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::StripMesh;
use crate::fields::{bilinear, local_coords, state_from_gradient, FlowSample, NodalDerivatives};
use crate::gas::GasMode;
use crate::geometry::{quasiconformality_ratio, StripGeometry};
use crate::mat2::{self, Mat2, Vec2, MIRROR};
use crate::par::Execution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagError {
    #[error("band [{lo}, {hi}] contains no samples")]
    EmptyBand { lo: f64, hi: f64 },
    #[error("decay fit needs at least 8 positive tail samples beyond burn-in, found {0}")]
    ShortProfile(usize),
    #[error("Hölder exponent {0} must lie in (0, 1)")]
    HolderExponent(f64),
    #[error("samples span {0:.3} decades of |x|; at least 2 are needed")]
    NarrowSpan(f64),
}

/// `f = M grad psi`, `f* = R f` with `R` the rows `(M s^0)^T, (M s^1)^T`, and
/// `d f* / d(ell, lam)` at one quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientMapSample {
    pub ell: f64,
    pub lam: f64,
    pub x: Vec2,
    pub f: Vec2,
    pub fstar: Vec2,
    /// `dfstar[i][a] = d f*_i / d Lambda_a`.
    pub dfstar: Mat2,
    /// `d f / d x = M Hess psi`.
    pub df: Mat2,
    /// Quadrature weight in strip coordinates.
    pub wstrip: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientMaps {
    pub samples: Vec<GradientMapSample>,
    /// Largest `|f*_i|` over wall nodes on `lam = i`.
    pub wall_trace: f64,
}

/// Rows of the boundary frame and their `ell`-derivative; the identity for
/// the channel, whose walls are parallel.
fn frame_rows(g: &StripGeometry, ell: f64) -> (Mat2, Mat2) {
    match g.boundary_frame(ell) {
        Ok(fr) => (mat2::transpose(&fr.b), mat2::transpose(&fr.db)),
        Err(_) => (mat2::IDENTITY, [[0.0; 2]; 2]),
    }
}

pub fn gradient_maps(mesh: &StripMesh, psi: &[f64], exec: Execution) -> GradientMaps {
    let d = NodalDerivatives::recover(mesh, psi);
    let g = mesh.geometry();
    let nq = mesh.qps_per_cell();
    let per_cell = exec.map(mesh.n_cells(), |c| {
        let ids = mesh.cell_nodes(c);
        let mut out = Vec::with_capacity(nq);
        for qp in mesh.cell_qps(c) {
            let (s, t) = local_coords(mesh, c, qp.point);
            let w = bilinear(s, t);
            let mut grad = [0.0; 2];
            let mut hess = [[0.0; 2]; 2];
            for a in 0..4 {
                let k = ids[a];
                for i in 0..2 {
                    grad[i] += w[a] * d.grad[k][i];
                    for j in 0..2 {
                        hess[i][j] += w[a] * d.hess[k][i][j];
                    }
                }
            }
            let f = mat2::mul_vec(&MIRROR, &grad);
            let df = mat2::mul(&MIRROR, &hess);
            let (r, dr) = frame_rows(g, qp.point.ell);
            let fstar = mat2::mul_vec(&r, &f);
            // d f / d Lambda = (d f / dx) (dx / dLambda)
            let df_strip = mat2::mul(&df, &qp.jac);
            let mut dfstar = mat2::mul(&r, &df_strip);
            let dr_f = mat2::mul_vec(&dr, &f);
            dfstar[0][0] += dr_f[0];
            dfstar[1][0] += dr_f[1];
            out.push(GradientMapSample {
                ell: qp.point.ell,
                lam: qp.point.lam,
                x: qp.x,
                f,
                fstar,
                dfstar,
                df,
                wstrip: qp.wstrip,
            });
        }
        out
    });
    let samples: Vec<GradientMapSample> = per_cell.into_iter().flatten().collect();

    let mut wall_trace: f64 = 0.0;
    for k in 0..mesh.n_nodes() {
        let (_, j) = mesh.node_ij(k);
        let side = if j == 0 {
            0
        } else if j == mesh.n_lam() {
            1
        } else {
            continue;
        };
        let (r, _) = frame_rows(g, mesh.node(k).ell);
        let f = mat2::mul_vec(&MIRROR, &d.grad[k]);
        let fs = mat2::mul_vec(&r, &f);
        wall_trace = wall_trace.max(fs[side].abs());
    }
    GradientMaps {
        samples,
        wall_trace,
    }
}

/// `J(ell)` on the `ell`-Gauss lines and its integral per cell row.
#[derive(Debug, Clone, PartialEq)]
pub struct JProfile {
    pub ell: Vec<f64>,
    pub j: Vec<f64>,
    /// Cell-row boundaries in `ell`.
    pub edges: Vec<f64>,
    /// `int J d ell` over each row.
    pub segments: Vec<f64>,
}

impl JProfile {
    /// Profile from uniformly spaced samples, integrated by the trapezoid rule.
    pub fn from_samples(ell: &[f64], j: &[f64]) -> Self {
        let segments = ell
            .windows(2)
            .zip(j.windows(2))
            .map(|(e, v)| 0.5 * (e[1] - e[0]) * (v[0] + v[1]))
            .collect();
        JProfile {
            ell: ell.to_vec(),
            j: j.to_vec(),
            edges: ell.to_vec(),
            segments,
        }
    }

    pub fn total(&self) -> f64 {
        self.segments.iter().sum()
    }

    /// `(edge, int_edge^L J)` for every edge except the last.
    pub fn tails(&self) -> Vec<(f64, f64)> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.segments.len());
        for (i, s) in self.segments.iter().enumerate().rev() {
            acc += s;
            out.push((self.edges[i], acc));
        }
        out.reverse();
        out
    }
}

pub fn dirichlet_profile(mesh: &StripMesh, maps: &GradientMaps) -> JProfile {
    let order = mesh.quad_order();
    let nq = mesh.qps_per_cell();
    let n_lines = mesh.n_ell() * order;
    let mut ell = vec![0.0; n_lines];
    let mut j = vec![0.0; n_lines];
    let mut segments = vec![0.0; mesh.n_ell()];
    let h_ell = mesh.h_ell();
    for (idx, s) in maps.samples.iter().enumerate() {
        let c = idx / nq;
        let a = (idx % nq) / order;
        let row = c / mesh.n_lam();
        let line = row * order + a;
        let val = mat2::frobenius_sq(&s.dfstar);
        ell[line] = s.ell;
        j[line] += s.wstrip * val;
        segments[row] += s.wstrip * val;
    }
    // j currently holds w_ell * h_ell * J; recover J from the Gauss weights
    let (_, gw) = crate::discretization::quadrature::gauss_unit(order).expect("valid order");
    for (line, v) in j.iter_mut().enumerate() {
        *v /= gw[line % order] * h_ell;
    }
    let edges = (0..=mesh.n_ell())
        .map(|i| {
            if i == mesh.n_ell() {
                mesh.ell_max()
            } else {
                mesh.ell_min() + i as f64 * h_ell
            }
        })
        .collect();
    JProfile {
        ell,
        j,
        edges,
        segments,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `+inf` when the tail vanishes identically.
    pub alpha: f64,
    /// Root-mean-square misfit of `log T`.
    pub residual: f64,
    pub samples: usize,
}

/// `log int_ell^L e^{-2 alpha s} ds` up to a constant, stable for all alpha.
fn tail_shape(alpha: f64, ell: f64, end: f64) -> f64 {
    let d = end - ell;
    let k = 2.0 * alpha;
    if k.abs() * d < 1e-12 {
        return d.ln();
    }
    -k * ell + (-(-k * d).exp_m1() / k).ln()
}

fn fit_misfit(alpha: f64, pts: &[(f64, f64)], end: f64) -> (f64, f64) {
    let model: Vec<f64> = pts.iter().map(|(e, _)| tail_shape(alpha, *e, end)).collect();
    let c = pts
        .iter()
        .zip(&model)
        .map(|((_, t), m)| t.ln() - m)
        .sum::<f64>()
        / pts.len() as f64;
    let sse = pts
        .iter()
        .zip(&model)
        .map(|((_, t), m)| (t.ln() - m - c).powi(2))
        .sum::<f64>();
    (sse, c)
}

/// Fits `int_ell^L J ~ C int_ell^L e^{-2 alpha s} ds` to the tail integrals at
/// cell edges beyond `ell_min + burn_in`. Exact for pure exponentials.
pub fn fit_decay(profile: &JProfile, burn_in: f64) -> Result<DecayFit, DiagError> {
    let start = profile.edges[0] + burn_in;
    let end = *profile.edges.last().expect("non-empty profile");
    let tails: Vec<(f64, f64)> = profile
        .tails()
        .into_iter()
        .filter(|(e, _)| *e >= start - 1e-12)
        .collect();
    if tails.len() >= 8 && tails.iter().all(|(_, t)| *t == 0.0) {
        return Ok(DecayFit {
            alpha: f64::INFINITY,
            residual: 0.0,
            samples: tails.len(),
        });
    }
    let pts: Vec<(f64, f64)> = tails.into_iter().filter(|(_, t)| *t > 0.0).collect();
    if pts.len() < 8 {
        return Err(DiagError::ShortProfile(pts.len()));
    }
    // coarse scan, then golden section around the best grid point
    let grid: Vec<f64> = (0..=400).map(|i| -2.0 + 0.03 * i as f64).collect();
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, a) in grid.iter().enumerate() {
        let v = fit_misfit(*a, &pts, end).0;
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = fit_misfit(x1, &pts, end).0;
    let mut f2 = fit_misfit(x2, &pts, end).0;
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = fit_misfit(x1, &pts, end).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = fit_misfit(x2, &pts, end).0;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let (sse, _) = fit_misfit(alpha, &pts, end);
    Ok(DecayFit {
        alpha,
        residual: (sse / pts.len() as f64).sqrt(),
        samples: pts.len(),
    })
}

/// Ratio `|df|^2 / det df` of the gradient map against the ellipticity bound
/// `1 / (1 - M^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QcStats {
    pub k_max: f64,
    pub bound: f64,
    pub valid: usize,
    pub degenerate: usize,
    /// Fraction of valid samples whose ratio exceeds `bound + tolerance`.
    pub violation_fraction: f64,
    /// 99th percentile of `max(ratio - bound, 0)` over valid samples.
    pub excess_p99: f64,
}

pub fn quasiconformality(maps: &GradientMaps, max_mach: f64, tolerance: f64) -> QcStats {
    let bound = 1.0 / (1.0 - max_mach * max_mach);
    let mats: Vec<Mat2> = maps.samples.iter().map(|s| s.df).collect();
    let d = quasiconformality_ratio(&mats, 1e-12);
    let ratios: Vec<f64> = d.ratios.iter().filter_map(|r| *r).collect();
    let valid = ratios.len();
    let violations = ratios.iter().filter(|r| **r > bound + tolerance).count();
    let mut excess: Vec<f64> = ratios.iter().map(|r| (r - bound).max(0.0)).collect();
    excess.sort_by(f64::total_cmp);
    let excess_p99 = if valid == 0 {
        0.0
    } else {
        excess[((0.99 * valid as f64).ceil() as usize).clamp(1, valid) - 1]
    };
    QcStats {
        k_max: d.k_max,
        bound,
        valid,
        degenerate: d.degenerate + d.reversed,
        violation_fraction: if valid == 0 {
            0.0
        } else {
            violations as f64 / valid as f64
        },
        excess_p99,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandStats {
    pub lo: f64,
    pub hi: f64,
    pub mean_speed: f64,
    pub max_speed: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarField {
    pub bands: Vec<BandStats>,
    /// Geometric extrapolation of the band maxima outward.
    pub extrapolated: f64,
}

/// Limit of a sequence assumed to converge geometrically: Aitken's formula on
/// the last three terms, clamped at zero. Falls back to the last value when
/// fewer than three terms are given or the differences do not contract.
pub fn geometric_limit(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n < 3 {
        return values[n - 1];
    }
    let (a, b, c) = (values[n - 3], values[n - 2], values[n - 1]);
    let (d1, d2) = (b - a, c - b);
    if d1 == 0.0 {
        return c;
    }
    let r = d2 / d1;
    if !(0.0..1.0).contains(&r) {
        return c;
    }
    (c + d2 * r / (1.0 - r)).max(0.0)
}

pub fn farfield_velocity(samples: &[FlowSample], bands: &[(f64, f64)]) -> Result<FarField, DiagError> {
    let mut out = Vec::with_capacity(bands.len());
    for &(lo, hi) in bands {
        let mut sum = 0.0;
        let mut max: f64 = 0.0;
        let mut count = 0;
        for s in samples {
            if s.point.ell >= lo && s.point.ell <= hi {
                let v = mat2::norm(&s.v);
                sum += v;
                max = max.max(v);
                count += 1;
            }
        }
        if count == 0 {
            return Err(DiagError::EmptyBand { lo, hi });
        }
        out.push(BandStats {
            lo,
            hi,
            mean_speed: sum / count as f64,
            max_speed: max,
            count,
        });
    }
    let maxima: Vec<f64> = out.iter().map(|b| b.max_speed).collect();
    Ok(FarField {
        extrapolated: geometric_limit(&maxima),
        bands: out,
    })
}

/// Unit-width bands from `ell_min` up to `ell_max - margin`.
pub fn default_bands(mesh: &StripMesh, margin: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut lo = mesh.ell_min();
    while lo + 1.0 <= mesh.ell_max() - margin + 1e-12 {
        out.push((lo, lo + 1.0));
        lo += 1.0;
    }
    out
}

/// Mean of `v . s^0` and `v . s^1` over samples in a band.
pub fn slip_limit(geometry: &StripGeometry, samples: &[FlowSample], band: (f64, f64)) -> Result<Vec2, DiagError> {
    let mut acc = [0.0; 2];
    let mut n = 0;
    for s in samples {
        if s.point.ell < band.0 || s.point.ell > band.1 {
            continue;
        }
        let (s0, s1) = match geometry.boundary_frame(s.point.ell) {
            Ok(fr) => (fr.s0, fr.s1),
            Err(_) => ([1.0, 0.0], [1.0, 0.0]),
        };
        acc[0] += mat2::dot(&s.v, &s0);
        acc[1] += mat2::dot(&s.v, &s1);
        n += 1;
    }
    if n == 0 {
        return Err(DiagError::EmptyBand {
            lo: band.0,
            hi: band.1,
        });
    }
    Ok([acc[0] / n as f64, acc[1] / n as f64])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub alpha: f64,
    pub estimate: f64,
    pub pairs: usize,
}

/// `sup |u(x1) - u(x2)| |x1 - x2|^{-alpha} min(|x1|, |x2|)^{2 alpha}` over a
/// seeded low-discrepancy sample of index pairs (samples ordered by radius).
/// The first `budget` pairs do not depend on `budget`, so the estimate is
/// nondecreasing in it.
pub fn holder_at_infinity(
    samples: &[(Vec2, Vec2)],
    alpha: f64,
    budget: usize,
    seed: u64,
) -> Result<HolderEstimate, DiagError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DiagError::HolderExponent(alpha));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|a, b| {
        mat2::norm(&samples[*a].0)
            .total_cmp(&mat2::norm(&samples[*b].0))
            .then(a.cmp(b))
    });
    let (rmin, rmax) = match (order.first(), order.last()) {
        (Some(a), Some(b)) => (mat2::norm(&samples[*a].0), mat2::norm(&samples[*b].0)),
        _ => return Err(DiagError::NarrowSpan(0.0)),
    };
    let decades = (rmax / rmin).log10();
    if !(decades >= 2.0) {
        return Err(DiagError::NarrowSpan(if decades.is_finite() { decades } else { 0.0 }));
    }
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 2] = [rng.random(), rng.random()];
    // plastic-number (R2) sequence
    let g = 1.324_717_957_244_746_f64;
    let step = [1.0 / g, 1.0 / (g * g)];
    let mut best: f64 = 0.0;
    let mut used = 0;
    for k in 0..budget {
        let u = (shift[0] + (k as f64 + 1.0) * step[0]).fract();
        let w = (shift[1] + (k as f64 + 1.0) * step[1]).fract();
        let i = order[((u * n as f64) as usize).min(n - 1)];
        let j = order[((w * n as f64) as usize).min(n - 1)];
        let (x1, u1) = samples[i];
        let (x2, u2) = samples[j];
        let dx = mat2::norm(&[x1[0] - x2[0], x1[1] - x2[1]]);
        if dx == 0.0 {
            continue;
        }
        used += 1;
        let du = mat2::norm(&[u1[0] - u2[0], u1[1] - u2[1]]);
        let rm = mat2::norm(&x1).min(mat2::norm(&x2));
        best = best.max(du * dx.powf(-alpha) * rm.powf(2.0 * alpha));
    }
    Ok(HolderEstimate {
        alpha,
        estimate: best,
        pairs: used,
    })
}

/// Least-squares slope of `log |v|` against `log r` over `(r, v)` pairs with
/// `r` in `[r_lo, r_hi]`.
pub fn log_log_slope(points: &[(f64, f64)], r_lo: f64, r_hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(r, v)| *r >= r_lo && *r <= r_hi && *v > 0.0)
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Diagnostic settings as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSpec {
    /// Far-field `ell` bands; unit bands up to `ell_max - margin` when absent.
    pub bands: Option<Vec<[f64; 2]>>,
    pub margin: f64,
    pub burn_in: f64,
    pub holder_alpha: f64,
    pub pair_budget: usize,
    pub seed: u64,
    pub qc_tolerance: f64,
    /// The extrapolated far-field speed counts as vanishing below this.
    pub farfield_threshold: f64,
    /// Radius range for the midline slope; the whole mesh when absent.
    pub midline_radii: Option<[f64; 2]>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            bands: None,
            margin: 1.0,
            burn_in: 1.0,
            holder_alpha: 1.0 / 3.0,
            pair_budget: 20_000,
            seed: 0x5eed_c0de,
            qc_tolerance: 0.05,
            farfield_threshold: 1e-2,
            midline_radii: None,
        }
    }
}

impl DiagnosticsSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.margin >= 0.0) {
            return Err(format!("diagnostics.margin = {} must be nonnegative", self.margin));
        }
        if !(self.burn_in >= 0.0) {
            return Err(format!("diagnostics.burn_in = {} must be nonnegative", self.burn_in));
        }
        if !(self.holder_alpha > 0.0 && self.holder_alpha < 1.0) {
            return Err(format!("diagnostics.holder_alpha = {} must lie in (0, 1)", self.holder_alpha));
        }
        if !(self.qc_tolerance >= 0.0) {
            return Err(format!("diagnostics.qc_tolerance = {} must be nonnegative", self.qc_tolerance));
        }
        if let Some(bands) = &self.bands {
            if bands.iter().any(|b| !(b[1] > b[0])) {
                return Err("diagnostics.bands entries must be [lo, hi] with lo < hi".into());
            }
            if bands.windows(2).any(|w| w[1][0] < w[0][0]) {
                return Err("diagnostics.bands must be ordered outward".into());
            }
        }
        if let Some([a, b]) = self.midline_radii {
            if !(a > 0.0 && b > a) {
                return Err("diagnostics.midline_radii must be [r_lo, r_hi] with 0 < r_lo < r_hi".into());
            }
        }
        Ok(())
    }
}

/// Everything measured on one field.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub profile: JProfile,
    pub total_dirichlet: f64,
    pub wall_trace: f64,
    pub decay: Result<DecayFit, DiagError>,
    pub qc: QcStats,
    pub farfield: Result<FarField, DiagError>,
    pub farfield_vanishes: bool,
    /// Slip-limit means on the outermost band.
    pub slip: Result<Vec2, DiagError>,
    pub holder: Result<HolderEstimate, DiagError>,
    pub midline_slope: Option<f64>,
}

/// Velocity at each node from recovered nodal gradients.
pub fn nodal_velocity(mesh: &StripMesh, mode: &GasMode, psi: &[f64]) -> Vec<Vec2> {
    let d = NodalDerivatives::recover(mesh, psi);
    (0..mesh.n_nodes())
        .map(|k| state_from_gradient(mode, mesh.node(k), mesh.node_x(k), d.grad[k]).v)
        .collect()
}

/// `(r, |v|)` along `lam = 1/2`, averaging the two middle node lines when
/// `n_lam` is odd.
pub fn midline_speeds(mesh: &StripMesh, velocity: &[Vec2]) -> Vec<(f64, f64)> {
    let n = mesh.n_lam();
    let cols: Vec<usize> = if n.is_multiple_of(2) { vec![n / 2] } else { vec![n / 2, n / 2 + 1] };
    (0..=mesh.n_ell())
        .map(|i| {
            let (mut r, mut v) = (0.0, [0.0; 2]);
            for &j in &cols {
                let k = mesh.node_index(i, j);
                r += mat2::norm(&mesh.node_x(k)) / cols.len() as f64;
                v[0] += velocity[k][0] / cols.len() as f64;
                v[1] += velocity[k][1] / cols.len() as f64;
            }
            (r, mat2::norm(&v))
        })
        .collect()
}

pub fn diagnose(
    mesh: &StripMesh,
    mode: &GasMode,
    psi: &[f64],
    spec: &DiagnosticsSpec,
    exec: Execution,
) -> DiagnosticsReport {
    let maps = gradient_maps(mesh, psi, exec);
    let profile = dirichlet_profile(mesh, &maps);
    let flow = crate::fields::reconstruct(mesh, mode, psi);
    let qc = quasiconformality(&maps, flow.max_mach(), spec.qc_tolerance);
    let bands: Vec<(f64, f64)> = match &spec.bands {
        Some(b) => b.iter().map(|b| (b[0], b[1])).collect(),
        None => default_bands(mesh, spec.margin),
    };
    let farfield = if bands.is_empty() {
        Err(DiagError::EmptyBand {
            lo: mesh.ell_min(),
            hi: mesh.ell_max() - spec.margin,
        })
    } else {
        farfield_velocity(&flow.samples, &bands)
    };
    let farfield_vanishes = farfield
        .as_ref()
        .is_ok_and(|f| f.extrapolated < spec.farfield_threshold);
    let slip = match bands.last() {
        Some(b) => slip_limit(mesh.geometry(), &flow.samples, *b),
        None => Err(DiagError::EmptyBand {
            lo: mesh.ell_min(),
            hi: mesh.ell_max(),
        }),
    };
    let vel = nodal_velocity(mesh, mode, psi);
    let pairs: Vec<(Vec2, Vec2)> = (0..mesh.n_nodes()).map(|k| (mesh.node_x(k), vel[k])).collect();
    let holder = holder_at_infinity(&pairs, spec.holder_alpha, spec.pair_budget, spec.seed);
    let mid = midline_speeds(mesh, &vel);
    let [r_lo, r_hi] = spec.midline_radii.unwrap_or([0.0, f64::INFINITY]);
    DiagnosticsReport {
        total_dirichlet: profile.total(),
        decay: fit_decay(&profile, spec.burn_in),
        profile,
        wall_trace: maps.wall_trace,
        qc,
        farfield,
        farfield_vanishes,
        slip,
        holder,
        midline_slope: log_log_slope(&mid, r_lo, r_hi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_mesh;
    use crate::fields::exact::{ExampleField, ReferenceField, WedgeMode};
    use crate::fields::{reconstruct, state_from_gradient};
    use crate::gas::GasMode;
    use crate::geometry::{ChannelDomain, CornerDomain};
    use std::f64::consts::PI;

    fn wedge_mesh(l: f64, n_ell: usize, n_lam: usize) -> StripMesh {
        let g = StripGeometry::Corner(CornerDomain::wedge(1.5 * PI, 1.0).unwrap());
        build_mesh(g, 0.0, l, n_ell, n_lam, 2).unwrap()
    }

    #[test]
    fn constant_psi_gives_zero_maps() {
        let m = wedge_mesh(3.0, 6, 4);
        let maps = gradient_maps(&m, &vec![2.0; m.n_nodes()], Execution::Sequential);
        for s in &maps.samples {
            assert_eq!(s.f, [0.0, 0.0]);
            assert_eq!(s.fstar, [0.0, 0.0]);
        }
        let p = dirichlet_profile(&m, &maps);
        assert_eq!(p.total(), 0.0);
        assert!(p.j.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn angle_field_maps() {
        // psi = lam: |f| = 1/(Theta r), f* vanishes on both walls
        let m = wedge_mesh(3.0, 12, 24);
        let psi: Vec<f64> = m.nodes().iter().map(|p| p.lam).collect();
        let maps = gradient_maps(&m, &psi, Execution::Sequential);
        for s in &maps.samples {
            let r = mat2::norm(&s.x);
            let exact = 1.0 / (1.5 * PI * r);
            // nodal gradients are exact; bilinear interpolation of 1/r is not
            assert!((mat2::norm(&s.f) - exact).abs() < 0.02 * exact);
        }
        assert!(maps.wall_trace < 1e-14);
    }

    #[test]
    fn profile_total_is_segment_sum() {
        let m = wedge_mesh(4.0, 16, 6);
        let mode = WedgeMode {
            theta: 1.5 * PI,
            theta0: -0.75 * PI,
            k: 1,
            amplitude: 1.0,
        };
        let psi: Vec<f64> = (0..m.n_nodes()).map(|k| mode.psi(m.node_x(k))).collect();
        let maps = gradient_maps(&m, &psi, Execution::Sequential);
        let p = dirichlet_profile(&m, &maps);
        let (_, gw) = crate::discretization::quadrature::gauss_unit(2).unwrap();
        let line_sum: f64 = p.j.iter().enumerate().map(|(i, j)| j * gw[i % 2] * m.h_ell()).sum();
        assert!((p.total() - line_sum).abs() < 1e-13 * p.total());
        assert!(p.j.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn fit_recovers_pure_exponential() {
        let ell: Vec<f64> = (0..=60).map(|i| 0.1 * i as f64).collect();
        let j: Vec<f64> = ell.iter().map(|e| (-e).exp()).collect();
        let fit = fit_decay(&JProfile::from_samples(&ell, &j), 0.5).unwrap();
        assert!((fit.alpha - 0.5).abs() < 1e-6, "{fit:?}");
        assert!(fit.residual < 1e-10);
        let zero = JProfile::from_samples(&ell, &vec![0.0; ell.len()]);
        assert_eq!(fit_decay(&zero, 0.5).unwrap().alpha, f64::INFINITY);
        assert!(fit_decay(&JProfile::from_samples(&ell[..5], &j[..5]), 0.0).is_err());
    }

    #[test]
    fn fit_recovers_growth_and_slow_decay() {
        for rate in [-0.3, 0.05, 1.7] {
            let ell: Vec<f64> = (0..=40).map(|i| 0.2 * i as f64).collect();
            let j: Vec<f64> = ell.iter().map(|e| (-2.0 * rate * e).exp()).collect();
            let fit = fit_decay(&JProfile::from_samples(&ell, &j), 0.0).unwrap();
            assert!((fit.alpha - rate).abs() < 1e-6, "{rate}: {fit:?}");
        }
    }

    #[test]
    fn wedge_mode_decay_rate() {
        let mode = WedgeMode {
            theta: 1.5 * PI,
            theta0: -0.75 * PI,
            k: 1,
            amplitude: 1.0,
        };
        let m = wedge_mesh(8.0, 128, 16);
        let psi: Vec<f64> = (0..m.n_nodes()).map(|k| mode.psi(m.node_x(k))).collect();
        let maps = gradient_maps(&m, &psi, Execution::Parallel);
        let fit = fit_decay(&dirichlet_profile(&m, &maps), 1.0).unwrap();
        assert!((fit.alpha - 1.0 / 3.0).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn example_farfield_ratio() {
        let g = StripGeometry::Corner(CornerDomain::example());
        let m = build_mesh(g, 2f64.ln(), 7.0, 60, 16, 2).unwrap();
        let psi: Vec<f64> = (0..m.n_nodes()).map(|k| ExampleField.psi(m.node_x(k))).collect();
        let flow = reconstruct(&m, &GasMode::Incompressible, &psi);
        // exact velocities at the quadrature points
        let exact: Vec<FlowSample> = flow
            .samples
            .iter()
            .map(|s| {
                let g = ExampleField.gradient(s.x);
                state_from_gradient(&GasMode::Incompressible, s.point, s.x, g)
            })
            .collect();
        let ff = farfield_velocity(&exact, &[(4.0, 5.0), (5.0, 6.0), (6.0, 7.0)]).unwrap();
        let b = &ff.bands;
        for w in b.windows(2) {
            let ratio = w[1].max_speed / w[0].max_speed;
            assert!((ratio - (-1.0f64 / 3.0).exp()).abs() < 0.01, "{ratio}");
        }
        assert!(ff.extrapolated < 0.5 * b[2].max_speed);
        assert!(farfield_velocity(&exact, &[(10.0, 11.0)]).is_err());
    }

    #[test]
    fn channel_uniform_flow_keeps_speed() {
        let g = StripGeometry::Channel(ChannelDomain { width: 1.0 });
        let m = build_mesh(g, 0.0, 6.0, 24, 4, 2).unwrap();
        let psi: Vec<f64> = m.nodes().iter().map(|p| 0.4 * p.lam).collect();
        let flow = reconstruct(&m, &GasMode::Incompressible, &psi);
        let ff = farfield_velocity(&flow.samples, &default_bands(&m, 1.0)).unwrap();
        for b in &ff.bands {
            assert!((b.max_speed - 0.4).abs() < 1e-12);
        }
        assert!((ff.extrapolated - 0.4).abs() < 1e-12);
    }

    #[test]
    fn geometric_limit_cases() {
        assert_eq!(geometric_limit(&[3.0, 2.0]), 2.0);
        let seq: Vec<f64> = (0..3).map(|i| 1.0 + 0.5f64.powi(i)).collect();
        assert!((geometric_limit(&seq) - 1.0).abs() < 1e-14);
        assert_eq!(geometric_limit(&[1.0, 1.0, 1.0]), 1.0);
    }

    #[test]
    fn holder_constant_and_monotone() {
        let pts: Vec<(Vec2, Vec2)> = (0..400)
            .map(|i| {
                let r = 10f64.powf(3.0 * i as f64 / 399.0);
                let t = 0.1 * i as f64;
                ([r * t.cos(), r * t.sin()], [2.0, 0.0])
            })
            .collect();
        assert_eq!(holder_at_infinity(&pts, 0.5, 1000, 1).unwrap().estimate, 0.0);
        let radial: Vec<(Vec2, Vec2)> = pts
            .iter()
            .map(|(x, _)| (*x, [mat2::norm(x).powf(-0.5), 0.0]))
            .collect();
        let mut prev = 0.0;
        for budget in [100, 1000, 10_000, 20_000] {
            let h = holder_at_infinity(&radial, 0.5, budget, 7).unwrap().estimate;
            assert!(h >= prev);
            assert!(h < 10.0);
            prev = h;
        }
        assert!(holder_at_infinity(&pts[..10], 0.5, 100, 1).is_err());
        assert!(holder_at_infinity(&pts, 1.5, 100, 1).is_err());
    }

    #[test]
    fn harmonic_gradient_map_is_conformal() {
        let m = wedge_mesh(4.0, 32, 12);
        let mode = WedgeMode {
            theta: 1.5 * PI,
            theta0: -0.75 * PI,
            k: 1,
            amplitude: 1.0,
        };
        let psi: Vec<f64> = (0..m.n_nodes()).map(|k| mode.psi(m.node_x(k))).collect();
        let maps = gradient_maps(&m, &psi, Execution::Sequential);
        let qc = quasiconformality(&maps, 0.0, 0.05);
        assert_eq!(qc.bound, 1.0);
        assert!(qc.violation_fraction < 0.01, "{qc:?}");
    }

    #[test]
    fn log_log_slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..50).map(|i| (i as f64 * 20.0, (i as f64 * 20.0).powf(-1.0 / 3.0))).collect();
        let s = log_log_slope(&pts, 10.0, 1000.0).unwrap();
        assert!((s + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn example_midline_slope() {
        let g = StripGeometry::Corner(CornerDomain::example());
        let m = build_mesh(g, 2f64.ln(), 8.0, 120, 16, 2).unwrap();
        let psi: Vec<f64> = (0..m.n_nodes()).map(|k| ExampleField.psi(m.node_x(k))).collect();
        let vel = nodal_velocity(&m, &GasMode::Incompressible, &psi);
        let s = log_log_slope(&midline_speeds(&m, &vel), 10.0, 1e3).unwrap();
        assert!((s + 1.0 / 3.0).abs() < 0.02, "{s}");
    }

    #[test]
    fn rest_state_report_is_zero() {
        let m = wedge_mesh(6.0, 24, 6);
        let r = diagnose(
            &m,
            &GasMode::Incompressible,
            &vec![0.0; m.n_nodes()],
            &DiagnosticsSpec::default(),
            Execution::Sequential,
        );
        assert_eq!(r.total_dirichlet, 0.0);
        assert_eq!(r.decay.as_ref().unwrap().alpha, f64::INFINITY);
        let ff = r.farfield.as_ref().unwrap();
        assert!(ff.bands.iter().all(|b| b.max_speed == 0.0));
        assert_eq!(ff.extrapolated, 0.0);
        assert!(r.farfield_vanishes);
        assert_eq!(r.holder.as_ref().unwrap().estimate, 0.0);
        assert_eq!(r.slip.as_ref().unwrap(), &[0.0, 0.0]);
        assert_eq!(r.qc.violation_fraction, 0.0);
    }

    #[test]
    fn example_holder_estimate_is_stable() {
        let g = StripGeometry::Corner(CornerDomain::example());
        let m = build_mesh(g, 2f64.ln(), 8.0, 60, 12, 2).unwrap();
        let pts: Vec<(Vec2, Vec2)> = (0..m.n_nodes())
            .map(|k| {
                let x = m.node_x(k);
                (x, ExampleField.velocity(x))
            })
            .collect();
        let a = holder_at_infinity(&pts, 1.0 / 3.0, 10_000, 3).unwrap().estimate;
        let b = holder_at_infinity(&pts, 1.0 / 3.0, 100_000, 3).unwrap().estimate;
        assert!(a.is_finite() && a > 0.0);
        assert!(b >= a && b <= 1.2 * a, "{a} {b}");
    }

    #[test]
    fn spec_validation_names_keys() {
        let bad = DiagnosticsSpec {
            holder_alpha: 1.0,
            ..DiagnosticsSpec::default()
        };
        assert!(bad.validate().unwrap_err().starts_with("diagnostics.holder_alpha"));
        assert!(DiagnosticsSpec::default().validate().is_ok());
    }
}
