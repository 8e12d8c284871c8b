//! Corner domains, the log-polar strip coordinates `(ell, lam)`, boundary
//! tangent frames and quasiconformality measurements.
//!
//! A corner domain is `{ r > r_min, theta_lo(r) < theta < theta_hi(r) }`. The
//! strip coordinates are `ell = log r` and `lam` with
//! `theta = lam * theta_hi + (1 - lam) * theta_lo`, so the walls sit at
//! `lam = 0` and `lam = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mat2::{self, Mat2, Vec2, MIRROR};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("opening angle {0} must lie in (0, pi) or (pi, 2 pi); the angles 0, pi and 2 pi are excluded")]
    ExcludedAngle(f64),
    #[error("invalid domain parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("ell = {ell} lies below the domain start {start}")]
    BelowStart { ell: f64, start: f64 },
    #[error("lam = {0} lies outside [0, 1]")]
    LamOutOfRange(f64),
    #[error("boundary frame is singular at ell = {ell} (det B = {det}); the wall directions are (anti)parallel")]
    SingularFrame { ell: f64, det: f64 },
    #[error("walls cross at ell = {0}")]
    WallsCross(f64),
}

/// Angle of a wall as a function of `ell = log r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleFn {
    Constant(f64),
    /// `near + (far - near) * sigmoid((ell - center) / scale)`.
    Logistic {
        near: f64,
        far: f64,
        center: f64,
        scale: f64,
    },
    /// `sign * 3/2 * arccos(r^{-2/3})`, the zero set of `r^{2/3} cos(2 theta / 3) = 1`.
    ExampleBoundary { sign: f64 },
    /// `base + amplitude * sin(ell)`; never settles, so no decay exponent exists.
    Oscillating { base: f64, amplitude: f64 },
}

impl AngleFn {
    /// `[theta, d theta/d ell, d^2, d^3]`.
    pub fn ell_derivatives(&self, ell: f64) -> [f64; 4] {
        match *self {
            AngleFn::Constant(c) => [c, 0.0, 0.0, 0.0],
            AngleFn::Logistic {
                near,
                far,
                center,
                scale,
            } => {
                let t = (ell - center) / scale;
                let (s, om) = if t >= 0.0 {
                    let e = (-t).exp();
                    (1.0 / (1.0 + e), e / (1.0 + e))
                } else {
                    let e = t.exp();
                    (e / (1.0 + e), 1.0 / (1.0 + e))
                };
                let d1 = s * om;
                let d2 = d1 * (om - s);
                let d3 = d2 * (om - s) - 2.0 * d1 * d1;
                let span = far - near;
                [
                    near + span * s,
                    span * d1 / scale,
                    span * d2 / (scale * scale),
                    span * d3 / (scale * scale * scale),
                ]
            }
            AngleFn::ExampleBoundary { sign } => {
                // phi = arccos(e^{-2 ell/3}) = 2 theta / 3; d phi/d ell = (2/3) cot(phi)
                let u = (-2.0 * ell / 3.0).exp();
                let phi = u.acos();
                let (sin, cos) = phi.sin_cos();
                let cot = cos / sin;
                let csc2 = 1.0 / (sin * sin);
                [
                    sign * 1.5 * phi,
                    sign * cot,
                    -sign * (2.0 / 3.0) * cot * csc2,
                    sign * (4.0 / 9.0) * cot * csc2 * (csc2 + 2.0 * cot * cot),
                ]
            }
            AngleFn::Oscillating { base, amplitude } => {
                let (s, c) = ell.sin_cos();
                [
                    base + amplitude * s,
                    amplitude * c,
                    -amplitude * s,
                    -amplitude * c,
                ]
            }
        }
    }

    /// `[theta, d theta/d r, d^2/dr^2, d^3/dr^3]` at radius `r`.
    pub fn r_derivatives(&self, r: f64) -> [f64; 4] {
        let [t, t1, t2, t3] = self.ell_derivatives(r.ln());
        [
            t,
            t1 / r,
            (t2 - t1) / (r * r),
            (t3 - 3.0 * t2 + 2.0 * t1) / (r * r * r),
        ]
    }

    /// Limit angle as `r -> infinity` (the mean angle for the oscillating case).
    pub fn limit(&self) -> f64 {
        match *self {
            AngleFn::Constant(c) => c,
            AngleFn::Logistic { far, .. } => far,
            AngleFn::ExampleBoundary { sign } => sign * 0.75 * PI,
            AngleFn::Oscillating { base, .. } => base,
        }
    }
}

/// Built-in domain families, as written in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    /// Straight walls at `-theta/2` and `theta/2`.
    Wedge { theta: f64, r_min: f64 },
    /// Symmetric walls whose opening blends from `theta_near` to `theta`
    /// around `log r = blend_center` over the log-radius scale `blend_scale`.
    SmoothedWedge {
        theta: f64,
        theta_near: f64,
        r_min: f64,
        blend_center: f64,
        blend_scale: f64,
    },
    /// `r > cos(2 theta / 3)^{-3/2}`, covering the angle `3 pi / 2` at infinity.
    Example,
    /// Straight channel `0 < y < width`, parametrized by `x = ell`.
    Channel { width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CornerDomain {
    lo: AngleFn,
    hi: AngleFn,
    r_min: f64,
    eps: f64,
    c_decay: f64,
    spec: Option<DomainSpec>,
}

fn check_angle(theta: f64) -> Result<(), GeometryError> {
    const TOL: f64 = 1e-9;
    let excluded = [0.0, PI, 2.0 * PI]
        .iter()
        .any(|a| (theta - a).abs() < TOL);
    if excluded || !(theta > 0.0 && theta < 2.0 * PI) {
        return Err(GeometryError::ExcludedAngle(theta));
    }
    Ok(())
}

impl CornerDomain {
    pub fn wedge(theta: f64, r_min: f64) -> Result<Self, GeometryError> {
        check_angle(theta)?;
        if !(r_min > 0.0) {
            return Err(GeometryError::InvalidParameter {
                name: "r_min",
                value: r_min,
                reason: "must be positive",
            });
        }
        Ok(CornerDomain {
            lo: AngleFn::Constant(-0.5 * theta),
            hi: AngleFn::Constant(0.5 * theta),
            r_min,
            eps: 1.0,
            c_decay: 0.0,
            spec: Some(DomainSpec::Wedge { theta, r_min }),
        })
    }

    pub fn smoothed_wedge(
        theta: f64,
        theta_near: f64,
        r_min: f64,
        blend_center: f64,
        blend_scale: f64,
    ) -> Result<Self, GeometryError> {
        check_angle(theta)?;
        if !(blend_scale > 0.0) {
            return Err(GeometryError::InvalidParameter {
                name: "blend_scale",
                value: blend_scale,
                reason: "must be positive",
            });
        }
        if !(theta_near > 0.0 && theta_near < 2.0 * PI) {
            return Err(GeometryError::InvalidParameter {
                name: "theta_near",
                value: theta_near,
                reason: "must lie in (0, 2 pi)",
            });
        }
        if !(r_min > 0.0) {
            return Err(GeometryError::InvalidParameter {
                name: "r_min",
                value: r_min,
                reason: "must be positive",
            });
        }
        let half = |sign: f64| AngleFn::Logistic {
            near: sign * 0.5 * theta_near,
            far: sign * 0.5 * theta,
            center: blend_center,
            scale: blend_scale,
        };
        // |d^k theta/d ell^k| <= C e^{-ell/s} for a logistic, hence eps = 1/s in r.
        let c_decay = 0.5 * (theta - theta_near).abs() * (blend_center / blend_scale).exp() * 8.0
            / blend_scale.min(1.0).powi(3);
        Ok(CornerDomain {
            lo: half(-1.0),
            hi: half(1.0),
            r_min,
            eps: 1.0 / blend_scale,
            c_decay,
            spec: Some(DomainSpec::SmoothedWedge {
                theta,
                theta_near,
                r_min,
                blend_center,
                blend_scale,
            }),
        })
    }

    pub fn example() -> Self {
        CornerDomain {
            lo: AngleFn::ExampleBoundary { sign: -1.0 },
            hi: AngleFn::ExampleBoundary { sign: 1.0 },
            r_min: 1.0,
            eps: 2.0 / 3.0,
            c_decay: 4.0,
            spec: Some(DomainSpec::Example),
        }
    }

    /// Domain from arbitrary wall angle functions.
    pub fn from_angles(
        lo: AngleFn,
        hi: AngleFn,
        r_min: f64,
        eps: f64,
        c_decay: f64,
    ) -> Result<Self, GeometryError> {
        check_angle(hi.limit() - lo.limit())?;
        Ok(CornerDomain {
            lo,
            hi,
            r_min,
            eps,
            c_decay,
            spec: None,
        })
    }

    pub fn theta_lo(&self) -> &AngleFn {
        &self.lo
    }

    pub fn theta_hi(&self) -> &AngleFn {
        &self.hi
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn c_decay(&self) -> f64 {
        self.c_decay
    }

    /// Opening angle at infinity.
    pub fn opening(&self) -> f64 {
        self.hi.limit() - self.lo.limit()
    }

    pub fn spec(&self) -> Option<&DomainSpec> {
        self.spec.as_ref()
    }

    pub fn ell_start(&self) -> f64 {
        self.r_min.ln()
    }
}

/// Straight channel of constant width: the parallel-wall case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDomain {
    pub width: f64,
}

/// Geometry on which strip meshes are built.
#[derive(Debug, Clone, PartialEq)]
pub enum StripGeometry {
    Corner(CornerDomain),
    Channel(ChannelDomain),
}

/// Point of the strip `(ell, lam)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripPoint {
    pub ell: f64,
    pub lam: f64,
}

impl StripPoint {
    pub fn new(ell: f64, lam: f64) -> Self {
        StripPoint { ell, lam }
    }
}

/// Physical image of a strip point with first and second derivatives of the map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappedPoint {
    pub x: Vec2,
    /// `jac[i][a] = d x_i / d Lambda_a` with `Lambda = (ell, lam)`.
    pub jac: Mat2,
    /// `second[i][a][b] = d^2 x_i / d Lambda_a d Lambda_b`.
    pub second: [Mat2; 2],
}

/// Wall tangent fields and the matrix `B = [M s0, M s1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFrame {
    pub s0: Vec2,
    pub s1: Vec2,
    pub b: Mat2,
    pub det_b: f64,
    /// `d B / d ell`.
    pub db: Mat2,
}

/// Outcome of sampling the wall-decay bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCheck {
    pub passed: bool,
    /// Largest `|d^k theta_i / dr^k| r^{k + eps}` over the samples.
    pub max_ratio: f64,
}

impl StripGeometry {
    pub fn from_spec(spec: &DomainSpec) -> Result<Self, GeometryError> {
        Ok(match *spec {
            DomainSpec::Wedge { theta, r_min } => {
                StripGeometry::Corner(CornerDomain::wedge(theta, r_min)?)
            }
            DomainSpec::SmoothedWedge {
                theta,
                theta_near,
                r_min,
                blend_center,
                blend_scale,
            } => StripGeometry::Corner(CornerDomain::smoothed_wedge(
                theta,
                theta_near,
                r_min,
                blend_center,
                blend_scale,
            )?),
            DomainSpec::Example => StripGeometry::Corner(CornerDomain::example()),
            DomainSpec::Channel { width } => {
                if !(width > 0.0) {
                    return Err(GeometryError::InvalidParameter {
                        name: "width",
                        value: width,
                        reason: "must be positive",
                    });
                }
                StripGeometry::Channel(ChannelDomain { width })
            }
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            StripGeometry::Corner(d) => match d.spec {
                Some(DomainSpec::Wedge { .. }) => "wedge",
                Some(DomainSpec::SmoothedWedge { .. }) => "smoothed_wedge",
                Some(DomainSpec::Example) => "example",
                _ => "custom",
            },
            StripGeometry::Channel(_) => "channel",
        }
    }

    pub fn corner(&self) -> Option<&CornerDomain> {
        match self {
            StripGeometry::Corner(d) => Some(d),
            StripGeometry::Channel(_) => None,
        }
    }

    /// Smallest admissible `ell` (none for the channel).
    pub fn ell_start(&self) -> f64 {
        match self {
            StripGeometry::Corner(d) => d.ell_start(),
            StripGeometry::Channel(_) => f64::NEG_INFINITY,
        }
    }

    /// Whether the walls `lam = 0` and `lam = 1` belong to one connected boundary.
    pub fn walls_connected(&self) -> bool {
        matches!(self, StripGeometry::Corner(_))
    }

    pub fn strip_map(&self, p: StripPoint) -> Result<MappedPoint, GeometryError> {
        if !(-1e-14..=1.0 + 1e-14).contains(&p.lam) {
            return Err(GeometryError::LamOutOfRange(p.lam));
        }
        match self {
            StripGeometry::Channel(c) => Ok(MappedPoint {
                x: [p.ell, p.lam * c.width],
                jac: [[1.0, 0.0], [0.0, c.width]],
                second: [[[0.0; 2]; 2]; 2],
            }),
            StripGeometry::Corner(d) => {
                let start = d.ell_start();
                if p.ell < start - 1e-13 * start.abs().max(1.0) {
                    return Err(GeometryError::BelowStart {
                        ell: p.ell,
                        start,
                    });
                }
                let lo = d.lo.ell_derivatives(p.ell);
                let hi = d.hi.ell_derivatives(p.ell);
                let lam = p.lam;
                let span = hi[0] - lo[0];
                if !(span > 0.0) {
                    return Err(GeometryError::WallsCross(p.ell));
                }
                let theta = lam * hi[0] + (1.0 - lam) * lo[0];
                let th1 = lam * hi[1] + (1.0 - lam) * lo[1];
                let th2 = lam * hi[2] + (1.0 - lam) * lo[2];
                let dspan = hi[1] - lo[1];
                let r = p.ell.exp();
                let x = [r * theta.cos(), r * theta.sin()];
                let xp = mat2::perp(&x);
                let x_l = [x[0] + th1 * xp[0], x[1] + th1 * xp[1]];
                let x_m = [span * xp[0], span * xp[1]];
                let x_lp = mat2::perp(&x_l);
                let x_mp = mat2::perp(&x_m);
                let x_ll = [
                    x_l[0] + th2 * xp[0] + th1 * x_lp[0],
                    x_l[1] + th2 * xp[1] + th1 * x_lp[1],
                ];
                let x_lm = [
                    x_m[0] + dspan * xp[0] + th1 * x_mp[0],
                    x_m[1] + dspan * xp[1] + th1 * x_mp[1],
                ];
                let x_mm = [-span * span * x[0], -span * span * x[1]];
                if !(x_l[0].is_finite() && x_l[1].is_finite()) {
                    return Err(GeometryError::BelowStart {
                        ell: p.ell,
                        start,
                    });
                }
                Ok(MappedPoint {
                    x,
                    jac: [[x_l[0], x_m[0]], [x_l[1], x_m[1]]],
                    second: [
                        [[x_ll[0], x_lm[0]], [x_lm[0], x_mm[0]]],
                        [[x_ll[1], x_lm[1]], [x_lm[1], x_mm[1]]],
                    ],
                })
            }
        }
    }

    /// Inverse of [`StripGeometry::strip_map`].
    pub fn inverse_map(&self, x: Vec2) -> StripPoint {
        match self {
            StripGeometry::Channel(c) => StripPoint::new(x[0], x[1] / c.width),
            StripGeometry::Corner(d) => {
                let ell = mat2::norm(&x).ln();
                let lo = d.lo.ell_derivatives(ell)[0];
                let hi = d.hi.ell_derivatives(ell)[0];
                let mid = 0.5 * (lo + hi);
                let mut theta = x[1].atan2(x[0]);
                theta += 2.0 * PI * ((mid - theta) / (2.0 * PI)).round();
                StripPoint::new(ell, (theta - lo) / (hi - lo))
            }
        }
    }

    pub fn boundary_frame(&self, ell: f64) -> Result<BoundaryFrame, GeometryError> {
        match self {
            StripGeometry::Channel(_) => Err(GeometryError::SingularFrame { ell, det: 0.0 }),
            StripGeometry::Corner(d) => {
                let tangent = |a: &AngleFn| {
                    let [t, t1, t2, _] = a.ell_derivatives(ell);
                    let (s, c) = t.sin_cos();
                    let e = [c, s];
                    let ep = [-s, c];
                    let tan = [e[0] + t1 * ep[0], e[1] + t1 * ep[1]];
                    let dtan = [
                        (t1 + t2) * ep[0] - t1 * t1 * e[0],
                        (t1 + t2) * ep[1] - t1 * t1 * e[1],
                    ];
                    (tan, dtan)
                };
                let (s0, ds0) = tangent(&d.lo);
                let (s1, ds1) = tangent(&d.hi);
                let m0 = mat2::mul_vec(&MIRROR, &s0);
                let m1 = mat2::mul_vec(&MIRROR, &s1);
                let dm0 = mat2::mul_vec(&MIRROR, &ds0);
                let dm1 = mat2::mul_vec(&MIRROR, &ds1);
                let b = [[m0[0], m1[0]], [m0[1], m1[1]]];
                let det_b = mat2::det(&b);
                if !(det_b.abs() >= 1e-12) {
                    return Err(GeometryError::SingularFrame { ell, det: det_b });
                }
                Ok(BoundaryFrame {
                    s0,
                    s1,
                    b,
                    det_b,
                    db: [[dm0[0], dm1[0]], [dm0[1], dm1[1]]],
                })
            }
        }
    }
}

impl CornerDomain {
    /// Samples `|d^k theta_i/dr^k| <= c r^{-k-eps}` for `k = 1, 2, 3` on both walls.
    pub fn verify_decay(&self, eps: f64, c: f64, radii: &[f64]) -> DecayCheck {
        let mut max_ratio: f64 = 0.0;
        for &r in radii {
            for wall in [&self.lo, &self.hi] {
                let d = wall.r_derivatives(r);
                for k in 1..=3 {
                    let ratio = d[k].abs() * r.powf(k as f64 + eps);
                    max_ratio = max_ratio.max(ratio);
                }
            }
        }
        DecayCheck {
            passed: max_ratio <= c,
            max_ratio,
        }
    }
}

/// Per-sample dilatation `|F|^2 / det F` of a planar map.
#[derive(Debug, Clone, PartialEq)]
pub struct Dilatation {
    /// `None` where `|det F|` is below tolerance or `det F < 0`.
    pub ratios: Vec<Option<f64>>,
    /// Largest finite ratio.
    pub k_max: f64,
    pub degenerate: usize,
    pub reversed: usize,
}

/// Measures `|F|^2 / det F` with the operator norm. Samples with
/// `|det F| < rel_tol * |F|^2` are flagged rather than divided.
pub fn quasiconformality_ratio(samples: &[Mat2], rel_tol: f64) -> Dilatation {
    let mut ratios = Vec::with_capacity(samples.len());
    let mut k_max: f64 = 0.0;
    let mut degenerate = 0;
    let mut reversed = 0;
    for f in samples {
        let n = mat2::op_norm(f);
        let n2 = n * n;
        let d = mat2::det(f);
        if n2 == 0.0 || d.abs() < rel_tol * n2 {
            degenerate += 1;
            ratios.push(None);
        } else if d < 0.0 {
            reversed += 1;
            ratios.push(None);
        } else {
            let k = n2 / d;
            k_max = k_max.max(k);
            ratios.push(Some(k));
        }
    }
    Dilatation {
        ratios,
        k_max,
        degenerate,
        reversed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corner(d: CornerDomain) -> StripGeometry {
        StripGeometry::Corner(d)
    }

    #[test]
    fn wedge_walls_are_constant() {
        let d = CornerDomain::wedge(1.5 * PI, 1.0).unwrap();
        assert_eq!(d.theta_lo().ell_derivatives(3.0), [-0.75 * PI, 0.0, 0.0, 0.0]);
        assert_eq!(d.theta_hi().ell_derivatives(3.0), [0.75 * PI, 0.0, 0.0, 0.0]);
        assert!(d.verify_decay(5.0, 0.0, &[2.0, 10.0, 1e6]).passed);
    }

    #[test]
    fn excluded_angles_rejected() {
        for t in [0.0, PI, 2.0 * PI, -1.0, 7.0] {
            assert!(CornerDomain::wedge(t, 1.0).is_err(), "{t}");
        }
        assert!(CornerDomain::smoothed_wedge(1.5 * PI, 1.2 * PI, 1.0, 1.0, 0.0).is_err());
        assert!(StripGeometry::from_spec(&DomainSpec::Wedge { theta: PI, r_min: 1.0 }).is_err());
    }

    #[test]
    fn example_boundary_satisfies_level_set() {
        let d = CornerDomain::example();
        assert!((d.opening() - 1.5 * PI).abs() < 1e-15);
        let g = corner(d);
        for ell in [0.3, 1.0, 2.5, 6.0, 12.0] {
            for lam in [0.0, 1.0] {
                let x = g.strip_map(StripPoint::new(ell, lam)).unwrap().x;
                let r = mat2::norm(&x);
                let th = x[1].atan2(x[0]);
                let v = r.powf(2.0 / 3.0) * (2.0 * th / 3.0).cos();
                assert!((v - 1.0).abs() < 1e-10, "ell={ell} lam={lam} v={v}");
            }
        }
    }

    #[test]
    fn example_midline_on_positive_axis() {
        let g = corner(CornerDomain::example());
        let x = g.strip_map(StripPoint::new(8f64.ln(), 0.5)).unwrap().x;
        assert!((x[0] - 8.0).abs() < 1e-13 && x[1].abs() < 1e-13);
    }

    /// Finite-difference oracle for the analytic ell-derivatives of each wall family.
    #[test]
    fn angle_derivatives_match_finite_differences() {
        let fns = [
            AngleFn::ExampleBoundary { sign: 1.0 },
            AngleFn::Logistic {
                near: 1.9,
                far: 2.3,
                center: 1.0,
                scale: 0.7,
            },
            AngleFn::Oscillating {
                base: 2.0,
                amplitude: 0.1,
            },
        ];
        let h = 1e-4;
        for f in fns {
            for ell in [0.4, 1.3, 3.0] {
                let d = f.ell_derivatives(ell);
                for k in 0..3 {
                    let fd = (f.ell_derivatives(ell + h)[k] - f.ell_derivatives(ell - h)[k]) / (2.0 * h);
                    let tol = 1e-6 * d[k + 1].abs().max(1.0);
                    assert!((fd - d[k + 1]).abs() < tol, "{f:?} ell={ell} k={k}");
                }
            }
        }
    }

    #[test]
    fn r_derivatives_match_finite_differences() {
        let f = AngleFn::ExampleBoundary { sign: 1.0 };
        for r in [1.5, 4.0, 30.0] {
            let d = f.r_derivatives(r);
            let h = 1e-5 * r;
            for k in 0..3 {
                let fd = (f.r_derivatives(r + h)[k] - f.r_derivatives(r - h)[k]) / (2.0 * h);
                assert!((fd - d[k + 1]).abs() < 1e-6 * d[k + 1].abs().max(1e-3), "r={r} k={k}");
            }
        }
    }

    #[test]
    fn example_decay_exponent() {
        let d = CornerDomain::example();
        let radii: Vec<f64> = (0..=60).map(|i| 10f64.powf(1.0 + 0.2 * i as f64)).collect();
        let ok = d.verify_decay(2.0 / 3.0, 0.0, &radii);
        let c = 1.1 * ok.max_ratio;
        assert!(d.verify_decay(2.0 / 3.0, c, &radii).passed);
        assert!(!d.verify_decay(0.8, c, &radii).passed);
        assert!(!d.verify_decay(1.0, c, &radii).passed);
    }

    #[test]
    fn oscillating_wall_fails_every_exponent() {
        let d = CornerDomain::from_angles(
            AngleFn::Constant(-0.75 * PI),
            AngleFn::Oscillating {
                base: 0.75 * PI,
                amplitude: 0.1,
            },
            1.0,
            0.1,
            1.0,
        )
        .unwrap();
        // r^eps |d theta/dr| r grows without bound, so any constant fitted on
        // the first decades is exceeded further out
        let radii: Vec<f64> = (0..=800).map(|i| 10f64.powf(0.5 + 0.25 * i as f64)).collect();
        for eps in [0.01, 0.1, 0.5] {
            let base = d.verify_decay(eps, 0.0, &radii[..8]).max_ratio;
            assert!(!d.verify_decay(eps, 2.0 * base, &radii).passed, "eps={eps}");
        }
    }

    #[test]
    fn wedge_strip_map_and_jacobian() {
        let theta = 1.5 * PI;
        let g = corner(CornerDomain::wedge(theta, 1.0).unwrap());
        let p = g.strip_map(StripPoint::new(2.0, 0.25)).unwrap();
        let th = -0.75 * PI + 0.25 * theta;
        assert!((p.x[0] - 2f64.exp() * th.cos()).abs() < 1e-13);
        assert!((p.x[1] - 2f64.exp() * th.sin()).abs() < 1e-13);
        // det = e^{2 ell} * Theta: the (ell, lam) -> (ell, theta) part contributes Theta
        let det = mat2::det(&p.jac);
        assert!((det - (4.0f64).exp() * theta).abs() < 1e-11 * det);
        assert!(g.strip_map(StripPoint::new(-0.1, 0.5)).is_err());
    }

    #[test]
    fn example_jacobian_approaches_wedge_limit() {
        let d = CornerDomain::example();
        let mut prev = f64::INFINITY;
        for ell in [2.0, 5.0, 10.0, 20.0] {
            let lo = d.theta_lo().ell_derivatives(ell);
            let hi = d.theta_hi().ell_derivatives(ell);
            // (ell, lam) -> (ell, theta) Jacobian entries
            let off = (0.5 * hi[1] + 0.5 * lo[1]).abs().max(hi[1].abs());
            let diag = (hi[0] - lo[0] - 1.5 * PI).abs();
            let err = off.max(diag);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn second_derivatives_match_finite_differences() {
        let g = corner(CornerDomain::example());
        let p = StripPoint::new(1.7, 0.3);
        let m = g.strip_map(p).unwrap();
        let h = 1e-5;
        for a in 0..2 {
            let (dp, dm) = if a == 0 {
                (StripPoint::new(p.ell + h, p.lam), StripPoint::new(p.ell - h, p.lam))
            } else {
                (StripPoint::new(p.ell, p.lam + h), StripPoint::new(p.ell, p.lam - h))
            };
            let jp = g.strip_map(dp).unwrap();
            let jm = g.strip_map(dm).unwrap();
            for i in 0..2 {
                let fd_first = (jp.x[i] - jm.x[i]) / (2.0 * h);
                assert!((fd_first - m.jac[i][a]).abs() < 1e-7 * m.jac[i][a].abs().max(1.0));
                for b in 0..2 {
                    let fd = (jp.jac[i][b] - jm.jac[i][b]) / (2.0 * h);
                    assert!((fd - m.second[i][a][b]).abs() < 1e-6 * m.second[i][a][b].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn boundary_frame_wedge() {
        let g = corner(CornerDomain::wedge(1.5 * PI, 1.0).unwrap());
        for ell in [0.0, 3.0, 9.0] {
            let f = g.boundary_frame(ell).unwrap();
            assert!((f.det_b - 1.0).abs() < 1e-14);
            assert!((f.s0[0] - (-0.75 * PI).cos()).abs() < 1e-15);
            assert!((f.s1[1] - (0.75 * PI).sin()).abs() < 1e-15);
            assert_eq!(f.db, [[0.0; 2]; 2]);
        }
        let acute = corner(CornerDomain::wedge(0.5 * PI, 1.0).unwrap());
        let f = acute.boundary_frame(1.0).unwrap();
        assert!((f.det_b + 1.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_frame_example_converges() {
        let g = corner(CornerDomain::example());
        for ell in [3.0, 6.0, 9.0, 12.0] {
            let f = g.boundary_frame(ell).unwrap();
            let err = (f.det_b - 1.0).abs();
            // O(e^{-2 ell / 3})
            assert!(err < 3.0 * (-2.0 * ell / 3.0).exp(), "ell={ell} err={err}");
        }
        assert!(StripGeometry::Channel(ChannelDomain { width: 1.0 })
            .boundary_frame(0.0)
            .is_err());
    }

    #[test]
    fn boundary_frame_derivative_matches_fd() {
        let g = corner(CornerDomain::example());
        let h = 1e-5;
        let f = g.boundary_frame(1.3).unwrap();
        let fp = g.boundary_frame(1.3 + h).unwrap();
        let fm = g.boundary_frame(1.3 - h).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let fd = (fp.b[i][j] - fm.b[i][j]) / (2.0 * h);
                assert!((fd - f.db[i][j]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn tangent_fields_are_tangent_to_walls() {
        let g = corner(CornerDomain::example());
        let ell = 1.1;
        let f = g.boundary_frame(ell).unwrap();
        for (lam, s) in [(0.0, f.s0), (1.0, f.s1)] {
            let m = g.strip_map(StripPoint::new(ell, lam)).unwrap();
            let scale = ell.exp();
            assert!((m.jac[0][0] / scale - s[0]).abs() < 1e-13);
            assert!((m.jac[1][0] / scale - s[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn dilatation_basic() {
        let d = quasiconformality_ratio(&[[[2.0, -0.5], [0.5, 2.0]], [[2.0, 0.0], [0.0, 1.0]]], 1e-12);
        assert!((d.ratios[0].unwrap() - 1.0).abs() < 1e-14);
        assert!((d.ratios[1].unwrap() - 2.0).abs() < 1e-14);
        assert!((d.k_max - 2.0).abs() < 1e-14);
        let z = quasiconformality_ratio(&[[[0.0; 2]; 2], [[1.0, 0.0], [0.0, -1.0]]], 1e-12);
        assert_eq!((z.degenerate, z.reversed), (1, 1));
    }

    #[test]
    fn composition_constant_bounded_by_product() {
        // f(x, y) = (2x + 0.3 sin y, y), g(x, y) = (x + 0.2 y^2 / 2, y) on a grid
        let df = |p: Vec2| -> Mat2 { [[2.0, 0.3 * p[1].cos()], [0.0, 1.0]] };
        let dg = |p: Vec2| -> Mat2 { [[1.0, 0.2 * p[1]], [0.0, 1.0]] };
        let g = |p: Vec2| -> Vec2 { [p[0] + 0.1 * p[1] * p[1], p[1]] };
        let mut fs = Vec::new();
        let mut gs = Vec::new();
        let mut comp = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                let p = [i as f64 * 0.1, j as f64 * 0.1];
                gs.push(dg(p));
                fs.push(df(g(p)));
                comp.push(mat2::mul(&df(g(p)), &dg(p)));
            }
        }
        let kf = quasiconformality_ratio(&fs, 1e-12).k_max;
        let kg = quasiconformality_ratio(&gs, 1e-12).k_max;
        let kc = quasiconformality_ratio(&comp, 1e-12).k_max;
        assert!(kc <= kf * kg * (1.0 + 1e-12));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn strip_map_inverse_roundtrip(ell in 0.05f64..12.0, lam in 0.0f64..=1.0, which in 0usize..3) {
                let g = match which {
                    0 => StripGeometry::Corner(CornerDomain::wedge(1.5 * PI, 1.0).unwrap()),
                    1 => StripGeometry::Corner(CornerDomain::example()),
                    _ => StripGeometry::Corner(CornerDomain::smoothed_wedge(0.6 * PI, 0.4 * PI, 1.0, 2.0, 0.5).unwrap()),
                };
                let x = g.strip_map(StripPoint::new(ell, lam)).unwrap().x;
                let back = g.inverse_map(x);
                prop_assert!((back.ell - ell).abs() < 1e-12);
                prop_assert!((back.lam - lam).abs() < 1e-12);
            }

            #[test]
            fn det_b_tends_to_minus_sin_theta(theta in 0.2f64..6.0) {
                prop_assume!((theta - PI).abs() > 0.05);
                let d = CornerDomain::smoothed_wedge(theta, 0.5 * (theta + PI), 1.0, 1.0, 0.5).unwrap();
                let g = StripGeometry::Corner(d);
                let f = g.boundary_frame(25.0).unwrap();
                prop_assert!((f.det_b + theta.sin()).abs() < 1e-12);
            }
        }
    }
}
