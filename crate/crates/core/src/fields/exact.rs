//! Closed-form incompressible flows used as oracles and boundary data.
//!
//! Both fields are `psi = Im G(z)` for a holomorphic `G`, so
//! `psi_x = Im G'`, `psi_y = Re G'`, `psi_xx = Im G''`, `psi_xy = Re G''`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::mat2::{Mat2, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("point ({x}, {y}) lies outside the domain of {field}")]
    OutsideDomain { x: f64, y: f64, field: &'static str },
}

/// Stream function with analytic first and second derivatives.
pub trait ReferenceField: Send + Sync {
    fn psi(&self, x: Vec2) -> f64;
    fn gradient(&self, x: Vec2) -> Vec2;
    fn hessian(&self, x: Vec2) -> Mat2;

    /// Velocity of the incompressible flow, `v = -grad_perp psi = (psi_y, -psi_x)`.
    fn velocity(&self, x: Vec2) -> Vec2 {
        let g = self.gradient(x);
        [g[1], -g[0]]
    }
}

/// `c z^p` evaluated in polar form with an explicit argument.
#[derive(Debug, Clone, Copy)]
struct PowerTerm {
    coef: [f64; 2],
    p: f64,
}

impl PowerTerm {
    fn eval(&self, r: f64, arg: f64, order: u32) -> [f64; 2] {
        let mut c = self.coef;
        let mut p = self.p;
        for _ in 0..order {
            c = [c[0] * p, c[1] * p];
            p -= 1.0;
        }
        let m = r.powf(p);
        let (s, co) = (p * arg).sin_cos();
        [m * (c[0] * co - c[1] * s), m * (c[0] * s + c[1] * co)]
    }
}

fn from_holomorphic(d1: [f64; 2]) -> Vec2 {
    [d1[1], d1[0]]
}

fn hessian_from_holomorphic(d2: [f64; 2]) -> Mat2 {
    // psi_yy = -psi_xx by harmonicity
    [[d2[1], d2[0]], [d2[0], -d2[1]]]
}

/// `psi = r^{2/3} cos(2 theta / 3) - 1`, the imaginary part of `i (z^{2/3} - 1)`,
/// with the branch cut on the negative real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleField;

impl ExampleField {
    const TERM: PowerTerm = PowerTerm {
        coef: [0.0, 1.0],
        p: 2.0 / 3.0,
    };

    fn polar(x: Vec2) -> (f64, f64) {
        (x[0].hypot(x[1]), x[1].atan2(x[0]))
    }

    /// Whether `x` lies in `r^{2/3} cos(2 theta/3) > 1, |theta| < 3 pi/4`, with
    /// a relative slack `tol` on the boundary.
    pub fn contains(x: Vec2, tol: f64) -> bool {
        let (r, t) = Self::polar(x);
        t.abs() < 0.75 * PI && r.powf(2.0 / 3.0) * (2.0 * t / 3.0).cos() >= 1.0 - tol
    }
}

impl ReferenceField for ExampleField {
    fn psi(&self, x: Vec2) -> f64 {
        let (r, t) = Self::polar(x);
        r.powf(2.0 / 3.0) * (2.0 * t / 3.0).cos() - 1.0
    }

    fn gradient(&self, x: Vec2) -> Vec2 {
        let (r, t) = Self::polar(x);
        from_holomorphic(Self::TERM.eval(r, t, 1))
    }

    fn hessian(&self, x: Vec2) -> Mat2 {
        let (r, t) = Self::polar(x);
        hessian_from_holomorphic(Self::TERM.eval(r, t, 2))
    }
}

/// `(psi, v)` of the example flow; errors outside its domain.
pub fn exact_incompressible_example(x: Vec2) -> Result<(f64, Vec2), FieldError> {
    if !ExampleField::contains(x, 1e-12) {
        return Err(FieldError::OutsideDomain {
            x: x[0],
            y: x[1],
            field: "the example flow",
        });
    }
    let f = ExampleField;
    Ok((f.psi(x), f.velocity(x)))
}

/// `amplitude r^{k pi/Theta} sin(k pi (theta - theta0)/Theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeMode {
    pub theta: f64,
    pub theta0: f64,
    pub k: u32,
    pub amplitude: f64,
}

impl WedgeMode {
    fn exponent(&self) -> f64 {
        self.k as f64 * PI / self.theta
    }

    /// Radius and angle measured from the lower wall, unwrapped so the
    /// exterior sector is split evenly between the two walls.
    fn polar(&self, x: Vec2) -> (f64, f64) {
        let r = x[0].hypot(x[1]);
        let mut a = (x[1].atan2(x[0]) - self.theta0).rem_euclid(2.0 * PI);
        if a > self.theta + 0.5 * (2.0 * PI - self.theta) {
            a -= 2.0 * PI;
        }
        (r, a)
    }

    fn term(&self) -> PowerTerm {
        // Im(amplitude (z e^{-i theta0})^n) with the rotation folded into the argument
        PowerTerm {
            coef: [self.amplitude, 0.0],
            p: self.exponent(),
        }
    }

    /// Rotates a holomorphic derivative of order `m` back to the `z` frame.
    fn rotate(&self, d: [f64; 2], m: u32) -> [f64; 2] {
        let (s, c) = (-(m as f64) * self.theta0).sin_cos();
        [d[0] * c - d[1] * s, d[0] * s + d[1] * c]
    }
}

impl ReferenceField for WedgeMode {
    fn psi(&self, x: Vec2) -> f64 {
        let (r, a) = self.polar(x);
        self.amplitude * r.powf(self.exponent()) * (self.exponent() * a).sin()
    }

    fn gradient(&self, x: Vec2) -> Vec2 {
        let (r, a) = self.polar(x);
        from_holomorphic(self.rotate(self.term().eval(r, a, 1), 1))
    }

    fn hessian(&self, x: Vec2) -> Mat2 {
        let (r, a) = self.polar(x);
        hessian_from_holomorphic(self.rotate(self.term().eval(r, a, 2), 2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2;

    fn fd_gradient(f: &dyn ReferenceField, x: Vec2, h: f64) -> Vec2 {
        [
            (f.psi([x[0] + h, x[1]]) - f.psi([x[0] - h, x[1]])) / (2.0 * h),
            (f.psi([x[0], x[1] + h]) - f.psi([x[0], x[1] - h])) / (2.0 * h),
        ]
    }

    fn fd_hessian(f: &dyn ReferenceField, x: Vec2, h: f64) -> Mat2 {
        let gx = |p: Vec2| f.gradient(p);
        let a = gx([x[0] + h, x[1]]);
        let b = gx([x[0] - h, x[1]]);
        let c = gx([x[0], x[1] + h]);
        let d = gx([x[0], x[1] - h]);
        [
            [(a[0] - b[0]) / (2.0 * h), (c[0] - d[0]) / (2.0 * h)],
            [(a[1] - b[1]) / (2.0 * h), (c[1] - d[1]) / (2.0 * h)],
        ]
    }

    #[test]
    fn example_at_eight() {
        let (psi, v) = exact_incompressible_example([8.0, 0.0]).unwrap();
        assert!((psi - 3.0).abs() < 1e-14);
        assert!((mat2::norm(&v) - 1.0 / 3.0).abs() < 1e-15);
        assert!(exact_incompressible_example([0.5, 0.0]).is_err());
        assert!(exact_incompressible_example([-5.0, 0.1]).is_err());
    }

    #[test]
    fn example_speed_law() {
        for (r, t) in [(3.0, 0.4), (50.0, -1.9), (700.0, 2.2)] {
            let x = [r * f64::cos(t), r * f64::sin(t)];
            let v = ExampleField.velocity(x);
            assert!((mat2::norm(&v) - (2.0 / 3.0) * f64::powf(r, -1.0 / 3.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mode = WedgeMode {
            theta: 1.5 * PI,
            theta0: -0.75 * PI,
            k: 1,
            amplitude: 0.8,
        };
        let mode2 = WedgeMode {
            theta: 0.6 * PI,
            theta0: -0.3 * PI,
            k: 2,
            amplitude: 1.3,
        };
        let fields: [&dyn ReferenceField; 3] = [&ExampleField, &mode, &mode2];
        for f in fields {
            for x in [[3.0, 0.5], [1.5, -2.0], [-0.5, 2.2], [4.0, 0.1]] {
                let g = f.gradient(x);
                let fg = fd_gradient(f, x, 1e-5);
                let h = f.hessian(x);
                let fh = fd_hessian(f, x, 1e-5);
                for i in 0..2 {
                    assert!((g[i] - fg[i]).abs() < 1e-8, "{x:?}");
                    for j in 0..2 {
                        assert!((h[i][j] - fh[i][j]).abs() < 1e-7, "{x:?}");
                    }
                }
                // harmonic
                assert!((h[0][0] + h[1][1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn example_is_divergence_and_curl_free_by_differences() {
        let step = 1e-4;
        for x in [[3.0, 1.0], [20.0, -9.0], [-4.0, 6.0]] {
            let v = |p: Vec2| ExampleField.velocity(p);
            let dvx_dx = (v([x[0] + step, x[1]])[0] - v([x[0] - step, x[1]])[0]) / (2.0 * step);
            let dvy_dy = (v([x[0], x[1] + step])[1] - v([x[0], x[1] - step])[1]) / (2.0 * step);
            let dvy_dx = (v([x[0] + step, x[1]])[1] - v([x[0] - step, x[1]])[1]) / (2.0 * step);
            let dvx_dy = (v([x[0], x[1] + step])[0] - v([x[0], x[1] - step])[0]) / (2.0 * step);
            assert!((dvx_dx + dvy_dy).abs() < 1e-8);
            assert!((dvy_dx - dvx_dy).abs() < 1e-8);
        }
    }

    #[test]
    fn wedge_mode_vanishes_on_walls() {
        let m = WedgeMode {
            theta: 1.5 * PI,
            theta0: -0.75 * PI,
            k: 1,
            amplitude: 1.0,
        };
        for r in [1.0, 10.0, 1e3] {
            for t in [-0.75 * PI, 0.75 * PI] {
                assert!(m.psi([r * f64::cos(t), r * f64::sin(t)]).abs() < 1e-12 * r);
            }
        }
        // speed exponent k pi / Theta - 1 = -1/3
        let s = |r: f64| mat2::norm(&m.velocity([r, 0.0]));
        let slope = (s(1000.0).ln() - s(10.0).ln()) / (100f64.ln());
        assert!((slope + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn wedge_mode_laplacian_by_differences() {
        let m = WedgeMode {
            theta: 1.2 * PI,
            theta0: -0.6 * PI,
            k: 3,
            amplitude: 0.5,
        };
        let step = 1e-3;
        for x in [[2.0, 0.3], [0.7, 1.4], [-1.0, -2.0]] {
            let p = |a: f64, b: f64| m.psi([x[0] + a, x[1] + b]);
            let lap = (p(step, 0.0) + p(-step, 0.0) + p(0.0, step) + p(0.0, -step) - 4.0 * p(0.0, 0.0))
                / (step * step);
            assert!(lap.abs() < 1e-5, "{lap}");
        }
    }
}
