//! Closed-form 2x2 linear algebra. Matrices are row-major: `m[row][col]`.

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
pub const MIRROR: Mat2 = [[1.0, 0.0], [0.0, -1.0]];

#[inline]
pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

#[inline]
pub fn inverse(m: &Mat2) -> Option<Mat2> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([
        [m[1][1] / d, -m[0][1] / d],
        [-m[1][0] / d, m[0][0] / d],
    ])
}

#[inline]
pub fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

#[inline]
pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

#[inline]
pub fn mul_vec(a: &Mat2, v: &Vec2) -> Vec2 {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

#[inline]
pub fn add(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

#[inline]
pub fn scale(a: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

#[inline]
pub fn dot(a: &Vec2, b: &Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: &Vec2) -> f64 {
    a[0].hypot(a[1])
}

/// Counterclockwise rotation by a right angle.
#[inline]
pub fn perp(a: &Vec2) -> Vec2 {
    [-a[1], a[0]]
}

#[inline]
pub fn frobenius_sq(m: &Mat2) -> f64 {
    m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]
}

/// Singular values `(max, min)` from the invariants `|A|_F^2` and `det A`.
pub fn singular_values(m: &Mat2) -> (f64, f64) {
    let f2 = frobenius_sq(m);
    let d = det(m);
    let disc = (f2 * f2 - 4.0 * d * d).max(0.0).sqrt();
    let smax = (0.5 * (f2 + disc)).sqrt();
    let smin = if smax > 0.0 { d.abs() / smax } else { 0.0 };
    (smax, smin)
}

/// Operator norm induced by the Euclidean vector norm.
pub fn op_norm(m: &Mat2) -> f64 {
    singular_values(m).0
}
