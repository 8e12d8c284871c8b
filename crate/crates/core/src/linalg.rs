//! Linear solvers for the symmetric stencil systems: banded Cholesky and
//! Jacobi-preconditioned conjugate gradients.

use thiserror::Error;

use crate::discretization::StencilMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite: pivot {pivot:e} at row {row}")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("right-hand side has length {got}, expected {want}")]
    Length { got: usize, want: usize },
}

/// `A = L L^T` stored by rows of the lower band.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    p: usize,
    /// `l[i * (p + 1) + (i - j)]` holds `L_ij` for `i - p <= j <= i`.
    l: Vec<f64>,
    min_pivot: f64,
}

impl BandedCholesky {
    pub fn factor(a: &StencilMatrix) -> Result<Self, LinalgError> {
        let n = a.dim();
        let p = a.half_bandwidth();
        let w = p + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    l[i * w + (i - j)] = v;
                }
            }
        }
        let mut min_pivot = f64::INFINITY;
        for i in 0..n {
            let lo = i.saturating_sub(p);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(p));
                let mut s = l[i * w + (i - j)];
                for k in klo..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(LinalgError::NotPositiveDefinite { row: i, pivot: s });
                    }
                    min_pivot = min_pivot.min(s);
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(BandedCholesky { n, p, l, min_pivot })
    }

    /// Smallest pivot `d_i` encountered (the squared diagonal of `L`).
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::Length {
                got: b.len(),
                want: self.n,
            });
        }
        let w = self.p + 1;
        let mut y = b.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.p);
            let mut s = y[i];
            for k in lo..i {
                s -= self.l[i * w + (i - k)] * y[k];
            }
            y[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let hi = (i + self.p).min(self.n - 1);
            let mut s = y[i];
            for k in i + 1..=hi {
                s -= self.l[k * w + (k - i)] * y[k];
            }
            y[i] = s / self.l[i * w];
        }
        Ok(y)
    }
}

/// Jacobi-preconditioned conjugate gradients to relative residual `tol`.
pub fn pcg(
    a: &StencilMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize), LinalgError> {
    let n = a.dim();
    if b.len() != n {
        return Err(LinalgError::Length { got: b.len(), want: n });
    }
    let dinv: Vec<f64> = a
        .diagonal()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            if *d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(LinalgError::NotPositiveDefinite { row: i, pivot: *d })
            }
        })
        .collect::<Result<_, _>>()?;
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(LinalgError::NotPositiveDefinite { row: 0, pivot: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = dot(&r, &r).sqrt() / bnorm;
    Err(LinalgError::NoConvergence {
        iterations: max_iter,
        residual: rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 2D five-point Laplacian plus shift on an `ni x nj` grid.
    fn laplacian(ni: usize, nj: usize, shift: f64) -> StencilMatrix {
        let mut a = StencilMatrix::zeros(ni, nj);
        for i in 0..ni {
            for j in 0..nj {
                let k = i * nj + j;
                a.add(k, k, 4.0 + shift);
                if i > 0 {
                    a.add(k, k - nj, -1.0);
                }
                if i + 1 < ni {
                    a.add(k, k + nj, -1.0);
                }
                if j > 0 {
                    a.add(k, k - 1, -1.0);
                }
                if j + 1 < nj {
                    a.add(k, k + 1, -1.0);
                }
                if i > 0 && j > 0 {
                    a.add(k, k - nj - 1, -0.25);
                }
                if i + 1 < ni && j + 1 < nj {
                    a.add(k, k + nj + 1, -0.25);
                }
            }
        }
        a
    }

    #[test]
    fn cholesky_solves() {
        let a = laplacian(7, 5, 0.5);
        let x: Vec<f64> = (0..35).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul_vec(&x);
        let f = BandedCholesky::factor(&a).unwrap();
        let y = f.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!(f.min_pivot() > 0.0);
    }

    #[test]
    fn indefinite_rejected() {
        let a = laplacian(4, 4, -6.0);
        assert!(matches!(
            BandedCholesky::factor(&a),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn pcg_matches_direct() {
        let a = laplacian(9, 6, 1.0);
        let b: Vec<f64> = (0..54).map(|i| 1.0 + (i % 5) as f64).collect();
        let direct = BandedCholesky::factor(&a).unwrap().solve(&b).unwrap();
        let (x, _) = pcg(&a, &b, 1e-13, 500).unwrap();
        for (u, v) in x.iter().zip(&direct) {
            assert!((u - v).abs() < 1e-10);
        }
    }
}
