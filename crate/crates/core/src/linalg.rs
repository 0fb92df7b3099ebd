//! 2x2 matrix helpers.

use serde::{Deserialize, Serialize};

pub type Mat2 = [[f64; 2]; 2];

/// Eigenvalues of a real 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Spectrum {
    /// Real eigenvalues, ordered `lo <= hi`.
    Real { lo: f64, hi: f64 },
    Complex { re: f64, im: f64 },
}

impl Spectrum {
    pub fn is_real(&self) -> bool {
        matches!(self, Spectrum::Real { .. })
    }

    /// Real parts, ordered.
    pub fn real_parts(&self) -> [f64; 2] {
        match *self {
            Spectrum::Real { lo, hi } => [lo, hi],
            Spectrum::Complex { re, .. } => [re, re],
        }
    }
}

pub fn trace(m: &Mat2) -> f64 {
    m[0][0] + m[1][1]
}

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

pub fn matvec(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn eigenvalues(m: &Mat2) -> Spectrum {
    let half_tr = 0.5 * trace(m);
    let d = det(m);
    // discriminant written to avoid cancellation when the diagonal dominates
    let disc = 0.25 * (m[0][0] - m[1][1]).powi(2) + m[0][1] * m[1][0];
    if disc >= 0.0 {
        let root = disc.sqrt();
        let q = if half_tr >= 0.0 { half_tr + root } else { half_tr - root };
        let (a, b) = if q != 0.0 { (q, d / q) } else { (0.0, 0.0) };
        Spectrum::Real { lo: a.min(b), hi: a.max(b) }
    } else {
        Spectrum::Complex { re: half_tr, im: (-disc).sqrt() }
    }
}

/// Eigenvector for a real eigenvalue `lambda`, normalized to unit length.
pub fn eigenvector(m: &Mat2, lambda: f64) -> [f64; 2] {
    let a = m[0][0] - lambda;
    let b = m[0][1];
    let c = m[1][0];
    let d = m[1][1] - lambda;
    // pick the better-conditioned row of (M - lambda I)
    let v = if a.abs() + b.abs() >= c.abs() + d.abs() {
        if a == 0.0 && b == 0.0 { [1.0, 0.0] } else { [-b, a] }
    } else {
        [-d, c]
    };
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_jordan() {
        let s = eigenvalues(&[[1.0, 3.0], [0.0, 1.0]]);
        assert_eq!(s, Spectrum::Real { lo: 1.0, hi: 1.0 });
        let s = eigenvalues(&[[-1.0, 1.0], [0.0, 0.0]]);
        assert_eq!(s, Spectrum::Real { lo: -1.0, hi: 0.0 });
    }

    #[test]
    fn rotation_is_complex() {
        let s = eigenvalues(&[[0.0, -2.0], [2.0, 0.0]]);
        assert_eq!(s, Spectrum::Complex { re: 0.0, im: 2.0 });
    }

    #[test]
    fn eigenvector_satisfies_definition() {
        let m = [[-5.0, 1.5], [0.5, -4.2]];
        for l in eigenvalues(&m).real_parts() {
            let v = eigenvector(&m, l);
            let mv = matvec(&m, v);
            assert!((mv[0] - l * v[0]).abs() < 1e-12);
            assert!((mv[1] - l * v[1]).abs() < 1e-12);
        }
    }
}
