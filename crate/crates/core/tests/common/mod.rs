//! Shared helpers for the integration tests: seeded inputs and a one-sided
//! Jacobi SVD used as an oracle independent of the library's SVD path.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rdeim_core::matcore::thin_qr;
use rdeim_core::rangefinder::{gaussian_matrix, OrthonormalBasis};
use rdeim_core::DenseMatrix;

pub struct JacobiSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided Jacobi (Hestenes) SVD of a tall or square matrix, sorted.
pub fn jacobi_svd(a: &DMatrix<f64>) -> JacobiSvd {
    let (m, n) = a.shape();
    assert!(m >= n, "oracle expects a tall matrix");
    let mut u = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = u.column(i).norm_squared();
                let beta = u.column(j).norm_squared();
                let gamma = u.column(i).dot(&u.column(j));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let (x, y) = (u[(k, i)], u[(k, j)]);
                    u[(k, i)] = c * x - s * y;
                    u[(k, j)] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (v[(k, i)], v[(k, j)]);
                    v[(k, i)] = c * x - s * y;
                    v[(k, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    order.sort_by(|a, b| norms[*b].partial_cmp(&norms[*a]).unwrap());
    let mut uu = DMatrix::zeros(m, n);
    let mut vv = DMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let sj = norms[j];
        s.push(sj);
        if sj > 0.0 {
            uu.set_column(k, &(u.column(j) / sj));
        }
        vv.set_column(k, &v.column(j));
    }
    JacobiSvd { u: uu, s, v: vv }
}

pub fn oracle_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() >= a.ncols() {
        jacobi_svd(a).s
    } else {
        jacobi_svd(&a.transpose()).s
    }
}

pub fn oracle_norm2(a: &DMatrix<f64>) -> f64 {
    oracle_singular_values(a)[0]
}

pub fn random_orthonormal(n: usize, r: usize, seed: u64) -> OrthonormalBasis {
    let q = thin_qr(&gaussian_matrix(n, r, seed)).unwrap().0;
    OrthonormalBasis::from_matrix(q).unwrap()
}

/// `U diag(spectrum) Vᵀ` with seeded random orthonormal factors.
pub fn with_spectrum(m: usize, n: usize, spectrum: &[f64], seed: u64) -> DenseMatrix {
    let k = spectrum.len();
    let u = random_orthonormal(m, k, seed);
    let v = random_orthonormal(n, k, seed.wrapping_add(7_919));
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(spectrum));
    DenseMatrix::from_nalgebra(u.as_nalgebra() * s * v.as_nalgebra().transpose()).unwrap()
}

/// Geometric spectrum `σ_j = ratio^j`.
pub fn geometric(k: usize, ratio: f64) -> Vec<f64> {
    (0..k).map(|j| ratio.powi(j as i32)).collect()
}
