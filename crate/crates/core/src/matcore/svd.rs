use nalgebra::{DMatrix, SVD};

use super::qr::Householder;
use super::DenseMatrix;
use crate::error::{Error, Result};

/// Thin singular value decomposition `A = U·diag(σ)·Vᵀ`.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    /// `m x k` with orthonormal columns, `k = min(m, n)`.
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// `n x k` with orthonormal columns.
    pub v: DenseMatrix,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// Best rank-`r` approximation `U_r Σ_r V_rᵀ`.
    pub fn truncated(&self, r: usize) -> DenseMatrix {
        let r = r.min(self.rank());
        let mut ur = self.u.columns(0, r).into_nalgebra();
        for (j, s) in self.singular_values[..r].iter().enumerate() {
            ur.column_mut(j).scale_mut(*s);
        }
        DenseMatrix::from_raw(ur * self.v.columns(0, r).as_nalgebra().transpose())
    }
}

fn bidiag_svd(a: DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let k = a.nrows().min(a.ncols());
    let cap = 200 * k.max(10);
    let svd = SVD::try_new(a, true, true, f64::EPSILON, cap).ok_or(Error::NoConvergence {
        what: "bidiagonal SVD",
        iterations: cap,
    })?;
    let u = svd.u.expect("left vectors requested");
    let v = svd.v_t.expect("right vectors requested").transpose();
    let sv = svd.singular_values.iter().map(|s| s.max(0.0)).collect();
    Ok((u, sv, v))
}

/// Thin SVD. Tall inputs are first reduced by Householder QR so the iterative
/// phase only sees a `n x n` triangle; wide inputs are handled by transposing.
pub fn thin_svd(a: &DenseMatrix) -> Result<ThinSvd> {
    let (m, n) = a.shape();
    if m < n {
        let t = thin_svd(&a.transpose())?;
        return Ok(ThinSvd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    let (u, sv, v) = if m > n {
        let h = Householder::factor(a.as_nalgebra().clone(), false);
        let (ur, sv, v) = bidiag_svd(h.r())?;
        let mut u = DMatrix::zeros(m, n);
        u.view_mut((0, 0), (n, n)).copy_from(&ur);
        h.apply_q(&mut u);
        (u, sv, v)
    } else {
        bidiag_svd(a.as_nalgebra().clone())?
    };
    Ok(ThinSvd {
        u: DenseMatrix::from_raw(u),
        singular_values: sv,
        v: DenseMatrix::from_raw(v),
    })
}

/// Largest singular value. Empty matrices have norm zero.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    if m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let sv = SVD::try_new(m.as_nalgebra().clone(), false, false, f64::EPSILON, 0)
        .ok_or(Error::NoConvergence {
            what: "bidiagonal SVD",
            iterations: 0,
        })?
        .singular_values;
    Ok(sv.max())
}

/// Result of [`pinv_apply`].
#[derive(Clone, Debug)]
pub struct PinvApplied {
    pub value: DenseMatrix,
    /// Number of singular values retained.
    pub rank: usize,
}

pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// `M†·X` through the SVD, discarding `σ_i ≤ rank_tol·σ₁`. A square
/// full-rank `M` therefore yields `M⁻¹X`; an all-zero `M` yields zero with
/// rank 0.
pub fn pinv_apply(m: &DenseMatrix, x: &DenseMatrix, rank_tol: f64) -> Result<PinvApplied> {
    if !(rank_tol >= 0.0) {
        return Err(Error::param("rank_tol", "must be nonnegative"));
    }
    if m.rows() != x.rows() {
        return Err(Error::dims("pinv_apply", m.rows(), x.rows()));
    }
    let svd = thin_svd(m)?;
    Ok(pinv_apply_with(&svd, x, rank_tol))
}

pub(crate) fn pinv_apply_with(svd: &ThinSvd, x: &DenseMatrix, rank_tol: f64) -> PinvApplied {
    let sigma1 = svd.singular_values.first().copied().unwrap_or(0.0);
    let rank = svd
        .singular_values
        .iter()
        .take_while(|s| **s > rank_tol * sigma1 && **s > 0.0)
        .count();
    let mut coeff = svd.u.columns(0, rank).tr_matmul(x).expect("shape checked").into_nalgebra();
    for i in 0..rank {
        coeff.row_mut(i).scale_mut(1.0 / svd.singular_values[i]);
    }
    let value = svd.v.columns(0, rank).as_nalgebra() * coeff;
    PinvApplied {
        value: DenseMatrix::from_raw(value),
        rank,
    }
}
