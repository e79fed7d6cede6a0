use nalgebra::SVD;

use super::{spectral_norm, DenseMatrix};
use crate::error::{Error, Result};

/// Canonical angles between two `r`-dimensional subspaces of `R^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalAngles {
    /// Singular values of `WᵀŴ`, clamped to `[0, 1]`, nonincreasing.
    pub cosines: Vec<f64>,
    /// Sine of the largest angle, `‖(I − WWᵀ)Ŵ‖₂`.
    ///
    /// Computed from the residual rather than as `sqrt(1 − cos²)` so that
    /// tiny angles keep full relative accuracy.
    pub sin_theta_max: f64,
}

impl CanonicalAngles {
    /// Angles in radians, nondecreasing.
    pub fn angles(&self) -> Vec<f64> {
        self.cosines.iter().map(|c| c.acos()).collect()
    }

    pub fn sin_theta_max_from_cosines(&self) -> f64 {
        let cmin = self.cosines.last().copied().unwrap_or(1.0);
        (1.0 - cmin * cmin).max(0.0).sqrt()
    }
}

/// Canonical angles between `range(W)` and `range(Wh)`; both arguments must
/// have orthonormal columns.
pub fn canonical_angles(w: &DenseMatrix, wh: &DenseMatrix) -> Result<CanonicalAngles> {
    if w.shape() != wh.shape() {
        return Err(Error::dims(
            "canonical_angles",
            format!("{:?}", w.shape()),
            format!("{:?}", wh.shape()),
        ));
    }
    let cross = w.tr_matmul(wh)?;
    let mut cosines: Vec<f64> = SVD::new(cross.as_nalgebra().clone(), false, false)
        .singular_values
        .iter()
        .map(|c| c.clamp(0.0, 1.0))
        .collect();
    cosines.sort_by(|a, b| b.total_cmp(a));

    // Symmetrize so swapping the arguments gives the same answer.
    let resid_a = wh.as_nalgebra() - w.as_nalgebra() * cross.as_nalgebra();
    let resid_b = w.as_nalgebra() - wh.as_nalgebra() * cross.as_nalgebra().transpose();
    let sa = spectral_norm(&DenseMatrix::from_raw(resid_a))?;
    let sb = spectral_norm(&DenseMatrix::from_raw(resid_b))?;
    let sin_theta_max = (0.5 * (sa + sb)).clamp(0.0, 1.0);

    Ok(CanonicalAngles {
        cosines,
        sin_theta_max,
    })
}
