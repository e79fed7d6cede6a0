use nalgebra::DMatrix;

use super::qr::Householder;
use super::{pivoted_qr, DenseMatrix};
use crate::error::{Error, Result};

/// Output of [`srrqr`]: `M[:, perm] = Q·[R11 R12; 0 R22]`.
#[derive(Clone, Debug)]
pub struct SrrqrFactors {
    /// `m x min(m, n)` with orthonormal columns.
    pub q: DenseMatrix,
    /// `r x r` upper triangular with positive diagonal.
    pub r11: DenseMatrix,
    /// `r x (n − r)`.
    pub r12: DenseMatrix,
    pub perm: Vec<usize>,
    pub eta: f64,
    pub swaps: usize,
}

impl SrrqrFactors {
    /// The `r` selected column indices.
    pub fn selected(&self) -> &[usize] {
        &self.perm[..self.r11.rows()]
    }

    /// `max |R11⁻¹R12|`, which the algorithm keeps at or below `eta`.
    pub fn max_interpolation_coefficient(&self) -> f64 {
        interpolation_coefficients(self.r11.as_nalgebra(), self.r12.as_nalgebra()).amax()
    }
}

pub const DEFAULT_ETA: f64 = 2.0;

fn interpolation_coefficients(r11: &DMatrix<f64>, r12: &DMatrix<f64>) -> DMatrix<f64> {
    r11.solve_upper_triangular(r12)
        .expect("R11 has a positive diagonal")
}

/// Strong rank-revealing QR with parameter `eta ≥ 1`.
///
/// Starts from the column-pivoted ordering and swaps a leading column `i`
/// with a trailing column `j` while
/// `(R11⁻¹R12)²_ij + (‖R22[:, j]‖ · ‖R11⁻¹[i, :]‖)² > eta²`. Each swap grows
/// `|det R11|` by more than `eta`, so the loop ends for `eta > 1`; it is
/// capped at `50·n` swaps regardless.
pub fn srrqr(m: &DenseMatrix, r: usize, eta: f64) -> Result<SrrqrFactors> {
    let (rows, n) = m.shape();
    if r == 0 || r > rows.min(n) {
        return Err(Error::param(
            "r",
            format!("need 1 <= r <= {}, got {r}", rows.min(n)),
        ));
    }
    if !(eta >= 1.0) {
        return Err(Error::param("eta", format!("need eta >= 1, got {eta}")));
    }

    let mut perm = pivoted_qr(m).perm;
    let cap = 50 * n;
    let eta2 = eta * eta;
    let mut swaps = 0;

    loop {
        let h = Householder::factor(m.as_nalgebra().select_columns(&perm), false);
        let rfull = h.r();
        let r11 = rfull.view((0, 0), (r, r)).into_owned();
        let r12 = rfull.view((0, r), (r, n - r)).into_owned();

        let smallest = (0..r).map(|i| r11[(i, i)]).fold(f64::INFINITY, f64::min);
        if !(smallest > f64::EPSILON * rfull[(0, 0)] * (rows.max(n) as f64)) {
            let rank = (0..r)
                .take_while(|&i| r11[(i, i)] > f64::EPSILON * rfull[(0, 0)])
                .count();
            return Err(Error::DegenerateSelection { rank, expected: r });
        }

        let coeff = interpolation_coefficients(&r11, &r12);
        let r11_inv = r11
            .solve_upper_triangular(&DMatrix::identity(r, r))
            .expect("positive diagonal");
        let inv_row_norms: Vec<f64> = (0..r).map(|i| r11_inv.row(i).norm()).collect();
        let trailing_norms: Vec<f64> = (0..n - r)
            .map(|j| {
                if rfull.nrows() > r {
                    rfull.view((r, r + j), (rfull.nrows() - r, 1)).norm()
                } else {
                    0.0
                }
            })
            .collect();

        let mut worst = (0.0, 0, 0);
        for j in 0..n - r {
            for i in 0..r {
                let g = trailing_norms[j] * inv_row_norms[i];
                let v = coeff[(i, j)].powi(2) + g * g;
                if v > worst.0 {
                    worst = (v, i, j);
                }
            }
        }

        if worst.0 <= eta2 {
            return Ok(SrrqrFactors {
                q: DenseMatrix::from_raw(h.q()),
                r11: DenseMatrix::from_raw(r11),
                r12: DenseMatrix::from_raw(r12),
                perm,
                eta,
                swaps,
            });
        }
        if swaps >= cap {
            return Err(Error::SwapCapExceeded { cap });
        }
        perm.swap(worst.1, r + worst.2);
        swaps += 1;
    }
}
