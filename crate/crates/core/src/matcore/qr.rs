use nalgebra::DMatrix;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Compact Householder factorization `A·P = Q·R` in LAPACK layout: reflector
/// vectors live below the diagonal of `factors` with an implicit leading 1.
///
/// Signs are normalized so that `R` has a nonnegative diagonal; the flips are
/// kept in `signs` and folded into `Q` when it is applied.
pub(crate) struct Householder {
    factors: DMatrix<f64>,
    tau: Vec<f64>,
    signs: Vec<f64>,
    pub(crate) perm: Vec<usize>,
}

impl Householder {
    pub(crate) fn factor(mut a: DMatrix<f64>, pivoting: bool) -> Self {
        let (m, n) = a.shape();
        let kmax = m.min(n);
        let mut tau = Vec::with_capacity(kmax);
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..kmax {
            if pivoting {
                let p = first_max_residual_column(&a, k);
                if p != k {
                    a.swap_columns(k, p);
                    perm.swap(k, p);
                }
            }

            let data = a.as_mut_slice();
            let (head, tail) = data.split_at_mut((k + 1) * m);
            let col = &mut head[k * m + k..(k + 1) * m];
            let t = make_reflector(col);
            tau.push(t);
            if t != 0.0 {
                let v = &col[1..];
                for cj in tail.chunks_exact_mut(m) {
                    apply_reflector(v, t, &mut cj[k..]);
                }
            }
        }

        let signs = (0..kmax)
            .map(|k| if a[(k, k)] < 0.0 { -1.0 } else { 1.0 })
            .collect();
        Householder {
            factors: a,
            tau,
            signs,
            perm,
        }
    }

    fn kmax(&self) -> usize {
        self.tau.len()
    }

    /// Upper-trapezoidal `R`, `min(m, n) x n`, with nonnegative diagonal.
    pub(crate) fn r(&self) -> DMatrix<f64> {
        let k = self.kmax();
        let n = self.factors.ncols();
        DMatrix::from_fn(k, n, |i, j| {
            if i <= j {
                self.signs[i] * self.factors[(i, j)]
            } else {
                0.0
            }
        })
    }

    /// Overwrites `x` (`m x c`, rows beyond `min(m, n)` included) with `Q·x`.
    pub(crate) fn apply_q(&self, x: &mut DMatrix<f64>) {
        let m = self.factors.nrows();
        debug_assert_eq!(x.nrows(), m);
        for (i, s) in self.signs.iter().enumerate() {
            if *s < 0.0 {
                x.row_mut(i).neg_mut();
            }
        }
        let fdata = self.factors.as_slice();
        for k in (0..self.kmax()).rev() {
            let t = self.tau[k];
            if t == 0.0 {
                continue;
            }
            let v = &fdata[k * m + k + 1..(k + 1) * m];
            for cj in x.as_mut_slice().chunks_exact_mut(m) {
                apply_reflector(v, t, &mut cj[k..]);
            }
        }
    }

    /// Thin orthogonal factor, `m x min(m, n)`.
    pub(crate) fn q(&self) -> DMatrix<f64> {
        let m = self.factors.nrows();
        let mut q = DMatrix::identity(m, self.kmax());
        self.apply_q(&mut q);
        q
    }
}

/// Builds `H = I − τ v vᵀ` with `H x = β e₁`; on return `x[0] = β` and
/// `x[1..]` holds `v[1..]`. Returns `τ` (zero when `x[1..]` already vanishes).
fn make_reflector(x: &mut [f64]) -> f64 {
    let alpha = x[0];
    let tail_norm = norm2(&x[1..]);
    if tail_norm == 0.0 {
        return 0.0;
    }
    let beta = -alpha.signum() * alpha.hypot(tail_norm);
    let scale = 1.0 / (alpha - beta);
    for v in &mut x[1..] {
        *v *= scale;
    }
    x[0] = beta;
    (beta - alpha) / beta
}

/// `y ← (I − τ v vᵀ) y` where `v = [1, tail]`.
#[inline]
fn apply_reflector(tail: &[f64], tau: f64, y: &mut [f64]) {
    let (y0, yt) = y.split_first_mut().expect("reflector target is empty");
    let dot = *y0 + tail.iter().zip(yt.iter()).map(|(a, b)| a * b).sum::<f64>();
    let w = tau * dot;
    *y0 -= w;
    for (yi, vi) in yt.iter_mut().zip(tail) {
        *yi -= w * vi;
    }
}

fn norm2(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

/// Index of the first column `j ≥ k` whose trailing part `a[k.., j]` has
/// maximal norm. Norms are recomputed rather than downdated so the choice is
/// exactly the greedy one.
fn first_max_residual_column(a: &DMatrix<f64>, k: usize) -> usize {
    let m = a.nrows();
    let data = a.as_slice();
    let mut best = k;
    let mut best_norm = -1.0;
    for j in k..a.ncols() {
        let nrm = norm2(&data[j * m + k..(j + 1) * m]);
        if nrm > best_norm {
            best_norm = nrm;
            best = j;
        }
    }
    best
}

/// Thin QR of a tall matrix: `Y = Q·R` with `QᵀQ = I` and `R` upper
/// triangular with nonnegative diagonal. Rank-deficient input yields zeros on
/// the diagonal of `R`.
pub fn thin_qr(y: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    if y.rows() < y.cols() {
        return Err(Error::param(
            "Y",
            format!("thin QR needs rows >= cols, got {}x{}", y.rows(), y.cols()),
        ));
    }
    let h = Householder::factor(y.as_nalgebra().clone(), false);
    Ok((DenseMatrix::from_raw(h.q()), DenseMatrix::from_raw(h.r())))
}

/// Column-pivoted QR `M[:, perm] = Q·R`.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    /// `m x min(m, n)` with orthonormal columns.
    pub q: DenseMatrix,
    /// `min(m, n) x n` upper trapezoidal, diagonal nonnegative and nonincreasing.
    pub r: DenseMatrix,
    /// `perm[k]` is the original index of the `k`-th pivot column.
    pub perm: Vec<usize>,
}

/// Column-pivoted Householder QR. At every step the column with the largest
/// residual norm is brought forward; ties go to the lowest index.
pub fn pivoted_qr(m: &DenseMatrix) -> PivotedQr {
    let h = Householder::factor(m.as_nalgebra().clone(), true);
    PivotedQr {
        q: DenseMatrix::from_raw(h.q()),
        r: DenseMatrix::from_raw(h.r()),
        perm: h.perm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::test_util::{random_matrix, spectral};

    fn check_qr(y: &DenseMatrix) {
        let (q, r) = thin_qr(y).unwrap();
        assert!(q.orthonormality_defect() <= 1e-12);
        for j in 0..r.cols() {
            for i in j + 1..r.rows() {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
        let diff = q.as_nalgebra() * r.as_nalgebra() - y.as_nalgebra();
        assert!(spectral(&diff) <= 1e-10 * spectral(y.as_nalgebra()).max(1e-300));
    }

    #[test]
    fn identity_columns() {
        let y = DenseMatrix::eye(4, 2);
        let (q, r) = thin_qr(&y).unwrap();
        assert_eq!(q, y);
        assert_eq!(r, DenseMatrix::identity(2));
    }

    #[test]
    fn hand_gram_schmidt() {
        let y = DenseMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let (_, r) = thin_qr(&y).unwrap();
        assert!((r[(0, 0)] - 3f64.sqrt()).abs() < 1e-14);
        // second column: projection 1/√3, residual norm √(2/3)
        assert!((r[(0, 1)] - 1.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((r[(1, 1)] - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        check_qr(&y);
    }

    #[test]
    fn duplicate_columns_give_zero_pivot() {
        let y = DenseMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0]).unwrap();
        let (_, r) = thin_qr(&y).unwrap();
        assert!(r[(1, 1)].abs() < 1e-15);
        check_qr(&y);
    }

    #[test]
    fn random_reproduction() {
        for seed in 0..10 {
            check_qr(&random_matrix(30, 7, seed));
            check_qr(&random_matrix(7, 7, seed + 100));
        }
    }

    #[test]
    fn wide_input_rejected() {
        assert!(thin_qr(&DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn pivot_largest_norm_first() {
        let m = DenseMatrix::from_diagonal(&[1.0, 5.0, 2.0]).unwrap();
        let p = pivoted_qr(&m);
        assert_eq!(p.perm, vec![1, 2, 0]);
    }

    #[test]
    fn identity_ties_go_first() {
        let p = pivoted_qr(&DenseMatrix::identity(5));
        assert_eq!(p.perm, vec![0, 1, 2, 3, 4]);
    }

    /// Greedy oracle: repeatedly take the column with the largest norm after
    /// projecting out the already selected columns (modified Gram–Schmidt).
    fn greedy_oracle(m: &DenseMatrix) -> Vec<usize> {
        let (rows, cols) = (m.rows(), m.cols());
        let mut resid: Vec<Vec<f64>> = (0..cols).map(|j| m.col(j).to_vec()).collect();
        let mut chosen = Vec::new();
        for _ in 0..rows.min(cols) {
            let mut best = usize::MAX;
            let mut best_norm = -1.0;
            for (j, col) in resid.iter().enumerate() {
                if chosen.contains(&j) {
                    continue;
                }
                let nrm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                if nrm > best_norm {
                    best_norm = nrm;
                    best = j;
                }
            }
            chosen.push(best);
            let q: Vec<f64> = resid[best].iter().map(|v| v / best_norm).collect();
            for col in resid.iter_mut() {
                let d: f64 = col.iter().zip(&q).map(|(a, b)| a * b).sum();
                for (c, qi) in col.iter_mut().zip(&q) {
                    *c -= d * qi;
                }
            }
        }
        chosen
    }

    #[test]
    fn pivots_match_greedy_oracle() {
        for seed in 0..20 {
            let m = random_matrix(4, 6, seed);
            let p = pivoted_qr(&m);
            assert_eq!(&p.perm[..4], &greedy_oracle(&m)[..], "seed {seed}");
        }
    }

    #[test]
    fn pivoted_diagonal_nonincreasing_and_reproduces() {
        for seed in 0..10 {
            let m = random_matrix(9, 14, seed);
            let p = pivoted_qr(&m);
            for k in 1..p.r.rows() {
                assert!(p.r[(k, k)] <= p.r[(k - 1, k - 1)] + 1e-14);
            }
            let permuted = m.select_columns(&p.perm);
            let diff = p.q.as_nalgebra() * p.r.as_nalgebra() - permuted.as_nalgebra();
            assert!(diff.amax() < 1e-12);
        }
    }
}
