//! Randomized construction of the interpolation basis.
//!
//! All routines are deterministic functions of their inputs and seed. Test
//! matrices come from a ChaCha8 stream (counter based) pushed through the
//! ziggurat standard-normal sampler.

use std::ops::Deref;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matcore::{thin_qr, thin_svd, DenseMatrix};

pub const DEFAULT_OVERSAMPLING: usize = 10;
pub const DEFAULT_POWER_ITERATIONS: usize = 1;
pub const DEFAULT_BLOCK_SIZE: usize = 10;
pub const DEFAULT_MAX_BLOCKS: usize = 40;

/// Orthonormality tolerance enforced on every basis handed out.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RangeConfig {
    pub rank: usize,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub seed: u64,
}

impl RangeConfig {
    pub fn new(rank: usize) -> Self {
        RangeConfig {
            rank,
            oversampling: DEFAULT_OVERSAMPLING,
            power_iterations: DEFAULT_POWER_ITERATIONS,
            seed: 0,
        }
    }

    pub fn oversampling(mut self, p: usize) -> Self {
        self.oversampling = p;
        self
    }

    pub fn power_iterations(mut self, q: usize) -> Self {
        self.power_iterations = q;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn sketch_width(&self) -> usize {
        self.rank + self.oversampling
    }

    fn validate(&self, a: &DenseMatrix) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::param("rank", "must be positive"));
        }
        if self.oversampling == 0 {
            return Err(Error::param("oversampling", "must be at least 1"));
        }
        let ell = self.sketch_width();
        if ell > a.cols() {
            return Err(Error::param(
                "rank",
                format!(
                    "rank + oversampling = {ell} exceeds the {} snapshot columns",
                    a.cols()
                ),
            ));
        }
        if ell > a.rows() {
            return Err(Error::param(
                "rank",
                format!("rank + oversampling = {ell} exceeds the {} rows", a.rows()),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveConfig {
    pub block_size: usize,
    /// Relative Frobenius tolerance `ε_tol ∈ (0, 1)`.
    pub tolerance: f64,
    pub max_blocks: usize,
    pub seed: u64,
}

impl AdaptiveConfig {
    pub fn new(tolerance: f64) -> Self {
        AdaptiveConfig {
            block_size: DEFAULT_BLOCK_SIZE,
            tolerance,
            max_blocks: DEFAULT_MAX_BLOCKS,
            seed: 0,
        }
    }

    pub fn block_size(mut self, b: usize) -> Self {
        self.block_size = b;
        self
    }

    pub fn max_blocks(mut self, k: usize) -> Self {
        self.max_blocks = k;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// How a basis was obtained, with the parameters that produced it.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    ExactSvd,
    BasicRandomized(RangeConfig),
    SubspaceIteration(RangeConfig),
    Adaptive(AdaptiveConfig),
    /// Single-pass sketch of width `ell`.
    Streaming { ell: usize, seed: u64 },
    /// Columns supplied by the caller.
    External,
}

/// A matrix with orthonormal columns together with its provenance.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    matrix: DenseMatrix,
    provenance: Provenance,
}

impl OrthonormalBasis {
    /// Wraps `matrix`, checking `‖MᵀM − I‖_max ≤ 1e−10`.
    pub fn new(matrix: DenseMatrix, provenance: Provenance) -> Result<Self> {
        let defect = matrix.orthonormality_defect();
        if !(defect <= ORTHONORMAL_TOL) {
            return Err(Error::param(
                "basis",
                format!("columns are not orthonormal (defect {defect:.3e})"),
            ));
        }
        Ok(OrthonormalBasis { matrix, provenance })
    }

    pub fn from_matrix(matrix: DenseMatrix) -> Result<Self> {
        Self::new(matrix, Provenance::External)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Number of basis vectors.
    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    /// Ambient dimension.
    pub fn ambient(&self) -> usize {
        self.matrix.rows()
    }

    /// Leading `r` columns.
    pub fn leading(&self, r: usize) -> Result<OrthonormalBasis> {
        if r == 0 || r > self.dim() {
            return Err(Error::param("r", format!("need 1 <= r <= {}", self.dim())));
        }
        Ok(OrthonormalBasis {
            matrix: self.matrix.columns(0, r),
            provenance: self.provenance.clone(),
        })
    }

    /// `‖(I − WWᵀ)A‖_F`.
    pub fn residual_frobenius(&self, a: &DenseMatrix) -> Result<f64> {
        Ok(self.residual(a)?.frobenius_norm())
    }

    /// `(I − WWᵀ)A`.
    pub fn residual(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        let coeff = self.matrix.tr_matmul(a)?;
        Ok(DenseMatrix::from_raw(
            a.as_nalgebra() - self.matrix.as_nalgebra() * coeff.as_nalgebra(),
        ))
    }
}

impl Deref for OrthonormalBasis {
    type Target = DenseMatrix;

    fn deref(&self) -> &DenseMatrix {
        &self.matrix
    }
}

fn fill_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_raw(DMatrix::from_fn(rows, cols, |_, _| {
        StandardNormal.sample(rng)
    }))
}

/// Standard Gaussian matrix, filled column by column from a ChaCha8 stream
/// seeded with `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fill_gaussian(&mut rng, rows, cols)
}

/// Exact basis: the leading `r` left singular vectors of `a`.
pub fn exact_basis(a: &DenseMatrix, r: usize) -> Result<OrthonormalBasis> {
    let k = a.rows().min(a.cols());
    if r == 0 || r > k {
        return Err(Error::param("r", format!("need 1 <= r <= {k}")));
    }
    let svd = thin_svd(a)?;
    OrthonormalBasis::new(svd.u.columns(0, r), Provenance::ExactSvd)
}

/// Leading `r` left singular vectors of `QᵀA`, mapped back through `Q`.
fn project_and_truncate(a: &DenseMatrix, q: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    let b = q.tr_matmul(a)?;
    let svd = thin_svd(&b)?;
    q.matmul(&svd.u.columns(0, r.min(svd.rank())))
}

fn orthonormal_range(y: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(thin_qr(y)?.0)
}

/// Sketch `Y = AΩ`, orthonormalize, then keep the dominant `r` directions of
/// `QᵀA`. Requires `power_iterations == 0`; see
/// [`subspace_range_finder`] otherwise.
pub fn basic_range_finder(a: &DenseMatrix, cfg: &RangeConfig) -> Result<OrthonormalBasis> {
    if cfg.power_iterations != 0 {
        return Err(Error::param(
            "power_iterations",
            "the basic range finder uses q = 0; call subspace_range_finder",
        ));
    }
    cfg.validate(a)?;
    let omega = gaussian_matrix(a.cols(), cfg.sketch_width(), cfg.seed);
    let w = basic_with_test_matrix(a, &omega, cfg.rank)?;
    OrthonormalBasis::new(w, Provenance::BasicRandomized(*cfg))
}

/// Steps 2–4 of the basic range finder for a caller-supplied test matrix.
pub fn basic_with_test_matrix(
    a: &DenseMatrix,
    omega: &DenseMatrix,
    r: usize,
) -> Result<DenseMatrix> {
    let y = a.matmul(omega)?;
    let q = orthonormal_range(&y)?;
    project_and_truncate(a, &q, r)
}

/// Randomized subspace iteration, equivalent in exact arithmetic to sketching
/// `(AAᵀ)^q AΩ`. Each application of `A` or `Aᵀ` is followed by a thin QR so
/// that small singular directions survive. `q = 0` is the basic range finder.
pub fn subspace_range_finder(a: &DenseMatrix, cfg: &RangeConfig) -> Result<OrthonormalBasis> {
    cfg.validate(a)?;
    let omega = gaussian_matrix(a.cols(), cfg.sketch_width(), cfg.seed);
    let mut q = orthonormal_range(&a.matmul(&omega)?)?;
    for _ in 0..cfg.power_iterations {
        let z = orthonormal_range(&a.tr_matmul(&q)?)?;
        q = orthonormal_range(&a.matmul(&z)?)?;
    }
    let w = project_and_truncate(a, &q, cfg.rank)?;
    let provenance = if cfg.power_iterations == 0 {
        Provenance::BasicRandomized(*cfg)
    } else {
        Provenance::SubspaceIteration(*cfg)
    };
    OrthonormalBasis::new(w, provenance)
}

/// `Q − W(WᵀQ)`.
fn project_out(w: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    if w.ncols() == 0 {
        return q.clone();
    }
    q - w * w.tr_mul(q)
}

/// Blocked adaptive range finder.
///
/// Grows the basis `b` columns at a time until the captured energy
/// `β = Σ‖B′‖_F²` exceeds `(1 − ε_tol²)‖A‖_F²`. The residual
/// `‖A − WWᵀA‖_F` is then recomputed explicitly; if round-off made the
/// running sum optimistic, the loop resumes from the true captured energy.
/// The full accumulated basis is returned; see [`truncate_basis`] for an
/// optional rank cut.
pub fn adaptive_range_finder(a: &DenseMatrix, cfg: &AdaptiveConfig) -> Result<OrthonormalBasis> {
    let (n, n_s) = a.shape();
    let b = cfg.block_size;
    if b == 0 {
        return Err(Error::param("block_size", "must be positive"));
    }
    if cfg.max_blocks == 0 {
        return Err(Error::param("max_blocks", "must be positive"));
    }
    if !(cfg.tolerance > 0.0 && cfg.tolerance < 1.0) {
        return Err(Error::param("tolerance", "must lie in (0, 1)"));
    }
    if b * cfg.max_blocks > n {
        return Err(Error::param(
            "max_blocks",
            format!(
                "block_size * max_blocks = {} exceeds the ambient dimension {n}",
                b * cfg.max_blocks
            ),
        ));
    }
    let alpha = a.frobenius_norm().powi(2);
    if alpha == 0.0 {
        return Err(Error::param("A", "matrix is identically zero"));
    }
    let eps2 = cfg.tolerance * cfg.tolerance;
    let target = eps2 * alpha;

    let an = a.as_nalgebra();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = DMatrix::<f64>::zeros(n, 0);
    let mut bmat = DMatrix::<f64>::zeros(0, n_s);
    let mut beta = 0.0;
    let mut blocks = 0;

    loop {
        // The accumulated β cannot resolve ε² near machine precision, so once
        // it is close to α the residual is measured directly.
        if beta > alpha * (1.0 - eps2) || (blocks > 0 && alpha - beta <= 1e-6 * alpha) {
            let resid = residual_sq(an, &w);
            if resid <= target {
                break;
            }
            beta = alpha - resid;
        }
        if blocks == cfg.max_blocks {
            let resid = residual_sq(an, &w);
            return Err(Error::AdaptiveNotConverged {
                blocks,
                achieved: (resid / alpha).sqrt(),
                target: cfg.tolerance,
                partial: Box::new(DenseMatrix::from_raw(w)),
            });
        }
        let omega = fill_gaussian(&mut rng, n_s, b);
        let omega = omega.as_nalgebra();
        let mut z = an * omega;
        if w.ncols() > 0 {
            z -= &w * (&bmat * omega);
        }
        let (q, _) = thin_qr(&DenseMatrix::from_raw(z))?;
        // Two passes of (I − WWᵀ) keep the new block orthogonal to W even
        // when Z is numerically rank deficient.
        let q = thin_qr(&DenseMatrix::from_raw(project_out(&w, q.as_nalgebra())))?.0;
        let q = thin_qr(&DenseMatrix::from_raw(project_out(&w, q.as_nalgebra())))?.0;
        let q = q.into_nalgebra();

        let mut b_new = q.tr_mul(an);
        if w.ncols() > 0 {
            b_new -= q.tr_mul(&w) * &bmat;
        }
        beta += b_new.norm_squared();

        w = concat_columns(&w, &q);
        bmat = concat_rows(&bmat, &b_new);
        blocks += 1;
    }

    OrthonormalBasis::new(DenseMatrix::from_raw(w), Provenance::Adaptive(*cfg))
}

fn residual_sq(a: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    if w.ncols() == 0 {
        return a.norm_squared();
    }
    (a - w * w.tr_mul(a)).norm_squared()
}

fn concat_columns(left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.columns_mut(0, left.ncols()).copy_from(left);
    out.columns_mut(left.ncols(), right.ncols()).copy_from(right);
    out
}

fn concat_rows(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), bottom.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

/// Rank-`r` cut of an existing basis: the dominant `r` directions of `WᵀA`.
pub fn truncate_basis(
    a: &DenseMatrix,
    basis: &OrthonormalBasis,
    r: usize,
) -> Result<OrthonormalBasis> {
    if r == 0 || r > basis.dim() {
        return Err(Error::param("r", format!("need 1 <= r <= {}", basis.dim())));
    }
    let w = project_and_truncate(a, basis.matrix(), r)?;
    OrthonormalBasis::new(w, basis.provenance().clone())
}

/// Smallest `r ≥ 1` with `Σ_{k>r} σ_k² ≤ eps · Σ_k σ_k²`.
pub fn truncation_rank(sv: &[f64], eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::param("eps", "must be positive"));
    }
    if sv.is_empty() || sv.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::param("sv", "need nonnegative singular values"));
    }
    if sv.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::param("sv", "singular values must be nonincreasing"));
    }
    let total: f64 = sv.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(Error::param("sv", "all singular values are zero"));
    }
    // Tail sums accumulated from the small end for accuracy.
    let mut tails = vec![0.0; sv.len() + 1];
    for k in (0..sv.len()).rev() {
        tails[k] = tails[k + 1] + sv[k] * sv[k];
    }
    Ok((1..=sv.len())
        .find(|&r| tails[r] <= eps * total)
        .unwrap_or(sv.len()))
}

/// Single-pass sketch `Y = Σ_j A(:, j)·Ω(j, :)` built one snapshot at a time.
///
/// The state keeps only `Ω` and `Y`; snapshots are discarded after
/// absorption. Mutation is single-writer.
#[derive(Clone, Debug)]
pub struct SketchState {
    omega: DenseMatrix,
    y: DMatrix<f64>,
    absorbed: Vec<bool>,
    columns_absorbed: usize,
    seed: u64,
}

impl SketchState {
    /// Fresh sketch for `n x n_s` snapshots with an `n_s x ell` Gaussian test
    /// matrix drawn exactly as [`gaussian_matrix`] would.
    pub fn new(n: usize, n_s: usize, ell: usize, seed: u64) -> Result<Self> {
        if n == 0 || n_s == 0 || ell == 0 {
            return Err(Error::param("sketch", "dimensions must be positive"));
        }
        Ok(SketchState {
            omega: gaussian_matrix(n_s, ell, seed),
            y: DMatrix::zeros(n, ell),
            absorbed: vec![false; n_s],
            columns_absorbed: 0,
            seed,
        })
    }

    pub fn omega(&self) -> &DenseMatrix {
        &self.omega
    }

    pub fn sketch(&self) -> DenseMatrix {
        DenseMatrix::from_raw(self.y.clone())
    }

    pub fn columns_absorbed(&self) -> usize {
        self.columns_absorbed
    }

    pub fn is_complete(&self) -> bool {
        self.columns_absorbed == self.absorbed.len()
    }

    fn check_column(&self, j: usize, col: &[f64]) -> Result<()> {
        if j >= self.absorbed.len() {
            return Err(Error::Sketch {
                column: j,
                reason: "index out of range",
            });
        }
        if col.len() != self.y.nrows() {
            return Err(Error::dims("sketch column", self.y.nrows(), col.len()));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Sketch {
                column: j,
                reason: "non-finite entry",
            });
        }
        Ok(())
    }

    /// `Y += a_j · Ω(j, :)`.
    fn rank_one_update(&mut self, j: usize, col: &[f64], sign: f64) {
        let omega = self.omega.as_nalgebra();
        for k in 0..self.y.ncols() {
            let wk = sign * omega[(j, k)];
            for (yi, ai) in self.y.column_mut(k).iter_mut().zip(col) {
                *yi += wk * ai;
            }
        }
    }

    pub fn absorb(&mut self, j: usize, a_j: &[f64]) -> Result<()> {
        self.check_column(j, a_j)?;
        if self.absorbed[j] {
            return Err(Error::Sketch {
                column: j,
                reason: "already absorbed",
            });
        }
        self.rank_one_update(j, a_j, 1.0);
        self.absorbed[j] = true;
        self.columns_absorbed += 1;
        Ok(())
    }

    /// `Y ← Y + (new − old)·Ω(j, :)`. The caller supplies the value that was
    /// absorbed for column `j`.
    pub fn replace(&mut self, j: usize, old_col: &[f64], new_col: &[f64]) -> Result<()> {
        self.check_column(j, old_col)?;
        self.check_column(j, new_col)?;
        if !self.absorbed[j] {
            return Err(Error::Sketch {
                column: j,
                reason: "replaced before being absorbed",
            });
        }
        let delta: Vec<f64> = new_col.iter().zip(old_col).map(|(a, b)| a - b).collect();
        self.rank_one_update(j, &delta, 1.0);
        Ok(())
    }

    /// Orthonormal basis for `range(Y)`; no second pass over the snapshots.
    pub fn range_basis(&self) -> Result<OrthonormalBasis> {
        let q = orthonormal_range(&DenseMatrix::from_raw(self.y.clone()))?;
        OrthonormalBasis::new(
            q,
            Provenance::Streaming {
                ell: self.y.ncols(),
                seed: self.seed,
            },
        )
    }

    /// Rank-`r` basis from the sketch alone: the leading left singular
    /// vectors of `Y`.
    pub fn basis(&self, r: usize) -> Result<OrthonormalBasis> {
        sketch_basis_from(&DenseMatrix::from_raw(self.y.clone()), r, self.seed)
    }

    /// Completes the basic range finder with the (possibly regenerated)
    /// snapshot matrix: orthonormalize `Y`, then truncate `QᵀA` to rank `r`.
    pub fn finalize(&self, a: &DenseMatrix, r: usize) -> Result<OrthonormalBasis> {
        let q = orthonormal_range(&DenseMatrix::from_raw(self.y.clone()))?;
        let w = project_and_truncate(a, &q, r)?;
        OrthonormalBasis::new(
            w,
            Provenance::Streaming {
                ell: self.y.ncols(),
                seed: self.seed,
            },
        )
    }
}

fn sketch_basis_from(y: &DenseMatrix, r: usize, seed: u64) -> Result<OrthonormalBasis> {
    if r == 0 || r > y.cols() {
        return Err(Error::param("r", format!("need 1 <= r <= {}", y.cols())));
    }
    let svd = thin_svd(y)?;
    OrthonormalBasis::new(
        svd.u.columns(0, r),
        Provenance::Streaming {
            ell: y.cols(),
            seed,
        },
    )
}

/// Batch counterpart of [`SketchState::basis`]: the same computation on
/// `Y = AΩ` formed in one product.
pub fn sketch_basis(a: &DenseMatrix, omega: &DenseMatrix, r: usize, seed: u64) -> Result<OrthonormalBasis> {
    sketch_basis_from(&a.matmul(omega)?, r, seed)
}
