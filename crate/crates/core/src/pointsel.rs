//! Point selection: which components of a vector function get evaluated.
//!
//! Deterministic selectors (greedy DEIM, pivoted QR, strong RRQR) return `r`
//! distinct unit-weight indices. The leverage-score sampler draws with
//! replacement from a mixture of the leverage and uniform distributions and
//! scales each column so that `E[SSᵀ] = I`; the hybrid selector thins such a
//! sample back down to `r` points with strong RRQR.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matcore::{pivoted_qr, srrqr, thin_svd, DenseMatrix};
use crate::rangefinder::OrthonormalBasis;

/// `S = [w₀·e_{t₀}, …, w_{s−1}·e_{t_{s−1}}] ∈ R^{n×s}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionOperator {
    indices: Vec<usize>,
    weights: Vec<f64>,
    n: usize,
}

impl SelectionOperator {
    pub fn new(indices: Vec<usize>, weights: Vec<f64>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::param("indices", "selection is empty"));
        }
        if indices.len() != weights.len() {
            return Err(Error::dims("selection weights", indices.len(), weights.len()));
        }
        if let Some(t) = indices.iter().find(|t| **t >= n) {
            return Err(Error::param("indices", format!("index {t} out of range for n = {n}")));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::param("weights", "must be positive and finite"));
        }
        Ok(SelectionOperator { indices, weights, n })
    }

    /// Unit-weight selection of distinct indices.
    pub fn unit(indices: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = indices.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("indices", "deterministic selection repeats an index"));
        }
        let weights = vec![1.0; indices.len()];
        Self::new(indices, weights, n)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Ambient dimension `n`.
    pub fn ambient(&self) -> usize {
        self.n
    }

    /// Number of columns `s`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_unit_weight(&self) -> bool {
        self.weights.iter().all(|w| *w == 1.0)
    }

    pub fn has_duplicates(&self) -> bool {
        let mut seen = self.indices.clone();
        seen.sort_unstable();
        seen.windows(2).any(|w| w[0] == w[1])
    }

    /// `Sᵀx`: extract the selected components, then scale.
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.indices
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * x[*t])
            .collect()
    }

    /// `Sᵀx` where `x` is available only through an index oracle; exactly
    /// `s` evaluations are made.
    pub fn restrict_with(&self, mut f: impl FnMut(usize) -> f64) -> Vec<f64> {
        self.indices
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| w * f(*t))
            .collect()
    }

    /// `SᵀM` (`s x cols`).
    pub fn restrict_rows(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        if m.rows() != self.n {
            return Err(Error::dims("restrict_rows", self.n, m.rows()));
        }
        let out = DMatrix::from_fn(self.len(), m.cols(), |i, j| {
            self.weights[i] * m[(self.indices[i], j)]
        });
        Ok(DenseMatrix::from_raw(out))
    }

    /// `S·y` (length `n`).
    pub fn extend(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for ((t, w), v) in self.indices.iter().zip(&self.weights).zip(y) {
            out[*t] += w * v;
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DMatrix::zeros(self.n, self.len());
        for (j, (t, w)) in self.indices.iter().zip(&self.weights).enumerate() {
            out[(*t, j)] = *w;
        }
        DenseMatrix::from_raw(out)
    }

    /// Distinct indices with the accumulated squared weight of each; `SSᵀ`
    /// is diagonal with these entries.
    pub fn gram_diagonal(&self) -> BTreeMap<usize, f64> {
        let mut acc = BTreeMap::new();
        for (t, w) in self.indices.iter().zip(&self.weights) {
            *acc.entry(*t).or_insert(0.0) += w * w;
        }
        acc
    }

    /// `‖S‖₂`.
    pub fn norm(&self) -> f64 {
        self.gram_diagonal()
            .values()
            .fold(0.0_f64, |a, v| a.max(*v))
            .sqrt()
    }

    /// Orthonormal basis of `range(S)`: one coordinate vector per distinct
    /// index, in ascending index order.
    pub fn range_basis(&self) -> DenseMatrix {
        let distinct: Vec<usize> = self.gram_diagonal().keys().copied().collect();
        let mut out = DMatrix::zeros(self.n, distinct.len());
        for (j, t) in distinct.iter().enumerate() {
            out[(*t, j)] = 1.0;
        }
        DenseMatrix::from_raw(out)
    }

    /// `S·P` where `P` picks columns `positions` of `S` (unit weights).
    pub fn compose(&self, positions: &[usize]) -> Result<SelectionOperator> {
        if let Some(p) = positions.iter().find(|p| **p >= self.len()) {
            return Err(Error::param("positions", format!("position {p} out of range")));
        }
        Self::new(
            positions.iter().map(|p| self.indices[*p]).collect(),
            positions.iter().map(|p| self.weights[*p]).collect(),
            self.n,
        )
    }
}

/// Squared row norms of `W`; they sum to `r` and their maximum is the
/// coherence.
pub fn leverage_scores(w: &DenseMatrix) -> Vec<f64> {
    let (n, r) = w.shape();
    let mut out = vec![0.0; n];
    for j in 0..r {
        for (o, v) in out.iter_mut().zip(w.col(j)) {
            *o += v * v;
        }
    }
    out
}

/// Mixture `π_j = β ℓ_j / r + (1 − β) / n` of the leverage-score and uniform
/// distributions. Every row gets probability at least `(1 − β)/n`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeveragePmf {
    pub leverage: Vec<f64>,
    pub beta: f64,
    pub rank: usize,
    pub probs: Vec<f64>,
}

impl LeveragePmf {
    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub const DEFAULT_BETA: f64 = 0.5;

pub fn mixed_pmf(leverage: &[f64], r: usize, beta: f64) -> Result<LeveragePmf> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", format!("must lie in (0, 1), got {beta}")));
    }
    if r == 0 || leverage.is_empty() {
        return Err(Error::param("r", "rank and length must be positive"));
    }
    if leverage.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Error::param("leverage", "scores must be finite and nonnegative"));
    }
    let n = leverage.len() as f64;
    let probs = leverage
        .iter()
        .map(|l| beta * l / r as f64 + (1.0 - beta) / n)
        .collect();
    Ok(LeveragePmf {
        leverage: leverage.to_vec(),
        beta,
        rank: r,
        probs,
    })
}

/// `⌈(2r / (β ε²)) · ln(r/δ)⌉`, the sample count behind the leverage-score
/// error-constant guarantee.
pub fn sample_count_cls(r: usize, beta: f64, eps: f64, delta: f64) -> Result<usize> {
    for (name, v) in [("beta", beta), ("eps", eps), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::param(name, format!("must lie in (0, 1), got {v}")));
        }
    }
    if r == 0 {
        return Err(Error::param("r", "must be positive"));
    }
    let ratio = r as f64 / delta;
    if !(ratio > 1.0) {
        return Err(Error::param("delta", "need r / delta > 1 so the logarithm is positive"));
    }
    let value = 2.0 * r as f64 / (beta * eps * eps) * ratio.ln();
    Ok(value.ceil() as usize)
}

/// [`sample_count_cls`] clipped at `n`. The flag reports whether clipping
/// happened, which callers should surface as a warning.
pub fn sample_count_cls_capped(
    r: usize,
    beta: f64,
    eps: f64,
    delta: f64,
    n: usize,
) -> Result<(usize, bool)> {
    let c = sample_count_cls(r, beta, eps, delta)?;
    Ok(if c > n { (n, true) } else { (c, false) })
}

/// `⌈3 r ln r⌉`, a sample count that is usually sufficient in practice.
pub fn practical_sample_count(r: usize) -> Result<usize> {
    if r < 2 {
        return Err(Error::param("r", "need r >= 2"));
    }
    let r = r as f64;
    Ok((3.0 * r * r.ln()).ceil() as usize)
}

/// Draws `s` indices i.i.d. from `pmf` (with replacement) and scales column
/// `j` by `1/√(s π_{t_j})`.
pub fn leverage_select(pmf: &LeveragePmf, s: usize, seed: u64) -> Result<SelectionOperator> {
    if s == 0 {
        return Err(Error::param("s", "must be positive"));
    }
    let dist = WeightedIndex::new(&pmf.probs)
        .map_err(|e| Error::param("pmf", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices: Vec<usize> = (0..s).map(|_| dist.sample(&mut rng)).collect();
    let weights = indices
        .iter()
        .map(|t| 1.0 / (s as f64 * pmf.probs[*t]).sqrt())
        .collect();
    SelectionOperator::new(indices, weights, pmf.n())
}

/// Output of [`hybrid_select`]: `S = S₁·S₂`.
#[derive(Clone, Debug)]
pub struct HybridSelection {
    /// Leverage-score sample with `c_ls` columns.
    pub stage1: SelectionOperator,
    /// Columns of `S₁` kept by strong RRQR (unit weights, ambient `c_ls`).
    pub stage2: SelectionOperator,
    /// Composite operator with exactly `r` scaled identity columns.
    pub selection: SelectionOperator,
}

/// Leverage-score oversampling to `c_ls` candidates, then strong RRQR on
/// `WᵀS₁` to keep exactly `r` of them.
pub fn hybrid_select(
    w: &DenseMatrix,
    pmf: &LeveragePmf,
    c_ls: usize,
    eta: f64,
    seed: u64,
) -> Result<HybridSelection> {
    let r = w.cols();
    if c_ls < r {
        return Err(Error::param("c_ls", format!("need c_ls >= r = {r}, got {c_ls}")));
    }
    if pmf.n() != w.rows() {
        return Err(Error::dims("hybrid_select", w.rows(), pmf.n()));
    }
    let stage1 = leverage_select(pmf, c_ls, seed)?;
    let wt_s1 = stage1.restrict_rows(w)?.transpose();
    let f = srrqr(&wt_s1, r, eta)?;
    let positions = f.selected().to_vec();
    let selection = stage1.compose(&positions)?;

    let cross = selection.restrict_rows(w)?;
    let rank = numerical_rank(&cross)?;
    if rank < r {
        return Err(Error::DegenerateSelection { rank, expected: r });
    }
    Ok(HybridSelection {
        stage2: SelectionOperator::unit(positions, c_ls)?,
        stage1,
        selection,
    })
}

fn numerical_rank(m: &DenseMatrix) -> Result<usize> {
    let sv = thin_svd(m)?.singular_values;
    let tol = sv.first().copied().unwrap_or(0.0) * f64::EPSILON * (m.rows().max(m.cols()) as f64);
    Ok(sv.iter().filter(|s| **s > tol).count())
}

/// First `r` pivots of column-pivoted QR on `Wᵀ`.
pub fn pqr_select(w: &DenseMatrix) -> Result<SelectionOperator> {
    let r = w.cols();
    let p = pivoted_qr(&w.transpose());
    SelectionOperator::unit(p.perm[..r].to_vec(), w.rows())
}

/// Rows chosen by strong RRQR on `Wᵀ`; guarantees
/// `‖(SᵀW)⁻¹‖₂ ≤ √(1 + η² r (n − r))`.
pub fn srrqr_select(w: &DenseMatrix, eta: f64) -> Result<SelectionOperator> {
    let f = srrqr(&w.transpose(), w.cols(), eta)?;
    SelectionOperator::unit(f.selected().to_vec(), w.rows())
}

fn argmax_abs(v: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, -1.0);
    for (i, x) in v.enumerate() {
        if x.abs() > best.1 {
            best = (i, x.abs());
        }
    }
    best
}

/// Classic greedy DEIM: each new index is where the next basis vector is
/// worst interpolated by the previous ones.
pub fn deim_greedy_select(w: &DenseMatrix) -> Result<SelectionOperator> {
    let (n, r) = w.shape();
    let scale = w.max_abs();
    let (t0, m0) = argmax_abs(w.col(0).iter().copied());
    if !(m0 > 0.0) {
        return Err(Error::DegenerateBasis { step: 0 });
    }
    let mut picked = vec![t0];
    for k in 1..r {
        let wk = w.columns(0, k);
        let cross = DMatrix::from_fn(k, k, |i, j| wk[(picked[i], j)]);
        let rhs = nalgebra::DVector::from_iterator(k, picked.iter().map(|t| w[(*t, k)]));
        let coeff = cross
            .lu()
            .solve(&rhs)
            .ok_or(Error::DegenerateBasis { step: k })?;
        let resid = w.column(k) - wk.as_nalgebra() * coeff;
        let (t, m) = argmax_abs(resid.iter().copied());
        if !(m > f64::EPSILON * scale * n as f64) || !m.is_finite() {
            return Err(Error::DegenerateBasis { step: k });
        }
        picked.push(t);
    }
    SelectionOperator::unit(picked, n)
}

/// Convenience for bases: leverage scores of an [`OrthonormalBasis`].
pub fn basis_pmf(w: &OrthonormalBasis, beta: f64) -> Result<LeveragePmf> {
    mixed_pmf(&leverage_scores(w), w.dim(), beta)
}
