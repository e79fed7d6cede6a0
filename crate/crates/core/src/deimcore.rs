//! The DEIM projector `𝔻 = W (SᵀW)† Sᵀ` and the error bounds used to judge
//! it.
//!
//! Deterministic bounds come back as [`BoundReport`]s whose `holds()` is
//! expected to be true on every input satisfying the hypotheses. Expected
//! value and high-probability bounds are only reported; checking them is a
//! matter of Monte-Carlo failure rates.

use std::collections::BTreeMap;
use std::f64::consts::E;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matcore::{
    canonical_angles, pinv_apply_with, spectral_norm, thin_svd, DenseMatrix, ThinSvd,
    DEFAULT_RANK_TOL,
};
use crate::pointsel::SelectionOperator;
use crate::rangefinder::OrthonormalBasis;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectorMode {
    /// `s = r` with unit weights: `𝔻f` matches `f` at the selected points.
    Interpolatory,
    /// Oversampled and/or weighted selection.
    Sampled,
}

/// Immutable DEIM projector with a factored `SᵀW`.
#[derive(Clone, Debug)]
pub struct DeimProjector {
    basis: OrthonormalBasis,
    selection: SelectionOperator,
    cross_svd: ThinSvd,
    /// `(SᵀW)†`, `r x s`.
    cross_pinv: DMatrix<f64>,
    mode: ProjectorMode,
}

impl DeimProjector {
    /// Assembles the projector; fails unless `rank(SᵀW) = r`.
    pub fn build(basis: &OrthonormalBasis, selection: &SelectionOperator) -> Result<Self> {
        let (n, r) = basis.shape();
        if selection.ambient() != n {
            return Err(Error::dims("build_projector", n, selection.ambient()));
        }
        if selection.len() < r {
            return Err(Error::param(
                "selection",
                format!("need s >= r, got s = {} and r = {r}", selection.len()),
            ));
        }
        let cross = selection.restrict_rows(basis)?;
        let cross_svd = thin_svd(&cross)?;
        let eye = DenseMatrix::identity(selection.len());
        let pinv = pinv_apply_with(&cross_svd, &eye, DEFAULT_RANK_TOL);
        if pinv.rank < r {
            return Err(Error::DegenerateSelection {
                rank: pinv.rank,
                expected: r,
            });
        }
        let mode = if selection.len() == r && selection.is_unit_weight() {
            ProjectorMode::Interpolatory
        } else {
            ProjectorMode::Sampled
        };
        Ok(DeimProjector {
            basis: basis.clone(),
            selection: selection.clone(),
            cross_svd,
            cross_pinv: pinv.value.into_nalgebra(),
            mode,
        })
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn selection(&self) -> &SelectionOperator {
        &self.selection
    }

    pub fn mode(&self) -> ProjectorMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.basis.rows()
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    /// Singular values of `SᵀW`.
    pub fn cross_singular_values(&self) -> &[f64] {
        &self.cross_svd.singular_values
    }

    /// Reduced coefficients `(SᵀW)† y` from already restricted samples `y = Sᵀf`.
    pub fn coefficients_from_samples(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.selection.len() {
            return Err(Error::dims("samples", self.selection.len(), samples.len()));
        }
        let y = DVector::from_row_slice(samples);
        Ok((&self.cross_pinv * y).as_slice().to_vec())
    }

    fn lift(&self, coeff: &[f64]) -> Vec<f64> {
        let c = DVector::from_row_slice(coeff);
        (self.basis.as_nalgebra() * c).as_slice().to_vec()
    }

    /// `𝔻f`.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.n() {
            return Err(Error::dims("apply", self.n(), f.len()));
        }
        let coeff = self.coefficients_from_samples(&self.selection.restrict(f))?;
        Ok(self.lift(&coeff))
    }

    /// `𝔻f` where `f` is only available component-wise; evaluates exactly
    /// `s` components.
    pub fn apply_with(&self, f: impl FnMut(usize) -> f64) -> Vec<f64> {
        let samples = self.selection.restrict_with(f);
        let coeff = self
            .coefficients_from_samples(&samples)
            .expect("sample count matches selection");
        self.lift(&coeff)
    }

    /// `(SᵀW)†Sᵀ` (`r x n`). Dense; meant for small problems and checks.
    pub fn oblique_factor(&self) -> DenseMatrix {
        let mut out = DMatrix::zeros(self.rank(), self.n());
        for (j, (t, w)) in self
            .selection
            .indices()
            .iter()
            .zip(self.selection.weights())
            .enumerate()
        {
            let mut col = out.column_mut(*t);
            col.axpy(*w, &self.cross_pinv.column(j), 1.0);
        }
        DenseMatrix::from_raw(out)
    }

    /// Dense `n x n` projector. Meant for small problems and checks.
    pub fn assemble(&self) -> DenseMatrix {
        DenseMatrix::from_raw(self.basis.as_nalgebra() * self.oblique_factor().as_nalgebra())
    }

    /// `(SᵀW)†Sᵀ` restricted to its nonzero columns (one per distinct index).
    fn compact_factor(&self) -> DMatrix<f64> {
        let mut slot = BTreeMap::new();
        for t in self.selection.indices() {
            let next = slot.len();
            slot.entry(*t).or_insert(next);
        }
        let mut out = DMatrix::zeros(self.rank(), slot.len());
        for (j, (t, w)) in self
            .selection
            .indices()
            .iter()
            .zip(self.selection.weights())
            .enumerate()
        {
            let mut col = out.column_mut(slot[t]);
            col.axpy(*w, &self.cross_pinv.column(j), 1.0);
        }
        out
    }

    /// DEIM error constant `‖𝔻‖₂ = ‖(SᵀW)†Sᵀ‖₂`, evaluated exactly.
    pub fn error_constant(&self) -> f64 {
        spectral_norm(&DenseMatrix::from_raw(self.compact_factor()))
            .expect("small dense SVD converges")
    }

    /// `‖(SᵀW)†‖₂ = 1/σ_min(SᵀW)`.
    pub fn cross_pinv_norm(&self) -> f64 {
        1.0 / self.cross_svd.singular_values[self.rank() - 1]
    }

    /// Upper bound `‖(SᵀW)†‖₂ · ‖S‖₂` on the error constant.
    pub fn error_constant_product_bound(&self) -> f64 {
        self.cross_pinv_norm() * self.selection.norm()
    }
}

/// Convenience wrapper for [`DeimProjector::build`].
pub fn build_projector(
    basis: &OrthonormalBasis,
    selection: &SelectionOperator,
) -> Result<DeimProjector> {
    DeimProjector::build(basis, selection)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundKind {
    /// Holds for every admissible input.
    Deterministic,
    /// Bounds an expectation over the sketch.
    Expectation,
    /// Holds with at least the given probability.
    Probabilistic { confidence: f64 },
}

/// Right-hand side of an error bound alongside the actual error it bounds.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub actual_error: f64,
    pub bound_value: f64,
    /// Named constants that entered the bound (`D`, `sin_theta`, `kappa`, …).
    pub constants: BTreeMap<&'static str, f64>,
    /// Norms of the input split (`f_norm`, `best_approx_error`, `in_span_norm`).
    pub inputs: BTreeMap<&'static str, f64>,
    /// Floating-point allowance when comparing the two sides.
    pub roundoff: f64,
}

impl BoundReport {
    fn new(kind: BoundKind, actual_error: f64, bound_value: f64, scale: f64) -> Self {
        BoundReport {
            kind,
            actual_error,
            bound_value,
            constants: BTreeMap::new(),
            inputs: BTreeMap::new(),
            roundoff: 64.0 * f64::EPSILON * scale,
        }
    }

    /// `actual ≤ bound` up to the round-off allowance.
    pub fn holds(&self) -> bool {
        self.actual_error <= self.bound_value + self.roundoff
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `(‖(I − WWᵀ)f‖, ‖WWᵀf‖)`.
fn split_norms(w: &DenseMatrix, f: &[f64]) -> (f64, f64) {
    let fv = DVector::from_row_slice(f);
    let coeff = w.as_nalgebra().tr_mul(&fv);
    let inside = w.as_nalgebra() * &coeff;
    ((fv - &inside).norm(), inside.norm())
}

fn approximation_error(p: &DeimProjector, f: &[f64]) -> Result<f64> {
    let approx = p.apply(f)?;
    Ok(norm(
        &f.iter().zip(&approx).map(|(a, b)| a - b).collect::<Vec<_>>(),
    ))
}

/// `‖f − 𝔻f‖₂ ≤ ‖𝔻‖₂ ‖(I − WWᵀ)f‖₂`.
pub fn lemma21_bound(p: &DeimProjector, f: &[f64]) -> Result<BoundReport> {
    let actual = approximation_error(p, f)?;
    let d = p.error_constant();
    let (best, inside) = split_norms(p.basis(), f);
    let fnorm = norm(f);
    let mut rep = BoundReport::new(BoundKind::Deterministic, actual, d * best, fnorm * (1.0 + d));
    rep.constants.insert("D", d);
    rep.inputs.insert("f_norm", fnorm);
    rep.inputs.insert("best_approx_error", best);
    rep.inputs.insert("in_span_norm", inside);
    Ok(rep)
}

fn sin_theta(w: &DenseMatrix, wh: &DenseMatrix) -> Result<f64> {
    if w == wh {
        return Ok(0.0);
    }
    Ok(canonical_angles(w, wh)?.sin_theta_max)
}

/// Perturbed-basis bound
/// `‖f − 𝔻̂f‖ ≤ ‖𝔻̂‖ (‖(I − P_W)f‖ + sin θ_max ‖P_W f‖)` with `W` the exact
/// basis. Also reports the condition number
/// `κ = (1 + sin θ_max / (‖(I − P_W)f‖ / ‖P_W f‖)) ‖𝔻̂‖` when `P_W f ≠ 0`.
pub fn thm31_bound(
    p_hat: &DeimProjector,
    w_standard: &OrthonormalBasis,
    f: &[f64],
) -> Result<BoundReport> {
    let actual = approximation_error(p_hat, f)?;
    let d_hat = p_hat.error_constant();
    let sin_t = sin_theta(w_standard, p_hat.basis())?;
    let (best, inside) = split_norms(w_standard, f);
    let bound = d_hat * (best + sin_t * inside);
    let fnorm = norm(f);
    let mut rep = BoundReport::new(BoundKind::Deterministic, actual, bound, fnorm * (1.0 + d_hat));
    rep.constants.insert("D", d_hat);
    rep.constants.insert("sin_theta", sin_t);
    if inside > 0.0 {
        let kappa = (1.0 + sin_t * inside / best) * d_hat;
        if kappa.is_finite() {
            rep.constants.insert("kappa", kappa);
        }
    }
    rep.inputs.insert("f_norm", fnorm);
    rep.inputs.insert("best_approx_error", best);
    rep.inputs.insert("in_span_norm", inside);
    Ok(rep)
}

/// Two-angle bound for `s = r`:
/// `‖f − 𝔻̂f‖ ≤ ‖𝔻‖‖(I − P_W)f‖ + ‖𝔻‖‖𝔻̂‖(sin ψ_max ‖(I − P_W)f‖ + sin θ_max ‖P_S f‖)`
/// where `ψ` compares the ranges of the two selection operators.
pub fn thm32_bound(p: &DeimProjector, p_hat: &DeimProjector, f: &[f64]) -> Result<BoundReport> {
    for (name, q) in [("P", p), ("P_hat", p_hat)] {
        if q.selection().len() != q.rank() {
            return Err(Error::param(
                name,
                format!("needs s = r, got s = {} and r = {}", q.selection().len(), q.rank()),
            ));
        }
    }
    if p.n() != p_hat.n() || p.rank() != p_hat.rank() {
        return Err(Error::dims(
            "thm32_bound",
            format!("{}x{}", p.n(), p.rank()),
            format!("{}x{}", p_hat.n(), p_hat.rank()),
        ));
    }
    let actual = approximation_error(p_hat, f)?;
    let d = p.error_constant();
    let d_hat = p_hat.error_constant();
    let sin_t = sin_theta(p.basis(), p_hat.basis())?;
    let s_range = p.selection().range_basis();
    let sh_range = p_hat.selection().range_basis();
    let sin_psi = sin_theta(&s_range, &sh_range)?;
    let (best, inside) = split_norms(p.basis(), f);
    let ps_f = norm(&p.selection().gram_diagonal().keys().map(|t| f[*t]).collect::<Vec<_>>());
    let bound = d * best + d * d_hat * (sin_psi * best + sin_t * ps_f);
    let fnorm = norm(f);
    let mut rep = BoundReport::new(
        BoundKind::Deterministic,
        actual,
        bound,
        fnorm * (1.0 + d * d_hat),
    );
    rep.constants.insert("D", d);
    rep.constants.insert("D_hat", d_hat);
    rep.constants.insert("sin_theta", sin_t);
    rep.constants.insert("sin_psi", sin_psi);
    rep.inputs.insert("f_norm", fnorm);
    rep.inputs.insert("best_approx_error", best);
    rep.inputs.insert("in_span_norm", inside);
    rep.inputs.insert("selected_norm", ps_f);
    Ok(rep)
}

fn check_open_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in (0, 1), got {v}")))
    }
}

/// `C = √(r/(p − 1)) + e √((r + p)(n_s − r)) / p`.
pub fn subspace_constant(r: usize, p: usize, n_s: usize) -> Result<f64> {
    if p < 2 {
        return Err(Error::param("p", "oversampling must be at least 2"));
    }
    if r == 0 || r > n_s {
        return Err(Error::param("r", format!("need 1 <= r <= n_s = {n_s}")));
    }
    let (r, p, n_s) = (r as f64, p as f64, n_s as f64);
    Ok((r / (p - 1.0)).sqrt() + E * ((r + p) * (n_s - r)).sqrt() / p)
}

/// `γ^{2q+1} C / (1 − γ)` without clipping.
pub fn expected_angle_bound_unclipped(
    gamma: f64,
    r: usize,
    p: usize,
    q: usize,
    n_s: usize,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(
            "gamma",
            format!("singular value ratio must lie in (0, 1), got {gamma}"),
        ));
    }
    let c = subspace_constant(r, p, n_s)?;
    Ok(gamma.powi(2 * q as i32 + 1) * c / (1.0 - gamma))
}

/// Bound on `E sin θ_max` for randomized subspace iteration, clipped at 1.
pub fn expected_angle_bound(gamma: f64, r: usize, p: usize, q: usize, n_s: usize) -> Result<f64> {
    Ok(expected_angle_bound_unclipped(gamma, r, p, q, n_s)?.min(1.0))
}

/// Smallest `q ≥ 0` with `γ^{2q+1} C/(1 − γ) ≤ eps`, i.e.
/// `⌈½ ln(eps(1 − γ)/(γC)) / ln γ⌉` clamped at zero.
pub fn min_iterations(eps: f64, gamma: f64, c: f64) -> Result<usize> {
    check_open_unit("eps", eps)?;
    check_open_unit("gamma", gamma)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("C", "must be positive"));
    }
    let q = 0.5 * (eps * (1.0 - gamma) / (gamma * c)).ln() / gamma.ln();
    Ok(q.ceil().max(0.0) as usize)
}

/// Perturbation bounds on `sin θ_max` between the leading `r` left singular
/// subspaces of `A` and `Â`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WedinBound {
    /// `max(‖(A − Â)Ẑ₁‖, ‖(A − Â)ᵀŴ₁‖) / (σ_r(A) − σ_{r+1}(Â))`.
    pub residual_form: f64,
    /// `‖A − Â‖₂ / (σ_r(A) − σ_{r+1}(Â))`, never smaller.
    pub norm_form: f64,
    pub gap: f64,
}

pub fn wedin_angle_bound(a: &DenseMatrix, a_hat: &DenseMatrix, r: usize) -> Result<WedinBound> {
    if a.shape() != a_hat.shape() {
        return Err(Error::dims(
            "wedin_angle_bound",
            format!("{:?}", a.shape()),
            format!("{:?}", a_hat.shape()),
        ));
    }
    let k = a.rows().min(a.cols());
    if r == 0 || r > k {
        return Err(Error::param("r", format!("need 1 <= r <= {k}")));
    }
    let sa = thin_svd(a)?;
    let sh = thin_svd(a_hat)?;
    let next_hat = sh.singular_values.get(r).copied().unwrap_or(0.0);
    let gap = sa.singular_values[r - 1] - next_hat;
    if !(gap > 0.0) {
        return Err(Error::NoGap { gap });
    }
    let diff = DenseMatrix::from_raw(a.as_nalgebra() - a_hat.as_nalgebra());
    let right = diff.matmul(&sh.v.columns(0, r))?;
    let left = diff.tr_matmul(&sh.u.columns(0, r))?;
    let numer = spectral_norm(&right)?.max(spectral_norm(&left)?);
    Ok(WedinBound {
        residual_form: numer / gap,
        norm_form: spectral_norm(&diff)? / gap,
        gap,
    })
}

/// Error constants of the point-selection guarantees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constant {
    /// `√(1 + η² r (n − r))`.
    DSrrqr { eta: f64, r: usize, n: usize },
    /// `√((n / C_LS) / ((1 − β)(1 − ε)))`.
    DLs { n: usize, c_ls: usize, beta: f64, eps: f64 },
    /// `D_LS · √(1 + η² r (C_LS − r))`.
    DHyb {
        n: usize,
        c_ls: usize,
        beta: f64,
        eps: f64,
        eta: f64,
        r: usize,
    },
    /// `(e√(r+p)/(p+1)) (2/δ)^{1/(p+1)} (√(n_s − r) + √(r + p) + √(2 ln(2/δ)))`.
    Cd { r: usize, p: usize, n_s: usize, delta: f64 },
}

impl Constant {
    pub fn name(&self) -> &'static str {
        match self {
            Constant::DSrrqr { .. } => "D_sRRQR",
            Constant::DLs { .. } => "D_LS",
            Constant::DHyb { .. } => "D_Hyb",
            Constant::Cd { .. } => "C_d",
        }
    }

    pub fn evaluate(&self) -> Result<f64> {
        match *self {
            Constant::DSrrqr { eta, r, n } => {
                if !(eta >= 1.0) {
                    return Err(Error::param("eta", "must be at least 1"));
                }
                if r == 0 || r > n {
                    return Err(Error::param("r", format!("need 1 <= r <= n = {n}")));
                }
                Ok((1.0 + eta * eta * (r * (n - r)) as f64).sqrt())
            }
            Constant::DLs { n, c_ls, beta, eps } => {
                check_open_unit("beta", beta)?;
                check_open_unit("eps", eps)?;
                if c_ls == 0 || n == 0 {
                    return Err(Error::param("c_ls", "n and C_LS must be positive"));
                }
                Ok(((n as f64 / c_ls as f64) / ((1.0 - beta) * (1.0 - eps))).sqrt())
            }
            Constant::DHyb {
                n,
                c_ls,
                beta,
                eps,
                eta,
                r,
            } => {
                if !(eta >= 1.0) {
                    return Err(Error::param("eta", "must be at least 1"));
                }
                if r == 0 || c_ls < r {
                    return Err(Error::param("c_ls", format!("need C_LS >= r = {r}")));
                }
                let dls = Constant::DLs { n, c_ls, beta, eps }.evaluate()?;
                Ok(dls * (1.0 + eta * eta * (r * (c_ls - r)) as f64).sqrt())
            }
            Constant::Cd { r, p, n_s, delta } => {
                check_open_unit("delta", delta)?;
                if r == 0 || r > n_s {
                    return Err(Error::param("r", format!("need 1 <= r <= n_s = {n_s}")));
                }
                if p == 0 {
                    return Err(Error::param("p", "must be positive"));
                }
                let (rf, pf, nf) = (r as f64, p as f64, n_s as f64);
                let lead = E * (rf + pf).sqrt() / (pf + 1.0) * (2.0 / delta).powf(1.0 / (pf + 1.0));
                Ok(lead * ((nf - rf).sqrt() + (rf + pf).sqrt() + (2.0 * (2.0 / delta).ln()).sqrt()))
            }
        }
    }
}

/// `(1 + √(r/(p−1))) σ_{r+1} + (e√(r+p)/p) (Σ_{j>r} σ_j²)^{1/2}`, the expected
/// spectral-norm residual of the basic range finder.
pub fn rsvd_expected_error(sv: &[f64], r: usize, p: usize) -> Result<f64> {
    if p < 2 {
        return Err(Error::param("p", "oversampling must be at least 2"));
    }
    if sv.windows(2).any(|w| w[0] < w[1]) || sv.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::param("sv", "need nonincreasing nonnegative values"));
    }
    let next = sv.get(r).copied().unwrap_or(0.0);
    let tail: f64 = sv.iter().skip(r).map(|s| s * s).sum::<f64>().sqrt();
    let (rf, pf) = (r as f64, p as f64);
    Ok((1.0 + (rf / (pf - 1.0)).sqrt()) * next + E * (rf + pf).sqrt() / pf * tail)
}

/// Bound of the form `D (‖(I − P_W)f‖ + angle_factor ‖P_W f‖)` with `W` the
/// exact basis, covering the expected-error result for sRRQR selection
/// (`D = D_sRRQR`, `angle_factor = γ^{2q+1}C/(1−γ)`) and the `1 − 2δ` result
/// for hybrid selection (`D = D_Hyb`, `angle_factor = γ^{2q+1}C_d/(1−γ)`).
pub fn randomized_error_bound(
    p_hat: &DeimProjector,
    w_standard: &OrthonormalBasis,
    f: &[f64],
    d_value: f64,
    angle_factor: f64,
    kind: BoundKind,
) -> Result<BoundReport> {
    let actual = approximation_error(p_hat, f)?;
    let (best, inside) = split_norms(w_standard, f);
    let fnorm = norm(f);
    let mut rep = BoundReport::new(
        kind,
        actual,
        d_value * (best + angle_factor * inside),
        fnorm * (1.0 + d_value),
    );
    rep.constants.insert("D", d_value);
    rep.constants.insert("angle_factor", angle_factor);
    rep.constants.insert("D_actual", p_hat.error_constant());
    rep.inputs.insert("f_norm", fnorm);
    rep.inputs.insert("best_approx_error", best);
    rep.inputs.insert("in_span_norm", inside);
    Ok(rep)
}

/// `‖f − 𝔻f‖ ≤ D ‖(I − P_W)f‖` for a sampled projector, with `D` one of the
/// high-probability constants `D_LS`, `D_Hyb`.
pub fn sampled_error_bound(
    p: &DeimProjector,
    f: &[f64],
    d_value: f64,
    confidence: f64,
) -> Result<BoundReport> {
    let mut rep = lemma21_bound(p, f)?;
    rep.kind = BoundKind::Probabilistic { confidence };
    rep.constants.insert("D_actual", rep.constants["D"]);
    rep.constants.insert("D", d_value);
    rep.bound_value = d_value * rep.inputs["best_approx_error"];
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointsel::{pqr_select, SelectionOperator};
    use crate::rangefinder::{gaussian_matrix, OrthonormalBasis};
    use crate::matcore::thin_qr;

    fn random_basis(n: usize, r: usize, seed: u64) -> OrthonormalBasis {
        OrthonormalBasis::from_matrix(thin_qr(&gaussian_matrix(n, r, seed)).unwrap().0).unwrap()
    }

    #[test]
    fn coordinate_projector() {
        let w = OrthonormalBasis::from_matrix(DenseMatrix::eye(5, 2)).unwrap();
        let s = SelectionOperator::unit(vec![0, 1], 5).unwrap();
        let p = DeimProjector::build(&w, &s).unwrap();
        assert_eq!(p.mode(), ProjectorMode::Interpolatory);
        let d = p.assemble();
        let want = DMatrix::from_fn(5, 5, |i, j| if i == j && i < 2 { 1.0 } else { 0.0 });
        assert_eq!(d.as_nalgebra(), &want);
        assert_eq!(p.error_constant(), 1.0);
    }

    #[test]
    fn degenerate_selection_rejected() {
        let w = OrthonormalBasis::from_matrix(DenseMatrix::eye(5, 2)).unwrap();
        let s = SelectionOperator::unit(vec![0, 3], 5).unwrap();
        assert!(matches!(
            DeimProjector::build(&w, &s),
            Err(Error::DegenerateSelection { rank: 1, expected: 2 })
        ));
        let short = SelectionOperator::unit(vec![0], 5).unwrap();
        assert!(DeimProjector::build(&w, &short).is_err());
    }

    #[test]
    fn apply_reproduces_span() {
        let w = random_basis(12, 3, 1);
        let s = pqr_select(&w).unwrap();
        let p = DeimProjector::build(&w, &s).unwrap();
        let f: Vec<f64> = (w.as_nalgebra() * DVector::from_row_slice(&[1.0, -2.0, 0.5]))
            .as_slice()
            .to_vec();
        let approx = p.apply(&f).unwrap();
        for (a, b) in approx.iter().zip(&f) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(p.apply(&vec![0.0; 12]).unwrap().iter().all(|v| *v == 0.0));
        assert!(p.apply(&[1.0]).is_err());
    }

    #[test]
    fn lazy_apply_uses_s_evaluations() {
        let w = random_basis(12, 3, 2);
        let s = pqr_select(&w).unwrap();
        let p = DeimProjector::build(&w, &s).unwrap();
        let f: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let mut calls = 0;
        let lazy = p.apply_with(|i| {
            calls += 1;
            f[i]
        });
        assert_eq!(calls, 3);
        assert_eq!(lazy, p.apply(&f).unwrap());
    }

    #[test]
    fn unit_weight_constant_equals_inverse_norm() {
        let w = random_basis(10, 3, 4);
        let p = DeimProjector::build(&w, &pqr_select(&w).unwrap()).unwrap();
        assert!((p.error_constant() - p.cross_pinv_norm()).abs() < 1e-10 * p.error_constant());
    }

    #[test]
    fn identical_bases_reduce_to_lemma() {
        let w = random_basis(15, 4, 9);
        let p = DeimProjector::build(&w, &pqr_select(&w).unwrap()).unwrap();
        let f: Vec<f64> = (0..15).map(|i| (0.3 * i as f64).cos()).collect();
        let a = lemma21_bound(&p, &f).unwrap();
        let b = thm31_bound(&p, &w, &f).unwrap();
        assert_eq!(a.bound_value, b.bound_value);
        let c = thm32_bound(&p, &p, &f).unwrap();
        assert_eq!(c.constant("sin_theta"), Some(0.0));
        assert_eq!(c.constant("sin_psi"), Some(0.0));
        assert_eq!(c.bound_value, a.bound_value);
    }

    #[test]
    fn thm31_orthogonal_case() {
        // W = e1, Ŵ = e2 in R^3, Ŝ picks row 1.
        let w = OrthonormalBasis::from_matrix(DenseMatrix::eye(3, 1)).unwrap();
        let wh = OrthonormalBasis::from_matrix(
            DenseMatrix::new(3, 1, vec![0.0, 1.0, 0.0]).unwrap(),
        )
        .unwrap();
        let ph = DeimProjector::build(&wh, &SelectionOperator::unit(vec![1], 3).unwrap()).unwrap();
        let f = [3.0, 4.0, 12.0];
        let rep = thm31_bound(&ph, &w, &f).unwrap();
        assert!((rep.constant("sin_theta").unwrap() - 1.0).abs() < 1e-15);
        let want = 1.0 * ((16.0f64 + 144.0).sqrt() + 3.0);
        assert!((rep.bound_value - want).abs() < 1e-12);
        assert!(rep.holds());
    }

    #[test]
    fn thm32_requires_square_selection() {
        let w = random_basis(10, 2, 3);
        let s = SelectionOperator::unit(vec![0, 1, 2], 10).unwrap();
        let p = DeimProjector::build(&w, &s).unwrap();
        assert!(thm32_bound(&p, &p, &[0.0; 10]).is_err());
    }

    #[test]
    fn angle_bound_examples() {
        let c = subspace_constant(5, 10, 60).unwrap();
        let want = (5.0f64 / 9.0).sqrt() + E * (15.0f64 * 55.0).sqrt() / 10.0;
        assert!((c - want).abs() < 1e-14);
        let b = expected_angle_bound_unclipped(0.5, 5, 10, 0, 60).unwrap();
        assert!((b - c).abs() < 1e-14);
        assert_eq!(expected_angle_bound(0.5, 5, 10, 0, 60).unwrap(), 1.0);
        let b1 = expected_angle_bound_unclipped(0.5, 5, 10, 1, 60).unwrap();
        assert!((b1 / b - 0.25).abs() < 1e-15);
        assert!(expected_angle_bound(1e-12, 5, 10, 0, 60).unwrap() < 1e-10);
        assert!(expected_angle_bound(1.0, 5, 10, 0, 60).is_err());
        assert!(expected_angle_bound(0.5, 5, 1, 0, 60).is_err());
    }

    #[test]
    fn iteration_count() {
        assert_eq!(min_iterations(0.1, 0.5, 10.0).unwrap(), 4);
        assert_eq!(min_iterations(0.9, 0.01, 1.0).unwrap(), 0);
        let c = subspace_constant(5, 10, 60).unwrap();
        for eps in [0.5, 0.1, 1e-3, 1e-6] {
            for gamma in [0.1, 0.5, 0.9] {
                let q = min_iterations(eps, gamma, c).unwrap();
                let b = expected_angle_bound_unclipped(gamma, 5, 10, q, 60).unwrap();
                assert!(b <= eps * (1.0 + 1e-12), "eps {eps} gamma {gamma} q {q} b {b}");
                if q > 0 {
                    let prev = expected_angle_bound_unclipped(gamma, 5, 10, q - 1, 60).unwrap();
                    assert!(prev > eps);
                }
            }
        }
        assert!(min_iterations(0.1, 1.0, 10.0).is_err());
    }

    #[test]
    fn wedin_examples() {
        let a = DenseMatrix::from_diagonal(&[2.0, 1.0]).unwrap();
        let b = wedin_angle_bound(&a, &a, 1).unwrap();
        assert_eq!(b.residual_form, 0.0);
        assert_eq!(b.norm_form, 0.0);

        let eps = 0.1;
        let ah = DenseMatrix::from_diagonal(&[2.0, 1.0 + eps]).unwrap();
        let b = wedin_angle_bound(&a, &ah, 1).unwrap();
        assert!((b.norm_form - eps / (2.0 - (1.0 + eps))).abs() < 1e-14);
        // The perturbation is orthogonal to the leading pair, so the
        // residual form vanishes.
        assert!(b.residual_form.abs() < 1e-15);

        let close = DenseMatrix::from_diagonal(&[2.0, 2.5]).unwrap();
        assert!(matches!(
            wedin_angle_bound(&a, &close, 1),
            Err(Error::NoGap { .. })
        ));
    }

    #[test]
    fn constant_examples() {
        let d = Constant::DSrrqr { eta: 1.0, r: 1, n: 2 }.evaluate().unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        for (n, c_ls) in [(100, 10), (2500, 284)] {
            let dls = Constant::DLs { n, c_ls, beta: 0.5, eps: 0.9 }.evaluate().unwrap();
            assert!((dls - (20.0 * n as f64 / c_ls as f64).sqrt()).abs() < 1e-12 * dls);
        }
        let (r, delta, n) = (6usize, 0.1, 1000usize);
        let c_ls = (5.0 * r as f64 * (r as f64 / delta).ln()).floor() as usize;
        let dls = Constant::DLs { n, c_ls, beta: 0.5, eps: 0.9 }.evaluate().unwrap();
        let dh = Constant::DHyb { n, c_ls, beta: 0.5, eps: 0.9, eta: 2.0, r }
            .evaluate()
            .unwrap();
        let cap = dls * (1.0 + 20.0 * (r * r) as f64 * (r as f64 / delta).ln()).sqrt();
        assert!(dh <= cap);
        assert!(Constant::DLs { n, c_ls, beta: 1.0, eps: 0.9 }.evaluate().is_err());
        assert!(Constant::DHyb { n, c_ls: 2, beta: 0.5, eps: 0.9, eta: 2.0, r }
            .evaluate()
            .is_err());
        let cd = Constant::Cd { r: 5, p: 10, n_s: 60, delta: 0.1 }.evaluate().unwrap();
        let want = E * 15f64.sqrt() / 11.0
            * 20f64.powf(1.0 / 11.0)
            * (55f64.sqrt() + 15f64.sqrt() + (2.0 * 20f64.ln()).sqrt());
        assert!((cd - want).abs() < 1e-12);
    }

    #[test]
    fn rsvd_bound_examples() {
        assert_eq!(rsvd_expected_error(&[3.0, 2.0, 0.0, 0.0], 2, 2).unwrap(), 0.0);
        let got = rsvd_expected_error(&[1.0, 0.1], 1, 2).unwrap();
        let want = 2.0 * 0.1 + E * 3f64.sqrt() / 2.0 * 0.1;
        assert!((got - want).abs() < 1e-15);
        assert!(rsvd_expected_error(&[1.0], 1, 1).is_err());
    }
}
