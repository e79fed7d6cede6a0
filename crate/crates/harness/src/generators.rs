//! Snapshot generators for the three test problems.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdeim_core::DenseMatrix;

use crate::error::{HarnessError, Result};

/// Snapshot matrix with the coordinates and parameters that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSet {
    pub matrix: DenseMatrix,
    /// Spatial (or temporal) coordinates, one entry per row.
    pub coords: Vec<Vec<f64>>,
    /// Parameter vector of each column.
    pub params: Vec<Vec<f64>>,
    pub param_names: Vec<&'static str>,
}

impl SnapshotSet {
    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_s(&self) -> usize {
        self.matrix.cols()
    }

    fn check(self) -> Self {
        debug_assert_eq!(self.coords.len(), self.matrix.rows());
        debug_assert_eq!(self.params.len(), self.matrix.cols());
        debug_assert!(self.params.iter().all(|p| p.len() == self.param_names.len()));
        self
    }
}

/// `n` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
        .collect()
}

fn need_at_least(name: &str, v: usize, min: usize) -> Result<()> {
    if v < min {
        return Err(HarnessError::Spec(format!("{name} must be at least {min}, got {v}")));
    }
    Ok(())
}

pub fn osc(t: f64, mu: f64) -> f64 {
    10.0 * (-mu * t).exp() * ((4.0 * mu * t).cos() + (4.0 * mu * t).sin())
}

/// Decaying oscillator on `t ∈ [1, 6]`, `µ ∈ [0, π]`; column `j` is `f(·; µ_j)`.
pub fn gen_osc(n_t: usize, n_mu: usize) -> Result<SnapshotSet> {
    need_at_least("n_t", n_t, 2)?;
    need_at_least("n_mu", n_mu, 2)?;
    let t = linspace(1.0, 6.0, n_t);
    let mu = linspace(0.0, std::f64::consts::PI, n_mu);
    let matrix = DenseMatrix::from_fn(n_t, n_mu, |i, j| osc(t[i], mu[j]))?;
    Ok(SnapshotSet {
        matrix,
        coords: t.into_iter().map(|x| vec![x]).collect(),
        params: mu.into_iter().map(|m| vec![m]).collect(),
        param_names: vec!["mu"],
    }
    .check())
}

fn corner_h(z: f64, mu: f64) -> f64 {
    let d = (1.0 - z) - (0.99 * mu - 1.0);
    d * d
}

fn corner_g(x1: f64, x2: f64, mu1: f64, mu2: f64) -> f64 {
    1.0 / (corner_h(x1, mu1) + corner_h(x2, mu2) + 0.01).sqrt()
}

/// Sum of four reflected copies of `g`; peaks in one corner of `[0, 1]²`.
pub fn corner(x1: f64, x2: f64, mu1: f64, mu2: f64) -> f64 {
    corner_g(x1, x2, mu1, mu2)
        + corner_g(1.0 - x1, 1.0 - x2, 1.0 - mu1, 1.0 - mu2)
        + corner_g(1.0 - x1, x2, 1.0 - mu1, mu2)
        + corner_g(x1, 1.0 - x2, mu1, 1.0 - mu2)
}

/// Corner-peak snapshots on a `grid x grid` spatial mesh of `[0, 1]²`
/// (`x₁` fastest) for a `param_grid x param_grid` mesh of `[0, 1]²` (`µ₁`
/// fastest).
pub fn gen_corner(grid: usize, param_grid: usize) -> Result<SnapshotSet> {
    need_at_least("grid", grid, 2)?;
    need_at_least("param_grid", param_grid, 2)?;
    let x = linspace(0.0, 1.0, grid);
    let m = linspace(0.0, 1.0, param_grid);
    let coords: Vec<Vec<f64>> = (0..grid * grid)
        .map(|i| vec![x[i % grid], x[i / grid]])
        .collect();
    let params: Vec<Vec<f64>> = (0..param_grid * param_grid)
        .map(|j| vec![m[j % param_grid], m[j / param_grid]])
        .collect();
    let matrix = DenseMatrix::from_fn(coords.len(), params.len(), |i, j| {
        corner(coords[i][0], coords[i][1], params[j][0], params[j][1])
    })?;
    Ok(SnapshotSet {
        matrix,
        coords,
        params,
        param_names: vec!["mu1", "mu2"],
    }
    .check())
}

pub fn source(x1: f64, x2: f64, mu3: f64, mu4: f64, mu5: f64) -> f64 {
    (-((x1 - mu3).powi(2) + (x2 - mu4).powi(2)) / (mu5 * mu5)).exp()
}

/// Parameter box of the Gaussian source: centre `(µ₃, µ₄)` and width `µ₅`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceRanges {
    pub mu3: (f64, f64),
    pub mu4: (f64, f64),
    pub mu5: (f64, f64),
}

impl Default for SourceRanges {
    fn default() -> Self {
        SourceRanges {
            mu3: (0.2, 0.8),
            mu4: (0.15, 0.35),
            mu5: (0.1, 0.35),
        }
    }
}

impl SourceRanges {
    fn as_vec(&self) -> Vec<(f64, f64)> {
        vec![self.mu3, self.mu4, self.mu5]
    }

    fn validate(&self) -> Result<()> {
        for (lo, hi) in self.as_vec() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(HarnessError::Spec(format!("bad parameter range [{lo}, {hi}]")));
            }
        }
        if self.mu5.0 <= 0.0 {
            return Err(HarnessError::Spec("source width must be positive".into()));
        }
        Ok(())
    }
}

/// Latin hypercube sample of `m` points in the box `ranges`: each
/// coordinate hits every one of the `m` equal-width strata exactly once.
pub fn latin_hypercube(m: usize, ranges: &[(f64, f64)], rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; ranges.len()]; m];
    for (d, (lo, hi)) in ranges.iter().enumerate() {
        let mut strata: Vec<usize> = (0..m).collect();
        strata.shuffle(rng);
        for (point, k) in out.iter_mut().zip(strata) {
            let u: f64 = rng.random();
            point[d] = lo + (hi - lo) * (k as f64 + u) / m as f64;
        }
    }
    out
}

/// Independent uniform draws from the box.
pub fn uniform_sample(m: usize, ranges: &[(f64, f64)], rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| {
            ranges
                .iter()
                .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect()
        })
        .collect()
}

fn source_snapshots(n_grid: usize, params: Vec<Vec<f64>>) -> Result<SnapshotSet> {
    let x = linspace(0.0, 1.0, n_grid);
    let coords: Vec<Vec<f64>> = (0..n_grid * n_grid)
        .map(|i| vec![x[i % n_grid], x[i / n_grid]])
        .collect();
    let matrix = DenseMatrix::from_fn(coords.len(), params.len(), |i, j| {
        let (c, p) = (&coords[i], &params[j]);
        source(c[0], c[1], p[0], p[1], p[2])
    })?;
    Ok(SnapshotSet {
        matrix,
        coords,
        params,
        param_names: vec!["mu3", "mu4", "mu5"],
    }
    .check())
}

/// Gaussian-source training snapshots at Latin hypercube parameters.
pub fn gen_source(
    n_grid: usize,
    n_train: usize,
    ranges: &SourceRanges,
    seed: u64,
) -> Result<SnapshotSet> {
    need_at_least("n_grid", n_grid, 2)?;
    need_at_least("n_train", n_train, 1)?;
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    source_snapshots(n_grid, latin_hypercube(n_train, &ranges.as_vec(), &mut rng))
}

/// Gaussian-source test snapshots at uniformly drawn parameters.
pub fn gen_source_test(
    n_grid: usize,
    n_test: usize,
    ranges: &SourceRanges,
    seed: u64,
) -> Result<SnapshotSet> {
    need_at_least("n_grid", n_grid, 2)?;
    need_at_least("n_test", n_test, 1)?;
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    source_snapshots(n_grid, uniform_sample(n_test, &ranges.as_vec(), &mut rng))
}
