//! Experiment specifications and the runner behind the `approx` command.

use std::fmt;
use std::str::FromStr;

use rdeim_core::deimcore::DeimProjector;
use rdeim_core::matcore::{canonical_angles, thin_svd};
use rdeim_core::pointsel::{
    basis_pmf, deim_greedy_select, hybrid_select, leverage_select, pqr_select,
    practical_sample_count, sample_count_cls_capped, srrqr_select, SelectionOperator,
};
use rdeim_core::rangefinder::{
    adaptive_range_finder, basic_range_finder, exact_basis, subspace_range_finder,
    truncate_basis, truncation_rank, AdaptiveConfig, OrthonormalBasis, RangeConfig,
};
use rdeim_core::DenseMatrix;

use crate::error::{HarnessError, Result};
use crate::generators::{gen_corner, gen_osc, gen_source, gen_source_test, SnapshotSet, SourceRanges};
use crate::sweep::{error_sweep, ResultTable};
use crate::table::{Cell, Table};

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $kw:literal),+ $(,)? }) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn keyword(self) -> &'static str {
                match self { $($name::$variant => $kw),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.keyword())
            }
        }

        impl FromStr for $name {
            type Err = HarnessError;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($kw => Ok($name::$variant),)+
                    _ => Err(HarnessError::Spec(format!(
                        concat!("unknown ", stringify!($name), " '{}'"), s
                    ))),
                }
            }
        }
    };
}

keyword_enum!(Problem { Osc => "osc", Corner => "corner", Source => "source" });
keyword_enum!(Scale { Paper => "paper", Desk => "desk" });
keyword_enum!(BasisKind {
    Svd => "svd",
    Basic => "basic",
    Subspace => "subspace",
    Adaptive => "adaptive",
});
keyword_enum!(SelectorKind {
    Greedy => "greedy",
    Pqr => "pqr",
    Srrqr => "srrqr",
    Leverage => "leverage",
    Hybrid => "hybrid",
});

/// Problem sizes for one scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preset {
    pub osc_n_t: usize,
    pub osc_n_mu: usize,
    pub corner_grid: usize,
    pub corner_param_grid: usize,
    pub source_grid: usize,
    pub source_train: usize,
    pub source_test: usize,
}

impl Scale {
    pub fn preset(self) -> Preset {
        match self {
            Scale::Paper => Preset {
                osc_n_t: 10_000,
                osc_n_mu: 100,
                corner_grid: 100,
                corner_param_grid: 25,
                source_grid: 100,
                source_train: 1000,
                source_test: 200,
            },
            Scale::Desk => Preset {
                osc_n_t: 2000,
                osc_n_mu: 100,
                corner_grid: 50,
                corner_param_grid: 15,
                source_grid: 40,
                source_train: 200,
                source_test: 50,
            },
        }
    }
}

/// How many leverage-score samples to draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SampleRule {
    /// `⌈3 r ln r⌉`.
    Practical,
    /// The theoretical `C_LS(r, β, ε, δ)`, capped at `n`.
    Theory { eps: f64, delta: f64 },
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub problem: Problem,
    pub scale: Scale,
    pub rank: usize,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub basis: BasisKind,
    pub block_size: usize,
    pub tolerance: f64,
    pub selector: SelectorKind,
    pub eta: f64,
    pub beta: f64,
    pub samples: SampleRule,
    pub seed: u64,
    pub source_ranges: SourceRanges,
}

impl ExperimentSpec {
    /// The published setup for each problem.
    pub fn paper_setup(problem: Problem, scale: Scale) -> Self {
        let base = ExperimentSpec {
            problem,
            scale,
            rank: 24,
            oversampling: 20,
            power_iterations: 0,
            basis: BasisKind::Basic,
            block_size: 10,
            tolerance: 1e-4,
            selector: SelectorKind::Pqr,
            eta: 2.0,
            beta: 0.5,
            samples: SampleRule::Practical,
            seed: 0,
            source_ranges: SourceRanges::default(),
        };
        match problem {
            Problem::Osc => ExperimentSpec { rank: 10, ..base },
            Problem::Corner => base,
            Problem::Source => ExperimentSpec {
                selector: SelectorKind::Hybrid,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Spec(m));
        if self.rank == 0 {
            return bad("rank must be positive".into());
        }
        if self.oversampling < 2 {
            return bad("oversampling must be at least 2".into());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.eta >= 1.0) {
            return bad(format!("eta must be at least 1, got {}", self.eta));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return bad(format!("tolerance must lie in (0, 1), got {}", self.tolerance));
        }
        let r = &self.source_ranges;
        let inside = |(lo, hi): (f64, f64)| lo >= 0.0 && hi <= 1.0 && lo <= hi;
        if self.problem == Problem::Source && !(inside(r.mu3) && inside(r.mu4) && r.mu5.0 > 0.0) {
            return bad("source centre must stay inside the unit square".into());
        }
        Ok(())
    }
}

/// Training and test snapshots for a problem. The oscillator and corner
/// studies evaluate on the training snapshots themselves.
pub fn snapshots(spec: &ExperimentSpec) -> Result<(SnapshotSet, SnapshotSet)> {
    let p = spec.scale.preset();
    Ok(match spec.problem {
        Problem::Osc => {
            let s = gen_osc(p.osc_n_t, p.osc_n_mu)?;
            (s.clone(), s)
        }
        Problem::Corner => {
            let s = gen_corner(p.corner_grid, p.corner_param_grid)?;
            (s.clone(), s)
        }
        Problem::Source => (
            gen_source(p.source_grid, p.source_train, &spec.source_ranges, spec.seed)?,
            gen_source_test(
                p.source_grid,
                p.source_test,
                &spec.source_ranges,
                spec.seed.wrapping_add(1),
            )?,
        ),
    })
}

/// Rank-`rank` basis of `a` by the requested method.
pub fn build_basis(a: &DenseMatrix, spec: &ExperimentSpec, kind: BasisKind) -> Result<OrthonormalBasis> {
    let cfg = RangeConfig::new(spec.rank)
        .oversampling(spec.oversampling)
        .power_iterations(spec.power_iterations)
        .seed(spec.seed);
    Ok(match kind {
        BasisKind::Svd => exact_basis(a, spec.rank)?,
        BasisKind::Basic => basic_range_finder(a, &cfg.power_iterations(0))?,
        BasisKind::Subspace => subspace_range_finder(a, &cfg)?,
        BasisKind::Adaptive => {
            let acfg = AdaptiveConfig::new(spec.tolerance)
                .block_size(spec.block_size)
                .max_blocks((a.rows() / spec.block_size).min(a.cols().div_ceil(spec.block_size) + 1).max(1))
                .seed(spec.seed);
            let w = adaptive_range_finder(a, &acfg)?;
            if w.dim() > spec.rank {
                truncate_basis(a, &w, spec.rank)?
            } else {
                w
            }
        }
    })
}

/// Selection for `w`. The second value is a warning, if any.
pub fn select(
    w: &OrthonormalBasis,
    kind: SelectorKind,
    spec: &ExperimentSpec,
) -> Result<(SelectionOperator, Option<String>)> {
    let r = w.dim();
    let sample_count = || -> Result<(usize, Option<String>)> {
        Ok(match spec.samples {
            SampleRule::Practical => (practical_sample_count(r.max(2))?.max(r), None),
            SampleRule::Fixed(s) => (s, None),
            SampleRule::Theory { eps, delta } => {
                let (c, capped) = sample_count_cls_capped(r, spec.beta, eps, delta, w.ambient())?;
                let warn = capped.then(|| format!("C_LS exceeds n = {}; capped", w.ambient()));
                (c, warn)
            }
        })
    };
    Ok(match kind {
        SelectorKind::Greedy => (deim_greedy_select(w)?, None),
        SelectorKind::Pqr => (pqr_select(w)?, None),
        SelectorKind::Srrqr => (srrqr_select(w, spec.eta)?, None),
        SelectorKind::Leverage => {
            let (s, warn) = sample_count()?;
            (leverage_select(&basis_pmf(w, spec.beta)?, s, spec.seed)?, warn)
        }
        SelectorKind::Hybrid => {
            let (s, warn) = sample_count()?;
            let pmf = basis_pmf(w, spec.beta)?;
            (hybrid_select(w, &pmf, s, spec.eta, spec.seed)?.selection, warn)
        }
    })
}

/// Everything produced by [`run_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub deim: ResultTable,
    pub rdeim: ResultTable,
    pub sin_theta: f64,
    pub warnings: Vec<String>,
    pub param_names: Vec<&'static str>,
}

impl ExperimentOutput {
    /// Per-column errors and bounds of both projectors, side by side.
    pub fn errors_table(&self) -> Table {
        let mut headers = vec!["id"];
        headers.extend(self.param_names.iter().copied());
        headers.extend([
            "deim_rel_error",
            "deim_rel_bound",
            "rdeim_rel_error",
            "rdeim_rel_bound",
        ]);
        let mut t = Table::new("errors", &headers);
        for (a, b) in self.deim.rows.iter().zip(&self.rdeim.rows) {
            let mut row: Vec<Cell> = vec![a.id.into()];
            row.extend(a.params.iter().map(|p| Cell::Num(*p)));
            row.extend([
                a.rel_error.into(),
                a.rel_bound().into(),
                b.rel_error.into(),
                b.rel_bound().into(),
            ]);
            t.push(row);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(
            "summary",
            &["method", "error_constant", "sin_theta", "mean_rel_error", "median_rel_error", "max_rel_error", "bounds_dominate"],
        );
        for (name, tab, sin) in [("deim", &self.deim, 0.0), ("rdeim", &self.rdeim, self.sin_theta)] {
            let s = tab.summary();
            t.push(vec![
                name.into(),
                tab.constant("D").into(),
                sin.into(),
                s.mean.into(),
                s.median.into(),
                s.max.into(),
                (if tab.bounds_dominate() { "yes" } else { "no" }).into(),
            ]);
        }
        t
    }
}

/// DEIM on the exact basis against R-DEIM on the randomized basis, both
/// with the spec's selector, evaluated on the test snapshots.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let (train, test) = snapshots(spec)?;
    run_on(spec, &train, &test)
}

pub fn run_on(spec: &ExperimentSpec, train: &SnapshotSet, test: &SnapshotSet) -> Result<ExperimentOutput> {
    let mut warnings = Vec::new();
    let w = build_basis(&train.matrix, spec, BasisKind::Svd)?;
    let wh = build_basis(&train.matrix, spec, spec.basis)?;
    if wh.dim() != w.dim() {
        return Err(HarnessError::Spec(format!(
            "randomized basis has dimension {} but rank {} was requested",
            wh.dim(),
            w.dim()
        )));
    }
    let (s, warn) = select(&w, spec.selector, spec)?;
    warnings.extend(warn);
    let (sh, warn) = select(&wh, spec.selector, spec)?;
    warnings.extend(warn);
    let p = DeimProjector::build(&w, &s)?;
    let ph = DeimProjector::build(&wh, &sh)?;
    let deim = error_sweep(&p, test, None, "deim")?;
    let rdeim = error_sweep(&ph, test, Some(&w), "rdeim")?;
    Ok(ExperimentOutput {
        deim,
        rdeim,
        sin_theta: canonical_angles(&w, &wh)?.sin_theta_max,
        warnings,
        param_names: test.param_names.clone(),
    })
}

/// Basis dimension returned by the adaptive range finder against the
/// exact truncation rank, for each energy fraction `ε` (the range finder
/// runs with tolerance `√ε`).
pub fn adaptive_sweep(
    a: &DenseMatrix,
    energy: &[f64],
    block: usize,
    max_blocks: usize,
    seed: u64,
) -> Result<Table> {
    let sv = thin_svd(a)?.singular_values;
    let mut t = Table::new(
        "adaptive",
        &["energy_tolerance", "exact_rank", "adaptive_dim", "residual_ratio"],
    );
    let fro = a.frobenius_norm();
    for &eps in energy {
        let r_eps = truncation_rank(&sv, eps)?;
        let cfg = AdaptiveConfig::new(eps.sqrt())
            .block_size(block)
            .max_blocks(max_blocks)
            .seed(seed);
        let w = adaptive_range_finder(a, &cfg)?;
        t.push(vec![
            eps.into(),
            r_eps.into(),
            w.dim().into(),
            (w.residual_frobenius(a)? / fro).into(),
        ]);
    }
    Ok(t)
}
