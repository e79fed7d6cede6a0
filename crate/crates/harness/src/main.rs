use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rdeim_core::deimcore::{
    expected_angle_bound, min_iterations, rsvd_expected_error, subspace_constant, Constant,
};
use rdeim_core::matcore::thin_svd;
use rdeim_core::pointsel::{sample_count_cls, DEFAULT_BETA};
use rdeim_core::rangefinder::OrthonormalBasis;
use rdeim_harness::experiment::{build_basis, select, snapshots};
use rdeim_harness::io::write_csv;
use rdeim_harness::{
    emit_csv, read_matrix, run_experiment, write_matrix, BasisKind, Cell, ExperimentSpec,
    HarnessError, Problem, Result, SampleRule, Scale, SelectorKind, Table,
};

#[derive(Parser)]
#[command(name = "rdeim", version, about = "Randomized DEIM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a snapshot matrix (RDMXMAT1) plus a parameter CSV.
    Gen {
        #[arg(long, default_value = "corner")]
        problem: Problem,
        #[command(flatten)]
        common: Common,
    },
    /// Build a basis for a snapshot matrix.
    Basis {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "basic")]
        method: BasisKind,
        #[command(flatten)]
        common: Common,
    },
    /// Select interpolation points for a basis.
    Select {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long, default_value = "pqr")]
        method: SelectorKind,
        #[command(flatten)]
        common: Common,
    },
    /// Build DEIM and R-DEIM approximations and sweep their errors.
    Approx {
        #[arg(long, default_value = "corner")]
        problem: Problem,
        #[arg(long = "basis-method", default_value = "basic")]
        basis: BasisKind,
        #[arg(long)]
        method: Option<SelectorKind>,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate error constants and bounds.
    Bounds {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long = "n-s", default_value_t = 100)]
        n_s: usize,
        /// Singular-value ratio σ_{r+1}/σ_r.
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        /// Matrix whose spectrum feeds the range-finder bound.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Time exact and randomized basis construction.
    Bench {
        #[arg(long, default_value = "source")]
        problem: Problem,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    oversample: Option<usize>,
    #[arg(long)]
    power: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    block: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value = "desk")]
    scale: Scale,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn spec(&self, problem: Problem) -> ExperimentSpec {
        let mut s = ExperimentSpec::paper_setup(problem, self.scale);
        if let Some(r) = self.rank {
            s.rank = r;
        }
        if let Some(p) = self.oversample {
            s.oversampling = p;
        }
        if let Some(q) = self.power {
            s.power_iterations = q;
        }
        if let Some(t) = self.tol {
            s.tolerance = t;
        }
        if let Some(b) = self.block {
            s.block_size = b;
        }
        s.eta = self.eta;
        s.beta = self.beta;
        s.seed = self.seed;
        if let (Some(eps), Some(delta)) = (self.eps, self.delta) {
            s.samples = SampleRule::Theory { eps, delta };
        }
        s
    }

    fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| HarnessError::Spec("--out is required".into()))
    }
}

fn print_or_write(table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => emit_csv(table, p),
        None => write_csv(table, std::io::stdout().lock()).map_err(|source| HarnessError::Csv {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { problem, common } => {
            let spec = common.spec(problem);
            let (train, _) = snapshots(&spec)?;
            let out = common.out()?;
            write_matrix(&train.matrix, out)?;
            let mut headers = vec!["column"];
            headers.extend(train.param_names.iter().copied());
            let mut t = Table::new("params", &headers);
            for (j, p) in train.params.iter().enumerate() {
                let mut row: Vec<Cell> = vec![j.into()];
                row.extend(p.iter().map(|v| Cell::Num(*v)));
                t.push(row);
            }
            emit_csv(&t, out.with_extension("params.csv"))?;
            eprintln!("wrote {}x{} snapshot matrix to {}", train.n(), train.n_s(), out.display());
        }
        Command::Basis {
            input,
            method,
            common,
        } => {
            let a = read_matrix(&input)?;
            let mut spec = common.spec(Problem::Corner);
            if common.rank.is_none() {
                // Adaptive bases keep every block unless a rank is requested.
                spec.rank = if method == BasisKind::Adaptive {
                    usize::MAX
                } else {
                    10.min(a.rows()).min(a.cols())
                };
            }
            let w = build_basis(&a, &spec, method)?;
            write_matrix(w.matrix(), common.out()?)?;
            eprintln!("basis dimension {}", w.dim());
        }
        Command::Select {
            basis,
            method,
            common,
        } => {
            let w = OrthonormalBasis::from_matrix(read_matrix(&basis)?)?;
            let spec = common.spec(Problem::Corner);
            let (s, warn) = select(&w, method, &spec)?;
            if let Some(msg) = warn {
                eprintln!("warning: {msg}");
            }
            let mut t = Table::new("selection", &["index", "weight"]);
            for (i, wt) in s.indices().iter().zip(s.weights()) {
                t.push(vec![(*i).into(), (*wt).into()]);
            }
            print_or_write(&t, common.out.as_deref())?;
        }
        Command::Approx {
            problem,
            basis,
            method,
            common,
        } => {
            let mut spec = common.spec(problem);
            spec.basis = basis;
            if let Some(m) = method {
                spec.selector = m;
            }
            let out = run_experiment(&spec)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            match common.out.as_deref() {
                Some(dir) => {
                    ensure_dir(dir)?;
                    emit_csv(&out.errors_table(), dir.join("errors.csv"))?;
                    emit_csv(&out.summary_table(), dir.join("summary.csv"))?;
                }
                None => print_or_write(&out.summary_table(), None)?,
            }
        }
        Command::Bounds {
            n,
            n_s,
            gamma,
            input,
            common,
        } => {
            let r = common.rank.unwrap_or(10);
            let p = common.oversample.unwrap_or(10);
            let q = common.power.unwrap_or(1);
            let eps = common.eps.unwrap_or(0.9);
            let delta = common.delta.unwrap_or(0.1);
            let c_ls = sample_count_cls(r, common.beta, eps, delta)?;
            let mut t = Table::new("bounds", &["quantity", "value"]);
            t.push(vec!["C_LS".into(), c_ls.into()]);
            for c in [
                Constant::DSrrqr { eta: common.eta, r, n },
                Constant::DLs { n, c_ls, beta: common.beta, eps },
                Constant::DHyb { n, c_ls, beta: common.beta, eps, eta: common.eta, r },
                Constant::Cd { r, p, n_s, delta },
            ] {
                t.push(vec![c.name().into(), c.evaluate()?.into()]);
            }
            let c = subspace_constant(r, p, n_s)?;
            t.push(vec!["C".into(), c.into()]);
            t.push(vec!["expected_sin_theta".into(), expected_angle_bound(gamma, r, p, q, n_s)?.into()]);
            if let Some(tol) = common.tol {
                t.push(vec!["min_iterations".into(), min_iterations(tol, gamma, c)?.into()]);
            }
            if let Some(path) = input {
                let sv = thin_svd(&read_matrix(&path)?)?.singular_values;
                t.push(vec!["rsvd_expected_error".into(), rsvd_expected_error(&sv, r, p)?.into()]);
            }
            print_or_write(&t, common.out.as_deref())?;
        }
        Command::Bench { problem, common } => {
            let spec = common.spec(problem);
            let (train, _) = snapshots(&spec)?;
            let mut t = Table::new("bench", &["method", "n", "n_s", "rank", "median_seconds"]);
            let mut medians = Vec::new();
            for kind in [BasisKind::Svd, spec.basis] {
                let mut times = Vec::new();
                for _ in 0..common.trials.max(1) {
                    let start = Instant::now();
                    build_basis(&train.matrix, &spec, kind)?;
                    times.push(start.elapsed().as_secs_f64());
                }
                times.sort_by(f64::total_cmp);
                let m = times[times.len() / 2];
                medians.push(m);
                t.push(vec![
                    kind.keyword().into(),
                    train.n().into(),
                    train.n_s().into(),
                    spec.rank.into(),
                    m.into(),
                ]);
            }
            print_or_write(&t, common.out.as_deref())?;
            eprintln!("speedup {:.2}x", medians[0] / medians[1]);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::FAILURE
        }
    }
}
