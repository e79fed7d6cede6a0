use std::process::Command;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rdeim_core::deimcore::DeimProjector;
use rdeim_core::pointsel::{pqr_select, SelectionOperator};
use rdeim_core::rangefinder::{exact_basis, OrthonormalBasis};
use rdeim_core::DenseMatrix;
use rdeim_harness::experiment::{adaptive_sweep, run_on, snapshots};
use rdeim_harness::generators::latin_hypercube;
use rdeim_harness::io::{write_csv, MAGIC};
use rdeim_harness::{
    error_sweep, gen_corner, read_matrix, run_experiment, write_matrix, Cell, ExperimentSpec,
    HarnessError, Problem, Scale, SnapshotSet,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn matrix_files_round_trip(
        rows in 1usize..12,
        cols in 1usize..12,
        data in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 144),
    ) {
        let m = DenseMatrix::new(rows, cols, data[..rows * cols].to_vec()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.rdm");
        write_matrix(&m, &path).unwrap();
        let back = read_matrix(&path).unwrap();
        prop_assert_eq!(back.shape(), m.shape());
        for (a, b) in back.iter().zip(m.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn latin_hypercube_strata(m in 1usize..80, seed in any::<u64>()) {
        let ranges = [(0.2, 0.8), (0.15, 0.35), (0.1, 0.35)];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = latin_hypercube(m, &ranges, &mut rng);
        for (d, (lo, hi)) in ranges.iter().enumerate() {
            let mut strata: Vec<usize> = pts
                .iter()
                .map(|p| (((p[d] - lo) / (hi - lo) * m as f64).floor() as usize).min(m - 1))
                .collect();
            strata.sort_unstable();
            prop_assert_eq!(strata, (0..m).collect::<Vec<_>>());
            prop_assert!(pts.iter().all(|p| p[d] >= *lo && p[d] <= *hi));
        }
    }
}

#[test]
fn file_layout_and_corruption() {
    let m = DenseMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.rdm");
    write_matrix(&m, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], MAGIC);
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
    assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 3);
    // Column-major: second value stored is row 1 of column 0.
    assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 4.0);
    assert_eq!(bytes.len(), 24 + 6 * 8);

    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(read_matrix(&path), Err(HarnessError::Format { .. })));
    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    std::fs::write(&path, &wrong).unwrap();
    assert!(matches!(read_matrix(&path), Err(HarnessError::Format { .. })));
    let missing = dir.path().join("nope.rdm");
    let err = read_matrix(&missing).unwrap_err();
    assert!(err.to_string().contains("nope.rdm"));
}

fn frame(n: usize, r: usize) -> OrthonormalBasis {
    OrthonormalBasis::from_matrix(DenseMatrix::eye(n, r)).unwrap()
}

fn snapshot_set(matrix: DenseMatrix) -> SnapshotSet {
    SnapshotSet {
        coords: (0..matrix.rows()).map(|i| vec![i as f64]).collect(),
        params: (0..matrix.cols()).map(|j| vec![j as f64]).collect(),
        param_names: vec!["j"],
        matrix,
    }
}

#[test]
fn sweep_special_cases() {
    let w = frame(6, 2);
    let p = DeimProjector::build(&w, &SelectionOperator::unit(vec![0, 1], 6).unwrap()).unwrap();
    let test = snapshot_set(
        DenseMatrix::from_row_slice(6, 3, &[
            1.0, 0.0, 0.0, //
            2.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, //
            0.0, 3.0, 0.0, //
            0.0, 0.0, 0.0,
        ])
        .unwrap(),
    );
    let t = error_sweep(&p, &test, None, "frame").unwrap();
    assert_eq!(t.rows[0].rel_error, Some(0.0));
    assert_relative_eq!(t.rows[1].rel_error.unwrap(), 1.0);
    assert_eq!(t.rows[2].rel_error, None);
    assert!(t.bounds_dominate());
    assert_eq!(t.summary().defined, 2);
    let csv = {
        let mut buf = Vec::new();
        write_csv(&t.to_table(&["j"]), &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    };
    assert!(csv.starts_with("id,j,f_norm,abs_error,rel_error,bound,rel_bound\n"));
    assert!(csv.lines().nth(3).unwrap().contains(",,"));

    let full = frame(6, 6);
    let p = DeimProjector::build(&full, &SelectionOperator::unit((0..6).collect(), 6).unwrap()).unwrap();
    let t = error_sweep(&p, &test, None, "identity").unwrap();
    assert!(t.rows.iter().all(|r| r.abs_error == 0.0));
}

#[test]
fn in_span_columns_are_exact() {
    let s = gen_corner(20, 6).unwrap();
    let w = exact_basis(&s.matrix, 10).unwrap();
    let p = DeimProjector::build(&w, &pqr_select(&w).unwrap()).unwrap();
    let inside = DenseMatrix::from_nalgebra(w.as_nalgebra().columns(0, 4).into_owned()).unwrap();
    let t = error_sweep(&p, &snapshot_set(inside), None, "span").unwrap();
    assert!(t.rel_errors().iter().all(|e| *e <= 1e-10));
}

#[test]
fn corner_peak_rdeim_tracks_deim() {
    let spec = ExperimentSpec::paper_setup(Problem::Corner, Scale::Desk);
    let out = run_experiment(&spec).unwrap();
    assert!(out.deim.bounds_dominate());
    assert!(out.rdeim.bounds_dominate());
    let ratio = out.rdeim.summary().median / out.deim.summary().median;
    assert!((0.1..=10.0).contains(&ratio), "median ratio {ratio}");
}

#[test]
fn experiments_are_deterministic() {
    let mut spec = ExperimentSpec::paper_setup(Problem::Source, Scale::Desk);
    spec.rank = 8;
    let (train, test) = snapshots(&spec).unwrap();
    let render = || {
        let out = run_on(&spec, &train, &test).unwrap();
        let mut buf = Vec::new();
        write_csv(&out.errors_table(), &mut buf).unwrap();
        write_csv(&out.summary_table(), &mut buf).unwrap();
        buf
    };
    assert_eq!(render(), render());
    let (train2, _) = snapshots(&spec).unwrap();
    assert_eq!(train, train2);
}

#[test]
fn adaptive_staircase_follows_exact_rank() {
    let s = gen_corner(30, 10).unwrap();
    let energies: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
    let t = adaptive_sweep(&s.matrix, &energies, 5, 20, 3).unwrap();
    let get = |row: &Vec<Cell>, k: usize| match row[k] {
        Cell::Int(v) => v as usize,
        _ => panic!("expected integer"),
    };
    let mut prev = (0, 0);
    for row in &t.rows {
        let (exact, adaptive) = (get(row, 1), get(row, 2));
        assert!(adaptive >= exact);
        assert!(exact >= prev.0 && adaptive >= prev.1);
        prev = (exact, adaptive);
    }
}

#[test]
fn cli_round_trip() {
    let exe = env!("CARGO_BIN_EXE_rdeim");
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.rdm");
    let w = dir.path().join("w.rdm");
    let run = |args: &[&str]| Command::new(exe).args(args).output().unwrap();

    let out = run(&["gen", "--problem", "osc", "--out", a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_matrix(&a).unwrap().shape(), (2000, 100));
    assert!(dir.path().join("a.params.csv").exists());

    let out = run(&["basis", "--input", a.to_str().unwrap(), "--method", "subspace", "--rank", "5", "--out", w.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let basis = read_matrix(&w).unwrap();
    assert_eq!(basis.cols(), 5);
    assert!(basis.orthonormality_defect() <= 1e-10);

    let out = run(&["select", "--basis", w.to_str().unwrap(), "--method", "srrqr"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("index,weight"));
    assert_eq!(text.lines().count(), 6);

    let out = run(&["bounds", "--rank", "1", "--n", "2", "--eta", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let d: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("D_sRRQR,"))
        .unwrap()
        .parse()
        .unwrap();
    assert_relative_eq!(d, 2f64.sqrt(), max_relative = 1e-15);

    let out = run(&["approx", "--problem", "corner", "--rank", "6", "--out", dir.path().join("res").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("res/errors.csv").exists());

    let out = run(&["basis", "--input", dir.path().join("missing.rdm").to_str().unwrap(), "--out", w.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.rdm"));
    let out = run(&["select", "--basis", w.to_str().unwrap(), "--method", "uniform"]);
    assert!(!out.status.success());
}
