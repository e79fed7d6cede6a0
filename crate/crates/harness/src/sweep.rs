use rdeim_core::deimcore::{lemma21_bound, thm31_bound, DeimProjector};
use rdeim_core::rangefinder::OrthonormalBasis;

use crate::error::{HarnessError, Result};
use crate::generators::SnapshotSet;
use crate::table::{Cell, Table};

/// Error of one test column. `rel_error` is `None` for a zero column.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub id: usize,
    pub params: Vec<f64>,
    pub f_norm: f64,
    pub abs_error: f64,
    pub rel_error: Option<f64>,
    pub bound: f64,
    pub bound_holds: bool,
}

impl ErrorRow {
    pub fn rel_bound(&self) -> Option<f64> {
        (self.f_norm > 0.0).then(|| self.bound / self.f_norm)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub label: String,
    pub rows: Vec<ErrorRow>,
    /// Per-projector constants (`D`, `sin_theta`, ...).
    pub constants: Vec<(String, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub defined: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

impl ResultTable {
    pub fn rel_errors(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.rel_error).collect()
    }

    pub fn summary(&self) -> Summary {
        let mut e = self.rel_errors();
        e.sort_by(f64::total_cmp);
        let k = e.len();
        let median = match k {
            0 => f64::NAN,
            _ if k % 2 == 1 => e[k / 2],
            _ => 0.5 * (e[k / 2 - 1] + e[k / 2]),
        };
        Summary {
            defined: k,
            mean: e.iter().sum::<f64>() / k as f64,
            median,
            max: e.last().copied().unwrap_or(f64::NAN),
        }
    }

    pub fn bounds_dominate(&self) -> bool {
        self.rows.iter().all(|r| r.bound_holds)
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn to_table(&self, param_names: &[&str]) -> Table {
        let mut headers = vec!["id"];
        headers.extend_from_slice(param_names);
        headers.extend_from_slice(&["f_norm", "abs_error", "rel_error", "bound", "rel_bound"]);
        let mut t = Table::new(&self.label, &headers);
        for r in &self.rows {
            let mut row: Vec<Cell> = vec![r.id.into()];
            row.extend(r.params.iter().map(|p| Cell::Num(*p)));
            row.extend([
                r.f_norm.into(),
                r.abs_error.into(),
                r.rel_error.into(),
                r.bound.into(),
                r.rel_bound().into(),
            ]);
            t.push(row);
        }
        t
    }
}

/// Relative error `‖f_j − 𝔻f_j‖/‖f_j‖` for every test column, with the
/// unperturbed bound, or with the perturbed-basis bound when the exact
/// `reference` basis is supplied.
pub fn error_sweep(
    p: &DeimProjector,
    test: &SnapshotSet,
    reference: Option<&OrthonormalBasis>,
    label: &str,
) -> Result<ResultTable> {
    if test.n() != p.n() {
        return Err(HarnessError::Spec(format!(
            "test snapshots have {} rows, projector expects {}",
            test.n(),
            p.n()
        )));
    }
    let mut rows = Vec::with_capacity(test.n_s());
    let mut constants = vec![("D".to_string(), p.error_constant())];
    for j in 0..test.n_s() {
        let f = test.matrix.col(j);
        let rep = match reference {
            Some(w) => thm31_bound(p, w, f)?,
            None => lemma21_bound(p, f)?,
        };
        if j == 0 {
            if let Some(s) = rep.constant("sin_theta") {
                constants.push(("sin_theta".to_string(), s));
            }
        }
        let f_norm = rep.inputs["f_norm"];
        rows.push(ErrorRow {
            id: j,
            params: test.params[j].clone(),
            f_norm,
            abs_error: rep.actual_error,
            rel_error: (f_norm > 0.0).then(|| rep.actual_error / f_norm),
            bound: rep.bound_value,
            bound_holds: rep.holds(),
        });
    }
    Ok(ResultTable {
        label: label.to_string(),
        rows,
        constants,
    })
}
