//! Rectangular parameter sweeps with one scalar per cell.
//!
//! Cells are independent pure computations evaluated on the current rayon
//! pool; results are gathered by cell index, so output order never depends
//! on the number of workers.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Result, RevivalError};

/// A failed sweep cell, tagged with its coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CellError {
    pub row: usize,
    pub col: f64,
    pub error: RevivalError,
}

impl fmt::Display for CellError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cell ({}, {}): {}", self.row, format_f64(self.col), self.error)
    }
}

pub type CellOutcome = std::result::Result<f64, CellError>;

/// Grid over an integer row axis (`N`) and a real column axis, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub row_label: String,
    pub col_label: String,
    pub value_label: String,
    pub rows: Vec<usize>,
    pub cols: Vec<f64>,
    pub cells: Vec<CellOutcome>,
    /// Optional per-row reference columns, e.g. `1/N`.
    pub row_extras: Vec<(String, Vec<f64>)>,
}

/// Sorts and de-duplicates axis values so grid order is lexicographic.
pub fn sorted_rows(rows: &[usize]) -> Vec<usize> {
    let mut r = rows.to_vec();
    r.sort_unstable();
    r.dedup();
    r
}

pub fn sorted_cols(cols: &[f64]) -> Vec<f64> {
    let mut c = cols.to_vec();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

impl SweepGrid {
    /// Evaluates `cell(row, col)` for every grid point in parallel.
    pub fn compute<F>(
        row_label: &str,
        col_label: &str,
        value_label: &str,
        rows: &[usize],
        cols: &[f64],
        cell: F,
    ) -> Result<Self>
    where
        F: Fn(usize, f64) -> Result<f64> + Sync,
    {
        if rows.is_empty() || cols.is_empty() {
            return Err(RevivalError::InvalidParameter { name: "grid", reason: "sweep axes must be nonempty".into() });
        }
        if cols.iter().any(|c| !c.is_finite()) {
            return Err(RevivalError::InvalidParameter { name: "grid", reason: "column values must be finite".into() });
        }
        let rows = sorted_rows(rows);
        let cols = sorted_cols(cols);
        let ncols = cols.len();
        let cells = (0..rows.len() * ncols)
            .into_par_iter()
            .map(|k| {
                let (r, c) = (rows[k / ncols], cols[k % ncols]);
                cell(r, c).map_err(|error| CellError { row: r, col: c, error })
            })
            .collect();
        Ok(Self {
            row_label: row_label.into(),
            col_label: col_label.into(),
            value_label: value_label.into(),
            rows,
            cols,
            cells,
            row_extras: Vec::new(),
        })
    }

    pub fn get(&self, row_idx: usize, col_idx: usize) -> &CellOutcome {
        &self.cells[row_idx * self.cols.len() + col_idx]
    }

    /// Looks a cell up by its coordinates.
    pub fn value_at(&self, row: usize, col: f64) -> Option<&CellOutcome> {
        let r = self.rows.iter().position(|&x| x == row)?;
        let c = self.cols.iter().position(|&x| x == col)?;
        Some(self.get(r, c))
    }

    pub fn failures(&self) -> Vec<&CellError> {
        self.cells.iter().filter_map(|c| c.as_ref().err()).collect()
    }

    pub fn row_values(&self, row_idx: usize) -> &[CellOutcome] {
        let n = self.cols.len();
        &self.cells[row_idx * n..(row_idx + 1) * n]
    }

    /// Long-format CSV: `#` metadata lines, one header, one line per cell.
    pub fn write_csv<W: Write>(&self, out: &mut W, metadata: &[String]) -> io::Result<()> {
        for m in metadata {
            writeln!(out, "# {m}")?;
        }
        let mut header = vec![self.row_label.clone(), self.col_label.clone(), self.value_label.clone()];
        header.extend(self.row_extras.iter().map(|(name, _)| name.clone()));
        header.push("status".into());
        writeln!(out, "{}", header.join(","))?;
        for (ri, &row) in self.rows.iter().enumerate() {
            for (ci, &col) in self.cols.iter().enumerate() {
                let mut fields = vec![row.to_string(), format_f64(col)];
                let status = match self.get(ri, ci) {
                    Ok(v) => {
                        fields.push(format_f64(*v));
                        "ok".to_string()
                    }
                    Err(e) => {
                        fields.push(String::new());
                        format!("\"error: {}\"", e.error.to_string().replace('"', "'"))
                    }
                };
                fields.extend(self.row_extras.iter().map(|(_, v)| format_f64(v[ri])));
                fields.push(status);
                writeln!(out, "{}", fields.join(","))?;
            }
        }
        Ok(())
    }
}

/// Fixed 17-significant-digit scientific formatting used by every CSV.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_are_row_major_and_sorted() {
        let g = SweepGrid::compute("N", "x", "v", &[3, 1, 2, 1], &[0.5, 0.0], |n, x| Ok(n as f64 + x)).unwrap();
        assert_eq!(g.rows, vec![1, 2, 3]);
        assert_eq!(g.cols, vec![0.0, 0.5]);
        let vals: Vec<f64> = g.cells.iter().map(|c| *c.as_ref().unwrap()).collect();
        assert_eq!(vals, vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5]);
        assert_eq!(g.value_at(2, 0.5), Some(&Ok(2.5)));
    }

    #[test]
    fn failing_cell_is_contained() {
        let g = SweepGrid::compute("N", "x", "v", &[1, 2], &[0.0, 1.0], |n, x| {
            if n == 2 && x == 1.0 {
                Err(RevivalError::InvariantViolation("boom".into()))
            } else {
                Ok(1.0)
            }
        })
        .unwrap();
        assert_eq!(g.failures().len(), 1);
        assert_eq!(g.failures()[0].row, 2);
        let mut buf = Vec::new();
        g.write_csv(&mut buf, &["meta".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# meta\nN,x,v,status\n"));
        assert!(text.contains("error: numerical invariant violated: boom"));
    }

    #[test]
    fn empty_axes_rejected() {
        assert!(SweepGrid::compute("N", "x", "v", &[], &[0.0], |_, _| Ok(0.0)).is_err());
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
    }
}
