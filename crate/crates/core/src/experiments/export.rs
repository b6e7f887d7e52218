//! Deterministic CSV writers. Numbers use Rust's shortest round-trip `{:e}`
//! form and rows follow input order, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::dynamics::Diagnostics;
use crate::error::Result;
use crate::linops::Spectrum;
use crate::modulation::ModulationCoords;
use crate::rhs::RhsReport;

pub const TRAJECTORY_COLUMNS: [&str; 16] = [
    "t", "l2", "linf", "h1", "re_m", "im_m", "re_h", "im_h", "theta", "alpha", "a_e", "b_e", "a_o", "b_o",
    "eta_e", "eta_o",
];

pub const RHS_COLUMNS: [&str; 6] = ["theta_dot", "alpha_dot", "a_e_dot", "b_e_dot", "a_o_dot", "b_o_dot"];

/// Cells for an optional value; missing values are empty.
fn cell(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{v:e}");
    }
}

/// A plain table: header row then one row per record.
pub struct Table {
    columns: Vec<String>,
    body: String,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Table {
        Table {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            body: String::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Appends a row. Panics if the width is wrong, since that is a caller bug.
    pub fn row(&mut self, values: &[Option<f64>]) {
        assert_eq!(values.len(), self.columns.len(), "row width");
        let mut line = String::new();
        for v in values {
            cell(&mut line, *v);
        }
        self.body.push_str(&line[1..]);
        self.body.push('\n');
    }

    /// Appends a row whose first cell is text.
    pub fn labelled_row(&mut self, label: &str, values: &[Option<f64>]) {
        assert_eq!(values.len() + 1, self.columns.len(), "row width");
        self.body.push_str(label);
        let mut line = String::new();
        for v in values {
            cell(&mut line, *v);
        }
        self.body.push_str(&line);
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        out.push_str(&self.body);
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// Trajectory rows: diagnostics, optional modulation coordinates, and
/// optional rate columns when `rates` is given.
pub fn trajectory_table(
    diagnostics: &[Diagnostics],
    coords: &[Option<&ModulationCoords>],
    rates: Option<&[Option<&RhsReport>]>,
) -> Table {
    let mut columns: Vec<&str> = TRAJECTORY_COLUMNS.to_vec();
    if rates.is_some() {
        columns.extend(RHS_COLUMNS);
    }
    let mut table = Table::new(&columns);
    for (i, d) in diagnostics.iter().enumerate() {
        let m = d.invariants.quasipower;
        let h = d.invariants.hamiltonian;
        let mut row = vec![
            Some(d.time),
            Some(d.l2),
            Some(d.linf),
            Some(d.h1),
            Some(m.re),
            Some(m.im),
            Some(h.re),
            Some(h.im),
        ];
        match coords.get(i).copied().flatten() {
            Some(c) => row.extend([
                Some(c.theta),
                Some(c.alpha),
                Some(c.a_e),
                Some(c.b_e),
                Some(c.a_o),
                Some(c.b_o),
                Some(c.eta_e.norm_h1()),
                Some(c.eta_o.norm_h1()),
            ]),
            None => row.extend([None; 8]),
        }
        if let Some(rates) = rates {
            match rates.get(i).copied().flatten() {
                Some(r) => row.extend(r.rates().map(Some)),
                None => row.extend([None; 6]),
            }
        }
        table.row(&row);
    }
    table
}

/// `index, re, im, gap` with `gap` = 1 for eigenvalues strictly inside the gap.
pub fn eigenvalue_table(spectrum: &Spectrum) -> Table {
    let mut table = Table::new(&["index", "re", "im", "gap"]);
    for (i, l) in spectrum.eigenvalues.iter().enumerate() {
        let gap = if spectrum.is_gap_eigenvalue(*l) { 1.0 } else { 0.0 };
        table.row(&[Some(i as f64), Some(l.re), Some(l.im), Some(gap)]);
    }
    table
}

/// `t, re_m, im_m, re_h, im_h`.
pub fn invariant_table(diagnostics: &[Diagnostics]) -> Table {
    let mut table = Table::new(&["t", "re_m", "im_m", "re_h", "im_h"]);
    for d in diagnostics {
        let (m, h): (Complex64, Complex64) = (d.invariants.quasipower, d.invariants.hamiltonian);
        table.row(&[Some(d.time), Some(m.re), Some(m.im), Some(h.re), Some(h.im)]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.row(&[Some(1.0), None]);
        t.row(&[Some(0.1), Some(-2.5e-7)]);
        assert_eq!(t.render(), "a,b\n1e0,\n1e-1,-2.5e-7\n");
    }

    #[test]
    fn labelled() {
        let mut t = Table::new(&["name", "v"]);
        t.labelled_row("x", &[Some(2.0)]);
        assert_eq!(t.render(), "name,v\nx,2e0\n");
    }

    #[test]
    #[should_panic]
    fn width_is_checked() {
        Table::new(&["a"]).row(&[None, None]);
    }
}
