//! File writers. Floats use Rust's shortest round-trip formatting, so every
//! value re-parses to the identical `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::coupled::SolveReport;
use crate::grid::ScalarField;

use super::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, w: impl FnOnce() -> std::io::Result<()>) -> Result<(), CliError> {
    w().map_err(|e| CliError::io(path, e))
}

/// `x,y,psi,T,H,theta`, one row per node in index order.
pub fn write_fields_csv(path: &Path, report: &SolveReport) -> Result<(), CliError> {
    let mut out = create(path)?;
    finish(path, || {
        writeln!(out, "x,y,psi,T,H,theta")?;
        let grid = *report.psi.grid();
        for k in 0..grid.node_count() {
            let (i, j) = grid.coords(k);
            let (x, y) = grid.position(i, j);
            writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{:?}",
                x,
                y,
                report.psi.at(i, j),
                report.t.at(i, j),
                report.h.at(i, j),
                report.theta.at(i, j)
            )?;
        }
        out.flush()
    })
}

/// `iter,res_psi,res_H`.
pub fn write_convergence_csv(path: &Path, report: &SolveReport) -> Result<(), CliError> {
    let mut out = create(path)?;
    finish(path, || {
        writeln!(out, "iter,res_psi,res_H")?;
        for r in &report.residual_history {
            writeln!(out, "{},{:?},{:?}", r.iter, r.psi, r.h)?;
        }
        out.flush()
    })
}

/// Legacy ASCII structured grid with the four fields as point scalars.
pub fn write_vtk(path: &Path, report: &SolveReport) -> Result<(), CliError> {
    let mut out = create(path)?;
    let grid = *report.psi.grid();
    let fields: [(&str, &ScalarField); 4] =
        [("psi", &report.psi), ("T", &report.t), ("H", &report.h), ("theta", &report.theta)];
    finish(path, || {
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "porconv solution")?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET STRUCTURED_GRID")?;
        writeln!(out, "DIMENSIONS {} {} 1", grid.nx() + 1, grid.ny() + 1)?;
        writeln!(out, "POINTS {} double", grid.node_count())?;
        for k in 0..grid.node_count() {
            let (i, j) = grid.coords(k);
            let (x, y) = grid.position(i, j);
            writeln!(out, "{x:?} {y:?} 0")?;
        }
        writeln!(out, "POINT_DATA {}", grid.node_count())?;
        for (name, f) in fields {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in f.values() {
                writeln!(out, "{v:?}")?;
            }
        }
        out.flush()
    })
}

/// Pretty JSON; non-finite floats become `null`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = create(path)?;
    finish(path, || {
        serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::other)?;
        writeln!(out)?;
        out.flush()
    })
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Quote a CSV cell when it contains a separator or quote.
pub fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
