use serde::{Deserialize, Serialize};

use crate::elliptic::{assemble, AdvectionScheme, BoundaryConditions, EllipticProblem, LinearSettings, LinearSolver};
use crate::error::{Error, Result};
use crate::grid::{BoundaryPartition, Grid, ScalarField};

const EIGEN_TOL: f64 = 1e-8;
const EIGEN_MAX_ITER: usize = 2000;
/// Loosest linear tolerance used inside the iteration. Far tighter than the
/// eigenvalue needs, and above the round-off floor of CG on large grids.
const EIGEN_SOLVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoincareMode {
    /// Zero on all of Γ.
    Dirichlet,
    /// Zero on Γ₁, natural condition on Γ₂.
    Mixed,
}

/// Smallest eigenvalue of the discrete Laplacian for `mode`, by inverse
/// power iteration on `A y = W x` with `W` the quadrature row weights.
pub fn smallest_eigenvalue(
    grid: &Grid,
    bp: &BoundaryPartition,
    mode: PoincareMode,
    settings: LinearSettings,
) -> Result<f64> {
    let conditions = match mode {
        PoincareMode::Dirichlet => BoundaryConditions::dirichlet(*grid),
        PoincareMode::Mixed => BoundaryConditions::mixed(*grid, bp),
    };
    let zero = ScalarField::zeros(*grid);
    let system = assemble(
        &EllipticProblem {
            diffusion: 1.0,
            velocity: None,
            source: &zero,
            dirichlet: &zero,
            conditions: &conditions,
            scheme: AdvectionScheme::Upwind,
        },
        grid,
    )?;
    if system.unknowns() == 0 {
        return Err(Error::InvalidParameter("grid has no free nodes".into()));
    }
    let settings = LinearSettings {
        tol: settings.tol.max(EIGEN_SOLVE_TOL),
        ..settings
    };
    let solver = LinearSolver::new(&system, settings)?;
    let w = system.row_weights();
    let wdot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum::<f64>();

    // A positive start vector overlaps the positive principal mode.
    let mut x = vec![1.0; system.unknowns()];
    let mut estimate = f64::NAN;
    for _ in 0..EIGEN_MAX_ITER {
        let rhs: Vec<f64> = x.iter().zip(w).map(|(x, w)| x * w).collect();
        let y = solver.solve_vector(&rhs, Some(&x))?;
        let next = wdot(&y, &x) / wdot(&y, &y);
        let norm = wdot(&y, &y).sqrt();
        x = y.into_iter().map(|v| v / norm).collect();
        if (next - estimate).abs() <= EIGEN_TOL * next.abs() {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::EigenNonConvergence {
        iterations: EIGEN_MAX_ITER,
        estimate,
    })
}

/// `C = λ₁^{-1/2}`, the constant in `‖u‖₂ ≤ C‖∇u‖₂`.
pub fn poincare_constant(
    grid: &Grid,
    bp: &BoundaryPartition,
    mode: PoincareMode,
    settings: LinearSettings,
) -> Result<f64> {
    Ok(1.0 / smallest_eigenvalue(grid, bp, mode, settings)?.sqrt())
}
