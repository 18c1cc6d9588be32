//! Numerical counterparts of the estimates behind the convection problem:
//! the trilinear form and its skew identity, discrete Poincaré constants,
//! the maximum principle, the energy bounds and the smallness ratios.

mod checks;
mod poincare;
mod random;
mod trilinear;

use serde::{Deserialize, Serialize};

pub use checks::{
    check_apriori, check_apriori_norms, check_max_principle, smallness_report, Ratio, APRIORI_TOLERANCE,
    SmallnessReport,
};
pub use poincare::{poincare_constant, smallest_eigenvalue, PoincareMode};
pub use random::{random_interior_field, random_smooth_field, Vanish};
pub use trilinear::{trilinear_a, trilinear_a_skew};

use crate::elliptic::LinearSettings;
use crate::error::Result;
use crate::grid::{BoundaryPartition, Grid};

/// Outcome of one inequality check `lhs ≤ rhs·(1 + tolerance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub satisfied: bool,
    /// False when the check's precondition does not hold; such results are
    /// neither passes nor failures.
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    pub fn compare(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            lhs,
            rhs,
            tolerance,
            satisfied: lhs <= rhs * (1.0 + tolerance),
            applicable: true,
            note: None,
        }
    }

    pub fn inapplicable(name: impl Into<String>, note: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            tolerance: 0.0,
            satisfied: false,
            applicable: false,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Passed, or not applicable.
    pub fn ok(&self) -> bool {
        !self.applicable || self.satisfied
    }
}

/// Poincaré constants and domain measure used by every estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateContext {
    /// Fields vanishing on all of Γ.
    pub c_dirichlet: f64,
    /// Fields vanishing on Γ₁ only.
    pub c_mixed: f64,
    /// `max(c_dirichlet, c_mixed)`, used in all checks.
    pub c: f64,
    pub mes_omega: f64,
}

impl EstimateContext {
    pub fn compute(grid: &Grid, bp: &BoundaryPartition, settings: LinearSettings) -> Result<Self> {
        let c_dirichlet = poincare_constant(grid, bp, PoincareMode::Dirichlet, settings)?;
        let c_mixed = poincare_constant(grid, bp, PoincareMode::Mixed, settings)?;
        Ok(EstimateContext::from_constants(c_dirichlet, c_mixed, grid.area()))
    }

    pub fn from_constants(c_dirichlet: f64, c_mixed: f64, mes_omega: f64) -> Self {
        EstimateContext {
            c_dirichlet,
            c_mixed,
            c: c_dirichlet.max(c_mixed),
            mes_omega,
        }
    }
}
